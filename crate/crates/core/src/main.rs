use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use addk::error::{exit_code, Error, Result};
use addk::imaging::{DEFAULT_DISPLAY_SIZE, DEFAULT_OPACITY};
use addk::kernel::DEFAULT_ALPHA;
use addk::pipeline::{
    alpha_sweep, run_pipeline, single_cam, ExpertExport, Manifest, PipelineConfig,
};

/// Localize the regions where one binary expert is more confident than another.
#[derive(Parser, Debug)]
#[command(name = "localize", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Both CAM overlays, the kernel overlay and the kernel heatmap.
    Run(PairArgs),
    /// Kernel heatmaps over several amplifications plus a comparison grid.
    Sweep {
        #[command(flatten)]
        pair: PairArgs,
        /// Comma-separated amplifications, e.g. 5,15,50.
        #[arg(long, value_delimiter = ',')]
        alphas: Vec<f64>,
    },
    /// Overlay of a single expert's CAM.
    Cam(SingleArgs),
}

#[derive(Args, Debug)]
struct PairArgs {
    /// Activations [C, H, W] of the class-of-interest expert.
    #[arg(long)]
    interest_acts: Option<PathBuf>,
    /// Weights [C] or [K, C] of the class-of-interest expert.
    #[arg(long)]
    interest_weights: Option<PathBuf>,
    /// Precomputed [H, W] CAM of the class-of-interest expert.
    #[arg(long)]
    interest_cam: Option<PathBuf>,
    #[arg(long)]
    interest_class: Option<usize>,
    #[arg(long)]
    interest_id: Option<String>,
    /// Activations [C, H, W] of the competing expert.
    #[arg(long)]
    other_acts: Option<PathBuf>,
    #[arg(long)]
    other_weights: Option<PathBuf>,
    #[arg(long)]
    other_cam: Option<PathBuf>,
    #[arg(long)]
    other_class: Option<usize>,
    #[arg(long)]
    other_id: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
    /// Amplification (default 5).
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args, Debug)]
struct SingleArgs {
    #[arg(long)]
    acts: Option<PathBuf>,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    cam: Option<PathBuf>,
    #[arg(long)]
    class: Option<usize>,
    #[arg(long)]
    id: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Base image. `run` accepts several and processes them concurrently.
    #[arg(long)]
    image: Vec<PathBuf>,
    /// Overlay opacity in [0, 1] (default 0.5).
    #[arg(long)]
    opacity: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Display size as WIDTHxHEIGHT (default 224x224).
    #[arg(long)]
    size: Option<Size>,
    /// key=value file mirroring the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
struct Size(u32, u32);

impl FromStr for Size {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
        let parse = |v: &str| v.trim().parse::<u32>().map_err(|e| format!("{v:?}: {e}"));
        Ok(Size(parse(w)?, parse(h)?))
    }
}

/// Flag values with config-file fallback.
struct Settings {
    file: Manifest,
}

impl Settings {
    fn load(path: Option<&PathBuf>) -> Result<Self> {
        let file = match path {
            Some(p) => Manifest::read(p)?,
            None => Manifest::new(),
        };
        Ok(Settings { file })
    }

    fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.file
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Error::Parameter(format!("config key {key}: {e}")))
            })
            .transpose()
    }

    fn require<T>(&self, flag: Option<T>, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.pick(flag, key)?
            .ok_or_else(|| Error::Parameter(format!("--{key} is required")))
    }

    fn images(&self, flags: &[PathBuf]) -> Result<Vec<PathBuf>> {
        if !flags.is_empty() {
            return Ok(flags.to_vec());
        }
        Ok(vec![self.require(None::<PathBuf>, "image")?])
    }

    #[allow(clippy::too_many_arguments)]
    fn expert(
        &self,
        prefix: &str,
        acts: Option<PathBuf>,
        weights: Option<PathBuf>,
        cam: Option<PathBuf>,
        class: Option<usize>,
        id: Option<String>,
        default_id: &str,
    ) -> Result<ExpertExport> {
        let key = |k: &str| {
            if prefix.is_empty() {
                k.to_string()
            } else {
                format!("{prefix}-{k}")
            }
        };
        let id = self
            .pick(id, &key("id"))?
            .unwrap_or_else(|| default_id.to_string());
        let acts = self.pick(acts, &key("acts"))?;
        let weights = self.pick(weights, &key("weights"))?;
        let cam = self.pick(cam, &key("cam"))?;
        let expert = match (acts, weights, cam) {
            (Some(a), Some(w), None) => ExpertExport::from_export(a, w, id),
            (None, None, Some(c)) => ExpertExport::from_cam(c, id),
            _ => {
                return Err(Error::Parameter(format!(
                    "give either --{} with --{}, or --{}",
                    key("acts"),
                    key("weights"),
                    key("cam")
                )))
            }
        };
        Ok(match self.pick(class, &key("class"))? {
            Some(c) => expert.with_class(c),
            None => expert,
        })
    }

    fn common(&self, args: &CommonArgs) -> Result<(f64, (u32, u32), PathBuf)> {
        let opacity = self
            .pick(args.opacity, "opacity")?
            .unwrap_or(DEFAULT_OPACITY);
        let size = self
            .pick(args.size, "size")?
            .map_or(DEFAULT_DISPLAY_SIZE, |Size(w, h)| (w, h));
        let out = self.require(args.out.clone(), "out")?;
        Ok((opacity, size, out))
    }
}

fn pair_configs(args: PairArgs) -> Result<Vec<PipelineConfig>> {
    let settings = Settings::load(args.common.config.as_ref())?;
    let interest = settings.expert(
        "interest",
        args.interest_acts,
        args.interest_weights,
        args.interest_cam,
        args.interest_class,
        args.interest_id,
        "N1",
    )?;
    let other = settings.expert(
        "other",
        args.other_acts,
        args.other_weights,
        args.other_cam,
        args.other_class,
        args.other_id,
        "N2",
    )?;
    let alpha = settings.pick(args.alpha, "alpha")?.unwrap_or(DEFAULT_ALPHA);
    let (opacity, size, out) = settings.common(&args.common)?;
    let images = settings.images(&args.common.image)?;
    Ok(images
        .into_iter()
        .map(|image| PipelineConfig {
            expert_of_interest: interest.clone(),
            other_expert: other.clone(),
            image,
            alpha,
            opacity,
            output_dir: out.clone(),
            display_size: size,
        })
        .collect())
}

fn parse_alphas(flags: Vec<f64>, settings_path: Option<&PathBuf>) -> Result<Vec<f64>> {
    if !flags.is_empty() {
        return Ok(flags);
    }
    let settings = Settings::load(settings_path)?;
    let list: String = settings.require(None, "alphas")?;
    list.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|e| Error::Parameter(format!("alphas: {v:?}: {e}")))
        })
        .collect()
}

fn execute(command: Command) -> Result<Vec<Manifest>> {
    match command {
        Command::Run(args) => {
            let configs = pair_configs(args)?;
            let mut stems: Vec<String> = configs.iter().map(PipelineConfig::stem).collect();
            stems.sort();
            if stems.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Parameter("input images share a file stem".into()));
            }
            // each image writes to its own stem-prefixed paths
            std::thread::scope(|s| {
                let handles: Vec<_> = configs
                    .iter()
                    .map(|c| s.spawn(move || run_pipeline(c)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("pipeline thread panicked"))
                    .collect()
            })
        }
        Command::Sweep { pair, alphas } => {
            let alphas = parse_alphas(alphas, pair.common.config.as_ref())?;
            let configs = pair_configs(pair)?;
            if configs.len() != 1 {
                return Err(Error::Parameter("sweep takes exactly one --image".into()));
            }
            Ok(vec![alpha_sweep(&configs[0], &alphas)?])
        }
        Command::Cam(args) => {
            let settings = Settings::load(args.common.config.as_ref())?;
            let expert = settings.expert(
                "",
                args.acts,
                args.weights,
                args.cam,
                args.class,
                args.id,
                "N1",
            )?;
            let (opacity, size, out) = settings.common(&args.common)?;
            let images = settings.images(&args.common.image)?;
            if images.len() != 1 {
                return Err(Error::Parameter("cam takes exactly one --image".into()));
            }
            Ok(vec![single_cam(&expert, &images[0], opacity, size, &out)?])
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(manifests) => {
            for m in manifests {
                print!("{m}");
            }
            ExitCode::from(exit_code::SUCCESS as u8)
        }
        Err(e) => {
            eprintln!("localize: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
