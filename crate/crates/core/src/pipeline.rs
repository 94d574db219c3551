//! End-to-end localization from files.
//!
//! Each expert contributes either an activation stack plus a weight file, or
//! a precomputed CAM. The class-of-interest expert is always the left
//! operand of the kernel.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::cam::{compute_cam, normalize_by_max, Cam};
use crate::error::{Error, Result};
use crate::imaging::{
    colorize, composite, hconcat, load_image, resize_rgb, save_png, to_heatmap, upsample_bilinear,
    RgbImage, DEFAULT_DISPLAY_SIZE, DEFAULT_OPACITY,
};
use crate::kernel::{addk, AddkResult, DEFAULT_ALPHA};
use crate::npy::load_tensor;
use crate::tensor::{ClassWeights, FeatureStack};

/// Level used for the concentration figures recorded in manifests.
pub const CONCENTRATION_LEVEL: f32 = 0.5;

/// Where an expert's activation map comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum CamSource {
    /// `[C, H, W]` activations and a `[C]` weight vector or `[K, C]` matrix.
    Export {
        activations: PathBuf,
        weights: PathBuf,
    },
    /// A ready `[H, W]` map.
    Precomputed(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpertExport {
    pub source: CamSource,
    /// Required when the weight file holds several class rows.
    pub class_index: Option<usize>,
    pub model_id: String,
}

impl ExpertExport {
    pub fn from_export(
        activations: impl Into<PathBuf>,
        weights: impl Into<PathBuf>,
        model_id: impl Into<String>,
    ) -> Self {
        ExpertExport {
            source: CamSource::Export {
                activations: activations.into(),
                weights: weights.into(),
            },
            class_index: None,
            model_id: model_id.into(),
        }
    }

    pub fn from_cam(path: impl Into<PathBuf>, model_id: impl Into<String>) -> Self {
        ExpertExport {
            source: CamSource::Precomputed(path.into()),
            class_index: None,
            model_id: model_id.into(),
        }
    }

    pub fn with_class(mut self, class_index: usize) -> Self {
        self.class_index = Some(class_index);
        self
    }

    /// Load inputs and produce this expert's CAM.
    pub fn load_cam(&self) -> Result<Cam<f32>> {
        match &self.source {
            CamSource::Precomputed(path) => {
                let map = load_tensor(path)?;
                Cam::new(map, self.class_index.unwrap_or(0), self.model_id.clone())
            }
            CamSource::Export {
                activations,
                weights,
            } => {
                let features = FeatureStack::new(load_tensor(activations)?)?;
                let w = load_tensor(weights)?;
                let weights = match w.rank() {
                    1 => ClassWeights::new(w, self.class_index.unwrap_or(0))?,
                    2 => {
                        let index = self.class_index.ok_or_else(|| {
                            Error::Parameter(format!(
                                "{} holds {} weight rows; a class index is required",
                                weights.display(),
                                w.shape()[0]
                            ))
                        })?;
                        ClassWeights::from_matrix_row(&w, index)?
                    }
                    _ => {
                        return Err(Error::Dimension(format!(
                            "weights must be [C] or [K, C], got {:?}",
                            w.shape()
                        )))
                    }
                };
                compute_cam(&features, &weights, self.model_id.clone())
            }
        }
    }

    fn record(&self, prefix: &str, manifest: &mut Manifest) {
        match &self.source {
            CamSource::Export {
                activations,
                weights,
            } => {
                manifest.push(format!("{prefix}.activations"), activations.display());
                manifest.push(format!("{prefix}.weights"), weights.display());
            }
            CamSource::Precomputed(path) => {
                manifest.push(format!("{prefix}.cam"), path.display());
            }
        }
        let class = self
            .class_index
            .map_or_else(|| "0 (default)".to_string(), |c| c.to_string());
        manifest.push(format!("{prefix}.class_index"), class);
        manifest.push(format!("{prefix}.model_id"), &self.model_id);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub expert_of_interest: ExpertExport,
    pub other_expert: ExpertExport,
    pub image: PathBuf,
    pub alpha: f64,
    pub opacity: f64,
    pub output_dir: PathBuf,
    /// (width, height) of every emitted image.
    pub display_size: (u32, u32),
}

impl PipelineConfig {
    pub fn new(
        expert_of_interest: ExpertExport,
        other_expert: ExpertExport,
        image: impl Into<PathBuf>,
        output_dir: impl Into<PathBuf>,
    ) -> Self {
        PipelineConfig {
            expert_of_interest,
            other_expert,
            image: image.into(),
            alpha: DEFAULT_ALPHA,
            opacity: DEFAULT_OPACITY,
            output_dir: output_dir.into(),
            display_size: DEFAULT_DISPLAY_SIZE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_alpha(self.alpha)?;
        validate_opacity(self.opacity)?;
        validate_size(self.display_size)
    }

    /// File stem shared by every output of this run.
    pub fn stem(&self) -> String {
        stem_of(&self.image)
    }
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() && (alpha as f32).is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "alpha must be positive and finite, got {alpha}"
        )))
    }
}

fn validate_opacity(opacity: f64) -> Result<()> {
    if (0.0..=1.0).contains(&opacity) {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "opacity must be in [0, 1], got {opacity}"
        )))
    }
}

fn validate_size((w, h): (u32, u32)) -> Result<()> {
    if w == 0 || h == 0 {
        return Err(Error::Parameter(format!(
            "display size {w}x{h} must be positive"
        )));
    }
    Ok(())
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".to_string())
}

/// Ordered `key=value` records.
///
/// Used both for run manifests and for the optional config file the CLI
/// reads. One record per line; blank lines and `#` comments are skipped on
/// parse.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    /// Last value recorded under `key`.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Manifest::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Parameter(format!("line {}: expected key=value, got {line:?}", n + 1))
            })?;
            m.push(k.trim(), v.trim());
        }
        Ok(m)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Manifest::parse(&text).map_err(|e| e.in_stage(format!("config {}", path.display())))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_string()).map_err(|e| Error::io(path, e))
    }

    /// Record-wise view keyed by name; later duplicates win.
    pub fn to_map(&self) -> BTreeMap<&str, &str> {
        self.entries
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect()
    }
}

impl fmt::Display for Manifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

fn load_expert(expert: &ExpertExport, role: &str) -> Result<Cam<f32>> {
    expert
        .load_cam()
        .map_err(|e| e.in_stage(format!("load {role} expert {}", expert.model_id)))
}

fn load_base(config: &PipelineConfig) -> Result<RgbImage> {
    let (w, h) = config.display_size;
    load_image(&config.image)
        .and_then(|img| resize_rgb(&img, w, h))
        .map_err(|e| e.in_stage("load image"))
}

/// Positive-maximum guard with the pipeline's diagnostic.
fn require_positive(cam: &Cam<f32>) -> Result<()> {
    normalize_by_max(cam).map(|_| ()).map_err(|e| match e {
        Error::NonPositiveMax { max } => Error::NoPositiveActivation {
            model_id: cam.model_id().to_string(),
            max,
        }
        .in_stage("kernel"),
        e => e.in_stage("kernel"),
    })
}

fn run_kernel(interest: &Cam<f32>, other: &Cam<f32>, alpha: f64) -> Result<AddkResult<f32>> {
    require_positive(interest)?;
    require_positive(other)?;
    addk(interest, other, alpha as f32).map_err(|e| e.in_stage("kernel"))
}

/// Upsample to display size, min-max normalize, and color.
fn render_heat(map: &crate::tensor::Tensor<f32>, (w, h): (u32, u32)) -> Result<RgbImage> {
    let up = upsample_bilinear(map, h as usize, w as usize)?;
    Ok(colorize(&to_heatmap(&up)?))
}

fn write_png(image: &RgbImage, dir: &Path, name: &str) -> Result<String> {
    save_png(image, dir.join(name)).map_err(|e| e.in_stage("write outputs"))?;
    Ok(name.to_string())
}

fn prepare_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e).in_stage("write outputs"))
}

fn common_manifest(command: &str, config: &PipelineConfig) -> Manifest {
    let mut m = Manifest::new();
    m.push("command", command);
    m.push("image", config.image.display());
    config.expert_of_interest.record("interest", &mut m);
    config.other_expert.record("other", &mut m);
    m.push("opacity", config.opacity);
    m.push(
        "display_size",
        format!("{}x{}", config.display_size.0, config.display_size.1),
    );
    m
}

/// Both overlays, the kernel overlay, and the bare kernel heatmap.
///
/// Writes `<stem>_cam1.png`, `<stem>_cam2.png`, `<stem>_addk.png`,
/// `<stem>_addk_raw.png` and `<stem>_manifest.txt` into the output directory.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Manifest> {
    config.validate()?;
    let cam1 = load_expert(&config.expert_of_interest, "interest")?;
    let cam2 = load_expert(&config.other_expert, "other")?;
    let base = load_base(config)?;
    let result = run_kernel(&cam1, &cam2, config.alpha)?;

    let size = config.display_size;
    let render =
        |map| -> Result<RgbImage> { render_heat(map, size).map_err(|e| e.in_stage("render")) };
    let overlay =
        |heat: &RgbImage| composite(&base, heat, config.opacity).map_err(|e| e.in_stage("render"));
    let cam1_heat = render(cam1.map())?;
    let cam2_heat = render(cam2.map())?;
    let addk_heat = render(result.normalized())?;

    prepare_output_dir(&config.output_dir)?;
    let dir = config.output_dir.as_path();
    let stem = config.stem();

    let mut m = common_manifest("run", config);
    m.push("alpha", config.alpha);
    m.push(
        format!("concentration@{CONCENTRATION_LEVEL}"),
        result.concentration(CONCENTRATION_LEVEL)?,
    );
    m.push("raw_representable", result.raw().is_some());
    m.push(
        "output.cam1",
        write_png(&overlay(&cam1_heat)?, dir, &format!("{stem}_cam1.png"))?,
    );
    m.push(
        "output.cam2",
        write_png(&overlay(&cam2_heat)?, dir, &format!("{stem}_cam2.png"))?,
    );
    m.push(
        "output.addk",
        write_png(&overlay(&addk_heat)?, dir, &format!("{stem}_addk.png"))?,
    );
    m.push(
        "output.addk_raw",
        write_png(&addk_heat, dir, &format!("{stem}_addk_raw.png"))?,
    );
    m.write(dir.join(format!("{stem}_manifest.txt")))
        .map_err(|e| e.in_stage("write outputs"))?;
    Ok(m)
}

/// One kernel heatmap per amplification plus a side-by-side grid.
///
/// Writes `<stem>_sweep_<i>.png` for the i-th alpha, `<stem>_sweep_grid.png`
/// and `<stem>_sweep_manifest.txt`. The manifest records the concentration
/// at level 0.5 for each alpha. `config.alpha` is ignored.
pub fn alpha_sweep(config: &PipelineConfig, alphas: &[f64]) -> Result<Manifest> {
    if alphas.is_empty() {
        return Err(Error::Parameter(
            "alpha sweep needs at least one alpha".into(),
        ));
    }
    for &a in alphas {
        validate_alpha(a)?;
    }
    validate_opacity(config.opacity)?;
    validate_size(config.display_size)?;

    let cam1 = load_expert(&config.expert_of_interest, "interest")?;
    let cam2 = load_expert(&config.other_expert, "other")?;
    // the sweep emits bare heatmaps, but the image still names the outputs
    // and must be readable
    load_base(config)?;

    let mut tiles = Vec::with_capacity(alphas.len());
    let mut counts = Vec::with_capacity(alphas.len());
    for &a in alphas {
        let result = run_kernel(&cam1, &cam2, a)?;
        counts.push(result.concentration(CONCENTRATION_LEVEL)?);
        tiles.push(
            render_heat(result.normalized(), config.display_size)
                .map_err(|e| e.in_stage("render"))?,
        );
    }
    let grid = hconcat(&tiles).map_err(|e| e.in_stage("render"))?;

    prepare_output_dir(&config.output_dir)?;
    let dir = config.output_dir.as_path();
    let stem = config.stem();
    let mut m = common_manifest("sweep", config);
    m.push("concentration_level", CONCENTRATION_LEVEL);
    for (i, ((a, count), tile)) in alphas.iter().zip(&counts).zip(&tiles).enumerate() {
        m.push(format!("alpha[{i}]"), a);
        m.push(format!("concentration[{i}]"), count);
        m.push(
            format!("output.heatmap[{i}]"),
            write_png(tile, dir, &format!("{stem}_sweep_{i}.png"))?,
        );
    }
    m.push(
        "output.grid",
        write_png(&grid, dir, &format!("{stem}_sweep_grid.png"))?,
    );
    m.write(dir.join(format!("{stem}_sweep_manifest.txt")))
        .map_err(|e| e.in_stage("write outputs"))?;
    Ok(m)
}

/// Overlay of a single expert's CAM, `<stem>_cam.png`.
pub fn single_cam(
    expert: &ExpertExport,
    image: &Path,
    opacity: f64,
    display_size: (u32, u32),
    output_dir: &Path,
) -> Result<Manifest> {
    validate_opacity(opacity)?;
    validate_size(display_size)?;
    let cam = load_expert(expert, "single")?;
    let (w, h) = display_size;
    let base = load_image(image)
        .and_then(|img| resize_rgb(&img, w, h))
        .map_err(|e| e.in_stage("load image"))?;
    let heat = render_heat(cam.map(), display_size).map_err(|e| e.in_stage("render"))?;
    let out = composite(&base, &heat, opacity).map_err(|e| e.in_stage("render"))?;

    prepare_output_dir(output_dir)?;
    let stem = stem_of(image);
    let mut m = Manifest::new();
    m.push("command", "cam");
    m.push("image", image.display());
    expert.record("expert", &mut m);
    m.push("opacity", opacity);
    m.push("display_size", format!("{w}x{h}"));
    m.push(
        "output.cam",
        write_png(&out, output_dir, &format!("{stem}_cam.png"))?,
    );
    m.write(output_dir.join(format!("{stem}_cam_manifest.txt")))
        .map_err(|e| e.in_stage("write outputs"))?;
    Ok(m)
}
