mod common;

use std::path::Path;
use std::process::{Command, Output};

use addk::imaging::load_image;
use addk::npy::save_tensor;
use addk::pipeline::{run_pipeline, ExpertExport, Manifest, PipelineConfig};
use addk::Tensor;
use rand::Rng;

fn localize(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_localize"))
        .args(args)
        .output()
        .expect("spawn localize")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A synthetic export pair in the layout a ResNet-152 hook yields.
fn write_export(dir: &Path, name: &str, seed: u64) {
    let mut rng = common::rng(seed);
    let acts: Vec<f32> = (0..2048 * 49)
        .map(|_| rng.gen::<f32>().max(0.0) * 2.0)
        .collect();
    let weights: Vec<f32> = (0..2 * 2048).map(|_| rng.gen_range(-0.05..0.1)).collect();
    save_tensor(
        &Tensor::new(vec![2048, 7, 7], acts).unwrap(),
        dir.join(format!("{name}_acts.npy")),
    )
    .unwrap();
    save_tensor(
        &Tensor::new(vec![2, 2048], weights).unwrap(),
        dir.join(format!("{name}_w.npy")),
    )
    .unwrap();
}

#[test]
fn export_pair_produces_four_display_sized_images() {
    let dir = tempfile::tempdir().unwrap();
    write_export(dir.path(), "covid", 1);
    write_export(dir.path(), "pneu", 2);
    let image = common::fixture("scene_224.png");
    let out = dir.path().join("out");

    let interest = ExpertExport::from_export(
        dir.path().join("covid_acts.npy"),
        dir.path().join("covid_w.npy"),
        "N1",
    )
    .with_class(1);
    let other = ExpertExport::from_export(
        dir.path().join("pneu_acts.npy"),
        dir.path().join("pneu_w.npy"),
        "N2",
    )
    .with_class(1);
    let config = PipelineConfig::new(interest.clone(), other.clone(), &image, &out);
    let m = run_pipeline(&config).unwrap();
    for key in [
        "output.cam1",
        "output.cam2",
        "output.addk",
        "output.addk_raw",
    ] {
        let img = load_image(out.join(m.get(key).unwrap())).unwrap();
        assert_eq!((img.width(), img.height()), (224, 224), "{key}");
    }
    assert_eq!(m.get("interest.class_index"), Some("1"));

    let swapped_out = dir.path().join("swapped");
    let swapped = PipelineConfig::new(other, interest, &image, &swapped_out);
    run_pipeline(&swapped).unwrap();
    let a = std::fs::read(out.join("scene_224_addk_raw.png")).unwrap();
    let b = std::fs::read(swapped_out.join("scene_224_addk_raw.png")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn missing_weights_file_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    write_export(dir.path(), "a", 3);
    let missing = dir.path().join("nope.npy");
    let out = localize(&[
        "run",
        "--interest-acts",
        s(&dir.path().join("a_acts.npy")),
        "--interest-weights",
        s(&missing),
        "--interest-class",
        "1",
        "--other-cam",
        s(&common::fixture("worked_xprime.npy")),
        "--image",
        s(&common::fixture("scene_224.png")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("load interest expert N1") && err.contains("nope.npy"),
        "{err}"
    );
}

#[test]
fn config_file_fills_missing_flags_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        format!(
            "# fixture run\ninterest-cam={}\nother-cam={}\nimage={}\nout={}\nalpha=2\nsize=32x16\n",
            common::fixture("worked_x.npy").display(),
            common::fixture("worked_xprime.npy").display(),
            common::fixture("scene_224.png").display(),
            dir.path().join("out").display(),
        ),
    )
    .unwrap();
    let out = localize(&["run", "--config", s(&cfg), "--alpha", "15"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let m = Manifest::read(dir.path().join("out/scene_224_manifest.txt")).unwrap();
    assert_eq!(m.get("alpha"), Some("15"));
    assert_eq!(m.get("display_size"), Some("32x16"));
    let img = load_image(dir.path().join("out/scene_224_addk.png")).unwrap();
    assert_eq!((img.width(), img.height()), (32, 16));
}

#[test]
fn sweep_and_cam_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = localize(&[
        "sweep",
        "--interest-cam",
        s(&common::fixture("worked_x.npy")),
        "--other-cam",
        s(&common::fixture("worked_xprime.npy")),
        "--image",
        s(&common::fixture("gray_224.png")),
        "--alphas",
        "15,50",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let m = Manifest::read(dir.path().join("gray_224_sweep_manifest.txt")).unwrap();
    let c15: usize = m.get("concentration[0]").unwrap().parse().unwrap();
    let c50: usize = m.get("concentration[1]").unwrap().parse().unwrap();
    assert!(c50 <= c15);
    let grid = load_image(dir.path().join("gray_224_sweep_grid.png")).unwrap();
    assert_eq!((grid.width(), grid.height()), (448, 224));

    // a single alpha makes the grid identical to the lone heatmap
    let single = dir.path().join("single");
    let out = localize(&[
        "sweep",
        "--interest-cam",
        s(&common::fixture("worked_x.npy")),
        "--other-cam",
        s(&common::fixture("worked_xprime.npy")),
        "--image",
        s(&common::fixture("gray_224.png")),
        "--alphas",
        "5",
        "--out",
        s(&single),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        load_image(single.join("gray_224_sweep_grid.png")).unwrap(),
        load_image(single.join("gray_224_sweep_0.png")).unwrap()
    );

    let out = localize(&[
        "cam",
        "--cam",
        s(&common::fixture("worked_x.npy")),
        "--image",
        s(&common::fixture("gray_224.png")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let img = load_image(dir.path().join("gray_224_cam.png")).unwrap();
    assert_eq!((img.width(), img.height()), (224, 224));
}

#[test]
fn batch_run_processes_each_image() {
    let dir = tempfile::tempdir().unwrap();
    let out = localize(&[
        "run",
        "--interest-cam",
        s(&common::fixture("worked_x.npy")),
        "--other-cam",
        s(&common::fixture("worked_xprime.npy")),
        "--image",
        s(&common::fixture("scene_224.png")),
        "--image",
        s(&common::fixture("gray_224.png")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("scene_224_addk.png").exists());
    assert!(dir.path().join("gray_224_addk.png").exists());
}

#[test]
fn input_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let (x, xp, scene) = (
        common::fixture("worked_x.npy"),
        common::fixture("worked_xprime.npy"),
        common::fixture("scene_224.png"),
    );
    let base = [
        "run",
        "--interest-cam",
        s(&x),
        "--image",
        s(&scene),
        "--out",
        s(dir.path()),
    ];
    // no competing expert
    assert_eq!(localize(&base).status.code(), Some(2));
    let mut args = base.to_vec();
    args.extend(["--other-cam", s(&xp), "--opacity", "3"]);
    assert_eq!(localize(&args).status.code(), Some(2));
    // a [C, H, W] file where a map is expected
    let stack = dir.path().join("stack.npy");
    save_tensor(&Tensor::<f32>::zeros(vec![2, 2, 2]).unwrap(), &stack).unwrap();
    let mut args = base.to_vec();
    args.extend(["--other-cam", s(&stack)]);
    assert_eq!(localize(&args).status.code(), Some(2));
}
