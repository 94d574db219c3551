mod common;

use addk::imaging::{colorize, save_png, Heatmap};
use addk::Tensor;

/// Set `ADDK_BLESS=1` to regenerate the reference image.
#[test]
fn colorized_heatmap_matches_reference_png() {
    let values: Vec<f32> = (0..16).map(|i| i as f32 / 15.0).collect();
    let heat = Heatmap::new(Tensor::new(vec![4, 4], values).unwrap()).unwrap();
    let img = colorize(&heat);
    assert_eq!(img.pixel(0, 0), [0, 0, 128]);
    assert_eq!(img.pixel(3, 3), [128, 0, 0]);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("jet.png");
    save_png(&img, &out).unwrap();
    let produced = std::fs::read(&out).unwrap();

    let reference = common::fixture("jet_4x4.png");
    if std::env::var_os("ADDK_BLESS").is_some() {
        std::fs::write(&reference, &produced).unwrap();
    }
    assert_eq!(produced, std::fs::read(&reference).unwrap());
}
