//! Independent reference implementations and random generators shared by
//! the integration tests. Nothing here calls into the production numerics.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}

/// `out[i][j] = sum_k w[k] * f[k][i][j]`, summed per cell in f64.
pub fn naive_cam(features: &[f32], weights: &[f32], h: usize, w: usize) -> Vec<f64> {
    let c = weights.len();
    assert_eq!(features.len(), c * h * w);
    let mut out = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let mut s = 0.0f64;
            for k in 0..c {
                s += weights[k] as f64 * features[(k * h + i) * w + j] as f64;
            }
            out[i * w + j] = s;
        }
    }
    out
}

/// Half-pixel bilinear resampling written as a tent-filter sum over every
/// source cell: weight `max(0, 1 - |pos - k|)` per axis at the clamped
/// source coordinate.
pub fn tent_resample(src: &[f64], h: usize, w: usize, th: usize, tw: usize) -> Vec<f64> {
    let coord = |i: usize, n: usize, t: usize| -> f64 {
        let p = (i as f64 + 0.5) * n as f64 / t as f64 - 0.5;
        p.max(0.0).min((n - 1) as f64)
    };
    let tent = |d: f64| (1.0 - d.abs()).max(0.0);
    let mut out = Vec::with_capacity(th * tw);
    for y in 0..th {
        let py = coord(y, h, th);
        for x in 0..tw {
            let px = coord(x, w, tw);
            let mut acc = 0.0;
            for r in 0..h {
                let wy = tent(py - r as f64);
                if wy == 0.0 {
                    continue;
                }
                for c in 0..w {
                    acc += wy * tent(px - c as f64) * src[r * w + c];
                }
            }
            out.push(acc);
        }
    }
    out
}

/// Direct evaluation of `exp(alpha * (x/max x - x'/max x'))` in f64.
pub fn direct_kernel(x: &[f64], xp: &[f64], alpha: f64) -> Vec<f64> {
    let mx = x.iter().cloned().fold(f64::MIN, f64::max);
    let mxp = xp.iter().cloned().fold(f64::MIN, f64::max);
    x.iter()
        .zip(xp)
        .map(|(a, b)| (alpha * (a / mx - b / mxp)).exp())
        .collect()
}

/// Random map values in [0, 1) with a guaranteed positive maximum.
pub fn random_map(rng: &mut impl Rng, len: usize) -> Vec<f32> {
    let mut v: Vec<f32> = (0..len).map(|_| rng.gen::<f32>()).collect();
    let i = rng.gen_range(0..len);
    v[i] += 0.1;
    v
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}
