#![allow(dead_code)]

use std::path::PathBuf;

use freqcrystal::codec::load_image;
use freqcrystal::{Grid, Image};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde_json::Value;

pub fn asset(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets").join(name)
}

pub fn load(name: &str) -> Image {
    load_image(asset(name)).unwrap()
}

pub fn oracles() -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/oracles.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_grid(rng: &mut ChaCha8Rng, w: usize, h: usize, max: f64) -> Grid {
    Grid::from_fn(w, h, |_, _| rng.random_range(0.0..max))
}

pub fn random_8bit(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Grid {
    Grid::from_fn(w, h, |_, _| rng.random_range(0..=255u32) as f64)
}

/// Direct O(N²) DFT, uncentered, no normalization.
pub fn naive_dft(g: &Grid) -> Vec<Complex64> {
    let (w, h) = g.dims();
    let mut out = Vec::with_capacity(w * h);
    for ky in 0..h {
        for kx in 0..w {
            let mut acc = Complex64::new(0.0, 0.0);
            for y in 0..h {
                for x in 0..w {
                    let t = -2.0 * std::f64::consts::PI * ((kx * x) as f64 / w as f64 + (ky * y) as f64 / h as f64);
                    acc += Complex64::from_polar(g.get(x, y), t);
                }
            }
            out.push(acc);
        }
    }
    out
}

pub fn brute_mse(a: &Grid, b: &Grid) -> f64 {
    let n = a.as_slice().len() as f64;
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n
}

pub fn brute_psnr(a: &Grid, b: &Grid, max: f64) -> f64 {
    10.0 * (max * max / brute_mse(a, b)).log10()
}

/// Sliding 8×8 windows, stride 1, population statistics. Windows with a zero
/// denominator are skipped when `skip_degenerate` is set.
pub fn brute_window_index(a: &Grid, b: &Grid, c1: f64, c2: f64, skip_degenerate: bool) -> f64 {
    let n = 8;
    let (w, h) = a.dims();
    let mut total = 0.0;
    let mut count = 0usize;
    for y0 in 0..=h - n {
        for x0 in 0..=w - n {
            let mut pa = Vec::new();
            let mut pb = Vec::new();
            for y in y0..y0 + n {
                for x in x0..x0 + n {
                    pa.push(a.get(x, y));
                    pb.push(b.get(x, y));
                }
            }
            let m = (n * n) as f64;
            let ma = pa.iter().sum::<f64>() / m;
            let mb = pb.iter().sum::<f64>() / m;
            let va = pa.iter().map(|v| (v - ma).powi(2)).sum::<f64>() / m;
            let vb = pb.iter().map(|v| (v - mb).powi(2)).sum::<f64>() / m;
            let cov = pa.iter().zip(&pb).map(|(p, q)| (p - ma) * (q - mb)).sum::<f64>() / m;
            let d1 = ma * ma + mb * mb + c1;
            let d2 = va + vb + c2;
            if skip_degenerate && (d1 == 0.0 || d2 == 0.0) {
                continue;
            }
            total += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / (d1 * d2);
            count += 1;
        }
    }
    total / count as f64
}

/// Independent scalar evaluation of the absorption inequality, term by term.
pub fn scalar_absorbs(k: [f64; 3], sigma: [f64; 3], delta: [f64; 3]) -> bool {
    let mut m2 = 0.0;
    let mut load = 0.0;
    let mut volume = 1.0;
    for i in 0..3 {
        m2 += (k[i] * delta[i] / sigma[i]).powi(2);
        load += k[i] * k[i] / (1.0 + k[i] * sigma[i]).powi(2);
        volume *= k[i] * sigma[i];
    }
    let rhs = (2.0 * std::f64::consts::PI.powi(3)).sqrt() * volume * load * (load / 2.0).exp();
    m2.powf(1.5) < rhs
}

/// Minimal displacement over every translated copy of `x` that could be
/// nearest to `mu` on a torus.
pub fn brute_torus_delta(x: (f64, f64), mu: (f64, f64), w: f64, h: f64) -> (f64, f64) {
    let reach = |d: f64, p: f64| (d.abs() / p).ceil() as i64 + 1;
    let (rx, ry) = (reach(x.0 - mu.0, w), reach(x.1 - mu.1, h));
    let mut best = (f64::INFINITY, (0.0, 0.0));
    for sx in -rx..=rx {
        for sy in -ry..=ry {
            let d = (x.0 + sx as f64 * w - mu.0, x.1 + sy as f64 * h - mu.1);
            let n = d.0.hypot(d.1);
            if n < best.0 {
                best = (n, d);
            }
        }
    }
    best.1
}
