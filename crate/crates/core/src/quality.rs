//! Full-reference quality metrics: PSNR, SSIM and UQI.
//!
//! SSIM and UQI average a uniform square window (8×8 by default) slid with
//! stride 1 over the image; window statistics use population (1/N) moments.
//! RGB images are scored per channel and the channel scores averaged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Grid, Image};

pub const DEFAULT_WINDOW: usize = 8;

/// PSNR in dB (`inf` for identical inputs), SSIM and UQI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    #[serde(with = "float_or_inf")]
    pub psnr: f64,
    pub ssim: f64,
    pub uqi: f64,
}

/// Serializes infinite PSNR as the string `"inf"`.
pub(crate) mod float_or_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}

fn same_dims(a: &Grid, b: &Grid) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::dims(a.dims(), b.dims()));
    }
    Ok(())
}

pub fn mse(a: &Grid, b: &Grid) -> Result<f64> {
    same_dims(a, b)?;
    let n = a.as_slice().len() as f64;
    Ok(a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n)
}

/// `10·log₁₀(max²/MSE)`; positive infinity when the images are identical.
pub fn psnr(a: &Grid, b: &Grid, max_value: f64) -> Result<f64> {
    if !(max_value > 0.0) {
        return Err(Error::invalid("max_value must be positive"));
    }
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (max_value * max_value / m).log10())
}

/// Window size and stabilizers for [`ssim`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub c1: f64,
    pub c2: f64,
}

impl SsimParams {
    /// `C₁ = (0.01·L)²`, `C₂ = (0.03·L)²`.
    pub fn standard(max_value: f64) -> Self {
        Self {
            window: DEFAULT_WINDOW,
            c1: (0.01 * max_value).powi(2),
            c2: (0.03 * max_value).powi(2),
        }
    }
}

impl Default for SsimParams {
    fn default() -> Self {
        Self::standard(255.0)
    }
}

// Sliding-window moments via summed-area tables.
struct WindowStats {
    mean_a: f64,
    mean_b: f64,
    var_a: f64,
    var_b: f64,
    cov: f64,
}

fn integral(width: usize, height: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
    let stride = width + 1;
    let mut t = vec![0.0; stride * (height + 1)];
    for y in 0..height {
        let mut row = 0.0;
        for x in 0..width {
            row += f(y * width + x);
            t[(y + 1) * stride + x + 1] = t[y * stride + x + 1] + row;
        }
    }
    t
}

fn for_each_window(a: &Grid, b: &Grid, window: usize, mut visit: impl FnMut(WindowStats)) -> Result<()> {
    same_dims(a, b)?;
    let (w, h) = a.dims();
    if window == 0 || w < window || h < window {
        return Err(Error::invalid(format!(
            "image {w}x{h} is smaller than the {window}x{window} window"
        )));
    }
    let (sa, sb) = (a.as_slice(), b.as_slice());
    // centre on the global means to keep the summed-area tables well conditioned
    let ca = sa.iter().sum::<f64>() / sa.len() as f64;
    let cb = sb.iter().sum::<f64>() / sb.len() as f64;
    let ia = integral(w, h, |i| sa[i] - ca);
    let ib = integral(w, h, |i| sb[i] - cb);
    let iaa = integral(w, h, |i| (sa[i] - ca) * (sa[i] - ca));
    let ibb = integral(w, h, |i| (sb[i] - cb) * (sb[i] - cb));
    let iab = integral(w, h, |i| (sa[i] - ca) * (sb[i] - cb));
    let stride = w + 1;
    let n = (window * window) as f64;
    let boxsum = |t: &[f64], x: usize, y: usize| {
        t[(y + window) * stride + x + window] - t[y * stride + x + window] - t[(y + window) * stride + x]
            + t[y * stride + x]
    };
    for y in 0..=h - window {
        for x in 0..=w - window {
            let ma = boxsum(&ia, x, y) / n;
            let mb = boxsum(&ib, x, y) / n;
            visit(WindowStats {
                mean_a: ma + ca,
                mean_b: mb + cb,
                var_a: (boxsum(&iaa, x, y) / n - ma * ma).max(0.0),
                var_b: (boxsum(&ibb, x, y) / n - mb * mb).max(0.0),
                cov: boxsum(&iab, x, y) / n - ma * mb,
            });
        }
    }
    Ok(())
}

pub fn ssim(a: &Grid, b: &Grid, params: SsimParams) -> Result<f64> {
    same_dims(a, b)?;
    if a.width() < params.window || a.height() < params.window {
        return Err(Error::invalid(format!(
            "image {}x{} is smaller than the {w}x{w} window",
            a.width(),
            a.height(),
            w = params.window
        )));
    }
    if a == b {
        return Ok(1.0);
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for_each_window(a, b, params.window, |s| {
        let num = (2.0 * s.mean_a * s.mean_b + params.c1) * (2.0 * s.cov + params.c2);
        let den = (s.mean_a * s.mean_a + s.mean_b * s.mean_b + params.c1) * (s.var_a + s.var_b + params.c2);
        total += num / den;
        count += 1;
    })?;
    Ok(total / count as f64)
}

/// SSIM with both stabilizers at zero. Windows with a zero denominator are
/// skipped; when all are skipped the metric is undefined.
pub fn uqi(a: &Grid, b: &Grid, window: usize) -> Result<f64> {
    Ok(uqi_with_count(a, b, window)?.0)
}

/// UQI plus the number of windows that were skipped.
pub fn uqi_with_count(a: &Grid, b: &Grid, window: usize) -> Result<(f64, usize)> {
    let mut total = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for_each_window(a, b, window, |s| {
        let den = (s.mean_a * s.mean_a + s.mean_b * s.mean_b) * (s.var_a + s.var_b);
        if den == 0.0 {
            skipped += 1;
            return;
        }
        total += 4.0 * s.mean_a * s.mean_b * s.cov / den;
        used += 1;
    })?;
    if used == 0 {
        return Err(Error::UndefinedMetric("every UQI window is degenerate".into()));
    }
    Ok((total / used as f64, skipped))
}

/// 256-bin histogram of a plane after 8-bit quantization.
pub fn histogram256(plane: &Grid) -> [u64; 256] {
    let mut h = [0u64; 256];
    for &v in plane.quantized().as_slice() {
        h[v as usize] += 1;
    }
    h
}

/// PSNR/SSIM/UQI of two images with standard settings for `max_value`.
///
/// A UQI that is undefined on a channel (all windows flat) counts as 1 when
/// the channels are identical.
pub fn compare(a: &Image, b: &Image, max_value: f64) -> Result<QualityReport> {
    if a.planes().len() != b.planes().len() {
        return Err(Error::invalid("images have different channel counts"));
    }
    if a.dims() != b.dims() {
        return Err(Error::dims(a.dims(), b.dims()));
    }
    let n = a.planes().len() as f64;
    let mut report = QualityReport {
        psnr: 0.0,
        ssim: 0.0,
        uqi: 0.0,
    };
    let mut total_mse = 0.0;
    for (pa, pb) in a.planes().iter().zip(b.planes()) {
        total_mse += mse(pa, pb)?;
        report.ssim += ssim(pa, pb, SsimParams::standard(max_value))? / n;
        report.uqi += match uqi(pa, pb, DEFAULT_WINDOW) {
            Ok(v) => v,
            Err(Error::UndefinedMetric(_)) if pa == pb => 1.0,
            Err(e) => return Err(e),
        } / n;
    }
    let mean_mse = total_mse / n;
    report.psnr = if mean_mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (max_value * max_value / mean_mse).log10()
    };
    Ok(report)
}
