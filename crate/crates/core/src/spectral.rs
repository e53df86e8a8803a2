//! Centered 2-D discrete Fourier spectra of real images.
//!
//! Forward transforms are unnormalized,
//! `F(u,v) = Σ img(x,y)·exp(−2πi(ux/W + vy/H))`, and the inverse carries the
//! `1/(WH)` factor. A centered spectrum stores DC at cell `(⌊W/2⌋, ⌊H/2⌋)`;
//! cell `x` holds signed frequency `u = x − ⌊W/2⌋`, so for even sizes the
//! Nyquist row and column sit at `u = −W/2`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Channel, Grid};

/// Which quantity supplies the third coordinate of a spectral point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SpectralAxis {
    #[default]
    Magnitude,
    Phase,
}

/// A `W × H` grid of complex DFT coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    width: usize,
    height: usize,
    coeffs: Vec<Complex64>,
    centered: bool,
}

/// One spectral sample `(u, v, a)`: signed frequencies plus log-magnitude or phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeaturePoint {
    pub u: i32,
    pub v: i32,
    pub a: f64,
    pub channel: Channel,
    /// Flat row-major index of the centered grid cell this point came from.
    pub source_index: usize,
}

impl FeaturePoint {
    #[inline]
    pub fn coords(&self) -> [f64; 3] {
        [self.u as f64, self.v as f64, self.a]
    }
}

impl Spectrum {
    pub fn new(width: usize, height: usize, coeffs: Vec<Complex64>, centered: bool) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("spectrum dimensions must be positive"));
        }
        if coeffs.len() != width * height {
            return Err(Error::invalid(format!(
                "spectrum of {width}x{height} needs {} coefficients, got {}",
                width * height,
                coeffs.len()
            )));
        }
        Ok(Self {
            width,
            height,
            coeffs,
            centered,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            coeffs: vec![Complex64::new(0.0, 0.0); width * height],
            centered: true,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Cell `(x, y)` of the stored grid.
    #[inline]
    pub fn cell(&self, x: usize, y: usize) -> Complex64 {
        self.coeffs[y * self.width + x]
    }

    /// Coefficient at signed frequency `(u, v)`, wrapped modulo the grid,
    /// independent of the centering convention.
    pub fn at(&self, u: i64, v: i64) -> Complex64 {
        let (x, y) = self.cell_of(u, v);
        self.cell(x, y)
    }

    /// Grid cell holding signed frequency `(u, v)`.
    pub fn cell_of(&self, u: i64, v: i64) -> (usize, usize) {
        let (w, h) = (self.width as i64, self.height as i64);
        if self.centered {
            (
                (u + w / 2).rem_euclid(w) as usize,
                (v + h / 2).rem_euclid(h) as usize,
            )
        } else {
            (u.rem_euclid(w) as usize, v.rem_euclid(h) as usize)
        }
    }

    /// Signed frequency of grid cell `(x, y)` for a centered spectrum.
    #[inline]
    pub fn freq_of(&self, x: usize, y: usize) -> (i32, i32) {
        centered_freq(x, y, self.width, self.height)
    }

    pub fn centered(&self) -> Spectrum {
        if self.centered {
            return self.clone();
        }
        Spectrum {
            width: self.width,
            height: self.height,
            coeffs: shift(&self.coeffs, self.width, self.height, true),
            centered: true,
        }
    }

    pub fn uncentered(&self) -> Spectrum {
        if !self.centered {
            return self.clone();
        }
        Spectrum {
            width: self.width,
            height: self.height,
            coeffs: shift(&self.coeffs, self.width, self.height, false),
            centered: false,
        }
    }

    /// Checks `F(u,v) = conj(F(−u,−v))` relative to the largest coefficient.
    pub fn is_conjugate_symmetric(&self, rel_tol: f64) -> bool {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
        for y in 0..self.height {
            for x in 0..self.width {
                let (u, v) = self.freq_index(x, y);
                let mirror = self.at(-u, -v).conj();
                if (self.cell(x, y) - mirror).norm() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }

    fn freq_index(&self, x: usize, y: usize) -> (i64, i64) {
        if self.centered {
            let (u, v) = self.freq_of(x, y);
            (u as i64, v as i64)
        } else {
            (x as i64, y as i64)
        }
    }
}

/// Signed centered frequency of cell `(x, y)` on a `width × height` grid.
#[inline]
pub fn centered_freq(x: usize, y: usize, width: usize, height: usize) -> (i32, i32) {
    (
        x as i32 - (width / 2) as i32,
        y as i32 - (height / 2) as i32,
    )
}

// Moves natural-order coefficients to centered order (`forward`) or back.
fn shift(src: &[Complex64], width: usize, height: usize, forward: bool) -> Vec<Complex64> {
    let (sx, sy) = if forward {
        (width / 2, height / 2)
    } else {
        (width - width / 2, height - height / 2)
    };
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    for y in 0..height {
        let ty = (y + sy) % height;
        for x in 0..width {
            let tx = (x + sx) % width;
            out[ty * width + tx] = src[y * width + x];
        }
    }
    out
}

fn fft2(width: usize, height: usize, buf: &mut [Complex64], direction: FftDirection) {
    let mut planner = FftPlanner::new();
    let row_fft = planner.plan_fft(width, direction);
    let mut scratch = vec![Complex64::new(0.0, 0.0); row_fft.get_inplace_scratch_len()];
    for row in buf.chunks_exact_mut(width) {
        row_fft.process_with_scratch(row, &mut scratch);
    }

    let col_fft = planner.plan_fft(height, direction);
    scratch.resize(col_fft.get_inplace_scratch_len(), Complex64::new(0.0, 0.0));
    let mut column = vec![Complex64::new(0.0, 0.0); height];
    for x in 0..width {
        for (y, c) in column.iter_mut().enumerate() {
            *c = buf[y * width + x];
        }
        col_fft.process_with_scratch(&mut column, &mut scratch);
        for (y, c) in column.iter().enumerate() {
            buf[y * width + x] = *c;
        }
    }
}

/// Unnormalized forward DFT of a real image, returned centered.
pub fn forward_spectrum(image: &Grid) -> Result<Spectrum> {
    let (w, h) = image.dims();
    if w < 2 || h < 2 {
        return Err(Error::invalid(format!(
            "spectra need at least 2x2 pixels, got {w}x{h}"
        )));
    }
    if image.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("image contains non-finite pixels"));
    }
    let mut buf: Vec<Complex64> = image
        .as_slice()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft2(w, h, &mut buf, FftDirection::Forward);
    Ok(Spectrum {
        width: w,
        height: h,
        coeffs: shift(&buf, w, h, true),
        centered: true,
    })
}

/// `1/(WH)`-normalized inverse DFT, returning the real part and the largest
/// discarded imaginary residue.
pub fn inverse_spectrum_with_residue(spec: &Spectrum) -> Result<(Grid, f64)> {
    let (w, h) = spec.dims();
    if w == 0 || h == 0 {
        return Err(Error::invalid("spectrum dimensions must be positive"));
    }
    let mut buf = if spec.centered {
        shift(&spec.coeffs, w, h, false)
    } else {
        spec.coeffs.clone()
    };
    fft2(w, h, &mut buf, FftDirection::Inverse);
    let scale = 1.0 / (w * h) as f64;
    let mut residue = 0.0f64;
    let data = buf
        .iter()
        .map(|c| {
            residue = residue.max((c.im * scale).abs());
            c.re * scale
        })
        .collect();
    Ok((Grid::from_vec(w, h, data)?, residue))
}

/// `1/(WH)`-normalized inverse DFT; the imaginary residue is discarded and
/// no clamping is applied.
pub fn inverse_spectrum(spec: &Spectrum) -> Result<Grid> {
    inverse_spectrum_with_residue(spec).map(|(g, _)| g)
}

/// `ln(1 + |F|)` per cell.
pub fn log_magnitude(spec: &Spectrum) -> Grid {
    let data = spec.coeffs.iter().map(|c| c.norm().ln_1p()).collect();
    Grid::from_vec(spec.width, spec.height, data).expect("dimensions already validated")
}

/// Principal argument in `(−π, π]`, with `0 + 0i` mapped to 0.
#[inline]
pub fn principal_phase(c: Complex64) -> f64 {
    if c.re == 0.0 && c.im == 0.0 {
        return 0.0;
    }
    let p = c.im.atan2(c.re);
    if p <= -PI {
        PI
    } else {
        p
    }
}

pub fn phase_grid(spec: &Spectrum) -> Grid {
    let data = spec.coeffs.iter().map(|&c| principal_phase(c)).collect();
    Grid::from_vec(spec.width, spec.height, data).expect("dimensions already validated")
}

/// One [`FeaturePoint`] per coefficient of a centered spectrum.
pub fn build_point_cloud(spec: &Spectrum, axis: SpectralAxis, channel: Channel) -> Vec<FeaturePoint> {
    let spec = spec.centered();
    let mut points = Vec::with_capacity(spec.width * spec.height);
    for y in 0..spec.height {
        for x in 0..spec.width {
            let idx = y * spec.width + x;
            let c = spec.coeffs[idx];
            let a = match axis {
                SpectralAxis::Magnitude => c.norm().ln_1p(),
                SpectralAxis::Phase => principal_phase(c),
            };
            let (u, v) = spec.freq_of(x, y);
            points.push(FeaturePoint {
                u,
                v,
                a,
                channel,
                source_index: idx,
            });
        }
    }
    points
}

/// Replaces every magnitude while keeping each coefficient's phase.
///
/// Coefficients that are exactly zero take phase 0.
pub fn apply_magnitudes(spec: &Spectrum, new_mags: &Grid) -> Result<Spectrum> {
    if new_mags.dims() != spec.dims() {
        return Err(Error::dims(spec.dims(), new_mags.dims()));
    }
    if let Some(bad) = new_mags.as_slice().iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
        return Err(Error::invalid(format!("magnitudes must be finite and >= 0, got {bad}")));
    }
    let coeffs = spec
        .coeffs
        .iter()
        .zip(new_mags.as_slice())
        .map(|(&c, &m)| Complex64::from_polar(m, principal_phase(c)))
        .collect();
    Ok(Spectrum {
        width: spec.width,
        height: spec.height,
        coeffs,
        centered: spec.centered,
    })
}

/// Magnitudes `|F|` per cell.
pub fn magnitude_grid(spec: &Spectrum) -> Grid {
    let data = spec.coeffs.iter().map(|c| c.norm()).collect();
    Grid::from_vec(spec.width, spec.height, data).expect("dimensions already validated")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Direct O(N^2) DFT, natural order.
    fn dft_oracle(img: &Grid) -> Vec<Complex64> {
        let (w, h) = img.dims();
        let mut out = vec![Complex64::new(0.0, 0.0); w * h];
        for v in 0..h {
            for u in 0..w {
                let mut acc = Complex64::new(0.0, 0.0);
                for y in 0..h {
                    for x in 0..w {
                        let ang = -2.0 * PI * ((u * x) as f64 / w as f64 + (v * y) as f64 / h as f64);
                        acc += Complex64::from_polar(img.get(x, y), ang);
                    }
                }
                out[v * w + u] = acc;
            }
        }
        out
    }

    fn random_grid(w: usize, h: usize, seed: u64) -> Grid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Grid::from_fn(w, h, |_, _| rng.random_range(0.0..255.0))
    }

    #[test]
    fn constant_image_is_dc_only() {
        let (w, h) = (6, 4);
        let spec = forward_spectrum(&Grid::filled(w, h, 3.0)).unwrap();
        assert!((spec.at(0, 0) - Complex64::new(72.0, 0.0)).norm() < 1e-9);
        assert_eq!(spec.cell_of(0, 0), (3, 2));
        for (i, c) in spec.coeffs().iter().enumerate() {
            if i != 2 * w + 3 {
                assert!(c.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn single_cosine_tone() {
        let (w, h) = (8, 6);
        let img = Grid::from_fn(w, h, |x, _| (2.0 * PI * x as f64 / w as f64).cos());
        let spec = forward_spectrum(&img).unwrap();
        for y in 0..h {
            for x in 0..w {
                let (u, v) = spec.freq_of(x, y);
                let m = spec.cell(x, y).norm();
                if v == 0 && (u == 1 || u == -1) {
                    assert!((m - (w * h) as f64 / 2.0).abs() < 1e-9);
                } else {
                    assert!(m < 1e-9, "({u},{v}) = {m}");
                }
            }
        }
    }

    #[test]
    fn matches_direct_dft_and_round_trips() {
        let img = random_grid(8, 8, 7);
        let spec = forward_spectrum(&img).unwrap();
        let natural = spec.uncentered();
        for (a, b) in natural.coeffs().iter().zip(dft_oracle(&img)) {
            assert!((a - b).norm() < 1e-9);
        }
        let back = inverse_spectrum(&spec).unwrap();
        assert!(back.max_abs_diff(&img) < 1e-9);
    }

    #[test]
    fn odd_dimensions_match_oracle() {
        let img = random_grid(5, 7, 3);
        let spec = forward_spectrum(&img).unwrap();
        let oracle = dft_oracle(&img);
        for v in -3i64..=3 {
            for u in -2i64..=2 {
                let nat = (v.rem_euclid(7) * 5 + u.rem_euclid(5)) as usize;
                assert!((spec.at(u, v) - oracle[nat]).norm() < 1e-9);
            }
        }
        assert!(inverse_spectrum(&spec).unwrap().max_abs_diff(&img) < 1e-9);
    }

    #[test]
    fn inverse_edge_cases() {
        let zero = Spectrum::zeros(4, 4);
        assert!(inverse_spectrum(&zero).unwrap().as_slice().iter().all(|&v| v == 0.0));
        let mut dc = Spectrum::zeros(4, 4);
        let (x, y) = dc.cell_of(0, 0);
        dc.coeffs_mut()[y * 4 + x] = Complex64::new(16.0, 0.0);
        let img = inverse_spectrum(&dc).unwrap();
        assert!(img.as_slice().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn inverse_is_linear_in_a_perturbation() {
        let img = random_grid(8, 8, 11);
        let spec = forward_spectrum(&img).unwrap();
        let delta = 5.0;
        let mut bumped = spec.clone();
        let (x, y) = bumped.cell_of(2, 1);
        let c = bumped.cell(x, y);
        bumped.coeffs_mut()[y * 8 + x] = Complex64::from_polar(c.norm() + delta, c.arg());
        let out = inverse_spectrum(&bumped).unwrap();
        assert!(out.max_abs_diff(&img) <= delta / 64.0 + 1e-12);
    }

    #[test]
    fn too_small_images_are_rejected() {
        assert!(forward_spectrum(&Grid::zeros(1, 4)).is_err());
        assert!(forward_spectrum(&Grid::zeros(0, 0)).is_err());
    }

    #[test]
    fn log_magnitude_values() {
        let coeffs = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(std::f64::consts::E - 1.0, 0.0),
            Complex64::new(3.0, 4.0),
            Complex64::new(-2.0, 0.5),
        ];
        let spec = Spectrum::new(2, 2, coeffs.clone(), true).unwrap();
        let lm = log_magnitude(&spec);
        assert_eq!(lm.as_slice()[0], 0.0);
        assert!((lm.as_slice()[1] - 1.0).abs() < 1e-15);
        for (l, c) in lm.as_slice().iter().zip(&coeffs) {
            assert!((l.exp() - 1.0 - c.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_branch() {
        assert_eq!(principal_phase(Complex64::new(1.0, 0.0)), 0.0);
        assert!((principal_phase(Complex64::new(0.0, 1.0)) - PI / 2.0).abs() < 1e-15);
        assert_eq!(principal_phase(Complex64::new(-1.0, 0.0)), PI);
        assert_eq!(principal_phase(Complex64::new(-1.0, -0.0)), PI);
        assert_eq!(principal_phase(Complex64::new(-0.0, -0.0)), 0.0);
    }

    #[test]
    fn point_cloud_of_2x2() {
        let spec = forward_spectrum(&Grid::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap()).unwrap();
        let pts = build_point_cloud(&spec, SpectralAxis::Magnitude, Channel::Gray);
        assert_eq!(pts.len(), 4);
        let mut uv: Vec<_> = pts.iter().map(|p| (p.u, p.v)).collect();
        uv.sort();
        assert_eq!(uv, vec![(-1, -1), (-1, 0), (0, -1), (0, 0)]);
        let dc = pts.iter().find(|p| p.u == 0 && p.v == 0).unwrap();
        assert!((dc.a - 11.0f64.ln()).abs() < 1e-12);
        for p in &pts {
            let x = p.source_index % 2;
            let y = p.source_index / 2;
            assert_eq!(spec.freq_of(x, y), (p.u, p.v));
        }
    }

    #[test]
    fn apply_magnitudes_cases() {
        let img = random_grid(6, 6, 5);
        let spec = forward_spectrum(&img).unwrap();
        let same = apply_magnitudes(&spec, &magnitude_grid(&spec)).unwrap();
        for (a, b) in same.coeffs().iter().zip(spec.coeffs()) {
            assert!((a - b).norm() < 1e-12 * b.norm().max(1.0));
        }
        let zero = apply_magnitudes(&spec, &Grid::zeros(6, 6)).unwrap();
        assert!(zero.coeffs().iter().all(|c| c.norm() == 0.0));

        let doubled = apply_magnitudes(&spec, &magnitude_grid(&spec).map(|m| 2.0 * m)).unwrap();
        for (a, b) in doubled.coeffs().iter().zip(spec.coeffs()) {
            assert!((a.norm() - 2.0 * b.norm()).abs() < 1e-9);
            assert_eq!(principal_phase(*a), principal_phase(*b));
        }

        let mut neg = Grid::zeros(6, 6);
        neg.set(1, 1, -1.0);
        assert!(matches!(apply_magnitudes(&spec, &neg), Err(Error::InvalidInput(_))));
        assert!(apply_magnitudes(&spec, &Grid::zeros(5, 6)).is_err());
    }

    #[test]
    fn zero_coefficients_take_phase_zero() {
        let spec = Spectrum::new(2, 1, vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 2.0)], true).unwrap();
        let out = apply_magnitudes(&spec, &Grid::from_vec(2, 1, vec![3.0, 1.0]).unwrap()).unwrap();
        assert_eq!(out.coeffs()[0], Complex64::new(3.0, 0.0));
    }

    #[test]
    fn real_image_spectrum_is_conjugate_symmetric() {
        for (w, h) in [(8, 8), (5, 6), (7, 3)] {
            let spec = forward_spectrum(&random_grid(w, h, 1)).unwrap();
            assert!(spec.is_conjugate_symmetric(1e-9));
        }
    }
}
