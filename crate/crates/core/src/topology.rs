//! Wrapped geometry of the centered spectral plane.
//!
//! The DFT is periodic in both frequency axes, so the centered rectangle is a
//! torus: its four corners are the same sample (the Nyquist point, "pole
//! infinity") and displacements are taken through the shorter way around.
//! The phase axis wraps with period `2π`; the log-magnitude axis is flat.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{FeaturePoint, SpectralAxis};

/// Periods of the two frequency axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlaneDims {
    width: usize,
    height: usize,
}

impl PlaneDims {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::invalid(format!(
                "spectral plane must be at least 2x2, got {width}x{height}"
            )));
        }
        Ok(Self { width, height })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    /// The Nyquist representative `(−⌈W/2⌉, −⌈H/2⌉)`.
    pub fn nyquist(&self) -> (i64, i64) {
        (
            -(self.width.div_ceil(2) as i64),
            -(self.height.div_ceil(2) as i64),
        )
    }

    /// Frequency-axis distance between two points through the wrap.
    pub fn torus_distance(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        // wrap is applied in a fixed argument order so d(a, b) == d(b, a) bit for bit
        let axis = |x: f64, y: f64, p: f64| if x <= y { wrap(x, y, p) } else { wrap(y, x, p) };
        axis(a.0, b.0, self.width as f64).hypot(axis(a.1, b.1, self.height as f64))
    }

    /// Toroidal distance from DC.
    pub fn dc_distance(&self, u: f64, v: f64) -> f64 {
        self.torus_distance((u, v), (0.0, 0.0))
    }

    /// Reduces a frequency coordinate pair into `[−W/2, W/2) × [−H/2, H/2)`.
    pub fn wrap_coords(&self, u: f64, v: f64) -> (f64, f64) {
        (wrap(u, 0.0, self.width as f64), wrap(v, 0.0, self.height as f64))
    }
}

/// Which pole a frequency (or phase) anchors around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoleLabel {
    Zero,
    Infinity,
}

impl PoleLabel {
    pub fn name(self) -> &'static str {
        match self {
            PoleLabel::Zero => "zero",
            PoleLabel::Infinity => "infinity",
        }
    }
}

/// Signed minimal representative of `(x − mu) mod period`, in
/// `[−period/2, period/2)`.
pub fn wrapped_delta(x: f64, mu: f64, period: f64) -> Result<f64> {
    if !(period > 0.0) || !period.is_finite() {
        return Err(Error::invalid(format!("period must be positive, got {period}")));
    }
    Ok(wrap(x, mu, period))
}

#[inline]
pub(crate) fn wrap(x: f64, mu: f64, period: f64) -> f64 {
    let r = (x - mu).rem_euclid(period);
    // rem_euclid can round up to exactly `period` for tiny negative inputs.
    let r = if r >= period { 0.0 } else { r };
    if r >= period / 2.0 {
        r - period
    } else {
        r
    }
}

/// Per-axis signed displacement of coordinates `x` from `mu`.
#[inline]
pub fn displacement_coords(x: [f64; 3], mu: [f64; 3], dims: PlaneDims, axis: SpectralAxis) -> [f64; 3] {
    [
        wrap(x[0], mu[0], dims.width as f64),
        wrap(x[1], mu[1], dims.height as f64),
        match axis {
            SpectralAxis::Magnitude => x[2] - mu[2],
            SpectralAxis::Phase => wrap(x[2], mu[2], TAU),
        },
    ]
}

pub fn displacement(p: &FeaturePoint, mu: [f64; 3], dims: PlaneDims, axis: SpectralAxis) -> [f64; 3] {
    displacement_coords(p.coords(), mu, dims, axis)
}

/// Zero when the toroidal distance to DC does not exceed the distance to the
/// Nyquist point; ties go to Zero.
pub fn pole_of(u: i64, v: i64, dims: PlaneDims) -> PoleLabel {
    pole_of_coords(u as f64, v as f64, dims)
}

pub fn pole_of_coords(u: f64, v: f64, dims: PlaneDims) -> PoleLabel {
    let (nu, nv) = dims.nyquist();
    let to_zero = dims.torus_distance((u, v), (0.0, 0.0));
    let to_inf = dims.torus_distance((u, v), (nu as f64, nv as f64));
    if to_zero <= to_inf {
        PoleLabel::Zero
    } else {
        PoleLabel::Infinity
    }
}

/// Phases near `±π/2` count as infinities, phases near `0` or `π` as zeros.
pub fn phase_pole_of(phase: f64) -> PoleLabel {
    let circ = |target: f64| wrap(phase, target, TAU).abs();
    let to_inf = circ(FRAC_PI_2).min(circ(-FRAC_PI_2));
    let to_zero = circ(0.0).min(circ(PI));
    if to_inf < to_zero {
        PoleLabel::Infinity
    } else {
        PoleLabel::Zero
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Channel;

    fn brute_delta(x: f64, mu: f64, period: f64) -> f64 {
        // Smallest-magnitude difference among translated copies.
        let mut best = f64::INFINITY;
        for k in -3..=3 {
            let d = x - mu + k as f64 * period;
            if d.abs() < best.abs() {
                best = d;
            }
        }
        best
    }

    #[test]
    fn wrapped_delta_examples() {
        assert_eq!(wrapped_delta(3.0, 1.0, 8.0).unwrap(), 2.0);
        assert_eq!(wrapped_delta(-3.0, 3.0, 8.0).unwrap(), 2.0);
        assert_eq!(brute_delta(-3.0, 3.0, 8.0), 2.0);
        for x in [-7.5, -1.0, 0.0, 2.25, 100.0] {
            assert_eq!(wrapped_delta(x, x, 6.0).unwrap(), 0.0);
        }
        assert!(wrapped_delta(1.0, 0.0, 0.0).is_err());
        assert!(wrapped_delta(1.0, 0.0, -2.0).is_err());
    }

    #[test]
    fn antisymmetric_except_at_half_period() {
        for (a, b) in [(1.0, 3.5), (-2.0, 2.0), (0.25, -3.0)] {
            let p = 8.0;
            let d1 = wrapped_delta(a, b, p).unwrap();
            let d2 = wrapped_delta(b, a, p).unwrap();
            if d1.abs() == p / 2.0 {
                assert_eq!(d1, -p / 2.0);
                assert_eq!(d2, -p / 2.0);
            } else {
                assert_eq!(d1, -d2);
            }
        }
        // the exact boundary: both directions land on -p/2
        assert_eq!(wrapped_delta(4.0, 0.0, 8.0).unwrap(), -4.0);
        assert_eq!(wrapped_delta(0.0, 4.0, 8.0).unwrap(), -4.0);
    }

    #[test]
    fn corners_meet_through_infinity() {
        let dims = PlaneDims::new(8, 8).unwrap();
        let p = FeaturePoint {
            u: -4,
            v: -4,
            a: 1.0,
            channel: Channel::Gray,
            source_index: 0,
        };
        let d = displacement(&p, [3.0, 3.0, 1.0], dims, SpectralAxis::Magnitude);
        assert_eq!(d[0].abs(), 1.0);
        assert_eq!(d[1].abs(), 1.0);
        for (i, want) in d.iter().zip([brute_delta(-4.0, 3.0, 8.0), brute_delta(-4.0, 3.0, 8.0)]) {
            assert_eq!(i.abs(), want.abs());
        }
        let zero = displacement(&p, [-4.0, -4.0, 1.0], dims, SpectralAxis::Magnitude);
        assert_eq!(zero, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn phase_axis_wraps() {
        let dims = PlaneDims::new(4, 4).unwrap();
        let d = displacement_coords([0.0, 0.0, -3.0], [0.0, 0.0, 3.0], dims, SpectralAxis::Phase);
        assert!((d[2] - (TAU - 6.0)).abs() < 1e-12);
        let flat = displacement_coords([0.0, 0.0, -3.0], [0.0, 0.0, 3.0], dims, SpectralAxis::Magnitude);
        assert_eq!(flat[2], -6.0);
    }

    #[test]
    fn pole_examples() {
        let d8 = PlaneDims::new(8, 8).unwrap();
        assert_eq!(pole_of(0, 0, d8), PoleLabel::Zero);
        assert_eq!(pole_of(-4, -4, d8), PoleLabel::Infinity);
        // (3,3): sqrt(2) from the Nyquist corner, sqrt(18) from DC
        assert_eq!(pole_of(3, 3, d8), PoleLabel::Infinity);
        assert!((d8.torus_distance((3.0, 3.0), (-4.0, -4.0)) - 2f64.sqrt()).abs() < 1e-12);
        // equidistant cell goes to Zero
        assert_eq!(pole_of(2, 2, d8), PoleLabel::Zero);
    }

    #[test]
    fn phase_poles() {
        assert_eq!(phase_pole_of(0.0), PoleLabel::Zero);
        assert_eq!(phase_pole_of(FRAC_PI_2), PoleLabel::Infinity);
        assert_eq!(phase_pole_of(-FRAC_PI_2), PoleLabel::Infinity);
        assert_eq!(phase_pole_of(PI / 3.0), PoleLabel::Infinity);
        assert_eq!(phase_pole_of(PI), PoleLabel::Zero);
        assert_eq!(phase_pole_of(PI / 4.0), PoleLabel::Zero);
    }

    #[test]
    fn small_dims_rejected() {
        assert!(PlaneDims::new(1, 5).is_err());
        assert!(PlaneDims::new(2, 2).is_ok());
    }
}
