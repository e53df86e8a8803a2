//! Inverse square mean shift clustering.
//!
//! Clusters are diagonal Gaussians whose membranes decide, through the
//! feedback-distorted absorption criterion, which points they capture.

mod cluster;
mod engine;
pub mod membrane;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralAxis;
use crate::topology::{displacement_coords, phase_pole_of, pole_of_coords, PlaneDims, PoleLabel};

pub use cluster::{outsider_pull, absorption_test, Cluster};
pub use engine::{fit, fit_coords, Assignment, Clustering};
pub use membrane::{
    absorption_threshold, feedback_mahalanobis_sq, membrane_force, membrane_force_raw, membrane_load,
    membrane_population, membrane_population_raw, membrane_radius, perceived_membrane_offset,
};

/// Per-axis feedback constants `k₁, k₂, k₃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct FeedbackConstants([f64; 3]);

impl FeedbackConstants {
    pub fn new(k: [f64; 3]) -> Result<Self> {
        if k.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid(format!(
                "feedback constants must be positive and finite, got {k:?}"
            )));
        }
        Ok(Self(k))
    }

    /// Loose frequency axes, tight third axis.
    pub fn spectral_default() -> Self {
        Self([0.05, 0.05, 6.0])
    }

    #[inline]
    pub fn get(&self, axis: usize) -> f64 {
        self.0[axis]
    }

    pub fn values(&self) -> [f64; 3] {
        self.0
    }

    /// `k₁ < 1`, `k₂ < 1` and `k₃ > 1`.
    pub fn follows_spectral_policy(&self) -> bool {
        self.0[0] < 1.0 && self.0[1] < 1.0 && self.0[2] > 1.0
    }
}

impl TryFrom<[f64; 3]> for FeedbackConstants {
    type Error = Error;

    fn try_from(k: [f64; 3]) -> Result<Self> {
        Self::new(k)
    }
}

impl From<FeedbackConstants> for [f64; 3] {
    fn from(k: FeedbackConstants) -> Self {
        k.0
    }
}

/// Knobs of the fit loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineParams {
    pub k: FeedbackConstants,
    pub sigma_floor: f64,
    /// Membrane shell thicknesses; only membrane population reports use them.
    pub epsilon: [f64; 3],
    pub max_iterations: usize,
    pub seed_count: usize,
    pub rng_seed: u64,
    /// Accept feedback constants outside the spectral `k₁,k₂ < 1 < k₃` policy.
    pub allow_any_feedback: bool,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self {
            k: FeedbackConstants::spectral_default(),
            sigma_floor: 1e-3,
            epsilon: [0.1; 3],
            max_iterations: 50,
            seed_count: 256,
            rng_seed: 0x1575,
            allow_any_feedback: false,
        }
    }
}

impl EngineParams {
    pub fn validate(&self) -> Result<()> {
        FeedbackConstants::new(self.k.values())?;
        if !self.allow_any_feedback && !self.k.follows_spectral_policy() {
            return Err(Error::invalid(format!(
                "feedback {:?} violates k1,k2 < 1 < k3 (set allow_any_feedback to override)",
                self.k.values()
            )));
        }
        if !(self.sigma_floor > 0.0) || !self.sigma_floor.is_finite() {
            return Err(Error::invalid("sigma_floor must be positive"));
        }
        if self.epsilon.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(Error::invalid("epsilon shells must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        if self.seed_count == 0 {
            return Err(Error::invalid("seed_count must be at least 1"));
        }
        Ok(())
    }
}

/// Geometry the points live in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Space {
    /// Plain `R³`, used for synthetic data.
    Euclidean,
    /// Toroidal frequency plane plus a log-magnitude or phase axis.
    Spectral { dims: PlaneDims, axis: SpectralAxis },
}

impl Space {
    pub fn spectral(dims: PlaneDims, axis: SpectralAxis) -> Self {
        Space::Spectral { dims, axis }
    }

    #[inline]
    pub fn delta(&self, x: [f64; 3], mu: [f64; 3]) -> [f64; 3] {
        match *self {
            Space::Euclidean => [x[0] - mu[0], x[1] - mu[1], x[2] - mu[2]],
            Space::Spectral { dims, axis } => displacement_coords(x, mu, dims, axis),
        }
    }

    /// Reduces wrapped axes of a centroid into their centered ranges.
    pub fn wrap_centroid(&self, mu: [f64; 3]) -> [f64; 3] {
        match *self {
            Space::Euclidean => mu,
            Space::Spectral { dims, axis } => {
                let (u, v) = dims.wrap_coords(mu[0], mu[1]);
                let a = match axis {
                    SpectralAxis::Magnitude => mu[2],
                    SpectralAxis::Phase => {
                        let w = crate::topology::wrap(mu[2], 0.0, std::f64::consts::TAU);
                        // keep the principal range (−π, π]
                        if w <= -std::f64::consts::PI {
                            std::f64::consts::PI
                        } else {
                            w
                        }
                    }
                };
                [u, v, a]
            }
        }
    }

    pub fn pole(&self, mu: [f64; 3]) -> PoleLabel {
        match *self {
            Space::Euclidean => PoleLabel::Zero,
            Space::Spectral { dims, axis } => match axis {
                SpectralAxis::Magnitude => pole_of_coords(mu[0], mu[1], dims),
                SpectralAxis::Phase => phase_pole_of(mu[2]),
            },
        }
    }

    /// Period of each axis, `None` for flat axes.
    pub fn periods(&self) -> [Option<f64>; 3] {
        match *self {
            Space::Euclidean => [None; 3],
            Space::Spectral { dims, axis } => [
                Some(dims.width() as f64),
                Some(dims.height() as f64),
                (axis == SpectralAxis::Phase).then_some(std::f64::consts::TAU),
            ],
        }
    }

    pub fn dims(&self) -> Option<PlaneDims> {
        match *self {
            Space::Euclidean => None,
            Space::Spectral { dims, .. } => Some(dims),
        }
    }
}
