//! Membrane algebra of a feedback-distorted diagonal Gaussian cluster.
//!
//! A cluster with per-axis deviation `σᵢ` and feedback constant `kᵢ` keeps a
//! membrane at Euclidean distance `σᵢ/(1 + kᵢσᵢ)` from its centroid. Outsiders
//! see the cluster through a ruler of `σᵢ/kᵢ`. A point is absorbed when
//!
//! ```text
//! (Σ kᵢ²Δᵢ²/σᵢ²)^1.5 < √(2π³) · Π kᵢσᵢ · S · exp(S/2),   S = Σ kᵢ²/(1 + kᵢσᵢ)²
//! ```
//!
//! The right side depends only on the cluster and is cached there.

use std::f64::consts::PI;

use crate::error::{Error, Result};

use super::FeedbackConstants;

/// Euclidean distance of the membrane from the centroid along one axis.
#[inline]
pub fn membrane_radius(sigma: f64, k: f64) -> f64 {
    sigma / (1.0 + k * sigma)
}

/// How far a point sitting one raw deviation out appears to the membrane,
/// measured in membrane rulers. Always equals `k·σ`.
///
/// The gap between that point and the membrane is `kσ²/(1 + kσ)`.
pub fn perceived_membrane_offset(sigma: f64, k: f64) -> f64 {
    let ruler = membrane_radius(sigma, k);
    if ruler == 0.0 {
        return 0.0;
    }
    let gap = k * sigma * sigma / (1.0 + k * sigma);
    gap / ruler
}

/// `S = Σ kᵢ²/(1 + kᵢσᵢ)²`, the squared membrane offset seen through feedback.
#[inline]
pub fn membrane_load(k: &FeedbackConstants, sigma: [f64; 3]) -> f64 {
    (0..3)
        .map(|i| {
            let t = k.get(i) / (1.0 + k.get(i) * sigma[i]);
            t * t
        })
        .sum()
}

fn check_sigma(sigma: [f64; 3]) -> Result<()> {
    if sigma.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::DegenerateCluster(format!(
            "deviations must be positive (apply the sigma floor first), got {sigma:?}"
        )));
    }
    Ok(())
}

/// Asymptotic membrane head count with feedback applied.
pub fn membrane_population(n: usize, sigma: [f64; 3], k: &FeedbackConstants, epsilon: [f64; 3]) -> Result<f64> {
    check_sigma(sigma)?;
    let scaled: f64 = (0..3).map(|i| k.get(i) * sigma[i]).product();
    let s = membrane_load(k, sigma);
    Ok(population_core(n, scaled, epsilon, s))
}

/// Membrane head count without feedback, for explicit border multipliers `t`.
pub fn membrane_population_raw(n: usize, sigma: [f64; 3], t: [f64; 3], epsilon: [f64; 3]) -> Result<f64> {
    check_sigma(sigma)?;
    let scaled: f64 = sigma.iter().product();
    let s: f64 = t.iter().map(|ti| ti * ti).sum();
    Ok(population_core(n, scaled, epsilon, s))
}

fn population_core(n: usize, scaled_volume: f64, epsilon: [f64; 3], s: f64) -> f64 {
    let shell: f64 = epsilon.iter().sum();
    n as f64 * 2f64.powf(1.5) / (PI.powf(1.5) * scaled_volume) * shell * (-0.5 * s).exp()
}

/// Force with which the membrane resists a mean shift, with feedback.
pub fn membrane_force(k: &FeedbackConstants, sigma: [f64; 3]) -> Result<f64> {
    if sigma.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::invalid(format!("deviations must be >= 0, got {sigma:?}")));
    }
    Ok(1.0 / membrane_load(k, sigma))
}

/// Membrane force for explicit border multipliers `t`, no feedback.
pub fn membrane_force_raw(t: [f64; 3]) -> Result<f64> {
    let s: f64 = t.iter().map(|ti| ti * ti).sum();
    if !(s > 0.0) {
        return Err(Error::invalid("border multipliers must not all be zero"));
    }
    Ok(1.0 / s)
}

/// `Σ kᵢ²Δᵢ²/σᵢ²`, the feedback-weighted squared Mahalanobis distance.
#[inline]
pub fn feedback_mahalanobis_sq(delta: [f64; 3], k: &FeedbackConstants, sigma: [f64; 3]) -> f64 {
    (0..3)
        .map(|i| {
            let t = k.get(i) * delta[i] / sigma[i];
            t * t
        })
        .sum()
}

/// Right-hand side of the absorption inequality.
pub fn absorption_threshold(k: &FeedbackConstants, sigma: [f64; 3]) -> f64 {
    let s = membrane_load(k, sigma);
    let scaled: f64 = (0..3).map(|i| k.get(i) * sigma[i]).product();
    (2.0 * PI.powi(3)).sqrt() * scaled * s * (0.5 * s).exp()
}

/// Pull an outsider at displacement `delta` exerts on the centroid.
/// Positive infinity when the displacement is zero on every axis.
#[inline]
pub fn pull_from_delta(delta: [f64; 3], k: &FeedbackConstants, sigma: [f64; 3]) -> f64 {
    let m2 = feedback_mahalanobis_sq(delta, k, sigma);
    if m2 == 0.0 {
        f64::INFINITY
    } else {
        1.0 / m2
    }
}

#[inline]
pub fn absorbs_delta(delta: [f64; 3], k: &FeedbackConstants, sigma: [f64; 3], threshold: f64) -> bool {
    feedback_mahalanobis_sq(delta, k, sigma).powf(1.5) < threshold
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(a: f64, b: f64, c: f64) -> FeedbackConstants {
        FeedbackConstants::new([a, b, c]).unwrap()
    }

    #[test]
    fn radius_examples() {
        assert_eq!(membrane_radius(1.0, 1.0), 0.5);
        assert_eq!(membrane_radius(2.0, 0.5), 1.0);
        assert!((membrane_radius(3.0, 1e-9) - 3.0).abs() < 1e-8);
        for (s, kk) in [(0.1, 4.0), (5.0, 0.3), (100.0, 2.0)] {
            let r = membrane_radius(s, kk);
            assert!(r <= s && r < 1.0 / kk);
        }
    }

    #[test]
    fn perceived_offset_is_k_sigma() {
        assert_eq!(perceived_membrane_offset(1.0, 1.0), 1.0);
        assert!((perceived_membrane_offset(3.0, 2.0) - 6.0).abs() < 1e-12);
        assert_eq!(perceived_membrane_offset(0.0, 2.0), 0.0);
    }

    #[test]
    fn population_values() {
        let ones = k(1.0, 1.0, 1.0);
        assert_eq!(membrane_population(0, [1.0; 3], &ones, [0.1; 3]).unwrap(), 0.0);
        let base = membrane_population(100, [1.0; 3], &ones, [0.1; 3]).unwrap();
        // 100·2^1.5/π^1.5·0.3·e^{−3/8}, evaluated independently
        assert!((base - 10.473238859774646).abs() < 1e-9, "{base}");
        let doubled = membrane_population(100, [1.0; 3], &ones, [0.2; 3]).unwrap();
        assert!((doubled - 2.0 * base).abs() < 1e-9);
        assert!(matches!(
            membrane_population(5, [1.0, 0.0, 1.0], &ones, [0.1; 3]),
            Err(Error::DegenerateCluster(_))
        ));
        let raw = membrane_population_raw(100, [1.0; 3], [0.5; 3], [0.1; 3]).unwrap();
        assert!((raw - base).abs() < 1e-9);
    }

    #[test]
    fn force_values() {
        let ones = k(1.0, 1.0, 1.0);
        assert!((membrane_force(&ones, [1.0; 3]).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!(membrane_force(&ones, [1e6; 3]).unwrap() > 1e11);
        assert!((membrane_force_raw([1.0; 3]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(membrane_force_raw([0.0; 3]).is_err());
    }

    #[test]
    fn force_increases_with_sigma() {
        let kk = k(0.5, 0.5, 2.0);
        let mut prev = 0.0;
        for s in [0.01, 0.1, 1.0, 10.0] {
            let f = membrane_force(&kk, [s, 1.0, 1.0]).unwrap();
            assert!(f > prev);
            prev = f;
        }
    }

    #[test]
    fn threshold_unit_case() {
        // √(2π³)·(3/4)·e^{3/8}
        let rhs = absorption_threshold(&k(1.0, 1.0, 1.0), [1.0; 3]);
        assert!((rhs - 8.593330220479332).abs() < 1e-12);
        let ones = k(1.0, 1.0, 1.0);
        assert!(absorbs_delta([1.0; 3], &ones, [1.0; 3], rhs));
        assert!(!absorbs_delta([1.5; 3], &ones, [1.0; 3], rhs));
        assert!(absorbs_delta([0.0; 3], &ones, [1.0; 3], rhs));
    }

    #[test]
    fn pull_examples() {
        let kk = k(0.5, 0.5, 2.0);
        let sigma = [2.0, 3.0, 0.5];
        assert_eq!(pull_from_delta([0.0; 3], &kk, sigma), f64::INFINITY);
        assert!((pull_from_delta([4.0, 0.0, 0.0], &kk, sigma) - 1.0).abs() < 1e-15);
        let d = [1.0, -2.0, 0.3];
        let p1 = pull_from_delta(d, &kk, sigma);
        let p2 = pull_from_delta(d, &k(1.0, 1.0, 4.0), sigma);
        assert!((p1 / 4.0 - p2).abs() < 1e-15);
    }
}
