use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::spectral::FeaturePoint;
use crate::topology::PoleLabel;

use super::membrane::{absorbs_delta, absorption_threshold, pull_from_delta};
use super::{FeedbackConstants, Space};

/// A diagonal Gaussian cluster with running accumulators.
///
/// Member coordinates are stored as displacements from an anchor, so sums
/// stay linear across the wrapped axes and a release exactly undoes the
/// matching absorb. The anchor only moves in [`Cluster::recenter`].
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    id: usize,
    space: Space,
    k: FeedbackConstants,
    sigma_floor: f64,
    anchor: [f64; 3],
    members: BTreeMap<usize, [f64; 3]>,
    sum: [f64; 3],
    sum_sq: [f64; 3],
    mu: [f64; 3],
    sigma: [f64; 3],
    pole: PoleLabel,
    threshold: f64,
}

impl Cluster {
    pub fn singleton(
        id: usize,
        index: usize,
        x: [f64; 3],
        k: FeedbackConstants,
        sigma_floor: f64,
        space: Space,
    ) -> Self {
        let mut c = Cluster {
            id,
            space,
            k,
            sigma_floor,
            anchor: x,
            members: BTreeMap::new(),
            sum: [0.0; 3],
            sum_sq: [0.0; 3],
            mu: x,
            sigma: [sigma_floor; 3],
            pole: PoleLabel::Zero,
            threshold: 0.0,
        };
        c.insert(index, x);
        c.refresh();
        c
    }

    /// Builds a cluster from a nonempty member list, anchored at its wrapped mean.
    pub fn from_members(
        id: usize,
        members: &[(usize, [f64; 3])],
        k: FeedbackConstants,
        sigma_floor: f64,
        space: Space,
    ) -> Result<Self> {
        let (&(first, x0), rest) = members
            .split_first()
            .ok_or_else(|| Error::invalid("a cluster needs at least one member"))?;
        let mut c = Self::singleton(id, first, x0, k, sigma_floor, space);
        for &(idx, x) in rest {
            if c.members.contains_key(&idx) {
                return Err(Error::Logic(format!("point {idx} listed twice")));
            }
            c.insert(idx, x);
        }
        c.recenter();
        Ok(c)
    }

    #[inline]
    pub fn id(&self) -> usize {
        self.id
    }

    #[inline]
    pub fn mu(&self) -> [f64; 3] {
        self.mu
    }

    #[inline]
    pub fn sigma(&self) -> [f64; 3] {
        self.sigma
    }

    #[inline]
    pub fn k(&self) -> &FeedbackConstants {
        &self.k
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.members.len()
    }

    #[inline]
    pub fn pole(&self) -> PoleLabel {
        self.pole
    }

    #[inline]
    pub fn space(&self) -> Space {
        self.space
    }

    /// Cached right-hand side of the absorption inequality.
    #[inline]
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.keys().copied()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.members.contains_key(&index)
    }

    #[inline]
    pub fn delta(&self, x: [f64; 3]) -> [f64; 3] {
        self.space.delta(x, self.mu)
    }

    /// Outsider pull at coordinates `x`; infinite at the centroid.
    #[inline]
    pub fn pull(&self, x: [f64; 3]) -> f64 {
        pull_from_delta(self.delta(x), &self.k, self.sigma)
    }

    #[inline]
    pub fn absorbs(&self, x: [f64; 3]) -> bool {
        absorbs_delta(self.delta(x), &self.k, self.sigma, self.threshold)
    }

    /// Largest per-axis `|Δᵢ|` any absorbed point can have.
    pub fn reach(&self) -> [f64; 3] {
        let m = self.threshold.powf(1.0 / 3.0);
        [0, 1, 2].map(|i| m * self.sigma[i] / self.k.get(i))
    }

    pub fn absorb(&mut self, index: usize, x: [f64; 3]) -> Result<()> {
        if self.members.contains_key(&index) {
            return Err(Error::Logic(format!(
                "point {index} is already a member of cluster {}",
                self.id
            )));
        }
        self.insert(index, x);
        self.refresh();
        Ok(())
    }

    /// Releases a member. Releasing the last member is refused; the engine
    /// deletes such clusters instead.
    pub fn release(&mut self, index: usize) -> Result<()> {
        if !self.members.contains_key(&index) {
            return Err(Error::Logic(format!(
                "point {index} is not a member of cluster {}",
                self.id
            )));
        }
        if self.members.len() == 1 {
            return Err(Error::Logic(format!(
                "cannot release the last member of cluster {}",
                self.id
            )));
        }
        let d = self.members.remove(&index).expect("checked above");
        for i in 0..3 {
            self.sum[i] -= d[i];
            self.sum_sq[i] -= d[i] * d[i];
        }
        self.refresh();
        Ok(())
    }

    /// Takes over every member of `other`.
    pub(crate) fn merge_from(&mut self, other: &Cluster) {
        for (&idx, d) in &other.members {
            let x = [0, 1, 2].map(|i| other.anchor[i] + d[i]);
            self.insert(idx, x);
        }
        self.refresh();
    }

    /// Moves the anchor to the circular mean of the members on wrapped axes
    /// (arithmetic mean on flat ones) and rebuilds the accumulators.
    ///
    /// Anchor-relative sums only give the true wrapped mean while the members
    /// stay within half a period of the anchor; recentering restores that.
    pub(crate) fn recenter(&mut self) {
        let points: Vec<(usize, [f64; 3])> = self
            .members
            .iter()
            .map(|(&i, d)| (i, [0, 1, 2].map(|k| self.anchor[k] + d[k])))
            .collect();
        let n = points.len() as f64;
        let mut anchor = self.anchor;
        for (k, period) in self.space.periods().into_iter().enumerate() {
            match period {
                Some(p) => {
                    let (mut s, mut c) = (0.0, 0.0);
                    for (_, x) in &points {
                        let t = std::f64::consts::TAU * x[k] / p;
                        s += t.sin();
                        c += t.cos();
                    }
                    // a balanced ring has no preferred direction; keep the old anchor
                    if s.hypot(c) > 1e-9 * n {
                        anchor[k] = s.atan2(c) * p / std::f64::consts::TAU;
                    }
                }
                None => anchor[k] = points.iter().map(|(_, x)| x[k]).sum::<f64>() / n,
            }
        }
        self.anchor = anchor;
        self.members.clear();
        self.sum = [0.0; 3];
        self.sum_sq = [0.0; 3];
        for (i, x) in points {
            self.insert(i, x);
        }
        self.refresh();
    }

    fn insert(&mut self, index: usize, x: [f64; 3]) {
        let d = self.space.delta(x, self.anchor);
        for i in 0..3 {
            self.sum[i] += d[i];
            self.sum_sq[i] += d[i] * d[i];
        }
        self.members.insert(index, d);
    }

    fn refresh(&mut self) {
        let n = self.members.len() as f64;
        let mut mu = [0.0; 3];
        for i in 0..3 {
            let mean = self.sum[i] / n;
            let var = (self.sum_sq[i] / n - mean * mean).max(0.0);
            mu[i] = self.anchor[i] + mean;
            self.sigma[i] = var.sqrt().max(self.sigma_floor);
        }
        self.mu = self.space.wrap_centroid(mu);
        self.pole = self.space.pole(self.mu);
        self.threshold = absorption_threshold(&self.k, self.sigma);
    }
}

/// Pull a spectral point exerts on a cluster centroid.
pub fn outsider_pull(x: &FeaturePoint, c: &Cluster) -> f64 {
    c.pull(x.coords())
}

/// Whether cluster `c` captures point `x`.
pub fn absorption_test(x: &FeaturePoint, c: &Cluster) -> bool {
    c.absorbs(x.coords())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Channel;
    use crate::spectral::SpectralAxis;
    use crate::topology::PlaneDims;

    fn k() -> FeedbackConstants {
        FeedbackConstants::spectral_default()
    }

    fn batch_stats(points: &[[f64; 3]]) -> ([f64; 3], [f64; 3]) {
        let n = points.len() as f64;
        let mut mu = [0.0; 3];
        let mut sd = [0.0; 3];
        for i in 0..3 {
            mu[i] = points.iter().map(|p| p[i]).sum::<f64>() / n;
            sd[i] = (points.iter().map(|p| (p[i] - mu[i]).powi(2)).sum::<f64>() / n).sqrt();
        }
        (mu, sd)
    }

    #[test]
    fn matches_batch_recompute() {
        let pts = [[1.0, 2.0, 0.5], [3.0, -1.0, 1.5], [2.0, 0.5, 4.0]];
        let members: Vec<_> = pts.iter().copied().enumerate().collect();
        let c = Cluster::from_members(0, &members, k(), 1e-3, Space::Euclidean).unwrap();
        let (mu, sd) = batch_stats(&pts);
        for i in 0..3 {
            assert!((c.mu()[i] - mu[i]).abs() < 1e-12);
            assert!((c.sigma()[i] - sd[i]).abs() < 1e-12);
        }
        assert_eq!(c.n(), 3);
    }

    #[test]
    fn absorb_release_is_reversible() {
        let space = Space::spectral(PlaneDims::new(16, 16).unwrap(), SpectralAxis::Magnitude);
        let members = [(0, [1.0, 1.0, 3.0]), (1, [2.0, 0.0, 3.5]), (2, [0.0, 2.0, 2.5])];
        let mut c = Cluster::from_members(4, &members, k(), 1e-3, space).unwrap();
        let before = c.clone();
        c.absorb(9, [7.0, -8.0, 1.0]).unwrap();
        c.release(9).unwrap();
        for i in 0..3 {
            assert!((c.mu()[i] - before.mu()[i]).abs() < 1e-9);
            assert!((c.sigma()[i] - before.sigma()[i]).abs() < 1e-9);
        }
        assert!((c.threshold() - before.threshold()).abs() < 1e-9);
        assert_eq!(c.members().collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn absorbing_the_centroid_keeps_mu_and_tightens() {
        let members = [(0, [0.0, 0.0, 1.0]), (1, [2.0, 2.0, 3.0])];
        let mut c = Cluster::from_members(0, &members, k(), 1e-3, Space::Euclidean).unwrap();
        let (mu, sigma) = (c.mu(), c.sigma());
        c.absorb(2, mu).unwrap();
        for i in 0..3 {
            assert!((c.mu()[i] - mu[i]).abs() < 1e-12);
            assert!(c.sigma()[i] < sigma[i]);
        }
        let mut single = Cluster::singleton(0, 0, [1.0, 1.0, 1.0], k(), 1e-3, Space::Euclidean);
        single.absorb(1, [1.0, 1.0, 1.0]).unwrap();
        assert_eq!(single.sigma(), [1e-3; 3]);
    }

    #[test]
    fn membership_errors() {
        let mut c = Cluster::singleton(0, 3, [0.0; 3], k(), 1e-3, Space::Euclidean);
        assert!(matches!(c.release(3), Err(Error::Logic(_))));
        assert!(matches!(c.release(8), Err(Error::Logic(_))));
        assert!(matches!(c.absorb(3, [1.0; 3]), Err(Error::Logic(_))));
    }

    #[test]
    fn centroid_wraps_across_the_corner() {
        let dims = PlaneDims::new(8, 8).unwrap();
        let space = Space::spectral(dims, SpectralAxis::Magnitude);
        let members = [(0, [-4.0, -4.0, 1.0]), (1, [3.0, 3.0, 1.0])];
        let c = Cluster::from_members(0, &members, k(), 1e-3, space).unwrap();
        // the two corners are adjacent, so the mean sits between them through the wrap
        assert!((c.mu()[0] - 3.5).abs() < 1e-9);
        assert!((c.mu()[1] - 3.5).abs() < 1e-9);
        assert!((c.sigma()[0] - 0.5).abs() < 1e-12);
        assert_eq!(c.pole(), PoleLabel::Infinity);
    }

    #[test]
    fn free_functions_use_cluster_geometry() {
        let c = Cluster::from_members(
            0,
            &[(0, [0.0, 0.0, 1.0]), (1, [2.0, 0.0, 1.0]), (2, [0.0, 2.0, 3.0])],
            k(),
            1e-3,
            Space::spectral(PlaneDims::new(8, 8).unwrap(), SpectralAxis::Magnitude),
        )
        .unwrap();
        let mu = c.mu();
        let p = FeaturePoint {
            u: 0,
            v: 0,
            a: mu[2],
            channel: Channel::Gray,
            source_index: 0,
        };
        let d = c.delta(p.coords());
        let m2: f64 = (0..3).map(|i| (c.k().get(i) * d[i] / c.sigma()[i]).powi(2)).sum();
        assert!((outsider_pull(&p, &c) - 1.0 / m2).abs() < 1e-12);
        assert_eq!(absorption_test(&p, &c), m2.powf(1.5) < c.threshold());
    }
}
