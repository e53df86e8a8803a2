//! The fit loop.
//!
//! 1. Seeding: each local maximum bin of a coarse histogram becomes a seed
//!    cluster holding that bin's points; the `seed_count` fullest are kept.
//!    Spectral clouds are histogrammed along the third coordinate only (u, v
//!    are uniformly occupied); Euclidean clouds on a cubic grid. A singleton
//!    at `sigma_floor` would absorb nothing, hence whole bins.
//! 2. Passes: every cluster is first re-anchored on its members' mean
//!    (circular on wrapped axes). Then, against a frozen snapshot of the clusters, every point picks
//!    the cluster that absorbs it with the largest outsider pull (ties go to
//!    the lower id), or none. Changes are then committed with
//!    absorb/release; a cluster that loses its last member is deleted.
//! 3. Merging: after each commit, two clusters merge when either centroid is
//!    absorbed by the other. The lower id survives.
//!
//! The fit converges on the first pass with no membership change and no merge.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectral::{FeaturePoint, SpectralAxis};
use crate::topology::{PlaneDims, PoleLabel};

use super::{Cluster, EngineParams, Space};

/// Cluster id of a point, or `None` when no cluster absorbed it.
pub type Assignment = Option<usize>;

/// Result of [`fit`].
#[derive(Debug, Clone)]
pub struct Clustering {
    pub clusters: Vec<Cluster>,
    pub assignment: Vec<Assignment>,
    pub iterations_used: usize,
    pub converged: bool,
    pub space: Space,
}

impl Clustering {
    pub fn cluster(&self, id: usize) -> Option<&Cluster> {
        self.clusters.iter().find(|c| c.id() == id)
    }

    pub fn unassigned_count(&self) -> usize {
        self.assignment.iter().filter(|a| a.is_none()).count()
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Membership sets and the assignment vector describe the same partition.
    pub fn is_consistent(&self) -> bool {
        let mut seen = vec![false; self.assignment.len()];
        for c in &self.clusters {
            for idx in c.members() {
                if idx >= seen.len() || seen[idx] || self.assignment[idx] != Some(c.id()) {
                    return false;
                }
                seen[idx] = true;
            }
        }
        let mut ids: Vec<_> = self.clusters.iter().map(|c| c.id()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len() == self.clusters.len()
            && self
                .assignment
                .iter()
                .zip(&seen)
                .all(|(a, s)| a.is_some() == *s)
    }

    /// Cluster dump, one row per cluster:
    /// `cluster_id,mu_u,mu_v,mu_a,sigma_u,sigma_v,sigma_a,n,pole`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cluster_id,mu_u,mu_v,mu_a,sigma_u,sigma_v,sigma_a,n,pole\n");
        for c in &self.clusters {
            let (m, s) = (c.mu(), c.sigma());
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                c.id(),
                m[0],
                m[1],
                m[2],
                s[0],
                s[1],
                s[2],
                c.n(),
                c.pole().name()
            ));
        }
        out
    }

    pub fn pole_counts(&self) -> (usize, usize) {
        self.clusters.iter().fold((0, 0), |(z, i), c| match c.pole() {
            PoleLabel::Zero => (z + 1, i),
            PoleLabel::Infinity => (z, i + 1),
        })
    }
}

/// Clusters a spectral point cloud.
pub fn fit(points: &[FeaturePoint], params: &EngineParams, dims: PlaneDims, axis: SpectralAxis) -> Result<Clustering> {
    let coords: Vec<[f64; 3]> = points.iter().map(FeaturePoint::coords).collect();
    fit_coords(&coords, params, Space::spectral(dims, axis))
}

/// Clusters raw coordinates in the given space.
pub fn fit_coords(coords: &[[f64; 3]], params: &EngineParams, space: Space) -> Result<Clustering> {
    if coords.is_empty() {
        return Err(Error::invalid("cannot cluster an empty point set"));
    }
    params.validate()?;
    if coords.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("point coordinates must be finite"));
    }

    let mut clusters = Vec::new();
    let mut assignment: Vec<Assignment> = vec![None; coords.len()];
    for (id, members) in density_seeds(coords, params.seed_count, space).into_iter().enumerate() {
        let list: Vec<_> = members.iter().map(|&i| (i, coords[i])).collect();
        let c = Cluster::from_members(id, &list, params.k, params.sigma_floor, space)?;
        for &i in &members {
            assignment[i] = Some(id);
        }
        clusters.push(c);
    }

    let mut converged = false;
    let mut iterations_used = 0;
    while iterations_used < params.max_iterations {
        iterations_used += 1;
        for c in &mut clusters {
            c.recenter();
        }
        let proposal = assign_pass(coords, &clusters);
        let changed = commit(coords, &mut clusters, &mut assignment, &proposal)?;
        let merged = merge_pass(&mut clusters, &mut assignment);
        if changed == 0 && merged == 0 {
            converged = true;
            break;
        }
    }

    Ok(Clustering {
        clusters,
        assignment,
        iterations_used,
        converged,
        space,
    })
}

// Best absorbing cluster per point against a frozen snapshot.
fn assign_pass(coords: &[[f64; 3]], clusters: &[Cluster]) -> Vec<Assignment> {
    let reaches: Vec<[f64; 3]> = clusters.iter().map(Cluster::reach).collect();
    coords
        .par_iter()
        .map(|&x| {
            let mut best: Option<(f64, usize)> = None;
            for (c, reach) in clusters.iter().zip(&reaches) {
                let d = c.delta(x);
                if (0..3).any(|i| d[i].abs() > reach[i]) || !c.absorbs(x) {
                    continue;
                }
                let pull = c.pull(x);
                let better = match best {
                    None => true,
                    Some((p, id)) => pull > p || (pull == p && c.id() < id),
                };
                if better {
                    best = Some((pull, c.id()));
                }
            }
            best.map(|(_, id)| id)
        })
        .collect()
}

fn position(clusters: &[Cluster], id: usize) -> usize {
    clusters
        .iter()
        .position(|c| c.id() == id)
        .expect("assignment refers to a live cluster")
}

fn commit(
    coords: &[[f64; 3]],
    clusters: &mut Vec<Cluster>,
    assignment: &mut [Assignment],
    proposal: &[Assignment],
) -> Result<usize> {
    let mut changed = 0;
    let mut emptied = Vec::new();
    // joins first so that no cluster is emptied by a departure it would survive
    for (i, (&old, &new)) in assignment.iter().zip(proposal).enumerate() {
        if old != new {
            changed += 1;
            if let Some(id) = new {
                let pos = position(clusters, id);
                clusters[pos].absorb(i, coords[i])?;
            }
        }
    }
    for (i, (old, &new)) in assignment.iter_mut().zip(proposal).enumerate() {
        if *old != new {
            if let Some(id) = *old {
                let pos = position(clusters, id);
                if clusters[pos].n() == 1 {
                    emptied.push(id);
                } else {
                    clusters[pos].release(i)?;
                }
            }
            *old = new;
        }
    }
    clusters.retain(|c| !emptied.contains(&c.id()));
    Ok(changed)
}

fn merge_pass(clusters: &mut Vec<Cluster>, assignment: &mut [Assignment]) -> usize {
    let mut merged = 0;
    let mut i = 0;
    while i < clusters.len() {
        let mut j = i + 1;
        while j < clusters.len() {
            let (a, b) = (&clusters[i], &clusters[j]);
            if a.absorbs(b.mu()) || b.absorbs(a.mu()) {
                let (keep, drop) = if a.id() < b.id() { (i, j) } else { (j, i) };
                let donor = clusters[drop].clone();
                clusters[keep].merge_from(&donor);
                let keep_id = clusters[keep].id();
                for idx in donor.members() {
                    assignment[idx] = Some(keep_id);
                }
                clusters.remove(drop);
                merged += 1;
                if drop == i {
                    // the survivor moved into slot i - 1 ordering; restart this row
                    j = i + 1;
                    continue;
                }
            } else {
                j += 1;
            }
        }
        i += 1;
    }
    merged
}

/// Member lists of the densest local maxima of a coarse histogram.
fn density_seeds(coords: &[[f64; 3]], seed_count: usize, space: Space) -> Vec<Vec<usize>> {
    match space {
        // every (u, v) holds exactly one point, so only the third axis carries density
        Space::Spectral { .. } => axis_seeds(coords, seed_count, space),
        Space::Euclidean => grid_seeds(coords, seed_count),
    }
}

/// Local maxima over the 26-neighbourhood of a cubic grid with about
/// `cbrt(n)` bins per axis. Equal neighbours resolve to the lower bin index.
fn grid_seeds(coords: &[[f64; 3]], seed_count: usize) -> Vec<Vec<usize>> {
    let n = coords.len();
    let bins = ((n as f64).cbrt().round() as usize).clamp(1, 64);
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for x in coords {
        for a in 0..3 {
            lo[a] = lo[a].min(x[a]);
            hi[a] = hi[a].max(x[a]);
        }
    }
    let bin_of = |x: &[f64; 3]| -> [usize; 3] {
        std::array::from_fn(|a| {
            let span = hi[a] - lo[a];
            if span <= 0.0 {
                0
            } else {
                (((x[a] - lo[a]) / span * bins as f64).floor() as usize).min(bins - 1)
            }
        })
    };
    let flat = |b: [usize; 3]| (b[2] * bins + b[1]) * bins + b[0];
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); bins * bins * bins];
    for (i, x) in coords.iter().enumerate() {
        cells[flat(bin_of(x))].push(i);
    }
    let mut maxima = Vec::new();
    for z in 0..bins {
        for y in 0..bins {
            for x in 0..bins {
                let here = flat([x, y, z]);
                let c = cells[here].len();
                if c == 0 {
                    continue;
                }
                let mut is_max = true;
                'scan: for dz in -1isize..=1 {
                    for dy in -1isize..=1 {
                        for dx in -1isize..=1 {
                            let nb = [x as isize + dx, y as isize + dy, z as isize + dz];
                            if (dx, dy, dz) == (0, 0, 0) || nb.iter().any(|&v| v < 0 || v >= bins as isize) {
                                continue;
                            }
                            let other = flat(nb.map(|v| v as usize));
                            let o = cells[other].len();
                            if o > c || (o == c && other < here) {
                                is_max = false;
                                break 'scan;
                            }
                        }
                    }
                }
                if is_max {
                    maxima.push((c, here));
                }
            }
        }
    }
    maxima.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    maxima.truncate(seed_count);
    maxima.into_iter().map(|(_, b)| std::mem::take(&mut cells[b])).collect()
}

/// Local maxima of a histogram of the third coordinate, `round(2·sqrt(n))`
/// bins, periodic on the phase axis.
fn axis_seeds(coords: &[[f64; 3]], seed_count: usize, space: Space) -> Vec<Vec<usize>> {
    let n = coords.len();
    let bins = (((n as f64).sqrt() * 2.0).round() as usize).clamp(1, 1024);
    let periodic = matches!(space, Space::Spectral { axis: SpectralAxis::Phase, .. });
    let (lo, hi) = if periodic {
        (-std::f64::consts::PI, std::f64::consts::PI)
    } else {
        coords
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x[2]), hi.max(x[2])))
    };
    let span = hi - lo;
    let bin_of = |a: f64| -> usize {
        if span <= 0.0 {
            return 0;
        }
        let b = ((a - lo) / span * bins as f64).floor() as isize;
        if periodic {
            b.rem_euclid(bins as isize) as usize
        } else {
            b.clamp(0, bins as isize - 1) as usize
        }
    };
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); bins];
    for (i, x) in coords.iter().enumerate() {
        cells[bin_of(x[2])].push(i);
    }
    let count = |b: isize| -> Option<usize> {
        if periodic {
            Some(cells[b.rem_euclid(bins as isize) as usize].len())
        } else if b < 0 || b >= bins as isize {
            None
        } else {
            Some(cells[b as usize].len())
        }
    };
    let mut maxima = Vec::new();
    for b in 0..bins {
        let c = cells[b].len();
        if c == 0 {
            continue;
        }
        let bi = b as isize;
        // plateaus keep only their lowest bin
        let left_ok = count(bi - 1).is_none_or(|l| l < c || (l == c && (bi - 1).rem_euclid(bins as isize) as usize > b));
        let right_ok = count(bi + 1).is_none_or(|r| r <= c && !(r == c && ((bi + 1).rem_euclid(bins as isize) as usize) < b));
        if left_ok && right_ok {
            maxima.push((c, b));
        }
    }
    maxima.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    maxima.truncate(seed_count);
    maxima.into_iter().map(|(_, b)| std::mem::take(&mut cells[b])).collect()
}
