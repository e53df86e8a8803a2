//! Crystal-based noise suppression.
//!
//! Pole-Zero crystals with an unusually wide magnitude spread and
//! pole-Infinity crystals with an unusually high mean magnitude are taken to
//! be noise, as are points no crystal absorbed. Their magnitudes are zeroed.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Channel, Grid, Image};
use crate::isms::{fit, Clustering, EngineParams, Space};
use crate::quality::{psnr, ssim, SsimParams};
use crate::spectral::{apply_magnitudes, build_point_cloud, forward_spectrum, inverse_spectrum, magnitude_grid, SpectralAxis};
use crate::topology::{PlaneDims, PoleLabel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseThresholds {
    pub dev_percentile: f64,
    pub mag_percentile: f64,
    pub protect_dc_radius: f64,
}

impl Default for NoiseThresholds {
    fn default() -> Self {
        Self {
            dev_percentile: 90.0,
            mag_percentile: 90.0,
            protect_dc_radius: 32.0,
        }
    }
}

impl NoiseThresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("dev_percentile", self.dev_percentile), ("mag_percentile", self.mag_percentile)] {
            if !(p > 0.0 && p < 100.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 100), got {p}")));
            }
        }
        if !(self.protect_dc_radius >= 0.0) || !self.protect_dc_radius.is_finite() {
            return Err(Error::invalid("protect_dc_radius must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Outcome of [`flag_noise_clusters`].
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseFlags {
    pub clusters: BTreeSet<usize>,
    /// Centered-grid indices of flagged cells, cluster members and unassigned alike.
    pub cells: BTreeSet<usize>,
    pub suspected_pct: f64,
}

/// Linear-interpolated percentile of `values` (sorted in place).
pub fn percentile(values: &mut [f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let rank = p / 100.0 * (values.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    Some(values[lo] + (values[hi] - values[lo]) * (rank - lo as f64))
}

fn cell_freq(idx: usize, dims: PlaneDims) -> (f64, f64) {
    let (w, h) = (dims.width(), dims.height());
    let (u, v) = crate::spectral::centered_freq(idx % w, idx / w, w, h);
    (u as f64, v as f64)
}

pub fn flag_noise_clusters(clustering: &Clustering, thresholds: &NoiseThresholds) -> Result<NoiseFlags> {
    thresholds.validate()?;
    if clustering.assignment.is_empty() {
        return Err(Error::invalid("empty clustering"));
    }
    let Space::Spectral { dims, .. } = clustering.space else {
        return Err(Error::invalid("noise flagging needs a spectral clustering"));
    };
    if clustering.assignment.len() != dims.cells() {
        return Err(Error::invalid("assignment does not cover the frequency plane"));
    }
    let protected = |u: f64, v: f64| dims.dc_distance(u, v) <= thresholds.protect_dc_radius;

    let mut zero_devs: Vec<f64> = Vec::new();
    let mut inf_means: Vec<f64> = Vec::new();
    for c in &clustering.clusters {
        match c.pole() {
            PoleLabel::Zero => zero_devs.push(c.sigma()[2]),
            PoleLabel::Infinity => inf_means.push(c.mu()[2]),
        }
    }
    let dev_cut = percentile(&mut zero_devs, thresholds.dev_percentile);
    let mag_cut = percentile(&mut inf_means, thresholds.mag_percentile);

    // crystals are conjugate-symmetric, so a low-frequency crystal's centroid
    // sits on DC however far its members reach; protection is judged per cell
    let mut flagged = BTreeSet::new();
    let mut exposed = vec![false; clustering.clusters.len()];
    for (idx, a) in clustering.assignment.iter().enumerate() {
        if let Some(id) = a {
            let (u, v) = cell_freq(idx, dims);
            if !protected(u, v) {
                let pos = clustering.clusters.iter().position(|c| c.id() == *id).expect("live cluster");
                exposed[pos] = true;
            }
        }
    }
    for (c, &open) in clustering.clusters.iter().zip(&exposed) {
        let hit = match c.pole() {
            PoleLabel::Zero => dev_cut.is_some_and(|cut| c.sigma()[2] > cut),
            PoleLabel::Infinity => mag_cut.is_some_and(|cut| c.mu()[2] > cut),
        };
        if hit && open {
            flagged.insert(c.id());
        }
    }

    let mut cells = BTreeSet::new();
    for (idx, a) in clustering.assignment.iter().enumerate() {
        let (u, v) = cell_freq(idx, dims);
        let take = !protected(u, v) && a.is_none_or(|id| flagged.contains(&id));
        if take {
            cells.insert(idx);
        }
    }
    let suspected_pct = cells.len() as f64 * 100.0 / dims.cells() as f64;
    Ok(NoiseFlags {
        clusters: flagged,
        cells,
        suspected_pct,
    })
}

/// Adds the conjugate mirror `(−u, −v)` of every cell.
pub fn symmetrize(cells: &BTreeSet<usize>, dims: PlaneDims) -> BTreeSet<usize> {
    let (w, h) = (dims.width() as i64, dims.height() as i64);
    let mut out = cells.clone();
    for &idx in cells {
        let (u, v) = cell_freq(idx, dims);
        let x = (-(u as i64) + w / 2).rem_euclid(w);
        let y = (-(v as i64) + h / 2).rem_euclid(h);
        out.insert((y * w + x) as usize);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelReport {
    pub channel: Channel,
    pub flagged_clusters: Vec<usize>,
    pub clusters: usize,
    pub zeroed_cells: usize,
    pub suspected_pct: f64,
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_float")]
    pub psnr_before: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_float")]
    pub psnr_after: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ssim_before: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ssim_after: Option<f64>,
}

mod opt_float {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => crate::quality::float_or_inf::serialize(x, s),
            None => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DenoiseReport {
    pub channels: Vec<ChannelReport>,
}

/// Denoises one plane; returns the filtered plane and its zeroed cell set.
pub fn denoise_plane(
    noisy: &Grid,
    channel: Channel,
    params: &EngineParams,
    thresholds: &NoiseThresholds,
) -> Result<(Grid, NoiseFlags, BTreeSet<usize>, usize)> {
    let spec = forward_spectrum(noisy)?.centered();
    let (w, h) = spec.dims();
    let dims = PlaneDims::new(w, h)?;
    let points = build_point_cloud(&spec, SpectralAxis::Magnitude, channel);
    let clustering = fit(&points, params, dims, SpectralAxis::Magnitude)?;
    let flags = flag_noise_clusters(&clustering, thresholds)?;
    let zeroed = symmetrize(&flags.cells, dims);
    let mut mags = magnitude_grid(&spec);
    for &idx in &zeroed {
        mags.as_mut_slice()[idx] = 0.0;
    }
    let out = inverse_spectrum(&apply_magnitudes(&spec, &mags)?)?;
    Ok((out, flags, zeroed, clustering.len()))
}

/// Per-channel denoising. With a clean `reference`, the report carries
/// quality before and after (the output is scored after 8-bit quantization).
pub fn denoise_image(
    noisy: &Image,
    params: &EngineParams,
    thresholds: &NoiseThresholds,
    reference: Option<&Image>,
) -> Result<(Image, DenoiseReport)> {
    params.validate()?;
    thresholds.validate()?;
    if let Some(r) = reference {
        if r.dims() != noisy.dims() || r.channel_tags() != noisy.channel_tags() {
            return Err(Error::dims(noisy.dims(), r.dims()));
        }
    }
    let results = noisy
        .channel_tags()
        .par_iter()
        .zip(noisy.planes().par_iter())
        .map(|(&ch, plane)| denoise_plane(plane, ch, params, thresholds).map(|r| (ch, plane, r)))
        .collect::<Result<Vec<_>>>()?;

    let mut planes = Vec::with_capacity(results.len());
    let mut channels = Vec::with_capacity(results.len());
    for (i, (ch, noisy_plane, (out, flags, zeroed, n_clusters))) in results.into_iter().enumerate() {
        let cells = out.dims().0 * out.dims().1;
        let mut rep = ChannelReport {
            channel: ch,
            flagged_clusters: flags.clusters.iter().copied().collect(),
            clusters: n_clusters,
            zeroed_cells: zeroed.len(),
            suspected_pct: zeroed.len() as f64 * 100.0 / cells as f64,
            psnr_before: None,
            psnr_after: None,
            ssim_before: None,
            ssim_after: None,
        };
        if let Some(r) = reference {
            let clean = &r.planes()[i];
            let q = out.quantized();
            let sp = SsimParams::standard(255.0);
            rep.psnr_before = Some(psnr(clean, noisy_plane, 255.0)?);
            rep.psnr_after = Some(psnr(clean, &q, 255.0)?);
            rep.ssim_before = Some(ssim(clean, noisy_plane, sp)?);
            rep.ssim_after = Some(ssim(clean, &q, sp)?);
        }
        planes.push(out);
        channels.push(rep);
    }
    Ok((Image::from_planes(planes)?, DenoiseReport { channels }))
}

/// `Poisson(peak·p/max)·max/peak + Normal(0, read_sigma)` per pixel, unclamped.
pub fn corrupt_poisson_gaussian(clean: &Image, peak: f64, read_sigma: f64, max_value: f64, seed: u64) -> Result<Image> {
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::invalid(format!("peak must be positive, got {peak}")));
    }
    if !(read_sigma >= 0.0) || !read_sigma.is_finite() {
        return Err(Error::invalid(format!("read_sigma must be >= 0, got {read_sigma}")));
    }
    if !(max_value > 0.0) || !max_value.is_finite() {
        return Err(Error::invalid("max_value must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let read = Normal::new(0.0, read_sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut planes = Vec::with_capacity(clean.planes().len());
    for plane in clean.planes() {
        let mut out = Vec::with_capacity(plane.as_slice().len());
        for &p in plane.as_slice() {
            let lambda = peak * p.max(0.0) / max_value;
            let shot = if lambda > 0.0 {
                Poisson::new(lambda).map_err(|e| Error::invalid(e.to_string()))?.sample(&mut rng)
            } else {
                0.0
            };
            out.push(shot * max_value / peak + read.sample(&mut rng));
        }
        planes.push(Grid::from_vec(plane.width(), plane.height(), out)?);
    }
    Image::from_planes(planes)
}
