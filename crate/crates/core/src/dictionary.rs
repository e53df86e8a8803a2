//! Sparse magnitude dictionaries.
//!
//! Every cell outside the protected disc around DC that belongs to a crystal
//! is stored as its crystal's mean log-magnitude; masked and unassigned cells
//! pass through with their exact magnitude. Phases are kept verbatim.
//! The file layout is described in `docs/formats.md`.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::image::{Channel, Grid, Image};
use crate::isms::{fit, Clustering, EngineParams};
use crate::spectral::{build_point_cloud, forward_spectrum, inverse_spectrum, phase_grid, SpectralAxis, Spectrum};
use crate::topology::PlaneDims;
use crate::wire::{Reader, Writer};

pub const DICT_MAGIC: &[u8; 8] = b"ISMSDICT";
pub const DICT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct DictEntry {
    pub cluster_id: u64,
    pub mean_log_mag: f64,
    pub members: Vec<(i32, i32)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Passthrough {
    pub u: i32,
    pub v: i32,
    pub magnitude: f64,
}

/// A single-channel sparse magnitude representation.
///
/// `phase` is laid out like a centered spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeDictionary {
    pub dims: PlaneDims,
    pub mask_radius: f64,
    pub entries: Vec<DictEntry>,
    pub passthrough: Vec<Passthrough>,
    pub phase: Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SparsityReport {
    pub total_cells: usize,
    pub dictionary_entries: usize,
    pub passthrough_cells: usize,
    pub compression_ratio: f64,
}

impl MagnitudeDictionary {
    /// Checks the mask, the phase grid and that every cell is covered exactly once.
    pub fn validate(&self) -> Result<()> {
        if !(self.mask_radius >= 0.0) || !self.mask_radius.is_finite() {
            return Err(Error::invalid(format!("mask radius {} must be finite and >= 0", self.mask_radius)));
        }
        let (w, h) = (self.dims.width(), self.dims.height());
        if self.phase.dims() != (w, h) {
            return Err(Error::dims((w, h), self.phase.dims()));
        }
        let mut seen = vec![false; w * h];
        let mut mark = |u: i32, v: i32| -> Result<usize> {
            let idx = self
                .cell_index(u, v)
                .ok_or_else(|| Error::CoverageViolation(format!("cell ({u}, {v}) lies outside the {w}x{h} plane")))?;
            if std::mem::replace(&mut seen[idx], true) {
                return Err(Error::CoverageViolation(format!("cell ({u}, {v}) is covered twice")));
            }
            Ok(idx)
        };
        for e in &self.entries {
            if !e.mean_log_mag.is_finite() || e.mean_log_mag < 0.0 {
                return Err(Error::invalid(format!("entry {} has mean {}", e.cluster_id, e.mean_log_mag)));
            }
            for &(u, v) in &e.members {
                mark(u, v)?;
            }
        }
        let mut passed = vec![false; w * h];
        for p in &self.passthrough {
            if !(p.magnitude >= 0.0) || !p.magnitude.is_finite() {
                return Err(Error::invalid(format!("passthrough ({}, {}) has magnitude {}", p.u, p.v, p.magnitude)));
            }
            passed[mark(p.u, p.v)?] = true;
        }
        let covered = seen.iter().filter(|s| **s).count();
        if covered != w * h {
            return Err(Error::CoverageViolation(format!("{} of {} cells uncovered", w * h - covered, w * h)));
        }
        for (u, v) in self.masked_cells() {
            if !passed[self.cell_index(u, v).expect("in range")] {
                return Err(Error::CoverageViolation(format!("masked cell ({u}, {v}) is not passed through")));
            }
        }
        Ok(())
    }

    /// Row-major index of `(u, v)` in a centered grid, if it is in range.
    pub fn cell_index(&self, u: i32, v: i32) -> Option<usize> {
        let (w, h) = (self.dims.width() as i64, self.dims.height() as i64);
        let x = u as i64 + w / 2;
        let y = v as i64 + h / 2;
        ((0..w).contains(&x) && (0..h).contains(&y)).then(|| (y * w + x) as usize)
    }

    fn masked_cells(&self) -> Vec<(i32, i32)> {
        let (w, h) = (self.dims.width(), self.dims.height());
        let mut out = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let (u, v) = crate::spectral::centered_freq(x, y, w, h);
                if self.dims.dc_distance(u as f64, v as f64) <= self.mask_radius {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn report(&self) -> SparsityReport {
        let total = self.dims.cells();
        let entries = self.entries.len();
        let pass = self.passthrough.len();
        SparsityReport {
            total_cells: total,
            dictionary_entries: entries,
            passthrough_cells: pass,
            compression_ratio: (entries + pass) as f64 / total as f64,
        }
    }

    /// Magnitude grid (centered layout) the dictionary describes.
    pub fn magnitudes(&self) -> Result<Grid> {
        self.validate()?;
        let mut mags = Grid::zeros(self.dims.width(), self.dims.height());
        let cells = mags.as_mut_slice();
        for e in &self.entries {
            let m = e.mean_log_mag.exp_m1();
            for &(u, v) in &e.members {
                cells[self.cell_index(u, v).expect("validated")] = m;
            }
        }
        for p in &self.passthrough {
            cells[self.cell_index(p.u, p.v).expect("validated")] = p.magnitude;
        }
        Ok(mags)
    }
}

/// Builds the dictionary of one channel from its spectrum and a magnitude clustering.
pub fn build_dictionary(spec: &Spectrum, clustering: &Clustering, mask_radius: f64) -> Result<(MagnitudeDictionary, SparsityReport)> {
    let spec = spec.centered();
    let (w, h) = spec.dims();
    let dims = PlaneDims::new(w, h)?;
    if clustering.assignment.len() != w * h || clustering.space.dims().is_some_and(|d| d != dims) {
        return Err(Error::invalid(format!(
            "clustering over {} points does not match a {w}x{h} spectrum",
            clustering.assignment.len()
        )));
    }
    if !(mask_radius >= 0.0) || !mask_radius.is_finite() {
        return Err(Error::invalid(format!("mask radius {mask_radius} must be finite and >= 0")));
    }
    let mut by_cluster: std::collections::BTreeMap<usize, Vec<(i32, i32)>> = Default::default();
    let mut passthrough = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            let (u, v) = spec.freq_of(x, y);
            let masked = dims.dc_distance(u as f64, v as f64) <= mask_radius;
            match clustering.assignment[idx] {
                Some(id) if !masked => by_cluster.entry(id).or_default().push((u, v)),
                _ => passthrough.push(Passthrough {
                    u,
                    v,
                    magnitude: spec.coeffs()[idx].norm(),
                }),
            }
        }
    }
    let mut entries = Vec::with_capacity(by_cluster.len());
    for (id, members) in by_cluster {
        let c = clustering
            .cluster(id)
            .ok_or_else(|| Error::Logic(format!("assignment names missing cluster {id}")))?;
        entries.push(DictEntry {
            cluster_id: id as u64,
            mean_log_mag: c.mu()[2].max(0.0),
            members,
        });
    }
    let dict = MagnitudeDictionary {
        dims,
        mask_radius,
        entries,
        passthrough,
        phase: phase_grid(&spec),
    };
    let report = dict.report();
    Ok((dict, report))
}

/// Rebuilds the spatial plane from a dictionary.
pub fn reconstruct(dict: &MagnitudeDictionary) -> Result<Grid> {
    let mags = dict.magnitudes()?;
    let coeffs: Vec<Complex64> = mags
        .as_slice()
        .iter()
        .zip(dict.phase.as_slice())
        .map(|(&m, &p)| Complex64::from_polar(m, p))
        .collect();
    inverse_spectrum(&Spectrum::new(dict.dims.width(), dict.dims.height(), coeffs, true)?)
}

/// Forward transform, magnitude fit and dictionary build for one plane.
pub fn sparsify_plane(
    plane: &Grid,
    channel: Channel,
    params: &EngineParams,
    mask_radius: f64,
) -> Result<(MagnitudeDictionary, SparsityReport)> {
    let spec = forward_spectrum(plane)?;
    let (w, h) = spec.dims();
    let points = build_point_cloud(&spec, SpectralAxis::Magnitude, channel);
    let clustering = fit(&points, params, PlaneDims::new(w, h)?, SpectralAxis::Magnitude)?;
    build_dictionary(&spec, &clustering, mask_radius)
}

/// [`sparsify_plane`] over every channel, in parallel.
pub fn sparsify_image(
    image: &Image,
    params: &EngineParams,
    mask_radius: f64,
) -> Result<Vec<(Channel, MagnitudeDictionary, SparsityReport)>> {
    image
        .channel_tags()
        .par_iter()
        .zip(image.planes().par_iter())
        .map(|(&ch, plane)| {
            let (d, r) = sparsify_plane(plane, ch, params, mask_radius)?;
            Ok((ch, d, r))
        })
        .collect()
}

pub fn reconstruct_image(dicts: &[(Channel, MagnitudeDictionary)]) -> Result<Image> {
    let tags: Vec<Channel> = dicts.iter().map(|(c, _)| *c).collect();
    if tags != [Channel::Gray] && tags != [Channel::R, Channel::G, Channel::B] {
        return Err(Error::invalid(format!("channel set {tags:?} is neither gray nor rgb")));
    }
    let planes = dicts.iter().map(|(_, d)| reconstruct(d)).collect::<Result<Vec<_>>>()?;
    Image::from_planes(planes)
}

fn channel_code(c: Channel) -> u8 {
    match c {
        Channel::Gray => 0,
        Channel::R => 1,
        Channel::G => 2,
        Channel::B => 3,
    }
}

fn channel_from_code(b: u8) -> Result<Channel> {
    Ok(match b {
        0 => Channel::Gray,
        1 => Channel::R,
        2 => Channel::G,
        3 => Channel::B,
        _ => return Err(Error::invalid(format!("unknown channel tag {b}"))),
    })
}

pub(crate) fn write_channel(w: &mut Writer, c: Channel) {
    w.u8(channel_code(c));
}

pub(crate) fn read_channel(r: &mut Reader<'_>) -> Result<Channel> {
    channel_from_code(r.u8("channel tag")?)
}

pub fn encode_dictionary(dict: &MagnitudeDictionary) -> Result<Vec<u8>> {
    encode_channels(&[(Channel::Gray, dict.clone())])
}

/// Serializes one dictionary per channel.
pub fn encode_channels(dicts: &[(Channel, MagnitudeDictionary)]) -> Result<Vec<u8>> {
    let mut w = Writer::new();
    w.bytes(DICT_MAGIC);
    w.u16(DICT_VERSION);
    w.u16(u16::try_from(dicts.len()).map_err(|_| Error::invalid("too many channels"))?);
    for (ch, d) in dicts {
        d.validate()?;
        write_channel(&mut w, *ch);
        w.len(d.dims.width());
        w.len(d.dims.height());
        w.f64(d.mask_radius);
        w.len(d.entries.len());
        for e in &d.entries {
            w.u64(e.cluster_id);
            w.f64(e.mean_log_mag);
            w.len(e.members.len());
            for &(u, v) in &e.members {
                w.i32(u);
                w.i32(v);
            }
        }
        w.len(d.passthrough.len());
        for p in &d.passthrough {
            w.i32(p.u);
            w.i32(p.v);
            w.f64(p.magnitude);
        }
        for &ph in d.phase.as_slice() {
            w.f64(ph);
        }
    }
    Ok(w.finish())
}

pub fn decode_channels(bytes: &[u8]) -> Result<Vec<(Channel, MagnitudeDictionary)>> {
    let mut r = Reader::new(bytes);
    r.expect_magic(DICT_MAGIC, "ISMSDICT")?;
    let version = r.u16("version")?;
    if version != DICT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            supported: DICT_VERSION,
        });
    }
    let n = r.u16("channel count")?;
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let ch = read_channel(&mut r)?;
        let width = r.u32("width")? as usize;
        let height = r.u32("height")? as usize;
        let dims = PlaneDims::new(width, height)?;
        let mask_radius = r.f64("mask radius")?;
        let n_entries = r.count(20, "entry count")?;
        let mut entries = Vec::with_capacity(n_entries);
        for _ in 0..n_entries {
            let cluster_id = r.u64("cluster id")?;
            let mean_log_mag = r.f64("entry mean")?;
            let m = r.count(8, "member count")?;
            let mut members = Vec::with_capacity(m);
            for _ in 0..m {
                members.push((r.i32("member u")?, r.i32("member v")?));
            }
            entries.push(DictEntry {
                cluster_id,
                mean_log_mag,
                members,
            });
        }
        let n_pass = r.count(16, "passthrough count")?;
        let mut passthrough = Vec::with_capacity(n_pass);
        for _ in 0..n_pass {
            passthrough.push(Passthrough {
                u: r.i32("passthrough u")?,
                v: r.i32("passthrough v")?,
                magnitude: r.f64("passthrough magnitude")?,
            });
        }
        let cells = dims.cells();
        if cells.saturating_mul(8) > r.remaining() {
            return Err(Error::Truncated(format!("phase grid needs {} bytes", cells * 8)));
        }
        let phase = (0..cells).map(|_| r.f64("phase")).collect::<Result<Vec<_>>>()?;
        let dict = MagnitudeDictionary {
            dims,
            mask_radius,
            entries,
            passthrough,
            phase: Grid::from_vec(width, height, phase)?,
        };
        dict.validate()?;
        out.push((ch, dict));
    }
    r.expect_end()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isms::{fit_coords, Space};

    fn textured(w: usize, h: usize) -> Grid {
        Grid::from_fn(w, h, |x, y| 100.0 + 40.0 * ((x as f64) * 0.7).sin() + 25.0 * ((x * y) as f64 * 0.05).cos())
    }

    fn fitted(plane: &Grid) -> (Spectrum, Clustering) {
        let spec = forward_spectrum(plane).unwrap();
        let (w, h) = spec.dims();
        let pts = build_point_cloud(&spec, SpectralAxis::Magnitude, Channel::Gray);
        let cl = fit(&pts, &EngineParams::default(), PlaneDims::new(w, h).unwrap(), SpectralAxis::Magnitude).unwrap();
        (spec, cl)
    }

    #[test]
    fn full_mask_is_exact() {
        let plane = textured(16, 12);
        let (spec, cl) = fitted(&plane);
        let (d, rep) = build_dictionary(&spec, &cl, 100.0).unwrap();
        assert!(d.entries.is_empty());
        assert_eq!(rep.passthrough_cells, 16 * 12);
        assert_eq!(rep.compression_ratio, 1.0);
        assert!(reconstruct(&d).unwrap().max_abs_diff(&plane) < 1e-9);
    }

    #[test]
    fn coverage_is_exact() {
        let plane = textured(20, 20);
        let (spec, cl) = fitted(&plane);
        for mask in [0.0, 2.5, 7.0] {
            let (d, rep) = build_dictionary(&spec, &cl, mask).unwrap();
            let members: usize = d.entries.iter().map(|e| e.members.len()).sum();
            assert_eq!(members + rep.passthrough_cells, 400);
            d.validate().unwrap();
        }
    }

    #[test]
    fn single_cluster_collapses_to_one_mean() {
        let plane = textured(8, 8);
        let spec = forward_spectrum(&plane).unwrap();
        let pts = build_point_cloud(&spec, SpectralAxis::Magnitude, Channel::Gray);
        let dims = PlaneDims::new(8, 8).unwrap();
        let members: Vec<_> = pts.iter().map(|p| (p.source_index, p.coords())).collect();
        let c = crate::isms::Cluster::from_members(
            0,
            &members,
            EngineParams::default().k,
            1e-3,
            Space::spectral(dims, SpectralAxis::Magnitude),
        )
        .unwrap();
        let cl = Clustering {
            clusters: vec![c],
            assignment: vec![Some(0); 64],
            iterations_used: 1,
            converged: true,
            space: Space::spectral(dims, SpectralAxis::Magnitude),
        };
        let (d, rep) = build_dictionary(&spec, &cl, 0.0).unwrap();
        assert_eq!(d.entries.len(), 1);
        // DC sits at distance 0 and is always masked
        assert_eq!(rep.passthrough_cells, 1);
        let mags = d.magnitudes().unwrap();
        let m = d.entries[0].mean_log_mag.exp_m1();
        assert_eq!(mags.as_slice().iter().filter(|&&x| x == m).count(), 63);
    }

    #[test]
    fn per_cell_entries_are_exact() {
        let plane = textured(10, 8);
        let spec = forward_spectrum(&plane).unwrap().centered();
        let mut entries = Vec::new();
        let mut pass = Vec::new();
        for y in 0..8 {
            for x in 0..10 {
                let (u, v) = spec.freq_of(x, y);
                let m = spec.cell(x, y).norm();
                if (u, v) == (0, 0) {
                    pass.push(Passthrough { u, v, magnitude: m });
                } else {
                    entries.push(DictEntry {
                        cluster_id: entries.len() as u64,
                        mean_log_mag: m.ln_1p(),
                        members: vec![(u, v)],
                    });
                }
            }
        }
        let d = MagnitudeDictionary {
            dims: PlaneDims::new(10, 8).unwrap(),
            mask_radius: 0.0,
            entries,
            passthrough: pass,
            phase: phase_grid(&spec),
        };
        assert!(reconstruct(&d).unwrap().max_abs_diff(&plane) < 1e-9);
    }

    #[test]
    fn larger_mask_never_hurts() {
        let plane = textured(24, 24);
        let (spec, cl) = fitted(&plane);
        let mut last = f64::INFINITY;
        for mask in [0.0, 3.0, 6.0, 12.0, 20.0] {
            let (d, _) = build_dictionary(&spec, &cl, mask).unwrap();
            let err = crate::quality::mse(&reconstruct(&d).unwrap(), &plane).unwrap();
            assert!(err <= last + 1e-9, "mask {mask}: {err} > {last}");
            last = err;
        }
    }

    #[test]
    fn file_roundtrip_and_errors() {
        let plane = textured(12, 10);
        let (spec, cl) = fitted(&plane);
        let (d, _) = build_dictionary(&spec, &cl, 2.0).unwrap();
        let bytes = encode_channels(&[(Channel::R, d.clone()), (Channel::G, d.clone())]).unwrap();
        let back = decode_channels(&bytes).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].1, d);
        assert_eq!(encode_channels(&back).unwrap(), bytes);

        for cut in [0, 4, 9, 11, 40, bytes.len() - 1] {
            assert!(matches!(decode_channels(&bytes[..cut]), Err(Error::Truncated(_)) | Err(Error::BadMagic { .. })), "cut {cut}");
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(decode_channels(&bad).unwrap_err().code(), 20);
        let mut ver = bytes.clone();
        ver[8] = 9;
        assert_eq!(decode_channels(&ver).unwrap_err().code(), 21);

        let mut broken = d.clone();
        let p = broken.passthrough.pop().unwrap();
        broken.entries.push(DictEntry {
            cluster_id: 99,
            mean_log_mag: 1.0,
            members: vec![(p.u, p.v), (p.u, p.v)],
        });
        assert!(matches!(broken.validate(), Err(Error::CoverageViolation(_))));
    }

    #[test]
    fn euclidean_clustering_is_rejected() {
        let plane = textured(6, 6);
        let spec = forward_spectrum(&plane).unwrap();
        let cl = fit_coords(&[[0.0; 3]; 5], &EngineParams::default(), Space::Euclidean).unwrap();
        assert!(build_dictionary(&spec, &cl, 0.0).is_err());
    }
}
