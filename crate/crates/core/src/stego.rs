//! Keyed spectral steganography.
//!
//! The key is the cover's spectrum with every clustered magnitude replaced by
//! its crystal mean (no protected mask) and phases untouched. A secret is
//! hidden by adding `w·F_secret` to the key spectrum, with `w = α` on cells
//! nearer DC and `w = β` on cells nearer Nyquist.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dictionary::{build_dictionary, read_channel, write_channel};
use crate::error::{Error, Result};
use crate::image::{Channel, Grid, Image};
use crate::isms::{fit, EngineParams, FeedbackConstants};
use crate::spectral::{build_point_cloud, forward_spectrum, inverse_spectrum, SpectralAxis, Spectrum};
use crate::topology::{pole_of, PlaneDims, PoleLabel};
use crate::wire::{Reader, Writer};

pub const KEY_MAGIC: &[u8; 8] = b"ISMSKEY\0";
pub const KEY_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StegoParams {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for StegoParams {
    fn default() -> Self {
        Self { alpha: 0.02, beta: 0.08 }
    }
}

impl StegoParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Embedding tolerates zero weights (a null embedding); extraction does not.
    fn validate_embed(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be non-negative and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Embedding weight at signed frequency `(u, v)`.
    ///
    /// The weight must agree on `(u, v)` and `(−u, −v)` or the stego spectrum
    /// stops being conjugate symmetric. On odd axes `pole_of` is not mirror
    /// symmetric, so a pair counts as Infinity only when both members are.
    pub fn weight(&self, u: i64, v: i64, dims: PlaneDims) -> f64 {
        match (pole_of(u, v, dims), pole_of(-u, -v, dims)) {
            (PoleLabel::Infinity, PoleLabel::Infinity) => self.beta,
            _ => self.alpha,
        }
    }
}

/// Crystallized cover spectra (centered), one per channel, plus the
/// parameters that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct StegoKey {
    pub dims: PlaneDims,
    pub stego: StegoParams,
    pub engine: EngineParams,
    pub channels: Vec<(Channel, Spectrum)>,
}

impl StegoKey {
    pub fn channel_tags(&self) -> Vec<Channel> {
        self.channels.iter().map(|(c, _)| *c).collect()
    }

    /// The smoothed cover itself.
    pub fn cover_image(&self) -> Result<Image> {
        Image::from_planes(self.channels.iter().map(|(_, s)| inverse_spectrum(s)).collect::<Result<_>>()?)
    }

    fn check(&self, image: &Image) -> Result<()> {
        let (w, h) = (self.dims.width(), self.dims.height());
        if image.dims() != (w, h) {
            return Err(Error::dims((w, h), image.dims()));
        }
        if image.channel_tags() != self.channel_tags().as_slice() {
            return Err(Error::invalid(format!(
                "image channels {:?} do not match key channels {:?}",
                image.channel_tags(),
                self.channel_tags()
            )));
        }
        Ok(())
    }
}

fn crystallize_plane(plane: &Grid, channel: Channel, params: &EngineParams) -> Result<Spectrum> {
    let spec = forward_spectrum(plane)?.centered();
    let (w, h) = spec.dims();
    let dims = PlaneDims::new(w, h)?;
    let points = build_point_cloud(&spec, SpectralAxis::Magnitude, channel);
    let clustering = fit(&points, params, dims, SpectralAxis::Magnitude)?;
    let (dict, _) = build_dictionary(&spec, &clustering, 0.0)?;
    let mags = dict.magnitudes()?;
    let coeffs = spec
        .coeffs()
        .iter()
        .zip(mags.as_slice())
        .map(|(&c, &m)| {
            // keep the exact coefficient wherever the magnitude is unchanged
            if m == c.norm() {
                c
            } else {
                Complex64::from_polar(m, c.arg())
            }
        })
        .collect();
    Spectrum::new(w, h, coeffs, true)
}

pub fn crystallize_cover(cover: &Image, engine: &EngineParams, stego: StegoParams) -> Result<StegoKey> {
    engine.validate()?;
    stego.validate()?;
    let (w, h) = cover.dims();
    let dims = PlaneDims::new(w, h)?;
    let channels = cover
        .channel_tags()
        .par_iter()
        .zip(cover.planes().par_iter())
        .map(|(&ch, plane)| crystallize_plane(plane, ch, engine).map(|s| (ch, s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(StegoKey {
        dims,
        stego,
        engine: engine.clone(),
        channels,
    })
}

/// Zero-pads a plane at the bottom and right.
fn pad(plane: &Grid, w: usize, h: usize) -> Result<Grid> {
    let (pw, ph) = plane.dims();
    if pw > w || ph > h {
        return Err(Error::invalid(format!("secret {pw}x{ph} does not fit in a {w}x{h} cover")));
    }
    Ok(Grid::from_fn(w, h, |x, y| if x < pw && y < ph { plane.get(x, y) } else { 0.0 }))
}

/// Secret planes matched to the key's channel layout; a gray secret is
/// replicated into every channel of an RGB key.
fn secret_planes(key: &StegoKey, secret: &Image) -> Result<Vec<Grid>> {
    let (w, h) = (key.dims.width(), key.dims.height());
    let n = key.channels.len();
    let planes = secret.planes();
    let pick = |i: usize| -> Result<&Grid> {
        match planes.len() {
            1 => Ok(&planes[0]),
            m if m == n => Ok(&planes[i]),
            m => Err(Error::invalid(format!("secret has {m} channels, key has {n}"))),
        }
    };
    (0..n).map(|i| pad(pick(i)?, w, h)).collect()
}

fn weights(key: &StegoKey, params: StegoParams) -> Vec<f64> {
    let (w, h) = (key.dims.width(), key.dims.height());
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (u, v) = crate::spectral::centered_freq(x, y, w, h);
            out.push(params.weight(u as i64, v as i64, key.dims));
        }
    }
    out
}

/// Stego image before any clamping or quantization.
pub fn embed(key: &StegoKey, secret: &Image, params: StegoParams) -> Result<Image> {
    params.validate_embed()?;
    let secrets = secret_planes(key, secret)?;
    let wts = weights(key, params);
    let (w, h) = (key.dims.width(), key.dims.height());
    let planes = key
        .channels
        .iter()
        .zip(&secrets)
        .map(|((_, k), s)| {
            let fs = forward_spectrum(s)?.centered();
            let coeffs = k
                .coeffs()
                .iter()
                .zip(fs.coeffs())
                .zip(&wts)
                .map(|((&a, &b), &wt)| a + b * wt)
                .collect();
            inverse_spectrum(&Spectrum::new(w, h, coeffs, true)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Image::from_planes(planes)
}

fn extract_with(stego: &Image, references: &[Spectrum], key: &StegoKey, params: StegoParams) -> Result<Image> {
    params.validate()?;
    key.check(stego)?;
    let wts = weights(key, params);
    let (w, h) = (key.dims.width(), key.dims.height());
    let planes = stego
        .planes()
        .iter()
        .zip(references)
        .map(|(p, r)| {
            let fs = forward_spectrum(p)?.centered();
            let coeffs = fs
                .coeffs()
                .iter()
                .zip(r.coeffs())
                .zip(&wts)
                .map(|((&a, &b), &wt)| (a - b) / wt)
                .collect();
            inverse_spectrum(&Spectrum::new(w, h, coeffs, true)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Image::from_planes(planes)
}

pub fn extract(stego: &Image, key: &StegoKey, params: StegoParams) -> Result<Image> {
    let refs: Vec<Spectrum> = key.channels.iter().map(|(_, s)| s.clone()).collect();
    extract_with(stego, &refs, key, params)
}

/// The interception attack: extraction against the unsmoothed cover.
pub fn intercept_extract(stego: &Image, original_cover: &Image, params: StegoParams) -> Result<Image> {
    if stego.dims() != original_cover.dims() || stego.channel_tags() != original_cover.channel_tags() {
        return Err(Error::dims(original_cover.dims(), stego.dims()));
    }
    let (w, h) = original_cover.dims();
    let refs = original_cover
        .planes()
        .iter()
        .map(|p| forward_spectrum(p).map(|s| s.centered()))
        .collect::<Result<Vec<_>>>()?;
    // a stand-in key that only carries geometry
    let shell = StegoKey {
        dims: PlaneDims::new(w, h)?,
        stego: params,
        engine: EngineParams::default(),
        channels: original_cover
            .channel_tags()
            .iter()
            .zip(&refs)
            .map(|(&c, s)| (c, s.clone()))
            .collect(),
    };
    extract_with(stego, &refs, &shell, params)
}

pub fn encode_key(key: &StegoKey) -> Result<Vec<u8>> {
    let mut w = Writer::new();
    w.bytes(KEY_MAGIC);
    w.u16(KEY_VERSION);
    w.len(key.dims.width());
    w.len(key.dims.height());
    w.u16(u16::try_from(key.channels.len()).map_err(|_| Error::invalid("too many channels"))?);
    w.f64(key.stego.alpha);
    w.f64(key.stego.beta);
    let e = &key.engine;
    for k in e.k.values() {
        w.f64(k);
    }
    w.f64(e.sigma_floor);
    for eps in e.epsilon {
        w.f64(eps);
    }
    w.u64(e.max_iterations as u64);
    w.u64(e.seed_count as u64);
    w.u64(e.rng_seed);
    w.u8(e.allow_any_feedback as u8);
    let cells = key.dims.cells();
    for (ch, spec) in &key.channels {
        if spec.dims() != (key.dims.width(), key.dims.height()) || !spec.is_centered() {
            return Err(Error::invalid("key spectra must be centered and match the key dims"));
        }
        debug_assert_eq!(spec.coeffs().len(), cells);
        write_channel(&mut w, *ch);
        for c in spec.coeffs() {
            w.f64(c.re);
            w.f64(c.im);
        }
    }
    Ok(w.finish())
}

pub fn decode_key(bytes: &[u8]) -> Result<StegoKey> {
    let mut r = Reader::new(bytes);
    r.expect_magic(KEY_MAGIC, "ISMSKEY\\0")?;
    let version = r.u16("version")?;
    if version != KEY_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            supported: KEY_VERSION,
        });
    }
    let width = r.u32("width")? as usize;
    let height = r.u32("height")? as usize;
    let dims = PlaneDims::new(width, height)?;
    let n = r.u16("channel count")? as usize;
    let stego = StegoParams {
        alpha: r.f64("alpha")?,
        beta: r.f64("beta")?,
    };
    let k = [r.f64("k1")?, r.f64("k2")?, r.f64("k3")?];
    let sigma_floor = r.f64("sigma_floor")?;
    let epsilon = [r.f64("epsilon")?, r.f64("epsilon")?, r.f64("epsilon")?];
    let max_iterations = r.u64("max_iterations")? as usize;
    let seed_count = r.u64("seed_count")? as usize;
    let rng_seed = r.u64("rng_seed")?;
    let allow_any_feedback = match r.u8("feedback override")? {
        0 => false,
        1 => true,
        b => return Err(Error::invalid(format!("bad override flag {b}"))),
    };
    let engine = EngineParams {
        k: FeedbackConstants::new(k)?,
        sigma_floor,
        epsilon,
        max_iterations,
        seed_count,
        rng_seed,
        allow_any_feedback,
    };
    let cells = dims.cells();
    let per_channel = 1 + cells * 16;
    if n.saturating_mul(per_channel) > r.remaining() {
        return Err(Error::Truncated(format!(
            "{n} channels need {} bytes, {} remain",
            n * per_channel,
            r.remaining()
        )));
    }
    let mut channels = Vec::with_capacity(n);
    for _ in 0..n {
        let ch = read_channel(&mut r)?;
        let coeffs = (0..cells)
            .map(|_| Ok(Complex64::new(r.f64("re")?, r.f64("im")?)))
            .collect::<Result<Vec<_>>>()?;
        channels.push((ch, Spectrum::new(width, height, coeffs, true)?));
    }
    r.expect_end()?;
    stego.validate()?;
    Ok(StegoKey {
        dims,
        stego,
        engine,
        channels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::phase_grid;

    fn cover() -> Image {
        Image::gray(Grid::from_fn(24, 20, |x, y| {
            110.0 + 60.0 * ((x as f64) * 0.4).sin() * ((y as f64) * 0.3).cos() + ((x * 13 + y * 7) % 17) as f64
        }))
    }

    fn secret() -> Image {
        Image::gray(Grid::from_fn(16, 12, |x, y| if (x / 4 + y / 4) % 2 == 0 { 200.0 } else { 30.0 }))
    }

    #[test]
    fn constant_cover_key_is_the_cover() {
        let img = Image::gray(Grid::filled(8, 8, 50.0));
        let key = crystallize_cover(&img, &EngineParams::default(), StegoParams::default()).unwrap();
        let f = forward_spectrum(&img.planes()[0]).unwrap().centered();
        for (a, b) in key.channels[0].1.coeffs().iter().zip(f.coeffs()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn key_keeps_phase_and_is_deterministic() {
        let c = cover();
        let k1 = crystallize_cover(&c, &EngineParams::default(), StegoParams::default()).unwrap();
        let k2 = crystallize_cover(&c, &EngineParams::default(), StegoParams::default()).unwrap();
        assert_eq!(encode_key(&k1).unwrap(), encode_key(&k2).unwrap());
        let orig = phase_grid(&forward_spectrum(&c.planes()[0]).unwrap().centered());
        let kept = phase_grid(&k1.channels[0].1);
        for (a, b) in orig.as_slice().iter().zip(kept.as_slice()) {
            assert!((a - b).abs() < 1e-12 || (a.abs() - std::f64::consts::PI).abs() < 1e-9);
        }
    }

    #[test]
    fn roundtrip_is_exact_before_quantization() {
        let key = crystallize_cover(&cover(), &EngineParams::default(), StegoParams::default()).unwrap();
        for p in [StegoParams::default(), StegoParams { alpha: 0.3, beta: 0.001 }] {
            let st = embed(&key, &secret(), p).unwrap();
            let back = extract(&st, &key, p).unwrap();
            let padded = pad(&secret().planes()[0], 24, 20).unwrap();
            assert!(back.planes()[0].max_abs_diff(&padded) < 1e-6);
        }
    }

    #[test]
    fn null_embedding_returns_the_key() {
        let key = crystallize_cover(&cover(), &EngineParams::default(), StegoParams::default()).unwrap();
        let zero = Image::gray(Grid::zeros(24, 20));
        let st = embed(&key, &zero, StegoParams::default()).unwrap();
        assert!(st.planes()[0].max_abs_diff(&key.cover_image().unwrap().planes()[0]) < 1e-9);
        let null = embed(&key, &secret(), StegoParams { alpha: 0.0, beta: 0.0 }).unwrap();
        assert!(null.planes()[0].max_abs_diff(&key.cover_image().unwrap().planes()[0]) < 1e-9);
        let back = extract(&key.cover_image().unwrap(), &key, StegoParams::default()).unwrap();
        assert!(back.planes()[0].as_slice().iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn interception_residual_decomposes() {
        let c = cover();
        let p = StegoParams::default();
        let key = crystallize_cover(&c, &EngineParams::default(), p).unwrap();
        let st = embed(&key, &secret(), p).unwrap();
        let attacked = intercept_extract(&st, &c, p).unwrap();
        let keyed = extract(&st, &key, p).unwrap();
        // attack − keyed = (F_key − F_cover)/w, transformed back
        let fc = forward_spectrum(&c.planes()[0]).unwrap().centered();
        let wts = weights(&key, p);
        let diff: Vec<Complex64> = key.channels[0]
            .1
            .coeffs()
            .iter()
            .zip(fc.coeffs())
            .zip(&wts)
            .map(|((&k, &f), &w)| (k - f) / w)
            .collect();
        let expect = inverse_spectrum(&Spectrum::new(24, 20, diff, true).unwrap()).unwrap();
        let got = Grid::from_fn(24, 20, |x, y| attacked.planes()[0].get(x, y) - keyed.planes()[0].get(x, y));
        assert!(got.max_abs_diff(&expect) < 1e-6);
    }

    #[test]
    fn weights_are_mirror_symmetric() {
        let p = StegoParams::default();
        for (w, h) in [(8, 8), (9, 11), (7, 6), (2, 3)] {
            let dims = PlaneDims::new(w, h).unwrap();
            for v in -(h as i64)..h as i64 {
                for u in -(w as i64)..w as i64 {
                    assert_eq!(p.weight(u, v, dims), p.weight(-u, -v, dims));
                    if w % 2 == 0 && h % 2 == 0 {
                        let expect = if pole_of(u, v, dims) == PoleLabel::Zero { p.alpha } else { p.beta };
                        assert_eq!(p.weight(u, v, dims), expect);
                    }
                }
            }
        }
    }

    #[test]
    fn odd_planes_round_trip() {
        let c = Image::gray(Grid::from_fn(9, 11, |x, y| ((x * 31 + y * 17) % 23) as f64 * 9.0));
        let s = Image::gray(Grid::from_fn(9, 11, |x, y| ((x * 5 + y * 3) % 7) as f64 * 30.0));
        let p = StegoParams { alpha: 0.01, beta: 0.5 };
        let key = crystallize_cover(&c, &EngineParams::default(), p).unwrap();
        let back = extract(&embed(&key, &s, p).unwrap(), &key, p).unwrap();
        assert!(back.planes()[0].max_abs_diff(&s.planes()[0]) < 1e-6);
    }

    #[test]
    fn oversize_secret_is_rejected() {
        let key = crystallize_cover(&cover(), &EngineParams::default(), StegoParams::default()).unwrap();
        let big = Image::gray(Grid::zeros(30, 10));
        assert!(embed(&key, &big, StegoParams::default()).is_err());
    }

    #[test]
    fn key_file_roundtrip_and_errors() {
        let key = crystallize_cover(&cover(), &EngineParams::default(), StegoParams::default()).unwrap();
        let bytes = encode_key(&key).unwrap();
        let back = decode_key(&bytes).unwrap();
        assert_eq!(back, key);
        assert_eq!(encode_key(&back).unwrap(), bytes);
        for cut in [0, 3, 8, 10, 60, bytes.len() - 1] {
            let e = decode_key(&bytes[..cut]).unwrap_err();
            assert!(matches!(e, Error::Truncated(_)), "cut {cut}: {e}");
        }
        let mut bad = bytes.clone();
        bad[2] ^= 0xff;
        assert_eq!(decode_key(&bad).unwrap_err().code(), 20);
        let mut ver = bytes.clone();
        ver[8] = 2;
        assert_eq!(decode_key(&ver).unwrap_err().code(), 21);
    }
}
