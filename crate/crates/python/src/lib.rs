//! Python bindings. Images cross the boundary as row-major lists of floats,
//! reports as plain dicts, binary artifacts as `bytes`.

use freqcrystal::config::ToolConfig;
use freqcrystal::isms::{self, membrane, EngineParams, FeedbackConstants, Space};
use freqcrystal::render::CrystalImage;
use freqcrystal::spectral;
use freqcrystal::topology::{self, PlaneDims, PoleLabel};
use freqcrystal::{codec, denoise, dictionary, quality, stego, Grid};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyComplex, PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde_json::Value;

create_exception!(freqcrystal_py, FreqCrystalError, PyValueError, "Library error; args are (message, code).");

fn err(e: freqcrystal::Error) -> PyErr {
    FreqCrystalError::new_err((e.to_string(), e.code()))
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    match v {
        Value::Null => Ok(py.None()),
        Value::Bool(b) => b.into_py_any(py),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_py_any(py),
            (_, Some(u)) => u.into_py_any(py),
            _ => n.as_f64().unwrap_or(f64::NAN).into_py_any(py),
        },
        // infinite PSNR is serialized as a string
        Value::String(s) if s == "inf" => f64::INFINITY.into_py_any(py),
        Value::String(s) => s.into_py_any(py),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_py_any(py)
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_py_any(py)
        }
    }
}

fn report<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &v)
}

fn pole_name(p: PoleLabel) -> &'static str {
    p.name()
}

fn parse_pole(name: Option<&str>) -> PyResult<Option<PoleLabel>> {
    match name {
        None => Ok(None),
        Some("zero") => Ok(Some(PoleLabel::Zero)),
        Some("infinity") => Ok(Some(PoleLabel::Infinity)),
        Some(other) => Err(PyValueError::new_err(format!("pole must be 'zero' or 'infinity', got {other:?}"))),
    }
}

fn feedback(k: [f64; 3]) -> PyResult<FeedbackConstants> {
    FeedbackConstants::new(k).map_err(err)
}

fn cfg(config: Option<&Config>) -> ToolConfig {
    config.map(|c| c.inner.clone()).unwrap_or_default()
}

fn plane_of(image: &Image, channel: usize) -> PyResult<&Grid> {
    image
        .inner
        .planes()
        .get(channel)
        .ok_or_else(|| PyValueError::new_err(format!("channel {channel} out of range")))
}

#[pyclass(module = "freqcrystal_py")]
struct Image {
    inner: freqcrystal::Image,
}

#[pymethods]
impl Image {
    /// One plane for gray, three for RGB; each plane is `width*height` values, row-major.
    #[new]
    fn new(width: usize, height: usize, planes: Vec<Vec<f64>>) -> PyResult<Self> {
        let grids = planes
            .into_iter()
            .map(|p| Grid::from_vec(width, height, p))
            .collect::<freqcrystal::Result<Vec<_>>>()
            .map_err(err)?;
        Ok(Self { inner: freqcrystal::Image::from_planes(grids).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let (inner, _) = codec::load_image_with_notes(path).map_err(err)?;
        Ok(Self { inner })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        codec::save_image(&self.inner, path).map_err(err)
    }

    fn encode_png<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        Ok(PyBytes::new(py, &codec::encode_png(&self.inner).map_err(err)?))
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn channels(&self) -> Vec<&'static str> {
        self.inner.channel_tags().iter().map(|c| c.name()).collect()
    }

    fn plane(&self, channel: usize) -> PyResult<Vec<f64>> {
        Ok(plane_of(self, channel)?.as_slice().to_vec())
    }

    fn quantized(&self) -> Self {
        Self { inner: self.inner.quantized() }
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{}, {:?})", self.width(), self.height(), self.channels())
    }
}

/// Tool configuration; JSON in the same schema as the command line `--config`.
#[pyclass(module = "freqcrystal_py")]
struct Config {
    inner: ToolConfig,
}

#[pymethods]
impl Config {
    #[new]
    #[pyo3(signature = (json = None))]
    fn new(json: Option<&str>) -> PyResult<Self> {
        let inner = match json {
            Some(text) => ToolConfig::from_json(text).map_err(err)?,
            None => ToolConfig::default(),
        };
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn mask_radius(&self) -> f64 {
        self.inner.mask_radius
    }

    #[getter]
    fn k(&self) -> [f64; 3] {
        self.inner.engine.k.values()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.stego.alpha
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.stego.beta
    }
}

/// Centered spectrum of one plane; DC sits at `(0, 0)` in `at`.
#[pyclass(module = "freqcrystal_py")]
struct Spectrum {
    inner: spectral::Spectrum,
}

#[pymethods]
impl Spectrum {
    #[staticmethod]
    #[pyo3(signature = (image, channel = 0))]
    fn forward(image: &Image, channel: usize) -> PyResult<Self> {
        Ok(Self { inner: spectral::forward_spectrum(plane_of(image, channel)?).map_err(err)? })
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn at<'py>(&self, py: Python<'py>, u: i64, v: i64) -> Bound<'py, PyComplex> {
        let c = self.inner.at(u, v);
        PyComplex::from_doubles(py, c.re, c.im)
    }

    fn log_magnitude(&self) -> Vec<f64> {
        spectral::log_magnitude(&self.inner).into_vec()
    }

    fn phase(&self) -> Vec<f64> {
        spectral::phase_grid(&self.inner).into_vec()
    }

    fn inverse(&self) -> PyResult<Vec<f64>> {
        Ok(spectral::inverse_spectrum(&self.inner).map_err(err)?.into_vec())
    }

    #[pyo3(signature = (rel_tol = 1e-9))]
    fn is_conjugate_symmetric(&self, rel_tol: f64) -> bool {
        self.inner.is_conjugate_symmetric(rel_tol)
    }
}

#[pyclass(module = "freqcrystal_py")]
struct Clustering {
    inner: isms::Clustering,
}

#[pymethods]
impl Clustering {
    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations_used
    }

    #[getter]
    fn assignment(&self) -> Vec<Option<usize>> {
        self.inner.assignment.clone()
    }

    #[getter]
    fn unassigned(&self) -> usize {
        self.inner.unassigned_count()
    }

    /// One dict per cluster: id, mu, sigma, n, pole.
    #[getter]
    fn clusters<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        let list = PyList::empty(py);
        for c in &self.inner.clusters {
            let d = PyDict::new(py);
            d.set_item("id", c.id())?;
            d.set_item("mu", c.mu())?;
            d.set_item("sigma", c.sigma())?;
            d.set_item("n", c.n())?;
            d.set_item("pole", pole_name(c.pole()))?;
            list.append(d)?;
        }
        Ok(list)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    #[pyo3(signature = (pole = None))]
    fn render_png<'py>(&self, py: Python<'py>, pole: Option<&str>) -> PyResult<Bound<'py, PyBytes>> {
        let dims = self
            .inner
            .space
            .dims()
            .ok_or_else(|| PyValueError::new_err("only spectral clusterings can be rendered"))?;
        let img = CrystalImage::from_clustering(&self.inner, dims, parse_pole(pole)?).map_err(err)?;
        Ok(PyBytes::new(py, &img.to_png().map_err(err)?))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(module = "freqcrystal_py")]
struct StegoKey {
    inner: stego::StegoKey,
}

#[pymethods]
impl StegoKey {
    #[staticmethod]
    #[pyo3(signature = (cover, config = None))]
    fn crystallize(py: Python<'_>, cover: &Image, config: Option<&Config>) -> PyResult<Self> {
        let c = cfg(config);
        let cover = cover.inner.clone();
        let inner = py.detach(|| stego::crystallize_cover(&cover, &c.engine, c.stego)).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(Self { inner: stego::decode_key(data).map_err(err)? })
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        Ok(PyBytes::new(py, &stego::encode_key(&self.inner).map_err(err)?))
    }

    fn cover_image(&self) -> PyResult<Image> {
        Ok(Image { inner: self.inner.cover_image().map_err(err)? })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.stego.alpha
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.stego.beta
    }
}

fn stego_params(key: Option<&StegoKey>, alpha: Option<f64>, beta: Option<f64>) -> stego::StegoParams {
    let base = key.map(|k| k.inner.stego).unwrap_or_default();
    stego::StegoParams { alpha: alpha.unwrap_or(base.alpha), beta: beta.unwrap_or(base.beta) }
}

#[pyfunction]
#[pyo3(signature = (image, config = None, channel = 0))]
fn crystallize(py: Python<'_>, image: &Image, config: Option<&Config>, channel: usize) -> PyResult<Clustering> {
    let c = cfg(config);
    let plane = plane_of(image, channel)?.clone();
    let tag = image.inner.channel_tags()[channel];
    let inner = py
        .detach(|| {
            let spec = spectral::forward_spectrum(&plane)?;
            let dims = PlaneDims::new(spec.width(), spec.height())?;
            let points = spectral::build_point_cloud(&spec, c.axis, tag);
            isms::fit(&points, &c.engine, dims, c.axis)
        })
        .map_err(err)?;
    Ok(Clustering { inner })
}

/// Clusters plain 3-D points in Euclidean space.
#[pyfunction]
#[pyo3(signature = (points, k, seed = 0, sigma_floor = 1e-3, max_iterations = 50))]
fn fit_points(
    py: Python<'_>,
    points: Vec<[f64; 3]>,
    k: [f64; 3],
    seed: u64,
    sigma_floor: f64,
    max_iterations: usize,
) -> PyResult<Clustering> {
    let params = EngineParams {
        k: feedback(k)?,
        sigma_floor,
        max_iterations,
        rng_seed: seed,
        allow_any_feedback: true,
        ..EngineParams::default()
    };
    let inner = py.detach(|| isms::fit_coords(&points, &params, Space::Euclidean)).map_err(err)?;
    Ok(Clustering { inner })
}

/// Returns the dictionary file bytes and one sparsity report per channel.
#[pyfunction]
#[pyo3(signature = (image, config = None))]
fn sparsify<'py>(py: Python<'py>, image: &Image, config: Option<&Config>) -> PyResult<(Bound<'py, PyBytes>, Py<PyAny>)> {
    let c = cfg(config);
    let img = image.inner.clone();
    let dicts = py.detach(|| dictionary::sparsify_image(&img, &c.engine, c.mask_radius)).map_err(err)?;
    let reports: Vec<_> = dicts.iter().map(|(ch, _, r)| (ch.name(), *r)).collect();
    let pairs: Vec<_> = dicts.into_iter().map(|(ch, d, _)| (ch, d)).collect();
    let bytes = dictionary::encode_channels(&pairs).map_err(err)?;
    Ok((PyBytes::new(py, &bytes), report(py, &reports)?))
}

#[pyfunction]
fn reconstruct(data: &[u8]) -> PyResult<Image> {
    let dicts = dictionary::decode_channels(data).map_err(err)?;
    Ok(Image { inner: dictionary::reconstruct_image(&dicts).map_err(err)? })
}

#[pyfunction(name = "denoise")]
#[pyo3(signature = (image, config = None, reference = None))]
fn denoise_py(py: Python<'_>, image: &Image, config: Option<&Config>, reference: Option<&Image>) -> PyResult<(Image, Py<PyAny>)> {
    let c = cfg(config);
    let img = image.inner.clone();
    let reference = reference.map(|r| r.inner.clone());
    let (out, rep) = py
        .detach(|| denoise::denoise_image(&img, &c.engine, &c.noise, reference.as_ref()))
        .map_err(err)?;
    Ok((Image { inner: out }, report(py, &rep)?))
}

#[pyfunction]
#[pyo3(signature = (image, peak = 30.0, read_sigma = 5.0, seed = 0))]
fn corrupt(image: &Image, peak: f64, read_sigma: f64, seed: u64) -> PyResult<Image> {
    let inner = denoise::corrupt_poisson_gaussian(&image.inner, peak, read_sigma, 255.0, seed).map_err(err)?;
    Ok(Image { inner })
}

#[pyfunction]
#[pyo3(signature = (key, secret, alpha = None, beta = None))]
fn embed(key: &StegoKey, secret: &Image, alpha: Option<f64>, beta: Option<f64>) -> PyResult<Image> {
    let p = stego_params(Some(key), alpha, beta);
    Ok(Image { inner: stego::embed(&key.inner, &secret.inner, p).map_err(err)? })
}

#[pyfunction]
#[pyo3(signature = (stego_image, key, alpha = None, beta = None))]
fn extract(stego_image: &Image, key: &StegoKey, alpha: Option<f64>, beta: Option<f64>) -> PyResult<Image> {
    let p = stego_params(Some(key), alpha, beta);
    Ok(Image { inner: stego::extract(&stego_image.inner, &key.inner, p).map_err(err)? })
}

/// Extraction by someone holding the original cover but not the key.
#[pyfunction]
#[pyo3(signature = (stego_image, cover, alpha = None, beta = None))]
fn intercept(stego_image: &Image, cover: &Image, alpha: Option<f64>, beta: Option<f64>) -> PyResult<Image> {
    let p = stego_params(None, alpha, beta);
    Ok(Image { inner: stego::intercept_extract(&stego_image.inner, &cover.inner, p).map_err(err)? })
}

#[pyfunction]
fn compare(py: Python<'_>, a: &Image, b: &Image) -> PyResult<Py<PyAny>> {
    report(py, &quality::compare(&a.inner, &b.inner, 255.0).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (a, b, channel = 0))]
fn psnr(a: &Image, b: &Image, channel: usize) -> PyResult<f64> {
    quality::psnr(plane_of(a, channel)?, plane_of(b, channel)?, 255.0).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (a, b, channel = 0))]
fn ssim(a: &Image, b: &Image, channel: usize) -> PyResult<f64> {
    quality::ssim(plane_of(a, channel)?, plane_of(b, channel)?, quality::SsimParams::standard(255.0)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (a, b, channel = 0, window = 8))]
fn uqi(a: &Image, b: &Image, channel: usize, window: usize) -> PyResult<f64> {
    quality::uqi(plane_of(a, channel)?, plane_of(b, channel)?, window).map_err(err)
}

#[pyfunction]
fn wrapped_delta(x: f64, mu: f64, period: f64) -> PyResult<f64> {
    topology::wrapped_delta(x, mu, period).map_err(err)
}

#[pyfunction]
fn torus_distance(a: (f64, f64), b: (f64, f64), width: usize, height: usize) -> PyResult<f64> {
    Ok(PlaneDims::new(width, height).map_err(err)?.torus_distance(a, b))
}

#[pyfunction]
fn pole_of(u: i64, v: i64, width: usize, height: usize) -> PyResult<&'static str> {
    Ok(pole_name(topology::pole_of(u, v, PlaneDims::new(width, height).map_err(err)?)))
}

#[pyfunction]
fn absorption_threshold(k: [f64; 3], sigma: [f64; 3]) -> PyResult<f64> {
    Ok(membrane::absorption_threshold(&feedback(k)?, sigma))
}

#[pyfunction]
fn absorbs(k: [f64; 3], sigma: [f64; 3], delta: [f64; 3]) -> PyResult<bool> {
    let k = feedback(k)?;
    Ok(membrane::absorbs_delta(delta, &k, sigma, membrane::absorption_threshold(&k, sigma)))
}

#[pyfunction]
fn membrane_population(n: usize, sigma: [f64; 3], k: [f64; 3], epsilon: [f64; 3]) -> PyResult<f64> {
    membrane::membrane_population(n, sigma, &feedback(k)?, epsilon).map_err(err)
}

#[pyfunction]
fn membrane_force(k: [f64; 3], sigma: [f64; 3]) -> PyResult<f64> {
    membrane::membrane_force(&feedback(k)?, sigma).map_err(err)
}

#[pyfunction]
fn perceived_membrane_offset(sigma: f64, k: f64) -> f64 {
    membrane::perceived_membrane_offset(sigma, k)
}

#[pymodule]
fn freqcrystal_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FreqCrystalError", m.py().get_type::<FreqCrystalError>())?;
    m.add_class::<Image>()?;
    m.add_class::<Config>()?;
    m.add_class::<Spectrum>()?;
    m.add_class::<Clustering>()?;
    m.add_class::<StegoKey>()?;
    m.add_function(wrap_pyfunction!(crystallize, m)?)?;
    m.add_function(wrap_pyfunction!(fit_points, m)?)?;
    m.add_function(wrap_pyfunction!(sparsify, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(denoise_py, m)?)?;
    m.add_function(wrap_pyfunction!(corrupt, m)?)?;
    m.add_function(wrap_pyfunction!(embed, m)?)?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(intercept, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(ssim, m)?)?;
    m.add_function(wrap_pyfunction!(uqi, m)?)?;
    m.add_function(wrap_pyfunction!(wrapped_delta, m)?)?;
    m.add_function(wrap_pyfunction!(torus_distance, m)?)?;
    m.add_function(wrap_pyfunction!(pole_of, m)?)?;
    m.add_function(wrap_pyfunction!(absorption_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(absorbs, m)?)?;
    m.add_function(wrap_pyfunction!(membrane_population, m)?)?;
    m.add_function(wrap_pyfunction!(membrane_force, m)?)?;
    m.add_function(wrap_pyfunction!(perceived_membrane_offset, m)?)?;
    Ok(())
}
