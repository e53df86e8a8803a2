//! Command-line surface. Exit codes: 0 success, 1 usage or configuration
//! error, 2 processing error. Nothing is written before arguments and
//! configuration have been validated.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::codec::{load_image, save_image};
use crate::config::ToolConfig;
use crate::denoise::{corrupt_poisson_gaussian, denoise_image};
use crate::dictionary::{decode_channels, encode_channels, reconstruct_image, sparsify_image};
use crate::error::{Error, Result};
use crate::image::{Channel, Image};
use crate::isms::{fit, Clustering, FeedbackConstants};
use crate::quality::{compare, histogram256};
use crate::render::CrystalImage;
use crate::spectral::{build_point_cloud, forward_spectrum, SpectralAxis};
use crate::stego::{crystallize_cover, decode_key, embed, encode_key, extract, intercept_extract, StegoParams};
use crate::topology::{PlaneDims, PoleLabel};

#[derive(Parser, Debug)]
#[command(name = "freqcrystal", version, about = "Spectral crystal clustering of images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cluster each channel's spectrum and dump the crystals as CSV.
    Crystallize {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigFlags,
    },
    /// Build a magnitude dictionary file; prints the sparsity report as JSON.
    Sparsify {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigFlags,
    },
    /// Rebuild an image from a dictionary file.
    Reconstruct {
        dictionary: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Zero suspected noise crystals; prints the denoise report as JSON.
    Denoise {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Clean image to score against.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigFlags,
    },
    /// Crystallize the cover into a key and hide the secret in it.
    Embed {
        #[arg(long)]
        cover: PathBuf,
        #[arg(long)]
        secret: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigFlags,
    },
    /// Recover a secret with the key. Weights come from the key unless given.
    Extract {
        stego: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Attempt extraction with the original cover instead of the key.
    Intercept {
        stego: PathBuf,
        #[arg(long)]
        cover: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigFlags,
    },
    /// Print PSNR/SSIM/UQI of two images as JSON.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Also write 256-bin per-channel histograms of both images as CSV.
        #[arg(long)]
        histogram: Option<PathBuf>,
    },
    /// Draw one channel's crystals as a PNG label map.
    Render {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        channel: Option<ChannelArg>,
        /// Keep only crystals of this pole.
        #[arg(long, value_enum)]
        pole: Option<PoleArg>,
        #[command(flatten)]
        cfg: ConfigFlags,
    },
    /// Add Poisson-Gaussian noise (seeded by the engine rng_seed).
    Corrupt {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 30.0)]
        peak: f64,
        #[arg(long, default_value_t = 5.0)]
        read_sigma: f64,
        #[command(flatten)]
        cfg: ConfigFlags,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ChannelArg {
    Gray,
    R,
    G,
    B,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PoleArg {
    Zero,
    Infinity,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AxisArg {
    Magnitude,
    Phase,
}

/// Flags mirroring every config key; they override `--config`.
#[derive(Args, Debug, Default)]
struct ConfigFlags {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the effective configuration (after overrides) as JSON.
    #[arg(long)]
    write_config: Option<PathBuf>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    k2: Option<f64>,
    #[arg(long)]
    k3: Option<f64>,
    #[arg(long)]
    sigma_floor: Option<f64>,
    #[arg(long, value_delimiter = ',', num_args = 3)]
    epsilon: Option<Vec<f64>>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    seed_count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    allow_any_feedback: bool,
    #[arg(long)]
    mask: Option<f64>,
    #[arg(long)]
    dev_percentile: Option<f64>,
    #[arg(long)]
    mag_percentile: Option<f64>,
    #[arg(long)]
    protect_dc_radius: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_enum)]
    axis: Option<AxisArg>,
}

impl ConfigFlags {
    fn resolve(&self) -> Result<ToolConfig> {
        let mut cfg = match &self.config {
            Some(p) => ToolConfig::load(p)?,
            None => ToolConfig::default(),
        };
        let mut k = cfg.engine.k.values();
        for (slot, flag) in k.iter_mut().zip([self.k1, self.k2, self.k3]) {
            if let Some(v) = flag {
                *slot = v;
            }
        }
        cfg.engine.k = FeedbackConstants::new(k).map_err(|e| Error::Config(e.to_string()))?;
        let e = &mut cfg.engine;
        set(&mut e.sigma_floor, self.sigma_floor);
        if let Some(eps) = &self.epsilon {
            e.epsilon = [eps[0], eps[1], eps[2]];
        }
        set(&mut e.max_iterations, self.max_iterations);
        set(&mut e.seed_count, self.seed_count);
        set(&mut e.rng_seed, self.seed);
        e.allow_any_feedback |= self.allow_any_feedback;
        set(&mut cfg.mask_radius, self.mask);
        set(&mut cfg.noise.dev_percentile, self.dev_percentile);
        set(&mut cfg.noise.mag_percentile, self.mag_percentile);
        set(&mut cfg.noise.protect_dc_radius, self.protect_dc_radius);
        set(&mut cfg.stego.alpha, self.alpha);
        set(&mut cfg.stego.beta, self.beta);
        if let Some(a) = self.axis {
            cfg.axis = match a {
                AxisArg::Magnitude => SpectralAxis::Magnitude,
                AxisArg::Phase => SpectralAxis::Phase,
            };
        }
        cfg.validate()?;
        if let Some(p) = &self.write_config {
            fs::write(p, cfg.to_json())?;
        }
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

enum Failure {
    Usage(String),
    Processing(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Processing(e)
    }
}

/// Resolves configuration; config problems are usage errors.
fn config(flags: &ConfigFlags) -> std::result::Result<ToolConfig, Failure> {
    flags.resolve().map_err(|e| match e {
        Error::Io(_) => Failure::Processing(e),
        other => Failure::Usage(other.to_string()),
    })
}

/// Runs the tool on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Processing(e)) => {
            eprintln!("error [{}]: {e}", e.code());
            2
        }
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Logic(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn cluster_channel(image: &Image, index: usize, cfg: &ToolConfig) -> Result<(Clustering, PlaneDims)> {
    let (w, h) = image.dims();
    let dims = PlaneDims::new(w, h)?;
    let spec = forward_spectrum(&image.planes()[index])?;
    let pts = build_point_cloud(&spec, cfg.axis, image.channel_tags()[index]);
    Ok((fit(&pts, &cfg.engine, dims, cfg.axis)?, dims))
}

fn crystals_csv(image: &Image, cfg: &ToolConfig) -> Result<String> {
    let mut out = String::from("channel,");
    for index in 0..image.planes().len() {
        let (c, _) = cluster_channel(image, index, cfg)?;
        let csv = c.to_csv();
        let mut lines = csv.lines();
        let header = lines.next().unwrap_or_default();
        if index == 0 {
            out.push_str(header);
            out.push('\n');
        }
        for line in lines {
            let _ = writeln!(out, "{},{line}", image.channel_tags()[index].name());
        }
    }
    Ok(out)
}

fn histogram_csv(a: &Image, b: &Image) -> String {
    let mut cols = Vec::new();
    let mut names = Vec::new();
    for (tag, img) in [("a", a), ("b", b)] {
        for (ch, plane) in img.channel_tags().iter().zip(img.planes()) {
            names.push(format!("{tag}_{}", ch.name()));
            cols.push(histogram256(plane));
        }
    }
    let mut out = format!("bin,{}\n", names.join(","));
    for bin in 0..256 {
        let row: Vec<String> = cols.iter().map(|h| h[bin].to_string()).collect();
        let _ = writeln!(out, "{bin},{}", row.join(","));
    }
    out
}

fn dispatch(command: Command) -> std::result::Result<(), Failure> {
    match command {
        Command::Crystallize { input, out, cfg } => {
            guard(&[&input], &[&out])?;
            let cfg = config(&cfg)?;
            let img = load_image(&input)?;
            fs::write(out, crystals_csv(&img, &cfg)?).map_err(Error::from)?;
        }
        Command::Sparsify { input, out, cfg } => {
            guard(&[&input], &[&out])?;
            let cfg = config(&cfg)?;
            let img = load_image(&input)?;
            let dicts = sparsify_image(&img, &cfg.engine, cfg.mask_radius)?;
            let reports: Vec<_> = dicts.iter().map(|(c, _, r)| serde_json::json!({"channel": c, "report": r})).collect();
            let pairs: Vec<_> = dicts.into_iter().map(|(c, d, _)| (c, d)).collect();
            fs::write(out, encode_channels(&pairs)?).map_err(Error::from)?;
            print_json(&reports)?;
        }
        Command::Reconstruct { dictionary, out } => {
            guard(&[&dictionary], &[&out])?;
            let dicts = decode_channels(&fs::read(&dictionary).map_err(Error::from)?)?;
            save_image(&reconstruct_image(&dicts)?, out)?;
        }
        Command::Denoise {
            input,
            out,
            reference,
            cfg,
        } => {
            guard(&[Some(&input), reference.as_ref()].into_iter().flatten().map(PathBuf::as_path).collect::<Vec<_>>(), &[&out])?;
            let cfg = config(&cfg)?;
            let noisy = load_image(&input)?;
            let reference = reference.as_deref().map(load_image).transpose()?;
            let (clean, report) = denoise_image(&noisy, &cfg.engine, &cfg.noise, reference.as_ref())?;
            save_image(&clean, out)?;
            print_json(&report)?;
        }
        Command::Embed {
            cover,
            secret,
            key,
            out,
            cfg,
        } => {
            guard(&[&cover, &secret], &[&key, &out])?;
            if key == out {
                return Err(Failure::Usage("key and stego outputs must differ".into()));
            }
            let cfg = config(&cfg)?;
            let cover = load_image(&cover)?;
            let secret = load_image(&secret)?;
            let k = crystallize_cover(&cover, &cfg.engine, cfg.stego)?;
            let stego = embed(&k, &secret, cfg.stego)?;
            fs::write(key, encode_key(&k)?).map_err(Error::from)?;
            save_image(&stego, out)?;
        }
        Command::Extract {
            stego,
            key,
            out,
            alpha,
            beta,
        } => {
            guard(&[&stego, &key], &[&out])?;
            let key = decode_key(&fs::read(&key).map_err(Error::from)?)?;
            let params = StegoParams {
                alpha: alpha.unwrap_or(key.stego.alpha),
                beta: beta.unwrap_or(key.stego.beta),
            };
            params.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let stego = load_image(&stego)?;
            save_image(&extract(&stego, &key, params)?, out)?;
        }
        Command::Intercept { stego, cover, out, cfg } => {
            guard(&[&stego, &cover], &[&out])?;
            let cfg = config(&cfg)?;
            let stego = load_image(&stego)?;
            let cover = load_image(&cover)?;
            save_image(&intercept_extract(&stego, &cover, cfg.stego)?, out)?;
        }
        Command::Compare { a, b, histogram } => {
            if let Some(h) = &histogram {
                guard(&[&a, &b], &[h])?;
            }
            let a = load_image(&a)?;
            let b = load_image(&b)?;
            let report = compare(&a, &b, 255.0)?;
            if let Some(path) = histogram {
                fs::write(path, histogram_csv(&a, &b)).map_err(Error::from)?;
            }
            print_json(&report)?;
        }
        Command::Render {
            input,
            out,
            channel,
            pole,
            cfg,
        } => {
            guard(&[&input], &[&out])?;
            let cfg = config(&cfg)?;
            let img = load_image(&input)?;
            let want = channel.map(|c| match c {
                ChannelArg::Gray => Channel::Gray,
                ChannelArg::R => Channel::R,
                ChannelArg::G => Channel::G,
                ChannelArg::B => Channel::B,
            });
            let index = match want {
                None => 0,
                Some(ch) => img
                    .channel_tags()
                    .iter()
                    .position(|&t| t == ch)
                    .ok_or_else(|| Failure::Usage(format!("image has no {} channel", ch.name())))?,
            };
            let pole = pole.map(|p| match p {
                PoleArg::Zero => PoleLabel::Zero,
                PoleArg::Infinity => PoleLabel::Infinity,
            });
            let (c, dims) = cluster_channel(&img, index, &cfg)?;
            fs::write(out, CrystalImage::from_clustering(&c, dims, pole)?.to_png()?).map_err(Error::from)?;
        }
        Command::Corrupt {
            input,
            out,
            peak,
            read_sigma,
            cfg,
        } => {
            guard(&[&input], &[&out])?;
            let cfg = config(&cfg)?;
            let img = load_image(&input)?;
            save_image(&corrupt_poisson_gaussian(&img, peak, read_sigma, 255.0, cfg.engine.rng_seed)?, out)?;
        }
    }
    Ok(())
}

/// Outputs must not overwrite an input; checked before anything is read or written.
fn guard(inputs: &[&Path], outputs: &[&Path]) -> std::result::Result<(), Failure> {
    let same = |a: &Path, b: &Path| a == b || matches!((a.canonicalize(), b.canonicalize()), (Ok(x), Ok(y)) if x == y);
    for o in outputs {
        if let Some(i) = inputs.iter().find(|i| same(i, o)) {
            return Err(Failure::Usage(format!("output {} would overwrite an input", i.display())));
        }
    }
    Ok(())
}
