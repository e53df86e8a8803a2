//! 8-bit image files: binary PGM (P5), binary PPM (P6) and PNG.
//!
//! Pixels are stored as `f64` in memory and quantized (clamped to `[0, 255]`,
//! rounded half-to-even) on save. Loading then saving a PGM reproduces the
//! file byte for byte when its header is in canonical form
//! (`P5\n<w> <h>\n255\n`).

use std::fs;
use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{Grid, Image};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Ppm,
    Png,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        match ext.as_str() {
            "pgm" => Ok(ImageFormat::Pgm),
            "ppm" => Ok(ImageFormat::Ppm),
            "png" => Ok(ImageFormat::Png),
            "pnm" => Ok(ImageFormat::Ppm),
            other => Err(Error::UnsupportedFormat(format!("file extension {other:?}"))),
        }
    }
}

/// Non-fatal notes produced while decoding, e.g. a dropped alpha channel.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecodeNotes {
    pub warnings: Vec<String>,
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let (img, notes) = load_image_with_notes(path)?;
    for w in &notes.warnings {
        eprintln!("warning: {w}");
    }
    Ok(img)
}

pub fn load_image_with_notes(path: impl AsRef<Path>) -> Result<(Image, DecodeNotes)> {
    let bytes = fs::read(path.as_ref())?;
    decode(&bytes)
}

/// Sniffs the magic bytes and decodes.
pub fn decode(bytes: &[u8]) -> Result<(Image, DecodeNotes)> {
    if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        decode_png(bytes)
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        decode_pnm(bytes).map(|img| (img, DecodeNotes::default()))
    } else if bytes.len() < 2 {
        Err(Error::Truncated("image file shorter than its magic".into()))
    } else {
        Err(Error::BadMagic {
            expected: "P5, P6 or PNG signature",
        })
    }
}

pub fn save_image(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match ImageFormat::from_path(path)? {
        ImageFormat::Pgm => {
            if image.is_rgb() {
                return Err(Error::UnsupportedFormat("PGM holds grayscale images only".into()));
            }
            encode_pnm(image)
        }
        ImageFormat::Ppm => {
            if !image.is_rgb() {
                return Err(Error::UnsupportedFormat("PPM holds RGB images only".into()));
            }
            encode_pnm(image)
        }
        ImageFormat::Png => encode_png(image)?,
    };
    fs::write(path, bytes)?;
    Ok(())
}

fn interleaved_bytes(image: &Image) -> Vec<u8> {
    let planes: Vec<Grid> = image.planes().iter().map(Grid::quantized).collect();
    let n = image.width() * image.height();
    let mut out = Vec::with_capacity(n * planes.len());
    for i in 0..n {
        for p in &planes {
            out.push(p.as_slice()[i] as u8);
        }
    }
    out
}

fn from_interleaved(width: usize, height: usize, channels: usize, data: &[u8]) -> Result<Image> {
    let planes = (0..channels)
        .map(|c| {
            let plane: Vec<f64> = data.iter().skip(c).step_by(channels).map(|&b| b as f64).collect();
            Grid::from_vec(width, height, plane)
        })
        .collect::<Result<Vec<_>>>()?;
    Image::from_planes(planes)
}

/// Canonical binary PGM/PPM bytes.
pub fn encode_pnm(image: &Image) -> Vec<u8> {
    let magic = if image.is_rgb() { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(interleaved_bytes(image));
    out
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b' ' | b'\t' | b'\n' | b'\r' => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return if self.pos >= self.bytes.len() {
                Err(Error::Truncated("netpbm header ends early".into()))
            } else {
                Err(Error::invalid("netpbm header field is not a number"))
            };
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::invalid("netpbm header number out of range"))
    }
}

fn decode_pnm(bytes: &[u8]) -> Result<Image> {
    let channels = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        _ => return Err(Error::BadMagic { expected: "P5 or P6" }),
    };
    let mut r = HeaderReader { bytes, pos: 2 };
    let width = r.number()?;
    let height = r.number()?;
    let maxval = r.number()?;
    if width == 0 || height == 0 {
        return Err(Error::invalid("netpbm image has a zero dimension"));
    }
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!("maxval {maxval} (only 8-bit 255 is supported)")));
    }
    // exactly one whitespace byte separates the header from the raster
    if r.pos >= bytes.len() {
        return Err(Error::Truncated("netpbm raster missing".into()));
    }
    let start = r.pos + 1;
    let need = width * height * channels;
    let raster = bytes.get(start..start + need).ok_or_else(|| {
        Error::Truncated(format!(
            "netpbm raster has {} of {need} bytes",
            bytes.len().saturating_sub(start)
        ))
    })?;
    from_interleaved(width, height, channels, raster)
}

fn decode_png(bytes: &[u8]) -> Result<(Image, DecodeNotes)> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(png_error)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::UnsupportedFormat("PNG output size overflows".into()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(png_error)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let data = &buf[..info.buffer_size()];
    let mut notes = DecodeNotes::default();
    let image = match info.color_type {
        png::ColorType::Grayscale => from_interleaved(w, h, 1, data)?,
        png::ColorType::Rgb => from_interleaved(w, h, 3, data)?,
        png::ColorType::GrayscaleAlpha => {
            notes.warnings.push("PNG alpha channel dropped".into());
            let gray: Vec<u8> = data.chunks_exact(2).map(|px| px[0]).collect();
            from_interleaved(w, h, 1, &gray)?
        }
        png::ColorType::Rgba => {
            notes.warnings.push("PNG alpha channel dropped".into());
            let rgb: Vec<u8> = data.chunks_exact(4).flat_map(|px| [px[0], px[1], px[2]]).collect();
            from_interleaved(w, h, 3, &rgb)?
        }
        png::ColorType::Indexed => {
            return Err(Error::UnsupportedFormat("indexed PNG after expansion".into()))
        }
    };
    Ok((image, notes))
}

fn png_error(e: png::DecodingError) -> Error {
    match e {
        png::DecodingError::IoError(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => {
            Error::Truncated(format!("PNG stream: {io}"))
        }
        png::DecodingError::IoError(io) => Error::Io(io),
        png::DecodingError::Format(f) => {
            let msg = f.to_string();
            if msg.to_ascii_lowercase().contains("eof") || msg.contains("truncat") {
                Error::Truncated(format!("PNG stream: {msg}"))
            } else {
                Error::UnsupportedFormat(format!("PNG: {msg}"))
            }
        }
        other => Error::UnsupportedFormat(format!("PNG: {other}")),
    }
}

pub fn encode_png(image: &Image) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, image.width() as u32, image.height() as u32);
        enc.set_color(if image.is_rgb() {
            png::ColorType::Rgb
        } else {
            png::ColorType::Grayscale
        });
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::UnsupportedFormat(format!("PNG encode: {e}")))?;
        writer
            .write_image_data(&interleaved_bytes(image))
            .map_err(|e| Error::UnsupportedFormat(format!("PNG encode: {e}")))?;
    }
    Ok(out)
}
