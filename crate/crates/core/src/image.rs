//! Real-valued pixel planes and multi-channel images.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Channel tag carried by spectral feature points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Gray,
    R,
    G,
    B,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Gray => "gray",
            Channel::R => "r",
            Channel::G => "g",
            Channel::B => "b",
        }
    }
}

/// A `width × height` grid of reals stored row-major (`y * width + x`).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "grid of {width}x{height} needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Grid) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Clamp to `[0, 255]` and round half-to-even, the export quantizer.
    pub fn quantized(&self) -> Grid {
        self.map(|v| v.clamp(0.0, 255.0).round_ties_even())
    }
}

/// Grayscale or RGB image with one [`Grid`] per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    channels: Vec<Grid>,
}

impl Image {
    pub fn gray(plane: Grid) -> Self {
        Self {
            channels: vec![plane],
        }
    }

    pub fn rgb(r: Grid, g: Grid, b: Grid) -> Result<Self> {
        if r.dims() != g.dims() || r.dims() != b.dims() {
            return Err(Error::invalid("RGB planes must share dimensions"));
        }
        Ok(Self {
            channels: vec![r, g, b],
        })
    }

    pub fn from_planes(planes: Vec<Grid>) -> Result<Self> {
        match planes.len() {
            1 => Ok(Self { channels: planes }),
            3 => {
                let mut it = planes.into_iter();
                let (r, g, b) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
                Self::rgb(r, g, b)
            }
            n => Err(Error::invalid(format!("images carry 1 or 3 channels, got {n}"))),
        }
    }

    pub fn width(&self) -> usize {
        self.channels[0].width()
    }

    pub fn height(&self) -> usize {
        self.channels[0].height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.channels[0].dims()
    }

    pub fn is_rgb(&self) -> bool {
        self.channels.len() == 3
    }

    pub fn planes(&self) -> &[Grid] {
        &self.channels
    }

    pub fn into_planes(self) -> Vec<Grid> {
        self.channels
    }

    /// Channel tags in plane order.
    pub fn channel_tags(&self) -> &'static [Channel] {
        if self.is_rgb() {
            &[Channel::R, Channel::G, Channel::B]
        } else {
            &[Channel::Gray]
        }
    }

    pub fn plane(&self, channel: Channel) -> Option<&Grid> {
        let idx = self.channel_tags().iter().position(|&c| c == channel)?;
        Some(&self.channels[idx])
    }

    /// BT.601 luma for RGB, the plane itself for grayscale.
    pub fn luma(&self) -> Grid {
        if !self.is_rgb() {
            return self.channels[0].clone();
        }
        let (r, g, b) = (&self.channels[0], &self.channels[1], &self.channels[2]);
        Grid::from_fn(self.width(), self.height(), |x, y| {
            0.299 * r.get(x, y) + 0.587 * g.get(x, y) + 0.114 * b.get(x, y)
        })
    }

    pub fn map_planes(&self, f: impl Fn(&Grid) -> Grid) -> Image {
        Image {
            channels: self.channels.iter().map(f).collect(),
        }
    }

    pub fn quantized(&self) -> Image {
        self.map_planes(Grid::quantized)
    }
}
