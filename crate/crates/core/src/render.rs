//! Crystal label maps drawn as color images.
//!
//! Cells are laid out centered (DC in the middle). Each cluster id gets a
//! color from a fixed integer hash, so the same clustering always renders to
//! the same bytes. Unassigned cells, and cells of clusters removed by a pole
//! filter, are black.

use crate::codec::encode_png;
use crate::error::{Error, Result};
use crate::image::{Grid, Image};
use crate::isms::Clustering;
use crate::topology::{PlaneDims, PoleLabel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrystalImage {
    pub dims: PlaneDims,
    /// Cluster id per centered cell, `None` for black.
    pub labels: Vec<Option<usize>>,
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Palette color of a cluster id. Every channel is at least 48, so no
/// cluster is ever drawn black.
pub fn color_of(id: usize) -> [u8; 3] {
    let h = mix(id as u64);
    [0, 8, 16].map(|s| 48 + ((h >> s) & 0xff) as u8 % 208)
}

impl CrystalImage {
    /// Labels from a spectral clustering; `only` keeps clusters of one pole.
    pub fn from_clustering(clustering: &Clustering, dims: PlaneDims, only: Option<PoleLabel>) -> Result<Self> {
        if clustering.assignment.len() != dims.cells() || clustering.space.dims().is_some_and(|d| d != dims) {
            return Err(Error::dims(
                (dims.width(), dims.height()),
                (clustering.assignment.len(), 1),
            ));
        }
        let keep = |id: usize| match only {
            None => true,
            Some(p) => clustering.cluster(id).is_some_and(|c| c.pole() == p),
        };
        let labels = clustering
            .assignment
            .iter()
            .map(|a| a.filter(|&id| keep(id)))
            .collect();
        Ok(Self { dims, labels })
    }

    pub fn to_image(&self) -> Image {
        let (w, h) = (self.dims.width(), self.dims.height());
        let plane = |ch: usize| {
            Grid::from_fn(w, h, |x, y| {
                self.labels[y * w + x].map_or(0.0, |id| color_of(id)[ch] as f64)
            })
        };
        Image::rgb(plane(0), plane(1), plane(2)).expect("planes share dims")
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        encode_png(&self.to_image())
    }
}
