//! Per-slice view of a quantized ROI shared by the texture matrices.

use crate::error::{Error, Result};
use crate::features::stats::quantize_with;
use crate::model::Paired;
use crate::scalar::Real;

/// One axial slice: gray level per pixel, `None` outside the mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSlice {
    pub width: usize,
    pub height: usize,
    pub levels: Vec<Option<u8>>,
}

impl LevelSlice {
    pub fn new(width: usize, height: usize, levels: Vec<Option<u8>>) -> Self {
        assert_eq!(levels.len(), width * height);
        Self {
            width,
            height,
            levels,
        }
    }

    #[inline]
    pub fn at(&self, x: isize, y: isize) -> Option<u8> {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            None
        } else {
            self.levels[y as usize * self.width + x as usize]
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.levels.iter().filter(|l| l.is_some()).count()
    }
}

/// The occupied slices of an ROI after pooled 3-D quantization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedRoi {
    pub n_levels: usize,
    pub slices: Vec<LevelSlice>,
}

impl QuantizedRoi {
    /// Quantizes all in-mask voxels together into `n_levels` equal-width bins.
    pub fn new<T: Real>(p: Paired<'_, T>, n_levels: usize) -> Result<Self> {
        if n_levels == 0 || n_levels > 256 {
            return Err(Error::invalid("gray levels must be in 1..=256"));
        }
        let dims = p.image.dims();
        let plane = dims[0] * dims[1];
        let mvox = p.mask.voxels();
        let ivox = p.image.voxels();
        let values: Vec<T> = mvox
            .iter()
            .zip(ivox)
            .filter_map(|(&m, &v)| m.then_some(v))
            .collect();
        if values.is_empty() {
            return Err(Error::EmptyMask);
        }
        let (lo, hi) = values
            .iter()
            .fold((values[0], values[0]), |(a, b), &v| (a.min(v), b.max(v)));
        let q = quantize_with(&values, lo, hi, n_levels);
        let mut it = q.into_iter();
        let mut slices = Vec::new();
        for z in 0..dims[2] {
            let ms = &mvox[z * plane..(z + 1) * plane];
            if !ms.iter().any(|&m| m) {
                continue;
            }
            let levels = ms
                .iter()
                .map(|&m| m.then(|| it.next().expect("level per voxel") as u8))
                .collect();
            slices.push(LevelSlice::new(dims[0], dims[1], levels));
        }
        Ok(Self { n_levels, slices })
    }

    pub fn pixel_count(&self) -> usize {
        self.slices.iter().map(LevelSlice::pixel_count).sum()
    }
}

pub(crate) const NEIGHBORS8: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Unit steps for 0°, 45°, 90° and 135° (y grows downward).
pub const DIRECTIONS: [(isize, isize); 4] = [(1, 0), (1, 1), (0, 1), (-1, 1)];
