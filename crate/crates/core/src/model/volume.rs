use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Voxel grid extents `(nx, ny, nz)`; the third axis is the axial slice axis.
pub type Dims = [usize; 3];
/// Physical voxel size in millimeters.
pub type Spacing = [f64; 3];

#[inline]
pub(crate) fn linear_index(dims: Dims, x: usize, y: usize, z: usize) -> usize {
    x + dims[0] * (y + dims[1] * z)
}

fn check_geometry(dims: Dims, spacing: Spacing, len: usize) -> Result<()> {
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::invalid(format!("dims must be positive, got {dims:?}")));
    }
    if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
        return Err(Error::invalid(format!(
            "spacing must be positive, got {spacing:?}"
        )));
    }
    let n = dims[0] * dims[1] * dims[2];
    if n != len {
        return Err(Error::invalid(format!(
            "voxel count {len} does not match dims {dims:?} ({n})"
        )));
    }
    Ok(())
}

/// 3-D scalar image stored x-fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageVolume<T> {
    dims: Dims,
    spacing: Spacing,
    voxels: Vec<T>,
}

impl<T: Real> ImageVolume<T> {
    pub fn new(dims: Dims, spacing: Spacing, voxels: Vec<T>) -> Result<Self> {
        check_geometry(dims, spacing, voxels.len())?;
        if voxels.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("image contains non-finite voxels"));
        }
        Ok(Self {
            dims,
            spacing,
            voxels,
        })
    }

    pub fn filled(dims: Dims, spacing: Spacing, value: T) -> Result<Self> {
        Self::new(dims, spacing, vec![value; dims[0] * dims[1] * dims[2]])
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn voxels(&self) -> &[T] {
        &self.voxels
    }

    pub fn voxels_mut(&mut self) -> &mut [T] {
        &mut self.voxels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> T {
        self.voxels[linear_index(self.dims, x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, v: T) {
        let i = linear_index(self.dims, x, y, z);
        self.voxels[i] = v;
    }

    /// Copy of axial slice `z`, row-major with x fastest.
    pub fn slice(&self, z: usize) -> Vec<T> {
        let n = self.dims[0] * self.dims[1];
        self.voxels[z * n..(z + 1) * n].to_vec()
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> ImageVolume<U> {
        ImageVolume {
            dims: self.dims,
            spacing: self.spacing,
            voxels: self.voxels.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Binary lesion segmentation aligned to an [`ImageVolume`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiMask {
    dims: Dims,
    spacing: Spacing,
    voxels: Vec<bool>,
}

impl RoiMask {
    /// Builds a mask; at least one voxel must be set.
    pub fn new(dims: Dims, spacing: Spacing, voxels: Vec<bool>) -> Result<Self> {
        let m = Self::new_allow_empty(dims, spacing, voxels)?;
        if m.count() == 0 {
            return Err(Error::EmptyMask);
        }
        Ok(m)
    }

    /// Same as [`RoiMask::new`] without the non-empty check; used for
    /// intermediate results such as set differences.
    pub fn new_allow_empty(dims: Dims, spacing: Spacing, voxels: Vec<bool>) -> Result<Self> {
        check_geometry(dims, spacing, voxels.len())?;
        Ok(Self {
            dims,
            spacing,
            voxels,
        })
    }

    pub fn from_fn(
        dims: Dims,
        spacing: Spacing,
        f: impl Fn(usize, usize, usize) -> bool,
    ) -> Result<Self> {
        let mut voxels = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    voxels.push(f(x, y, z));
                }
            }
        }
        Self::new(dims, spacing, voxels)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn voxels(&self) -> &[bool] {
        &self.voxels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.voxels[linear_index(self.dims, x, y, z)]
    }

    /// Neighbor lookup that treats everything outside the grid as background.
    #[inline]
    pub fn get_signed(&self, x: isize, y: isize, z: isize) -> bool {
        if x < 0 || y < 0 || z < 0 {
            return false;
        }
        let (x, y, z) = (x as usize, y as usize, z as usize);
        if x >= self.dims[0] || y >= self.dims[1] || z >= self.dims[2] {
            return false;
        }
        self.get(x, y, z)
    }

    pub fn count(&self) -> usize {
        self.voxels.iter().filter(|&&v| v).count()
    }

    /// Foreground voxel coordinates in x-fastest order.
    pub fn foreground(&self) -> Vec<[usize; 3]> {
        let mut out = Vec::new();
        for z in 0..self.dims[2] {
            for y in 0..self.dims[1] {
                for x in 0..self.dims[0] {
                    if self.get(x, y, z) {
                        out.push([x, y, z]);
                    }
                }
            }
        }
        out
    }

    /// Axial slices that contain at least one foreground voxel.
    pub fn occupied_slices(&self) -> Vec<usize> {
        let n = self.dims[0] * self.dims[1];
        (0..self.dims[2])
            .filter(|&z| self.voxels[z * n..(z + 1) * n].iter().any(|&v| v))
            .collect()
    }

    pub fn slice(&self, z: usize) -> Vec<bool> {
        let n = self.dims[0] * self.dims[1];
        self.voxels[z * n..(z + 1) * n].to_vec()
    }

    pub fn same_geometry(&self, dims: Dims, spacing: Spacing) -> bool {
        self.dims == dims && self.spacing == spacing
    }
}

/// An image and mask that have been checked to share geometry.
#[derive(Debug, Clone, Copy)]
pub struct Paired<'a, T> {
    pub image: &'a ImageVolume<T>,
    pub mask: &'a RoiMask,
}

/// Pairs an image with its mask, rejecting mismatched dims or spacing.
pub fn pair<'a, T: Real>(image: &'a ImageVolume<T>, mask: &'a RoiMask) -> Result<Paired<'a, T>> {
    if !mask.same_geometry(image.dims(), image.spacing()) {
        return Err(Error::Pairing);
    }
    if mask.count() == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(Paired { image, mask })
}
