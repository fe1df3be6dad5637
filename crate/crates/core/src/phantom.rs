//! Synthetic labeled lesion datasets with controllable class separability.

use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{write_image, write_manifest, write_mask, Dims, ElementType, ImageVolume, PatientRecord, RoiMask, Sex, Spacing};
use crate::rng;

pub const LOCATIONS: [&str; 3] = ["gastric", "small_bowel", "other"];

/// Lobe count of the boundary modulation.
const LOBES: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub n_per_class: usize,
    pub dims: Dims,
    pub spacing: Spacing,
    /// Semi-axis range in voxels.
    pub radius_range: (f64, f64),
    pub background: f64,
    pub background_noise: f64,
    pub lesion_intensity: f64,
    /// Texture amplitude shared by both classes.
    pub base_texture: f64,
    /// Relative radius of the low-intensity core in positive lesions; 0 disables it.
    pub necrosis_fraction: f64,
    pub necrosis_depth: f64,
    /// Extra texture amplitude of positive lesions.
    pub texture_contrast: f64,
    /// Intensity offset of positive lesions.
    pub intensity_offset: f64,
    /// Relative boundary lobulation amplitude of positive lesions.
    pub lobulation: f64,
    /// Additive intensity per batch; each patient draws its batch uniformly.
    pub batch_shifts: Vec<f64>,
    pub seed: u64,
}

impl PhantomSpec {
    /// Strongly separable classes on `dims` volumes.
    pub fn high_contrast(n_per_class: usize, dims: Dims, seed: u64) -> Self {
        let r = dims.iter().copied().min().unwrap_or(0) as f64;
        Self {
            n_per_class,
            dims,
            spacing: [0.8, 0.8, 2.0],
            radius_range: (0.17 * r, 0.3 * r),
            background: -50.0,
            background_noise: 10.0,
            lesion_intensity: 40.0,
            base_texture: 10.0,
            necrosis_fraction: 0.5,
            necrosis_depth: 60.0,
            texture_contrast: 20.0,
            intensity_offset: 15.0,
            lobulation: 0.25,
            batch_shifts: vec![0.0, 20.0],
            seed,
        }
    }

    /// Same geometry and noise, but both classes drawn from one distribution.
    pub fn null_contrast(n_per_class: usize, dims: Dims, seed: u64) -> Self {
        Self {
            necrosis_fraction: 0.0,
            necrosis_depth: 0.0,
            texture_contrast: 0.0,
            intensity_offset: 0.0,
            lobulation: 0.0,
            ..Self::high_contrast(n_per_class, dims, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_per_class == 0 {
            return Err(Error::invalid("n_per_class must be at least 1"));
        }
        if self.dims.iter().any(|&d| d == 0) || self.spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::invalid("dims and spacing must be positive"));
        }
        let knobs = [
            self.background,
            self.background_noise,
            self.lesion_intensity,
            self.base_texture,
            self.necrosis_fraction,
            self.necrosis_depth,
            self.texture_contrast,
            self.intensity_offset,
            self.lobulation,
            self.radius_range.0,
            self.radius_range.1,
        ];
        if knobs.iter().chain(&self.batch_shifts).any(|v| !v.is_finite()) {
            return Err(Error::invalid("phantom knobs must be finite"));
        }
        let (lo, hi) = self.radius_range;
        if !(lo >= 1.0 && hi >= lo) {
            return Err(Error::invalid("radius range must satisfy 1 <= min <= max"));
        }
        if !(0.0..1.0).contains(&self.lobulation) || !(0.0..=1.0).contains(&self.necrosis_fraction) {
            return Err(Error::invalid("lobulation must be in [0,1), necrosis fraction in [0,1]"));
        }
        let reach = hi * (1.0 + self.lobulation) + 1.0;
        if self.dims.iter().any(|&d| 2.0 * reach > d as f64) {
            return Err(Error::invalid(format!(
                "lesion of radius up to {reach:.1} voxels does not fit in {:?}",
                self.dims
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PhantomCase {
    pub record: PatientRecord,
    pub image: ImageVolume<f64>,
    pub mask: RoiMask,
}

/// Generates `2·n_per_class` patients: indices `0..n` are negatives, `n..2n`
/// positives. Patient `i` draws only from the stream `(seed, i)`.
pub fn generate_dataset(spec: &PhantomSpec) -> Result<Vec<PhantomCase>> {
    spec.validate()?;
    (0..2 * spec.n_per_class)
        .into_par_iter()
        .map(|i| generate_patient(spec, i))
        .collect()
}

fn generate_patient(spec: &PhantomSpec, index: usize) -> Result<PhantomCase> {
    let mut r = rng::stream(spec.seed, index as u64);
    let label = u8::from(index >= spec.n_per_class);
    let positive = label == 1;
    let [nx, ny, nz] = spec.dims;

    let (lo, hi) = spec.radius_range;
    let radii = [r.gen_range(lo..=hi), r.gen_range(lo..=hi), r.gen_range(lo..=hi)];
    let angle = r.gen_range(0.0..std::f64::consts::PI);
    let lobe_phase = r.gen_range(0.0..2.0 * std::f64::consts::PI);
    let lobulation = if positive { spec.lobulation } else { 0.0 };
    let reach = radii.iter().cloned().fold(0.0, f64::max) * (1.0 + lobulation) + 1.0;
    let mut center = [0.0; 3];
    for k in 0..3 {
        let half = spec.dims[k] as f64 / 2.0;
        let slack = (half - reach).max(0.0) * 0.5;
        center[k] = half - 0.5 + r.gen_range(-slack..=slack);
    }
    let z: f64 = StandardNormal.sample(&mut r);
    let age = (60.0 + 12.0 * z).clamp(18.0, 95.0).round();
    let sex = if r.gen_bool(0.5) { Sex::M } else { Sex::F };
    let location = LOCATIONS[r.gen_range(0..LOCATIONS.len())];
    let batch = (!spec.batch_shifts.is_empty()).then(|| r.gen_range(0..spec.batch_shifts.len()));

    let n = nx * ny * nz;
    let white: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut r)).collect();
    let texture = smooth_unit(&white, spec.dims, 1.0);
    let scanner: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut r)).collect();

    let (ca, sa) = (angle.cos(), angle.sin());
    let mut inside = vec![false; n];
    let mut rho = vec![f64::INFINITY; n];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let d = [x as f64 - center[0], y as f64 - center[1], z as f64 - center[2]];
                let u = (ca * d[0] + sa * d[1]) / radii[0];
                let v = (-sa * d[0] + ca * d[1]) / radii[1];
                let w = d[2] / radii[2];
                let p = (u * u + v * v + w * w).sqrt();
                let limit = 1.0 + lobulation * (LOBES * v.atan2(u) + lobe_phase).cos();
                let i = x + nx * (y + ny * z);
                rho[i] = p / limit;
                inside[i] = rho[i] <= 1.0;
            }
        }
    }
    let mask = RoiMask::new(spec.dims, spec.spacing, inside)?;

    let shift = batch.map(|b| spec.batch_shifts[b]).unwrap_or(0.0);
    let amplitude = spec.base_texture + if positive { spec.texture_contrast } else { 0.0 };
    let mut voxels = vec![0.0; n];
    for i in 0..n {
        let mut v = spec.background + spec.background_noise * scanner[i];
        if mask.voxels()[i] {
            v = spec.lesion_intensity + spec.background_noise * scanner[i] + amplitude * texture[i];
            if positive {
                v += spec.intensity_offset;
                if rho[i] < spec.necrosis_fraction {
                    v -= spec.necrosis_depth;
                }
            }
        }
        // stored precision is single, so generate exactly what a reader sees
        voxels[i] = (v + shift) as f32 as f64;
    }
    let image = ImageVolume::new(spec.dims, spec.spacing, voxels)?;

    let id = format!("P{index:04}");
    let record = PatientRecord {
        id: id.clone(),
        label,
        age: Some(age),
        sex: Some(sex),
        location: Some(location.to_string()),
        batch: batch.map(|b| format!("scanner{b}")),
        image_path: format!("images/{id}.mhd").into(),
        mask_path: format!("masks/{id}.mhd").into(),
    };
    Ok(PhantomCase { record, image, mask })
}

/// Gaussian-smoothed white noise rescaled to unit variance.
fn smooth_unit(white: &[f64], dims: Dims, sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as isize;
    let k: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = k.iter().sum();
    let k: Vec<f64> = k.iter().map(|v| v / total).collect();
    let gain = k.iter().map(|v| v * v).sum::<f64>().powf(1.5);
    let mut cur = white.to_vec();
    let strides = [1, dims[0], dims[0] * dims[1]];
    for axis in 0..3 {
        let mut next = vec![0.0; cur.len()];
        let len = dims[axis] as isize;
        for (i, out) in next.iter_mut().enumerate() {
            let pos = ((i / strides[axis]) % dims[axis]) as isize;
            let base = i - pos as usize * strides[axis];
            let mut acc = 0.0;
            for (j, &c) in k.iter().enumerate() {
                let q = (pos + j as isize - r).clamp(0, len - 1) as usize;
                acc += c * cur[base + q * strides[axis]];
            }
            *out = acc;
        }
        cur = next;
    }
    cur.iter().map(|v| v / gain).collect()
}

/// Writes `manifest.csv`, `images/*.mhd` (float) and `masks/*.mhd` under `dir`.
pub fn write_dataset(dir: &Path, cases: &[PhantomCase]) -> Result<()> {
    for sub in ["images", "masks"] {
        let p = dir.join(sub);
        std::fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }
    for c in cases {
        write_image(dir.join(&c.record.image_path), &c.image, ElementType::Float)?;
        write_mask(dir.join(&c.record.mask_path), &c.mask)?;
    }
    let records: Vec<PatientRecord> = cases.iter().map(|c| c.record.clone()).collect();
    write_manifest(&records, dir.join("manifest.csv"))
}

const FACE_NEIGHBORS: [(isize, isize, isize); 6] =
    [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)];

/// Simulated second-observer segmentation: boundary voxels are removed with
/// probability `magnitude`, then the outer boundary of the result grows with
/// probability `magnitude / 2`. The largest 6-connected component is kept.
pub fn perturb_mask(mask: &RoiMask, magnitude: f64, seed: u64) -> Result<RoiMask> {
    if !(0.0..=1.0).contains(&magnitude) {
        return Err(Error::invalid("perturbation magnitude must be in [0, 1]"));
    }
    if magnitude == 0.0 {
        return Ok(mask.clone());
    }
    let mut r = rng::from_seed(seed);
    let dims = mask.dims();
    let idx = |x: usize, y: usize, z: usize| x + dims[0] * (y + dims[1] * z);
    let on_boundary = |m: &[bool], x: usize, y: usize, z: usize, want: bool| {
        FACE_NEIGHBORS.iter().any(|&(dx, dy, dz)| {
            let (a, b, c) = (x as isize + dx, y as isize + dy, z as isize + dz);
            let inb = a >= 0 && b >= 0 && c >= 0 && (a as usize) < dims[0] && (b as usize) < dims[1] && (c as usize) < dims[2];
            let v = inb && m[idx(a as usize, b as usize, c as usize)];
            v == want
        })
    };

    let src = mask.voxels();
    let mut eroded = src.to_vec();
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let i = idx(x, y, z);
                if src[i] && on_boundary(src, x, y, z, false) && r.gen_bool(magnitude) {
                    eroded[i] = false;
                }
            }
        }
    }
    let mut grown = eroded.clone();
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let i = idx(x, y, z);
                if !eroded[i] && on_boundary(&eroded, x, y, z, true) && r.gen_bool(magnitude / 2.0) {
                    grown[i] = true;
                }
            }
        }
    }
    let kept = largest_component(&grown, dims);
    if !kept.iter().any(|&b| b) {
        return Err(Error::invalid("perturbation emptied the mask"));
    }
    RoiMask::new(dims, mask.spacing(), kept)
}

/// Largest 6-connected foreground component; ties go to the lowest voxel index.
pub fn largest_component(voxels: &[bool], dims: Dims) -> Vec<bool> {
    let n = voxels.len();
    let mut label = vec![usize::MAX; n];
    let mut best = (0usize, usize::MAX);
    let mut stack = Vec::new();
    for start in 0..n {
        if !voxels[start] || label[start] != usize::MAX {
            continue;
        }
        let mut size = 0;
        label[start] = start;
        stack.push(start);
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y, z) = (i % dims[0], (i / dims[0]) % dims[1], i / (dims[0] * dims[1]));
            for &(dx, dy, dz) in &FACE_NEIGHBORS {
                let (a, b, c) = (x as isize + dx, y as isize + dy, z as isize + dz);
                if a < 0 || b < 0 || c < 0 || a as usize >= dims[0] || b as usize >= dims[1] || c as usize >= dims[2] {
                    continue;
                }
                let j = a as usize + dims[0] * (b as usize + dims[1] * c as usize);
                if voxels[j] && label[j] == usize::MAX {
                    label[j] = start;
                    stack.push(j);
                }
            }
        }
        if size > best.0 {
            best = (size, start);
        }
    }
    if best.0 == 0 {
        return vec![false; n];
    }
    label.iter().map(|&l| l == best.1).collect()
}
