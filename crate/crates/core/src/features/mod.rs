//! Radiomic feature extraction. `extract_all` produces the 564 imaging
//! features in dictionary order.

pub mod filters;
pub mod glcm;
pub mod matrices;
pub mod orientation;
pub mod phase;
pub mod roi;
pub mod shape;
pub mod stats;

use rayon::prelude::*;

use crate::error::Result;
use crate::model::names::{self, FeatureGroup};
use crate::model::{FeatureTable, ImageVolume, Paired, RoiMask};
use crate::scalar::Real;

pub use filters::filter_bank_features;
pub use stats::{stats13, StatVector13, GRAY_LEVELS, HISTOGRAM_BINS};

/// Thirteen first-order statistics over the in-mask intensities.
pub fn histogram_features<T: Real>(p: Paired<'_, T>) -> Vec<T> {
    let values: Vec<T> = p
        .mask
        .voxels()
        .iter()
        .zip(p.image.voxels())
        .filter(|(&m, _)| m)
        .map(|(_, &v)| v)
        .collect();
    stats13(&values).to_array().to_vec()
}

/// All imaging features of one pair, in dictionary order. A texture family
/// that cannot be computed (e.g. no co-occurring pixel pair) is left NaN.
pub fn extract_all<T: Real>(p: Paired<'_, T>) -> Vec<T> {
    let mut out = Vec::with_capacity(564);
    out.extend(histogram_features(p));
    out.extend(shape::shape_features::<T>(p.mask));
    out.extend(orientation::orientation_features::<T>(p.mask));
    match glcm::glcm_features(p) {
        Ok(v) => out.extend(v),
        Err(_) => out.extend(std::iter::repeat(T::nan()).take(144)),
    }
    match matrices::matrix_family_features(p) {
        Ok(v) => out.extend(v),
        Err(_) => out.extend(std::iter::repeat(T::nan()).take(51)),
    }
    out.extend(filter_bank_features(p));
    debug_assert_eq!(out.len(), names::canonical_features().len());
    out
}

/// Which imaging families to compute; the rest are omitted from the table.
pub fn extract_table(
    cases: &[(String, ImageVolume<f64>, RoiMask)],
    groups: &[FeatureGroup],
) -> Result<FeatureTable> {
    let specs = names::canonical_features();
    let keep: Vec<usize> = specs
        .iter()
        .enumerate()
        .filter(|(_, s)| groups.iter().any(|g| g.selects(s.group, &s.name)))
        .map(|(i, _)| i)
        .collect();
    let rows: Vec<Vec<f64>> = cases
        .par_iter()
        .map(|(_, img, mask)| {
            let p = crate::model::pair(img, mask)?;
            let all = extract_all(p);
            Ok(keep.iter().map(|&i| all[i]).collect())
        })
        .collect::<Result<_>>()?;
    let names: Vec<String> = keep.iter().map(|&i| specs[i].name.clone()).collect();
    let tags: Vec<FeatureGroup> = keep.iter().map(|&i| specs[i].group).collect();
    FeatureTable::new(
        cases.iter().map(|c| c.0.clone()).collect(),
        names,
        tags,
        rows.into_iter().flatten().collect(),
    )
}
