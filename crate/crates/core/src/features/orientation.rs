//! Principal-axis angles and center of mass of the mask.

use crate::linalg::{covariance, sym_eigen};
use crate::model::RoiMask;
use crate::scalar::Real;

/// Relative eigenvalue gap below which the major axis is treated as undefined.
const DEGENERACY_TOL: f64 = 1e-9;

/// `[theta_x, theta_y, theta_z, COM index x/y/z, COM x/y/z (mm)]`.
///
/// Angles are in degrees between the major inertia axis and each grid axis.
/// When the two largest eigenvalues coincide the axis is ambiguous and all
/// angles are 0.
pub fn orientation_features<T: Real>(mask: &RoiMask) -> Vec<T> {
    let pts: Vec<[T; 3]> = mask
        .foreground()
        .iter()
        .map(|v| [T::of_usize(v[0]), T::of_usize(v[1]), T::of_usize(v[2])])
        .collect();
    let (com, cov) = covariance(&pts);
    let (vals, vecs) = sym_eigen(cov);
    let degenerate = vals[0] <= T::zero() || (vals[0] - vals[1]) <= T::of(DEGENERACY_TOL) * vals[0];
    let mut out = Vec::with_capacity(9);
    for axis in 0..3 {
        if degenerate {
            out.push(T::zero());
        } else {
            let c = vecs[axis][0].abs().min(T::one());
            out.push(c.acos().to_degrees());
        }
    }
    out.extend_from_slice(&com);
    let sp = mask.spacing();
    for k in 0..3 {
        out.push(com[k] * T::of(sp[k]));
    }
    out
}
