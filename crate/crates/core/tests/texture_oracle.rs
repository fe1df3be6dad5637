mod common;

use common::texture::{binary_patches, compare_patch, random_patches, Patch};

const TOL: f64 = 1e-10;

#[test]
fn binary_three_by_three_patches() {
    for (k, patch) in binary_patches().iter().enumerate() {
        let (g, z, r) = compare_patch(patch);
        assert!(g <= TOL && z <= TOL && r <= TOL, "patch {k:09b}: glcm {g} glszm {z} glrlm {r}");
    }
}

#[test]
fn random_eight_by_eight_patches() {
    for (k, patch) in random_patches(10, 20240607).iter().enumerate() {
        let (g, z, r) = compare_patch(patch);
        assert!(g <= TOL && z <= TOL && r <= TOL, "patch {k}: glcm {g} glszm {z} glrlm {r}");
    }
}

#[test]
fn stacked_slices_with_an_empty_gap() {
    use rand::{Rng, SeedableRng};
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let (w, h, d) = (6, 5, 4);
    let values: Vec<f64> = (0..w * h * d).map(|_| r.gen_range(0.0..50.0)).collect();
    let mask: Vec<bool> = (0..w * h * d)
        .map(|i| {
            let z = i / (w * h);
            z != 2 && r.gen_bool(0.75)
        })
        .collect();
    let patch = Patch {
        width: w,
        height: h,
        depth: d,
        values,
        mask,
    };
    let (g, z, r) = compare_patch(&patch);
    assert!(g <= TOL && z <= TOL && r <= TOL, "glcm {g} glszm {z} glrlm {r}");
}
