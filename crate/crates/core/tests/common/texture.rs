//! Brute-force texture reference used by the oracle tests.
//!
//! Works from raw voxel lists: pixel pairs are enumerated directly, runs are
//! found by testing every segment for maximality and zones come from a
//! union-find over 8-neighbours.

use std::collections::BTreeMap;

pub const LEVELS: usize = 16;

/// A stack of 2-D slices stored x-fastest; `None` is outside the ROI.
pub struct Patch {
    pub width: usize,
    pub height: usize,
    pub depth: usize,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

/// Level per voxel (0-based), or `None` outside the ROI.
pub fn levels(patch: &Patch) -> Vec<Option<usize>> {
    let inside: Vec<f64> = patch
        .values
        .iter()
        .zip(&patch.mask)
        .filter(|(_, &m)| m)
        .map(|(&v, _)| v)
        .collect();
    let lo = inside.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = inside.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    patch
        .values
        .iter()
        .zip(&patch.mask)
        .map(|(&v, &m)| {
            if !m {
                return None;
            }
            if hi == lo {
                return Some(0);
            }
            let bin = ((v - lo) * LEVELS as f64 / (hi - lo)).floor() as usize;
            Some(bin.min(LEVELS - 1))
        })
        .collect()
}

fn level_at(patch: &Patch, lv: &[Option<usize>], x: i64, y: i64, z: usize) -> Option<usize> {
    if x < 0 || y < 0 || x >= patch.width as i64 || y >= patch.height as i64 {
        return None;
    }
    lv[z * patch.width * patch.height + y as usize * patch.width + x as usize]
}

fn occupied(patch: &Patch, z: usize) -> bool {
    let plane = patch.width * patch.height;
    patch.mask[z * plane..(z + 1) * plane].iter().any(|&m| m)
}

const ANGLES: [(u32, &str); 4] = [(0, "0.0"), (45, "0.79"), (90, "1.57"), (135, "2.36")];

fn offset(deg: u32, d: usize) -> (i64, i64) {
    let t = (deg as f64).to_radians();
    ((t.cos() * d as f64).round() as i64, (t.sin() * d as f64).round() as i64)
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let va = a.iter().map(|v| (v - ma).powi(2)).sum::<f64>() / n;
    let vb = b.iter().map(|v| (v - mb).powi(2)).sum::<f64>() / n;
    if va <= 1e-15 || vb <= 1e-15 {
        return f64::NAN;
    }
    let c = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
    c / (va * vb).sqrt()
}

/// contrast, dissimilarity, homogeneity, ASM, energy, correlation of a pair list.
fn pair_features(pairs: &[(usize, usize)]) -> Option<[f64; 6]> {
    if pairs.is_empty() {
        return None;
    }
    let n = pairs.len() as f64;
    let diff = |f: &dyn Fn(f64) -> f64| pairs.iter().map(|&(a, b)| f(a as f64 - b as f64)).sum::<f64>() / n;
    let contrast = diff(&|d| d * d);
    let dissimilarity = diff(&|d| d.abs());
    let homogeneity = diff(&|d| 1.0 / (1.0 + d * d));
    let mut counts: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &p in pairs {
        *counts.entry(p).or_default() += 1.0;
    }
    let asm = counts.values().map(|c| (c / n).powi(2)).sum::<f64>();
    let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
    Some([contrast, dissimilarity, homogeneity, asm, asm.sqrt(), pearson(&a, &b)])
}

fn finite_mean_std(v: &[f64]) -> (f64, f64) {
    let f: Vec<f64> = v.iter().cloned().filter(|x| x.is_finite()).collect();
    if f.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = f.iter().sum::<f64>() / f.len() as f64;
    let var = f.iter().map(|x| (x - m).powi(2)).sum::<f64>() / f.len() as f64;
    (m, var.sqrt())
}

/// Co-occurrence features keyed by dictionary name.
pub fn glcm(patch: &Patch) -> BTreeMap<String, f64> {
    const NAMES: [&str; 6] = ["contrast", "dissimilarity", "homogeneity", "ASM", "energy", "correlation"];
    let lv = levels(patch);
    let mut out = BTreeMap::new();
    for d in [1usize, 3] {
        for (deg, label) in ANGLES {
            let (dx, dy) = offset(deg, d);
            let mut all = Vec::new();
            let mut per_slice = Vec::new();
            for z in (0..patch.depth).filter(|&z| occupied(patch, z)) {
                let mut pairs = Vec::new();
                for y in 0..patch.height as i64 {
                    for x in 0..patch.width as i64 {
                        let here = level_at(patch, &lv, x, y, z);
                        for (px, py) in [(x + dx, y + dy), (x - dx, y - dy)] {
                            if let (Some(a), Some(b)) = (here, level_at(patch, &lv, px, py, z)) {
                                pairs.push((a, b));
                            }
                        }
                    }
                }
                if let Some(f) = pair_features(&pairs) {
                    per_slice.push(f);
                }
                all.extend(pairs);
            }
            let summed = pair_features(&all);
            for (k, name) in NAMES.iter().enumerate() {
                let tail = format!("{name}d{d}.0A{label}");
                let (plain, mean, std) = match summed {
                    Some(f) => {
                        let col: Vec<f64> = per_slice.iter().map(|v| v[k]).collect();
                        let (m, s) = finite_mean_std(&col);
                        (f[k], m, s)
                    }
                    None => (f64::NAN, f64::NAN, f64::NAN),
                };
                out.insert(format!("tf_GLCM_{tail}"), plain);
                out.insert(format!("tf_GLCMMS_{tail}mean"), mean);
                out.insert(format!("tf_GLCMMS_{tail}std"), std);
            }
        }
    }
    out
}

/// Every maximal uniform segment along the four in-plane directions, as
/// `(level, length)`.
pub fn runs(patch: &Patch) -> Vec<(usize, usize)> {
    let lv = levels(patch);
    let mut found = Vec::new();
    for z in (0..patch.depth).filter(|&z| occupied(patch, z)) {
        for (deg, _) in ANGLES {
            let (dx, dy) = offset(deg, 1);
            for y in 0..patch.height as i64 {
                for x in 0..patch.width as i64 {
                    let Some(g) = level_at(patch, &lv, x, y, z) else {
                        continue;
                    };
                    if level_at(patch, &lv, x - dx, y - dy, z) == Some(g) {
                        continue;
                    }
                    let longest = patch.width.max(patch.height);
                    for len in 1..=longest {
                        let uniform = (0..len as i64)
                            .all(|k| level_at(patch, &lv, x + k * dx, y + k * dy, z) == Some(g));
                        let closed = level_at(patch, &lv, x + len as i64 * dx, y + len as i64 * dy, z) != Some(g);
                        if uniform && closed {
                            found.push((g, len));
                        }
                    }
                }
            }
        }
    }
    found
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut i = i;
    while parent[i] != r {
        let next = parent[i];
        parent[i] = r;
        i = next;
    }
    r
}

/// 8-connected equal-level zones of each slice, as `(level, size)`.
pub fn zones(patch: &Patch) -> Vec<(usize, usize)> {
    let lv = levels(patch);
    let (w, h) = (patch.width, patch.height);
    let mut found = Vec::new();
    for z in 0..patch.depth {
        let mut parent: Vec<usize> = (0..w * h).collect();
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                let Some(g) = level_at(patch, &lv, x, y, z) else {
                    continue;
                };
                for ny in y - 1..=y + 1 {
                    for nx in x - 1..=x + 1 {
                        if level_at(patch, &lv, nx, ny, z) == Some(g) {
                            let a = find(&mut parent, y as usize * w + x as usize);
                            let b = find(&mut parent, ny as usize * w + nx as usize);
                            parent[a.max(b)] = a.min(b);
                        }
                    }
                }
            }
        }
        let mut sizes: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for i in 0..w * h {
            if let Some(g) = lv[z * w * h + i] {
                let root = find(&mut parent, i);
                sizes.entry(root).or_insert((g, 0)).1 += 1;
            }
        }
        found.extend(sizes.into_values());
    }
    found
}

struct ListStats {
    short: f64,
    long: f64,
    low: f64,
    high: f64,
    short_low: f64,
    short_high: f64,
    long_low: f64,
    long_high: f64,
    gln: f64,
    sn: f64,
    glv: f64,
    sv: f64,
    entropy: f64,
    count: f64,
}

fn list_stats(items: &[(usize, usize)]) -> Option<ListStats> {
    if items.is_empty() {
        return None;
    }
    let n = items.len() as f64;
    let avg = |f: &dyn Fn(f64, f64) -> f64| items.iter().map(|&(g, l)| f((g + 1) as f64, l as f64)).sum::<f64>() / n;
    let mut by_level: BTreeMap<usize, f64> = BTreeMap::new();
    let mut by_size: BTreeMap<usize, f64> = BTreeMap::new();
    let mut joint: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(g, l) in items {
        *by_level.entry(g).or_default() += 1.0;
        *by_size.entry(l).or_default() += 1.0;
        *joint.entry((g, l)).or_default() += 1.0;
    }
    let mi = avg(&|i, _| i);
    let ml = avg(&|_, l| l);
    Some(ListStats {
        short: avg(&|_, l| 1.0 / (l * l)),
        long: avg(&|_, l| l * l),
        low: avg(&|i, _| 1.0 / (i * i)),
        high: avg(&|i, _| i * i),
        short_low: avg(&|i, l| 1.0 / (i * i * l * l)),
        short_high: avg(&|i, l| i * i / (l * l)),
        long_low: avg(&|i, l| l * l / (i * i)),
        long_high: avg(&|i, l| i * i * l * l),
        gln: by_level.values().map(|c| c * c).sum::<f64>() / n,
        sn: by_size.values().map(|c| c * c).sum::<f64>() / n,
        glv: avg(&|i, _| (i - mi).powi(2)),
        sv: avg(&|_, l| (l - ml).powi(2)),
        entropy: -joint.values().map(|c| (c / n) * (c / n).log2()).sum::<f64>(),
        count: n,
    })
}

fn roi_pixels(patch: &Patch) -> f64 {
    patch.mask.iter().filter(|&&m| m).count() as f64
}

pub fn glrlm(patch: &Patch) -> BTreeMap<String, f64> {
    let s = list_stats(&runs(patch));
    let np = roi_pixels(patch);
    let rows: Vec<(&str, Box<dyn Fn(&ListStats) -> f64>)> = vec![
        ("GrayLevelNonUniformity", Box::new(|s| s.gln)),
        ("GrayLevelNonUniformityNormalized", Box::new(|s| s.gln / s.count)),
        ("GrayLevelVariance", Box::new(|s| s.glv)),
        ("HighGrayLevelRunEmphasis", Box::new(|s| s.high)),
        ("LongRunEmphasis", Box::new(|s| s.long)),
        ("LongRunHighGrayLevelEmphasis", Box::new(|s| s.long_high)),
        ("LongRunLowGrayLevelEmphasis", Box::new(|s| s.long_low)),
        ("LowGrayLevelRunEmphasis", Box::new(|s| s.low)),
        ("RunEntropy", Box::new(|s| s.entropy)),
        ("RunLengthNonUniformity", Box::new(|s| s.sn)),
        ("RunLengthNonUniformityNormalized", Box::new(|s| s.sn / s.count)),
        ("RunPercentage", Box::new(move |s| s.count / (np * 4.0))),
        ("RunVariance", Box::new(|s| s.sv)),
        ("ShortRunEmphasis", Box::new(|s| s.short)),
        ("ShortRunHighGrayLevelEmphasis", Box::new(|s| s.short_high)),
        ("ShortRunLowGrayLevelEmphasis", Box::new(|s| s.short_low)),
    ];
    rows.into_iter()
        .map(|(name, f)| (format!("tf_GLRLM_{name}"), s.as_ref().map_or(f64::NAN, |s| f(s))))
        .collect()
}

pub fn glszm(patch: &Patch) -> BTreeMap<String, f64> {
    let s = list_stats(&zones(patch));
    let np = roi_pixels(patch);
    let rows: Vec<(&str, Box<dyn Fn(&ListStats) -> f64>)> = vec![
        ("GrayLevelNonUniformity", Box::new(|s| s.gln)),
        ("GrayLevelNonUniformityNormalized", Box::new(|s| s.gln / s.count)),
        ("GrayLevelVariance", Box::new(|s| s.glv)),
        ("HighGrayLevelZoneEmphasis", Box::new(|s| s.high)),
        ("LargeAreaEmphasis", Box::new(|s| s.long)),
        ("LargeAreaHighGrayLevelEmphasis", Box::new(|s| s.long_high)),
        ("LargeAreaLowGrayLevelEmphasis", Box::new(|s| s.long_low)),
        ("LowGrayLevelZoneEmphasis", Box::new(|s| s.low)),
        ("SizeZoneNonUniformity", Box::new(|s| s.sn)),
        ("SizeZoneNonUniformityNormalized", Box::new(|s| s.sn / s.count)),
        ("SmallAreaEmphasis", Box::new(|s| s.short)),
        ("SmallAreaHighGrayLevelEmphasis", Box::new(|s| s.short_high)),
        ("SmallAreaLowGrayLevelEmphasis", Box::new(|s| s.short_low)),
        ("ZoneEntropy", Box::new(|s| s.entropy)),
        ("ZonePercentage", Box::new(move |s| s.count / np)),
        ("ZoneVariance", Box::new(|s| s.sv)),
    ];
    rows.into_iter()
        .map(|(name, f)| (format!("tf_GLSZM_{name}"), s.as_ref().map_or(f64::NAN, |s| f(s))))
        .collect()
}

/// All 512 binary 3x3 patches, full mask.
pub fn binary_patches() -> Vec<Patch> {
    (0u32..512)
        .map(|bits| Patch {
            width: 3,
            height: 3,
            depth: 1,
            values: (0..9).map(|i| ((bits >> i) & 1) as f64).collect(),
            mask: vec![true; 9],
        })
        .collect()
}

/// Seeded random 8x8 patches; every other one carries a ragged mask.
pub fn random_patches(count: usize, seed: u64) -> Vec<Patch> {
    use rand::{Rng, SeedableRng};
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let values: Vec<f64> = (0..64).map(|_| r.gen_range(-100.0..400.0)).collect();
            let mut mask: Vec<bool> = (0..64).map(|_| k % 2 == 0 || r.gen_bool(0.8)).collect();
            mask[27] = true;
            mask[28] = true;
            Patch {
                width: 8,
                height: 8,
                depth: 1,
                values,
                mask,
            }
        })
        .collect()
}

/// Largest absolute disagreement between computed values and the oracle,
/// treating a pair of NaNs as equal and a lone NaN as infinite error.
pub fn max_error(names: &[String], got: &[f64], want: &BTreeMap<String, f64>) -> f64 {
    assert_eq!(names.len(), got.len());
    names
        .iter()
        .zip(got)
        .map(|(n, &g)| {
            let w = *want.get(n).unwrap_or_else(|| panic!("oracle has no `{n}`"));
            match (g.is_nan(), w.is_nan()) {
                (true, true) => 0.0,
                (false, false) => (g - w).abs(),
                _ => f64::INFINITY,
            }
        })
        .fold(0.0, f64::max)
}

/// Runs the library extractors on `patch` and returns the worst error per
/// family `(glcm, glszm, glrlm)`.
pub fn compare_patch(patch: &Patch) -> (f64, f64, f64) {
    use radauto::features::{glcm::glcm_features, matrices::matrix_family_features};
    use radauto::model::{pair, canonical_features, FeatureGroup, ImageVolume, RoiMask};

    let dims = [patch.width, patch.height, patch.depth];
    let image = ImageVolume::new(dims, [1.0; 3], patch.values.clone()).unwrap();
    let mask = RoiMask::new(dims, [1.0; 3], patch.mask.clone()).unwrap();
    let p = pair(&image, &mask).unwrap();
    let names = |g: FeatureGroup| -> Vec<String> {
        canonical_features().iter().filter(|f| f.group == g).map(|f| f.name.clone()).collect()
    };
    let g = glcm_features(p).unwrap();
    let m = matrix_family_features(p).unwrap();
    (
        max_error(&names(FeatureGroup::Glcm), &g, &glcm(patch)),
        max_error(&names(FeatureGroup::Glszm), &m[..16], &glszm(patch)),
        max_error(&names(FeatureGroup::Glrlm), &m[16..32], &glrlm(patch)),
    )
}
