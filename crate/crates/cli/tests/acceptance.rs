//! Acceptance run: one PASS/FAIL line per criterion.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use radauto::evaluate::{
    bca, cohens_kappa, corrected_resampled_ci, delong_test, fit_iteration, format_bound, mann_whitney_u,
    random_split_plan,
};
use radauto::harmonize::{dice, icc, icc_filter, BatchModel};
use radauto::model::{canonical_feature_names, names::family_counts, FeatureGroup, RoiMask};
use radauto::search::{SearchSettings, TrainingData};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn dictionary() -> Check {
    let start = Instant::now();
    let names = canonical_feature_names();
    let elapsed = start.elapsed();
    let counts: Vec<usize> = family_counts().into_iter().map(|(_, c)| c).collect();
    ensure(names.len() == 564, format!("{} entries", names.len()))?;
    ensure(
        counts == [13, 35, 9, 144, 16, 16, 14, 5, 39, 156, 39, 39, 39],
        format!("family counts {counts:?}"),
    )?;
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("564 names, family counts match, {elapsed:?}"))
}

fn texture_oracle() -> Check {
    use common::texture::{binary_patches, compare_patch, random_patches};
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let patches: Vec<_> = binary_patches().into_iter().chain(random_patches(10, 20240607)).collect();
    for p in &patches {
        let (g, z, r) = compare_patch(p);
        worst = worst.max(g).max(z).max(r);
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-10, format!("max error {worst:e}"))?;
    ensure(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"))?;
    Ok(format!("{} patches, max error {worst:.1e}, {elapsed:?}", patches.len()))
}

fn metric_arithmetic() -> Check {
    let rows = [
        (0.74, 0.60, 0.67),
        (0.90, 0.44, 0.67),
        (0.78, 0.74, 0.76),
        (0.58, 0.75, 0.67),
        (0.30, 0.71, 0.51),
    ];
    let mut worst: f64 = 0.0;
    for (se, sp, printed) in rows {
        worst = worst.max((bca(se, sp) - printed).abs());
    }
    ensure(worst <= 0.005 + 1e-9, format!("max deviation {worst}"))?;
    Ok(format!("5 rows, max deviation from printed values {worst:.4}"))
}

fn ci_formula() -> Check {
    let ci = corrected_resampled_ci(&[0.7, 0.8], 100, 25, 0.95).map_err(|e| e.to_string())?;
    ensure(
        (ci.lower + 0.028).abs() <= 1e-3 && (ci.upper - 1.528).abs() <= 1e-3,
        format!("[{}, {}]", ci.lower, ci.upper),
    )?;
    let (lo, hi) = (format_bound(ci.lower), format_bound(ci.upper));
    ensure(lo == "<0.00" && hi == ">1.00", format!("rendered {lo} {hi}"))?;
    Ok(format!("[{:.4}, {:.4}] rendered as [{lo}, {hi}]", ci.lower, ci.upper))
}

fn statistical_tests() -> Check {
    let (_, p) = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).map_err(|e| e.to_string())?;
    ensure((p - 0.1).abs() <= 1e-12, format!("Mann-Whitney p {p}"))?;
    let (a, b, y) = common::delong::constructed_case();
    let same = delong_test(&a, &a, &y).map_err(|e| e.to_string())?;
    ensure(same.p == 1.0, format!("identical scores p {}", same.p))?;
    let d = delong_test(&a, &b, &y).map_err(|e| e.to_string())?;
    let boot = common::delong::bootstrap_p(&a, &b, &y, 100_000, 7);
    ensure((d.p - boot).abs() <= 0.02, format!("DeLong {} vs bootstrap {boot}", d.p))?;
    let k1 = cohens_kappa(&[0, 1, 2, 1, 0], &[0, 1, 2, 1, 0]).map_err(|e| e.to_string())?;
    let k2 = cohens_kappa(&[1, 1, 1], &[1, 1, 1]).map_err(|e| e.to_string())?;
    ensure(k1 == 1.0 && k2 == 1.0, format!("kappa {k1} {k2}"))?;
    Ok(format!("MW p = {p}, DeLong p = {:.4} vs bootstrap {boot:.4}, kappa identities exact", d.p))
}

fn harmonization() -> Check {
    let (n, p) = (50, 10);
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(6);
    let mut x = Vec::with_capacity(2 * n * p);
    let mut batches = Vec::new();
    for (b, shift) in [("A", 0.0), ("B", 5.0)] {
        for _ in 0..n {
            x.extend((0..p).map(|_| shift + r.sample::<f64, _>(StandardNormal)));
            batches.push(b.to_string());
        }
    }
    let model = BatchModel::fit(&x, p, &batches).map_err(|e| e.to_string())?;
    let y = model.apply(&x, p, &batches).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for g in 0..p {
        let column = |v: &[f64], rows: std::ops::Range<usize>| -> Vec<f64> { rows.map(|i| v[i * p + g]).collect() };
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let ss = |v: &[f64]| v.iter().map(|a| (a - mean(v)).powi(2)).sum::<f64>();
        let pooled = ((ss(&column(&x, 0..n)) + ss(&column(&x, n..2 * n))) / (2 * n - 2) as f64).sqrt();
        let gap = (mean(&column(&y, 0..n)) - mean(&column(&y, n..2 * n))).abs();
        worst = worst.max(gap / pooled);
    }
    let single: Vec<String> = vec!["A".into(); n];
    let one = BatchModel::fit_with_min_batches(&x[..n * p], p, &single, 1).map_err(|e| e.to_string())?;
    let passed = one.apply(&x[..n * p], p, &single).map_err(|e| e.to_string())?;
    let drift = passed.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(drift <= 1e-10, format!("single batch moved values by {drift:e}"))?;
    ensure(worst < 0.05, format!("largest post-harmonization batch-mean gap {worst:.3}σ (limit 0.05σ); single batch drift {drift:.1e}"))?;
    Ok(format!("largest gap {worst:.4}σ, single batch drift {drift:.1e}"))
}

fn reliability() -> Check {
    let a = [1.0, 2.0, 3.0, 4.0];
    let v = icc(&a, &a).map_err(|e| e.to_string())?;
    ensure(v == 1.0, format!("icc {v}"))?;
    let full = RoiMask::new([2, 2, 1], [1.0; 3], vec![true, true, false, true]).map_err(|e| e.to_string())?;
    let other = RoiMask::new([2, 2, 1], [1.0; 3], vec![false, false, true, false]).map_err(|e| e.to_string())?;
    let empty = RoiMask::new_allow_empty([2, 2, 1], [1.0; 3], vec![false; 4]).map_err(|e| e.to_string())?;
    let ids = [
        dice(&full, &full).map_err(|e| e.to_string())?,
        dice(&full, &other).map_err(|e| e.to_string())?,
        dice(&empty, &empty).map_err(|e| e.to_string())?,
    ];
    ensure(ids == [1.0, 0.0, 1.0], format!("dice identities {ids:?}"))?;
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for trial in 0..1000 {
        let rows: Vec<(String, f64)> =
            (0..r.gen_range(0..50)).map(|i| (format!("f{i}"), r.gen_range(-1.0..1.0))).collect();
        let strict = icc_filter(&rows, 0.90);
        let loose = icc_filter(&rows, 0.75);
        ensure(strict.iter().all(|n| loose.contains(n)), format!("trial {trial}: 0.90 set not within 0.75 set"))?;
    }
    Ok("icc identity, dice identities exact, filter monotone on 1000 random tables".into())
}

struct Runs {
    base: serde_json::Value,
    base_text: String,
    permuted: serde_json::Value,
    threads2_text: String,
    elapsed: Duration,
}

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_radauto"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("radauto {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))
    }
}

fn permute_labels(manifest: &Path, out: &Path, seed: u64) -> Result<(), String> {
    let mut rd = csv::Reader::from_path(manifest).map_err(|e| e.to_string())?;
    let header = rd.headers().map_err(|e| e.to_string())?.clone();
    let col = header.iter().position(|h| h == "label").ok_or("no label column")?;
    let mut rows: Vec<Vec<String>> = rd
        .records()
        .map(|r| r.map(|r| r.iter().map(String::from).collect()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut labels: Vec<String> = rows.iter().map(|r| r[col].clone()).collect();
    labels.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    let mut w = csv::Writer::from_path(out).map_err(|e| e.to_string())?;
    w.write_record(&header).map_err(|e| e.to_string())?;
    for (row, l) in rows.iter_mut().zip(labels) {
        row[col] = l;
        w.write_record(&*row).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

fn hashed_region(text: &str) -> Result<String, String> {
    let mut v: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    v["created_unix"] = serde_json::Value::from(0);
    Ok(v.to_string())
}

fn end_to_end(dir: &Path) -> Result<Runs, String> {
    let start = Instant::now();
    let data = dir.join("phantom");
    let s = |p: &PathBuf| p.to_string_lossy().into_owned();
    let manifest = data.join("manifest.csv");
    let features = data.join("features.csv");
    let report = dir.join("report.json");
    cli(&["phantom", "--n", "30", "--size", "32", "--seed", "8", "--out", &s(&data)])?;
    cli(&["extract", "--manifest", &s(&manifest), "--out", &s(&features)])?;
    let evaluate = |manifest: &PathBuf, threads: &str| -> Result<String, String> {
        cli(&[
            "evaluate", "--manifest", &s(manifest), "--features", &s(&features), "--budget", "500", "--iters", "10",
            "--seed", "8", "--threads", threads, "--out", &s(&report),
        ])?;
        std::fs::read_to_string(&report).map_err(|e| e.to_string())
    };
    let base_text = evaluate(&manifest, "1")?;
    let elapsed = start.elapsed();
    let threads2_text = evaluate(&manifest, "2")?;
    let shuffled = data.join("manifest_permuted.csv");
    permute_labels(&manifest, &shuffled, 88)?;
    let permuted_text = evaluate(&shuffled, "1")?;
    Ok(Runs {
        base: serde_json::from_str(&base_text).map_err(|e| e.to_string())?,
        base_text,
        permuted: serde_json::from_str(&permuted_text).map_err(|e| e.to_string())?,
        threads2_text,
        elapsed,
    })
}

fn separability(runs: &Result<Runs, String>) -> Check {
    let runs = runs.as_ref().map_err(Clone::clone)?;
    let auc = &runs.base["summary"]["auc"];
    let mean = auc["mean"].as_f64().ok_or("no AUC in report")?;
    let pauc = &runs.permuted["summary"]["auc"];
    let (lo, hi) = (pauc["lower"].as_f64().ok_or("no bound")?, pauc["upper"].as_f64().ok_or("no bound")?);
    ensure(mean >= 0.85, format!("mean AUC {mean}"))?;
    ensure(lo <= 0.5 && 0.5 <= hi, format!("permuted AUC CI [{lo}, {hi}]"))?;
    ensure(runs.elapsed <= Duration::from_secs(30 * 60), format!("took {:?}", runs.elapsed))?;
    Ok(format!(
        "mean AUC {mean:.3}; permuted CI [{lo:.3}, {hi:.3}]; extract + evaluate {:.0?} on {} core(s)",
        runs.elapsed,
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    ))
}

fn determinism(runs: &Result<Runs, String>) -> Check {
    let runs = runs.as_ref().map_err(Clone::clone)?;
    let a = hashed_region(&runs.base_text)?;
    let b = hashed_region(&runs.threads2_text)?;
    ensure(a == b, "hashed regions differ between --threads 1 and --threads 2")?;
    let digest = runs.base["digest"].as_str().unwrap_or_default().to_string();
    Ok(format!("--threads 1 and 2 agree, digest {}", &digest[..16.min(digest.len())]))
}

fn hygiene() -> Check {
    use radauto::phantom::{generate_dataset, PhantomSpec};
    let cases = generate_dataset(&PhantomSpec::high_contrast(10, [20, 20, 20], 31)).map_err(|e| e.to_string())?;
    let input: Vec<_> = cases.iter().map(|c| (c.record.id.clone(), c.image.clone(), c.mask.clone())).collect();
    let table = radauto::features::extract_table(&input, &FeatureGroup::IMAGING).map_err(|e| e.to_string())?;
    let labels: Vec<u8> = cases.iter().map(|c| c.record.label).collect();
    let batches: Vec<String> = cases.iter().map(|c| c.record.batch.clone().unwrap_or_default()).collect();
    let data = TrainingData::from_table(&table, &labels).map_err(|e| e.to_string())?;
    let settings = SearchSettings { budget: 40, ensemble: 5, ..SearchSettings::default() };
    let plan = random_split_plan(&labels, 3, 0.2, 5).map_err(|e| e.to_string())?;
    for (k, split) in plan.splits.iter().enumerate() {
        let clean = fit_iteration(&data, Some(&batches), &split.train, &settings, k as u64).map_err(|e| e.to_string())?;
        for poison in [f64::NAN, f64::INFINITY, 1e300] {
            let mut dirty = data.clone();
            let mut dirty_batches = batches.clone();
            for &i in &split.test {
                for j in 0..dirty.x.cols {
                    dirty.x.set(i, j, poison);
                }
                dirty.y[i] = 1 - dirty.y[i];
                dirty_batches[i] = "unseen".into();
            }
            let fitted = fit_iteration(&dirty, Some(&dirty_batches), &split.train, &settings, k as u64)
                .map_err(|e| format!("split {k}: {e}"))?;
            ensure(
                fitted.fingerprint() == clean.fingerprint(),
                format!("split {k}: fit changed when test rows were poisoned with {poison}"),
            )?;
        }
    }
    Ok("3 splits × 3 poisonings of test rows, labels and batches leave ComBat and ensemble fits identical".into())
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let mut results: Vec<(usize, Check)> = vec![
        (1, dictionary()),
        (2, texture_oracle()),
        (3, metric_arithmetic()),
        (4, ci_formula()),
        (5, statistical_tests()),
        (6, harmonization()),
        (7, reliability()),
    ];
    let runs = end_to_end(dir.path());
    results.push((8, separability(&runs)));
    results.push((9, determinism(&runs)));
    results.push((10, hygiene()));

    let mut failed = 0;
    for (n, r) in &results {
        match r {
            Ok(msg) => println!("criterion {n:>2}: PASS  {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n:>2}: FAIL  {msg}");
            }
        }
    }
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
