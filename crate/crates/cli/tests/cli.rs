use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn radauto(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radauto"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = radauto(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn listing(dir: &Path) -> BTreeSet<PathBuf> {
    let mut out = BTreeSet::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p.clone());
            }
            out.insert(p.strip_prefix(dir).unwrap().to_path_buf());
        }
    }
    out
}

/// Runs `args` and checks that only `expected` paths (relative to `dir`, directories included) appeared.
fn writes_only(dir: &Path, args: &[&str], expected: &[&str]) -> String {
    let before = listing(dir);
    let stdout = ok(dir, args);
    let after = listing(dir);
    let new: BTreeSet<PathBuf> = after.difference(&before).cloned().collect();
    let stray: Vec<&PathBuf> = new.iter().filter(|p| !expected.iter().any(|e| p.starts_with(e))).collect();
    assert!(stray.is_empty(), "{args:?} created {stray:?}");
    stdout
}

#[test]
fn help_lists_documented_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(dir.path(), &["evaluate", "--help"]);
    for flag in [
        "--budget", "--ensemble", "--inner-folds", "--inner-validation", "--iters", "--test-fraction", "--groups",
        "--seed", "--threads", "--loo", "--harmonize", "--icc", "--out",
    ] {
        assert!(text.contains(flag), "evaluate --help lacks {flag}");
    }
    for default in ["[default: 25000]", "[default: 50]", "[default: 5]", "[default: 0.15]", "[default: 100]", "[default: 0.2]"] {
        assert!(text.contains(default), "evaluate --help lacks {default}");
    }
    let train = ok(dir.path(), &["train", "--help"]);
    assert!(train.contains("[default: 25000]") && train.contains("[default: 50]"));
    for sub in ["phantom", "extract", "train", "predict", "evaluate", "compare", "combat", "icc", "dice", "report"] {
        let text = ok(dir.path(), &[sub, "--help"]);
        assert!(text.contains("--threads"), "{sub}");
    }
}

#[test]
fn exit_codes_separate_usage_from_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(radauto(dir.path(), &["no-such-command"]).status.code(), Some(1));
    assert_eq!(radauto(dir.path(), &["extract"]).status.code(), Some(1));
    assert_eq!(radauto(dir.path(), &["phantom", "--n", "0", "--out", "x"]).status.code(), Some(1));
    assert_eq!(
        radauto(dir.path(), &["extract", "--manifest", "missing.csv", "--out", "f.csv"]).status.code(),
        Some(2)
    );
    std::fs::write(dir.path().join("bad.json"), "{\"schema\": \"other/9\"}").unwrap();
    assert_eq!(radauto(dir.path(), &["report", "--report", "bad.json"]).status.code(), Some(2));
    assert_eq!(radauto(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn full_round_trip_through_every_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    writes_only(dir, &["phantom", "--n", "6", "--size", "16", "--seed", "3", "--out", "data"], &["data"]);
    assert!(dir.join("data/manifest.csv").exists());

    writes_only(
        dir,
        &["extract", "--manifest", "data/manifest.csv", "--groups", "histogram,shape,glcm", "--out", "features.csv"],
        &["features.csv"],
    );
    let search = ["--budget", "12", "--ensemble", "3", "--seed", "5"];
    let mut train = vec!["train", "--manifest", "data/manifest.csv", "--features", "features.csv", "--out", "model.bin"];
    train.extend(search);
    writes_only(dir, &train, &["model.bin"]);
    writes_only(
        dir,
        &["predict", "--model", "model.bin", "--manifest", "data/manifest.csv", "--features", "features.csv", "--out", "pred.csv"],
        &["pred.csv"],
    );
    let pred = std::fs::read_to_string(dir.join("pred.csv")).unwrap();
    assert_eq!(pred.lines().count(), 13);
    assert!(pred.starts_with("patient_id,probability,label"));

    let mut evaluate = vec![
        "evaluate", "--manifest", "data/manifest.csv", "--features", "features.csv", "--iters", "3", "--harmonize",
        "manufacturer", "--out", "report.json",
    ];
    evaluate.extend(search);
    let printed = writes_only(dir, &evaluate, &["report.json"]);
    assert!(printed.contains("AUC"));
    let first = std::fs::read_to_string(dir.join("report.json")).unwrap();
    ok(dir, &evaluate);
    let second = std::fs::read_to_string(dir.join("report.json")).unwrap();
    let digest = |t: &str| serde_json::from_str::<serde_json::Value>(t).unwrap()["digest"].clone();
    assert_eq!(digest(&first), digest(&second));

    writes_only(dir, &["report", "--report", "report.json", "--out", "roc.csv"], &["roc.csv"]);
    let roc = std::fs::read_to_string(dir.join("roc.csv")).unwrap();
    assert!(roc.starts_with("fpr,tpr,lower,upper"));
    let tampered = first.replacen("\"iteration\": 0", "\"iteration\": 7", 1);
    std::fs::write(dir.join("tampered.json"), tampered).unwrap();
    assert_eq!(radauto(dir, &["report", "--report", "tampered.json"]).status.code(), Some(2));

    writes_only(
        dir,
        &["combat", "--features", "features.csv", "--manifest", "data/manifest.csv", "--group-by", "protocol", "--out", "harmonized.csv"],
        &["harmonized.csv"],
    );
    writes_only(dir, &["icc", "--features-a", "features.csv", "--features-b", "features.csv", "--out", "icc.csv"], &["icc.csv"]);
    let icc = std::fs::read_to_string(dir.join("icc.csv")).unwrap();
    for line in icc.lines().skip(1) {
        let v: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(v.is_nan() || (v - 1.0).abs() < 1e-9, "{line}");
    }

    let manifest = std::fs::read_to_string(dir.join("data/manifest.csv")).unwrap();
    let mask = manifest.lines().nth(1).unwrap().split(',').last().unwrap().to_string();
    let mask_path = dir.join("data").join(&mask);
    let d = writes_only(dir, &["dice", "--mask-a", mask_path.to_str().unwrap(), "--mask-b", mask_path.to_str().unwrap()], &[]);
    assert_eq!(d.trim(), "1");

    std::fs::write(dir.join("a.csv"), "patient_id,score\np1,1\np2,3\np3,2\np4,5\n").unwrap();
    std::fs::write(dir.join("b.csv"), "patient_id,score\np1,2\np2,3\np3,1\np4,4\n").unwrap();
    std::fs::write(dir.join("labels.csv"), "patient_id,label\np1,0\np2,1\np3,0\np4,1\n").unwrap();
    let cmp = writes_only(dir, &["compare", "--scores-a", "a.csv", "--scores-b", "b.csv", "--labels", "labels.csv"], &[]);
    let v: serde_json::Value = serde_json::from_str(&cmp).unwrap();
    assert_eq!(v["auc_a"], 1.0);
    assert_eq!(v["kappa_on"], "ratings");
}
