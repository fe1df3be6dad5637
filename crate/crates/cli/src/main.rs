//! `radauto` command-line entry point.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use radauto::evaluate::{
    cohens_kappa, delong_test, make_plan, render_report, run_experiment, EvaluationReport, ExperimentSettings, SplitMode,
};
use radauto::harmonize::{combat_table, dice, icc_filter, icc_table};
use radauto::model::{
    clinical_table, read_feature_table, read_header, read_image, read_manifest, read_mask, write_feature_table,
    FeatureGroup, FeatureTable, PatientRecord,
};
use radauto::phantom::{generate_dataset, write_dataset, PhantomSpec};
use radauto::pipeline::SearchSpace;
use radauto::search::{self, EnsembleModel, SearchSettings, TrainingData};

#[derive(Parser, Debug)]
#[command(name = "radauto", version, about = "Automated radiomics: extraction, workflow search and evaluation")]
struct Cli {
    /// Worker threads (0 = all cores). Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
enum Command {
    /// Generate a synthetic labeled lesion dataset.
    Phantom(PhantomArgs),
    /// Extract imaging features for every manifest row.
    Extract(ExtractArgs),
    /// Search workflows and fit the ensemble on all given patients.
    Train(TrainArgs),
    /// Apply a trained ensemble.
    Predict(PredictArgs),
    /// Outer cross-validation of the full search.
    Evaluate(EvaluateArgs),
    /// DeLong test and Cohen's kappa on two external score vectors.
    Compare(CompareArgs),
    /// ComBat-harmonize a feature table.
    Combat(CombatArgs),
    /// Per-feature ICC between two observers' feature tables.
    Icc(IccArgs),
    /// Dice overlap of two masks.
    Dice(DiceArgs),
    /// Render an evaluation report as a table.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Contrast {
    High,
    Null,
}

#[derive(Args, Debug, Serialize)]
struct PhantomArgs {
    /// Patients per class.
    #[arg(long, default_value_t = 30)]
    n: usize,
    /// Cubic volume edge length in voxels.
    #[arg(long, default_value_t = 32)]
    size: usize,
    #[arg(long, value_enum, default_value_t = Contrast::High)]
    contrast: Contrast,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ExtractArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Feature families to emit.
    #[arg(long, default_value = "imaging")]
    groups: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize, Clone)]
struct SearchArgs {
    /// Search-space JSON; the built-in defaults when omitted.
    #[arg(long)]
    space: Option<PathBuf>,
    /// Workflows sampled per search.
    #[arg(long, default_value_t = search::DEFAULT_BUDGET)]
    budget: usize,
    /// Best workflows kept in the ensemble.
    #[arg(long, default_value_t = search::DEFAULT_ENSEMBLE)]
    ensemble: usize,
    /// Inner random-split validation folds.
    #[arg(long, default_value_t = search::DEFAULT_INNER_FOLDS)]
    inner_folds: usize,
    /// Inner validation fraction.
    #[arg(long, default_value_t = search::DEFAULT_INNER_VALIDATION)]
    inner_validation: f64,
    /// Feature groups offered to the search (tags, `imaging`, `clinical`, `all`).
    #[arg(long, default_value = "all")]
    groups: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    features: PathBuf,
    /// CSV of patient_id,probability,label.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum GroupBy {
    Manufacturer,
    Protocol,
}

#[derive(Args, Debug, Serialize)]
struct EvaluateArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
    /// Outer random-split iterations.
    #[arg(long, default_value_t = radauto::evaluate::experiment::DEFAULT_ITERATIONS)]
    iters: usize,
    /// Outer test fraction.
    #[arg(long, default_value_t = radauto::evaluate::experiment::DEFAULT_TEST_FRACTION)]
    test_fraction: f64,
    /// Leave-one-out instead of random splits.
    #[arg(long, default_value_t = false)]
    loo: bool,
    /// Fit ComBat on each training part, grouped by this key.
    #[arg(long, value_enum)]
    harmonize: Option<GroupBy>,
    /// ICC table (from `icc`) restricting the features.
    #[arg(long)]
    icc: Option<PathBuf>,
    /// Keep features whose ICC exceeds this.
    #[arg(long, default_value_t = 0.75)]
    icc_threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct CompareArgs {
    /// CSV of patient_id,score.
    #[arg(long)]
    scores_a: PathBuf,
    #[arg(long)]
    scores_b: PathBuf,
    /// CSV of patient_id,label.
    #[arg(long)]
    labels: PathBuf,
    /// JSON result file; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct CombatArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = GroupBy::Manufacturer)]
    group_by: GroupBy,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct IccArgs {
    #[arg(long)]
    features_a: PathBuf,
    #[arg(long)]
    features_b: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct DiceArgs {
    #[arg(long)]
    mask_a: PathBuf,
    #[arg(long)]
    mask_b: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ReportArgs {
    #[arg(long)]
    report: PathBuf,
    /// Also write the mean ROC curve with its band as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(String),
}

type Outcome<T> = std::result::Result<T, Failure>;

fn data<E: std::fmt::Display>(ctx: &Path) -> impl FnOnce(E) -> Failure + '_ {
    move |e| {
        let msg = e.to_string();
        let prefix = ctx.display().to_string();
        Failure::Data(if msg.starts_with(&prefix) { msg } else { format!("{prefix}: {msg}") })
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn write_text(path: &Path, text: &str) -> Outcome<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(data(dir))?;
    }
    std::fs::write(path, text).map_err(data(path))
}

fn echo(cmd: &Command) -> serde_json::Value {
    serde_json::json!({ "tool": "radauto", "version": env!("CARGO_PKG_VERSION"), "command": cmd })
}

fn load_space(path: Option<&Path>) -> Outcome<SearchSpace> {
    match path {
        None => Ok(SearchSpace::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(data(p))?;
            SearchSpace::from_json(&text).map_err(data(p))
        }
    }
}

fn search_settings(a: &SearchArgs) -> Outcome<SearchSettings> {
    if a.budget == 0 || a.ensemble == 0 || a.inner_folds == 0 {
        return Err(usage("--budget, --ensemble and --inner-folds must be at least 1"));
    }
    if !(a.inner_validation > 0.0 && a.inner_validation < 1.0) {
        return Err(usage("--inner-validation must lie in (0, 1)"));
    }
    Ok(SearchSettings {
        space: load_space(a.space.as_deref())?,
        budget: a.budget,
        ensemble: a.ensemble,
        inner_folds: a.inner_folds,
        inner_validation: a.inner_validation,
    })
}

fn parse_groups(s: &str) -> Outcome<Vec<FeatureGroup>> {
    FeatureGroup::parse_list(s).map_err(|e| usage(format!("--groups: {e}")))
}

/// Imaging features plus clinical columns for the manifest rows, restricted to `groups`.
fn assemble(manifest: &Path, features: &Path, groups: &[FeatureGroup]) -> Outcome<(Vec<PatientRecord>, FeatureTable)> {
    let records = read_manifest(manifest).map_err(data(manifest))?;
    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    let imaging = read_feature_table(features)
        .and_then(|t| t.select_rows(&ids))
        .map_err(data(features))?;
    let clinical = clinical_table(&records).map_err(data(manifest))?;
    let clinical_names: BTreeSet<&String> = clinical.names().iter().collect();
    let keep: Vec<usize> = (0..imaging.n_cols()).filter(|&j| !clinical_names.contains(&imaging.names()[j])).collect();
    let table = imaging.select_columns(&keep).hstack(&clinical).map_err(data(features))?;
    let table = table.select_groups(groups);
    if table.n_cols() == 0 {
        return Err(Failure::Data(format!("{}: no feature column matches the selected groups", features.display())));
    }
    Ok((records, table))
}

fn batch_labels(records: &[PatientRecord], by: GroupBy, manifest: &Path) -> Outcome<Vec<String>> {
    let base: Vec<String> = records
        .iter()
        .map(|r| {
            r.batch
                .clone()
                .ok_or_else(|| Failure::Data(format!("{}: patient {} has no batch", manifest.display(), r.id)))
        })
        .collect::<Outcome<_>>()?;
    if by == GroupBy::Manufacturer {
        return Ok(base);
    }
    let thickness: Vec<f64> = records
        .iter()
        .map(|r| read_header(&r.image_path).map(|h| h.spacing[2]).map_err(data(&r.image_path)))
        .collect::<Outcome<_>>()?;
    let mut sorted = thickness.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
    Ok(base
        .into_iter()
        .zip(thickness)
        .map(|(b, t)| format!("{b}/{}", if t > median { "thick" } else { "thin" }))
        .collect())
}

fn labels_of(records: &[PatientRecord]) -> Vec<u8> {
    records.iter().map(|r| r.label).collect()
}

fn read_pairs(path: &Path) -> Outcome<Vec<(String, f64)>> {
    let mut r = csv::Reader::from_path(path).map_err(data(path))?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(data(path))?;
        if row.len() < 2 {
            return Err(Failure::Data(format!("{}: expected patient_id,value rows", path.display())));
        }
        let v: f64 = row[1]
            .trim()
            .parse()
            .map_err(|_| Failure::Data(format!("{}: cannot parse `{}`", path.display(), &row[1])))?;
        out.push((row[0].trim().to_string(), v));
    }
    Ok(out)
}

fn run(cli: Cli) -> Outcome<()> {
    let config = echo(&cli.command);
    match cli.command {
        Command::Phantom(a) => {
            if a.n == 0 || a.size == 0 {
                return Err(usage("--n and --size must be at least 1"));
            }
            let dims = [a.size; 3];
            let spec = match a.contrast {
                Contrast::High => PhantomSpec::high_contrast(a.n, dims, a.seed),
                Contrast::Null => PhantomSpec::null_contrast(a.n, dims, a.seed),
            };
            let cases = generate_dataset(&spec).map_err(|e| usage(e.to_string()))?;
            write_dataset(&a.out, &cases).map_err(data(&a.out))?;
            println!("wrote {} patients to {}", cases.len(), a.out.display());
        }
        Command::Extract(a) => {
            let groups = parse_groups(&a.groups)?;
            let records = read_manifest(&a.manifest).map_err(data(&a.manifest))?;
            let cases = records
                .iter()
                .map(|r| {
                    let img = read_image::<f64>(&r.image_path).map_err(data(&r.image_path))?;
                    let mask = read_mask(&r.mask_path).map_err(data(&r.mask_path))?;
                    Ok((r.id.clone(), img, mask))
                })
                .collect::<Outcome<Vec<_>>>()?;
            let table = radauto::features::extract_table(&cases, &groups).map_err(data(&a.manifest))?;
            if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(data(dir))?;
            }
            write_feature_table(&table, &a.out).map_err(data(&a.out))?;
            println!("wrote {} × {} features to {}", table.n_rows(), table.n_cols(), a.out.display());
        }
        Command::Train(a) => {
            let settings = search_settings(&a.search)?;
            let groups = parse_groups(&a.search.groups)?;
            let (records, table) = assemble(&a.manifest, &a.features, &groups)?;
            let train = TrainingData::from_table(&table, &labels_of(&records)).map_err(data(&a.features))?;
            let (mut model, scored) = search::train(&train, &settings, a.search.seed).map_err(data(&a.features))?;
            model.run_config = config.to_string();
            if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(data(dir))?;
            }
            model.save(&a.out).map_err(data(&a.out))?;
            let valid = scored.iter().filter(|s| !s.degenerate).count();
            println!(
                "ensemble of {} workflows ({} of {} non-degenerate) written to {}",
                model.members.len(),
                valid,
                scored.len(),
                a.out.display()
            );
        }
        Command::Predict(a) => {
            let model = EnsembleModel::load(&a.model).map_err(data(&a.model))?;
            let (records, table) = assemble(&a.manifest, &a.features, &FeatureGroup::TAGS)?;
            let p = model.predict_table(&table).map_err(data(&a.features))?;
            let mut text = String::from("patient_id,probability,label\n");
            for (r, p) in records.iter().zip(p) {
                text.push_str(&format!("{},{p},{}\n", r.id, u8::from(p >= search::THRESHOLD)));
            }
            write_text(&a.out, &text)?;
        }
        Command::Evaluate(a) => {
            let search = search_settings(&a.search)?;
            if a.iters == 0 && !a.loo {
                return Err(usage("--iters must be at least 1"));
            }
            if !(a.test_fraction > 0.0 && a.test_fraction < 1.0) {
                return Err(usage("--test-fraction must lie in (0, 1)"));
            }
            let groups = parse_groups(&a.search.groups)?;
            let (records, mut table) = assemble(&a.manifest, &a.features, &groups)?;
            if let Some(icc_path) = &a.icc {
                let rows = read_pairs(icc_path)?;
                let keep: BTreeSet<String> = icc_filter(&rows, a.icc_threshold).into_iter().collect();
                let cols: Vec<usize> = (0..table.n_cols())
                    .filter(|&j| keep.contains(&table.names()[j]) || !table.groups()[j].is_imaging())
                    .collect();
                table = table.select_columns(&cols);
            }
            let labels = labels_of(&records);
            let batches = match a.harmonize {
                Some(by) => Some(batch_labels(&records, by, &a.manifest)?),
                None => None,
            };
            let settings = ExperimentSettings {
                search,
                iterations: if a.loo { records.len() } else { a.iters },
                test_fraction: a.test_fraction,
                mode: if a.loo { SplitMode::LeaveOneOut } else { SplitMode::RandomSplit },
                seed: a.search.seed,
            };
            let plan = make_plan(&labels, &settings).map_err(data(&a.manifest))?;
            let train = TrainingData::from_table(&table, &labels).map_err(data(&a.features))?;
            let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
            let report = run_experiment(&ids, &train, batches.as_deref(), &plan, &settings, config)
                .map_err(data(&a.features))?;
            write_text(&a.out, &report.to_json())?;
            print!("{}", render_report(&report));
        }
        Command::Compare(a) => {
            let sa = read_pairs(&a.scores_a)?;
            let sb = read_pairs(&a.scores_b)?;
            let labels = read_pairs(&a.labels)?;
            let lookup = |v: &[(String, f64)], id: &str, p: &Path| {
                v.iter()
                    .find(|(k, _)| k == id)
                    .map(|(_, x)| *x)
                    .ok_or_else(|| Failure::Data(format!("{}: no score for patient {id}", p.display())))
            };
            let mut xa = Vec::new();
            let mut xb = Vec::new();
            let mut y = Vec::new();
            for (id, l) in &labels {
                xa.push(lookup(&sa, id, &a.scores_a)?);
                xb.push(lookup(&sb, id, &a.scores_b)?);
                y.push(u8::from(*l >= 0.5));
            }
            let d = delong_test(&xa, &xb, &y).map_err(data(&a.labels))?;
            let categorical = xa.iter().chain(&xb).all(|v| v.fract() == 0.0);
            let cat = |v: &[f64]| -> Vec<i64> {
                v.iter()
                    .map(|&s| if categorical { s as i64 } else { i64::from(s >= search::THRESHOLD) })
                    .collect()
            };
            let kappa = cohens_kappa(&cat(&xa), &cat(&xb)).map_err(data(&a.labels))?;
            let out = serde_json::json!({
                "run_config": config,
                "auc_a": d.auc_a,
                "auc_b": d.auc_b,
                "z": d.z,
                "p": d.p,
                "degenerate": d.degenerate,
                "kappa": kappa,
                "kappa_on": if categorical { "ratings" } else { "labels at 0.5" },
            });
            let text = serde_json::to_string_pretty(&out).expect("json");
            match &a.out {
                Some(p) => write_text(p, &text)?,
                None => println!("{text}"),
            }
        }
        Command::Combat(a) => {
            let records = read_manifest(&a.manifest).map_err(data(&a.manifest))?;
            let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
            let table = read_feature_table(&a.features)
                .and_then(|t| t.select_rows(&ids))
                .map_err(data(&a.features))?;
            let batches = batch_labels(&records, a.group_by, &a.manifest)?;
            let cols: Vec<usize> = (0..table.n_cols())
                .filter(|&j| table.column(j).iter().all(|v| v.is_finite()))
                .collect();
            let (_, harmonized) = combat_table(&table.select_columns(&cols), &batches).map_err(data(&a.features))?;
            let mut values = table.values().to_vec();
            for i in 0..table.n_rows() {
                for (k, &j) in cols.iter().enumerate() {
                    values[i * table.n_cols() + j] = harmonized.get(i, k);
                }
            }
            let out = table.with_values(values).map_err(data(&a.features))?;
            if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(data(dir))?;
            }
            write_feature_table(&out, &a.out).map_err(data(&a.out))?;
        }
        Command::Icc(a) => {
            let ta = read_feature_table(&a.features_a).map_err(data(&a.features_a))?;
            let tb = read_feature_table(&a.features_b).map_err(data(&a.features_b))?;
            let rows = icc_table(&ta, &tb).map_err(data(&a.features_b))?;
            let mut text = String::from("feature,icc\n");
            for (n, v) in &rows {
                text.push_str(&format!("{n},{}\n", if v.is_nan() { "NaN".to_string() } else { v.to_string() }));
            }
            write_text(&a.out, &text)?;
            println!(
                "{} features: {} with ICC > 0.75, {} with ICC > 0.90",
                rows.len(),
                icc_filter(&rows, 0.75).len(),
                icc_filter(&rows, 0.90).len()
            );
        }
        Command::Dice(a) => {
            let ma = read_mask(&a.mask_a).map_err(data(&a.mask_a))?;
            let mb = read_mask(&a.mask_b).map_err(data(&a.mask_b))?;
            println!("{}", dice(&ma, &mb).map_err(data(&a.mask_b))?);
        }
        Command::Report(a) => {
            let text = std::fs::read_to_string(&a.report).map_err(data(&a.report))?;
            let report = EvaluationReport::from_json(&text).map_err(data(&a.report))?;
            if !report.verify_digest() {
                return Err(Failure::Data(format!("{}: digest does not match the report contents", a.report.display())));
            }
            print!("{}", render_report(&report));
            if let Some(p) = &a.out {
                write_text(p, &report.roc_csv())?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: cannot configure {} threads: {e}", cli.threads);
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
