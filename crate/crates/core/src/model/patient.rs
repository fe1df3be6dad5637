use std::collections::HashSet;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::names::{
    FeatureGroup, CLINICAL_AGE, CLINICAL_LOCATION_PREFIX, CLINICAL_SEX,
};
use crate::model::table::{parse_value, FeatureTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sex {
    M,
    F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub id: String,
    /// 1 = positive class.
    pub label: u8,
    pub age: Option<f64>,
    pub sex: Option<Sex>,
    pub location: Option<String>,
    /// Manufacturer or protocol group.
    pub batch: Option<String>,
    pub image_path: PathBuf,
    pub mask_path: PathBuf,
}

const MANIFEST_COLUMNS: [&str; 8] = [
    "patient_id",
    "label",
    "age",
    "sex",
    "location",
    "batch",
    "image_path",
    "mask_path",
];

fn opt(s: &str) -> Option<String> {
    let t = s.trim();
    (!t.is_empty()).then(|| t.to_string())
}

/// Reads a manifest; relative image paths are resolved against its directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<PatientRecord>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    let err = |msg: String| Error::Format {
        path: path.to_path_buf(),
        msg,
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != MANIFEST_COLUMNS {
        return Err(err(format!(
            "manifest columns must be {}",
            MANIFEST_COLUMNS.join(",")
        )));
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let id = rec[0].trim().to_string();
        if id.is_empty() || !seen.insert(id.clone()) {
            return Err(err(format!("line {line}: empty or duplicate patient_id `{id}`")));
        }
        let label = match rec[1].trim() {
            "0" => 0,
            "1" => 1,
            other => return Err(err(format!("line {line}: label must be 0 or 1, got `{other}`"))),
        };
        let age = match opt(&rec[2]) {
            None => None,
            Some(s) => Some(
                parse_value(&s)
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(format!("line {line}: bad age `{s}`")))?,
            ),
        };
        let sex = match opt(&rec[3]).as_deref() {
            None => None,
            Some("M") | Some("m") => Some(Sex::M),
            Some("F") | Some("f") => Some(Sex::F),
            Some(o) => return Err(err(format!("line {line}: sex must be M or F, got `{o}`"))),
        };
        let resolve = |s: &str| {
            let p = PathBuf::from(s.trim());
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        out.push(PatientRecord {
            id,
            label,
            age,
            sex,
            location: opt(&rec[4]),
            batch: opt(&rec[5]),
            image_path: resolve(&rec[6]),
            mask_path: resolve(&rec[7]),
        });
    }
    Ok(out)
}

/// Writes a manifest. Paths are written as given; callers pass paths
/// relative to the manifest directory when the dataset should be relocatable.
pub fn write_manifest(records: &[PatientRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    w.write_record(MANIFEST_COLUMNS)?;
    for r in records {
        w.write_record([
            r.id.clone(),
            r.label.to_string(),
            r.age.map(|a| a.to_string()).unwrap_or_default(),
            match r.sex {
                Some(Sex::M) => "M".into(),
                Some(Sex::F) => "F".into(),
                None => String::new(),
            },
            r.location.clone().unwrap_or_default(),
            r.batch.clone().unwrap_or_default(),
            r.image_path.to_string_lossy().into_owned(),
            r.mask_path.to_string_lossy().into_owned(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Clinical covariate columns (age, sex as 1 = male, one-hot location) for
/// the given patients. Location categories are taken from the records
/// themselves, sorted.
pub fn clinical_table(records: &[PatientRecord]) -> Result<FeatureTable> {
    let mut locations: Vec<String> = records
        .iter()
        .filter_map(|r| r.location.clone())
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    locations.sort();
    let mut names = vec![CLINICAL_AGE.to_string(), CLINICAL_SEX.to_string()];
    let mut groups = vec![FeatureGroup::Age, FeatureGroup::Sex];
    for l in &locations {
        names.push(format!("{CLINICAL_LOCATION_PREFIX}{l}"));
        groups.push(FeatureGroup::Location);
    }
    let mut values = Vec::with_capacity(records.len() * names.len());
    for r in records {
        values.push(r.age.unwrap_or(f64::NAN));
        values.push(match r.sex {
            Some(Sex::M) => 1.0,
            Some(Sex::F) => 0.0,
            None => f64::NAN,
        });
        for l in &locations {
            values.push(match &r.location {
                Some(x) if x == l => 1.0,
                Some(_) => 0.0,
                None => f64::NAN,
            });
        }
    }
    FeatureTable::new(
        records.iter().map(|r| r.id.clone()).collect(),
        names,
        groups,
        values,
    )
}
