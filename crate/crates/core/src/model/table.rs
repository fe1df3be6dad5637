use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::names::{group_of, FeatureGroup};

/// Patients × named features. Missing values are `NaN`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    ids: Vec<String>,
    names: Vec<String>,
    groups: Vec<FeatureGroup>,
    /// Row-major, `ids.len() × names.len()`.
    values: Vec<f64>,
}

impl FeatureTable {
    pub fn new(
        ids: Vec<String>,
        names: Vec<String>,
        groups: Vec<FeatureGroup>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if names.len() != groups.len() {
            return Err(Error::invalid("every column needs a group tag"));
        }
        if values.len() != ids.len() * names.len() {
            return Err(Error::invalid(format!(
                "{} values for {} rows × {} columns",
                values.len(),
                ids.len(),
                names.len()
            )));
        }
        if let Some(d) = first_duplicate(&ids) {
            return Err(Error::invalid(format!("duplicate patient id `{d}`")));
        }
        if let Some(d) = first_duplicate(&names) {
            return Err(Error::invalid(format!("duplicate feature name `{d}`")));
        }
        Ok(Self {
            ids,
            names,
            groups,
            values,
        })
    }

    /// Builds a table tagging each column via [`group_of`].
    pub fn with_inferred_groups(
        ids: Vec<String>,
        names: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let groups = names
            .iter()
            .map(|n| {
                group_of(n).ok_or_else(|| Error::invalid(format!("unknown feature column `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(ids, names, groups, values)
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn groups(&self) -> &[FeatureGroup] {
        &self.groups
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.values[i * p..(i + 1) * p]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.get(i, j)).collect()
    }

    pub fn row_index(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|x| x == name)
    }

    /// Rows in the order of `ids`.
    pub fn select_rows(&self, ids: &[String]) -> Result<FeatureTable> {
        let index: HashMap<&str, usize> = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let mut values = Vec::with_capacity(ids.len() * self.n_cols());
        for id in ids {
            let &i = index
                .get(id.as_str())
                .ok_or_else(|| Error::invalid(format!("patient `{id}` not in feature table")))?;
            values.extend_from_slice(self.row(i));
        }
        FeatureTable::new(ids.to_vec(), self.names.clone(), self.groups.clone(), values)
    }

    /// Columns whose tag is matched by any of `selectors`.
    pub fn select_groups(&self, selectors: &[FeatureGroup]) -> FeatureTable {
        let keep: Vec<usize> = (0..self.n_cols())
            .filter(|&j| selectors.iter().any(|s| s.selects(self.groups[j], &self.names[j])))
            .collect();
        self.select_columns(&keep)
    }

    pub fn select_columns(&self, cols: &[usize]) -> FeatureTable {
        let mut values = Vec::with_capacity(self.n_rows() * cols.len());
        for i in 0..self.n_rows() {
            let r = self.row(i);
            values.extend(cols.iter().map(|&j| r[j]));
        }
        FeatureTable {
            ids: self.ids.clone(),
            names: cols.iter().map(|&j| self.names[j].clone()).collect(),
            groups: cols.iter().map(|&j| self.groups[j]).collect(),
            values,
        }
    }

    pub fn select_names(&self, names: &[String]) -> Result<FeatureTable> {
        let cols = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::invalid(format!("missing feature column `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_columns(&cols))
    }

    /// Appends the columns of `other` (same ids in the same order).
    pub fn hstack(&self, other: &FeatureTable) -> Result<FeatureTable> {
        if self.ids != other.ids {
            return Err(Error::invalid("cannot join tables with different patient rows"));
        }
        let mut names = self.names.clone();
        names.extend(other.names.iter().cloned());
        let mut groups = self.groups.clone();
        groups.extend(other.groups.iter().copied());
        let mut values = Vec::with_capacity(self.n_rows() * names.len());
        for i in 0..self.n_rows() {
            values.extend_from_slice(self.row(i));
            values.extend_from_slice(other.row(i));
        }
        FeatureTable::new(self.ids.clone(), names, groups, values)
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<FeatureTable> {
        FeatureTable::new(
            self.ids.clone(),
            self.names.clone(),
            self.groups.clone(),
            values,
        )
    }
}

fn first_duplicate(items: &[String]) -> Option<&str> {
    let mut seen = HashSet::new();
    items
        .iter()
        .find(|s| !seen.insert(s.as_str()))
        .map(String::as_str)
}

pub(crate) fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        // Shortest representation that round-trips exactly.
        format!("{v}")
    }
}

pub(crate) fn parse_value(s: &str) -> Option<f64> {
    let t = s.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("nan") {
        Some(f64::NAN)
    } else {
        t.parse().ok()
    }
}

pub fn write_feature_table(table: &FeatureTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    let mut header = vec!["patient_id".to_string()];
    header.extend(table.names.iter().cloned());
    w.write_record(&header)?;
    for i in 0..table.n_rows() {
        let mut rec = vec![table.ids[i].clone()];
        rec.extend(table.row(i).iter().map(|&v| format_value(v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_feature_table(path: impl AsRef<Path>) -> Result<FeatureTable> {
    let path = path.as_ref();
    let fmt_err = |msg: String| Error::Format {
        path: path.to_path_buf(),
        msg,
    };
    let mut r = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(
                path,
                std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
            ),
            _ => Error::Csv(e),
        })?;
    let header = r.headers()?.clone();
    if header.get(0) != Some("patient_id") {
        return Err(fmt_err("first column must be `patient_id`".into()));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(fmt_err(format!(
                "row {} has {} fields, header has {}",
                line + 2,
                rec.len(),
                header.len()
            )));
        }
        ids.push(rec[0].to_string());
        for (j, f) in rec.iter().skip(1).enumerate() {
            values.push(parse_value(f).ok_or_else(|| {
                fmt_err(format!("row {} column `{}`: bad number `{f}`", line + 2, names[j]))
            })?);
        }
    }
    FeatureTable::with_inferred_groups(ids, names, values).map_err(|e| fmt_err(e.to_string()))
}
