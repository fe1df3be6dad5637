//! Patient typicality from per-patient test-set correctness.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientCount {
    pub correct: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Typicality {
    /// Correct in every test appearance.
    pub typical: Vec<String>,
    /// Wrong in every test appearance.
    pub atypical: Vec<String>,
    /// Patients whose correct fraction is closest to ½, with that fraction.
    pub ambiguous: Vec<(String, f64)>,
    /// Never tested; excluded.
    pub untested: Vec<String>,
}

pub fn rank_typicality(counts: &[(String, PatientCount)]) -> Typicality {
    let mut out = Typicality::default();
    let mut rest: Vec<(String, f64)> = Vec::new();
    for (id, c) in counts {
        if c.total == 0 {
            log::warn!("patient {id} never appeared in a test set");
            out.untested.push(id.clone());
            continue;
        }
        let f = c.correct as f64 / c.total as f64;
        if c.correct == c.total {
            out.typical.push(id.clone());
        } else if c.correct == 0 {
            out.atypical.push(id.clone());
        } else {
            rest.push((id.clone(), f));
        }
    }
    if let Some(best) = rest.iter().map(|(_, f)| (f - 0.5).abs()).min_by(|a, b| a.total_cmp(b)) {
        out.ambiguous = rest.into_iter().filter(|(_, f)| (f - 0.5).abs() == best).collect();
    }
    out
}
