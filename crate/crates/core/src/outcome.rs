//! Hierarchical pairwise comparison of patients and the skew outcome matrix.
//!
//! Each pair of patients is scored on an ordered list of measures. The first
//! measure that separates the pair decides the outcome; a pair that no measure
//! separates scores 0. The result is a skew matrix over {-1, 0, +1} where
//! `u[i][j] = +1` means patient `i` had the more favorable outcome.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Arm;
use crate::par::{self, Exec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    /// Compared with the Gehan rule; values may be right-censored.
    TimeToEvent,
    Continuous,
    Ordinal,
    /// Values must be 0 or 1.
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

impl Direction {
    fn orient(self, score: i8) -> i8 {
        match self {
            Direction::HigherBetter => score,
            Direction::LowerBetter => -score,
        }
    }
}

/// One level of the comparison hierarchy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub name: String,
    pub kind: MeasureKind,
    pub direction: Direction,
    /// Minimum clinically relevant difference. A pair only separates when the
    /// difference is strictly larger than this.
    #[serde(default)]
    pub threshold: f64,
    /// Explicit rank in the hierarchy (0 = most important). When absent the
    /// list order is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
}

impl MeasureSpec {
    pub fn new(name: impl Into<String>, kind: MeasureKind, direction: Direction) -> Self {
        MeasureSpec {
            name: name.into(),
            kind,
            direction,
            threshold: 0.0,
            position: None,
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }
}

/// A validated, ordered list of measures.
#[derive(Debug, Clone, PartialEq)]
pub struct Hierarchy {
    measures: Vec<MeasureSpec>,
}

impl Hierarchy {
    /// Validates the specs and orders them by `position` when positions are
    /// given. Positions must be all present or all absent, distinct, and
    /// contiguous from 0.
    pub fn new(mut measures: Vec<MeasureSpec>) -> Result<Self> {
        if measures.is_empty() {
            return Err(Error::Hierarchy("hierarchy has no measures".into()));
        }
        let with_pos = measures.iter().filter(|m| m.position.is_some()).count();
        if with_pos != 0 && with_pos != measures.len() {
            return Err(Error::Hierarchy(
                "either every measure or no measure may carry a position".into(),
            ));
        }
        if with_pos > 0 {
            measures.sort_by_key(|m| m.position);
            for (rank, m) in measures.iter().enumerate() {
                if m.position != Some(rank) {
                    return Err(Error::Hierarchy(format!(
                        "positions must be distinct and contiguous from 0; measure '{}' has position {}",
                        m.name,
                        m.position.unwrap_or_default()
                    )));
                }
            }
        }
        let mut names = HashSet::new();
        for m in &measures {
            if m.name.is_empty() {
                return Err(Error::Hierarchy("measure name is empty".into()));
            }
            if !names.insert(m.name.as_str()) {
                return Err(Error::Hierarchy(format!("duplicate measure '{}'", m.name)));
            }
            if !m.threshold.is_finite() || m.threshold < 0.0 {
                return Err(Error::Hierarchy(format!(
                    "measure '{}' has threshold {}; it must be finite and >= 0",
                    m.name, m.threshold
                )));
            }
            let allows_threshold = matches!(m.kind, MeasureKind::Continuous | MeasureKind::Ordinal);
            if m.threshold > 0.0 && !allows_threshold {
                return Err(Error::Hierarchy(format!(
                    "measure '{}' is {:?}; only continuous and ordinal measures take a threshold",
                    m.name, m.kind
                )));
            }
        }
        Ok(Hierarchy { measures })
    }

    pub fn measures(&self) -> &[MeasureSpec] {
        &self.measures
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }
}

/// A single measurement. `value = None` means missing.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Observation {
    pub value: Option<f64>,
    pub censored: bool,
}

impl Observation {
    pub fn event(value: f64) -> Self {
        Observation {
            value: Some(value),
            censored: false,
        }
    }

    pub fn censored(value: f64) -> Self {
        Observation {
            value: Some(value),
            censored: true,
        }
    }

    pub fn missing() -> Self {
        Observation::default()
    }
}

impl From<f64> for Observation {
    fn from(v: f64) -> Self {
        Observation::event(v)
    }
}

impl From<Option<f64>> for Observation {
    fn from(v: Option<f64>) -> Self {
        Observation {
            value: v,
            censored: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub id: String,
    pub arm: Arm,
    /// One slot per measure, in hierarchy order.
    pub values: Vec<Observation>,
}

impl PatientRecord {
    pub fn new(id: impl Into<String>, arm: Arm, values: Vec<Observation>) -> Self {
        PatientRecord {
            id: id.into(),
            arm,
            values,
        }
    }

    /// Checks that the record has a well-formed slot for every measure.
    pub fn check(&self, hierarchy: &Hierarchy) -> Result<()> {
        if self.values.len() != hierarchy.len() {
            return Err(Error::Shape(format!(
                "record '{}' has {} values but the hierarchy has {} measures",
                self.id,
                self.values.len(),
                hierarchy.len()
            )));
        }
        for (obs, spec) in self.values.iter().zip(hierarchy.measures()) {
            if obs.censored && spec.kind != MeasureKind::TimeToEvent {
                return Err(Error::Shape(format!(
                    "record '{}': measure '{}' is {:?} and cannot be censored",
                    self.id, spec.name, spec.kind
                )));
            }
            let Some(v) = obs.value else { continue };
            if !v.is_finite() {
                return Err(Error::Input(format!(
                    "record '{}': measure '{}' has non-finite value {v}",
                    self.id, spec.name
                )));
            }
            if spec.kind == MeasureKind::Binary && v != 0.0 && v != 1.0 {
                return Err(Error::Input(format!(
                    "record '{}': binary measure '{}' has value {v}; expected 0 or 1",
                    self.id, spec.name
                )));
            }
        }
        Ok(())
    }
}

/// Gehan score of `a` against `b`: +1 when `a` is known to outlast `b`.
fn gehan(a: Observation, b: Observation) -> i8 {
    let (Some(ta), Some(tb)) = (a.value, b.value) else {
        return 0;
    };
    match (a.censored, b.censored) {
        (false, false) => sign(ta - tb),
        (true, true) => 0,
        // a is still event-free at ta, so it outlasts any event at or before ta.
        (true, false) => i8::from(ta >= tb),
        (false, true) => -i8::from(tb >= ta),
    }
}

fn sign(d: f64) -> i8 {
    if d > 0.0 {
        1
    } else if d < 0.0 {
        -1
    } else {
        0
    }
}

/// Score of `a` against `b` on one measure, already oriented so that +1 is
/// favorable for `a`.
pub fn compare_measure(a: Observation, b: Observation, spec: &MeasureSpec) -> i8 {
    let raw = match spec.kind {
        MeasureKind::TimeToEvent => gehan(a, b),
        MeasureKind::Continuous | MeasureKind::Ordinal => match (a.value, b.value) {
            (Some(x), Some(y)) => {
                let d = x - y;
                if d > spec.threshold {
                    1
                } else if -d > spec.threshold {
                    -1
                } else {
                    0
                }
            }
            _ => 0,
        },
        MeasureKind::Binary => match (a.value, b.value) {
            (Some(x), Some(y)) => sign(x - y),
            _ => 0,
        },
    };
    spec.direction.orient(raw)
}

/// First non-zero per-measure score in hierarchy order, or 0.
pub fn compare_pair(a: &PatientRecord, b: &PatientRecord, hierarchy: &Hierarchy) -> Result<i8> {
    a.check(hierarchy)?;
    b.check(hierarchy)?;
    Ok(compare_checked(a, b, hierarchy))
}

fn compare_checked(a: &PatientRecord, b: &PatientRecord, hierarchy: &Hierarchy) -> i8 {
    a.values
        .iter()
        .zip(&b.values)
        .zip(hierarchy.measures())
        .map(|((&x, &y), spec)| compare_measure(x, y, spec))
        .find(|&s| s != 0)
        .unwrap_or(0)
}

/// Skew N x N matrix of pairwise scores, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeMatrix {
    n: usize,
    entries: Vec<i8>,
}

impl OutcomeMatrix {
    pub fn zeros(n: usize) -> Self {
        OutcomeMatrix {
            n,
            entries: vec![0; n * n],
        }
    }

    /// Builds a matrix from row-major entries, rejecting anything that is not
    /// skew with entries in {-1, 0, +1}.
    pub fn from_entries(n: usize, entries: Vec<i8>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Shape(format!(
                "{} entries cannot form a {n} x {n} matrix",
                entries.len()
            )));
        }
        let m = OutcomeMatrix { n, entries };
        m.validate()?;
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<i8>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Shape(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            entries.extend_from_slice(row);
        }
        Self::from_entries(n, entries)
    }

    /// Fills the strict upper triangle from `f(i, j)` (i < j) and mirrors it.
    /// Scores outside {-1, 0, +1} are clamped by sign.
    pub fn from_upper<F>(n: usize, exec: Exec, f: F) -> Self
    where
        F: Fn(usize, usize) -> i8 + Sync + Send,
    {
        let upper: Vec<Vec<i8>> = par::map_indexed(exec, n, |i| ((i + 1)..n).map(|j| f(i, j).signum()).collect());
        let mut entries = vec![0i8; n * n];
        for (i, row) in upper.into_iter().enumerate() {
            for (k, s) in row.into_iter().enumerate() {
                let j = i + 1 + k;
                entries[i * n + j] = s;
                entries[j * n + i] = -s;
            }
        }
        OutcomeMatrix { n, entries }
    }

    /// Full O(N^2) scan of the matrix invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let v = self.entries[i * n + j];
                if !(-1..=1).contains(&v) {
                    return Err(Error::InvalidMatrix {
                        row: i,
                        col: j,
                        reason: format!("entry {v} is not in {{-1, 0, 1}}"),
                    });
                }
                if i == j && v != 0 {
                    return Err(Error::InvalidMatrix {
                        row: i,
                        col: j,
                        reason: format!("diagonal entry is {v}, expected 0"),
                    });
                }
                let mirror = self.entries[j * n + i];
                if v != -mirror {
                    return Err(Error::InvalidMatrix {
                        row: i,
                        col: j,
                        reason: format!("entry {v} but mirror ({j}, {i}) is {mirror}; matrix is not skew"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn n_patients(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    /// Directed edges `(tail, head)`: every `+1` entry.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.row(i)
                .iter()
                .enumerate()
                .filter(|(_, &v)| v == 1)
                .map(move |(j, _)| (i, j))
        })
    }

    /// Net score of each patient: row sums.
    pub fn scores(&self) -> Vec<i64> {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|&v| i64::from(v)).sum())
            .collect()
    }
}

impl fmt::Display for OutcomeMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Compares every pair of records. Runs the upper triangle row-parallel and
/// mirrors it, so the output is skew by construction.
pub fn build_outcome_matrix(records: &[PatientRecord], hierarchy: &Hierarchy) -> Result<OutcomeMatrix> {
    build_outcome_matrix_with(records, hierarchy, Exec::default())
}

pub fn build_outcome_matrix_with(
    records: &[PatientRecord],
    hierarchy: &Hierarchy,
    exec: Exec,
) -> Result<OutcomeMatrix> {
    if records.len() < 2 {
        return Err(Error::Input(format!(
            "need at least 2 patient records, got {}",
            records.len()
        )));
    }
    let mut seen = HashSet::with_capacity(records.len());
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(Error::Input(format!("duplicate patient id '{}'", r.id)));
        }
        r.check(hierarchy)?;
    }
    Ok(OutcomeMatrix::from_upper(records.len(), exec, |i, j| {
        compare_checked(&records[i], &records[j], hierarchy)
    }))
}
