//! Descriptive statistics, least squares with robust standard errors, variance
//! inflation factors and one-way group comparisons.

mod anova;
mod ols;

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use anova::{
    bartlett, oneway_anova, AnovaResult, BartlettResult, Group, GroupSummary, PairwiseComparison,
};
pub use ols::{ols, vif, Coefficient, RegressionResult, RobustFlavor, VifResult, INTERCEPT};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("data matrix needs at least one column")]
    NoColumns,
    #[error("column '{column}' has {found} rows, expected {expected}")]
    LengthMismatch {
        column: String,
        expected: usize,
        found: usize,
    },
    #[error("column '{0}' contains a non-finite value")]
    NonFinite(String),
    #[error("duplicate column name '{0}'")]
    DuplicateColumn(String),
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("need at least {needed} rows, have {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("design is rank deficient: '{0}' is a linear combination of earlier columns")]
    RankDeficient(String),
    #[error("'{0}' is perfectly collinear with the other predictors (infinite VIF)")]
    Collinear(String),
    #[error("variance inflation needs at least two predictors")]
    NeedTwoPredictors,
    #[error("need at least two groups")]
    TooFewGroups,
    #[error("group '{label}' needs at least {needed} observations")]
    GroupTooSmall { label: String, needed: usize },
    #[error("group '{0}' has zero variance")]
    ZeroVariance(String),
    #[error("total observations must exceed the number of groups")]
    NoWithinDegreesOfFreedom,
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
}

/// Named numeric columns of equal length, all finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMatrix {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl DataMatrix {
    pub fn new(columns: Vec<(String, Vec<f64>)>) -> Result<DataMatrix, StatsError> {
        if columns.is_empty() {
            return Err(StatsError::NoColumns);
        }
        let n = columns[0].1.len();
        let mut seen = HashSet::new();
        for (name, values) in &columns {
            if !seen.insert(name.as_str()) {
                return Err(StatsError::DuplicateColumn(name.clone()));
            }
            if values.len() != n {
                return Err(StatsError::LengthMismatch {
                    column: name.clone(),
                    expected: n,
                    found: values.len(),
                });
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(StatsError::NonFinite(name.clone()));
            }
        }
        let (names, columns) = columns.into_iter().unzip();
        Ok(DataMatrix { names, columns })
    }

    /// Reads the requested numeric columns of a CSV file, in the order given.
    pub fn from_csv(path: impl AsRef<Path>, wanted: &[&str]) -> Result<DataMatrix, StatsError> {
        let path = path.as_ref();
        let err = |message: String| StatsError::Input {
            path: path.to_path_buf(),
            message,
        };
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| err(e.to_string()))?;
        let headers = reader.headers().map_err(|e| err(e.to_string()))?.clone();
        let idx: Vec<usize> = wanted
            .iter()
            .map(|w| {
                headers
                    .iter()
                    .position(|h| h == *w)
                    .ok_or_else(|| StatsError::UnknownColumn(w.to_string()))
            })
            .collect::<Result<_, _>>()?;
        let mut cols = vec![Vec::new(); wanted.len()];
        for rec in reader.records() {
            let rec = rec.map_err(|e| err(e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line());
            for (c, &i) in idx.iter().enumerate() {
                let raw = rec.get(i).unwrap_or("");
                let v: f64 = raw.parse().map_err(|_| {
                    err(format!(
                        "line {line}, column {}: '{raw}' is not a number",
                        wanted[c]
                    ))
                })?;
                cols[c].push(v);
            }
        }
        DataMatrix::new(wanted.iter().map(|w| w.to_string()).zip(cols).collect())
    }

    pub fn n_rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    /// A new matrix holding only `names`, in that order.
    pub fn select(&self, names: &[&str]) -> Result<DataMatrix, StatsError> {
        let cols = names
            .iter()
            .map(|n| {
                self.column(n)
                    .map(|c| (n.to_string(), c.to_vec()))
                    .ok_or_else(|| StatsError::UnknownColumn(n.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        DataMatrix::new(cols)
    }

    /// Drops column `j`.
    pub fn without(&self, j: usize) -> Option<DataMatrix> {
        if self.n_cols() < 2 || j >= self.n_cols() {
            return None;
        }
        let mut m = self.clone();
        m.names.remove(j);
        m.columns.remove(j);
        Some(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Description {
    pub columns: Vec<ColumnSummary>,
    /// Pearson correlations; `None` where a column has zero variance.
    pub correlations: Vec<Vec<Option<f64>>>,
}

/// Welford running mean and sum of squared deviations.
fn mean_m2(xs: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let d = x - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (x - mean);
    }
    (mean, m2)
}

pub fn describe(m: &DataMatrix) -> Result<Description, StatsError> {
    let n = m.n_rows();
    if n < 2 {
        return Err(StatsError::TooFewRows {
            needed: 2,
            found: n,
        });
    }
    let moments: Vec<(f64, f64)> = m.columns.iter().map(|c| mean_m2(c)).collect();
    let columns = m
        .names
        .iter()
        .zip(&m.columns)
        .zip(&moments)
        .map(|((name, c), &(mean, m2))| ColumnSummary {
            name: name.clone(),
            n,
            mean,
            sd: (m2 / (n - 1) as f64).sqrt(),
            min: c.iter().copied().fold(f64::INFINITY, f64::min),
            max: c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
        .collect();
    let k = m.n_cols();
    let mut corr = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i..k {
            let (mi, si) = moments[i];
            let (mj, sj) = moments[j];
            if si <= 0.0 || sj <= 0.0 {
                continue;
            }
            let r = if i == j {
                1.0
            } else {
                let cross: f64 = m.columns[i]
                    .iter()
                    .zip(&m.columns[j])
                    .map(|(a, b)| (a - mi) * (b - mj))
                    .sum();
                (cross / (si * sj).sqrt()).clamp(-1.0, 1.0)
            };
            corr[i][j] = Some(r);
            corr[j][i] = Some(r);
        }
    }
    Ok(Description {
        columns,
        correlations: corr,
    })
}
