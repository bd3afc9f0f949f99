use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{DataMatrix, StatsError};

pub const INTERCEPT: &str = "(intercept)";

/// Relative size below which a QR pivot counts as zero.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RobustFlavor {
    Hc0,
    #[default]
    Hc1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub robust_se: f64,
    /// Uses the robust standard error.
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    /// Intercept first, then predictors in input order.
    pub coefficients: Vec<Coefficient>,
    pub r_squared: f64,
    pub n: usize,
    pub k: usize,
    pub df_resid: usize,
    pub flavor: RobustFlavor,
    /// Present when there are at least two predictors.
    pub vif: Option<VifResult>,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VifResult {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub mean: f64,
}

fn two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

fn t_stat(estimate: f64, se: f64) -> f64 {
    if se > 0.0 {
        estimate / se
    } else if estimate == 0.0 {
        0.0
    } else {
        estimate.signum() * f64::INFINITY
    }
}

struct Fit {
    beta: DVector<f64>,
    residuals: DVector<f64>,
    q: DMatrix<f64>,
    r_inv: DMatrix<f64>,
    r_squared: f64,
}

/// QR least squares of `y` on `[1, X]`; names the first dependent column.
fn fit(y: &[f64], x: &DataMatrix) -> Result<Fit, StatsError> {
    let n = y.len();
    let p = x.n_cols() + 1;
    if n != x.n_rows() {
        return Err(StatsError::LengthMismatch {
            column: "y".into(),
            expected: x.n_rows(),
            found: n,
        });
    }
    if n <= p {
        return Err(StatsError::TooFewRows {
            needed: p + 1,
            found: n,
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite("y".into()));
    }
    let design = DMatrix::from_fn(
        n,
        p,
        |i, j| if j == 0 { 1.0 } else { x.columns()[j - 1][i] },
    );
    let qr = design.clone().qr();
    let (q, r) = (qr.q(), qr.r());
    for j in 0..p {
        if r[(j, j)].abs() <= RANK_TOL * design.column(j).norm() {
            let name = if j == 0 {
                INTERCEPT.to_string()
            } else {
                x.names()[j - 1].clone()
            };
            return Err(StatsError::RankDeficient(name));
        }
    }
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .expect("nonzero diagonal");
    let yv = DVector::from_column_slice(y);
    let beta = &r_inv * (q.transpose() * &yv);
    let residuals = &yv - &design * &beta;
    let ssr = residuals.norm_squared();
    let mean = yv.mean();
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r_squared = if sst > 0.0 {
        (1.0 - ssr / sst).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(Fit {
        beta,
        residuals,
        q,
        r_inv,
        r_squared,
    })
}

/// Ordinary least squares with an intercept, classical and
/// heteroskedasticity-robust standard errors, and VIFs when `k >= 2`.
pub fn ols(
    y: &[f64],
    x: &DataMatrix,
    flavor: RobustFlavor,
) -> Result<RegressionResult, StatsError> {
    let f = fit(y, x)?;
    let n = y.len();
    let p = x.n_cols() + 1;
    let df = n - p;
    let sigma2 = f.residuals.norm_squared() / df as f64;
    let classical = (&f.r_inv * f.r_inv.transpose()) * sigma2;
    // (X'X)^-1 X' diag(e^2) X (X'X)^-1 with X = QR.
    let mut weighted_q = f.q.clone();
    for (i, mut row) in weighted_q.row_iter_mut().enumerate() {
        row *= f.residuals[i] * f.residuals[i];
    }
    let meat = f.q.transpose() * weighted_q;
    let mut robust = &f.r_inv * meat * f.r_inv.transpose();
    if flavor == RobustFlavor::Hc1 {
        robust *= n as f64 / df as f64;
    }
    let coefficients = (0..p)
        .map(|j| {
            let robust_se = robust[(j, j)].max(0.0).sqrt();
            let t = t_stat(f.beta[j], robust_se);
            Coefficient {
                name: if j == 0 {
                    INTERCEPT.to_string()
                } else {
                    x.names()[j - 1].clone()
                },
                estimate: f.beta[j],
                se: classical[(j, j)].max(0.0).sqrt(),
                robust_se,
                t,
                p: two_sided_p(t, df as f64),
            }
        })
        .collect();
    Ok(RegressionResult {
        coefficients,
        r_squared: f.r_squared,
        n,
        k: x.n_cols(),
        df_resid: df,
        flavor,
        vif: if x.n_cols() >= 2 { Some(vif(x)?) } else { None },
    })
}

/// `1 / (1 - R²_j)` from regressing each column on the others plus an intercept.
pub fn vif(x: &DataMatrix) -> Result<VifResult, StatsError> {
    if x.n_cols() < 2 {
        return Err(StatsError::NeedTwoPredictors);
    }
    let mut values = Vec::with_capacity(x.n_cols());
    for (j, name) in x.names().iter().enumerate() {
        let others = x.without(j).expect("k >= 2");
        let aux = fit(&x.columns()[j], &others).map_err(|e| match e {
            StatsError::RankDeficient(_) => StatsError::Collinear(name.clone()),
            other => other,
        })?;
        if aux.r_squared >= 1.0 - 1e-12 {
            return Err(StatsError::Collinear(name.clone()));
        }
        values.push(1.0 / (1.0 - aux.r_squared));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok(VifResult {
        names: x.names().to_vec(),
        values,
        mean,
    })
}
