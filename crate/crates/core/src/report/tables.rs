use std::io::Write;

use serde::Serialize;

use crate::aggregate::StateSentiment;
use crate::geolocate::{Region, StateCode};
use crate::policyindex::{PolicyProfile, COVARIATES};
use crate::stats::{
    self, DataMatrix, Description, RegressionResult, RobustFlavor, StatsError, INTERCEPT,
};

pub const RESPONSE: &str = "sentiment_score";

/// One state's score joined to its policy covariates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisRow {
    pub state: StateCode,
    pub region: Region,
    pub score: f64,
    pub covariates: [f64; 7],
}

/// Joins on state; states without posts drop out.
pub fn analysis_rows(scores: &[StateSentiment], profiles: &[PolicyProfile]) -> Vec<AnalysisRow> {
    scores
        .iter()
        .filter_map(|s| {
            profiles
                .iter()
                .find(|p| p.state == s.state)
                .map(|p| AnalysisRow {
                    state: s.state,
                    region: p.region,
                    score: s.score,
                    covariates: p.covariates(),
                })
        })
        .collect()
}

pub fn analysis_matrix(rows: &[AnalysisRow]) -> Result<DataMatrix, StatsError> {
    let mut cols = vec![(
        RESPONSE.to_string(),
        rows.iter().map(|r| r.score).collect::<Vec<_>>(),
    )];
    for (j, name) in COVARIATES.iter().enumerate() {
        cols.push((
            name.to_string(),
            rows.iter().map(|r| r.covariates[j]).collect(),
        ));
    }
    DataMatrix::new(cols)
}

pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "NA".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:?}")
    }
}

pub fn write_analysis_csv<W: Write>(rows: &[AnalysisRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["state", "region", RESPONSE];
    header.extend(COVARIATES);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.state.code().to_string(),
            r.region.to_string(),
            fmt_num(r.score),
        ];
        rec.extend(r.covariates.iter().map(|&v| fmt_num(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Descriptives and the lower-triangular correlation block.
pub fn write_table2<W: Write>(d: &Description, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let k = d.columns.len();
    let mut header: Vec<String> = ["variable", "obs", "mean", "sd", "min", "max"]
        .map(String::from)
        .to_vec();
    header.extend((1..=k).map(|i| format!("({i})")));
    w.write_record(&header)?;
    for (i, c) in d.columns.iter().enumerate() {
        let mut rec = vec![
            format!("({}) {}", i + 1, c.name),
            c.n.to_string(),
            fmt_num(c.mean),
            fmt_num(c.sd),
            fmt_num(c.min),
            fmt_num(c.max),
        ];
        for j in 0..k {
            rec.push(if j > i {
                String::new()
            } else {
                d.correlations[i][j].map_or("NA".into(), fmt_num)
            });
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Models 1-7 regress the score on one covariate each; model 8 uses all seven.
pub fn regression_models(
    rows: &[AnalysisRow],
    flavor: RobustFlavor,
) -> Result<Vec<RegressionResult>, StatsError> {
    let m = analysis_matrix(rows)?;
    let y = m.column(RESPONSE).expect("response column").to_vec();
    let mut models = Vec::with_capacity(8);
    for name in COVARIATES {
        models.push(stats::ols(&y, &m.select(&[name])?, flavor)?);
    }
    models.push(stats::ols(&y, &m.select(&COVARIATES)?, flavor)?);
    Ok(models)
}

/// One column per model; `coef`/`robust_se`/`p` rows per term, then fit rows.
pub fn write_table3<W: Write>(models: &[RegressionResult], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["term".to_string(), "stat".to_string()];
    header.extend((1..=models.len()).map(|i| format!("model_{i}")));
    w.write_record(&header)?;
    let terms = COVARIATES.iter().copied().chain([INTERCEPT]);
    for term in terms {
        for (stat, pick) in [
            (
                "coef",
                (|c: &stats::Coefficient| c.estimate) as fn(&stats::Coefficient) -> f64,
            ),
            ("robust_se", |c| c.robust_se),
            ("p", |c| c.p),
        ] {
            let mut rec = vec![term.to_string(), stat.to_string()];
            rec.extend(models.iter().map(|m| {
                m.coefficient(term)
                    .map(|c| fmt_num(pick(c)))
                    .unwrap_or_default()
            }));
            w.write_record(&rec)?;
        }
    }
    type FitRow = (&'static str, fn(&RegressionResult) -> String);
    let fit_rows: [FitRow; 3] = [
        ("r_squared", |m| fmt_num(m.r_squared)),
        ("n", |m| m.n.to_string()),
        ("mean_vif", |m| {
            m.vif.as_ref().map(|v| fmt_num(v.mean)).unwrap_or_default()
        }),
    ];
    for (label, f) in fit_rows {
        let mut rec = vec![label.to_string(), String::new()];
        rec.extend(models.iter().map(f));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
