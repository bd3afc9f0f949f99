use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, StudentsT};

use super::{mean_m2, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub label: String,
    pub values: Vec<f64>,
}

impl Group {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Group {
        Group {
            label: label.into(),
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub n: usize,
    pub mean: f64,
    /// Sample variance; 0 for a single observation.
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub group_a: String,
    pub group_b: String,
    /// Mean of `group_a` minus mean of `group_b`.
    pub mean_difference: f64,
    pub t: f64,
    pub df: usize,
    pub p_raw: f64,
    pub p_bonferroni: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    /// `+inf` when all within-group variation is zero but means differ.
    pub f: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p: f64,
    pub ss_between: f64,
    pub ss_within: f64,
    pub groups: Vec<GroupSummary>,
    pub pairwise: Vec<PairwiseComparison>,
}

fn summarize(g: &Group) -> GroupSummary {
    let (mean, m2) = mean_m2(&g.values);
    GroupSummary {
        label: g.label.clone(),
        n: g.values.len(),
        mean,
        variance: if g.values.len() > 1 {
            m2 / (g.values.len() - 1) as f64
        } else {
            0.0
        },
    }
}

/// Pooled-variance two-sample t test. A pair with no residual degrees of
/// freedom, or no variation at all, gets p = 1.
fn pooled_t(a: &GroupSummary, b: &GroupSummary) -> (f64, usize, f64) {
    let diff = a.mean - b.mean;
    let df = a.n + b.n - 2;
    if df == 0 {
        return (f64::NAN, 0, 1.0);
    }
    let sp2 = ((a.n - 1) as f64 * a.variance + (b.n - 1) as f64 * b.variance) / df as f64;
    let se = (sp2 * (1.0 / a.n as f64 + 1.0 / b.n as f64)).sqrt();
    if se == 0.0 {
        return if diff == 0.0 {
            (0.0, df, 1.0)
        } else {
            (diff.signum() * f64::INFINITY, df, 0.0)
        };
    }
    let t = diff / se;
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df > 0");
    (t, df, (2.0 * dist.sf(t.abs())).min(1.0))
}

/// One-way ANOVA with Bonferroni-adjusted pairwise comparisons over all
/// `g(g-1)/2` pairs.
pub fn oneway_anova(groups: &[Group]) -> Result<AnovaResult, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups);
    }
    for g in groups {
        if g.values.is_empty() {
            return Err(StatsError::GroupTooSmall {
                label: g.label.clone(),
                needed: 1,
            });
        }
        if g.values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(g.label.clone()));
        }
    }
    let n: usize = groups.iter().map(|g| g.values.len()).sum();
    if n <= groups.len() {
        return Err(StatsError::NoWithinDegreesOfFreedom);
    }
    let summaries: Vec<GroupSummary> = groups.iter().map(summarize).collect();
    let grand = groups.iter().flat_map(|g| &g.values).sum::<f64>() / n as f64;
    let ss_between: f64 = summaries
        .iter()
        .map(|s| s.n as f64 * (s.mean - grand).powi(2))
        .sum();
    let ss_within: f64 = groups
        .iter()
        .zip(&summaries)
        .map(|(g, s)| g.values.iter().map(|v| (v - s.mean).powi(2)).sum::<f64>())
        .sum();
    let df_between = groups.len() - 1;
    let df_within = n - groups.len();
    let (f, p) = if ss_within > 0.0 {
        let f = (ss_between / df_between as f64) / (ss_within / df_within as f64);
        let dist = FisherSnedecor::new(df_between as f64, df_within as f64).expect("positive df");
        (f, dist.sf(f))
    } else if ss_between > 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        (0.0, 1.0)
    };
    let m = (groups.len() * (groups.len() - 1) / 2) as f64;
    let mut pairwise = Vec::new();
    for i in 0..summaries.len() {
        for j in i + 1..summaries.len() {
            let (a, b) = (&summaries[i], &summaries[j]);
            let (t, df, p_raw) = pooled_t(a, b);
            pairwise.push(PairwiseComparison {
                group_a: a.label.clone(),
                group_b: b.label.clone(),
                mean_difference: a.mean - b.mean,
                t,
                df,
                p_raw,
                p_bonferroni: (m * p_raw).min(1.0),
            });
        }
    }
    Ok(AnovaResult {
        f,
        df_between,
        df_within,
        p,
        ss_between,
        ss_within,
        groups: summaries,
        pairwise,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BartlettResult {
    pub statistic: f64,
    pub df: usize,
    pub p: f64,
}

/// Bartlett's test for equal variances.
pub fn bartlett(groups: &[Group]) -> Result<BartlettResult, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups);
    }
    let mut summaries = Vec::with_capacity(groups.len());
    for g in groups {
        if g.values.len() < 2 {
            return Err(StatsError::GroupTooSmall {
                label: g.label.clone(),
                needed: 2,
            });
        }
        let s = summarize(g);
        if s.variance <= 0.0 {
            return Err(StatsError::ZeroVariance(g.label.clone()));
        }
        summaries.push(s);
    }
    let k = groups.len() as f64;
    let n: f64 = summaries.iter().map(|s| s.n as f64).sum();
    let pooled = summaries
        .iter()
        .map(|s| (s.n - 1) as f64 * s.variance)
        .sum::<f64>()
        / (n - k);
    let numerator = (n - k) * pooled.ln()
        - summaries
            .iter()
            .map(|s| (s.n - 1) as f64 * s.variance.ln())
            .sum::<f64>();
    let correction = 1.0
        + (summaries
            .iter()
            .map(|s| 1.0 / (s.n - 1) as f64)
            .sum::<f64>()
            - 1.0 / (n - k))
            / (3.0 * (k - 1.0));
    let statistic = (numerator / correction).max(0.0);
    let df = groups.len() - 1;
    let p = ChiSquared::new(df as f64).expect("df > 0").sf(statistic);
    Ok(BartlettResult { statistic, df, p })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_means() {
        let r = oneway_anova(&[
            Group::new("a", vec![1.0, 2.0, 3.0]),
            Group::new("b", vec![3.0, 2.0, 1.0]),
            Group::new("c", vec![0.0, 2.0, 4.0]),
        ])
        .unwrap();
        assert!(r.f.abs() < 1e-15);
        assert!((r.p - 1.0).abs() < 1e-12);
        assert_eq!((r.df_between, r.df_within), (2, 6));
        assert_eq!(r.pairwise.len(), 3);
    }

    #[test]
    fn hand_sums_of_squares() {
        // means 2, 5, 8; grand 5; SSB = 3*9 + 0 + 3*9 = 54; SSW = 2+2+2 = 6.
        let r = oneway_anova(&[
            Group::new("a", vec![1.0, 2.0, 3.0]),
            Group::new("b", vec![4.0, 5.0, 6.0]),
            Group::new("c", vec![7.0, 8.0, 9.0]),
        ])
        .unwrap();
        assert!((r.ss_between - 54.0).abs() < 1e-12);
        assert!((r.ss_within - 6.0).abs() < 1e-12);
        assert!((r.f - 27.0).abs() < 1e-12);
    }

    #[test]
    fn zero_within_variance() {
        let r = oneway_anova(&[
            Group::new("a", vec![1.0, 1.0]),
            Group::new("b", vec![2.0, 2.0]),
        ])
        .unwrap();
        assert_eq!((r.f, r.p), (f64::INFINITY, 0.0));
        assert_eq!(r.pairwise[0].p_raw, 0.0);
        let r = oneway_anova(&[
            Group::new("a", vec![1.0, 1.0]),
            Group::new("b", vec![1.0, 1.0]),
        ])
        .unwrap();
        assert_eq!((r.f, r.p), (0.0, 1.0));
        assert_eq!(r.pairwise[0].p_raw, 1.0);
    }

    #[test]
    fn singleton_pair_has_no_test() {
        let r = oneway_anova(&[
            Group::new("a", vec![1.0]),
            Group::new("b", vec![2.0]),
            Group::new("c", vec![3.0, 4.0]),
        ])
        .unwrap();
        assert_eq!(r.pairwise[0].df, 0);
        assert_eq!(r.pairwise[0].p_raw, 1.0);
    }

    #[test]
    fn anova_errors() {
        assert_eq!(
            oneway_anova(&[Group::new("a", vec![1.0, 2.0])]),
            Err(StatsError::TooFewGroups)
        );
        assert!(matches!(
            oneway_anova(&[Group::new("a", vec![1.0]), Group::new("b", vec![])]),
            Err(StatsError::GroupTooSmall { .. })
        ));
        assert_eq!(
            oneway_anova(&[Group::new("a", vec![1.0]), Group::new("b", vec![2.0])]),
            Err(StatsError::NoWithinDegreesOfFreedom)
        );
    }

    #[test]
    fn bartlett_identical_groups() {
        let v = vec![1.0, 4.0, 2.0, 8.0, 5.0];
        let r = bartlett(&[Group::new("a", v.clone()), Group::new("b", v)]).unwrap();
        assert!(r.statistic.abs() < 1e-12);
        assert_eq!(r.df, 1);
        assert!((r.p - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bartlett_errors() {
        assert!(matches!(
            bartlett(&[Group::new("a", vec![1.0, 1.0]), Group::new("b", vec![1.0, 2.0])]),
            Err(StatsError::ZeroVariance(l)) if l == "a"
        ));
        assert!(matches!(
            bartlett(&[Group::new("a", vec![1.0]), Group::new("b", vec![1.0, 2.0])]),
            Err(StatsError::GroupTooSmall { needed: 2, .. })
        ));
    }
}
