//! Two-group descriptive tests: Student/Welch t and Pearson chi-square.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;
use thiserror::Error;

use super::manifest::Manifest;
use super::record::PatientRecord;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("each sample needs at least 2 values (got {0} and {1})")]
    TooSmall(usize, usize),
    #[error("non-finite value in sample")]
    NonFinite,
    #[error("contingency table has an empty margin")]
    ZeroMargin,
    #[error("contingency counts must be finite and non-negative")]
    BadCount,
    #[error("cohort needs both LVO and non-LVO records")]
    SingleClass,
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TVariant {
    /// Student's t with pooled variance.
    Pooled,
    Welch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    /// Two-sided.
    pub p: f64,
    pub df: f64,
    /// Both samples had zero variance; `p` follows the fixed convention.
    pub degenerate: bool,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    (m, ss / (n - 1.0))
}

/// Two-sided p-value of a t statistic: `I_{df/(df+t²)}(df/2, 1/2)`.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    beta_reg(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

/// Two-sample t test of `a` against `b` (`t > 0` when mean(a) > mean(b)).
///
/// When both variances are zero: equal means give `t = 0, p = 1`; different
/// means give `t = ±∞, p = 0`. Both are flagged `degenerate`.
pub fn two_sample_t(a: &[f64], b: &[f64], variant: TVariant) -> Result<TTest, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::TooSmall(a.len(), b.len()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let diff = ma - mb;
    let pooled_df = na + nb - 2.0;
    if va == 0.0 && vb == 0.0 {
        let (t, p) = if diff == 0.0 { (0.0, 1.0) } else { (f64::INFINITY.copysign(diff), 0.0) };
        return Ok(TTest { t, p, df: pooled_df, degenerate: true });
    }
    let (se, df) = match variant {
        TVariant::Pooled => {
            let sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / pooled_df;
            ((sp2 * (1.0 / na + 1.0 / nb)).sqrt(), pooled_df)
        }
        TVariant::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
            ((qa + qb).sqrt(), df)
        }
    };
    let t = diff / se;
    Ok(TTest { t, p: t_two_sided_p(t, df), df, degenerate: false })
}

/// Pearson chi-square (no continuity correction, 1 df) for `[[a, b], [c, d]]`.
pub fn chi_square_2x2(table: [[f64; 2]; 2]) -> Result<(f64, f64), StatsError> {
    if table.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(StatsError::BadCount);
    }
    let [[a, b], [c, d]] = table;
    let rows = [a + b, c + d];
    let cols = [a + c, b + d];
    if rows.contains(&0.0) || cols.contains(&0.0) {
        return Err(StatsError::ZeroMargin);
    }
    let n = a + b + c + d;
    let det = a * d - b * c;
    let chi2 = n * det * det / (rows[0] * rows[1] * cols[0] * cols[1]);
    Ok((chi2, erfc((chi2 / 2.0).sqrt())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroupSummary {
    Continuous { mean: f64, sd: f64, count: usize },
    Binary { proportion: f64, positives: usize, count: usize },
}

impl GroupSummary {
    pub fn count(&self) -> usize {
        match self {
            GroupSummary::Continuous { count, .. } | GroupSummary::Binary { count, .. } => *count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    T,
    Chi2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub name: String,
    pub lvo: GroupSummary,
    pub non_lvo: GroupSummary,
    pub test: TestKind,
    /// `None` when the feature could not be tested; see `untestable`.
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub untestable: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortStats {
    pub n_lvo: usize,
    pub n_non_lvo: usize,
    pub features: Vec<FeatureStats>,
}

fn summarize(values: &[f64], continuous: bool) -> GroupSummary {
    let count = values.len();
    if continuous {
        let (mean, sd) = if count == 0 {
            (f64::NAN, f64::NAN)
        } else if count == 1 {
            (values[0], 0.0)
        } else {
            let (m, v) = mean_var(values);
            (m, v.sqrt())
        };
        GroupSummary::Continuous { mean, sd, count }
    } else {
        let positives = values.iter().filter(|v| **v == 1.0).count();
        let proportion = if count == 0 { f64::NAN } else { positives as f64 / count as f64 };
        GroupSummary::Binary { proportion, positives, count }
    }
}

/// Class-conditional summaries plus a t test (continuous) or chi-square
/// (binary) per feature. Missing values are dropped per feature.
pub fn cohort_stats(
    records: &[PatientRecord],
    features: &[&str],
    manifest: &Manifest,
    variant: TVariant,
) -> Result<CohortStats, StatsError> {
    let n_lvo = records.iter().filter(|r| r.lvo).count();
    let n_non = records.len() - n_lvo;
    if n_lvo == 0 || n_non == 0 {
        return Err(StatsError::SingleClass);
    }
    let mut out = Vec::with_capacity(features.len());
    for &name in features {
        let def = manifest.get(name).ok_or_else(|| StatsError::UnknownFeature(name.to_string()))?;
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for r in records {
            let v = r.feature(name).map_err(|_| StatsError::UnknownFeature(name.to_string()))?;
            if let Some(v) = v {
                if r.lvo {
                    pos.push(v)
                } else {
                    neg.push(v)
                }
            }
        }
        let continuous = def.is_continuous();
        let (test, outcome) = if continuous {
            (TestKind::T, two_sample_t(&pos, &neg, variant).map(|t| (t.t, t.p)))
        } else {
            let k = |xs: &[f64]| xs.iter().filter(|v| **v == 1.0).count() as f64;
            let table = [[k(&pos), pos.len() as f64 - k(&pos)], [k(&neg), neg.len() as f64 - k(&neg)]];
            (TestKind::Chi2, chi_square_2x2(table))
        };
        let (statistic, p_value, untestable) = match outcome {
            Ok((s, p)) => (Some(s), Some(p), None),
            Err(e) => (None, None, Some(e.to_string())),
        };
        out.push(FeatureStats {
            name: name.to_string(),
            lvo: summarize(&pos, continuous),
            non_lvo: summarize(&neg, continuous),
            test,
            statistic,
            p_value,
            untestable,
        });
    }
    Ok(CohortStats { n_lvo, n_non_lvo: n_non, features: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{synth_cohort, CohortSpec, Sex};

    #[test]
    fn identical_samples_give_t0_p1() {
        let a = [1.0, 4.0, 2.5, 3.0];
        let r = two_sample_t(&a, &a, TVariant::Pooled).unwrap();
        assert_eq!(r.t, 0.0);
        assert!((r.p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gross_shift_is_significant() {
        let a = [1.0, 2.0, 3.0];
        let b = [11.0, 12.0, 13.0];
        for v in [TVariant::Pooled, TVariant::Welch] {
            assert!(two_sample_t(&a, &b, v).unwrap().p < 0.01);
        }
    }

    #[test]
    fn zero_variance_conventions() {
        let same = two_sample_t(&[2.0, 2.0], &[2.0, 2.0, 2.0], TVariant::Pooled).unwrap();
        assert_eq!((same.t, same.p, same.degenerate), (0.0, 1.0, true));
        let apart = two_sample_t(&[1.0, 1.0], &[3.0, 3.0], TVariant::Welch).unwrap();
        assert_eq!(apart.p, 0.0);
        assert!(apart.t.is_infinite() && apart.t < 0.0);
        assert!(two_sample_t(&[1.0], &[1.0, 2.0], TVariant::Pooled).is_err());
    }

    #[test]
    fn chi_square_examples() {
        assert_eq!(chi_square_2x2([[10.0, 10.0], [10.0, 10.0]]).unwrap(), (0.0, 1.0));
        let (c, _) = chi_square_2x2([[50.0, 0.0], [0.0, 50.0]]).unwrap();
        assert!((c - 100.0).abs() < 1e-12);
        let t = [[12.0, 5.0], [8.0, 10.0]];
        let swapped = [[8.0, 10.0], [12.0, 5.0]];
        assert_eq!(chi_square_2x2(t).unwrap().0, chi_square_2x2(swapped).unwrap().0);
        assert_eq!(chi_square_2x2([[0.0, 0.0], [3.0, 4.0]]), Err(StatsError::ZeroMargin));
    }

    #[test]
    fn planted_age_gap_is_highly_significant() {
        let m = Manifest::default();
        let recs = synth_cohort(&CohortSpec::default(), 3).unwrap();
        let s = cohort_stats(&recs, &["age", "female", "afib"], &m, TVariant::Pooled).unwrap();
        assert!(s.features[0].p_value.unwrap() < 0.001);
        assert_eq!(s.n_lvo + s.n_non_lvo, 300);
        for f in &s.features {
            assert_eq!(f.lvo.count() + f.non_lvo.count(), 300);
        }
    }

    #[test]
    fn single_class_cohort_is_an_error() {
        let m = Manifest::default();
        let recs: Vec<_> = (0..4).map(|i| PatientRecord::blank(format!("P{i}"), 60.0, Sex::Male, true)).collect();
        assert_eq!(cohort_stats(&recs, &["age"], &m, TVariant::Pooled), Err(StatsError::SingleClass));
    }

    #[test]
    fn fully_missing_feature_is_marked_untestable() {
        let m = Manifest::default();
        let recs: Vec<_> = (0..6).map(|i| PatientRecord::blank(format!("P{i}"), 60.0 + i as f64, Sex::Male, i % 2 == 0)).collect();
        let s = cohort_stats(&recs, &["bp_systolic", "diabetes"], &m, TVariant::Pooled).unwrap();
        assert!(s.features.iter().all(|f| f.untestable.is_some() && f.p_value.is_none()));
    }
}
