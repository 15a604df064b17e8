//! Target diagnostics and transform recommendations.
//!
//! Each detector turns one qualitative question about the target (does it
//! depend on who produced it, on a reference frame, on time, on known context,
//! or is its distribution awkward) into a statistic and a thresholded flag.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

use crate::data::{group_rows, time_ranks, Dataset};
use crate::error::{Error, Result};
use crate::matrix::{ols, Matrix, OnCollinear};
use crate::stats::{average_ranks, gap_score, mean, pearson, skewness};
use crate::transform::TransformKind;

/// Minimum sample size for the distribution checks.
pub const MIN_DISTRIBUTION_SAMPLES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Subject ANOVA flags when p is below this.
    pub subjective_p: f64,
    pub frame_r: f64,
    pub trend_rho: f64,
    pub context_r2: f64,
    pub skew: f64,
    pub gap: f64,
    /// Breusch-Pagan flags when p is below this.
    pub hetero_p: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            subjective_p: 0.05,
            frame_r: 0.3,
            trend_rho: 0.3,
            context_r2: 0.25,
            skew: 0.5,
            gap: 0.1,
            hetero_p: 0.05,
        }
    }
}

impl Thresholds {
    pub const KEYS: [&'static str; 7] = [
        "subjective_p",
        "frame_r",
        "trend_rho",
        "context_r2",
        "skew",
        "gap",
        "hetero_p",
    ];

    /// Overrides one threshold by name.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Config(format!(
                "threshold {key} must be a non-negative number, got {value}"
            )));
        }
        let slot = match key {
            "subjective_p" => &mut self.subjective_p,
            "frame_r" => &mut self.frame_r,
            "trend_rho" => &mut self.trend_rho,
            "context_r2" => &mut self.context_r2,
            "skew" => &mut self.skew,
            "gap" => &mut self.gap,
            "hetero_p" => &mut self.hetero_p,
            _ => {
                return Err(Error::Config(format!(
                    "unknown threshold \"{key}\" (expected one of {})",
                    Self::KEYS.join(", ")
                )))
            }
        };
        *slot = value;
        Ok(())
    }

    /// Parses `KEY=VALUE`.
    pub fn apply(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected KEY=VALUE, got \"{assignment}\"")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("threshold {key}: \"{value}\" is not a number")))?;
        self.set(key.trim(), value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub flagged: bool,
    pub statistic: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionVerdict {
    pub flagged: bool,
    pub skewed: bool,
    pub gapped: bool,
    pub heteroscedastic: bool,
    pub skewness: f64,
    pub gap_score: f64,
    /// Breusch-Pagan LM statistic n·R² and its chi-squared p-value.
    pub heteroscedasticity_statistic: f64,
    pub heteroscedasticity_p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub kind: TransformKind,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub n: usize,
    pub thresholds: Thresholds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subjective: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trend: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<Verdict>,
    pub distribution: DistributionVerdict,
    pub recommendations: Vec<Recommendation>,
}

/// One-way ANOVA of y across subject groups.
pub fn detect_subjective(y: &[f64], subject: &[String], th: &Thresholds) -> Result<Verdict> {
    check_len(y.len(), subject.len())?;
    let groups = group_rows(subject);
    let k = groups.len();
    let n = y.len();
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "subject test needs at least 2 subjects, got {k}"
        )));
    }
    if n <= k {
        return Err(Error::InvalidInput(
            "subject test needs more rows than subjects".into(),
        ));
    }
    let grand = mean(y);
    let (mut between, mut within) = (0.0, 0.0);
    for rows in groups.values() {
        let g: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
        let m = mean(&g);
        between += g.len() as f64 * (m - grand) * (m - grand);
        within += g.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    }
    let (df1, df2) = ((k - 1) as f64, (n - k) as f64);
    let (f, p) = if within == 0.0 {
        if between == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY, 0.0)
        }
    } else {
        let f = (between / df1) / (within / df2);
        let dist = FisherSnedecor::new(df1, df2)
            .map_err(|e| Error::InvalidInput(format!("F distribution: {e}")))?;
        (f, dist.sf(f).clamp(0.0, 1.0))
    };
    Ok(Verdict {
        flagged: p < th.subjective_p,
        statistic: f,
        p_value: Some(p),
    })
}

/// |Pearson r| between y and the frame column.
pub fn detect_frame(y: &[f64], frame: &[f64], th: &Thresholds) -> Result<Verdict> {
    check_len(y.len(), frame.len())?;
    let r = pearson(y, frame).map_or(0.0, f64::abs);
    Ok(Verdict {
        flagged: r > th.frame_r,
        statistic: r,
        p_value: None,
    })
}

/// |Spearman ρ| between y and time order.
pub fn detect_trend(y: &[f64], time: &[String], th: &Thresholds) -> Result<Verdict> {
    check_len(y.len(), time.len())?;
    let rho = spearman_time(y, time).map_or(0.0, f64::abs);
    Ok(Verdict {
        flagged: rho > th.trend_rho,
        statistic: rho,
        p_value: None,
    })
}

/// Signed Spearman correlation between y and time order.
pub fn spearman_time(y: &[f64], time: &[String]) -> Option<f64> {
    let ry = average_ranks(y);
    let rt: Vec<f64> = time_ranks(time).into_iter().map(|r| r as f64).collect();
    pearson(&ry, &rt)
}

/// R² of a least-squares fit of y on the context columns.
pub fn detect_context(y: &[f64], context: &Matrix, th: &Thresholds) -> Result<Verdict> {
    check_len(y.len(), context.nrows())?;
    if context.ncols() == 0 {
        return Err(Error::InvalidInput(
            "context test needs at least one column".into(),
        ));
    }
    let r2 = match ols(context, y, OnCollinear::Fail) {
        Ok(fit) => r_squared(y, &fit.predict(context)),
        Err(e) => {
            log::warn!("context fit is singular ({e}); reporting R² = 0");
            0.0
        }
    };
    Ok(Verdict {
        flagged: r2 > th.context_r2,
        statistic: r2,
        p_value: None,
    })
}

/// Skewness, gap score and a Breusch-Pagan test of y on the features.
pub fn detect_distribution(
    y: &[f64],
    features: &Matrix,
    th: &Thresholds,
) -> Result<DistributionVerdict> {
    check_len(y.len(), features.nrows())?;
    if y.len() < MIN_DISTRIBUTION_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "distribution checks need at least {MIN_DISTRIBUTION_SAMPLES} rows, got {}",
            y.len()
        )));
    }
    let gamma = match skewness(y) {
        Ok(g) => g,
        Err(Error::ZeroVariance) => {
            return Err(Error::DegenerateTarget("target is constant".into()))
        }
        Err(e) => return Err(e),
    };
    let gap = gap_score(y)?;
    let (lm, p) = breusch_pagan(y, features)?;
    let skewed = gamma.abs() > th.skew;
    let gapped = gap > th.gap;
    let heteroscedastic = p < th.hetero_p;
    Ok(DistributionVerdict {
        flagged: skewed || gapped || heteroscedastic,
        skewed,
        gapped,
        heteroscedastic,
        skewness: gamma,
        gap_score: gap,
        heteroscedasticity_statistic: lm,
        heteroscedasticity_p_value: p,
    })
}

/// Koenker's studentized Breusch-Pagan test: LM = n·R² from regressing the
/// squared OLS residuals on the features, compared with χ²(rank).
pub fn breusch_pagan(y: &[f64], features: &Matrix) -> Result<(f64, f64)> {
    let n = y.len();
    if features.ncols() == 0 {
        return Ok((0.0, 1.0));
    }
    let fit = ols(features, y, OnCollinear::Drop)?;
    let e2: Vec<f64> = fit
        .predict(features)
        .iter()
        .zip(y)
        .map(|(p, v)| (v - p) * (v - p))
        .collect();
    let aux = ols(features, &e2, OnCollinear::Drop)?;
    let df = aux.rank();
    if df == 0 {
        return Ok((0.0, 1.0));
    }
    let lm = n as f64 * r_squared(&e2, &aux.predict(features));
    let chi = ChiSquared::new(df as f64)
        .map_err(|e| Error::InvalidInput(format!("chi-squared distribution: {e}")))?;
    Ok((lm, chi.sf(lm).clamp(0.0, 1.0)))
}

fn r_squared(y: &[f64], fitted: &[f64]) -> f64 {
    let m = mean(y);
    let tot: f64 = y.iter().map(|v| (v - m) * (v - m)).sum();
    if tot <= 0.0 {
        return 0.0;
    }
    let res: f64 = y.iter().zip(fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    (1.0 - res / tot).clamp(0.0, 1.0)
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::LengthMismatch { expected, got });
    }
    Ok(())
}

/// Runs every detector whose role columns are present.
pub fn run_all(ds: &Dataset, th: &Thresholds) -> Result<DiagnosticReport> {
    let y = ds.target();
    let subjective = ds
        .subject()
        .map(|s| detect_subjective(y, s, th))
        .transpose()?;
    let frame = ds.frame().map(|r| detect_frame(y, r, th)).transpose()?;
    let trend = ds.time().map(|t| detect_trend(y, t, th)).transpose()?;
    let context = ds
        .context()
        .filter(|m| m.ncols() > 0)
        .map(|m| detect_context(y, m, th))
        .transpose()?;
    let distribution = detect_distribution(y, ds.features(), th)?;
    let mut report = DiagnosticReport {
        n: ds.n(),
        thresholds: th.clone(),
        subjective,
        frame,
        trend,
        context,
        distribution,
        recommendations: Vec::new(),
    };
    report.recommendations = recommend(&report);
    Ok(report)
}

/// Candidate transforms for every flagged verdict, first mention wins.
pub fn recommend(report: &DiagnosticReport) -> Vec<Recommendation> {
    use TransformKind::*;
    let flagged = |v: &Option<Verdict>| v.as_ref().is_some_and(|v| v.flagged);
    let d = &report.distribution;
    let rules: [(bool, &str, &[TransformKind]); 7] = [
        (
            flagged(&report.subjective),
            "subjective",
            &[SubjectCenter, TrialMinmax],
        ),
        (flagged(&report.frame), "frame", &[Frame]),
        (flagged(&report.trend), "trend", &[Deflate]),
        (
            flagged(&report.context),
            "context",
            &[ExpectationNorm, RegressionNorm],
        ),
        (d.skewed, "skew", &[LogOffset, YeoJohnson, QuantileNormal]),
        (d.gapped, "gap", &[QuantileNormal, QuantileUniform]),
        (
            d.heteroscedastic,
            "heteroscedastic",
            &[LogOffset, Sqrt, BoxCox],
        ),
    ];
    let mut out: Vec<Recommendation> = Vec::new();
    for (on, reason, kinds) in rules {
        if !on {
            continue;
        }
        for &kind in kinds {
            if !out.iter().any(|r| r.kind == kind) {
                out.push(Recommendation {
                    kind,
                    reason: reason.to_string(),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keys(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn quiet(skewness: f64) -> DistributionVerdict {
        DistributionVerdict {
            flagged: false,
            skewed: false,
            gapped: false,
            heteroscedastic: false,
            skewness,
            gap_score: 0.01,
            heteroscedasticity_statistic: 0.0,
            heteroscedasticity_p_value: 1.0,
        }
    }

    fn report(distribution: DistributionVerdict) -> DiagnosticReport {
        DiagnosticReport {
            n: 100,
            thresholds: Thresholds::default(),
            subjective: None,
            frame: None,
            trend: None,
            context: None,
            distribution,
            recommendations: vec![],
        }
    }

    #[test]
    fn identical_groups_have_zero_f() {
        let y = [1.0, 2.0, 3.0, 1.0, 2.0, 3.0];
        let s = keys(&["a", "a", "a", "b", "b", "b"]);
        let v = detect_subjective(&y, &s, &Thresholds::default()).unwrap();
        assert_eq!(v.statistic, 0.0);
        assert!(!v.flagged);
        assert!((v.p_value.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn anova_matches_hand_computation() {
        // groups [1,2,3] and [4,5,6]: between 13.5 on 1 df, within 4 on 4 df → F = 13.5
        let y = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let s = keys(&["a", "a", "a", "b", "b", "b"]);
        let v = detect_subjective(&y, &s, &Thresholds::default()).unwrap();
        assert!((v.statistic - 13.5).abs() < 1e-12);
        // F(1,4) upper tail at 13.5 equals the two-sided t(4) tail at sqrt(13.5)
        assert!((v.p_value.unwrap() - 0.021_311_641_128_756_6).abs() < 1e-9);
    }

    #[test]
    fn single_subject_is_an_error() {
        let s = keys(&["a", "a", "a"]);
        assert!(detect_subjective(&[1.0, 2.0, 3.0], &s, &Thresholds::default()).is_err());
    }

    #[test]
    fn frame_degenerate_and_perfect() {
        let th = Thresholds::default();
        let r = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = r.iter().map(|v| 2.0 * v).collect();
        let v = detect_frame(&y, &r, &th).unwrap();
        assert!(v.flagged && (v.statistic - 1.0).abs() < 1e-15);
        let v = detect_frame(&y, &[3.0; 4], &th).unwrap();
        assert_eq!(v.statistic, 0.0);
        assert!(!v.flagged);
    }

    #[test]
    fn trend_sign_and_ties() {
        let th = Thresholds::default();
        let t = keys(&["2001", "1999", "2000", "2002"]);
        let y = [3.0, 1.0, 2.0, 4.0];
        assert!((spearman_time(&y, &t).unwrap() - 1.0).abs() < 1e-15);
        let rev: Vec<f64> = y.iter().map(|v| -v).collect();
        assert!((spearman_time(&rev, &t).unwrap() + 1.0).abs() < 1e-15);
        assert!(detect_trend(&rev, &t, &th).unwrap().flagged);
    }

    #[test]
    fn context_exact_and_singular() {
        let th = Thresholds::default();
        let phi =
            Matrix::from_columns(&[vec![1.0, 2.0, 3.0, 5.0], vec![0.0, 1.0, 0.0, 1.0]]).unwrap();
        let y: Vec<f64> = phi.rows_iter().map(|r| 1.0 + 2.0 * r[0] - r[1]).collect();
        let v = detect_context(&y, &phi, &th).unwrap();
        assert!(v.flagged && (v.statistic - 1.0).abs() < 1e-12);
        let dup =
            Matrix::from_columns(&[vec![1.0, 2.0, 3.0, 5.0], vec![2.0, 4.0, 6.0, 10.0]]).unwrap();
        let v = detect_context(&y, &dup, &th).unwrap();
        assert_eq!(v.statistic, 0.0);
        assert!(!v.flagged);
    }

    #[test]
    fn distribution_needs_twenty_rows() {
        let x = Matrix::zeros(5, 0);
        assert!(
            detect_distribution(&[1.0, 2.0, 3.0, 4.0, 9.0], &x, &Thresholds::default()).is_err()
        );
        let x = Matrix::zeros(30, 0);
        assert!(matches!(
            detect_distribution(&[4.0; 30], &x, &Thresholds::default()),
            Err(Error::DegenerateTarget(_))
        ));
    }

    #[test]
    fn uniform_grid_is_not_gapped() {
        let y: Vec<f64> = (1..=100).map(f64::from).collect();
        let v = detect_distribution(&y, &Matrix::zeros(100, 0), &Thresholds::default()).unwrap();
        assert_eq!(v.gap_score, 1.0 / 99.0);
        assert!(!v.gapped && !v.skewed && !v.flagged);
    }

    #[test]
    fn recommend_rules() {
        assert!(recommend(&report(quiet(0.0))).is_empty());

        let mut d = quiet(2.0);
        d.skewed = true;
        let r = recommend(&report(d.clone()));
        assert_eq!(r[0].kind, TransformKind::LogOffset);

        d.gapped = true;
        let r = recommend(&report(d));
        let qn = r
            .iter()
            .filter(|r| r.kind == TransformKind::QuantileNormal)
            .count();
        assert_eq!(qn, 1);
        let kinds: Vec<_> = r.iter().map(|r| r.kind).collect();
        assert_eq!(
            kinds,
            vec![
                TransformKind::LogOffset,
                TransformKind::YeoJohnson,
                TransformKind::QuantileNormal,
                TransformKind::QuantileUniform
            ]
        );
    }

    #[test]
    fn threshold_overrides() {
        let mut th = Thresholds::default();
        th.apply("skew=0.3").unwrap();
        assert_eq!(th.skew, 0.3);
        assert!(th.apply("nonsense=1").is_err());
        assert!(th.apply("gap").is_err());
        assert!(th.apply("gap=abc").is_err());
    }
}
