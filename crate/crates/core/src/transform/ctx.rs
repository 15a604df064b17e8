//! Subject, trial, frame, deflation and context-model transforms. Each of
//! these needs per-row side information next to the target value.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{compare_time_keys, group_rows};
use crate::error::{Error, Result};
use crate::matrix::{ols, Matrix, OnCollinear};
use crate::stats::{mean, min_max, variance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectStats {
    pub means: BTreeMap<String, f64>,
    pub counts: BTreeMap<String, usize>,
    pub global_mean: f64,
}

impl SubjectStats {
    pub fn fit(y: &[f64], subject: &[String]) -> Result<Self> {
        check_lengths(y.len(), subject.len())?;
        if y.is_empty() {
            return Err(Error::InvalidInput("empty dataset".into()));
        }
        let mut means = BTreeMap::new();
        let mut counts = BTreeMap::new();
        for (key, rows) in group_rows(subject) {
            let vals: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
            means.insert(key.to_owned(), mean(&vals));
            counts.insert(key.to_owned(), rows.len());
        }
        Ok(Self {
            means,
            counts,
            global_mean: mean(y),
        })
    }

    /// Mean of `key`, or the global mean for subjects not seen at fit time.
    pub fn center(&self, key: &str) -> f64 {
        self.means.get(key).copied().unwrap_or(self.global_mean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRange {
    pub ranges: BTreeMap<String, (f64, f64)>,
    /// Range over all training rows; only used when clamping unseen trials.
    pub pooled: (f64, f64),
}

impl TrialRange {
    pub fn fit(y: &[f64], trial: &[String]) -> Result<Self> {
        check_lengths(y.len(), trial.len())?;
        if y.is_empty() {
            return Err(Error::InvalidInput("empty dataset".into()));
        }
        let mut ranges = BTreeMap::new();
        for (key, rows) in group_rows(trial) {
            let vals: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
            let (lo, hi) = min_max(&vals);
            if hi <= lo {
                return Err(Error::ConstantTrial(key.to_owned()));
            }
            ranges.insert(key.to_owned(), (lo, hi));
        }
        Ok(Self {
            ranges,
            pooled: min_max(y),
        })
    }

    pub fn range(&self, key: &str) -> Result<(f64, f64)> {
        self.ranges
            .get(key)
            .copied()
            .ok_or_else(|| Error::UnknownKey {
                role: "trial",
                key: key.to_owned(),
            })
    }
}

/// Price index series `z_t` with base period `t₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeflationIndex {
    pub series: BTreeMap<String, f64>,
    pub base_time: String,
}

impl DeflationIndex {
    pub fn new(series: BTreeMap<String, f64>, base_time: impl Into<String>) -> Result<Self> {
        let base_time = base_time.into();
        if let Some((k, v)) = series.iter().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "price index for \"{k}\" must be positive, got {v}"
            )));
        }
        if !series.contains_key(&base_time) {
            return Err(Error::UnknownKey {
                role: "time",
                key: base_time,
            });
        }
        Ok(Self { series, base_time })
    }

    /// Builds a series from paired (time, index) columns. Repeated keys must
    /// carry the same index value. The base period defaults to the latest key.
    pub fn from_pairs(times: &[String], values: &[f64], base_time: Option<&str>) -> Result<Self> {
        check_lengths(times.len(), values.len())?;
        let mut series = BTreeMap::new();
        for (t, &v) in times.iter().zip(values) {
            match series.insert(t.clone(), v) {
                Some(prev) if prev != v => {
                    return Err(Error::InvalidInput(format!(
                        "time \"{t}\" has conflicting price index values {prev} and {v}"
                    )))
                }
                _ => {}
            }
        }
        let base = match base_time {
            Some(b) => b.to_owned(),
            None => {
                latest_key(times).ok_or_else(|| Error::InvalidInput("empty price index".into()))?
            }
        };
        Self::new(series, base)
    }

    /// Reads a two-column `time_key,index_value` CSV with a header row.
    pub fn from_csv(path: impl AsRef<Path>, base_time: Option<&str>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(file);
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let (Some(t), Some(v)) = (rec.get(0), rec.get(1)) else {
                return Err(Error::InvalidInput(format!(
                    "price index row {row} needs two columns"
                )));
            };
            let v: f64 = v.parse().map_err(|_| {
                Error::InvalidInput(format!("price index row {row}: cannot parse \"{v}\""))
            })?;
            times.push(t.to_owned());
            values.push(v);
        }
        Self::from_pairs(&times, &values, base_time)
    }

    pub fn base_value(&self) -> f64 {
        self.series[&self.base_time]
    }

    pub fn value(&self, time: &str) -> Result<f64> {
        self.series
            .get(time)
            .copied()
            .ok_or_else(|| Error::UnknownKey {
                role: "time",
                key: time.to_owned(),
            })
    }
}

fn latest_key(times: &[String]) -> Option<String> {
    let cmp = compare_time_keys(times);
    times.iter().max_by(|a, b| cmp(a, b)).cloned()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextMode {
    ExpectationNorm,
    RegressionNorm,
}

/// Model of the conditional spread E[σ | φ] used by expectation normalisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaModel {
    Constant(f64),
    Linear {
        intercept: f64,
        coefficients: Vec<f64>,
        floor: f64,
    },
}

impl SigmaModel {
    pub fn at(&self, phi: &[f64]) -> f64 {
        match self {
            SigmaModel::Constant(s) => *s,
            SigmaModel::Linear {
                intercept,
                coefficients,
                floor,
            } => linear(*intercept, coefficients, phi).max(*floor),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub residual_sigma: SigmaModel,
    pub mode: ContextMode,
    /// Smallest admissible |prediction| for the ratio form; 0 for expectation-norm.
    pub denom_floor: f64,
}

/// sqrt(pi / 2).
const ABS_TO_SIGMA: f64 = 1.253_314_137_315_500_3;

fn linear(intercept: f64, coefficients: &[f64], phi: &[f64]) -> f64 {
    intercept
        + coefficients
            .iter()
            .zip(phi)
            .map(|(b, x)| b * x)
            .sum::<f64>()
}

impl ContextModel {
    fn check_context(y: &[f64], context: &Matrix) -> Result<()> {
        check_lengths(y.len(), context.nrows())?;
        let k = context.ncols();
        if k == 0 {
            return Err(Error::InvalidInput("no context columns".into()));
        }
        if y.len() <= k + 1 {
            return Err(Error::InvalidInput(format!(
                "context model with {k} columns needs more than {} rows, got {}",
                k + 1,
                y.len()
            )));
        }
        Ok(())
    }

    fn mean_fit(y: &[f64], context: &Matrix) -> Result<crate::matrix::OlsFit> {
        ols(context, y, OnCollinear::Fail).map_err(|e| match e {
            Error::Singular(_) => Error::CollinearContext,
            other => other,
        })
    }

    /// Standardises y against linear models of its conditional mean and of the
    /// conditional absolute residual.
    pub fn fit_expectation(y: &[f64], context: &Matrix) -> Result<Self> {
        Self::check_context(y, context)?;
        let mean_fit = Self::mean_fit(y, context)?;
        let residuals: Vec<f64> = context
            .rows_iter()
            .zip(y)
            .map(|(phi, yi)| yi - mean_fit.predict_row(phi))
            .collect();
        let resid_std = (residuals.iter().map(|r| r * r).sum::<f64>() / y.len() as f64).sqrt();
        let floor = (0.1 * resid_std)
            .max(1e-6 * variance(y).sqrt())
            .max(f64::MIN_POSITIVE);
        let abs_resid: Vec<f64> = residuals.iter().map(|r| r.abs()).collect();
        let sigma_fit = Self::mean_fit(&abs_resid, context)?;
        // E|e| = sigma * sqrt(2/pi) for normal errors; rescale so the model estimates sigma
        let c = ABS_TO_SIGMA;
        Ok(Self {
            intercept: mean_fit.intercept,
            coefficients: mean_fit.coefficients,
            residual_sigma: SigmaModel::Linear {
                intercept: c * sigma_fit.intercept,
                coefficients: sigma_fit.coefficients.iter().map(|b| c * b).collect(),
                floor,
            },
            mode: ContextMode::ExpectationNorm,
            denom_floor: 0.0,
        })
    }

    /// Divides y by its linear prediction from the context columns.
    pub fn fit_regression(y: &[f64], context: &Matrix) -> Result<Self> {
        Self::check_context(y, context)?;
        let fit = Self::mean_fit(y, context)?;
        let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let denom_floor = 1e-6 * if scale > 0.0 { scale } else { 1.0 };
        let resid: Vec<f64> = context
            .rows_iter()
            .zip(y)
            .map(|(phi, yi)| yi - fit.predict_row(phi))
            .collect();
        let model = Self {
            intercept: fit.intercept,
            coefficients: fit.coefficients,
            residual_sigma: SigmaModel::Constant(variance(&resid).sqrt()),
            mode: ContextMode::RegressionNorm,
            denom_floor,
        };
        for (i, phi) in context.rows_iter().enumerate() {
            let d = model.expected(phi);
            if d.abs() < denom_floor {
                return Err(Error::ZeroDenominator(format!(
                    "predicted value {d:e} at training row {i} is below the floor {denom_floor:e}"
                )));
            }
        }
        Ok(model)
    }

    pub fn expected(&self, phi: &[f64]) -> f64 {
        linear(self.intercept, &self.coefficients, phi)
    }

    /// Ratio denominator, pushed away from zero to the floor. Returns whether
    /// the floor was applied.
    pub(crate) fn denominator(&self, phi: &[f64]) -> (f64, bool) {
        let d = self.expected(phi);
        if d.abs() >= self.denom_floor {
            (d, false)
        } else {
            let s = if d < 0.0 { -1.0 } else { 1.0 };
            (s * self.denom_floor, true)
        }
    }
}

fn check_lengths(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::LengthMismatch { expected, got });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keys(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn subject_means_and_fallback() {
        let s = SubjectStats::fit(&[1.0, 3.0, 10.0], &keys(&["A", "A", "B"])).unwrap();
        assert_eq!(s.center("A"), 2.0);
        assert_eq!(s.center("B"), 10.0);
        assert_eq!(s.counts["A"], 2);
        assert!((s.global_mean - 14.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.center("C"), s.global_mean);
    }

    #[test]
    fn constant_trial_is_rejected() {
        let err = TrialRange::fit(&[3.0, 3.0], &keys(&["T1", "T1"])).unwrap_err();
        assert_eq!(err.to_string(), "constant trial \"T1\"");
    }

    #[test]
    fn deflation_index_validation() {
        let series: BTreeMap<String, f64> =
            [("2000".to_string(), 1.0), ("2001".to_string(), 1.1)].into();
        assert!(DeflationIndex::new(series.clone(), "1999").is_err());
        let idx = DeflationIndex::new(series, "2000").unwrap();
        assert_eq!(idx.base_value(), 1.0);
        assert!(idx.value("2002").is_err());
    }

    #[test]
    fn deflation_index_from_pairs_defaults_to_latest() {
        let idx =
            DeflationIndex::from_pairs(&keys(&["9", "10", "9"]), &[1.0, 1.2, 1.0], None).unwrap();
        assert_eq!(idx.base_time, "10");
        assert!(DeflationIndex::from_pairs(&keys(&["9", "9"]), &[1.0, 1.2], None).is_err());
    }

    #[test]
    fn constant_context_is_collinear() {
        let ctx = Matrix::from_columns(&[vec![2.0; 6]]).unwrap();
        let y = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert!(matches!(
            ContextModel::fit_expectation(&y, &ctx),
            Err(Error::CollinearContext)
        ));
        assert!(matches!(
            ContextModel::fit_regression(&y, &ctx),
            Err(Error::CollinearContext)
        ));
    }

    #[test]
    fn zero_prediction_at_fit_time() {
        let ctx = Matrix::from_columns(&[vec![1.0, 2.0, 3.0, 4.0]]).unwrap();
        let err = ContextModel::fit_regression(&[0.0, 1.0, 2.0, 3.0], &ctx).unwrap_err();
        assert!(err.to_string().contains("zero denominator"), "{err}");
    }
}
