//! Fitted, invertible target transformations.
//!
//! Every transform is fitted on training targets (plus side information for the
//! contextual kinds) and yields a [`FittedTransform`] holding both directions.
//! Models are trained on `forward(y)` and their predictions are mapped back
//! with `inverse` before scoring, so errors are measured on the original scale.

pub mod ctx;
pub mod dist;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Side};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::stats::min_max;

pub use ctx::{ContextMode, ContextModel, DeflationIndex, SigmaModel, SubjectStats, TrialRange};
pub use dist::{LogOffsetParams, PowerParams, QuantileMap, Reference};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    SubjectCenter,
    TrialMinmax,
    Frame,
    Deflate,
    ExpectationNorm,
    RegressionNorm,
    LogOffset,
    Sqrt,
    BoxCox,
    YeoJohnson,
    QuantileNormal,
    QuantileUniform,
    Identity,
}

/// Side information a transform kind reads for each row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideRole {
    None,
    Subject,
    Trial,
    Time,
    Frame,
    Context,
}

impl TransformKind {
    pub const ALL: [TransformKind; 13] = [
        TransformKind::SubjectCenter,
        TransformKind::TrialMinmax,
        TransformKind::Frame,
        TransformKind::Deflate,
        TransformKind::ExpectationNorm,
        TransformKind::RegressionNorm,
        TransformKind::LogOffset,
        TransformKind::Sqrt,
        TransformKind::BoxCox,
        TransformKind::YeoJohnson,
        TransformKind::QuantileNormal,
        TransformKind::QuantileUniform,
        TransformKind::Identity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TransformKind::SubjectCenter => "subject-center",
            TransformKind::TrialMinmax => "trial-minmax",
            TransformKind::Frame => "frame",
            TransformKind::Deflate => "deflate",
            TransformKind::ExpectationNorm => "expectation-norm",
            TransformKind::RegressionNorm => "regression-norm",
            TransformKind::LogOffset => "log-offset",
            TransformKind::Sqrt => "sqrt",
            TransformKind::BoxCox => "box-cox",
            TransformKind::YeoJohnson => "yeo-johnson",
            TransformKind::QuantileNormal => "quantile-normal",
            TransformKind::QuantileUniform => "quantile-uniform",
            TransformKind::Identity => "identity",
        }
    }

    /// Column heading used in benchmark tables.
    pub fn label(self) -> &'static str {
        match self {
            TransformKind::Identity => "Base",
            TransformKind::QuantileNormal => "QN",
            TransformKind::QuantileUniform => "QU",
            TransformKind::YeoJohnson => "YJ",
            TransformKind::LogOffset => "Ln",
            TransformKind::Sqrt => "Sqrt",
            TransformKind::BoxCox => "BC",
            TransformKind::SubjectCenter => "SC",
            TransformKind::TrialMinmax => "TMM",
            TransformKind::Frame => "Frame",
            TransformKind::Deflate => "Defl",
            TransformKind::ExpectationNorm => "EN",
            TransformKind::RegressionNorm => "RN",
        }
    }

    /// Monotone increasing maps of y alone.
    pub fn is_distributional(self) -> bool {
        matches!(
            self,
            TransformKind::LogOffset
                | TransformKind::Sqrt
                | TransformKind::BoxCox
                | TransformKind::YeoJohnson
                | TransformKind::QuantileNormal
                | TransformKind::QuantileUniform
        )
    }

    pub fn side_role(self) -> SideRole {
        match self {
            TransformKind::SubjectCenter => SideRole::Subject,
            TransformKind::TrialMinmax => SideRole::Trial,
            TransformKind::Deflate => SideRole::Time,
            TransformKind::Frame => SideRole::Frame,
            TransformKind::ExpectationNorm | TransformKind::RegressionNorm => SideRole::Context,
            _ => SideRole::None,
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let alias = match lower.as_str() {
            "base" | "none" => Some(TransformKind::Identity),
            "ln" | "log" => Some(TransformKind::LogOffset),
            "qn" => Some(TransformKind::QuantileNormal),
            "qu" => Some(TransformKind::QuantileUniform),
            "yj" => Some(TransformKind::YeoJohnson),
            "bc" | "boxcox" => Some(TransformKind::BoxCox),
            _ => None,
        };
        alias
            .or_else(|| TransformKind::ALL.into_iter().find(|k| k.name() == lower))
            .ok_or_else(|| Error::Config(format!("unknown transform \"{s}\"")))
    }
}

/// Learned parameters, tagged by transform kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum TransformParams {
    SubjectCenter(SubjectStats),
    TrialMinmax(TrialRange),
    Frame,
    Deflate(DeflationIndex),
    ExpectationNorm(ContextModel),
    RegressionNorm(ContextModel),
    LogOffset(LogOffsetParams),
    Sqrt,
    BoxCox(PowerParams),
    YeoJohnson(PowerParams),
    QuantileNormal(QuantileMap),
    QuantileUniform(QuantileMap),
    Identity,
}

impl TransformParams {
    pub fn kind(&self) -> TransformKind {
        match self {
            TransformParams::SubjectCenter(_) => TransformKind::SubjectCenter,
            TransformParams::TrialMinmax(_) => TransformKind::TrialMinmax,
            TransformParams::Frame => TransformKind::Frame,
            TransformParams::Deflate(_) => TransformKind::Deflate,
            TransformParams::ExpectationNorm(_) => TransformKind::ExpectationNorm,
            TransformParams::RegressionNorm(_) => TransformKind::RegressionNorm,
            TransformParams::LogOffset(_) => TransformKind::LogOffset,
            TransformParams::Sqrt => TransformKind::Sqrt,
            TransformParams::BoxCox(_) => TransformKind::BoxCox,
            TransformParams::YeoJohnson(_) => TransformKind::YeoJohnson,
            TransformParams::QuantileNormal(_) => TransformKind::QuantileNormal,
            TransformParams::QuantileUniform(_) => TransformKind::QuantileUniform,
            TransformParams::Identity => TransformKind::Identity,
        }
    }
}

/// A trained bijective pair (forward, inverse) with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedTransform {
    #[serde(flatten)]
    pub params: TransformParams,
    /// [min, max] of the targets seen at fit time.
    pub training_target_range: (f64, f64),
}

/// Result of an inverse that never fails on out-of-domain values.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampedInverse {
    pub values: Vec<f64>,
    /// Number of entries that had to be clamped.
    pub clamped: usize,
}

enum RowSide<'a> {
    None,
    Keys(&'a [String]),
    Values(&'a [f64]),
    Matrix(&'a Matrix),
}

impl FittedTransform {
    pub fn from_params(params: TransformParams, training_target_range: (f64, f64)) -> Self {
        Self {
            params,
            training_target_range,
        }
    }

    pub fn kind(&self) -> TransformKind {
        self.params.kind()
    }

    fn side<'a>(&self, side: Side<'a>, n: usize) -> Result<RowSide<'a>> {
        let role = self.kind().side_role();
        let got = match (role, side) {
            (SideRole::None, _) => return Ok(RowSide::None),
            (SideRole::Subject | SideRole::Trial | SideRole::Time, Side::Keys(k)) => {
                RowSide::Keys(k)
            }
            (SideRole::Frame, Side::Values(v)) => RowSide::Values(v),
            (SideRole::Context, Side::Matrix(m)) => RowSide::Matrix(m),
            _ => return Err(Error::MissingSide(side_name(role))),
        };
        let len = side.len().unwrap_or(0);
        if len != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: len,
            });
        }
        Ok(got)
    }

    /// Applies f elementwise.
    pub fn forward(&self, y: &[f64], side: Side<'_>) -> Result<Vec<f64>> {
        let rows = self.side(side, y.len())?;
        let mut out = Vec::with_capacity(y.len());
        for (i, &v) in y.iter().enumerate() {
            out.push(self.forward_one(i, v, &rows)?);
        }
        Ok(out)
    }

    /// Applies f⁻¹ elementwise. Quantile maps clamp out-of-range values to
    /// their extreme knots; other kinds report a domain error.
    pub fn inverse(&self, z: &[f64], side: Side<'_>) -> Result<Vec<f64>> {
        let rows = self.side(side, z.len())?;
        let mut out = Vec::with_capacity(z.len());
        for (i, &v) in z.iter().enumerate() {
            match self.inverse_one(i, v, &rows)? {
                Inverted::Exact(y) => out.push(y),
                Inverted::Clamped(y) => {
                    if !matches!(
                        self.params,
                        TransformParams::QuantileNormal(_) | TransformParams::QuantileUniform(_)
                    ) {
                        log::warn!(
                            "{}: value {v} at index {i} clamped on inversion",
                            self.kind()
                        );
                    }
                    out.push(y)
                }
                Inverted::OutOfDomain => {
                    return Err(Error::domain(
                        i,
                        format!("{v} is outside the inverse domain of {}", self.kind()),
                    ))
                }
            }
        }
        Ok(out)
    }

    /// Like [`inverse`](Self::inverse) but maps out-of-domain values to the
    /// nearest end of the training target range and counts them.
    pub fn inverse_clamped(&self, z: &[f64], side: Side<'_>) -> Result<ClampedInverse> {
        let rows = self.side(side, z.len())?;
        let (lo, hi) = self.training_target_range;
        let mut clamped = 0;
        let mut values = Vec::with_capacity(z.len());
        for (i, &v) in z.iter().enumerate() {
            let y = match self.inverse_one(i, v, &rows)? {
                Inverted::Exact(y) => y,
                Inverted::Clamped(y) => {
                    clamped += 1;
                    y
                }
                Inverted::OutOfDomain => {
                    clamped += 1;
                    let mid = self.forward_one(i, 0.5 * (lo + hi), &rows);
                    match mid {
                        Ok(m) if v < m => lo,
                        _ if v.is_nan() => 0.5 * (lo + hi),
                        _ => hi,
                    }
                }
            };
            values.push(y);
        }
        Ok(ClampedInverse { values, clamped })
    }

    fn forward_one(&self, i: usize, y: f64, rows: &RowSide<'_>) -> Result<f64> {
        let kind = self.kind();
        let out_of_domain =
            |what: &str| Error::domain(i, format!("{y} is outside the domain of {kind}: {what}"));
        Ok(match &self.params {
            TransformParams::Identity => y,
            TransformParams::LogOffset(p) => p
                .forward(y)
                .ok_or_else(|| out_of_domain(&format!("y + {} <= 0", p.offset)))?,
            TransformParams::Sqrt => {
                dist::sqrt_forward(y).ok_or_else(|| out_of_domain("negative value"))?
            }
            TransformParams::BoxCox(p) => dist::box_cox_forward(p, y)
                .ok_or_else(|| out_of_domain(&format!("y + {} <= 0", p.shift)))?,
            TransformParams::YeoJohnson(p) => dist::yeo_johnson_forward(p.lambda, y),
            TransformParams::QuantileNormal(q) | TransformParams::QuantileUniform(q) => {
                q.forward(y)
            }
            TransformParams::SubjectCenter(s) => y - s.center(key(rows, i)),
            TransformParams::TrialMinmax(t) => {
                let (lo, hi) = t.range(key(rows, i))?;
                (y - lo) / (hi - lo)
            }
            TransformParams::Frame => {
                let r = value(rows, i);
                if !(r > 0.0) {
                    return Err(Error::domain(i, format!("frame value {r} is not positive")));
                }
                y / r
            }
            TransformParams::Deflate(idx) => y * idx.base_value() / idx.value(key(rows, i))?,
            TransformParams::ExpectationNorm(m) => {
                let phi = context_row(rows, i);
                (y - m.expected(phi)) / m.residual_sigma.at(phi)
            }
            TransformParams::RegressionNorm(m) => {
                let (d, floored) = m.denominator(context_row(rows, i));
                if floored {
                    log::warn!("regression-norm: denominator at index {i} clamped to {d:e}");
                }
                y / d
            }
        })
    }

    fn inverse_one(&self, i: usize, z: f64, rows: &RowSide<'_>) -> Result<Inverted> {
        let exact = |v: Option<f64>| v.map_or(Inverted::OutOfDomain, Inverted::Exact);
        Ok(match &self.params {
            TransformParams::Identity => Inverted::Exact(z),
            TransformParams::LogOffset(p) => exact(p.inverse(z)),
            TransformParams::Sqrt => exact(dist::sqrt_inverse(z)),
            TransformParams::BoxCox(p) => exact(dist::box_cox_inverse(p, z)),
            TransformParams::YeoJohnson(p) => exact(dist::yeo_johnson_inverse(p.lambda, z)),
            TransformParams::QuantileNormal(q) | TransformParams::QuantileUniform(q) => {
                match q.inverse(z) {
                    (y, false) => Inverted::Exact(y),
                    (y, true) => Inverted::Clamped(y),
                }
            }
            TransformParams::SubjectCenter(s) => Inverted::Exact(z + s.center(key(rows, i))),
            TransformParams::TrialMinmax(t) => match t.range(key(rows, i)) {
                Ok((lo, hi)) => Inverted::Exact(z * (hi - lo) + lo),
                Err(e) => {
                    if let RowSide::Keys(_) = rows {
                        // unseen trial: fall back to the pooled training range
                        let (lo, hi) = t.pooled;
                        log::debug!("{e}; using pooled range");
                        Inverted::Clamped(z * (hi - lo) + lo)
                    } else {
                        return Err(e);
                    }
                }
            },
            TransformParams::Frame => {
                let r = value(rows, i);
                if !(r > 0.0) {
                    return Err(Error::domain(i, format!("frame value {r} is not positive")));
                }
                Inverted::Exact(z * r)
            }
            TransformParams::Deflate(idx) => {
                Inverted::Exact(z * idx.value(key(rows, i))? / idx.base_value())
            }
            TransformParams::ExpectationNorm(m) => {
                let phi = context_row(rows, i);
                Inverted::Exact(z * m.residual_sigma.at(phi) + m.expected(phi))
            }
            TransformParams::RegressionNorm(m) => match m.denominator(context_row(rows, i)) {
                (d, false) => Inverted::Exact(z * d),
                (d, true) => Inverted::Clamped(z * d),
            },
        })
    }

    /// Strict variant of [`inverse`](Self::inverse) for the trial kind: unseen
    /// trial keys are an error rather than a pooled-range fallback.
    pub fn inverse_strict(&self, z: &[f64], side: Side<'_>) -> Result<Vec<f64>> {
        if let (TransformParams::TrialMinmax(t), Side::Keys(keys)) = (&self.params, side) {
            for k in keys {
                t.range(k)?;
            }
        }
        self.inverse(z, side)
    }
}

enum Inverted {
    Exact(f64),
    Clamped(f64),
    OutOfDomain,
}

fn side_name(role: SideRole) -> &'static str {
    match role {
        SideRole::None => "no",
        SideRole::Subject => "subject",
        SideRole::Trial => "trial",
        SideRole::Time => "time",
        SideRole::Frame => "frame",
        SideRole::Context => "context",
    }
}

fn key<'a>(rows: &RowSide<'a>, i: usize) -> &'a str {
    match rows {
        RowSide::Keys(k) => &k[i],
        _ => unreachable!("side checked against kind"),
    }
}

fn value(rows: &RowSide<'_>, i: usize) -> f64 {
    match rows {
        RowSide::Values(v) => v[i],
        _ => unreachable!("side checked against kind"),
    }
}

fn context_row<'a>(rows: &RowSide<'a>, i: usize) -> &'a [f64] {
    match rows {
        RowSide::Matrix(m) => m.row(i),
        _ => unreachable!("side checked against kind"),
    }
}

fn check_nonempty(y: &[f64]) -> Result<(f64, f64)> {
    if y.is_empty() {
        return Err(Error::InvalidInput(
            "cannot fit a transform on zero targets".into(),
        ));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain(i, "non-finite target"));
    }
    Ok(min_max(y))
}

pub fn identity(y: &[f64]) -> Result<FittedTransform> {
    Ok(FittedTransform::from_params(
        TransformParams::Identity,
        check_nonempty(y)?,
    ))
}

pub fn fit_log_offset(y: &[f64]) -> Result<FittedTransform> {
    let range = check_nonempty(y)?;
    Ok(FittedTransform::from_params(
        TransformParams::LogOffset(LogOffsetParams::fit(y)),
        range,
    ))
}

pub fn fit_sqrt(y: &[f64]) -> Result<FittedTransform> {
    let range = check_nonempty(y)?;
    if let Some(i) = y.iter().position(|&v| v < 0.0) {
        return Err(Error::domain(
            i,
            format!("square root of negative value {}", y[i]),
        ));
    }
    Ok(FittedTransform::from_params(TransformParams::Sqrt, range))
}

pub fn fit_box_cox(y: &[f64]) -> Result<FittedTransform> {
    let range = check_nonempty(y)?;
    Ok(FittedTransform::from_params(
        TransformParams::BoxCox(dist::fit_box_cox_params(y)?),
        range,
    ))
}

pub fn fit_yeo_johnson(y: &[f64]) -> Result<FittedTransform> {
    let range = check_nonempty(y)?;
    Ok(FittedTransform::from_params(
        TransformParams::YeoJohnson(dist::fit_yeo_johnson_params(y)?),
        range,
    ))
}

pub fn fit_quantile(y: &[f64], reference: Reference) -> Result<FittedTransform> {
    let range = check_nonempty(y)?;
    let map = QuantileMap::fit(y, reference)?;
    let params = match reference {
        Reference::Normal => TransformParams::QuantileNormal(map),
        Reference::Uniform => TransformParams::QuantileUniform(map),
    };
    Ok(FittedTransform::from_params(params, range))
}

pub fn fit_subject_center(y: &[f64], subject: &[String]) -> Result<FittedTransform> {
    let range = check_nonempty(y)?;
    Ok(FittedTransform::from_params(
        TransformParams::SubjectCenter(SubjectStats::fit(y, subject)?),
        range,
    ))
}

pub fn fit_trial_minmax(y: &[f64], trial: &[String]) -> Result<FittedTransform> {
    let range = check_nonempty(y)?;
    Ok(FittedTransform::from_params(
        TransformParams::TrialMinmax(TrialRange::fit(y, trial)?),
        range,
    ))
}

pub fn fit_frame_normalize(y: &[f64], frame: &[f64]) -> Result<FittedTransform> {
    let range = check_nonempty(y)?;
    if frame.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            got: frame.len(),
        });
    }
    if let Some(i) = frame.iter().position(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::domain(
            i,
            format!("frame value {} is not positive", frame[i]),
        ));
    }
    Ok(FittedTransform::from_params(TransformParams::Frame, range))
}

pub fn fit_deflate(y: &[f64], time: &[String], index: &DeflationIndex) -> Result<FittedTransform> {
    let range = check_nonempty(y)?;
    if time.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            got: time.len(),
        });
    }
    for t in time {
        index.value(t)?;
    }
    Ok(FittedTransform::from_params(
        TransformParams::Deflate(index.clone()),
        range,
    ))
}

pub fn fit_expectation_normalize(y: &[f64], context: &Matrix) -> Result<FittedTransform> {
    let range = check_nonempty(y)?;
    Ok(FittedTransform::from_params(
        TransformParams::ExpectationNorm(ContextModel::fit_expectation(y, context)?),
        range,
    ))
}

pub fn fit_regression_normalize(y: &[f64], context: &Matrix) -> Result<FittedTransform> {
    let range = check_nonempty(y)?;
    Ok(FittedTransform::from_params(
        TransformParams::RegressionNorm(ContextModel::fit_regression(y, context)?),
        range,
    ))
}

/// The side information `kind` needs, taken from the dataset's role columns.
pub fn side_for(ds: &Dataset, kind: TransformKind) -> Result<Side<'_>> {
    let missing = || Error::MissingSide(side_name(kind.side_role()));
    Ok(match kind.side_role() {
        SideRole::None => Side::None,
        SideRole::Subject => Side::Keys(ds.subject().ok_or_else(missing)?),
        SideRole::Trial => Side::Keys(ds.trial().ok_or_else(missing)?),
        SideRole::Time => Side::Keys(ds.time().ok_or_else(missing)?),
        SideRole::Frame => Side::Values(ds.frame().ok_or_else(missing)?),
        SideRole::Context => Side::Matrix(ds.context().ok_or_else(missing)?),
    })
}

/// Deflation series from the dataset's own time and price index columns.
pub fn deflation_from_dataset(ds: &Dataset, base_time: Option<&str>) -> Result<DeflationIndex> {
    match (ds.time(), ds.price_index()) {
        (Some(t), Some(p)) => DeflationIndex::from_pairs(t, p, base_time),
        (None, _) => Err(Error::MissingSide("time")),
        (_, None) => Err(Error::MissingSide("price index")),
    }
}

/// Fits any kind from targets and the matching side information.
pub fn fit(
    kind: TransformKind,
    y: &[f64],
    side: Side<'_>,
    index: Option<&DeflationIndex>,
) -> Result<FittedTransform> {
    let missing = || Error::MissingSide(side_name(kind.side_role()));
    match kind {
        TransformKind::Identity => identity(y),
        TransformKind::LogOffset => fit_log_offset(y),
        TransformKind::Sqrt => fit_sqrt(y),
        TransformKind::BoxCox => fit_box_cox(y),
        TransformKind::YeoJohnson => fit_yeo_johnson(y),
        TransformKind::QuantileNormal => fit_quantile(y, Reference::Normal),
        TransformKind::QuantileUniform => fit_quantile(y, Reference::Uniform),
        TransformKind::SubjectCenter => match side {
            Side::Keys(k) => fit_subject_center(y, k),
            _ => Err(missing()),
        },
        TransformKind::TrialMinmax => match side {
            Side::Keys(k) => fit_trial_minmax(y, k),
            _ => Err(missing()),
        },
        TransformKind::Deflate => match (side, index) {
            (Side::Keys(k), Some(idx)) => fit_deflate(y, k, idx),
            (Side::Keys(_), None) => Err(Error::MissingSide("price index")),
            _ => Err(missing()),
        },
        TransformKind::Frame => match side {
            Side::Values(v) => fit_frame_normalize(y, v),
            _ => Err(missing()),
        },
        TransformKind::ExpectationNorm => match side {
            Side::Matrix(m) => fit_expectation_normalize(y, m),
            _ => Err(missing()),
        },
        TransformKind::RegressionNorm => match side {
            Side::Matrix(m) => fit_regression_normalize(y, m),
            _ => Err(missing()),
        },
    }
}

#[cfg(test)]
mod tests;
