//! Ridge and Lasso regression on standardized features.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{cholesky_solve, Matrix};

pub const LASSO_TOLERANCE: f64 = 1e-7;
pub const LASSO_MAX_SWEEPS: usize = 10_000;

/// Model identifiers. `Gbtr` and `Svr` are reserved so externally produced
/// results can share the report schema; they cannot be trained here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ridge,
    Lasso,
    Gbtr,
    Svr,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Ridge => "ridge",
            ModelKind::Lasso => "lasso",
            ModelKind::Gbtr => "gbtr",
            ModelKind::Svr => "svr",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Ridge => "Ridge",
            ModelKind::Lasso => "Lasso",
            ModelKind::Gbtr => "GBTR",
            ModelKind::Svr => "SVR",
        }
    }

    pub fn is_trainable(self) -> bool {
        matches!(self, ModelKind::Ridge | ModelKind::Lasso)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ridge" => Ok(ModelKind::Ridge),
            "lasso" => Ok(ModelKind::Lasso),
            "gbtr" => Ok(ModelKind::Gbtr),
            "svr" => Ok(ModelKind::Svr),
            _ => Err(Error::Config(format!("unknown model \"{s}\""))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub kind: ModelKind,
    pub alpha: f64,
    /// Coefficients on standardized features.
    pub coefficients: Vec<f64>,
    /// Mean of the training targets.
    pub intercept: f64,
    pub feature_means: Vec<f64>,
    /// Population standard deviations; 1 for constant features.
    pub feature_stds: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl LinearModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut s = self.intercept;
        for j in 0..self.coefficients.len() {
            s += self.coefficients[j] * (row[j] - self.feature_means[j]) / self.feature_stds[j];
        }
        s
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.rows_iter().map(|r| self.predict_row(r)).collect()
    }
}

struct Standardized {
    /// Column-major standardized features.
    columns: Vec<Vec<f64>>,
    means: Vec<f64>,
    stds: Vec<f64>,
    active: Vec<bool>,
    y_mean: f64,
    yc: Vec<f64>,
}

fn standardize(x: &Matrix, y: &[f64]) -> Result<Standardized> {
    let (n, d) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "linear model needs at least 2 rows, got {n}"
        )));
    }
    let nf = n as f64;
    let mut columns = Vec::with_capacity(d);
    let mut means = Vec::with_capacity(d);
    let mut stds = Vec::with_capacity(d);
    let mut active = Vec::with_capacity(d);
    for j in 0..d {
        let col = x.column(j);
        let m = col.iter().sum::<f64>() / nf;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / nf;
        let sd = var.sqrt();
        let scale = col.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let live = sd > 1e-12 * scale.max(f64::MIN_POSITIVE);
        let sd = if live { sd } else { 1.0 };
        columns.push(if live {
            col.iter().map(|v| (v - m) / sd).collect()
        } else {
            vec![0.0; n]
        });
        means.push(m);
        stds.push(sd);
        active.push(live);
    }
    let y_mean = y.iter().sum::<f64>() / nf;
    let yc = y.iter().map(|v| v - y_mean).collect();
    Ok(Standardized {
        columns,
        means,
        stds,
        active,
        y_mean,
        yc,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves (ZᵀZ + αI)β = Zᵀ(y − ȳ) on standardized features Z.
pub fn fit_ridge(x: &Matrix, y: &[f64], alpha: f64) -> Result<LinearModel> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!(
            "ridge alpha must be >= 0, got {alpha}"
        )));
    }
    let s = standardize(x, y)?;
    let idx: Vec<usize> = (0..s.columns.len()).filter(|&j| s.active[j]).collect();
    let p = idx.len();
    let mut a = vec![0.0; p * p];
    let mut b = vec![0.0; p];
    for (r, &i) in idx.iter().enumerate() {
        b[r] = dot(&s.columns[i], &s.yc);
        for (c, &j) in idx.iter().enumerate().skip(r) {
            let v = dot(&s.columns[i], &s.columns[j]);
            a[r * p + c] = v;
            a[c * p + r] = v;
        }
        a[r * p + r] += alpha;
    }
    let beta = if p == 0 {
        Vec::new()
    } else {
        cholesky_solve(&a, &b, p).ok_or_else(|| {
            Error::Singular(if alpha == 0.0 {
                "normal equations are singular; use alpha > 0".into()
            } else {
                "penalized normal equations are not positive definite".into()
            })
        })?
    };
    let mut coefficients = vec![0.0; s.columns.len()];
    for (r, &j) in idx.iter().enumerate() {
        coefficients[j] = beta[r];
    }
    Ok(LinearModel {
        kind: ModelKind::Ridge,
        alpha,
        coefficients,
        intercept: s.y_mean,
        feature_means: s.means,
        feature_stds: s.stds,
        converged: true,
        iterations: 1,
    })
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent on (1/2n)‖y − ȳ − Zβ‖² + α‖β‖₁.
pub fn fit_lasso(x: &Matrix, y: &[f64], alpha: f64) -> Result<LinearModel> {
    fit_lasso_traced(x, y, alpha).map(|(m, _)| m)
}

/// As [`fit_lasso`], also returning the objective after every sweep.
pub fn fit_lasso_traced(x: &Matrix, y: &[f64], alpha: f64) -> Result<(LinearModel, Vec<f64>)> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!(
            "lasso alpha must be > 0, got {alpha}"
        )));
    }
    let s = standardize(x, y)?;
    let n = s.yc.len() as f64;
    let d = s.columns.len();
    let sq: Vec<f64> = s.columns.iter().map(|c| dot(c, c) / n).collect();
    let mut beta = vec![0.0; d];
    let mut resid = s.yc.clone();
    let objective = |beta: &[f64], resid: &[f64]| {
        dot(resid, resid) / (2.0 * n) + alpha * beta.iter().map(|b| b.abs()).sum::<f64>()
    };
    let mut history = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < LASSO_MAX_SWEEPS {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..d {
            if !s.active[j] {
                continue;
            }
            let col = &s.columns[j];
            let old = beta[j];
            let rho = dot(col, &resid) / n + sq[j] * old;
            let new = soft_threshold(rho, alpha) / sq[j];
            if new != old {
                let delta = new - old;
                for (r, c) in resid.iter_mut().zip(col) {
                    *r -= delta * c;
                }
                beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        history.push(objective(&beta, &resid));
        if max_change < LASSO_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("lasso did not converge in {LASSO_MAX_SWEEPS} sweeps (alpha {alpha})");
    }
    Ok((
        LinearModel {
            kind: ModelKind::Lasso,
            alpha,
            coefficients: beta,
            intercept: s.y_mean,
            feature_means: s.means,
            feature_stds: s.stds,
            converged,
            iterations: sweeps,
        },
        history,
    ))
}

pub fn fit_model(kind: ModelKind, x: &Matrix, y: &[f64], alpha: f64) -> Result<LinearModel> {
    match kind {
        ModelKind::Ridge => fit_ridge(x, y, alpha),
        ModelKind::Lasso => fit_lasso(x, y, alpha),
        other => Err(Error::Config(format!(
            "model {other} is reserved for external results and cannot be trained here"
        ))),
    }
}
