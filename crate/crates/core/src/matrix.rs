//! Dense row-major matrix and the small amount of linear algebra the
//! regressors and context models need.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from equally long rows. An empty slice gives a 0×0 matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::LengthMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        let cols = columns.len();
        let mut m = Self::zeros(rows, cols);
        for (j, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(Error::LengthMismatch {
                    expected: rows,
                    got: col.len(),
                });
            }
            for (i, &v) in col.iter().enumerate() {
                m.data[i * cols + j] = v;
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn select_columns(&self, columns: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * columns.len());
        for i in 0..self.rows {
            let row = self.row(i);
            data.extend(columns.iter().map(|&j| row[j]));
        }
        Matrix {
            rows: self.rows,
            cols: columns.len(),
            data,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Solves `a · x = b` for a symmetric positive definite `a` (row-major, p×p).
/// Returns `None` when a pivot is not safely positive.
pub(crate) fn cholesky_solve(a: &[f64], b: &[f64], p: usize) -> Option<Vec<f64>> {
    let scale = (0..p).map(|i| a[i * p + i].abs()).fold(0.0, f64::max);
    let tol = 1e-13 * scale.max(f64::MIN_POSITIVE);
    let mut l = vec![0.0; p * p];
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d -= l[j * p + k] * l[j * p + k];
        }
        if !(d > tol) {
            return None;
        }
        let djj = d.sqrt();
        l[j * p + j] = djj;
        for i in j + 1..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            l[i * p + j] = s / djj;
        }
    }
    // forward then backward substitution
    let mut z = vec![0.0; p];
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * p + k] * z[k];
        }
        z[i] = s / l[i * p + i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = z[i];
        for k in i + 1..p {
            s -= l[k * p + i] * x[k];
        }
        x[i] = s / l[i * p + i];
    }
    Some(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum OnCollinear {
    Fail,
    /// Zero out columns that are (numerically) linear combinations of earlier ones.
    Drop,
}

/// Ordinary least squares with an unpenalised intercept.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct OlsFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// `false` for columns dropped as collinear or constant.
    pub active: Vec<bool>,
}

impl OlsFit {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept
            + row
                .iter()
                .zip(&self.coefficients)
                .map(|(x, b)| x * b)
                .sum::<f64>()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.rows_iter().map(|r| self.predict_row(r)).collect()
    }

    pub fn rank(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

const COLLINEAR_TOL: f64 = 1e-10;

pub(crate) fn ols(x: &Matrix, y: &[f64], mode: OnCollinear) -> Result<OlsFit> {
    let n = x.nrows();
    let d = x.ncols();
    if y.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidInput("least squares on zero rows".into()));
    }
    let nf = n as f64;
    let y_mean = y.iter().sum::<f64>() / nf;
    let means: Vec<f64> = (0..d)
        .map(|j| x.rows_iter().map(|r| r[j]).sum::<f64>() / nf)
        .collect();
    // centred columns scaled to unit norm
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut norms = Vec::with_capacity(d);
    for j in 0..d {
        let c: Vec<f64> = x.rows_iter().map(|r| r[j] - means[j]).collect();
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let magnitude = x.rows_iter().map(|r| r[j].abs()).fold(0.0, f64::max);
        norms.push(norm);
        if norm <= 1e-12 * magnitude.max(1e-300) * nf.sqrt() || norm == 0.0 {
            cols.push(Vec::new());
        } else {
            cols.push(c.into_iter().map(|v| v / norm).collect());
        }
    }

    // Incremental Cholesky over the Gram matrix, skipping dependent columns.
    let mut active = vec![false; d];
    let mut order: Vec<usize> = Vec::new();
    let mut l: Vec<Vec<f64>> = Vec::new();
    for j in 0..d {
        if cols[j].is_empty() {
            if mode == OnCollinear::Fail {
                return Err(Error::Singular(format!("column {j} is constant")));
            }
            continue;
        }
        let g: Vec<f64> = order.iter().map(|&k| dot(&cols[k], &cols[j])).collect();
        let mut row = vec![0.0; order.len() + 1];
        for (a, _) in order.iter().enumerate() {
            let mut s = g[a];
            for b in 0..a {
                s -= row[b] * l[a][b];
            }
            row[a] = s / l[a][a];
        }
        let diag = 1.0 - row[..order.len()].iter().map(|v| v * v).sum::<f64>();
        if diag <= COLLINEAR_TOL {
            if mode == OnCollinear::Fail {
                return Err(Error::Singular(format!(
                    "column {j} is a linear combination of earlier columns"
                )));
            }
            continue;
        }
        row[order.len()] = diag.sqrt();
        l.push(row);
        order.push(j);
        active[j] = true;
    }

    let p = order.len();
    let rhs: Vec<f64> = order
        .iter()
        .map(|&k| {
            cols[k]
                .iter()
                .zip(y)
                .map(|(c, yi)| c * (yi - y_mean))
                .sum::<f64>()
        })
        .collect();
    let mut z = vec![0.0; p];
    for i in 0..p {
        let mut s = rhs[i];
        for k in 0..i {
            s -= l[i][k] * z[k];
        }
        z[i] = s / l[i][i];
    }
    let mut gamma = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = z[i];
        for k in i + 1..p {
            s -= l[k][i] * gamma[k];
        }
        gamma[i] = s / l[i][i];
    }

    let mut coefficients = vec![0.0; d];
    for (a, &j) in order.iter().enumerate() {
        coefficients[j] = gamma[a] / norms[j];
    }
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&means)
            .map(|(b, m)| b * m)
            .sum::<f64>();
    Ok(OlsFit {
        intercept,
        coefficients,
        active,
    })
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
