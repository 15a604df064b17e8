//! Distributional target transforms: log with offset, square root, Box-Cox,
//! Yeo-Johnson and the empirical quantile maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{normal_cdf, normal_ppf};
use crate::stats::{min_max, variance};

pub const LAMBDA_BOUNDS: (f64, f64) = (-5.0, 5.0);
pub const DEFAULT_CLIP_EPSILON: f64 = 1e-7;
pub const MAX_QUANTILES: usize = 1000;
pub const MIN_QUANTILE_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogOffsetParams {
    pub offset: f64,
}

impl LogOffsetParams {
    /// offset = max(maxᵢ ⌈−yᵢ⌉, 1)
    pub fn fit(y: &[f64]) -> Self {
        let worst = y
            .iter()
            .map(|v| (-v).ceil())
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            offset: worst.max(1.0),
        }
    }

    pub(crate) fn forward(&self, y: f64) -> Option<f64> {
        let x = y + self.offset;
        (x > 0.0).then(|| x.ln())
    }

    pub(crate) fn inverse(&self, z: f64) -> Option<f64> {
        let y = z.exp() - self.offset;
        y.is_finite().then_some(y)
    }
}

pub(crate) fn sqrt_forward(y: f64) -> Option<f64> {
    (y >= 0.0).then(|| y.sqrt())
}

pub(crate) fn sqrt_inverse(z: f64) -> Option<f64> {
    (z >= 0.0).then_some(z * z)
}

/// Fitted power-transform parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerParams {
    pub lambda: f64,
    /// Positivity shift added before a Box-Cox transform; always 0 for Yeo-Johnson.
    pub shift: f64,
    pub log_likelihood: f64,
}

impl PowerParams {
    /// Parameters with a fixed λ and no likelihood information.
    pub fn fixed(lambda: f64) -> Self {
        Self {
            lambda,
            shift: 0.0,
            log_likelihood: f64::NAN,
        }
    }
}

const LAMBDA_ZERO: f64 = 1e-12;

/// ((x^λ − 1)/λ, or ln x at λ = 0) for x > 0.
fn power_forward(x: f64, lambda: f64) -> f64 {
    let lx = x.ln();
    if lambda.abs() < LAMBDA_ZERO {
        lx
    } else {
        (lambda * lx).exp_m1() / lambda
    }
}

/// Inverse of [`power_forward`]; `None` when 1 + λz ≤ 0.
fn power_inverse(z: f64, lambda: f64) -> Option<f64> {
    if lambda.abs() < LAMBDA_ZERO {
        return Some(z.exp());
    }
    let t = lambda * z;
    (t > -1.0).then(|| (t.ln_1p() / lambda).exp())
}

pub(crate) fn box_cox_forward(p: &PowerParams, y: f64) -> Option<f64> {
    let x = y + p.shift;
    (x > 0.0).then(|| power_forward(x, p.lambda))
}

pub(crate) fn box_cox_inverse(p: &PowerParams, z: f64) -> Option<f64> {
    power_inverse(z, p.lambda)
        .map(|x| x - p.shift)
        .filter(|v| v.is_finite())
}

pub(crate) fn yeo_johnson_forward(lambda: f64, y: f64) -> f64 {
    if y >= 0.0 {
        if lambda.abs() < LAMBDA_ZERO {
            y.ln_1p()
        } else {
            (lambda * y.ln_1p()).exp_m1() / lambda
        }
    } else {
        let mu = 2.0 - lambda;
        if mu.abs() < LAMBDA_ZERO {
            -(-y).ln_1p()
        } else {
            -(mu * (-y).ln_1p()).exp_m1() / mu
        }
    }
}

pub(crate) fn yeo_johnson_inverse(lambda: f64, z: f64) -> Option<f64> {
    let y = if z >= 0.0 {
        if lambda.abs() < LAMBDA_ZERO {
            z.exp_m1()
        } else {
            let t = lambda * z;
            if t <= -1.0 {
                return None;
            }
            (t.ln_1p() / lambda).exp_m1()
        }
    } else {
        let mu = 2.0 - lambda;
        if mu.abs() < LAMBDA_ZERO {
            -(-z).exp_m1()
        } else {
            let t = -mu * z;
            if t <= -1.0 {
                return None;
            }
            -(t.ln_1p() / mu).exp_m1()
        }
    };
    y.is_finite().then_some(y)
}

fn profile_log_likelihood(transformed: &[f64], jacobian_term: f64) -> f64 {
    let n = transformed.len() as f64;
    let var = variance(transformed);
    let ll = -0.5 * n * var.ln() + jacobian_term;
    if ll.is_finite() {
        ll
    } else {
        f64::NEG_INFINITY
    }
}

/// Box-Cox profile log-likelihood of already shifted, strictly positive data.
pub fn box_cox_log_likelihood(x: &[f64], lambda: f64) -> f64 {
    let transformed: Vec<f64> = x.iter().map(|&v| power_forward(v, lambda)).collect();
    let log_sum: f64 = x.iter().map(|v| v.ln()).sum();
    profile_log_likelihood(&transformed, (lambda - 1.0) * log_sum)
}

pub fn yeo_johnson_log_likelihood(y: &[f64], lambda: f64) -> f64 {
    let transformed: Vec<f64> = y.iter().map(|&v| yeo_johnson_forward(lambda, v)).collect();
    let log_sum: f64 = y.iter().map(|v| v.signum() * v.abs().ln_1p()).sum();
    profile_log_likelihood(&transformed, (lambda - 1.0) * log_sum)
}

/// Maximises a scalar function of λ over [`LAMBDA_BOUNDS`]: a 101-point grid
/// locates the basin, golden-section search refines it.
pub(crate) fn maximize_lambda(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let (lo, hi) = LAMBDA_BOUNDS;
    let steps = 100;
    let width = (hi - lo) / steps as f64;
    let (mut best_lambda, mut best_ll) = (lo, f64::NEG_INFINITY);
    for k in 0..=steps {
        let lambda = lo + width * k as f64;
        let ll = f(lambda);
        if ll > best_ll {
            best_lambda = lambda;
            best_ll = ll;
        }
    }
    if !best_ll.is_finite() {
        return (best_lambda, best_ll);
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = (best_lambda - width).max(lo);
    let mut b = (best_lambda + width).min(hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-10 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let refined = 0.5 * (a + b);
    let refined_ll = f(refined);
    if refined_ll >= best_ll {
        (refined, refined_ll)
    } else {
        (best_lambda, best_ll)
    }
}

fn check_power_input(y: &[f64]) -> Result<(f64, f64)> {
    if y.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "power transform needs at least 2 values, got {}",
            y.len()
        )));
    }
    let (lo, hi) = min_max(y);
    if hi <= lo {
        return Err(Error::DegenerateTarget(
            "constant target, likelihood undefined".into(),
        ));
    }
    Ok((lo, hi))
}

pub fn fit_box_cox_params(y: &[f64]) -> Result<PowerParams> {
    let (lo, hi) = check_power_input(y)?;
    let floor = 1e-6 * (hi - lo);
    let shift = if lo >= floor { 0.0 } else { floor - lo };
    let x: Vec<f64> = y.iter().map(|v| v + shift).collect();
    let (lambda, log_likelihood) = maximize_lambda(|l| box_cox_log_likelihood(&x, l));
    Ok(PowerParams {
        lambda,
        shift,
        log_likelihood,
    })
}

pub fn fit_yeo_johnson_params(y: &[f64]) -> Result<PowerParams> {
    check_power_input(y)?;
    let (lambda, log_likelihood) = maximize_lambda(|l| yeo_johnson_log_likelihood(y, l));
    Ok(PowerParams {
        lambda,
        shift: 0.0,
        log_likelihood,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    Normal,
    Uniform,
}

/// Piecewise-linear empirical CDF over equally spaced probability knots.
///
/// Forward maps y to p ∈ [0, 1] by interpolating between knots, squeezes p
/// affinely into [ε, 1 − ε] and then applies the reference quantile function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileMap {
    pub quantile_knots: Vec<f64>,
    pub reference: Reference,
    pub clip_epsilon: f64,
}

impl QuantileMap {
    pub fn fit(y: &[f64], reference: Reference) -> Result<Self> {
        let n = y.len();
        if n < MIN_QUANTILE_SAMPLES {
            return Err(Error::TooFewSamples(n));
        }
        let mut sorted = y.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = n.min(MAX_QUANTILES);
        let knots = (0..q)
            .map(|k| {
                // linear interpolation between order statistics
                let pos = k as f64 * (n - 1) as f64 / (q - 1) as f64;
                let i = (pos.floor() as usize).min(n - 2);
                let frac = pos - i as f64;
                sorted[i] + frac * (sorted[i + 1] - sorted[i])
            })
            .collect();
        Ok(Self {
            quantile_knots: knots,
            reference,
            clip_epsilon: DEFAULT_CLIP_EPSILON,
        })
    }

    fn last(&self) -> usize {
        self.quantile_knots.len() - 1
    }

    /// Empirical CDF position in [0, 1]; ties resolve to the middle of their plateau.
    fn cdf(&self, y: f64) -> f64 {
        let k = &self.quantile_knots;
        let last = self.last();
        if y < k[0] {
            return 0.0;
        }
        if y > k[last] {
            return 1.0;
        }
        let right = k.partition_point(|&v| v <= y) - 1;
        let left = k.partition_point(|&v| v < y);
        let pos = if k[left] == y {
            0.5 * (left + right) as f64
        } else {
            right as f64 + (y - k[right]) / (k[right + 1] - k[right])
        };
        pos / last as f64
    }

    fn quantile(&self, p: f64) -> f64 {
        let k = &self.quantile_knots;
        let last = self.last();
        let pos = p.clamp(0.0, 1.0) * last as f64;
        let i = (pos.floor() as usize).min(last - 1);
        let frac = pos - i as f64;
        if frac == 0.0 {
            k[i]
        } else if frac == 1.0 {
            k[i + 1]
        } else {
            k[i] + frac * (k[i + 1] - k[i])
        }
    }

    fn squeeze(&self, p: f64) -> f64 {
        self.clip_epsilon + (1.0 - 2.0 * self.clip_epsilon) * p
    }

    fn unsqueeze(&self, p: f64) -> f64 {
        (p - self.clip_epsilon) / (1.0 - 2.0 * self.clip_epsilon)
    }

    pub(crate) fn forward(&self, y: f64) -> f64 {
        let p = self.squeeze(self.cdf(y));
        match self.reference {
            Reference::Uniform => p,
            Reference::Normal => normal_ppf(p).expect("squeezed probability lies in (0, 1)"),
        }
    }

    /// Inverse map; values beyond the image of the training range clamp to the
    /// extreme knots. The flag reports whether clamping happened.
    pub(crate) fn inverse(&self, z: f64) -> (f64, bool) {
        let eps = self.clip_epsilon;
        let p = match self.reference {
            Reference::Uniform => z,
            Reference::Normal => normal_cdf(z),
        };
        let (lo_z, hi_z) = self.image_bounds();
        let tol = 1e-9 * z.abs().max(1.0);
        let clamped = z < lo_z - tol || z > hi_z + tol || z.is_nan();
        let p = if p.is_nan() {
            0.5
        } else {
            p.clamp(eps, 1.0 - eps)
        };
        (self.quantile(self.unsqueeze(p)), clamped)
    }

    /// Forward images of the training minimum and maximum.
    pub fn image_bounds(&self) -> (f64, f64) {
        let eps = self.clip_epsilon;
        match self.reference {
            Reference::Uniform => (eps, 1.0 - eps),
            Reference::Normal => (
                normal_ppf(eps).expect("eps in (0, 0.5)"),
                normal_ppf(1.0 - eps).expect("eps in (0, 0.5)"),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_offset_rule() {
        assert_eq!(LogOffsetParams::fit(&[0.5, 2.0, 10.0]).offset, 1.0);
        assert_eq!(LogOffsetParams::fit(&[-2.3, 1.0]).offset, 3.0);
        assert_eq!(LogOffsetParams::fit(&[-3.0]).offset, 3.0);
        let p = LogOffsetParams { offset: 1.0 };
        assert_eq!(p.forward(0.0), Some(0.0));
        assert!((p.forward(0.5).unwrap() - 0.405_465_108_108_164_4).abs() < 1e-15);
        assert_eq!(p.forward(-2.0), None);
        assert_eq!(p.inverse(0.0), Some(0.0));
    }

    #[test]
    fn yeo_johnson_fixed_lambda_branches() {
        assert!((yeo_johnson_forward(1.0, 3.0) - 3.0).abs() < 1e-15);
        assert!((yeo_johnson_forward(0.0, std::f64::consts::E - 1.0) - 1.0).abs() < 1e-15);
        // λ = 1 is the identity on both sides
        assert!((yeo_johnson_forward(1.0, -2.5) + 2.5).abs() < 1e-15);
        // λ = 2 on the negative branch is −ln(1 − y)
        assert!((yeo_johnson_forward(2.0, -1.0) + 2f64.ln()).abs() < 1e-15);
        for &lambda in &[-3.0, -0.5, 0.0, 0.7, 2.0, 4.5] {
            for &y in &[-5.0, -0.3, 0.0, 0.2, 7.0] {
                let z = yeo_johnson_forward(lambda, y);
                let back = yeo_johnson_inverse(lambda, z).unwrap();
                assert!((back - y).abs() < 1e-12, "λ={lambda} y={y} back={back}");
            }
        }
    }

    #[test]
    fn yeo_johnson_inverse_domain() {
        // λ < 0 bounds the positive branch above by −1/λ
        assert_eq!(yeo_johnson_inverse(-0.5, 2.5), None);
        // λ > 2 bounds the negative branch below by −1/(λ − 2)
        assert_eq!(yeo_johnson_inverse(3.0, -1.5), None);
    }

    #[test]
    fn box_cox_at_lambda_one_is_shifted_identity() {
        let p = PowerParams {
            lambda: 1.0,
            shift: 0.25,
            log_likelihood: 0.0,
        };
        let z = box_cox_forward(&p, 3.0).unwrap();
        assert!((z - (3.0 + 0.25 - 1.0)).abs() < 1e-15);
        assert_eq!(box_cox_forward(&p, -1.0), None);
    }

    #[test]
    fn box_cox_likelihood_reference() {
        // same value as scipy.stats.boxcox_llf(1.0, [0.1, ..., 0.7])
        let x = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7];
        assert!((box_cox_log_likelihood(&x, 1.0) - 11.266_065_387_038_703).abs() < 1e-10);
    }

    #[test]
    fn box_cox_shift_only_when_needed() {
        let p = fit_box_cox_params(&[1.0, 2.0, 5.0]).unwrap();
        assert_eq!(p.shift, 0.0);
        let p = fit_box_cox_params(&[-1.0, 0.0, 3.0]).unwrap();
        assert!((p.shift - (1.0 + 4e-6)).abs() < 1e-15);
        assert!(matches!(
            fit_box_cox_params(&[2.0, 2.0, 2.0]),
            Err(Error::DegenerateTarget(_))
        ));
    }

    #[test]
    fn quantile_uniform_extremes() {
        let y: Vec<f64> = (1..=100).map(f64::from).collect();
        let q = QuantileMap::fit(&y, Reference::Uniform).unwrap();
        assert_eq!(q.quantile_knots.len(), 100);
        assert!((q.forward(1.0) - DEFAULT_CLIP_EPSILON).abs() < 1e-18);
        assert!((q.forward(100.0) - (1.0 - DEFAULT_CLIP_EPSILON)).abs() < 1e-15);
        assert!((q.forward(50.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quantile_ties_round_trip() {
        let mut y: Vec<f64> = (0..20).map(f64::from).collect();
        y.extend([5.0; 10]);
        let q = QuantileMap::fit(&y, Reference::Normal).unwrap();
        let z = q.forward(5.0);
        assert_eq!(q.inverse(z).0, 5.0);
        assert!(q.forward(4.0) < z && z < q.forward(6.0));
    }

    #[test]
    fn quantile_too_few_samples() {
        assert!(matches!(
            QuantileMap::fit(&[1.0; 9], Reference::Normal),
            Err(Error::TooFewSamples(9))
        ));
    }
}
