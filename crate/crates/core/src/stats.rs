//! Descriptive statistics shared by the transforms and diagnostics.

use crate::error::{Error, Result};

pub fn mean(y: &[f64]) -> f64 {
    y.iter().sum::<f64>() / y.len() as f64
}

/// Population (biased) variance.
pub fn variance(y: &[f64]) -> f64 {
    let m = mean(y);
    y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / y.len() as f64
}

/// Sample standard deviation with `n − 1` in the denominator.
pub fn sample_std(y: &[f64]) -> f64 {
    let n = y.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(y);
    (y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64).sqrt()
}

/// Fisher-Pearson coefficient of skewness g₁ = m₃ / m₂^{3/2} (biased moments).
pub fn skewness(y: &[f64]) -> Result<f64> {
    if y.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "skewness needs at least 3 values, got {}",
            y.len()
        )));
    }
    let n = y.len() as f64;
    let m = mean(y);
    let (m2, m3) = y.iter().fold((0.0, 0.0), |(a, b), v| {
        let d = v - m;
        (a + d * d, b + d * d * d)
    });
    let (m2, m3) = (m2 / n, m3 / n);
    // relative guard: rounding noise in a constant column must not read as spread
    if m2 <= (f64::EPSILON * m.abs()).powi(2) * 16.0 || m2 == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(m3 / m2.powf(1.5))
}

/// Pearson correlation; `None` when either input is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    debug_assert_eq!(x.len(), y.len());
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Ranks starting at 1; tied values share their average rank.
pub fn average_ranks(y: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
    let mut ranks = vec![0.0; y.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && y[order[end]] == y[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Largest gap between consecutive distinct values relative to the range.
pub fn gap_score(y: &[f64]) -> Result<f64> {
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let (lo, hi) = match (sorted.first(), sorted.last()) {
        (Some(&lo), Some(&hi)) if hi > lo => (lo, hi),
        _ => {
            return Err(Error::DegenerateTarget(
                "constant target has no gaps".into(),
            ))
        }
    };
    let widest = sorted.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    Ok(widest / (hi - lo))
}

pub fn min_max(y: &[f64]) -> (f64, f64) {
    y.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_sample_has_zero_skew() {
        assert_eq!(skewness(&[-1.0, 0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn skewness_of_small_sample() {
        // mean 3, deviations [-2,-1,3]: m2 = 14/3, m3 = 18/3 = 6
        let g = skewness(&[1.0, 2.0, 6.0]).unwrap();
        assert!((g - 6.0 / (14.0f64 / 3.0).powf(1.5)).abs() < 1e-14);
    }

    #[test]
    fn constant_sample_has_zero_variance() {
        assert!(matches!(
            skewness(&[2.0, 2.0, 2.0]),
            Err(Error::ZeroVariance)
        ));
        assert!(matches!(skewness(&[0.1; 50]), Err(Error::ZeroVariance)));
    }

    #[test]
    fn uniform_grid_gap() {
        let y: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(gap_score(&y).unwrap(), 1.0 / 99.0);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(
            average_ranks(&[3.0, 1.0, 3.0, 2.0]),
            vec![3.5, 1.0, 3.5, 2.0]
        );
    }

    #[test]
    fn pearson_degenerate() {
        assert_eq!(pearson(&[1.0, 2.0], &[3.0, 3.0]), None);
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
    }
}
