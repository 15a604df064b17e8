//! Regression error metrics on the original target scale.

use crate::error::{Error, Result};

fn check(actual: &[f64], predicted: &[f64], min_len: usize) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            expected: actual.len(),
            got: predicted.len(),
        });
    }
    if actual.len() < min_len {
        return Err(Error::InvalidInput(format!(
            "metric needs at least {min_len} values, got {}",
            actual.len()
        )));
    }
    Ok(())
}

/// Relative squared error Σ(y−ŷ)² / Σ(y−ȳ)².
pub fn rse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check(actual, predicted, 2)?;
    let m = actual.iter().sum::<f64>() / actual.len() as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for (y, p) in actual.iter().zip(predicted) {
        num += (y - p) * (y - p);
        den += (y - m) * (y - m);
    }
    if den == 0.0 {
        return Err(Error::ZeroDenominator("actual values are constant".into()));
    }
    Ok(num / den)
}

/// Symmetric mean absolute percentage error in percent. Pairs where both
/// values are zero count as zero error.
pub fn smape(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check(actual, predicted, 1)?;
    let total: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(y, p)| {
            let scale = (y.abs() + p.abs()) / 2.0;
            if scale == 0.0 {
                0.0
            } else {
                (y - p).abs() / scale
            }
        })
        .sum();
    Ok(total / actual.len() as f64 * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rse_examples() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(rse(&y, &y).unwrap(), 0.0);
        assert_eq!(rse(&y, &[2.0, 2.0, 2.0]).unwrap(), 1.0);
        assert_eq!(rse(&y, &[1.0, 2.0, 5.0]).unwrap(), 2.0);
        assert!(matches!(
            rse(&[4.0, 4.0], &[1.0, 2.0]),
            Err(Error::ZeroDenominator(_))
        ));
        assert!(rse(&[1.0], &[1.0]).is_err());
        assert!(rse(&y, &[1.0]).is_err());
    }

    #[test]
    fn smape_examples() {
        assert_eq!(smape(&[2.0, -3.0], &[2.0, -3.0]).unwrap(), 0.0);
        assert_eq!(smape(&[2.0], &[0.0]).unwrap(), 200.0);
        assert_eq!(smape(&[0.0], &[0.0]).unwrap(), 0.0);
        // |1-3| / 2 = 1 → 100%, averaged with an exact pair
        assert_eq!(smape(&[1.0, 5.0], &[3.0, 5.0]).unwrap(), 50.0);
    }
}
