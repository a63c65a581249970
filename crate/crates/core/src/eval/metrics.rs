use crate::Scalar;

use super::{EvalError, Result};

fn check<T>(a: &[T], b: &[T], min: usize) -> Result<()> {
    if a.len() != b.len() {
        return Err(EvalError::Length(a.len(), b.len()));
    }
    if a.len() < min {
        return Err(EvalError::Empty);
    }
    Ok(())
}

pub fn mse<T: Scalar>(y_true: &[T], y_pred: &[T]) -> Result<T> {
    check(y_true, y_pred, 1)?;
    let sum: T = y_true.iter().zip(y_pred).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok(sum / T::from_usize_lossy(y_true.len()))
}

/// Pearson correlation, computed on mean-centered values.
pub fn lcc<T: Scalar>(y_true: &[T], y_pred: &[T]) -> Result<T> {
    check(y_true, y_pred, 2)?;
    let n = T::from_usize_lossy(y_true.len());
    let ma = y_true.iter().copied().sum::<T>() / n;
    let mb = y_pred.iter().copied().sum::<T>() / n;
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in y_true.iter().zip(y_pred) {
        let (da, db) = (a - ma, b - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa <= T::zero() || sbb <= T::zero() {
        return Err(EvalError::UndefinedCorrelation);
    }
    let r = sab / (saa.sqrt() * sbb.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

/// 1-based ranks; tied values share the average of the ranks they span.
pub fn ranks<T: Scalar>(v: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).expect("finite values"));
    let mut out = vec![T::zero(); v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        let avg = T::from_usize_lossy(start + end + 1) / T::lit(2.0);
        for &i in &order[start..end] {
            out[i] = avg;
        }
        start = end;
    }
    out
}

/// Spearman correlation: Pearson correlation of average ranks.
pub fn srcc<T: Scalar>(y_true: &[T], y_pred: &[T]) -> Result<T> {
    check(y_true, y_pred, 2)?;
    if y_true.iter().chain(y_pred).any(|x| !x.is_finite()) {
        return Err(EvalError::Invalid("non-finite value".into()));
    }
    lcc(&ranks(y_true), &ranks(y_pred))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 1.0);
        let y = [0.1, 0.5, 0.9];
        let off: Vec<f64> = y.iter().map(|v| v + 0.25).collect();
        assert!((mse(&y, &off).unwrap() - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn lcc_examples() {
        let y = [0.1, 0.4, 0.35, 0.8];
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        let aff: Vec<f64> = y.iter().map(|v| 3.0 * v + 2.0).collect();
        assert!((lcc(&y, &y).unwrap() - 1.0).abs() < 1e-15);
        assert!((lcc(&y, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert!((lcc(&y, &aff).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_vector_is_undefined() {
        let err = lcc(&[0.5, 0.5, 0.5], &[0.1, 0.2, 0.3]).unwrap_err();
        assert!(err.to_string().contains("undefined correlation"));
        assert!(srcc(&[0.1, 0.2, 0.3], &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn srcc_examples() {
        assert!((srcc::<f64>(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap() + 0.5).abs() < 1e-15);
        // ranks [1.5, 1.5, 3] vs [1, 2, 3]: covariance 1.5, variances 1.5 and 2.
        let tied: f64 = srcc(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((tied - 1.5 / (1.5f64 * 2.0).sqrt()).abs() < 1e-15);
        assert!((tied - 0.866_025_403_784_438_6).abs() < 1e-15);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn works_in_f32() {
        let r: f32 = srcc(&[0.1f32, 0.2, 0.3], &[1.0, 4.0, 9.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn srcc_invariant_under_monotone_maps(v in prop::collection::vec(-10.0f64..10.0, 3..50), w in prop::collection::vec(-10.0f64..10.0, 3..50)) {
            let n = v.len().min(w.len());
            let (v, w) = (&v[..n], &w[..n]);
            if let Ok(base) = srcc(v, w) {
                let mapped: Vec<f64> = v.iter().map(|x| x.exp() * 2.0 + x.powi(3)).collect();
                let again = srcc(&mapped, w).unwrap();
                prop_assert!((base - again).abs() < 1e-12);
                prop_assert!((-1.0..=1.0).contains(&base));
            }
        }
    }
}
