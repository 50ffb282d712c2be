//! Five-number summaries and two-predictor least squares.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Min, quartiles and max of a sample. Whiskers are the sample extremes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub count: usize,
}

/// Quantile by linear interpolation between order statistics at rank
/// `p (n − 1)` (the inclusive definition). `sorted` must be ascending and
/// non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

impl BoxStats {
    /// `None` for an empty sample; NaN values are skipped.
    pub fn from_values<I: IntoIterator<Item = f64>>(values: I) -> Option<Self> {
        let mut v: Vec<f64> = values.into_iter().filter(|x| !x.is_nan()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(|a, b| a.total_cmp(b));
        Some(Self {
            min: v[0],
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
            count: v.len(),
        })
    }
}

/// `y ≈ intercept + b1 x1 + b2 x2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit2 {
    pub intercept: f64,
    pub b1: f64,
    pub b2: f64,
    pub r_squared: f64,
}

/// Ordinary least squares with two predictors, solved on centred data.
///
/// A constant response yields zero slopes and R² = 0.
pub fn least_squares_2(x1: &[f64], x2: &[f64], y: &[f64]) -> Result<LinearFit2> {
    let n = y.len();
    if x1.len() != n || x2.len() != n {
        return Err(Error::Fit("predictor and response lengths differ".into()));
    }
    if n < 3 {
        return Err(Error::Fit(format!("need at least 3 observations, got {n}")));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (m1, m2, my) = (mean(x1), mean(x2), mean(y));

    let (mut s11, mut s22, mut s12, mut s1y, mut s2y, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let (a, b, c) = (x1[i] - m1, x2[i] - m2, y[i] - my);
        s11 += a * a;
        s22 += b * b;
        s12 += a * b;
        s1y += a * c;
        s2y += b * c;
        syy += c * c;
    }
    let det = s11 * s22 - s12 * s12;
    if !(det > 1e-12 * (s11 * s22).max(f64::MIN_POSITIVE)) || s11 == 0.0 || s22 == 0.0 {
        return Err(Error::Fit("predictors are rank deficient".into()));
    }
    let b1 = (s22 * s1y - s12 * s2y) / det;
    let b2 = (s11 * s2y - s12 * s1y) / det;
    let intercept = my - b1 * m1 - b2 * m2;

    let r_squared = if syy == 0.0 {
        0.0
    } else {
        let sse: f64 = (0..n)
            .map(|i| {
                let e = y[i] - intercept - b1 * x1[i] - b2 * x2[i];
                e * e
            })
            .sum();
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    Ok(LinearFit2 {
        intercept,
        b1,
        b2,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn five_number_summary() {
        let s = BoxStats::from_values([3.0, 1.0, 5.0, 2.0, 4.0]).unwrap();
        assert_eq!(
            (s.min, s.q1, s.median, s.q3, s.max, s.count),
            (1.0, 2.0, 3.0, 4.0, 5.0, 5)
        );
    }

    #[test]
    fn interpolated_quartiles() {
        // ranks 0.75, 1.5, 2.25 over [1, 2, 3, 4]
        let s = BoxStats::from_values([1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(s.q1, 1.75);
        assert_abs_diff_eq!(s.median, 2.5);
        assert_abs_diff_eq!(s.q3, 3.25);
    }

    #[test]
    fn all_zero_and_empty() {
        let s = BoxStats::from_values([0.0; 7]).unwrap();
        assert_eq!(
            (s.min, s.q1, s.median, s.q3, s.max),
            (0.0, 0.0, 0.0, 0.0, 0.0)
        );
        assert!(BoxStats::from_values(std::iter::empty()).is_none());
        assert!(BoxStats::from_values([f64::NAN]).is_none());
    }

    #[test]
    fn exact_plane_is_recovered() {
        let mut x1 = vec![];
        let mut x2 = vec![];
        let mut y = vec![];
        for r in [0.05, 0.15, 0.3, 0.45, 0.6] {
            for i in 1..=16 {
                let d = i as f64 * 0.025;
                x1.push(r);
                x2.push(d);
                y.push(0.1 + 0.2 * r + 0.5 * d);
            }
        }
        let fit = least_squares_2(&x1, &x2, &y).unwrap();
        assert_abs_diff_eq!(fit.intercept, 0.1, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.b1, 0.2, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.b2, 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_response() {
        let fit = least_squares_2(&[0.0, 1.0, 0.0, 1.0], &[0.0, 0.0, 1.0, 1.0], &[2.0; 4]).unwrap();
        assert_eq!((fit.b1, fit.b2, fit.r_squared), (0.0, 0.0, 0.0));
        assert_abs_diff_eq!(fit.intercept, 2.0);
    }

    #[test]
    fn rank_deficient_predictors() {
        let x1 = [1.0, 2.0, 3.0, 4.0];
        let x2 = [2.0, 4.0, 6.0, 8.0];
        assert!(least_squares_2(&x1, &x2, &[1.0, 2.0, 3.0, 5.0]).is_err());
        assert!(least_squares_2(&x1, &[1.0; 4], &[1.0, 2.0, 3.0, 5.0]).is_err());
        assert!(least_squares_2(&[1.0, 2.0], &[1.0, 3.0], &[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn quartiles_are_ordered(v in proptest::collection::vec(-1e3f64..1e3, 1..50)) {
            let s = BoxStats::from_values(v.iter().cloned()).unwrap();
            prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
        }

        #[test]
        fn r_squared_in_unit_interval(
            pts in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, -1.0f64..1.0), 5..40)
        ) {
            let x1: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let x2: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.2).collect();
            if let Ok(fit) = least_squares_2(&x1, &x2, &y) {
                prop_assert!((0.0..=1.0).contains(&fit.r_squared));
            }
        }
    }
}
