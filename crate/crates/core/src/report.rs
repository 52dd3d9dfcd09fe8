//! Derived statistics for report tables: trends, budget ratios, required
//! reduction rates, and inequality measures.

use serde::Serialize;

use crate::error::{Error, Result};

/// Percentage change from `start` to `end`: `(end - start) / start * 100`.
///
/// Returns `None` when `start` is zero — there is no baseline to compare
/// against, and reports print such cells as empty rather than infinite.
pub fn change_pct(start: f64, end: f64) -> Option<f64> {
    if start == 0.0 {
        None
    } else {
        Some((end - start) / start * 100.0)
    }
}

/// Constant yearly rate (in percent per year) that turns `actual` into
/// `budget` between the two years: `r = (budget/actual)^(1/dy) - 1`.
///
/// A negative result is a required reduction; a non-negative result means
/// the entity is already within its budget.
pub fn reduction_rate(actual: f64, budget: f64, base_year: i32, target_year: i32) -> Result<f64> {
    if !(actual > 0.0) || !actual.is_finite() {
        return Err(Error::InvalidInput(format!(
            "actual must be positive and finite to derive a rate, got {actual}"
        )));
    }
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(Error::InvalidInput(format!(
            "budget must be positive and finite to derive a rate, got {budget}"
        )));
    }
    if target_year <= base_year {
        return Err(Error::Config(format!(
            "target year {target_year} must lie after base year {base_year}"
        )));
    }
    let years = f64::from(target_year - base_year);
    Ok(((budget / actual).powf(1.0 / years) - 1.0) * 100.0)
}

/// Ratio of actual pressure to allocated budget; above 1 means transgression.
pub fn over_under(actual: f64, budget: f64) -> Result<f64> {
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(Error::DegenerateInput(format!(
            "budget must be positive and finite for an over/under ratio, got {budget}"
        )));
    }
    if !actual.is_finite() || actual < 0.0 {
        return Err(Error::InvalidInput(format!(
            "actual must be finite and >= 0, got {actual}"
        )));
    }
    Ok(actual / budget)
}

/// A Lorenz curve with its Gini coefficient.
///
/// `points` runs from `(0, 0)` to `(1, 1)`: cumulative share of holders
/// (sorted by value, ascending) against cumulative share of the total value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LorenzCurve {
    pub points: Vec<(f64, f64)>,
    pub gini: f64,
}

/// Builds the Lorenz curve and Gini coefficient of a set of non-negative
/// values (for example per-household footprints within a city).
///
/// The Gini coefficient is one minus twice the area under the piecewise
/// linear Lorenz curve: 0 for perfectly equal values, approaching 1 as a
/// single holder concentrates everything.
pub fn lorenz_gini(values: &[f64]) -> Result<LorenzCurve> {
    if values.is_empty() {
        return Err(Error::DegenerateInput("no values for a Lorenz curve".into()));
    }
    for &v in values {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidInput(format!(
                "Lorenz curve values must be finite and >= 0, got {v}"
            )));
        }
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("values checked finite"));
    let total: f64 = sorted.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateInput("all-zero values have no Lorenz curve".into()));
    }
    let n = sorted.len() as f64;
    let mut points = Vec::with_capacity(sorted.len() + 1);
    points.push((0.0, 0.0));
    let mut cumulative = 0.0;
    let mut area = 0.0;
    let mut previous_share = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let value_share = cumulative / total;
        let holder_share = (i as f64 + 1.0) / n;
        points.push((holder_share, value_share));
        // Trapezoid between consecutive points; width is always 1/n.
        area += (previous_share + value_share) / (2.0 * n);
        previous_share = value_share;
    }
    Ok(LorenzCurve { points, gini: 1.0 - 2.0 * area })
}

impl LorenzCurve {
    /// Smallest fraction of holders (whole holders, counted from the top)
    /// that together hold at least `value_share` of the total.
    /// `value_share` must lie in (0, 1].
    pub fn top_holders_for(&self, value_share: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&value_share) || value_share == 0.0 {
            return Err(Error::InvalidInput(format!(
                "value share must lie in (0, 1], got {value_share}"
            )));
        }
        // The top k holders own 1 - L((n-k)/n); find the smallest such k.
        let n = self.points.len() - 1;
        for k in 1..=n {
            let (_, cumulative_below) = self.points[n - k];
            if 1.0 - cumulative_below >= value_share {
                return Ok(k as f64 / n as f64);
            }
        }
        Ok(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn change_pct_examples() {
        assert_relative_eq!(change_pct(100.0, 68.0).unwrap(), -32.0, max_relative = 1e-15);
        assert_relative_eq!(change_pct(50.0, 75.0).unwrap(), 50.0, max_relative = 1e-15);
        assert_eq!(change_pct(0.0, 10.0), None);
    }

    #[test]
    fn reduction_rate_example() {
        // From 8 to 1 over 34 years: about -5.9% per year.
        let r = reduction_rate(8.0, 1.0, 2016, 2050).unwrap();
        assert!((r - -5.9).abs() < 0.05, "got {r}");
    }

    #[test]
    fn reduction_rate_reproduces_the_budget_when_applied() {
        let (actual, budget) = (123.4, 56.7);
        let years = 27;
        let r = reduction_rate(actual, budget, 2016, 2016 + years).unwrap() / 100.0;
        let mut value = actual;
        for _ in 0..years {
            value *= 1.0 + r;
        }
        assert_relative_eq!(value, budget, max_relative = 1e-9);
    }

    #[test]
    fn reduction_rate_sign_matches_compliance() {
        // Already compliant: budget above actual, rate >= 0.
        assert!(reduction_rate(1.0, 2.0, 2016, 2050).unwrap() >= 0.0);
        assert!(reduction_rate(2.0, 1.0, 2016, 2050).unwrap() < 0.0);
        assert!(reduction_rate(0.0, 1.0, 2016, 2050).is_err());
        assert!(reduction_rate(1.0, 0.0, 2016, 2050).is_err());
        assert!(reduction_rate(1.0, 1.0, 2050, 2016).is_err());
    }

    #[test]
    fn over_under_examples() {
        use crate::numeric::round_half_even;
        let cba = over_under(244.0, 496.0).unwrap();
        assert_eq!(round_half_even(cba, 2), 0.49);
        let pba = over_under(28.0, 259.0).unwrap();
        assert_eq!(round_half_even(pba, 2), 0.11);
        assert!(over_under(1.0, 0.0).is_err());
        assert!(over_under(-1.0, 1.0).is_err());
    }

    #[test]
    fn gini_equal_values_is_zero() {
        let curve = lorenz_gini(&[5.0, 5.0, 5.0, 5.0]).unwrap();
        assert!(curve.gini.abs() < 1e-15);
        // The curve is the diagonal.
        for &(x, y) in &curve.points {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
    }

    #[test]
    fn gini_single_holder() {
        for n in [2usize, 5, 20] {
            let mut values = vec![0.0; n];
            values[0] = 42.0;
            let curve = lorenz_gini(&values).unwrap();
            let expected = (n as f64 - 1.0) / n as f64;
            assert_relative_eq!(curve.gini, expected, max_relative = 1e-12);
        }
    }

    /// Independent O(n^2) oracle: mean absolute difference over 2*mean.
    fn gini_pairwise(values: &[f64]) -> f64 {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let mut diff_sum = 0.0;
        for a in values {
            for b in values {
                diff_sum += (a - b).abs();
            }
        }
        diff_sum / (2.0 * n * n * mean)
    }

    #[test]
    fn gini_matches_pairwise_oracle() {
        let cases: Vec<Vec<f64>> = vec![
            vec![1.0, 2.0, 3.0, 4.0],
            vec![10.0, 0.0, 5.0, 5.0, 80.0],
            vec![3.5, 3.5, 1.0],
            vec![0.1, 0.2, 0.3, 0.4, 0.5, 10.0],
        ];
        for values in cases {
            let curve = lorenz_gini(&values).unwrap();
            assert_relative_eq!(curve.gini, gini_pairwise(&values), max_relative = 1e-12);
        }
    }

    #[test]
    fn gini_is_permutation_invariant() {
        let a = lorenz_gini(&[4.0, 1.0, 7.0, 2.0]).unwrap();
        let b = lorenz_gini(&[7.0, 2.0, 4.0, 1.0]).unwrap();
        assert_eq!(a.gini, b.gini);
    }

    #[test]
    fn gini_rejects_degenerate_inputs() {
        assert!(lorenz_gini(&[]).is_err());
        assert!(lorenz_gini(&[0.0, 0.0]).is_err());
        assert!(lorenz_gini(&[1.0, -2.0]).is_err());
    }

    #[test]
    fn top_holders_interpolation() {
        // One holder owns everything: any share is held by 1/n of holders.
        let curve = lorenz_gini(&[0.0, 0.0, 0.0, 10.0]).unwrap();
        assert_relative_eq!(curve.top_holders_for(0.5).unwrap(), 0.25, max_relative = 1e-12);
        // Equal values: share x is held by exactly x of the holders.
        let curve = lorenz_gini(&[1.0; 10]).unwrap();
        assert_relative_eq!(curve.top_holders_for(0.5).unwrap(), 0.5, max_relative = 1e-12);
        assert!(curve.top_holders_for(0.0).is_err());
        assert!(curve.top_holders_for(1.5).is_err());
    }
}
