//! Small numeric helpers used across the crate.

/// Sums `values` with Neumaier's compensated algorithm.
///
/// Share denominators are sums over many entities whose magnitudes can span
/// several orders; plain left-to-right summation would make the
/// shares-sum-to-one invariant flakier than the 1e-12 tolerance we promise.
pub fn compensated_sum<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let mut sum = 0.0_f64;
    let mut compensation = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

/// Rounds `value` to `decimals` decimal digits, ties to even.
///
/// Used when formatting report tables so that printed values follow the
/// conventional half-to-even rule instead of half-away-from-zero. The
/// machine-readable outputs keep full precision; this is presentation only.
pub fn round_half_even(value: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (value * scale).round_ties_even() / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_matches_exact_on_adversarial_sequence() {
        // 1.0 followed by many tiny values that a naive sum would drop.
        let mut values = vec![1.0_f64];
        values.extend(std::iter::repeat(1e-16).take(10_000));
        let exact = 1.0 + 1e-16 * 10_000.0; // 1.000000000001
        let compensated = compensated_sum(values.iter().copied());
        assert!((compensated - exact).abs() < 1e-15, "got {compensated}");
    }

    #[test]
    fn compensated_sum_handles_cancellation() {
        let values = [1e16, 1.0, -1e16];
        assert_eq!(compensated_sum(values.iter().copied()), 1.0);
    }

    #[test]
    fn round_half_even_ties() {
        assert_eq!(round_half_even(0.5, 0), 0.0);
        assert_eq!(round_half_even(1.5, 0), 2.0);
        assert_eq!(round_half_even(2.5, 0), 2.0);
        assert_eq!(round_half_even(0.125, 2), 0.12);
        assert_eq!(round_half_even(0.375, 2), 0.38);
    }

    #[test]
    fn round_half_even_plain_cases() {
        assert_eq!(round_half_even(12.3125, 2), 12.31);
        assert_eq!(round_half_even(6.7024, 2), 6.7);
        assert_eq!(round_half_even(0.4919, 2), 0.49);
    }
}
