use super::NumericsError;

/// Order-statistic quantile with linear interpolation at position
/// `1 + (n−1)p` (one fixed convention used project-wide).
pub fn empirical_quantile(values: &[f64], p: f64) -> Result<f64, NumericsError> {
    if values.is_empty() {
        return Err(NumericsError::EmptyInput);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(NumericsError::InvalidProbability(p));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    let pos = (n - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if frac == 0.0 || lo + 1 >= n {
        Ok(sorted[lo])
    } else {
        Ok(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn median_of_even_count_interpolates() {
        let q = empirical_quantile(&[4.0, 1.0, 3.0, 2.0], 0.5).unwrap();
        assert_abs_diff_eq!(q, 2.5, epsilon = 0.0);
    }

    #[test]
    fn p0_is_min_p1_is_max() {
        let v = [3.0, -1.0, 7.0, 0.5];
        assert_eq!(empirical_quantile(&v, 0.0).unwrap(), -1.0);
        assert_eq!(empirical_quantile(&v, 1.0).unwrap(), 7.0);
    }

    #[test]
    fn empty_input_errors() {
        assert_eq!(
            empirical_quantile(&[], 0.5).unwrap_err(),
            NumericsError::EmptyInput
        );
    }

    #[test]
    fn uniform_tail_quantile_matches_cdf() {
        let mut rng = RngStream::new(2024, 3).rng();
        let draws: Vec<f64> = (0..1000).map(|_| rng.random_range(0.0..1.0)).collect();
        let q = empirical_quantile(&draws, 0.975).unwrap();
        assert!((q - 0.975).abs() < 0.02, "q = {q}");
    }

    #[test]
    fn monotone_in_p() {
        let mut rng = RngStream::new(8, 8).rng();
        let draws: Vec<f64> = (0..57).map(|_| rng.random_range(-5.0..5.0)).collect();
        let mut last = f64::NEG_INFINITY;
        for i in 0..=20 {
            let q = empirical_quantile(&draws, i as f64 / 20.0).unwrap();
            assert!(q >= last);
            last = q;
        }
    }
}
