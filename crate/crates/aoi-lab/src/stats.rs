//! Small sample-statistics helpers shared by the simulator and the tests.

/// Standard-normal 97.5% quantile used for the 95% confidence intervals.
pub const Z95: f64 = 1.96;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; 0 for fewer than two samples.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the sample mean.
pub fn stderr_of_mean(xs: &[f64]) -> f64 {
    (sample_variance(xs) / xs.len() as f64).sqrt()
}

/// Variance/stderr from pre-accumulated sums: count, sum of x, sum of x^2.
pub fn stderr_from_sums(n: f64, sum: f64, sum_sq: f64) -> f64 {
    if n < 2.0 {
        return 0.0;
    }
    let var = ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0);
    (var / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basics() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((sample_variance(&xs) - 5.0 / 3.0).abs() < 1e-12);
        let se = stderr_of_mean(&xs);
        assert!((se - (5.0 / 12.0f64).sqrt()).abs() < 1e-12);
        assert!((stderr_from_sums(4.0, 10.0, 30.0) - se).abs() < 1e-12);
    }

    #[test]
    fn degenerate_sizes() {
        assert!(mean(&[]).is_nan());
        assert_eq!(sample_variance(&[1.0]), 0.0);
        assert_eq!(stderr_of_mean(&[1.0]), 0.0);
    }
}
