use serde::Serialize;

/// Sample mean with its standard error and a normal-approximation 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrialStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`; 0 when `n < 2`.
    pub stderr: f64,
    pub ci95: (f64, f64),
}

impl TrialStats {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return TrialStats { n, mean: f64::NAN, stderr: f64::NAN, ci95: (f64::NAN, f64::NAN) };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stderr = if n < 2 {
            0.0
        } else {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        TrialStats { n, mean, stderr, ci95: (mean - 1.96 * stderr, mean + 1.96 * stderr) }
    }

    pub fn relative_error(&self, expected: f64) -> f64 {
        (self.mean - expected).abs() / expected.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stderr_is_sd_over_sqrt_n() {
        let s = TrialStats::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((s.stderr - sd / 2.0).abs() < 1e-12);
        assert!((s.ci95.1 - s.ci95.0 - 2.0 * 1.96 * s.stderr).abs() < 1e-12);
    }

    #[test]
    fn single_sample_has_zero_stderr() {
        let s = TrialStats::from_samples(&[7.0]);
        assert_eq!((s.n, s.mean, s.stderr), (1, 7.0, 0.0));
    }
}
