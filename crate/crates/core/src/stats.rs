//! Replicate summaries.

use serde::{Deserialize, Serialize};

/// Mean with a normal-approximation 95% interval, `mean ± 1.96 sd / √n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

pub const Z95: f64 = 1.96;

impl MeanCi {
    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }

    pub fn width(&self) -> f64 {
        2.0 * self.half_width
    }

    /// True when the two intervals do not overlap.
    pub fn separated_from(&self, other: &MeanCi) -> bool {
        self.upper() < other.lower() || other.upper() < self.lower()
    }
}

/// `None` for an empty sample. A single value gets a zero-width interval.
pub fn mean_ci(values: &[f64]) -> Option<MeanCi> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Some(MeanCi { mean, half_width: 0.0, n });
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Some(MeanCi { mean, half_width: Z95 * (var / n as f64).sqrt(), n })
}

/// Wilson score interval for a binomial proportion.
pub fn proportion_ci(successes: u64, trials: u64) -> Option<MeanCi> {
    if trials == 0 {
        return None;
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Some(MeanCi { mean: centre, half_width: half, n: trials as usize })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_values_give_zero_width() {
        let ci = mean_ci(&[3.0; 8]).unwrap();
        assert_eq!(ci.mean, 3.0);
        assert_eq!(ci.half_width, 0.0);
    }

    #[test]
    fn known_interval() {
        let ci = mean_ci(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((ci.half_width - 1.96 * sd / 2.0).abs() < 1e-12);
    }

    #[test]
    fn wilson_contains_estimate() {
        let ci = proportion_ci(0, 200).unwrap();
        assert!(ci.lower() <= 0.0 + 1e-12 && ci.upper() > 0.0 && ci.upper() < 0.03);
        let ci = proportion_ci(100, 200).unwrap();
        assert!((ci.mean - 0.5).abs() < 1e-12);
    }
}
