use serde::{Deserialize, Serialize};

/// Population size and births over one recording interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenewalSample {
    pub time: f64,
    /// Interval length in years.
    pub span: f64,
    pub population: u64,
    pub births: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenewalEstimate {
    /// Births per year over the window.
    pub rate: f64,
    /// Relative change in population size across the window.
    pub size_drift: f64,
    /// False when the window drifts by 5% or more.
    pub stationary: bool,
}

pub const STATIONARY_DRIFT: f64 = 0.05;

/// Mean births per year over a window of recording intervals.
pub fn renewal_rate(window: &[RenewalSample]) -> RenewalEstimate {
    let years: f64 = window.iter().map(|s| s.span).sum();
    let births: u64 = window.iter().map(|s| s.births).sum();
    let rate = if years > 0.0 { births as f64 / years } else { 0.0 };
    let size_drift = match (window.first(), window.last()) {
        (Some(a), Some(b)) if a.population > 0 => (b.population as f64 - a.population as f64).abs() / a.population as f64,
        _ => 0.0,
    };
    RenewalEstimate { rate, size_drift, stationary: size_drift < STATIONARY_DRIFT }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_births() {
        let w = [RenewalSample { time: 0.0, span: 1.0, population: 10, births: 0 }];
        assert_eq!(renewal_rate(&w).rate, 0.0);
    }

    #[test]
    fn rate_is_unit_consistent() {
        let fine: Vec<_> = (0..20).map(|k| RenewalSample { time: k as f64 * 0.5, span: 0.5, population: 1000, births: 10 }).collect();
        let coarse: Vec<_> = (0..10).map(|k| RenewalSample { time: k as f64, span: 1.0, population: 1000, births: 20 }).collect();
        assert_eq!(renewal_rate(&fine).rate, renewal_rate(&coarse).rate);
        assert!(renewal_rate(&fine).stationary);
    }

    #[test]
    fn drifting_window_flagged() {
        let w = [
            RenewalSample { time: 0.0, span: 1.0, population: 1000, births: 5 },
            RenewalSample { time: 1.0, span: 1.0, population: 1200, births: 5 },
        ];
        let e = renewal_rate(&w);
        assert!(!e.stationary);
        assert_eq!(e.rate, 5.0);
    }
}
