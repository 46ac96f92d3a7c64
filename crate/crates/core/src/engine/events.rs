use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Number of father-group labels a scenario may use (0 is the general population).
pub const MAX_GROUPS: usize = 4;

/// A timed intervention applied by the step loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Event {
    /// Eligible males at or above `q_threshold` are called up, highest quality
    /// first, up to `fraction` of eligible males. Drafted males keep their
    /// partners but conceive at `availability` times the normal rate, and
    /// their abstinence clocks run.
    Draft {
        start: f64,
        end: f64,
        q_threshold: f64,
        fraction: f64,
        availability: f64,
    },
    /// A random `fraction` of males joins `group` and spends `away` years
    /// of every `away + home` cycle unable to conceive.
    AbstinenceCycle {
        start: f64,
        end: f64,
        group: u8,
        fraction: f64,
        away: f64,
        home: f64,
    },
}

impl Event {
    pub fn start(&self) -> f64 {
        match *self {
            Event::Draft { start, .. } | Event::AbstinenceCycle { start, .. } => start,
        }
    }

    pub fn end(&self) -> f64 {
        match *self {
            Event::Draft { end, .. } | Event::AbstinenceCycle { end, .. } => end,
        }
    }

    pub fn active(&self, t: f64) -> bool {
        t >= self.start() && t < self.end()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start() >= 0.0 && self.end() > self.start()) {
            return config("event needs 0 <= start < end");
        }
        match *self {
            Event::Draft { q_threshold, fraction, availability, .. } => {
                if !(0.0..=1.0).contains(&q_threshold) || !(0.0..=1.0).contains(&fraction) || !(0.0..=1.0).contains(&availability) {
                    return config("draft q_threshold, fraction and availability must lie in [0, 1]");
                }
            }
            Event::AbstinenceCycle { group, fraction, away, home, .. } => {
                if group == 0 || group as usize >= MAX_GROUPS {
                    return config(format!("abstinence group must lie in 1..{MAX_GROUPS}"));
                }
                if !(0.0..=1.0).contains(&fraction) || !(away > 0.0) || !(home > 0.0) {
                    return config("abstinence cycle needs fraction in [0, 1] and positive away/home spans");
                }
            }
        }
        Ok(())
    }

    /// Whether a member of this cycle's group is away at time `t`.
    pub fn away_at(&self, t: f64) -> bool {
        match *self {
            Event::AbstinenceCycle { start, away, home, .. } if self.active(t) => (t - start).rem_euclid(away + home) < away,
            _ => false,
        }
    }
}

pub fn validate_events(events: &[Event]) -> Result<()> {
    for e in events {
        e.validate()?;
    }
    if events.windows(2).any(|w| w[1].start() < w[0].start()) {
        return config("events must be ordered by start time");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_phases() {
        let e = Event::AbstinenceCycle { start: 1.0, end: 10.0, group: 1, fraction: 0.2, away: 0.75, home: 0.25 };
        assert!(e.away_at(1.0));
        assert!(e.away_at(1.7));
        assert!(!e.away_at(1.8));
        assert!(e.away_at(2.0));
        assert!(!e.away_at(10.0));
        assert!(!e.away_at(0.5));
    }

    #[test]
    fn ordering_and_ranges() {
        let d = |s: f64| Event::Draft { start: s, end: s + 1.0, q_threshold: 0.5, fraction: 0.5, availability: 0.05 };
        assert!(validate_events(&[d(0.0), d(2.0)]).is_ok());
        assert!(validate_events(&[d(2.0), d(0.0)]).is_err());
        let bad = Event::AbstinenceCycle { start: 0.0, end: 1.0, group: 0, fraction: 0.5, away: 1.0, home: 1.0 };
        assert!(bad.validate().is_err());
    }
}
