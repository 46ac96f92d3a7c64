//! Environmental harshness, nutrition, and the drifting optimum.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::model::{Individual, Sex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub start: f64,
    pub level: f64,
}

/// Piecewise-constant schedule over scenario time. Segments are
/// left-closed and the last one extends to infinity. A bare number reads
/// as a constant schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule {
    #[serde(deserialize_with = "segments_or_level")]
    pub segments: Vec<Segment>,
}

fn segments_or_level<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<Segment>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Level(f64),
        Segments(Vec<Segment>),
    }
    Ok(match Repr::deserialize(d)? {
        Repr::Level(level) => vec![Segment { start: 0.0, level }],
        Repr::Segments(s) => s,
    })
}

pub type HarshnessSchedule = Schedule;
pub type NutritionSchedule = Schedule;

impl Schedule {
    pub fn constant(level: f64) -> Self {
        Self { segments: vec![Segment { start: 0.0, level }] }
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        Self {
            segments: pairs.iter().map(|&(start, level)| Segment { start, level }).collect(),
        }
    }

    /// Level of the segment containing `t`. Times before zero read the first segment.
    pub fn at(&self, t: f64) -> f64 {
        let idx = self.segments.partition_point(|s| s.start <= t);
        self.segments[idx.saturating_sub(1)].level
    }

    pub fn is_constant(&self) -> bool {
        self.segments.windows(2).all(|w| w[0].level == w[1].level)
    }

    fn validate_order(&self, what: &str) -> Result<()> {
        let Some(first) = self.segments.first() else {
            return config(format!("{what} schedule is empty"));
        };
        if first.start != 0.0 {
            return config(format!("{what} schedule must start at t = 0"));
        }
        if self.segments.windows(2).any(|w| !(w[1].start > w[0].start)) {
            return config(format!("{what} schedule start times must be strictly increasing"));
        }
        Ok(())
    }

    pub fn validate_harshness(&self) -> Result<()> {
        self.validate_order("harshness")?;
        if self.segments.iter().any(|s| !(s.level >= 0.0 && s.level.is_finite())) {
            return config("harshness levels must be finite and >= 0");
        }
        Ok(())
    }

    pub fn validate_nutrition(&self) -> Result<()> {
        self.validate_order("nutrition")?;
        if self.segments.iter().any(|s| !(s.level > 0.0 && s.level <= 1.0)) {
            return config("nutrition levels must lie in (0, 1]");
        }
        Ok(())
    }
}

pub fn harshness_at(schedule: &HarshnessSchedule, t: f64) -> f64 {
    schedule.at(t)
}

/// Random-walk-with-drift position of the environmental optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSpec {
    pub initial: f64,
    /// Units per year.
    pub rate: f64,
    /// Units per square-root year.
    pub diffusion: f64,
}

impl Default for DriftSpec {
    fn default() -> Self {
        Self { initial: 0.0, rate: 0.0, diffusion: 0.0 }
    }
}

/// Abstinence-to-harshness conversion applied by a male's own sensing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbstinenceParams {
    /// Harshness added per year of abstinence beyond the grace period.
    pub beta: f64,
    /// Years of abstinence that have no effect.
    pub grace: f64,
}

impl Default for AbstinenceParams {
    fn default() -> Self {
        Self { beta: 0.0, grace: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentState {
    pub time: f64,
    pub harshness: f64,
    pub nutrition: f64,
    pub optimum: f64,
    /// Delay with which males sense the ambient harshness, in years.
    pub sensing_lag: f64,
}

/// Schedules plus the current state they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub harshness: HarshnessSchedule,
    pub nutrition: NutritionSchedule,
    pub drift: DriftSpec,
    pub state: EnvironmentState,
}

impl Environment {
    pub fn new(harshness: HarshnessSchedule, nutrition: NutritionSchedule, drift: DriftSpec, sensing_lag: f64) -> Result<Self> {
        harshness.validate_harshness()?;
        nutrition.validate_nutrition()?;
        if !(sensing_lag >= 0.0) {
            return config("sensing lag must be >= 0");
        }
        if !(drift.diffusion >= 0.0) {
            return config("drift diffusion must be >= 0");
        }
        let state = EnvironmentState {
            time: 0.0,
            harshness: harshness.at(0.0),
            nutrition: nutrition.at(0.0),
            optimum: drift.initial,
            sensing_lag,
        };
        Ok(Self { harshness, nutrition, drift, state })
    }

    pub fn constant(harshness: f64, nutrition: f64) -> Self {
        Self::new(Schedule::constant(harshness), Schedule::constant(nutrition), DriftSpec::default(), 0.0)
            .expect("constant environment is valid")
    }

    pub fn is_static(&self) -> bool {
        self.harshness.is_constant()
            && self.nutrition.is_constant()
            && self.drift.rate == 0.0
            && self.drift.diffusion == 0.0
    }

    /// Move the schedules to time `t` without touching the optimum.
    pub fn set_time(&mut self, t: f64) {
        self.state.time = t;
        self.state.harshness = self.harshness.at(t);
        self.state.nutrition = self.nutrition.at(t);
    }

    /// Ambient harshness as sensed now, i.e. the schedule one lag ago.
    pub fn sensed_harshness(&self) -> f64 {
        self.harshness.at(self.state.time - self.state.sensing_lag)
    }
}

/// Harshness perceived by a living male, including his abstinence.
pub fn perceived_harshness(male: &Individual, env: &Environment, abstinence_years: f64, params: &AbstinenceParams) -> Result<f64> {
    if male.sex != Sex::Male {
        return domain("perceived harshness is defined for males only");
    }
    if !male.is_alive() {
        return domain("perceived harshness requires a living male");
    }
    Ok(perceived_from(env.sensed_harshness(), abstinence_years, params))
}

pub(crate) fn perceived_from(ambient: f64, abstinence_years: f64, params: &AbstinenceParams) -> f64 {
    (ambient + params.beta * (abstinence_years - params.grace).max(0.0)).max(0.0)
}

/// Advance the optimum by one Euler-Maruyama step and move schedules forward.
pub fn step_drift<R: Rng + ?Sized>(env: &Environment, dt: f64, rng: &mut R) -> Result<Environment> {
    if !(dt > 0.0) {
        return domain("drift step needs dt > 0");
    }
    let mut next = env.clone();
    let d = env.drift;
    let mut x = env.state.optimum + d.rate * dt;
    if d.diffusion > 0.0 {
        let xi: f64 = rng.sample(StandardNormal);
        x += d.diffusion * dt.sqrt() * xi;
    }
    next.state.optimum = x;
    next.set_time(env.state.time + dt);
    Ok(next)
}
