//! Simulation configuration and its validation.

use serde::{Deserialize, Serialize};

use crate::demography::hazard::{AgeBand, HazardParams, SexHazard};
use crate::environment::{AbstinenceParams, DriftSpec, Environment, Schedule};
use crate::error::{config, Result};
use crate::model::{BetaSpec, NatalQuality, QualityModelConfig};
use crate::reproduction::{MaternalFilterParams, PairingParams, PaternityModel, PreconceptionParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgeDistribution {
    /// Draw ages from the stationary life table of the configured hazards.
    Stationary,
    /// Uniform ages since conception on `[0, max_age)`.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialPopulation {
    /// Individuals alive or in utero at t = 0.
    pub size: usize,
    pub age_distribution: AgeDistribution,
    /// Oldest initial age, in years since conception.
    pub max_age: f64,
    /// Sex ratio at conception used to split the initial population.
    pub sr_conception: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub harshness: Schedule,
    pub nutrition: Schedule,
    pub drift: DriftSpec,
    /// Delay with which males sense ambient harshness, in years.
    pub sensing_lag: f64,
}

impl EnvironmentConfig {
    pub fn build(&self) -> Result<Environment> {
        Environment::new(self.harshness.clone(), self.nutrition.clone(), self.drift, self.sensing_lag)
    }
}

/// Conceptions arrive at a fixed rate with a fixed sex probability, bypassing
/// pairing. Used to compare the simulator against the cohort life table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BirthStream {
    /// Conceptions per year.
    pub rate: f64,
    pub p_male: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproductionConfig {
    pub preconception: PreconceptionParams,
    pub maternal: MaternalFilterParams,
    pub pairing: PairingParams,
    pub paternity: PaternityModel,
    pub abstinence: AbstinenceParams,
    /// Conception rates are scaled by `K / N` once the living population exceeds `K`.
    pub carrying_capacity: f64,
    /// Replaces pairing and conception when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub birth_stream: Option<BirthStream>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Years from conception to birth.
    pub gestation: f64,
    pub dt: f64,
    pub horizon: f64,
    pub record_interval: f64,
    /// Width of the post-natal age bins of recorded profiles.
    pub age_bin_width: f64,
    pub max_age: f64,
    pub initial: InitialPopulation,
    pub hazard: HazardParams,
    /// Permit configurations that break the male-excess orderings.
    pub allow_ordering_violation: bool,
    pub quality: QualityModelConfig,
    pub natal_quality: NatalQuality,
    pub reproduction: ReproductionConfig,
    pub environment: EnvironmentConfig,
    /// Keep one record per live birth in the trajectory.
    pub record_births: bool,
}

fn human_hazard() -> HazardParams {
    let bands = |old: f64| {
        vec![
            AgeBand { start: 0.0, rate: 0.03 },
            AgeBand { start: 1.75, rate: 0.004 },
            AgeBand { start: 15.75, rate: 0.005 },
            AgeBand { start: 45.75, rate: 0.012 * old },
            AgeBand { start: 65.75, rate: 0.04 * old },
            AgeBand { start: 80.75, rate: 0.15 * old },
        ]
    };
    HazardParams {
        male: SexHazard { bands: bands(1.4), fetal: 0.34, harshness_exponent: 0.5, quality_exponent: 0.35 },
        female: SexHazard { bands: bands(1.0), fetal: 0.1, harshness_exponent: 0.25, quality_exponent: 0.0 },
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            gestation: 0.75,
            dt: 0.05,
            horizon: 100.0,
            record_interval: 1.0,
            age_bin_width: 5.0,
            max_age: 100.75,
            initial: InitialPopulation {
                size: 10_000,
                age_distribution: AgeDistribution::Stationary,
                max_age: 100.75,
                sr_conception: 150.0,
            },
            hazard: human_hazard(),
            allow_ordering_violation: false,
            quality: QualityModelConfig::default(),
            natal_quality: NatalQuality {
                male: BetaSpec { mean: 0.571, sd: 0.25 },
                female: BetaSpec { mean: 0.6, sd: 0.15 },
                heritability: 0.0,
            },
            reproduction: ReproductionConfig {
                preconception: PreconceptionParams { p_base: 0.612, alpha_q: 2.0, q_ref: 0.7, alpha_h: 0.2, ..PreconceptionParams::default() },
                maternal: MaternalFilterParams::default(),
                pairing: PairingParams::default(),
                paternity: PaternityModel::QualityPower { exponent: 2.0, scale: 0.6 },
                abstinence: AbstinenceParams::default(),
                carrying_capacity: 10_000.0,
                birth_stream: None,
            },
            environment: EnvironmentConfig {
                harshness: Schedule::constant(0.4),
                nutrition: Schedule::constant(1.0),
                drift: DriftSpec::default(),
                sensing_lag: 0.25,
            },
            record_births: true,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        config(format!("{name} must be finite and > 0, got {v}"))
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        positive("gestation", self.gestation)?;
        positive("dt", self.dt)?;
        if self.dt > self.gestation / 2.0 + 1e-12 {
            return config(format!(
                "dt = {} exceeds gestation / 2 = {}: gestation must span at least two steps",
                self.dt,
                self.gestation / 2.0
            ));
        }
        let steps = self.gestation / self.dt;
        if (steps - steps.round()).abs() > 1e-6 {
            return config("gestation must be a whole number of time steps");
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return config("horizon must be finite and >= 0");
        }
        positive("record_interval", self.record_interval)?;
        positive("age_bin_width", self.age_bin_width)?;
        if !(self.max_age > self.gestation) {
            return config("max_age must exceed gestation");
        }
        if !(self.initial.max_age > 0.0 && self.initial.max_age <= self.max_age) {
            return config("initial.max_age must lie in (0, max_age]");
        }
        positive("initial.sr_conception", self.initial.sr_conception)?;
        self.hazard.validate(self.allow_ordering_violation)?;
        self.quality.validate()?;
        self.natal_quality.validate()?;
        let r = &self.reproduction;
        r.preconception.validate()?;
        r.maternal.validate()?;
        r.pairing.validate()?;
        r.paternity.validate()?;
        if !(r.abstinence.beta >= 0.0 && r.abstinence.grace >= 0.0) {
            return config("abstinence beta and grace must be >= 0");
        }
        positive("carrying_capacity", r.carrying_capacity)?;
        if let Some(b) = r.birth_stream {
            if !(b.rate >= 0.0 && b.rate.is_finite()) || !(0.0..=1.0).contains(&b.p_male) {
                return config("birth_stream needs rate >= 0 and p_male in [0, 1]");
            }
        }
        self.environment.build()?;
        Ok(())
    }

    pub fn gestation_steps(&self) -> i64 {
        (self.gestation / self.dt).round() as i64
    }

    /// Probability that a conception is male implied by the initial sex ratio.
    pub fn initial_male_share(&self) -> f64 {
        self.initial.sr_conception / (100.0 + self.initial.sr_conception)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        SimConfig::default().validate().unwrap();
    }

    #[test]
    fn step_must_fit_gestation_twice() {
        let cfg = SimConfig { dt: 0.5, ..SimConfig::default() };
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("at least two steps"), "{err}");
    }

    #[test]
    fn ordering_violation_is_named() {
        let mut cfg = SimConfig::default();
        cfg.hazard.female.quality_exponent = 1.0;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("kappa_m >= kappa_f"), "{err}");
        cfg.allow_ordering_violation = true;
        cfg.validate().unwrap();
    }
}
