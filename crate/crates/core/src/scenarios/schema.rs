//! Scenario files: a TOML document that names a built-in base (optional),
//! overrides parts of it, and lists events, targets and calibration settings.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::params::get_param;
use crate::config::SimConfig;
use crate::engine::race::RaceConfig;
use crate::engine::{Event, Trajectory};
use crate::error::{config, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Human,
    Plant,
    Tracking,
}

/// What a target compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// Sex ratio of births in the window.
    #[default]
    SrBirth,
    /// Sex ratio of conceptions in the window.
    SrConception,
    /// Parity age of the profile pooled over the window.
    ParityAge,
    QualityParityAge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    #[serde(default)]
    pub statistic: Statistic,
    /// Restrict birth counts to fathers of this group.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<u8>,
    /// Births or conceptions with times in `[from, to)`.
    pub from: f64,
    pub to: f64,
    pub value: f64,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

impl Target {
    pub fn evaluate(&self, t: &Trajectory) -> Option<f64> {
        evaluate(t, self.statistic, self.group, self.from, self.to)
    }
}

/// Statistic over the window `[from, to)`. Birth sex ratios use birth
/// records when available and interval counts otherwise.
pub fn evaluate(t: &Trajectory, statistic: Statistic, group: Option<u8>, from: f64, to: f64) -> Option<f64> {
    let eps = 1e-9;
    match statistic {
        Statistic::SrBirth if !t.births.is_empty() || t.tallies.born.iter().sum::<u64>() == 0 => {
            let mut c = [0u64; 2];
            for b in t.births.iter().filter(|b| b.time >= from - eps && b.time < to - eps) {
                if group.is_none_or(|g| g == b.father_group) {
                    c[if b.sex.is_male() { 0 } else { 1 }] += 1;
                }
            }
            crate::demography::profile::sex_ratio(c[0] as f64, c[1] as f64)
        }
        Statistic::SrBirth => {
            let w = t.summary(from - eps, to - eps);
            match group {
                Some(g) => w.group_sr_birth(g as usize),
                None => w.sr_birth,
            }
        }
        Statistic::SrConception => t.summary(from - eps, to - eps).sr_conception,
        Statistic::ParityAge => t.summary(from - eps, to - eps).parity_age.ok(),
        Statistic::QualityParityAge => t.summary(from - eps, to - eps).quality_parity_age.ok(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeParam {
    /// Dotted path into the scenario, e.g. `config.reproduction.abstinence.beta`.
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSpec {
    pub free: Vec<FreeParam>,
    /// Maximum number of objective evaluations.
    pub budget: usize,
    pub replicates: usize,
    /// Largest absolute residual accepted as a fit.
    pub tolerance: f64,
    /// Stop when the simplex spread of objective values falls below this.
    #[serde(default = "default_ftol")]
    pub ftol: f64,
}

fn default_ftol() -> f64 {
    1e-3
}

/// Sexual and asexual arms of a tracking race share everything but the mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaceSpec {
    /// Sexual arm.
    pub config: RaceConfig,
    /// Asexual arm; defaults to `config` with the mode switched. Any other
    /// difference is rejected when the race runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asexual: Option<RaceConfig>,
    pub drifts: Vec<f64>,
    pub replicates: usize,
}

impl RaceSpec {
    pub fn arms(&self) -> (RaceConfig, RaceConfig) {
        let sexual = RaceConfig { mode: crate::engine::race::Mode::Sexual, ..self.config.clone() };
        let asexual = self.asexual.clone().unwrap_or(RaceConfig { mode: crate::engine::race::Mode::Asexual, ..self.config.clone() });
        (sexual, asexual)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub from: f64,
    pub to: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub mode: Mode,
    pub config: SimConfig,
    #[serde(default)]
    pub events: Vec<Event>,
    /// Window for the headline statistics of a run.
    pub measure: Window,
    #[serde(default)]
    pub targets: Vec<Target>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub race: Option<RaceSpec>,
}

impl Scenario {
    pub fn new(name: &str, config: SimConfig) -> Self {
        let to = config.horizon;
        Self {
            name: name.to_string(),
            description: String::new(),
            mode: Mode::Human,
            config,
            events: Vec::new(),
            measure: Window { from: to / 2.0, to },
            targets: Vec::new(),
            calibration: None,
            race: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return config("scenario name must not be empty");
        }
        self.config.validate()?;
        crate::engine::events::validate_events(&self.events)?;
        if !(self.measure.from >= 0.0 && self.measure.to > self.measure.from) {
            return config("measure window needs 0 <= from < to");
        }
        if self.mode != Mode::Plant && self.config.reproduction.preconception.comfort_collapse {
            return config("comfort collapse is a plant-mode mechanism; set mode = \"plant\"");
        }
        for t in &self.targets {
            if !(t.to > t.from) || !(t.weight >= 0.0) || !t.value.is_finite() {
                return config("targets need from < to, weight >= 0 and a finite value");
            }
        }
        if self.targets.windows(2).any(|w| w[1].from < w[0].from) {
            return config("scenario targets must be ordered by time");
        }
        if let Some(c) = &self.calibration {
            if c.budget == 0 || c.replicates == 0 {
                return config("calibration budget and replicates must be at least 1");
            }
            if c.budget < c.free.len() + 1 {
                return config(format!("calibration budget {} is below dimension + 1 = {}", c.budget, c.free.len() + 1));
            }
            if !(c.tolerance > 0.0) {
                return config("calibration tolerance must be > 0");
            }
            for p in &c.free {
                if !(p.lower.is_finite() && p.upper.is_finite() && p.lower < p.upper) {
                    return config(format!("free parameter `{}` needs finite bounds with lower < upper", p.name));
                }
                get_param(self, &p.name)?;
            }
        }
        if let Some(r) = &self.race {
            r.config.validate()?;
            if r.drifts.iter().any(|v| !v.is_finite()) || r.replicates == 0 {
                return config("race drifts must be finite and replicates >= 1");
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize scenario: {e}")))
    }
}

fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Recursively overlay `patch` on `base`. Tables merge key by key; anything
/// else, arrays included, replaces.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, p) => *slot = p,
    }
}

/// Parse and validate a scenario document. A top-level `base = "<name>"`
/// starts from that built-in; otherwise from the default configuration.
pub fn load_scenario(text: &str) -> Result<Scenario> {
    let doc: toml::Table = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| position(text, s.start));
        Error::Parse { line, column, message: e.message().to_string() }
    })?;
    let mut patch = serde_json::to_value(&doc).map_err(|e| Error::Config(e.to_string()))?;
    let base_name = match patch.as_object_mut().and_then(|m| m.remove("base")) {
        None => None,
        Some(Value::String(s)) => Some(s),
        Some(_) => return config("`base` must be the name of a built-in scenario"),
    };
    let base = match &base_name {
        Some(name) => super::catalog::builtin(name)?,
        None => {
            let name = patch.get("name").and_then(Value::as_str).unwrap_or("custom");
            Scenario::new(name, SimConfig::default())
        }
    };
    let mut value = serde_json::to_value(&base).map_err(|e| Error::Config(e.to_string()))?;
    // a partial asexual arm starts from the shared race configuration
    if patch.pointer("/race/asexual").is_some() {
        if let Some(race) = value.get_mut("race").and_then(Value::as_object_mut) {
            if !race.contains_key("asexual") {
                let mut arm = race.get("config").cloned().unwrap_or(Value::Null);
                arm["mode"] = Value::String("asexual".into());
                race.insert("asexual".into(), arm);
            }
        }
    }
    merge(&mut value, patch);
    let scenario: Scenario = serde_json::from_value(value).map_err(|e| Error::Config(format!("scenario: {e}")))?;
    scenario.validate()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_error_has_position() {
        let err = load_scenario("name = \"x\"\n[config\nhorizon = 3\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let err = load_scenario("name = \"x\"\n[config]\nhorizonn = 3\n").unwrap_err().to_string();
        assert!(err.contains("horizonn"), "{err}");
    }

    #[test]
    fn partial_config_overrides_defaults() {
        let s = load_scenario("name = \"x\"\n[config]\nhorizon = 3\n[config.environment]\nharshness = 0.8\n").unwrap();
        assert_eq!(s.config.horizon, 3.0);
        assert_eq!(s.config.environment.harshness.at(10.0), 0.8);
        assert_eq!(s.config.dt, SimConfig::default().dt);
    }

    #[test]
    fn kappa_ordering_violation_named() {
        let text = "name = \"x\"\n[config.hazard.female]\nquality_exponent = 0.9\n";
        let err = load_scenario(text).unwrap_err().to_string();
        assert!(err.contains("quality_exponent") || err.contains("kappa"), "{err}");
    }

    #[test]
    fn round_trip_is_identical() {
        let s = load_scenario("name = \"rt\"\n[config]\nhorizon = 7.5\n[[events]]\nkind = \"draft\"\nstart = 1.0\nend = 2.0\nq_threshold = 0.5\nfraction = 0.3\navailability = 0.05\n").unwrap();
        let again = load_scenario(&s.to_toml().unwrap()).unwrap();
        assert_eq!(s, again);
    }
}
