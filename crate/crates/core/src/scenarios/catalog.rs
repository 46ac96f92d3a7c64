//! Built-in scenarios. Scenario time is in years; in the historical
//! scenarios war breaks out at t = 0.5.

use super::schema::{CalibrationSpec, FreeParam, Mode, RaceSpec, Scenario, Statistic, Target, Window};
use crate::config::SimConfig;
use crate::engine::race::RaceConfig;
use crate::engine::Event;
use crate::environment::Schedule;
use crate::error::{Error, Result};

pub const BUILTINS: [&str; 7] = [
    "baseline_peace",
    "war_draft",
    "blockade",
    "mountain_abstinence",
    "comfort_parthenogenesis",
    "ww1_double_dip",
    "tracking_race",
];

/// Drift rates at which sexual populations out-survive asexual ones under
/// the default race configuration.
pub const DRIFT_BAND: [f64; 3] = [0.07, 0.08, 0.09];

fn free(name: &str, lower: f64, upper: f64) -> FreeParam {
    FreeParam { name: name.to_string(), lower, upper }
}

fn sr_target(from: f64, to: f64, value: f64, weight: f64) -> Target {
    Target { statistic: Statistic::SrBirth, group: None, from, to, value, weight }
}

/// Peace-time population with the conception sex ratio of the calibrated defaults.
fn peace_config(horizon: f64) -> SimConfig {
    let mut c = SimConfig::default();
    c.horizon = horizon;
    c.initial.sr_conception = 145.0;
    c
}

pub fn baseline_peace() -> Scenario {
    let mut s = Scenario::new("baseline_peace", peace_config(60.0));
    s.description = "Static moderate harshness; birth-cohort sex ratio near 105.".into();
    s.measure = Window { from: 10.0, to: 60.0 };
    s.targets = vec![sr_target(10.0, 60.0, 105.0, 1.0)];
    s.calibration = Some(CalibrationSpec {
        free: vec![free("config.reproduction.preconception.p_base", 0.55, 0.7)],
        budget: 40,
        replicates: 4,
        tolerance: 1.0,
        ftol: 1e-3,
    });
    s
}

pub fn war_draft() -> Scenario {
    let mut s = Scenario::new("war_draft", peace_config(27.0));
    s.description = "Baseline population; a draft removes high-quality men from t = 20 to t = 27.".into();
    s.events = vec![Event::Draft { start: 20.0, end: 27.0, q_threshold: 0.94, fraction: 0.6, availability: 0.05 }];
    s.measure = Window { from: 21.0, to: 27.0 };
    s.targets = vec![sr_target(21.0, 27.0, 108.0, 1.0)];
    s.calibration = Some(CalibrationSpec {
        free: vec![free("events.0.q_threshold", 0.85, 1.0)],
        budget: 40,
        replicates: 4,
        tolerance: 1.0,
        ftol: 1e-3,
    });
    s
}

pub fn blockade() -> Scenario {
    let mut c = peace_config(5.0);
    c.environment.harshness = Schedule::from_pairs(&[(0.0, 0.4), (0.5, 0.5), (0.7, 0.6), (1.3, 0.55), (2.0, 0.5), (4.35, 0.4)]);
    // encirclement late in year 0, worst winter across years 0-1, recovery from spring of year 1
    c.environment.nutrition = Schedule::from_pairs(&[(0.0, 1.0), (0.7, 0.6), (0.85, 0.2), (1.3, 0.45), (1.6, 0.7), (2.2, 0.9), (3.0, 1.0)]);
    c.reproduction.abstinence.beta = 2.5;
    c.reproduction.maternal.m_max = 1.5;
    c.reproduction.maternal.n_crit = 0.67;
    let mut s = Scenario::new("blockade", c);
    s.description = "Siege: war onset mid-year 0, famine winter of years 0-1, slow recovery.".into();
    s.events = vec![Event::Draft { start: 0.5, end: 4.35, q_threshold: 0.96, fraction: 0.6, availability: 0.05 }];
    s.measure = Window { from: 0.0, to: 5.0 };
    s.targets = vec![
        sr_target(0.0, 1.0, 106.0, 1.0),
        sr_target(1.0, 2.0, 101.0, 2.0),
        sr_target(2.0, 3.0, 105.0, 1.0),
        sr_target(4.0, 5.0, 109.0, 1.0),
    ];
    s.calibration = Some(CalibrationSpec {
        free: vec![
            free("config.reproduction.abstinence.beta", 0.0, 3.0),
            free("config.reproduction.maternal.m_max", 1.0, 6.0),
            free("config.reproduction.maternal.n_crit", 0.3, 0.95),
            free("events.0.q_threshold", 0.3, 1.0),
        ],
        budget: 200,
        replicates: 4,
        tolerance: 1.5,
        ftol: 1e-2,
    });
    s
}

pub fn mountain_abstinence() -> Scenario {
    let mut c = peace_config(50.0);
    c.reproduction.abstinence.beta = 0.5;
    let mut s = Scenario::new("mountain_abstinence", c);
    s.description = "A fifth of men herd in the mountains for most of each year.".into();
    s.events = vec![Event::AbstinenceCycle { start: 0.0, end: 50.0, group: 1, fraction: 0.2, away: 0.9, home: 0.3 }];
    s.measure = Window { from: 10.0, to: 50.0 };
    s.targets = vec![Target { statistic: Statistic::SrBirth, group: Some(1), from: 10.0, to: 50.0, value: 35.0, weight: 1.0 }];
    s.calibration = Some(CalibrationSpec {
        free: vec![free("config.reproduction.abstinence.beta", 0.0, 6.0)],
        budget: 40,
        replicates: 4,
        tolerance: 5.0,
        ftol: 1e-2,
    });
    s
}

pub fn comfort_parthenogenesis() -> Scenario {
    let mut c = peace_config(30.0);
    c.environment.harshness = Schedule::constant(0.02);
    c.reproduction.preconception.comfort_collapse = true;
    let mut s = Scenario::new("comfort_parthenogenesis", c);
    s.mode = Mode::Plant;
    s.description = "Sustained comfort below the threshold: sons all but vanish.".into();
    s.measure = Window { from: 5.0, to: 30.0 };
    s.targets = vec![sr_target(5.0, 30.0, 0.0, 1.0)];
    s
}

pub fn ww1_double_dip() -> Scenario {
    let mut c = peace_config(10.0);
    c.environment.harshness = Schedule::from_pairs(&[(0.0, 0.4), (0.5, 0.5), (4.5, 0.6), (9.0, 0.4)]);
    c.environment.nutrition = Schedule::from_pairs(&[(0.0, 1.0), (2.2, 0.3), (3.0, 0.9), (7.2, 0.3), (8.0, 0.9)]);
    let mut s = Scenario::new("ww1_double_dip", c);
    s.description = "Two war and famine cycles: high, low, high again, low again.".into();
    s.events = vec![
        Event::Draft { start: 0.5, end: 4.0, q_threshold: 0.75, fraction: 0.6, availability: 0.05 },
        Event::Draft { start: 4.5, end: 7.0, q_threshold: 0.75, fraction: 0.6, availability: 0.05 },
    ];
    s.measure = Window { from: 0.0, to: 10.0 };
    s
}

pub fn tracking_race() -> Scenario {
    let mut s = Scenario::new("tracking_race", peace_config(0.0));
    s.mode = Mode::Tracking;
    s.description = "Sexual versus asexual populations following a drifting optimum.".into();
    s.measure = Window { from: 0.0, to: RaceConfig::default().horizon };
    s.race = Some(RaceSpec { config: RaceConfig::default(), asexual: None, drifts: vec![0.0, DRIFT_BAND[0], DRIFT_BAND[1], DRIFT_BAND[2], 1.0], replicates: 200 });
    s
}

pub fn builtin(name: &str) -> Result<Scenario> {
    Ok(match name {
        "baseline_peace" => baseline_peace(),
        "war_draft" => war_draft(),
        "blockade" => blockade(),
        "mountain_abstinence" => mountain_abstinence(),
        "comfort_parthenogenesis" => comfort_parthenogenesis(),
        "ww1_double_dip" => ww1_double_dip(),
        "tracking_race" => tracking_race(),
        _ => return Err(Error::UnknownScenario { name: name.to_string(), available: BUILTINS.join(", ") }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_validates() {
        for name in BUILTINS {
            builtin(name).unwrap().validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn unknown_lists_catalog() {
        let e = builtin("nope").unwrap_err().to_string();
        assert!(e.contains("baseline_peace") && e.contains("tracking_race"), "{e}");
    }

    #[test]
    fn empty_overrides_echo_builtin() {
        for name in BUILTINS {
            let s = super::super::schema::load_scenario(&format!("base = \"{name}\"\n")).unwrap();
            assert_eq!(s, builtin(name).unwrap());
        }
    }
}
