//! Populations tracking a drifting optimum, with and without sexes.
//!
//! Every individual carries a scalar genotype `x`; its death rate is
//! `b · (1 + |x − x*|)^γ`. Asexual individuals bud clones at rate `r`.
//! In the sexual arm females give birth at rate `2r`, so both arms renew at
//! the same per-capita rate, and each father is drawn with weight
//! proportional to his fitness rank among mature males. Offspring inherit
//! a random parent's genotype plus a normal mutation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trajectory::{Snapshot, Tallies, Trajectory};
use crate::demography::profile::{AgeGrid, SrProfile};
use crate::environment::{step_drift, DriftSpec, Environment, Schedule};
use crate::error::{config, Result};
use crate::rng::{replicate_seed, Streams};
use crate::stats::{proportion_ci, MeanCi};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Sexual,
    Asexual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaceConfig {
    pub mode: Mode,
    pub dt: f64,
    pub horizon: f64,
    pub record_interval: f64,
    pub initial_size: usize,
    pub carrying_capacity: f64,
    /// Per-capita births per year at low density.
    pub birth_rate: f64,
    /// Age at which individuals start to reproduce.
    pub maturity: f64,
    /// Death rate of a perfectly adapted individual.
    pub base_hazard: f64,
    pub fitness_exponent: f64,
    /// Standard deviation of the genotype change per birth.
    pub mutation: f64,
    pub drift: DriftSpec,
}

impl Default for RaceConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Sexual,
            dt: 0.05,
            horizon: 150.0,
            record_interval: 5.0,
            initial_size: 300,
            carrying_capacity: 300.0,
            birth_rate: 0.4,
            maturity: 1.0,
            base_hazard: 0.1,
            fitness_exponent: 2.0,
            mutation: 0.3,
            drift: DriftSpec::default(),
        }
    }
}

impl RaceConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("dt", self.dt),
            ("record_interval", self.record_interval),
            ("carrying_capacity", self.carrying_capacity),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return config(format!("race {name} must be > 0"));
            }
        }
        let nonneg = [
            ("horizon", self.horizon),
            ("birth_rate", self.birth_rate),
            ("maturity", self.maturity),
            ("base_hazard", self.base_hazard),
            ("fitness_exponent", self.fitness_exponent),
            ("mutation", self.mutation),
            ("drift.diffusion", self.drift.diffusion),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return config(format!("race {name} must be finite and >= 0"));
            }
        }
        if self.initial_size == 0 {
            return config("race initial_size must be positive");
        }
        Ok(())
    }

    /// Names of shared parameters on which two arms differ.
    pub fn mismatches(&self, other: &RaceConfig) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut check = |name, a: f64, b: f64| {
            if a != b {
                out.push(name);
            }
        };
        check("dt", self.dt, other.dt);
        check("horizon", self.horizon, other.horizon);
        check("record_interval", self.record_interval, other.record_interval);
        check("initial_size", self.initial_size as f64, other.initial_size as f64);
        check("carrying_capacity", self.carrying_capacity, other.carrying_capacity);
        check("birth_rate", self.birth_rate, other.birth_rate);
        check("maturity", self.maturity, other.maturity);
        check("base_hazard", self.base_hazard, other.base_hazard);
        check("fitness_exponent", self.fitness_exponent, other.fitness_exponent);
        check("mutation", self.mutation, other.mutation);
        check("drift.rate", self.drift.rate, other.drift.rate);
        check("drift.diffusion", self.drift.diffusion, other.drift.diffusion);
        check("drift.initial", self.drift.initial, other.drift.initial);
        out
    }
}

#[derive(Debug, Clone)]
struct Member {
    x: f64,
    male: bool,
    born_step: i64,
    threshold: f64,
    cum_hazard: f64,
}

fn clock(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln()
}

/// Run one arm of the race from a population centred on the optimum.
pub fn run_asexual(cfg: &RaceConfig, seed: u64) -> Result<Trajectory> {
    if cfg.mode != Mode::Asexual {
        return config("run_asexual needs an asexual race configuration");
    }
    run_race_arm(cfg, seed)
}

pub fn run_race_arm(cfg: &RaceConfig, seed: u64) -> Result<Trajectory> {
    cfg.validate()?;
    let mut streams = Streams::new(seed);
    let mut env = Environment::new(Schedule::constant(0.0), Schedule::constant(1.0), cfg.drift, 0.0)?;
    let sexual = cfg.mode == Mode::Sexual;
    let maturity_steps = (cfg.maturity / cfg.dt).round() as i64;
    let grid = AgeGrid::new(vec![0.0, 1.0e6])?;

    let mut members: Vec<Member> = (0..cfg.initial_size)
        .map(|i| {
            let r = &mut streams.init;
            Member {
                x: cfg.drift.initial,
                male: sexual && i % 2 == 0,
                born_step: -(r.random_range(0..(20.0 / cfg.dt) as i64)),
                threshold: clock(r),
                cum_hazard: 0.0,
            }
        })
        .collect();
    let mut tallies = Tallies { initial: members.len() as u64, ..Tallies::default() };
    let mut snapshots = Vec::new();
    let mut births_iv = [0u64; 2];
    let mut deaths_iv = [0u64; 2];
    let record = |t: f64, span: f64, members: &[Member], opt: f64, births: [u64; 2], deaths: [u64; 2]| {
        let mut alive = [0u64; 2];
        for m in members {
            alive[if m.male { 0 } else { 1 }] += 1;
        }
        let mean = (!members.is_empty()).then(|| members.iter().map(|m| m.x).sum::<f64>() / members.len() as f64);
        Snapshot {
            time: t,
            alive,
            in_utero: [0; 2],
            profile: SrProfile::empty(grid.clone()),
            conceptions: births,
            births,
            births_by_group: vec![births],
            deaths,
            fetal_deaths: [0; 2],
            span,
            mean_genotype: mean,
            optimum: Some(opt),
        }
    };
    snapshots.push(record(0.0, 0.0, &members, env.state.optimum, [0; 2], [0; 2]));

    let steps = (cfg.horizon / cfg.dt).round() as i64;
    let every = (cfg.record_interval / cfg.dt).round().max(1.0) as i64;
    let mut extinction_time = None;
    let mut checks = 1u64;
    let mut last_record = 0i64;
    for step in 0..steps {
        let opt = env.state.optimum;
        // deaths
        members.retain_mut(|m| {
            let h = cfg.base_hazard * (1.0 + (m.x - opt).abs()).powf(cfg.fitness_exponent);
            m.cum_hazard += h * cfg.dt;
            if m.cum_hazard >= m.threshold {
                let s = if m.male { 0 } else { 1 };
                tallies.deaths[s] += 1;
                deaths_iv[s] += 1;
                false
            } else {
                true
            }
        });
        // births
        let n = members.len() as f64;
        let density = (cfg.carrying_capacity / n).min(1.0);
        let mature = |m: &Member| step - m.born_step >= maturity_steps;
        let mut fathers: Vec<(f64, usize)> = Vec::new();
        if sexual {
            fathers = members
                .iter()
                .enumerate()
                .filter(|(_, m)| m.male && mature(m))
                .map(|(i, m)| ((m.x - opt).abs(), i))
                .collect();
            // rank 1 is the worst adapted; weights are 2 · rank / n
            fathers.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        }
        let cum_weights: Vec<f64> = (1..=fathers.len()).map(|r| (r * (r + 1) / 2) as f64).collect();
        let rate = if sexual { 2.0 * cfg.birth_rate } else { cfg.birth_rate } * density;
        let p = 1.0 - (-rate * cfg.dt).exp();
        let mut newborn = Vec::new();
        for m in members.iter() {
            if (sexual && m.male) || !mature(m) {
                continue;
            }
            let u: f64 = streams.conception.random();
            if u >= p {
                continue;
            }
            let parent_x = if sexual {
                let Some(&total) = cum_weights.last() else { continue };
                let w = streams.pairing.random::<f64>() * total;
                let r = cum_weights.partition_point(|&c| c <= w).min(fathers.len() - 1);
                let father = &members[fathers[r].1];
                if streams.inheritance.random::<bool>() { father.x } else { m.x }
            } else {
                m.x
            };
            let z: f64 = streams.inheritance.sample(StandardNormal);
            let male = sexual && streams.inheritance.random::<bool>();
            newborn.push(Member {
                x: parent_x + cfg.mutation * z,
                male,
                born_step: step + 1,
                threshold: clock(&mut streams.deaths),
                cum_hazard: 0.0,
            });
            let s = if male { 0 } else { 1 };
            tallies.conceived[s] += 1;
            tallies.born[s] += 1;
            births_iv[s] += 1;
        }
        members.extend(newborn);
        assert_eq!(members.len() as u64, tallies.expected_present(), "accounting identity violated in race");
        checks += 1;
        env = step_drift(&env, cfg.dt, &mut streams.environment)?;

        let males = members.iter().filter(|m| m.male).count();
        let gone = members.is_empty() || (sexual && (males == 0 || males == members.len()));
        let t = (step + 1) as f64 * cfg.dt;
        if gone {
            extinction_time = Some(t);
        }
        if (step + 1) % every == 0 || gone {
            let span = (step + 1 - last_record) as f64 * cfg.dt;
            snapshots.push(record(t, span, &members, env.state.optimum, births_iv, deaths_iv));
            births_iv = [0; 2];
            deaths_iv = [0; 2];
            last_record = step + 1;
        }
        if gone {
            break;
        }
    }
    Ok(Trajectory {
        seed,
        dt: cfg.dt,
        gestation: 0.0,
        snapshots,
        births: Vec::new(),
        extinct: extinction_time.is_some(),
        extinction_time,
        tallies,
        conservation_checks: checks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceResult {
    pub drift: f64,
    pub replicates: usize,
    pub extinct_sexual: usize,
    pub extinct_asexual: usize,
    pub p_ext_sexual: MeanCi,
    pub p_ext_asexual: MeanCi,
    /// Sexual extinction lower than asexual with non-overlapping intervals.
    pub sexual_advantage: bool,
}

/// Extinction probabilities of both arms at drift rate `drift`.
pub fn tracking_race(sexual: &RaceConfig, asexual: &RaceConfig, drift: f64, replicates: usize, seed: u64) -> Result<RaceResult> {
    if sexual.mode != Mode::Sexual || asexual.mode != Mode::Asexual {
        return config("tracking race needs one sexual and one asexual arm");
    }
    let diff = sexual.mismatches(asexual);
    if !diff.is_empty() {
        return config(format!("race arms must share parameters; they differ in: {}", diff.join(", ")));
    }
    if replicates == 0 {
        return config("tracking race needs at least one replicate");
    }
    let arm = |base: &RaceConfig| -> Result<usize> {
        let mut c = base.clone();
        c.drift.rate = drift;
        let outcomes = (0..replicates as u64)
            .into_par_iter()
            .map(|i| run_race_arm(&c, replicate_seed(seed, i)).map(|t| t.extinct))
            .collect::<Result<Vec<bool>>>()?;
        Ok(outcomes.into_iter().filter(|&e| e).count())
    };
    let es = arm(sexual)?;
    let ea = arm(asexual)?;
    let ps = proportion_ci(es as u64, replicates as u64).expect("replicates > 0");
    let pa = proportion_ci(ea as u64, replicates as u64).expect("replicates > 0");
    Ok(RaceResult {
        drift,
        replicates,
        extinct_sexual: es,
        extinct_asexual: ea,
        p_ext_sexual: ps,
        p_ext_asexual: pa,
        sexual_advantage: ps.upper() < pa.lower(),
    })
}
