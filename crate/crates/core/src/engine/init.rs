use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::sim::{Agent, NONE};
use crate::config::{AgeDistribution, SimConfig};
use crate::demography::cohort::cohort_solve;
use crate::environment::Schedule;
use crate::error::Result;
use crate::model::{QuantileTable, Sex};

fn exp_clock(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln()
}

/// Cumulative weights, searched with one uniform.
struct Table {
    cum: Vec<f64>,
}

impl Table {
    fn new(weights: impl Iterator<Item = f64>) -> Self {
        let mut acc = 0.0;
        let cum = weights
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Self { cum }
    }

    fn total(&self) -> f64 {
        *self.cum.last().unwrap_or(&0.0)
    }

    fn pick(&self, u: f64) -> usize {
        let x = u * self.total();
        self.cum.partition_point(|&c| c <= x).min(self.cum.len() - 1)
    }
}

/// Build the population present at t = 0. Ages are whole steps since
/// conception; fetuses are assigned to random eligible women.
pub(crate) fn initial_population(cfg: &SimConfig, quantiles: &[QuantileTable; 2], rng: &mut ChaCha8Rng) -> Result<Vec<Agent>> {
    let init = &cfg.initial;
    let max_steps = ((init.max_age / cfg.dt).floor() as usize).max(1);
    let gsteps = cfg.gestation_steps();
    let pm = cfg.initial_male_share();
    let mut agents = Vec::with_capacity(init.size);

    match init.age_distribution {
        AgeDistribution::Stationary => {
            // life table of the conditions in force at t = 0
            let mut c = cfg.clone();
            c.environment.harshness = Schedule::constant(cfg.environment.harshness.at(0.0));
            c.environment.nutrition = Schedule::constant(cfg.environment.nutrition.at(0.0));
            c.environment.drift.rate = 0.0;
            c.environment.drift.diffusion = 0.0;
            let table = cohort_solve(&c, init.sr_conception, &cfg.natal_quality)?;
            let by_age = |sex: Sex| {
                let l = if sex.is_male() { &table.l_male } else { &table.l_female };
                Table::new(l[..max_steps].iter().copied())
            };
            let ages = [by_age(Sex::Male), by_age(Sex::Female)];
            let share_m = pm * ages[0].total() / (pm * ages[0].total() + (1.0 - pm) * ages[1].total());
            let mut by_stratum: [Vec<Option<Table>>; 2] = [(0..max_steps).map(|_| None).collect(), (0..max_steps).map(|_| None).collect()];
            for id in 0..init.size {
                let sex = if rng.random::<f64>() < share_m { Sex::Male } else { Sex::Female };
                let s = if sex.is_male() { 0 } else { 1 };
                let k = ages[s].pick(rng.random());
                let strata = table.strata(sex);
                let st = by_stratum[s][k].get_or_insert_with(|| Table::new(strata.iter().map(|st| st.survival[k])));
                let j = st.pick(rng.random());
                let u = (j as f64 + rng.random::<f64>()) / strata.len() as f64;
                let q = quantiles[s].quantile(u.min(1.0 - 1e-12));
                let threshold = exp_clock(rng);
                agents.push(Agent::new(id as u64, sex, -(k as i64), q, threshold));
            }
        }
        AgeDistribution::Uniform => {
            let samplers = [cfg.natal_quality.male.sampler()?, cfg.natal_quality.female.sampler()?];
            for id in 0..init.size {
                let sex = if rng.random::<f64>() < pm { Sex::Male } else { Sex::Female };
                let s = if sex.is_male() { 0 } else { 1 };
                let k = rng.random_range(0..max_steps);
                let q: f64 = rng.sample(samplers[s]);
                let threshold = exp_clock(rng);
                agents.push(Agent::new(id as u64, sex, -(k as i64), q.clamp(1e-6, 1.0), threshold));
            }
        }
    }

    for a in agents.iter_mut() {
        a.in_utero = -a.conceived_step < gsteps;
    }

    let fw = cfg.reproduction.pairing.female_window;
    let mut mothers: Vec<usize> = agents
        .iter()
        .enumerate()
        .filter(|(_, a)| !a.in_utero && a.sex == Sex::Female && fw.contains(-a.conceived_step as f64 * cfg.dt))
        .map(|(i, _)| i)
        .collect();
    let fetuses: Vec<usize> = agents.iter().enumerate().filter(|(_, a)| a.in_utero).map(|(i, _)| i).collect();
    for f in fetuses {
        if mothers.is_empty() {
            break;
        }
        let pick = rng.random_range(0..mothers.len());
        let m = mothers.swap_remove(pick);
        agents[f].mother = m as u32;
        agents[f].mother_id = agents[m].id;
        agents[m].pregnant = true;
    }
    debug_assert!(agents.iter().all(|a| a.partner == NONE));
    Ok(agents)
}
