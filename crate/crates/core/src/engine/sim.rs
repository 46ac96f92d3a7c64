//! The fixed-step simulation loop for a two-sex population.

use rand::Rng;

use super::events::{validate_events, Event, MAX_GROUPS};
use super::init::initial_population;
use super::trajectory::{Snapshot, Tallies, Trajectory};
use crate::config::SimConfig;
use crate::demography::birth_order::BirthRecord;
use crate::demography::hazard::{frailty, harshness_factor};
use crate::demography::profile::{AgeGrid, SrProfile};
use crate::environment::{perceived_from, step_drift, Environment};
use crate::error::Result;
use crate::model::{quality_at_age, Individual, LifeState, QuantileTable, Sex};
use crate::reproduction::{draft_filter, maternal_multiplier, pair, preconception_unchecked, Candidate, PaternityModel};
use crate::rng::Streams;

pub(crate) const NONE: u32 = u32::MAX;
const NO_ID: u64 = u64::MAX;
const QUANTILE_POINTS: usize = 8192;

#[inline]
pub(crate) fn sex_index(sex: Sex) -> usize {
    match sex {
        Sex::Male => 0,
        Sex::Female => 1,
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Agent {
    pub id: u64,
    pub sex: Sex,
    pub conceived_step: i64,
    pub q: f64,
    /// `Q^-κ`, cached when quality is constant over life.
    pub frailty: f64,
    /// Exponential clock: the individual dies once its integrated hazard reaches this.
    pub threshold: f64,
    pub cum_hazard: f64,
    pub in_utero: bool,
    pub dead: bool,
    pub father_id: u64,
    pub mother_id: u64,
    pub father_birth_order: u32,
    pub father_group: u8,
    pub father_native: bool,
    pub partner: u32,
    /// Index of the carrying mother, for fetuses.
    pub mother: u32,
    pub pregnant: bool,
    pub conceptions: u32,
    pub abstinence: f64,
    /// Conceived during the run.
    pub native: bool,
    pub group: u8,
    pub drafted: bool,
    pub screened: bool,
}

impl Agent {
    pub(crate) fn new(id: u64, sex: Sex, conceived_step: i64, q: f64, threshold: f64) -> Self {
        Self {
            id,
            sex,
            conceived_step,
            q,
            frailty: 1.0,
            threshold,
            cum_hazard: 0.0,
            in_utero: false,
            dead: false,
            father_id: NO_ID,
            mother_id: NO_ID,
            father_birth_order: 1,
            father_group: 0,
            father_native: false,
            partner: NONE,
            mother: NONE,
            pregnant: false,
            conceptions: 0,
            abstinence: 0.0,
            native: false,
            group: 0,
            drafted: false,
            screened: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Interval {
    conceptions: [u64; 2],
    births: [u64; 2],
    births_by_group: [[u64; 2]; MAX_GROUPS],
    deaths: [u64; 2],
    fetal_deaths: [u64; 2],
}

/// One replicate of the population, advanced step by step.
pub struct Simulation {
    cfg: SimConfig,
    events: Vec<Event>,
    env: Environment,
    agents: Vec<Agent>,
    step: i64,
    next_id: u64,
    streams: Streams,
    seed: u64,
    tallies: Tallies,
    interval: Interval,
    /// Baseline hazard times harshness factor, by sex and age in steps.
    rates: [Vec<f64>; 2],
    rates_key: (f64, f64),
    quantiles: [QuantileTable; 2],
    stream_acc: f64,
    comfort_time: f64,
    extinction_time: Option<f64>,
    births: Vec<BirthRecord>,
    snapshots: Vec<Snapshot>,
    grid: AgeGrid,
    constant_quality: bool,
    conservation_checks: u64,
    last_record_step: i64,
}

impl Simulation {
    pub fn new(cfg: &SimConfig, events: &[Event], seed: u64) -> Result<Self> {
        cfg.validate()?;
        validate_events(events)?;
        let mut streams = Streams::new(seed);
        let env = cfg.environment.build()?;
        let quantiles = [
            QuantileTable::new(&cfg.natal_quality.male, QUANTILE_POINTS)?,
            QuantileTable::new(&cfg.natal_quality.female, QUANTILE_POINTS)?,
        ];
        let mut agents = initial_population(cfg, &quantiles, &mut streams.init)?;
        let constant_quality = cfg.quality.is_constant();
        for a in agents.iter_mut() {
            a.frailty = frailty(a.q, cfg.hazard.for_sex(a.sex).quality_exponent);
        }
        let grid = AgeGrid::with_fetal_bin(cfg.gestation, cfg.age_bin_width, cfg.max_age)?;
        let n_steps = (cfg.max_age / cfg.dt).ceil() as usize + 1;
        let next_id = agents.len() as u64;
        let tallies = Tallies { initial: agents.len() as u64, ..Tallies::default() };
        agents.shrink_to_fit();
        let mut sim = Self {
            cfg: cfg.clone(),
            events: events.to_vec(),
            env,
            agents,
            step: 0,
            next_id,
            streams,
            seed,
            tallies,
            interval: Interval::default(),
            rates: [vec![0.0; n_steps], vec![0.0; n_steps]],
            rates_key: (f64::NAN, f64::NAN),
            quantiles,
            stream_acc: 0.0,
            comfort_time: 0.0,
            extinction_time: None,
            births: Vec::new(),
            snapshots: Vec::new(),
            grid,
            constant_quality,
            conservation_checks: 0,
            last_record_step: 0,
        };
        sim.check_conservation();
        sim.record(0.0);
        Ok(sim)
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.cfg.dt
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }

    pub fn tallies(&self) -> &Tallies {
        &self.tallies
    }

    pub fn is_extinct(&self) -> bool {
        self.extinction_time.is_some()
    }

    /// Current members as plain records.
    pub fn individuals(&self) -> Vec<Individual> {
        let dt = self.cfg.dt;
        self.agents
            .iter()
            .map(|a| Individual {
                id: a.id,
                sex: a.sex,
                t_conceived: a.conceived_step as f64 * dt,
                q_genetic: a.q,
                father_birth_order: a.father_birth_order,
                state: if a.in_utero { LifeState::InUtero } else { LifeState::Alive },
                father_id: (a.father_id != NO_ID).then_some(a.father_id),
                mother_id: (a.mother_id != NO_ID).then_some(a.mother_id),
            })
            .collect()
    }

    fn refresh_rates(&mut self) {
        let h = self.env.state.harshness;
        let n = self.env.state.nutrition;
        if self.rates_key == (h, n) {
            return;
        }
        self.rates_key = (h, n);
        let gsteps = self.cfg.gestation_steps() as usize;
        let maternal = maternal_multiplier(n, &self.cfg.reproduction.maternal);
        for sex in [Sex::Male, Sex::Female] {
            let hp = self.cfg.hazard.for_sex(sex);
            let hf = harshness_factor(h, hp.harshness_exponent);
            let fetal = hp.fetal * if sex.is_male() { maternal } else { 1.0 };
            let table = &mut self.rates[sex_index(sex)];
            for (k, r) in table.iter_mut().enumerate() {
                let base = if k < gsteps { fetal } else { hp.band_rate(k as f64 * self.cfg.dt) };
                *r = base * hf;
            }
        }
    }

    #[inline]
    fn current_quality(&self, a: &Agent, age_steps: i64) -> f64 {
        if self.constant_quality {
            a.q
        } else {
            quality_at_age(a.q, age_steps as f64 * self.cfg.dt, &self.cfg.quality).unwrap_or(a.q)
        }
    }

    #[inline]
    fn current_frailty(&self, a: &Agent, age_steps: i64) -> f64 {
        if self.constant_quality {
            a.frailty
        } else {
            frailty(self.current_quality(a, age_steps), self.cfg.hazard.for_sex(a.sex).quality_exponent)
        }
    }

    /// Advance one step of length `dt`.
    pub fn step(&mut self) -> Result<()> {
        if self.is_extinct() {
            self.step += 1;
            return Ok(());
        }
        let dt = self.cfg.dt;
        let t0 = self.time();
        let t1 = t0 + dt;
        self.env.set_time(t0);
        self.refresh_rates();
        self.mortality_and_births(t1);
        self.apply_events(t0);
        if self.cfg.reproduction.birth_stream.is_some() {
            self.birth_stream();
        } else {
            self.pair_and_conceive(t0)?;
        }
        self.compact();
        self.step += 1;
        if self.env.drift.rate != 0.0 || self.env.drift.diffusion != 0.0 {
            self.env = step_drift(&self.env, dt, &mut self.streams.environment)?;
        }
        self.env.set_time(t1);

        if !self.agents.iter().any(|a| !a.in_utero) {
            self.extinction_time = Some(t1);
        }
        let every = (self.cfg.record_interval / dt).round().max(1.0) as i64;
        if self.step % every == 0 || self.is_extinct() {
            let span = (self.step - self.last_record_step) as f64 * dt;
            self.record(span);
        }
        Ok(())
    }

    fn mortality_and_births(&mut self, t1: f64) {
        let dt = self.cfg.dt;
        let gsteps = self.cfg.gestation_steps();
        let last = self.rates[0].len() - 1;
        for i in 0..self.agents.len() {
            let a = &self.agents[i];
            let age = self.step - a.conceived_step;
            let s = sex_index(a.sex);
            let h = self.rates[s][(age as usize).min(last)] * self.current_frailty(a, age);
            let a = &mut self.agents[i];
            a.cum_hazard += h * dt;
            if a.cum_hazard >= a.threshold {
                a.dead = true;
                let partner = std::mem::replace(&mut a.partner, NONE);
                if a.in_utero {
                    let mother = a.mother;
                    self.tallies.fetal_deaths[s] += 1;
                    self.interval.fetal_deaths[s] += 1;
                    if mother != NONE {
                        self.agents[mother as usize].pregnant = false;
                    }
                } else {
                    self.tallies.deaths[s] += 1;
                    self.interval.deaths[s] += 1;
                }
                if partner != NONE {
                    self.agents[partner as usize].partner = NONE;
                }
                continue;
            }
            if a.in_utero && age + 1 >= gsteps {
                a.in_utero = false;
                let mother = std::mem::replace(&mut a.mother, NONE);
                let record = BirthRecord {
                    time: t1,
                    sex: a.sex,
                    father_birth_order: a.father_birth_order,
                    father_group: a.father_group,
                    father_native: a.father_native,
                };
                let g = a.father_group as usize;
                self.tallies.born[s] += 1;
                self.interval.births[s] += 1;
                self.interval.births_by_group[g][s] += 1;
                if self.cfg.record_births {
                    self.births.push(record);
                }
                if mother != NONE {
                    self.agents[mother as usize].pregnant = false;
                }
            }
        }
    }

    fn apply_events(&mut self, t0: f64) {
        if self.events.is_empty() {
            return;
        }
        let dt = self.cfg.dt;
        let window = self.cfg.reproduction.pairing.male_window;
        for e in 0..self.events.len() {
            let event = self.events[e].clone();
            let active = event.active(t0);
            let starting = active && !event.active(t0 - dt);
            let ending = !active && event.active(t0 - dt);
            match event {
                Event::Draft { q_threshold, fraction, .. } => {
                    if ending {
                        for a in self.agents.iter_mut() {
                            a.drafted = false;
                            a.screened = false;
                        }
                    }
                    if !active {
                        continue;
                    }
                    let mut pool = Vec::new();
                    let mut drafted_now = 0usize;
                    let mut eligible = 0usize;
                    for (i, a) in self.agents.iter().enumerate() {
                        if a.dead || a.in_utero || !a.sex.is_male() {
                            continue;
                        }
                        let age = self.step - a.conceived_step;
                        if !window.contains(age as f64 * dt) {
                            continue;
                        }
                        eligible += 1;
                        drafted_now += a.drafted as usize;
                        if !a.screened {
                            pool.push(Candidate { index: i, age: age as f64 * dt, quality: self.current_quality(a, age) });
                        }
                    }
                    if starting {
                        let (drafted, _) = draft_filter(&pool, q_threshold, fraction);
                        for i in drafted {
                            self.agents[i].drafted = true;
                        }
                    } else {
                        // later entrants are screened against the same threshold while the cap allows
                        let cap = (fraction * eligible as f64).round() as usize;
                        for c in pool.iter() {
                            if c.quality >= q_threshold && drafted_now < cap {
                                self.agents[c.index].drafted = true;
                                drafted_now += 1;
                            }
                        }
                    }
                    for c in pool {
                        self.agents[c.index].screened = true;
                    }
                }
                Event::AbstinenceCycle { group, fraction, .. } => {
                    if ending {
                        for a in self.agents.iter_mut() {
                            if a.group == group {
                                a.group = 0;
                            }
                        }
                    }
                    if !active {
                        continue;
                    }
                    let rng = &mut self.streams.events;
                    for a in self.agents.iter_mut() {
                        if a.dead || !a.sex.is_male() || a.group != 0 {
                            continue;
                        }
                        // existing males are drawn once at the start, newborns at birth
                        let newborn = !a.in_utero && self.step + 1 - a.conceived_step == self.cfg.gestation_steps();
                        if (starting && !a.in_utero) || newborn {
                            if rng.random::<f64>() < fraction {
                                a.group = group;
                            }
                        }
                    }
                }
            }
        }
    }

    fn away(&self, a: &Agent, t0: f64) -> bool {
        a.group != 0
            && self.events.iter().any(|e| matches!(*e, Event::AbstinenceCycle { group, .. } if group == a.group) && e.away_at(t0))
    }

    fn availability(&self, a: &Agent, t0: f64) -> f64 {
        if self.away(a, t0) {
            return 0.0;
        }
        if a.drafted {
            for e in &self.events {
                if let Event::Draft { availability, .. } = *e {
                    if e.active(t0) {
                        return availability;
                    }
                }
            }
        }
        1.0
    }

    fn new_child(&mut self, sex_u: f64, p_male: f64) -> Agent {
        let sex = if sex_u < p_male { Sex::Male } else { Sex::Female };
        let u: f64 = self.streams.inheritance.random();
        let q = self.quantiles[sex_index(sex)].quantile(u);
        let e: f64 = self.streams.deaths.random();
        let threshold = -(1.0 - e).ln();
        let mut child = Agent::new(self.next_id, sex, self.step + 1, q, threshold);
        self.next_id += 1;
        child.in_utero = true;
        child.native = true;
        child.frailty = frailty(q, self.cfg.hazard.for_sex(sex).quality_exponent);
        let s = sex_index(sex);
        self.tallies.conceived[s] += 1;
        self.interval.conceptions[s] += 1;
        child
    }

    fn birth_stream(&mut self) {
        let stream = self.cfg.reproduction.birth_stream.expect("birth stream mode");
        self.stream_acc += stream.rate * self.cfg.dt;
        let n = self.stream_acc.floor();
        self.stream_acc -= n;
        for _ in 0..n as u64 {
            let u: f64 = self.streams.inheritance.random();
            let child = self.new_child(u, stream.p_male);
            self.agents.push(child);
        }
    }

    fn pair_and_conceive(&mut self, t0: f64) -> Result<()> {
        let dt = self.cfg.dt;
        let rp = self.cfg.reproduction.clone();
        let mw = rp.pairing.male_window;
        let fw = rp.pairing.female_window;

        let sensed = self.env.sensed_harshness();
        if sensed < rp.preconception.h_comf {
            self.comfort_time += dt;
        } else {
            self.comfort_time = 0.0;
        }
        let comfort = rp.preconception.comfort_collapse && self.comfort_time >= rp.preconception.comfort_duration;

        let mut males = Vec::new();
        let mut females = Vec::new();
        let mut alive = 0usize;
        for i in 0..self.agents.len() {
            let a = &self.agents[i];
            if a.dead || a.in_utero {
                continue;
            }
            alive += 1;
            let age_steps = self.step - a.conceived_step;
            let age = age_steps as f64 * dt;
            let eligible = match a.sex {
                Sex::Male => mw.contains(age),
                Sex::Female => fw.contains(age),
            };
            if !eligible && a.partner != NONE {
                let p = a.partner as usize;
                self.agents[p].partner = NONE;
                self.agents[i].partner = NONE;
            }
            let a = &self.agents[i];
            if a.sex.is_male() && age >= mw.min {
                let away = self.away(a, t0);
                if away || a.drafted || (eligible && a.partner == NONE) {
                    self.agents[i].abstinence += dt;
                }
            }
            let a = &self.agents[i];
            if eligible && a.partner == NONE {
                let c = Candidate { index: i, age, quality: self.current_quality(a, age_steps) };
                if a.sex.is_male() {
                    males.push(c);
                } else {
                    females.push(c);
                }
            }
        }
        for (m, f) in pair(&males, &females, &rp.pairing, &mut self.streams.pairing) {
            self.agents[m].partner = f as u32;
            self.agents[f].partner = m as u32;
        }

        let density = if alive as f64 > rp.carrying_capacity { rp.carrying_capacity / alive as f64 } else { 1.0 };
        let base = rp.pairing.conception_rate * density;
        let ranks = self.male_ranks(&rp.paternity);
        let mut children = Vec::new();
        for i in 0..self.agents.len() {
            let f = &self.agents[i];
            if f.dead || f.in_utero || f.sex.is_male() || f.partner == NONE {
                continue;
            }
            let m = f.partner as usize;
            // one draw per pair per step keeps the stream aligned whatever the outcome
            let u: f64 = self.streams.conception.random();
            if f.pregnant {
                continue;
            }
            let father = &self.agents[m];
            let age_steps = self.step - father.conceived_step;
            let q = self.current_quality(father, age_steps);
            let rank = ranks.as_ref().map_or(1.0, |r| r[m]);
            let rate = base * rp.paternity.weight(q, rank) * self.availability(father, t0);
            if rate <= 0.0 || u >= 1.0 - (-rate * dt).exp() {
                continue;
            }
            let p_male = if comfort {
                rp.preconception.p_floor
            } else {
                let h = perceived_from(sensed, father.abstinence, &rp.abstinence);
                preconception_unchecked(q, h, &rp.preconception)
            };
            let (fid, forder, fgroup, fnative) = (father.id, father.conceptions + 1, father.group, father.native);
            let sex_u: f64 = self.streams.inheritance.random();
            let (fq, mq) = (father.q, self.agents[i].q);
            let mut child = self.new_child(sex_u, p_male);
            let hr = self.cfg.natal_quality.heritability;
            if hr > 0.0 {
                child.q = ((1.0 - hr) * child.q + hr * 0.5 * (fq + mq)).clamp(1e-6, 1.0);
                child.frailty = frailty(child.q, self.cfg.hazard.for_sex(child.sex).quality_exponent);
            }
            child.father_id = fid;
            child.mother_id = self.agents[i].id;
            child.father_birth_order = forder;
            child.father_group = fgroup;
            child.father_native = fnative;
            child.mother = i as u32;
            children.push(child);
            self.agents[i].pregnant = true;
            let father = &mut self.agents[m];
            father.conceptions += 1;
            father.abstinence = 0.0;
        }
        self.agents.extend(children);
        Ok(())
    }

    /// Fitness rank in `(0, 1]` of every eligible male, when the paternity model needs it.
    fn male_ranks(&self, model: &PaternityModel) -> Option<Vec<f64>> {
        if !matches!(model, PaternityModel::FitnessRank) {
            return None;
        }
        let mut idx: Vec<(f64, usize)> = self
            .agents
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.dead && !a.in_utero && a.sex.is_male())
            .map(|(i, a)| (self.current_quality(a, self.step - a.conceived_step), i))
            .collect();
        idx.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let n = idx.len() as f64;
        let mut ranks = vec![0.0; self.agents.len()];
        for (r, &(_, i)) in idx.iter().enumerate() {
            ranks[i] = (r + 1) as f64 / n;
        }
        Some(ranks)
    }

    fn compact(&mut self) {
        // fetuses die with their mothers
        for i in 0..self.agents.len() {
            let a = &self.agents[i];
            if a.in_utero && !a.dead && a.mother != NONE && self.agents[a.mother as usize].dead {
                let s = sex_index(a.sex);
                self.tallies.fetal_deaths[s] += 1;
                self.interval.fetal_deaths[s] += 1;
                self.agents[i].dead = true;
            }
        }
        let mut remap = vec![NONE; self.agents.len()];
        let mut k = 0u32;
        for (i, a) in self.agents.iter().enumerate() {
            if !a.dead {
                remap[i] = k;
                k += 1;
            }
        }
        self.agents.retain(|a| !a.dead);
        for a in self.agents.iter_mut() {
            if a.partner != NONE {
                a.partner = remap[a.partner as usize];
            }
            if a.mother != NONE {
                a.mother = remap[a.mother as usize];
            }
        }
        self.check_conservation();
    }

    fn check_conservation(&mut self) {
        let present = self.agents.len() as u64;
        assert_eq!(
            present,
            self.tallies.expected_present(),
            "accounting identity violated at step {}: {:?}",
            self.step,
            self.tallies
        );
        self.conservation_checks += 1;
    }

    fn record(&mut self, span: f64) {
        let t = self.time();
        let mut profile = SrProfile::empty(self.grid.clone());
        let mut alive = [0u64; 2];
        let mut in_utero = [0u64; 2];
        for a in &self.agents {
            let s = sex_index(a.sex);
            if a.in_utero {
                in_utero[s] += 1;
            } else {
                alive[s] += 1;
            }
            let age_steps = self.step - a.conceived_step;
            profile.add(a.sex, age_steps as f64 * self.cfg.dt, self.current_quality(a, age_steps));
        }
        let iv = std::mem::take(&mut self.interval);
        self.snapshots.push(Snapshot {
            time: t,
            alive,
            in_utero,
            profile,
            conceptions: iv.conceptions,
            births: iv.births,
            births_by_group: iv.births_by_group.to_vec(),
            deaths: iv.deaths,
            fetal_deaths: iv.fetal_deaths,
            span,
            mean_genotype: None,
            optimum: None,
        });
        self.last_record_step = self.step;
    }

    pub fn run_to(&mut self, horizon: f64) -> Result<()> {
        let steps = (horizon / self.cfg.dt).round() as i64;
        while self.step < steps && !self.is_extinct() {
            self.step()?;
        }
        Ok(())
    }

    pub fn into_trajectory(self) -> Trajectory {
        Trajectory {
            seed: self.seed,
            dt: self.cfg.dt,
            gestation: self.cfg.gestation,
            snapshots: self.snapshots,
            births: self.births,
            extinct: self.extinction_time.is_some(),
            extinction_time: self.extinction_time,
            tallies: self.tallies,
            conservation_checks: self.conservation_checks,
        }
    }
}

/// Run one replicate from t = 0 to the configured horizon.
pub fn run(cfg: &SimConfig, events: &[Event], seed: u64) -> Result<Trajectory> {
    let mut sim = Simulation::new(cfg, events, seed)?;
    sim.run_to(cfg.horizon)?;
    Ok(sim.into_trajectory())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{AgeDistribution, BirthStream};
    use crate::demography::hazard::{AgeBand, SexHazard};
    use crate::environment::Schedule;

    fn small(size: usize) -> SimConfig {
        let mut c = SimConfig::default();
        c.initial.size = size;
        c.reproduction.carrying_capacity = size as f64;
        c.horizon = 5.0;
        c
    }

    #[test]
    fn null_dynamics_leave_population_unchanged() {
        let mut c = small(500);
        for h in [&mut c.hazard.male, &mut c.hazard.female] {
            *h = SexHazard { bands: vec![AgeBand { start: 0.0, rate: 0.0 }], fetal: 0.0, harshness_exponent: 0.0, quality_exponent: 0.0 };
        }
        c.reproduction.pairing.conception_rate = 0.0;
        c.initial.age_distribution = AgeDistribution::Uniform;
        c.initial.max_age = 30.0;
        let mut sim = Simulation::new(&c, &[], 1).unwrap();
        let before: Vec<u64> = sim.individuals().iter().map(|i| i.id).collect();
        let fetuses = sim.individuals().iter().filter(|i| i.state == LifeState::InUtero).count();
        sim.run_to(2.0).unwrap();
        let after: Vec<u64> = sim.individuals().iter().map(|i| i.id).collect();
        assert_eq!(before, after);
        assert_eq!(sim.tallies().born.iter().sum::<u64>() as usize, fetuses);
        assert!((sim.time() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn horizon_zero_gives_initial_snapshot_only() {
        let mut c = small(300);
        c.horizon = 0.0;
        let t = run(&c, &[], 4).unwrap();
        assert_eq!(t.snapshots.len(), 1);
        assert_eq!(t.snapshots[0].time, 0.0);
    }

    #[test]
    fn same_seed_same_trajectory() {
        let c = small(2000);
        let a = serde_json::to_string(&run(&c, &[], 11).unwrap()).unwrap();
        let b = serde_json::to_string(&run(&c, &[], 11).unwrap()).unwrap();
        assert_eq!(a, b);
        let d = serde_json::to_string(&run(&c, &[], 12).unwrap()).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn conservation_checked_every_step() {
        let c = small(2000);
        let t = run(&c, &[], 5).unwrap();
        let steps = (c.horizon / c.dt).round() as u64;
        // once at construction plus once per step
        assert_eq!(t.conservation_checks, steps + 1);
        let present = t.last().population() + t.last().in_utero.iter().sum::<u64>();
        assert_eq!(present, t.tallies.expected_present());
    }

    #[test]
    fn one_step_fetal_death_probability() {
        let mut c = small(1_000_000);
        c.initial.age_distribution = AgeDistribution::Uniform;
        c.initial.max_age = 0.5;
        c.hazard.male.quality_exponent = 0.0;
        c.hazard.male.harshness_exponent = 0.0;
        c.hazard.female.harshness_exponent = 0.0;
        c.environment.nutrition = Schedule::constant(0.3);
        c.reproduction.pairing.conception_rate = 0.0;
        let mut sim = Simulation::new(&c, &[], 21).unwrap();
        let males = sim.individuals().iter().filter(|i| i.sex == Sex::Male).count() as f64;
        sim.step().unwrap();
        let dead = sim.tallies().fetal_deaths[0] as f64;
        let m = maternal_multiplier(0.3, &c.reproduction.maternal);
        let p = 1.0 - (-c.hazard.male.fetal * m * c.dt).exp();
        let se = (p * (1.0 - p) / males).sqrt();
        assert!(((dead / males) - p).abs() < 3.0 * se, "observed {} expected {p}", dead / males);
    }

    #[test]
    fn birth_stream_matches_rate() {
        let mut c = small(1);
        c.reproduction.birth_stream = Some(BirthStream { rate: 200.0, p_male: 0.5 });
        c.horizon = 10.0;
        let t = run(&c, &[], 2).unwrap();
        let conceived: u64 = t.tallies.conceived.iter().sum();
        assert_eq!(conceived, 2000);
    }

    #[test]
    fn no_dead_counted_in_profiles() {
        let c = small(3000);
        let t = run(&c, &[], 8).unwrap();
        for s in &t.snapshots {
            let counted: u64 = s.profile.males.iter().chain(s.profile.females.iter()).sum();
            assert_eq!(counted, s.population() + s.in_utero.iter().sum::<u64>());
        }
    }
}
