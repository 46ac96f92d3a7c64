//! Bounded Nelder–Mead fitting of scenario parameters to target series.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::{get_param, set_param};
use super::schema::{CalibrationSpec, Scenario, Statistic};
use crate::engine::{run, seeds_from, Trajectory};
use crate::error::{config, Result};

/// Objective value given to points whose runs fail or go extinct.
pub const PENALTY: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedParam {
    pub name: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub statistic: Statistic,
    pub group: Option<u8>,
    pub from: f64,
    pub to: f64,
    pub weight: f64,
    pub target: f64,
    pub value: Option<f64>,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub scenario: String,
    pub seed: u64,
    pub budget: usize,
    pub evaluations: usize,
    /// Evaluations that failed or went extinct and were scored `PENALTY`.
    pub failures: usize,
    pub params: Vec<FittedParam>,
    pub objective: f64,
    pub residuals: Vec<Residual>,
    /// Every weighted residual within the calibration tolerance.
    pub feasible: bool,
}

impl CalibrationReport {
    /// The scenario with the fitted values written in.
    pub fn apply(&self, scenario: &Scenario) -> Result<Scenario> {
        let mut s = scenario.clone();
        for p in &self.params {
            s = set_param(&s, &p.name, p.value)?;
        }
        Ok(s)
    }
}

/// Replicate means of every target statistic, `None` where undefined in
/// all replicates. Also reports whether any replicate went extinct.
pub fn target_means(scenario: &Scenario, seeds: &[u64]) -> Result<(Vec<Option<f64>>, bool)> {
    let runs: Vec<Trajectory> = seeds.par_iter().map(|&s| run(&scenario.config, &scenario.events, s)).collect::<Result<_>>()?;
    let extinct = runs.iter().any(|t| t.extinct);
    let means = scenario
        .targets
        .iter()
        .map(|target| {
            let v: Vec<f64> = runs.iter().filter_map(|t| target.evaluate(t)).collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect();
    Ok((means, extinct))
}

struct Problem<'a> {
    scenario: &'a Scenario,
    spec: &'a CalibrationSpec,
    seeds: Vec<u64>,
    cache: HashMap<Vec<u64>, f64>,
    evaluations: usize,
    failures: usize,
}

impl Problem<'_> {
    fn point(&self, u: &[f64]) -> Vec<f64> {
        self.spec.free.iter().zip(u).map(|(p, &x)| p.lower + (p.upper - p.lower) * x.clamp(0.0, 1.0)).collect()
    }

    fn scenario_at(&self, x: &[f64]) -> Result<Scenario> {
        let mut s = self.scenario.clone();
        for (p, &v) in self.spec.free.iter().zip(x) {
            s = set_param(&s, &p.name, v)?;
        }
        Ok(s)
    }

    fn objective_of(&self, means: &[Option<f64>]) -> Option<f64> {
        let mut f = 0.0;
        for (t, m) in self.scenario.targets.iter().zip(means) {
            f += t.weight * (m.as_ref()? - t.value).powi(2);
        }
        Some(f)
    }

    fn eval(&mut self, u: &[f64]) -> f64 {
        let key: Vec<u64> = u.iter().map(|x| x.clamp(0.0, 1.0).to_bits()).collect();
        if let Some(&f) = self.cache.get(&key) {
            return f;
        }
        self.evaluations += 1;
        let x = self.point(u);
        let f = self
            .scenario_at(&x)
            .and_then(|s| s.validate().map(|_| s))
            .and_then(|s| target_means(&s, &self.seeds))
            .ok()
            .and_then(|(means, extinct)| if extinct { None } else { self.objective_of(&means) });
        let f = match f {
            Some(f) => f,
            None => {
                self.failures += 1;
                PENALTY
            }
        };
        self.cache.insert(key, f);
        f
    }

    fn exhausted(&self) -> bool {
        self.evaluations >= self.spec.budget
    }
}

/// Fit the scenario's free parameters to its targets. Every evaluation uses
/// the same replicate seeds, so the objective is deterministic given `seed`.
pub fn calibrate(scenario: &Scenario, seed: u64) -> Result<CalibrationReport> {
    scenario.validate()?;
    let Some(spec) = scenario.calibration.as_ref() else {
        return config(format!("scenario `{}` has no calibration section", scenario.name));
    };
    if scenario.targets.is_empty() {
        return config(format!("scenario `{}` has no targets to calibrate against", scenario.name));
    }
    let d = spec.free.len();
    let mut pb = Problem { scenario, spec, seeds: seeds_from(seed, spec.replicates), cache: HashMap::new(), evaluations: 0, failures: 0 };

    // start from the scenario's own values, clamped into the box
    let mut start: Vec<f64> = Vec::with_capacity(d);
    for p in &spec.free {
        let v = get_param(scenario, &p.name)?;
        start.push(((v - p.lower) / (p.upper - p.lower)).clamp(0.0, 1.0));
    }
    let mut best_u = start.clone();
    let mut best_f = pb.eval(&start);
    let mut step = 0.25;
    while !pb.exhausted() && best_f > 0.0 && d > 0 {
        let (u, f) = nelder_mead(&mut pb, &best_u, best_f, step);
        let improved = f < best_f - spec.ftol;
        if f < best_f {
            best_u = u;
            best_f = f;
        }
        if !improved {
            if step < 0.02 {
                break;
            }
            step /= 2.0;
        }
    }

    let x = pb.point(&best_u);
    let fitted = pb.scenario_at(&x)?;
    let (means, _) = target_means(&fitted, &pb.seeds)?;
    let residuals: Vec<Residual> = scenario
        .targets
        .iter()
        .zip(&means)
        .map(|(t, m)| Residual {
            statistic: t.statistic,
            group: t.group,
            from: t.from,
            to: t.to,
            weight: t.weight,
            target: t.value,
            value: *m,
            residual: m.map(|m| m - t.value),
        })
        .collect();
    let feasible = best_f < PENALTY && residuals.iter().filter(|r| r.weight > 0.0).all(|r| r.residual.is_some_and(|e| e.abs() <= spec.tolerance));
    Ok(CalibrationReport {
        scenario: scenario.name.clone(),
        seed,
        budget: spec.budget,
        evaluations: pb.evaluations,
        failures: pb.failures,
        params: spec.free.iter().zip(&x).map(|(p, &v)| FittedParam { name: p.name.clone(), value: v, lower: p.lower, upper: p.upper }).collect(),
        objective: best_f,
        residuals,
        feasible,
    })
}

/// One Nelder–Mead descent in the unit cube; points are clamped into the box.
fn nelder_mead(pb: &mut Problem, start: &[f64], f_start: f64, step: f64) -> (Vec<f64>, f64) {
    let d = start.len();
    let clamp = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(|x| x.clamp(0.0, 1.0)).collect() };
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(start.to_vec(), f_start)];
    for i in 0..d {
        let mut v = start.to_vec();
        v[i] = if v[i] + step <= 1.0 { v[i] + step } else { v[i] - step };
        let f = pb.eval(&v);
        simplex.push((v, f));
    }
    let ftol = pb.spec.ftol;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[d].1 - simplex[0].1;
        let size = simplex.iter().skip(1).map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)).fold(0.0, f64::max);
        if pb.exhausted() || spread <= ftol || size < 1e-4 || simplex[0].1 == 0.0 {
            break;
        }
        let centroid: Vec<f64> = (0..d).map(|k| simplex[..d].iter().map(|(v, _)| v[k]).sum::<f64>() / d as f64).collect();
        let worst = simplex[d].clone();
        let along = |t: f64| clamp(centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect());
        let xr = along(1.0);
        let fr = pb.eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = pb.eval(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = along(0.5);
                let f = pb.eval(&x);
                (x, f)
            } else {
                let x = along(-0.5);
                let f = pb.eval(&x);
                (x, f)
            };
            if fc < worst.1.min(fr) {
                simplex[d] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    s.0 = best.iter().zip(&s.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
                    s.1 = pb.eval(&s.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}
