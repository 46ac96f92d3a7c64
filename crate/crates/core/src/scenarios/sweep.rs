//! One-parameter sweeps: the same replicate seeds in every cell.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::{get_param, set_param};
use super::schema::{evaluate, Scenario, Statistic};
use crate::engine::{run_replicates, seeds_from};
use crate::error::{config, Result};
use crate::stats::{mean_ci, MeanCi};

/// One grid cell: the parameter value and its summary, or why it failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub sr_birth: Option<MeanCi>,
    pub parity_age: Option<MeanCi>,
    pub quality_parity_age: Option<MeanCi>,
    pub extinctions: usize,
    pub error: Option<String>,
}

/// Run `replicates` replicates at each grid value of `parameter`. Cells run
/// in parallel; rows keep grid order. A failing cell is reported in its row.
pub fn sweep(scenario: &Scenario, parameter: &str, grid: &[f64], replicates: usize, seed: u64) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return config("sweep grid is empty");
    }
    if let Some(v) = grid.iter().find(|v| !v.is_finite()) {
        return config(format!("sweep grid value {v} is not finite"));
    }
    get_param(scenario, parameter)?;
    let seeds = seeds_from(seed, replicates);
    let (a, b) = (scenario.measure.from, scenario.measure.to);
    Ok(grid
        .par_iter()
        .map(|&value| {
            let cell = set_param(scenario, parameter, value).and_then(|s| s.validate().map(|_| s)).and_then(|s| run_replicates(&s.config, &s.events, &seeds));
            match cell {
                Ok(set) => {
                    let stat = |st: Statistic| {
                        let v: Vec<f64> = set.trajectories.iter().filter_map(|t| evaluate(t, st, None, a, b)).collect();
                        mean_ci(&v)
                    };
                    SweepRow {
                        value,
                        sr_birth: stat(Statistic::SrBirth),
                        parity_age: stat(Statistic::ParityAge),
                        quality_parity_age: stat(Statistic::QualityParityAge),
                        extinctions: set.extinctions(),
                        error: None,
                    }
                }
                Err(e) => SweepRow { value, sr_birth: None, parity_age: None, quality_parity_age: None, extinctions: 0, error: Some(e.to_string()) },
            }
        })
        .collect())
}
