use rayon::prelude::*;

use super::events::Event;
use super::sim::run;
use super::trajectory::Trajectory;
use crate::config::SimConfig;
use crate::error::{config, Result};
use crate::rng::replicate_seed;
use crate::stats::{mean_ci, MeanCi};

/// Independent replicates of one configuration.
#[derive(Debug, Clone)]
pub struct ReplicateSet {
    pub seeds: Vec<u64>,
    pub trajectories: Vec<Trajectory>,
}

impl ReplicateSet {
    /// Mean and 95% interval of a per-replicate statistic; replicates where
    /// it is undefined are skipped.
    pub fn statistic(&self, f: impl Fn(&Trajectory) -> Option<f64>) -> Option<MeanCi> {
        let v: Vec<f64> = self.trajectories.iter().filter_map(f).collect();
        mean_ci(&v)
    }

    pub fn extinctions(&self) -> usize {
        self.trajectories.iter().filter(|t| t.extinct).count()
    }
}

/// Run one replicate per seed, in parallel; results keep the seed order.
pub fn run_replicates(cfg: &SimConfig, events: &[Event], seeds: &[u64]) -> Result<ReplicateSet> {
    if seeds.is_empty() {
        return config("replicate runs need at least one seed");
    }
    let trajectories = seeds.par_iter().map(|&s| run(cfg, events, s)).collect::<Result<Vec<_>>>()?;
    Ok(ReplicateSet { seeds: seeds.to_vec(), trajectories })
}

/// `count` replicate seeds derived from one root seed.
pub fn seeds_from(root: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| replicate_seed(root, i)).collect()
}
