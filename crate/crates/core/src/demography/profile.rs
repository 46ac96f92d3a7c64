use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::model::{Individual, LifeState, Sex};

/// Bin edges over age since conception.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeGrid {
    pub edges: Vec<f64>,
}

impl AgeGrid {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return config("age grid needs at least one bin");
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) {
            return config("age grid edges must be strictly increasing");
        }
        Ok(Self { edges })
    }

    /// A fetal bin `[0, gestation)` followed by bins of `width` years up to `max_age`.
    pub fn with_fetal_bin(gestation: f64, width: f64, max_age: f64) -> Result<Self> {
        if !(width > 0.0) || !(max_age > gestation) {
            return config("age grid needs width > 0 and max_age > gestation");
        }
        let mut edges = vec![0.0, gestation];
        let mut k = 1;
        loop {
            let e = gestation + width * k as f64;
            if e >= max_age - 1e-9 {
                edges.push(max_age);
                break;
            }
            edges.push(e);
            k += 1;
        }
        Self::new(edges)
    }

    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn bin_of(&self, age: f64) -> Option<usize> {
        if age < self.edges[0] || age >= *self.edges.last().unwrap() {
            return None;
        }
        Some(self.edges.partition_point(|&e| e <= age) - 1)
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// Counts by sex over an age grid, with per-bin quality sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrProfile {
    pub grid: AgeGrid,
    pub males: Vec<u64>,
    pub females: Vec<u64>,
    pub quality_male: Vec<f64>,
    pub quality_female: Vec<f64>,
    /// Per-bin sums of squared quality, for standard errors.
    pub quality_sq_male: Vec<f64>,
    pub quality_sq_female: Vec<f64>,
}

/// `100 · males / females`, or `None` when there are no females.
pub fn sex_ratio(males: f64, females: f64) -> Option<f64> {
    if females > 0.0 {
        Some(100.0 * males / females)
    } else {
        None
    }
}

impl SrProfile {
    pub fn empty(grid: AgeGrid) -> Self {
        let n = grid.bins();
        Self {
            grid,
            males: vec![0; n],
            females: vec![0; n],
            quality_male: vec![0.0; n],
            quality_female: vec![0.0; n],
            quality_sq_male: vec![0.0; n],
            quality_sq_female: vec![0.0; n],
        }
    }

    pub fn add(&mut self, sex: Sex, age: f64, quality: f64) {
        if let Some(b) = self.grid.bin_of(age) {
            match sex {
                Sex::Male => {
                    self.males[b] += 1;
                    self.quality_male[b] += quality;
                    self.quality_sq_male[b] += quality * quality;
                }
                Sex::Female => {
                    self.females[b] += 1;
                    self.quality_female[b] += quality;
                    self.quality_sq_female[b] += quality * quality;
                }
            }
        }
    }

    pub fn sr(&self) -> Vec<Option<f64>> {
        self.males
            .iter()
            .zip(&self.females)
            .map(|(&m, &f)| sex_ratio(m as f64, f as f64))
            .collect()
    }

    /// Delta-method standard error of each bin's sex ratio.
    pub fn sr_standard_error(&self) -> Vec<Option<f64>> {
        self.males
            .iter()
            .zip(&self.females)
            .map(|(&m, &f)| {
                if m == 0 || f == 0 {
                    return None;
                }
                let (m, f) = (m as f64, f as f64);
                Some(100.0 * m / f * (1.0 / m + 1.0 / f).sqrt())
            })
            .collect()
    }

    pub fn mean_quality(&self, sex: Sex) -> Vec<Option<f64>> {
        let (n, s) = match sex {
            Sex::Male => (&self.males, &self.quality_male),
            Sex::Female => (&self.females, &self.quality_female),
        };
        n.iter().zip(s).map(|(&c, &q)| (c > 0).then(|| q / c as f64)).collect()
    }

    /// Standard error of each bin's mean quality.
    pub fn quality_se(&self, sex: Sex) -> Vec<Option<f64>> {
        let (n, s, ss) = match sex {
            Sex::Male => (&self.males, &self.quality_male, &self.quality_sq_male),
            Sex::Female => (&self.females, &self.quality_female, &self.quality_sq_female),
        };
        n.iter()
            .zip(s.iter().zip(ss))
            .map(|(&c, (&s, &ss))| {
                if c < 2 {
                    return None;
                }
                let c = c as f64;
                let var = ((ss - s * s / c) / (c - 1.0)).max(0.0);
                Some((var / c).sqrt())
            })
            .collect()
    }

    /// Add another profile on the same grid.
    pub fn merge(&mut self, other: &SrProfile) {
        assert_eq!(self.grid, other.grid, "profiles must share a grid");
        for b in 0..self.grid.bins() {
            self.males[b] += other.males[b];
            self.females[b] += other.females[b];
            self.quality_male[b] += other.quality_male[b];
            self.quality_female[b] += other.quality_female[b];
            self.quality_sq_male[b] += other.quality_sq_male[b];
            self.quality_sq_female[b] += other.quality_sq_female[b];
        }
    }
}

/// SR profile of the living and in-utero members of `population` at time `t`.
/// Quality sums use genetic quality.
pub fn sr_profile(population: &[Individual], t: f64, grid: &AgeGrid) -> SrProfile {
    let mut p = SrProfile::empty(grid.clone());
    for ind in population {
        if matches!(ind.state, LifeState::Alive | LifeState::InUtero) {
            p.add(ind.sex, ind.age(t), ind.q_genetic);
        }
    }
    p
}

/// Centered moving average over defined values; undefined bins stay undefined
/// and are skipped inside windows. Windows shrink at the ends.
pub fn smooth_centered(values: &[Option<f64>], width: usize) -> Vec<Option<f64>> {
    let half = width.max(1) / 2;
    (0..values.len())
        .map(|i| {
            values[i]?;
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(values.len() - 1);
            let (sum, n) = values[lo..=hi]
                .iter()
                .flatten()
                .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            Some(sum / n as f64)
        })
        .collect()
}

/// Count adjacent increases in a profile that exceed `z` combined standard errors.
pub fn significant_inversions(values: &[Option<f64>], se: &[Option<f64>], z: f64) -> usize {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .zip(se)
        .filter_map(|(v, s)| Some(((*v)?, s.unwrap_or(0.0))))
        .collect();
    pts.windows(2)
        .filter(|w| w[1].0 - w[0].0 > z * (w[0].1 * w[0].1 + w[1].1 * w[1].1).sqrt())
        .count()
}
