//! Deterministic life table of a quality-stratified cohort under a static
//! environment. It uses the same step grid and hazard evaluation as the
//! simulator, so the simulator's expected profiles can be read off it.

use serde::{Deserialize, Serialize};

use super::hazard::{frailty, harshness_factor};
use super::parity::{parity_age_numbers, parity_age_quality};
use super::profile::{sex_ratio, AgeGrid};
use crate::config::SimConfig;
use crate::error::{Error, ParityError, Result};
use crate::model::{quality_at_age, NatalQuality, Sex};
use crate::reproduction::maternal_multiplier;

pub const DEFAULT_STRATA: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumTable {
    /// Genetic quality at the stratum's probability midpoint.
    pub quality: f64,
    /// Survivorship from conception at each grid age.
    pub survival: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortTable {
    pub dt: f64,
    pub gestation: f64,
    /// Ages `k · dt`, k = 0, 1, ...
    pub ages: Vec<f64>,
    pub sr_conception: f64,
    pub l_male: Vec<f64>,
    pub l_female: Vec<f64>,
    pub sr: Vec<f64>,
    pub q_male: Vec<f64>,
    pub q_female: Vec<f64>,
    pub strata_male: Vec<StratumTable>,
    pub strata_female: Vec<StratumTable>,
}

pub fn cohort_solve(cfg: &SimConfig, sr_conception: f64, natal: &NatalQuality) -> Result<CohortTable> {
    cohort_solve_with_strata(cfg, sr_conception, natal, DEFAULT_STRATA)
}

pub fn cohort_solve_with_strata(cfg: &SimConfig, sr_conception: f64, natal: &NatalQuality, strata: usize) -> Result<CohortTable> {
    let env = cfg.environment.build()?;
    if !env.is_static() {
        return Err(Error::Unsupported(
            "the cohort life table needs constant harshness, constant nutrition and no drift".into(),
        ));
    }
    if !(sr_conception > 0.0) || strata == 0 {
        return Err(Error::Domain("cohort needs sr_conception > 0 and at least one stratum".into()));
    }
    let h = env.state.harshness;
    let maternal = maternal_multiplier(env.state.nutrition, &cfg.reproduction.maternal);
    let n = (cfg.max_age / cfg.dt).round() as usize;
    let ages: Vec<f64> = (0..=n).map(|k| k as f64 * cfg.dt).collect();

    let solve_sex = |sex: Sex| -> Result<Vec<StratumTable>> {
        let hp = cfg.hazard.for_sex(sex);
        let hf = harshness_factor(h, hp.harshness_exponent);
        let fetal_mult = if sex.is_male() { maternal } else { 1.0 };
        let gsteps = cfg.gestation_steps() as usize;
        natal
            .for_sex(sex)
            .strata(strata)?
            .into_iter()
            .map(|q| {
                let mut survival = Vec::with_capacity(n + 1);
                let mut l = 1.0;
                survival.push(l);
                for (k, &a) in ages.iter().enumerate().take(n) {
                    let qa = quality_at_age(q, a, &cfg.quality)?;
                    let base = if k < gsteps { hp.fetal * fetal_mult } else { hp.band_rate(a) };
                    l *= (-base * hf * frailty(qa, hp.quality_exponent) * cfg.dt).exp();
                    survival.push(l);
                }
                Ok(StratumTable { quality: q, survival })
            })
            .collect()
    };
    let strata_male = solve_sex(Sex::Male)?;
    let strata_female = solve_sex(Sex::Female)?;

    let aggregate = |st: &[StratumTable]| -> Result<(Vec<f64>, Vec<f64>)> {
        let w = 1.0 / st.len() as f64;
        let mut l = vec![0.0; n + 1];
        let mut q = vec![0.0; n + 1];
        for s in st {
            for k in 0..=n {
                let qa = quality_at_age(s.quality, ages[k], &cfg.quality)?;
                l[k] += w * s.survival[k];
                q[k] += w * s.survival[k] * qa;
            }
        }
        for k in 0..=n {
            q[k] = if l[k] > 0.0 { q[k] / l[k] } else { f64::NAN };
        }
        Ok((l, q))
    };
    let (l_male, q_male) = aggregate(&strata_male)?;
    let (l_female, q_female) = aggregate(&strata_female)?;
    let sr = l_male.iter().zip(&l_female).map(|(m, f)| sr_conception * m / f).collect();
    Ok(CohortTable {
        dt: cfg.dt,
        gestation: cfg.gestation,
        ages,
        sr_conception,
        l_male,
        l_female,
        sr,
        q_male,
        q_female,
        strata_male,
        strata_female,
    })
}

impl CohortTable {
    pub fn male_share(&self) -> f64 {
        self.sr_conception / (100.0 + self.sr_conception)
    }

    /// Index of the first grid age at or after birth.
    pub fn birth_index(&self) -> usize {
        (self.gestation / self.dt).round() as usize
    }

    pub fn sr_at_birth(&self) -> f64 {
        self.sr[self.birth_index()]
    }

    pub fn parity_age(&self) -> Result<f64, ParityError> {
        let sr: Vec<Option<f64>> = self.sr.iter().map(|&v| Some(v)).collect();
        parity_age_numbers(&self.ages, &sr)
    }

    pub fn quality_parity_age(&self) -> Result<f64, ParityError> {
        let opt = |v: &[f64]| v.iter().map(|&x| x.is_finite().then_some(x)).collect::<Vec<_>>();
        parity_age_quality(&self.ages, &opt(&self.q_male), &opt(&self.q_female))
    }

    /// Expected counts per bin in a stationary population fed by
    /// `conceptions_per_year`, observed at a step boundary.
    pub fn expected_counts(&self, grid: &AgeGrid, conceptions_per_year: f64) -> (Vec<f64>, Vec<f64>) {
        let per_step = conceptions_per_year * self.dt;
        let pm = self.male_share();
        let mut m = vec![0.0; grid.bins()];
        let mut f = vec![0.0; grid.bins()];
        for (k, &a) in self.ages.iter().enumerate() {
            if let Some(b) = grid.bin_of(a + 1e-9 * self.dt) {
                m[b] += per_step * pm * self.l_male[k];
                f[b] += per_step * (1.0 - pm) * self.l_female[k];
            }
        }
        (m, f)
    }

    /// Expected sex ratio of each bin of a stationary population.
    pub fn binned_sr(&self, grid: &AgeGrid) -> Vec<Option<f64>> {
        let (m, f) = self.expected_counts(grid, 1.0);
        m.iter().zip(&f).map(|(&m, &f)| sex_ratio(m, f)).collect()
    }

    /// Expected mean quality per bin of a stationary population.
    pub fn binned_quality(&self, grid: &AgeGrid, sex: Sex) -> Vec<Option<f64>> {
        let (l, q) = match sex {
            Sex::Male => (&self.l_male, &self.q_male),
            Sex::Female => (&self.l_female, &self.q_female),
        };
        let mut num = vec![0.0; grid.bins()];
        let mut den = vec![0.0; grid.bins()];
        for (k, &a) in self.ages.iter().enumerate() {
            if let Some(b) = grid.bin_of(a + 1e-9 * self.dt) {
                num[b] += l[k] * q[k];
                den[b] += l[k];
            }
        }
        num.iter().zip(&den).map(|(&n, &d)| (d > 0.0).then(|| n / d)).collect()
    }

    /// Mean years lived from conception, averaged over both sexes at the
    /// conception sex ratio (right-censored at the table's last age).
    pub fn mean_lifespan(&self) -> f64 {
        let pm = self.male_share();
        let area = |l: &[f64]| l[..l.len() - 1].iter().sum::<f64>() * self.dt;
        pm * area(&self.l_male) + (1.0 - pm) * area(&self.l_female)
    }

    pub fn strata(&self, sex: Sex) -> &[StratumTable] {
        match sex {
            Sex::Male => &self.strata_male,
            Sex::Female => &self.strata_female,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demography::hazard::{AgeBand, SexHazard};
    use crate::environment::Schedule;
    use crate::model::BetaSpec;

    fn flat(rate: f64, fetal: f64, kappa: f64) -> SexHazard {
        SexHazard { bands: vec![AgeBand { start: 0.0, rate }], fetal, harshness_exponent: 0.0, quality_exponent: kappa }
    }

    fn natal() -> NatalQuality {
        NatalQuality { male: BetaSpec { mean: 0.5, sd: 0.2 }, female: BetaSpec { mean: 0.5, sd: 0.2 }, heritability: 0.0 }
    }

    fn cfg(male: SexHazard, female: SexHazard) -> SimConfig {
        let mut c = SimConfig::default();
        c.hazard.male = male;
        c.hazard.female = female;
        c.environment.harshness = Schedule::constant(0.0);
        c
    }

    #[test]
    fn equal_hazards_keep_sr() {
        let c = cfg(flat(0.02, 0.02, 0.5), flat(0.02, 0.02, 0.5));
        let t = cohort_solve(&c, 130.0, &natal()).unwrap();
        assert!(t.sr.iter().all(|&s| (s - 130.0).abs() < 1e-9));
    }

    #[test]
    fn exponential_closed_form() {
        let c = cfg(flat(0.03, 0.03, 0.0), flat(0.01, 0.01, 0.0));
        let t = cohort_solve(&c, 150.0, &natal()).unwrap();
        for (a, s) in t.ages.iter().zip(&t.sr) {
            let exact = 150.0 * (-(0.03 - 0.01) * a).exp();
            assert!((s / exact - 1.0).abs() < 1e-6, "age {a}");
        }
    }

    #[test]
    fn two_stratum_hand_computation() {
        // Two strata with qualities 0.25 and 0.75, κ = 1, b = 0.01: mean quality
        // at age a is the survival-weighted mean of the two values.
        let c = cfg(flat(0.01, 0.01, 1.0), flat(0.01, 0.01, 0.0));
        let n = NatalQuality { male: BetaSpec { mean: 0.5, sd: 0.25 }, female: BetaSpec { mean: 0.5, sd: 0.25 }, heritability: 0.0 };
        let t = cohort_solve_with_strata(&c, 100.0, &n, 2).unwrap();
        let (q1, q2) = (t.strata_male[0].quality, t.strata_male[1].quality);
        for (k, &a) in t.ages.iter().enumerate().step_by(97) {
            let s1 = (-0.01 / q1 * a).exp();
            let s2 = (-0.01 / q2 * a).exp();
            let expect = (q1 * s1 + q2 * s2) / (s1 + s2);
            assert!((t.q_male[k] - expect).abs() < 1e-9);
        }
        assert!(t.q_male.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn static_only() {
        let mut c = SimConfig::default();
        c.environment.harshness = Schedule::from_pairs(&[(0.0, 0.1), (5.0, 1.0)]);
        assert!(matches!(cohort_solve(&c, 150.0, &c.natal_quality.clone()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn default_config_crosses_parity() {
        let c = SimConfig::default();
        let t = cohort_solve(&c, 150.0, &c.natal_quality).unwrap();
        assert!(t.sr.windows(2).all(|w| w[1] < w[0]));
        let tp = t.parity_age().unwrap();
        assert!(tp > t.gestation);
    }

    #[test]
    fn strata_convergence() {
        let c = SimConfig::default();
        let a = cohort_solve_with_strata(&c, 150.0, &c.natal_quality, 32).unwrap();
        let b = cohort_solve_with_strata(&c, 150.0, &c.natal_quality, 64).unwrap();
        let worst = a.sr.iter().zip(&b.sr).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(worst < 0.1, "{worst}");
    }
}
