//! Domain types shared by every module, and the quality model.
//!
//! Quality `Q` is a dimensionless adaptedness score in `(0, 1]`. Three
//! component models are available: a genetic component that is constant
//! over life, an aging component that decays exponentially, and a wisdom
//! component that grows from a floor toward the genetic value. The
//! combined quality is a weighted linear or geometric blend.

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sex {
    Male,
    Female,
}

impl Sex {
    pub fn is_male(self) -> bool {
        matches!(self, Sex::Male)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LifeState {
    InUtero,
    Alive,
    Dead { t_death: f64 },
}

/// One member of a population. Ages are measured from conception.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub id: u64,
    pub sex: Sex,
    pub t_conceived: f64,
    /// Genetic quality, fixed at conception.
    pub q_genetic: f64,
    /// This individual is the `father_birth_order`-th conception of its father.
    pub father_birth_order: u32,
    pub state: LifeState,
    pub father_id: Option<u64>,
    pub mother_id: Option<u64>,
}

impl Individual {
    pub fn age(&self, t: f64) -> f64 {
        t - self.t_conceived
    }

    pub fn is_alive(&self) -> bool {
        matches!(self.state, LifeState::Alive)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Combination {
    Linear,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityWeights {
    pub genetic: f64,
    pub aging: f64,
    pub wisdom: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityModelConfig {
    pub weights: QualityWeights,
    /// Per-year decay rate of the aging component.
    pub aging_rate: f64,
    /// Per-year growth rate of the wisdom component.
    pub wisdom_rate: f64,
    /// Wisdom starting level as a fraction of genetic quality.
    pub wisdom_floor: f64,
    pub combination: Combination,
}

impl Default for QualityModelConfig {
    fn default() -> Self {
        Self {
            weights: QualityWeights {
                genetic: 1.0,
                aging: 0.0,
                wisdom: 0.0,
            },
            aging_rate: 0.0,
            wisdom_rate: 0.0,
            wisdom_floor: 0.25,
            combination: Combination::Linear,
        }
    }
}

impl QualityModelConfig {
    pub fn validate(&self) -> Result<()> {
        let w = self.weights;
        for (name, v) in [("genetic", w.genetic), ("aging", w.aging), ("wisdom", w.wisdom)] {
            if !(v >= 0.0 && v.is_finite()) {
                return config(format!("quality weight `{name}` must be nonnegative, got {v}"));
            }
        }
        let sum = w.genetic + w.aging + w.wisdom;
        if (sum - 1.0).abs() > 1e-9 {
            return config(format!("quality weights must sum to 1, got {sum}"));
        }
        if !(self.aging_rate >= 0.0) || !(self.wisdom_rate >= 0.0) {
            return config("quality aging_rate and wisdom_rate must be nonnegative");
        }
        if !(self.wisdom_floor > 0.0 && self.wisdom_floor <= 1.0) {
            return config("quality wisdom_floor must lie in (0, 1]");
        }
        Ok(())
    }

    /// True when quality never changes over life (all weight on the genetic component,
    /// or the other components are frozen at the genetic value).
    pub fn is_constant(&self) -> bool {
        let w = self.weights;
        (w.aging == 0.0 || self.aging_rate == 0.0) && w.wisdom == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityComponents {
    pub genetic: f64,
    pub aging: f64,
    pub wisdom: f64,
}

/// Component qualities of an individual with genetic quality `q_genetic` at `age`.
pub fn components_at_age(q_genetic: f64, age: f64, cfg: &QualityModelConfig) -> Result<QualityComponents> {
    if age < 0.0 {
        return domain(format!("quality evaluated before conception (age {age})"));
    }
    if !(q_genetic > 0.0 && q_genetic <= 1.0) {
        return domain(format!("genetic quality {q_genetic} outside (0, 1]"));
    }
    let aging = q_genetic * (-cfg.aging_rate * age).exp();
    let decay = (-cfg.wisdom_rate * age).exp();
    let floor = q_genetic * cfg.wisdom_floor;
    let wisdom = q_genetic * (1.0 - decay) + floor * decay;
    Ok(QualityComponents {
        genetic: q_genetic,
        // exp underflow would leave 0, which is outside the quality domain
        aging: aging.max(f64::MIN_POSITIVE),
        wisdom,
    })
}

pub fn quality_component(ind: &Individual, t: f64, cfg: &QualityModelConfig) -> Result<QualityComponents> {
    components_at_age(ind.q_genetic, ind.age(t), cfg)
}

pub fn combine(c: QualityComponents, cfg: &QualityModelConfig) -> f64 {
    let w = cfg.weights;
    match cfg.combination {
        Combination::Linear => w.genetic * c.genetic + w.aging * c.aging + w.wisdom * c.wisdom,
        Combination::Geometric => {
            let term = |q: f64, wt: f64| if wt == 0.0 { 1.0 } else { q.powf(wt) };
            term(c.genetic, w.genetic) * term(c.aging, w.aging) * term(c.wisdom, w.wisdom)
        }
    }
}

pub fn quality_at_age(q_genetic: f64, age: f64, cfg: &QualityModelConfig) -> Result<f64> {
    Ok(combine(components_at_age(q_genetic, age, cfg)?, cfg))
}

pub fn quality(ind: &Individual, t: f64, cfg: &QualityModelConfig) -> Result<f64> {
    quality_at_age(ind.q_genetic, ind.age(t), cfg)
}

/// A Beta distribution on `(0, 1)` given by its mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaSpec {
    pub mean: f64,
    pub sd: f64,
}

impl BetaSpec {
    pub fn shape(&self) -> Result<(f64, f64)> {
        let (m, s) = (self.mean, self.sd);
        if !(m > 0.0 && m < 1.0) {
            return config(format!("beta mean {m} outside (0, 1)"));
        }
        let var = s * s;
        if !(s > 0.0) || var >= m * (1.0 - m) {
            return config(format!("beta sd {s} infeasible for mean {m}"));
        }
        let k = m * (1.0 - m) / var - 1.0;
        Ok((m * k, (1.0 - m) * k))
    }

    pub fn distribution(&self) -> Result<statrs::distribution::Beta> {
        let (a, b) = self.shape()?;
        statrs::distribution::Beta::new(a, b).map_err(|e| crate::Error::Config(e.to_string()))
    }

    pub fn sampler(&self) -> Result<rand_distr::Beta<f64>> {
        let (a, b) = self.shape()?;
        rand_distr::Beta::new(a, b).map_err(|e| crate::Error::Config(e.to_string()))
    }

    /// Midpoint quantiles of `n` equal-probability strata.
    pub fn strata(&self, n: usize) -> Result<Vec<f64>> {
        use statrs::distribution::ContinuousCDF;
        let d = self.distribution()?;
        Ok((0..n)
            .map(|k| d.inverse_cdf((k as f64 + 0.5) / n as f64).clamp(1e-9, 1.0))
            .collect())
    }
}

/// Tabulated inverse CDF, sampled with one uniform per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    values: Vec<f64>,
}

impl QuantileTable {
    pub fn new(spec: &BetaSpec, points: usize) -> Result<Self> {
        use statrs::distribution::ContinuousCDF;
        let d = spec.distribution()?;
        let values = (0..=points)
            .map(|k| {
                let u = (k as f64 / points as f64).clamp(0.5 / points as f64 * 1e-3, 1.0 - 0.5 / points as f64 * 1e-3);
                d.inverse_cdf(u).clamp(1e-6, 1.0)
            })
            .collect();
        Ok(Self { values })
    }

    /// Quantile at `u` in `[0, 1)`, linearly interpolated.
    #[inline]
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.values.len() - 1;
        let x = u * n as f64;
        let i = (x as usize).min(n - 1);
        let f = x - i as f64;
        self.values[i] + f * (self.values[i + 1] - self.values[i])
    }
}

/// Distribution of genetic quality at conception, per sex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NatalQuality {
    pub male: BetaSpec,
    pub female: BetaSpec,
    /// Weight of the parental mean in a child's genetic quality (0 = pure resampling).
    pub heritability: f64,
}

impl NatalQuality {
    pub fn for_sex(&self, sex: Sex) -> &BetaSpec {
        match sex {
            Sex::Male => &self.male,
            Sex::Female => &self.female,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.male.shape()?;
        self.female.shape()?;
        if !(0.0..=1.0).contains(&self.heritability) {
            return config("natal_quality.heritability must lie in [0, 1]");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ind(q: f64) -> Individual {
        Individual {
            id: 1,
            sex: Sex::Male,
            t_conceived: 0.0,
            q_genetic: q,
            father_birth_order: 1,
            state: LifeState::Alive,
            father_id: None,
            mother_id: None,
        }
    }

    fn weights(g: f64, a: f64, w: f64) -> QualityModelConfig {
        QualityModelConfig {
            weights: QualityWeights { genetic: g, aging: a, wisdom: w },
            ..Default::default()
        }
    }

    #[test]
    fn frozen_aging_equals_genetic() {
        let cfg = QualityModelConfig { wisdom_rate: 3.0, ..Default::default() };
        let c = quality_component(&ind(0.5), 10.0, &cfg).unwrap();
        assert_eq!(c.genetic, 0.5);
        assert_eq!(c.aging, 0.5);
    }

    #[test]
    fn aging_at_age_zero_is_identity() {
        let cfg = QualityModelConfig { aging_rate: 0.1, ..Default::default() };
        assert_eq!(quality_component(&ind(0.8), 0.0, &cfg).unwrap().aging, 0.8);
    }

    #[test]
    fn aging_half_life() {
        let cfg = QualityModelConfig { aging_rate: std::f64::consts::LN_2, ..Default::default() };
        let c = quality_component(&ind(1.0), 1.0, &cfg).unwrap();
        assert!((c.aging - 0.5).abs() < 1e-12);
    }

    #[test]
    fn before_conception_is_domain_error() {
        let cfg = QualityModelConfig::default();
        assert!(matches!(quality_component(&ind(0.5), -1.0, &cfg), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn default_is_genetic_constant() {
        let cfg = QualityModelConfig::default();
        for t in [0.0, 1.0, 30.0, 90.0] {
            assert_eq!(quality(&ind(0.7), t, &cfg).unwrap(), 0.7);
        }
    }

    #[test]
    fn linear_combination_arithmetic() {
        let cfg = weights(0.5, 0.25, 0.25);
        let c = QualityComponents { genetic: 0.8, aging: 0.5, wisdom: 0.9 };
        assert!((combine(c, &cfg) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn weights_must_sum_to_one() {
        assert!(weights(0.5, 0.2, 0.2).validate().is_err());
        assert!(weights(0.5, 0.25, 0.25).validate().is_ok());
    }

    #[test]
    fn beta_strata_are_increasing() {
        let s = BetaSpec { mean: 0.6, sd: 0.15 }.strata(32).unwrap();
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        let m: f64 = s.iter().sum::<f64>() / 32.0;
        assert!((m - 0.6).abs() < 0.01);
    }

    #[test]
    fn quantile_table_matches_moments() {
        let spec = BetaSpec { mean: 0.58, sd: 0.2 };
        let t = QuantileTable::new(&spec, 4096).unwrap();
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|k| t.quantile((k as f64 + 0.5) / n as f64)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
        assert!((m - 0.58).abs() < 1e-3, "{m}");
        assert!((v.sqrt() - 0.2).abs() < 1e-3, "{v}");
    }

    proptest! {
        #[test]
        fn equal_components_are_idempotent(c in 0.01f64..1.0, g in 0.0f64..1.0, a in 0.0f64..1.0, geo in any::<bool>()) {
            let a = a * (1.0 - g);
            let mut cfg = weights(g, a, 1.0 - g - a);
            cfg.combination = if geo { Combination::Geometric } else { Combination::Linear };
            let v = combine(QualityComponents { genetic: c, aging: c, wisdom: c }, &cfg);
            prop_assert!((v - c).abs() < 1e-12);
        }

        #[test]
        fn components_are_monotone_and_bounded(q in 0.01f64..=1.0, ra in 0.001f64..2.0, rw in 0.001f64..2.0, t1 in 0.0f64..80.0, dt in 0.0f64..20.0) {
            let cfg = QualityModelConfig { aging_rate: ra, wisdom_rate: rw, ..Default::default() };
            let a = components_at_age(q, t1, &cfg).unwrap();
            let b = components_at_age(q, t1 + dt, &cfg).unwrap();
            prop_assert!(b.aging <= a.aging);
            prop_assert!(b.wisdom >= a.wisdom);
            for v in [a.genetic, a.aging, a.wisdom, b.aging, b.wisdom] {
                prop_assert!(v > 0.0 && v <= 1.0);
            }
        }

        #[test]
        fn quality_in_unit_interval(q in 0.01f64..=1.0, g in 0.0f64..1.0, a in 0.0f64..1.0, age in 0.0f64..100.0, geo in any::<bool>()) {
            let a = a * (1.0 - g);
            let mut cfg = weights(g, a, 1.0 - g - a);
            cfg.aging_rate = 0.05;
            cfg.wisdom_rate = 0.1;
            cfg.combination = if geo { Combination::Geometric } else { Combination::Linear };
            let v = quality_at_age(q, age, &cfg).unwrap();
            prop_assert!(v > 0.0 && v <= 1.0 + 1e-12);
        }

        #[test]
        fn single_component_weight_selects_it(q in 0.01f64..=1.0, age in 0.0f64..60.0, which in 0usize..3, geo in any::<bool>()) {
            let mut cfg = match which { 0 => weights(1.0, 0.0, 0.0), 1 => weights(0.0, 1.0, 0.0), _ => weights(0.0, 0.0, 1.0) };
            cfg.aging_rate = 0.03;
            cfg.wisdom_rate = 0.2;
            cfg.combination = if geo { Combination::Geometric } else { Combination::Linear };
            let c = components_at_age(q, age, &cfg).unwrap();
            let expect = [c.genetic, c.aging, c.wisdom][which];
            prop_assert_eq!(combine(c, &cfg), expect);
        }
    }
}
