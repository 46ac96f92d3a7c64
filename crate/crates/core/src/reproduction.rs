//! Pairing, conception, the father's preconception sex ratio, the maternal
//! in-utero filter, and the war draft.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::model::{Individual, LifeState, NatalQuality, Sex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreconceptionParams {
    /// Probability of a son at `q_ref`, `h_ref`.
    pub p_base: f64,
    pub alpha_q: f64,
    pub q_ref: f64,
    pub alpha_h: f64,
    pub h_ref: f64,
    /// Catastrophic threshold on perceived harshness.
    pub h_cat: f64,
    pub s_cat: f64,
    pub p_floor: f64,
    pub h_comf: f64,
    /// Collapse to `p_floor` when harshness stays below `h_comf` (plant mode only).
    pub comfort_collapse: bool,
    /// Years below `h_comf` before the comfort collapse sets in.
    pub comfort_duration: f64,
}

impl Default for PreconceptionParams {
    fn default() -> Self {
        Self {
            p_base: 0.6,
            alpha_q: 1.0,
            q_ref: 0.6,
            alpha_h: 0.5,
            h_ref: 0.4,
            h_cat: 3.0,
            s_cat: 1.0,
            p_floor: 0.01,
            h_comf: 0.05,
            comfort_collapse: false,
            comfort_duration: 1.0,
        }
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl PreconceptionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_floor > 0.0 && self.p_floor <= 0.05) {
            return config("preconception p_floor must lie in (0, 0.05]");
        }
        if !(self.p_floor < self.p_base && self.p_base < 1.0) {
            return config("preconception ordering violated: need 0 < p_floor < p_base < 1");
        }
        if !(self.alpha_q >= 0.0 && self.alpha_h >= 0.0) {
            return config("preconception alpha_q and alpha_h must be >= 0");
        }
        if !(self.h_cat > 0.0 && self.s_cat > 0.0) {
            return config("preconception h_cat and s_cat must be > 0");
        }
        if !(self.h_comf >= 0.0 && self.h_comf < self.h_cat) {
            return config("preconception ordering violated: need 0 <= h_comf < h_cat");
        }
        if !(self.q_ref > 0.0 && self.q_ref <= 1.0) || !(self.h_ref >= 0.0 && self.h_ref < self.h_cat) {
            return config("preconception reference point must have q_ref in (0, 1] and 0 <= h_ref < h_cat");
        }
        if !(self.comfort_duration >= 0.0) {
            return config("preconception comfort_duration must be >= 0");
        }
        Ok(())
    }

    fn gate(&self, h: f64) -> f64 {
        1.0 / (1.0 + (self.s_cat * (h - self.h_cat)).exp())
    }

    /// Logistic intercept chosen so that the gated probability at the reference
    /// point equals `p_base` exactly.
    fn intercept(&self) -> f64 {
        let g = self.gate(self.h_ref);
        let core = self.p_floor + (self.p_base - self.p_floor) / g;
        logit(core.min(1.0 - 1e-12))
    }
}

/// Probability that a conception by a father of quality `q_father`, perceiving
/// harshness `h_perceived`, is male.
pub fn preconception_sr(q_father: f64, h_perceived: f64, params: &PreconceptionParams) -> Result<f64> {
    if !(q_father > 0.0 && q_father <= 1.0) {
        return domain(format!("father quality {q_father} outside (0, 1]"));
    }
    if !(h_perceived >= 0.0) {
        return domain(format!("perceived harshness {h_perceived} is negative"));
    }
    Ok(preconception_unchecked(q_father, h_perceived, params))
}

#[inline]
pub(crate) fn preconception_unchecked(q: f64, h: f64, p: &PreconceptionParams) -> f64 {
    let l = p.intercept() + p.alpha_q * (p.q_ref - q) + p.alpha_h * (h.min(p.h_cat) - p.h_ref);
    p.p_floor + p.gate(h) * (sigmoid(l) - p.p_floor)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaternalFilterParams {
    pub n_crit: f64,
    /// Male fetal hazard multiplier as nutrition approaches zero.
    pub m_max: f64,
    pub exponent: f64,
}

impl Default for MaternalFilterParams {
    fn default() -> Self {
        Self { n_crit: 0.6, m_max: 3.0, exponent: 1.0 }
    }
}

impl MaternalFilterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_crit > 0.0 && self.n_crit < 1.0) {
            return config("maternal n_crit must lie in (0, 1)");
        }
        if !(self.m_max >= 1.0 && self.m_max.is_finite()) {
            return config("maternal m_max must be >= 1");
        }
        if !(self.exponent > 0.0) {
            return config("maternal exponent must be > 0");
        }
        Ok(())
    }
}

/// Male fetal hazard multiplier at a given maternal nutrition level.
pub fn maternal_multiplier(nutrition: f64, params: &MaternalFilterParams) -> f64 {
    if nutrition >= params.n_crit {
        return 1.0;
    }
    let deficit = ((params.n_crit - nutrition.max(0.0)) / params.n_crit).min(1.0);
    1.0 + (params.m_max - 1.0) * deficit.powf(params.exponent)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgeWindow {
    pub min: f64,
    pub max: f64,
}

impl AgeWindow {
    pub fn contains(&self, age: f64) -> bool {
        age >= self.min && age < self.max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingParams {
    /// Mean male-minus-female age gap targeted by matching.
    pub age_offset: f64,
    /// Male-minus-female quality offset used by the assortment term.
    pub quality_offset: f64,
    /// Weight of quality in the matching key (0 = age only).
    pub quality_assortment: f64,
    /// Standard deviation of the noise added to matching keys, in years.
    pub noise: f64,
    /// Eligibility windows, in years since conception.
    pub male_window: AgeWindow,
    pub female_window: AgeWindow,
    /// Conceptions per pair-year at full availability.
    pub conception_rate: f64,
}

impl Default for PairingParams {
    fn default() -> Self {
        Self {
            age_offset: 2.0,
            quality_offset: 0.02,
            quality_assortment: 0.0,
            noise: 1.0,
            male_window: AgeWindow { min: 18.75, max: 60.75 },
            female_window: AgeWindow { min: 16.75, max: 45.75 },
            conception_rate: 0.11,
        }
    }
}

impl PairingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.age_offset >= 0.0 && self.quality_offset >= 0.0) || !self.age_offset.is_finite() {
            return config("pairing offsets must be finite and >= 0");
        }
        if !(self.noise >= 0.0 && self.quality_assortment >= 0.0) {
            return config("pairing noise and quality_assortment must be >= 0");
        }
        for w in [self.male_window, self.female_window] {
            if !(w.max > w.min && w.min >= 0.0) {
                return config("pairing eligibility windows must be non-empty");
            }
        }
        if !(self.conception_rate >= 0.0 && self.conception_rate.is_finite()) {
            return config("pairing conception_rate must be finite and >= 0");
        }
        Ok(())
    }
}

/// How a paired male's quality scales his conception rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PaternityModel {
    Uniform,
    /// Rate multiplied by `(Q / scale)^exponent`.
    QualityPower { exponent: f64, scale: f64 },
    /// Rate multiplied by twice the male's fitness rank in `(0, 1]`.
    FitnessRank,
}

impl PaternityModel {
    pub fn validate(&self) -> Result<()> {
        if let PaternityModel::QualityPower { exponent, scale } = *self {
            if !(exponent >= 0.0 && scale > 0.0) {
                return config("paternity exponent must be >= 0 and scale > 0");
            }
        }
        Ok(())
    }

    /// Weight for a male of quality `q` and rank fraction `rank` in `(0, 1]`.
    #[inline]
    pub fn weight(&self, q: f64, rank: f64) -> f64 {
        match *self {
            PaternityModel::Uniform => 1.0,
            PaternityModel::QualityPower { exponent, scale } => (q / scale).powf(exponent),
            PaternityModel::FitnessRank => 2.0 * rank,
        }
    }
}

/// A pairing candidate: `index` is the caller's handle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub index: usize,
    pub age: f64,
    pub quality: f64,
}

/// Greedy nearest-key matching. Each member of the smaller pool, in random
/// order, takes the unmatched member of the larger pool whose key is closest.
/// Keys are age (males shifted by the age offset) plus optional quality
/// assortment plus matching noise. Returns `(male.index, female.index)` pairs.
pub fn pair<R: Rng + ?Sized>(males: &[Candidate], females: &[Candidate], params: &PairingParams, rng: &mut R) -> Vec<(usize, usize)> {
    if males.is_empty() || females.is_empty() {
        return Vec::new();
    }
    let mut key = |c: &Candidate, shift: f64, qshift: f64| {
        let z: f64 = if params.noise > 0.0 { StandardNormal.sample(rng) } else { 0.0 };
        c.age - shift + params.quality_assortment * (c.quality - qshift) + params.noise * z
    };
    let mk: Vec<f64> = males.iter().map(|c| key(c, params.age_offset, params.quality_offset)).collect();
    let fk: Vec<f64> = females.iter().map(|c| key(c, 0.0, 0.0)).collect();

    let male_small = males.len() <= females.len();
    let (small, large) = if male_small { (&mk, &fk) } else { (&fk, &mk) };

    let mut pool: Vec<(f64, usize)> = large.iter().copied().zip(0..).collect();
    pool.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pool.len();
    // taken entries are skipped through path-compressed links:
    // right[i] is the first free slot >= i (n if none), left[i] is one past the last free slot <= i (0 if none)
    let mut right: Vec<usize> = (0..=n).collect();
    let mut left: Vec<usize> = (0..=n).collect();

    let mut visit: Vec<usize> = (0..small.len()).collect();
    for i in (1..visit.len()).rev() {
        let j = rng.random_range(0..=i);
        visit.swap(i, j);
    }

    let mut out = Vec::with_capacity(small.len());
    for s in visit {
        let k = small[s];
        let pos = pool.partition_point(|e| e.0 < k);
        let hi = find(&mut right, pos);
        let lo = find(&mut left, pos).checked_sub(1);
        let pick = match (lo, (hi < n).then_some(hi)) {
            (Some(lo), Some(hi)) => {
                if k - pool[lo].0 <= pool[hi].0 - k {
                    lo
                } else {
                    hi
                }
            }
            (Some(lo), None) => lo,
            (None, Some(hi)) => hi,
            (None, None) => break,
        };
        right[pick] = pick + 1;
        left[pick + 1] = pick;
        let l = pool[pick].1;
        out.push(if male_small {
            (males[s].index, females[l].index)
        } else {
            (males[l].index, females[s].index)
        });
    }
    out
}

fn find(link: &mut [usize], mut i: usize) -> usize {
    let mut root = i;
    while link[root] != root {
        root = link[root];
    }
    while link[i] != root {
        let next = link[i];
        link[i] = root;
        i = next;
    }
    root
}

/// Probability that a pair conceives within one step.
pub fn conception_probability(rate: f64, dt: f64) -> f64 {
    1.0 - (-rate * dt).exp()
}

/// What the engine knows about a father at the moment of a conception opportunity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FatherState {
    pub id: u64,
    pub quality: f64,
    pub genetic_quality: f64,
    pub perceived_harshness: f64,
    /// Conceptions so far.
    pub conceptions: u32,
}

/// Draw a child's genetic quality given the parents' genetic qualities.
pub fn natal_quality<R: Rng + ?Sized>(sex: Sex, parents: Option<(f64, f64)>, natal: &NatalQuality, rng: &mut R) -> Result<f64> {
    let d = natal.for_sex(sex).sampler()?;
    let fresh: f64 = d.sample(rng);
    let q = match parents {
        Some((f, m)) if natal.heritability > 0.0 => (1.0 - natal.heritability) * fresh + natal.heritability * 0.5 * (f + m),
        _ => fresh,
    };
    Ok(q.clamp(1e-6, 1.0))
}

/// One conception opportunity for a pair over a step of length `dt`. On
/// success, returns the in-utero child; the caller increments the father's
/// conception count and resets his abstinence clock.
#[allow(clippy::too_many_arguments)]
pub fn conceive<R: Rng + ?Sized>(
    father: &FatherState,
    mother_id: u64,
    child_id: u64,
    t_conceived: f64,
    rate: f64,
    dt: f64,
    preconception: &PreconceptionParams,
    natal: &NatalQuality,
    rng: &mut R,
) -> Result<Option<Individual>> {
    if rate <= 0.0 || rng.random::<f64>() >= conception_probability(rate, dt) {
        return Ok(None);
    }
    let p_male = preconception_sr(father.quality, father.perceived_harshness, preconception)?;
    let sex = if rng.random::<f64>() < p_male { Sex::Male } else { Sex::Female };
    let q = natal_quality(sex, None, natal, rng)?;
    Ok(Some(Individual {
        id: child_id,
        sex,
        t_conceived,
        q_genetic: q,
        father_birth_order: father.conceptions + 1,
        state: LifeState::InUtero,
        father_id: Some(father.id),
        mother_id: Some(mother_id),
    }))
}

/// Partition eligible males into drafted and exempt. Males at or above the
/// threshold are drafted, highest quality first, up to `fraction` of the pool.
/// Returns candidate indices.
pub fn draft_filter(males: &[Candidate], q_threshold: f64, fraction: f64) -> (Vec<usize>, Vec<usize>) {
    let cap = (fraction.clamp(0.0, 1.0) * males.len() as f64).round() as usize;
    let mut above: Vec<&Candidate> = males.iter().filter(|c| c.quality >= q_threshold).collect();
    above.sort_by(|a, b| b.quality.total_cmp(&a.quality).then(a.index.cmp(&b.index)));
    above.truncate(cap);
    let drafted: Vec<usize> = above.iter().map(|c| c.index).collect();
    let set: std::collections::HashSet<usize> = drafted.iter().copied().collect();
    let exempt = males.iter().map(|c| c.index).filter(|i| !set.contains(i)).collect();
    (drafted, exempt)
}
