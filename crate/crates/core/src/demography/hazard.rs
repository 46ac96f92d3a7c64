use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::model::Sex;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgeBand {
    /// Age since conception at which the band starts.
    pub start: f64,
    /// Deaths per person-year.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SexHazard {
    /// Piecewise-constant baseline by age; the first band starts at 0.
    pub bands: Vec<AgeBand>,
    /// Fetal deaths per fetus-year, used for ages below gestation.
    pub fetal: f64,
    pub harshness_exponent: f64,
    pub quality_exponent: f64,
}

impl SexHazard {
    pub fn band_rate(&self, age: f64) -> f64 {
        let idx = self.bands.partition_point(|b| b.start <= age);
        self.bands[idx.saturating_sub(1)].rate
    }

    pub fn baseline(&self, age: f64, gestation: f64) -> f64 {
        if age < gestation {
            self.fetal
        } else {
            self.band_rate(age)
        }
    }

    fn validate(&self, who: &str) -> Result<()> {
        if self.bands.is_empty() || self.bands[0].start != 0.0 {
            return config(format!("{who} hazard bands must start at age 0"));
        }
        if self.bands.windows(2).any(|w| !(w[1].start > w[0].start)) {
            return config(format!("{who} hazard band starts must be strictly increasing"));
        }
        let rates = self.bands.iter().map(|b| b.rate).chain([
            self.fetal,
            self.harshness_exponent,
            self.quality_exponent,
        ]);
        for r in rates {
            if !(r >= 0.0 && r.is_finite()) {
                return config(format!("{who} hazard rates and exponents must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HazardParams {
    pub male: SexHazard,
    pub female: SexHazard,
}

impl HazardParams {
    pub fn for_sex(&self, sex: Sex) -> &SexHazard {
        match sex {
            Sex::Male => &self.male,
            Sex::Female => &self.female,
        }
    }

    pub fn for_sex_mut(&mut self, sex: Sex) -> &mut SexHazard {
        match sex {
            Sex::Male => &mut self.male,
            Sex::Female => &mut self.female,
        }
    }

    /// Checks ranges and, unless `allow_violation` is set, the male-excess
    /// orderings: b_m >= b_f on every band, u_m >= u_f, κ_m >= κ_f, γ_m >= γ_f.
    pub fn validate(&self, allow_violation: bool) -> Result<()> {
        self.male.validate("male")?;
        self.female.validate("female")?;
        if allow_violation {
            return Ok(());
        }
        let mut ages: Vec<f64> = self.male.bands.iter().chain(&self.female.bands).map(|b| b.start).collect();
        ages.sort_by(f64::total_cmp);
        for a in ages {
            let (m, f) = (self.male.band_rate(a), self.female.band_rate(a));
            if m < f {
                return config(format!(
                    "male baseline hazard {m} below female {f} at age {a}: violates the male-excess mortality ordering b_m >= b_f"
                ));
            }
        }
        if self.male.fetal < self.female.fetal {
            return config("male fetal hazard below female: violates the male-excess mortality ordering u_m >= u_f");
        }
        if self.male.quality_exponent < self.female.quality_exponent {
            return config(
                "male quality exponent below female: violates the ordering kappa_m >= kappa_f (the weaker sex depletes its low-quality members faster)",
            );
        }
        if self.male.harshness_exponent < self.female.harshness_exponent {
            return config("male harshness exponent below female: violates the ordering gamma_m >= gamma_f");
        }
        Ok(())
    }
}

/// Death rate per year: `b_s(age) · (1 + H)^γ_s / Q^κ_s`.
pub fn hazard(sex: Sex, age: f64, quality: f64, harshness: f64, params: &HazardParams, gestation: f64) -> Result<f64> {
    if !(quality > 0.0 && quality <= 1.0) {
        return domain(format!("quality {quality} outside (0, 1]"));
    }
    if !(harshness >= 0.0) {
        return domain(format!("harshness {harshness} is negative"));
    }
    if !(age >= 0.0) {
        return domain(format!("negative age {age}"));
    }
    let p = params.for_sex(sex);
    Ok(p.baseline(age, gestation) * harshness_factor(harshness, p.harshness_exponent) * frailty(quality, p.quality_exponent))
}

#[inline]
pub fn harshness_factor(harshness: f64, exponent: f64) -> f64 {
    if exponent == 0.0 {
        1.0
    } else {
        (1.0 + harshness).powf(exponent)
    }
}

/// `Q^-κ`.
#[inline]
pub fn frailty(quality: f64, exponent: f64) -> f64 {
    if exponent == 0.0 {
        1.0
    } else {
        quality.powf(-exponent)
    }
}
