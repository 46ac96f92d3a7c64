use serde::{Deserialize, Serialize};

use crate::demography::birth_order::{sr_by_birth_order, BirthOrderRow, BirthRecord};
use crate::demography::parity::{parity_age_numbers, parity_age_quality};
use crate::demography::profile::{sex_ratio, smooth_centered, SrProfile};
use crate::demography::renewal::{renewal_rate, RenewalEstimate, RenewalSample};
use crate::error::ParityError;
use crate::model::Sex;

/// Cumulative event counts since t = 0, indexed `[male, female]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tallies {
    pub initial: u64,
    pub conceived: [u64; 2],
    pub born: [u64; 2],
    pub fetal_deaths: [u64; 2],
    pub deaths: [u64; 2],
}

impl Tallies {
    /// Individuals that entered minus individuals that left.
    pub fn expected_present(&self) -> u64 {
        let sum = |a: [u64; 2]| a[0] + a[1];
        self.initial + sum(self.conceived) - sum(self.fetal_deaths) - sum(self.deaths)
    }
}

/// State of the population at a recording time, with counts for the interval
/// that ended there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub alive: [u64; 2],
    pub in_utero: [u64; 2],
    pub profile: SrProfile,
    pub conceptions: [u64; 2],
    pub births: [u64; 2],
    /// Births by the father's group label.
    pub births_by_group: Vec<[u64; 2]>,
    pub deaths: [u64; 2],
    pub fetal_deaths: [u64; 2],
    /// Length of the interval in years (0 for the initial snapshot).
    pub span: f64,
    pub mean_genotype: Option<f64>,
    pub optimum: Option<f64>,
}

impl Snapshot {
    pub fn population(&self) -> u64 {
        self.alive[0] + self.alive[1]
    }

    pub fn sr_birth(&self) -> Option<f64> {
        sex_ratio(self.births[0] as f64, self.births[1] as f64)
    }

    pub fn sr_conception(&self) -> Option<f64> {
        sex_ratio(self.conceptions[0] as f64, self.conceptions[1] as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub dt: f64,
    pub gestation: f64,
    pub snapshots: Vec<Snapshot>,
    pub births: Vec<BirthRecord>,
    pub extinct: bool,
    pub extinction_time: Option<f64>,
    pub tallies: Tallies,
    /// Steps at which the accounting identity was checked.
    pub conservation_checks: u64,
}

/// Statistics pooled over the recording intervals that end inside a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub from: f64,
    pub to: f64,
    pub births: [u64; 2],
    pub conceptions: [u64; 2],
    pub sr_birth: Option<f64>,
    pub sr_conception: Option<f64>,
    pub births_by_group: Vec<[u64; 2]>,
    /// Sum of the snapshot profiles in the window.
    pub profile: Option<SrProfile>,
    pub parity_age: Result<f64, ParityError>,
    pub quality_parity_age: Result<f64, ParityError>,
    pub renewal: RenewalEstimate,
    pub mean_population: f64,
}

impl WindowSummary {
    pub fn group_sr_birth(&self, group: usize) -> Option<f64> {
        let b = self.births_by_group.get(group)?;
        sex_ratio(b[0] as f64, b[1] as f64)
    }
}

pub const SMOOTHING_WIDTH: usize = 3;

/// Ages and values for crossing detection: the fetal bin as is, then the
/// smoothed post-natal bins.
pub fn crossing_curve(profile: &SrProfile, values: &[Option<f64>]) -> (Vec<f64>, Vec<Option<f64>>) {
    let ages = profile.grid.midpoints();
    let mut out = vec![values[0]];
    out.extend(smooth_centered(&values[1..], SMOOTHING_WIDTH));
    (ages, out)
}

pub fn profile_parity_age(profile: &SrProfile) -> Result<f64, ParityError> {
    let (ages, sr) = crossing_curve(profile, &profile.sr());
    parity_age_numbers(&ages, &sr)
}

pub fn profile_quality_parity_age(profile: &SrProfile) -> Result<f64, ParityError> {
    let (ages, qm) = crossing_curve(profile, &profile.mean_quality(Sex::Male));
    let (_, qf) = crossing_curve(profile, &profile.mean_quality(Sex::Female));
    parity_age_quality(&ages, &qm, &qf)
}

impl Trajectory {
    /// Snapshots whose interval ends in `(from, to]`.
    pub fn window(&self, from: f64, to: f64) -> impl Iterator<Item = &Snapshot> {
        self.snapshots.iter().filter(move |s| s.span > 0.0 && s.time > from + 1e-9 && s.time <= to + 1e-9)
    }

    pub fn summary(&self, from: f64, to: f64) -> WindowSummary {
        let mut births = [0; 2];
        let mut conceptions = [0; 2];
        let mut groups: Vec<[u64; 2]> = Vec::new();
        let mut profile: Option<SrProfile> = None;
        let mut samples = Vec::new();
        for s in self.window(from, to) {
            for k in 0..2 {
                births[k] += s.births[k];
                conceptions[k] += s.conceptions[k];
            }
            if groups.len() < s.births_by_group.len() {
                groups.resize(s.births_by_group.len(), [0; 2]);
            }
            for (g, b) in s.births_by_group.iter().enumerate() {
                groups[g][0] += b[0];
                groups[g][1] += b[1];
            }
            match profile.as_mut() {
                Some(p) => p.merge(&s.profile),
                None => profile = Some(s.profile.clone()),
            }
            samples.push(RenewalSample { time: s.time, span: s.span, population: s.population(), births: s.births[0] + s.births[1] });
        }
        let (parity_age, quality_parity_age) = match &profile {
            Some(p) => (profile_parity_age(p), profile_quality_parity_age(p)),
            None => (Err(ParityError::Empty), Err(ParityError::Empty)),
        };
        let mean_population = if samples.is_empty() {
            0.0
        } else {
            samples.iter().map(|s| s.population as f64).sum::<f64>() / samples.len() as f64
        };
        WindowSummary {
            from,
            to,
            births,
            conceptions,
            sr_birth: sex_ratio(births[0] as f64, births[1] as f64),
            sr_conception: sex_ratio(conceptions[0] as f64, conceptions[1] as f64),
            births_by_group: groups,
            profile,
            parity_age,
            quality_parity_age,
            renewal: renewal_rate(&samples),
            mean_population,
        }
    }

    /// `SR[i]` over births in `(from, to]` whose fathers were conceived during
    /// the run, so that birth orders are complete.
    pub fn birth_order_table(&self, from: f64, to: f64) -> Vec<BirthOrderRow> {
        sr_by_birth_order(self.births.iter().filter(|b| b.father_native && b.time > from && b.time <= to))
    }

    /// `(time, SR(t_b))` for each recording interval.
    pub fn sr_birth_series(&self) -> Vec<(f64, Option<f64>)> {
        self.snapshots.iter().filter(|s| s.span > 0.0).map(|s| (s.time, s.sr_birth())).collect()
    }

    /// Birth-cohort sex ratio of births in `[from, to)`, from birth records.
    pub fn cohort_sr(&self, from: f64, to: f64) -> Option<f64> {
        let mut c = [0u64; 2];
        for b in self.births.iter().filter(|b| b.time >= from && b.time < to) {
            c[if b.sex.is_male() { 0 } else { 1 }] += 1;
        }
        sex_ratio(c[0] as f64, c[1] as f64)
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory has an initial snapshot")
    }
}
