use serde::{Deserialize, Serialize};

use super::profile::sex_ratio;
use crate::model::Sex;

/// One live birth, as recorded by the engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BirthRecord {
    pub time: f64,
    pub sex: Sex,
    pub father_birth_order: u32,
    /// Subpopulation label of the father (0 = general population).
    pub father_group: u8,
    /// Whether the father was himself conceived during the run, so that his
    /// conception count is complete.
    pub father_native: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirthOrderRow {
    pub order: u32,
    pub males: u64,
    pub females: u64,
    pub sr: Option<f64>,
}

/// `SR[i]` for i = 1..=max observed order; rows with no births carry `None`.
pub fn sr_by_birth_order<'a, I>(records: I) -> Vec<BirthOrderRow>
where
    I: IntoIterator<Item = &'a BirthRecord>,
{
    let mut counts: Vec<(u64, u64)> = Vec::new();
    for r in records {
        let i = r.father_birth_order.max(1) as usize;
        if counts.len() < i {
            counts.resize(i, (0, 0));
        }
        match r.sex {
            Sex::Male => counts[i - 1].0 += 1,
            Sex::Female => counts[i - 1].1 += 1,
        }
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, (m, f))| BirthOrderRow {
            order: k as u32 + 1,
            males: m,
            females: f,
            sr: sex_ratio(m as f64, f as f64),
        })
        .collect()
}

/// Normal-approximation 95% interval for a sex ratio from binomial counts,
/// computed on the male proportion and mapped through `100 p / (1 - p)`.
pub fn sr_confidence_interval(males: u64, females: u64) -> Option<(f64, f64)> {
    let n = (males + females) as f64;
    if females == 0 || n == 0.0 {
        return None;
    }
    let p = males as f64 / n;
    let half = 1.96 * (p * (1.0 - p) / n).sqrt();
    let to_sr = |p: f64| 100.0 * p / (1.0 - p).max(1e-12);
    Some((to_sr((p - half).max(0.0)), to_sr((p + half).min(1.0 - 1e-12))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(sex: Sex, order: u32) -> BirthRecord {
        BirthRecord { time: 0.0, sex, father_birth_order: order, father_group: 0, father_native: true }
    }

    #[test]
    fn first_order_ratio() {
        let recs = [rec(Sex::Male, 1), rec(Sex::Male, 1), rec(Sex::Female, 1)];
        let t = sr_by_birth_order(&recs);
        assert_eq!(t[0].sr, Some(200.0));
    }

    #[test]
    fn gaps_are_sentinels() {
        let recs = [rec(Sex::Male, 1), rec(Sex::Female, 1), rec(Sex::Female, 3)];
        let t = sr_by_birth_order(&recs);
        assert_eq!(t.len(), 3);
        assert_eq!(t[1].sr, None);
        assert_eq!(t[2].sr, Some(0.0));
    }

    #[test]
    fn interval_brackets_point() {
        let (lo, hi) = sr_confidence_interval(5100, 4900).unwrap();
        let sr = 100.0 * 5100.0 / 4900.0;
        assert!(lo < sr && sr < hi);
        assert!(sr_confidence_interval(3, 0).is_none());
    }
}
