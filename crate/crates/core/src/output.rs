//! Run summaries and plot-ready tables.
//!
//! CSV files are long or tidy tables with a fixed column order. Floats are
//! written in shortest round-trip decimal form; undefined values are empty
//! fields.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::demography::birth_order::{sr_by_birth_order, sr_confidence_interval, BirthRecord};
use crate::demography::profile::SrProfile;
use crate::engine::race::RaceResult;
use crate::engine::trajectory::crossing_curve;
use crate::engine::{ReplicateSet, Trajectory};
use crate::error::{Error, Result};
use crate::model::Sex;
use crate::scenarios::{evaluate, Scenario, Statistic, SweepRow};
use crate::stats::{mean_ci, MeanCi};

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

/// Shortest round-trip decimal, or an empty field.
pub fn fmt_f64(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        Some(x) if x.is_nan() => "NaN".to_string(),
        Some(x) => if x > 0.0 { "inf" } else { "-inf" }.to_string(),
        None => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetCheck {
    pub statistic: Statistic,
    pub group: Option<u8>,
    pub from: f64,
    pub to: f64,
    pub target: f64,
    pub value: Option<MeanCi>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirthOrderSummary {
    pub order: u32,
    pub males: u64,
    pub females: u64,
    pub sr: Option<f64>,
    pub ci: Option<(f64, f64)>,
}

/// Headline statistics over the measurement window, with replicate CIs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub seed: u64,
    pub replicate_seeds: Vec<u64>,
    pub window: (f64, f64),
    pub sr_birth: Option<MeanCi>,
    pub sr_conception: Option<MeanCi>,
    pub parity_age: Option<MeanCi>,
    pub quality_parity_age: Option<MeanCi>,
    /// Births per year.
    pub renewal_rate: Option<MeanCi>,
    pub final_population: Option<MeanCi>,
    pub extinct: Vec<bool>,
    pub extinction_times: Vec<Option<f64>>,
    pub births: u64,
    pub birth_order: Vec<BirthOrderSummary>,
    pub targets: Vec<TargetCheck>,
    /// The fully resolved scenario, defaults expanded.
    pub config: Scenario,
}

fn ci_of(runs: &[Trajectory], f: impl Fn(&Trajectory) -> Option<f64>) -> Option<MeanCi> {
    let v: Vec<f64> = runs.iter().filter_map(f).collect();
    mean_ci(&v)
}

pub fn summarize(scenario: &Scenario, seed: u64, set: &ReplicateSet) -> RunSummary {
    let (a, b) = (scenario.measure.from, scenario.measure.to);
    let runs = &set.trajectories;
    let stat = |s: Statistic| ci_of(runs, move |t| evaluate(t, s, None, a, b));
    let records: Vec<&BirthRecord> = runs.iter().flat_map(|t| t.births.iter().filter(move |r| r.father_native && r.time >= a && r.time < b)).collect();
    let birth_order = sr_by_birth_order(records)
        .into_iter()
        .map(|r| BirthOrderSummary { order: r.order, males: r.males, females: r.females, sr: r.sr, ci: sr_confidence_interval(r.males, r.females) })
        .collect();
    let targets = scenario
        .targets
        .iter()
        .map(|t| TargetCheck { statistic: t.statistic, group: t.group, from: t.from, to: t.to, target: t.value, value: ci_of(runs, |r| t.evaluate(r)) })
        .collect();
    RunSummary {
        scenario: scenario.name.clone(),
        seed,
        replicate_seeds: set.seeds.clone(),
        window: (a, b),
        sr_birth: stat(Statistic::SrBirth),
        sr_conception: stat(Statistic::SrConception),
        parity_age: stat(Statistic::ParityAge),
        quality_parity_age: stat(Statistic::QualityParityAge),
        renewal_rate: ci_of(runs, |t| Some(t.summary(a, b).renewal.rate)),
        final_population: ci_of(runs, |t| Some(t.last().population() as f64)),
        extinct: runs.iter().map(|t| t.extinct).collect(),
        extinction_times: runs.iter().map(|t| t.extinction_time).collect(),
        births: runs.iter().map(|t| t.tallies.born.iter().sum::<u64>()).sum(),
        birth_order,
        targets,
        config: scenario.clone(),
    }
}

pub fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value).map_err(io_err)?;
    writeln!(w).map_err(io_err)
}

fn csv_writer<W: Write>(w: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut c = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w);
    c.write_record(header).map_err(io_err)?;
    Ok(c)
}

fn finish<W: Write>(c: csv::Writer<W>) -> Result<()> {
    c.into_inner().map_err(io_err)?.flush().map_err(io_err)
}

/// Long form: one row per (time, statistic, replicate).
pub fn write_trajectory_csv<W: Write>(w: W, runs: &[Trajectory]) -> Result<()> {
    let mut c = csv_writer(w, &["time", "statistic", "value", "replicate"])?;
    for (r, t) in runs.iter().enumerate() {
        for s in &t.snapshots {
            let rows: [(&str, Option<f64>); 14] = [
                ("population", Some(s.population() as f64)),
                ("alive_male", Some(s.alive[0] as f64)),
                ("alive_female", Some(s.alive[1] as f64)),
                ("in_utero_male", Some(s.in_utero[0] as f64)),
                ("in_utero_female", Some(s.in_utero[1] as f64)),
                ("births", Some((s.births[0] + s.births[1]) as f64)),
                ("conceptions", Some((s.conceptions[0] + s.conceptions[1]) as f64)),
                ("deaths", Some((s.deaths[0] + s.deaths[1]) as f64)),
                ("fetal_deaths", Some((s.fetal_deaths[0] + s.fetal_deaths[1]) as f64)),
                ("sr_birth", s.sr_birth()),
                ("sr_conception", s.sr_conception()),
                ("sr_population", crate::demography::profile::sex_ratio(s.alive[0] as f64, s.alive[1] as f64)),
                ("mean_genotype", s.mean_genotype),
                ("optimum", s.optimum),
            ];
            for (name, v) in rows {
                if v.is_none() && matches!(name, "mean_genotype" | "optimum") {
                    continue;
                }
                c.write_record([fmt_f64(Some(s.time)), name.to_string(), fmt_f64(v), r.to_string()]).map_err(io_err)?;
            }
        }
    }
    finish(c)
}

/// `SR(t)` by age bin for every snapshot, with mean qualities.
pub fn write_profiles_csv<W: Write>(w: W, runs: &[Trajectory]) -> Result<()> {
    let mut c = csv_writer(w, &["replicate", "time", "age_from", "age_to", "males", "females", "sr", "sr_smoothed", "q_male", "q_female"])?;
    for (r, t) in runs.iter().enumerate() {
        for s in &t.snapshots {
            let p = &s.profile;
            let (_, smoothed) = crossing_curve(p, &p.sr());
            let sr = p.sr();
            let (qm, qf) = (p.mean_quality(Sex::Male), p.mean_quality(Sex::Female));
            for b in 0..p.grid.bins() {
                c.write_record([
                    r.to_string(),
                    fmt_f64(Some(s.time)),
                    fmt_f64(Some(p.grid.edges[b])),
                    fmt_f64(Some(p.grid.edges[b + 1])),
                    p.males[b].to_string(),
                    p.females[b].to_string(),
                    fmt_f64(sr[b]),
                    fmt_f64(smoothed[b]),
                    fmt_f64(qm[b]),
                    fmt_f64(qf[b]),
                ])
                .map_err(io_err)?;
            }
        }
    }
    finish(c)
}

/// `SR(t_b)` per recording interval and replicate.
pub fn write_sr_birth_csv<W: Write>(w: W, runs: &[Trajectory]) -> Result<()> {
    let mut c = csv_writer(w, &["time", "replicate", "males", "females", "sr_birth"])?;
    for (r, t) in runs.iter().enumerate() {
        for s in t.snapshots.iter().filter(|s| s.span > 0.0) {
            c.write_record([fmt_f64(Some(s.time)), r.to_string(), s.births[0].to_string(), s.births[1].to_string(), fmt_f64(s.sr_birth())])
                .map_err(io_err)?;
        }
    }
    finish(c)
}

pub fn write_birth_order_csv<W: Write>(w: W, rows: &[BirthOrderSummary]) -> Result<()> {
    let mut c = csv_writer(w, &["order", "males", "females", "sr", "ci_lower", "ci_upper"])?;
    for r in rows {
        c.write_record([
            r.order.to_string(),
            r.males.to_string(),
            r.females.to_string(),
            fmt_f64(r.sr),
            fmt_f64(r.ci.map(|x| x.0)),
            fmt_f64(r.ci.map(|x| x.1)),
        ])
        .map_err(io_err)?;
    }
    finish(c)
}

/// Profile pooled over the measurement window of every replicate.
pub fn pooled_profile(runs: &[Trajectory], from: f64, to: f64) -> Option<SrProfile> {
    let mut out: Option<SrProfile> = None;
    for t in runs {
        if let Some(p) = t.summary(from, to).profile {
            match out.as_mut() {
                Some(o) => o.merge(&p),
                None => out = Some(p),
            }
        }
    }
    out
}

/// Mean male and female quality by age, with standard errors and the
/// smoothed ratio used for the quality crossing.
pub fn write_quality_csv<W: Write>(w: W, profile: &SrProfile) -> Result<()> {
    let mut c = csv_writer(w, &["age", "q_male", "q_male_se", "q_female", "q_female_se", "ratio_smoothed"])?;
    let (qm, qf) = (profile.mean_quality(Sex::Male), profile.mean_quality(Sex::Female));
    let (sm, sf) = (profile.quality_se(Sex::Male), profile.quality_se(Sex::Female));
    let (ages, cm) = crossing_curve(profile, &qm);
    let (_, cf) = crossing_curve(profile, &qf);
    for b in 0..ages.len() {
        let ratio = match (cm[b], cf[b]) {
            (Some(m), Some(f)) if f > 0.0 => Some(m / f),
            _ => None,
        };
        c.write_record([fmt_f64(Some(ages[b])), fmt_f64(qm[b]), fmt_f64(sm[b]), fmt_f64(qf[b]), fmt_f64(sf[b]), fmt_f64(ratio)]).map_err(io_err)?;
    }
    finish(c)
}

pub fn write_sweep_csv<W: Write>(w: W, parameter: &str, rows: &[SweepRow]) -> Result<()> {
    let mut c = csv_writer(
        w,
        &[
            "parameter",
            "value",
            "sr_birth",
            "sr_birth_lower",
            "sr_birth_upper",
            "parity_age",
            "parity_age_lower",
            "parity_age_upper",
            "quality_parity_age",
            "quality_parity_age_lower",
            "quality_parity_age_upper",
            "extinctions",
            "error",
        ],
    )?;
    let triple = |m: &Option<MeanCi>| [fmt_f64(m.map(|x| x.mean)), fmt_f64(m.map(|x| x.lower())), fmt_f64(m.map(|x| x.upper()))];
    for r in rows {
        let mut rec = vec![parameter.to_string(), fmt_f64(Some(r.value))];
        rec.extend(triple(&r.sr_birth));
        rec.extend(triple(&r.parity_age));
        rec.extend(triple(&r.quality_parity_age));
        rec.push(r.extinctions.to_string());
        rec.push(r.error.clone().unwrap_or_default());
        c.write_record(&rec).map_err(io_err)?;
    }
    finish(c)
}

pub fn write_race_csv<W: Write>(w: W, rows: &[RaceResult]) -> Result<()> {
    let mut c = csv_writer(
        w,
        &[
            "drift",
            "replicates",
            "extinct_sexual",
            "extinct_asexual",
            "p_ext_sexual",
            "p_ext_sexual_lower",
            "p_ext_sexual_upper",
            "p_ext_asexual",
            "p_ext_asexual_lower",
            "p_ext_asexual_upper",
            "sexual_advantage",
        ],
    )?;
    for r in rows {
        let n = r.replicates as f64;
        c.write_record([
            fmt_f64(Some(r.drift)),
            r.replicates.to_string(),
            r.extinct_sexual.to_string(),
            r.extinct_asexual.to_string(),
            fmt_f64(Some(r.extinct_sexual as f64 / n)),
            fmt_f64(Some(r.p_ext_sexual.lower())),
            fmt_f64(Some(r.p_ext_sexual.upper())),
            fmt_f64(Some(r.extinct_asexual as f64 / n)),
            fmt_f64(Some(r.p_ext_asexual.lower())),
            fmt_f64(Some(r.p_ext_asexual.upper())),
            r.sexual_advantage.to_string(),
        ])
        .map_err(io_err)?;
    }
    finish(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 105.0, 1e-300, -2.5] {
            assert_eq!(fmt_f64(Some(x)).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(Some(105.0)), "105");
        assert_eq!(fmt_f64(None), "");
    }

    #[test]
    fn sweep_csv_has_fixed_header() {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, "h", &[SweepRow { value: 0.1, sr_birth: None, parity_age: None, quality_parity_age: None, extinctions: 0, error: Some("a, b".into()) }]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("parameter,value,sr_birth,"));
        assert!(text.contains("\"a, b\""), "{text}");
    }
}
