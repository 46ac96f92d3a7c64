use std::time::Instant;

use proptest::prelude::*;
use sexratio::config::BirthStream;
use sexratio::demography::cohort::{cohort_solve, CohortTable};
use sexratio::engine::race::{run_race_arm, Mode as RaceMode};
use sexratio::engine::{run, run_replicates, seeds_from, RaceConfig, Trajectory};
use sexratio::environment::Schedule;
use sexratio::scenarios::{builtin, calibrate, target_means, CalibrationSpec, FreeParam, Mode, Scenario, Statistic, Target, Window, BUILTINS, PENALTY};
use sexratio::stats::{mean_ci, MeanCi};
use sexratio::SimConfig;

fn scaled(s: &Scenario, size: usize) -> Scenario {
    let mut s = s.clone();
    s.config.initial.size = size;
    s.config.reproduction.carrying_capacity = size as f64;
    s
}

fn checks_every_step(t: &Trajectory, cfg: &SimConfig) {
    let end = t.extinction_time.unwrap_or(cfg.horizon);
    assert_eq!(t.conservation_checks, (end / cfg.dt).round() as u64 + 1);
}

fn sr_birth(t: &Trajectory, from: f64, to: f64) -> Option<f64> {
    t.summary(from, to).sr_birth
}

fn stream_config(n: usize, horizon: f64) -> (SimConfig, CohortTable) {
    let mut cfg = SimConfig::default();
    let sr0 = 150.0;
    let table = cohort_solve(&cfg, sr0, &cfg.natal_quality).unwrap();
    cfg.initial.size = n;
    cfg.initial.sr_conception = sr0;
    cfg.reproduction.carrying_capacity = n as f64;
    cfg.reproduction.birth_stream = Some(BirthStream { rate: n as f64 / table.mean_lifespan(), p_male: sr0 / (100.0 + sr0) });
    cfg.horizon = horizon;
    (cfg, table)
}

#[test]
fn renewal_rate_is_population_over_lifespan() {
    let (mut cfg, table) = stream_config(20_000, 110.0);
    cfg.record_interval = 1.0;
    let t = run(&cfg, &[], 7).unwrap();
    checks_every_step(&t, &cfg);
    let w = t.summary(100.0, 110.0);
    assert!(w.renewal.stationary, "drift {}", w.renewal.size_drift);

    // mean post-natal lifespan from the life table, pooled over the sexes at birth
    let b = table.birth_index();
    let remaining = |l: &[f64]| l[b..l.len() - 1].iter().sum::<f64>() * table.dt / l[b];
    let pm = table.male_share();
    let (bm, bf) = (pm * table.l_male[b], (1.0 - pm) * table.l_female[b]);
    let lifespan = (bm * remaining(&table.l_male) + bf * remaining(&table.l_female)) / (bm + bf);

    let expected = w.mean_population / lifespan;
    let rel = (w.renewal.rate - expected).abs() / expected;
    assert!(rel < 0.10, "renewal {} vs N/L {expected} ({rel})", w.renewal.rate);
}

#[test]
fn mc_profile_converges_like_inverse_root_n() {
    let mut devs = Vec::new();
    for n in [1_000usize, 10_000, 100_000] {
        let (mut cfg, table) = stream_config(n, 110.0);
        cfg.record_interval = 110.0;
        let t = run(&cfg, &[], 21).unwrap();
        checks_every_step(&t, &cfg);
        let p = &t.last().profile;
        let oracle = table.binned_sr(&p.grid);
        let sr = p.sr();
        let mut worst: f64 = 0.0;
        for b in 0..p.grid.bins() {
            if p.grid.edges[b + 1] > 70.0 {
                break;
            }
            if let (Some(o), Some(m)) = (oracle[b], sr[b]) {
                worst = worst.max((m - o).abs());
            }
        }
        devs.push((n, worst));
    }
    assert!(devs[0].1 > devs[1].1 && devs[1].1 > devs[2].1, "{devs:?}");
    let scaled: Vec<f64> = devs.iter().map(|&(n, d)| d * (n as f64).sqrt()).collect();
    let hi = scaled.iter().cloned().fold(f64::MIN, f64::max);
    let lo = scaled.iter().cloned().fold(f64::MAX, f64::min);
    assert!(hi / lo < 3.0, "deviation x sqrt(N) {scaled:?}");
}

#[test]
fn peace_defaults_give_typical_birth_ratio() {
    let s = scaled(&builtin("baseline_peace").unwrap(), 100_000);
    let set = run_replicates(&s.config, &s.events, &seeds_from(105, 4)).unwrap();
    let (a, b) = (s.measure.from, s.measure.to);
    let v: Vec<f64> = set.trajectories.iter().filter_map(|t| sr_birth(t, a, b)).collect();
    let m = mean_ci(&v).unwrap();
    assert!((104.0..=106.0).contains(&m.mean), "{m:?}");
}

#[test]
fn ci_width_shrinks_with_root_replicates() {
    let mut s = scaled(&builtin("baseline_peace").unwrap(), 2_000);
    s.config.horizon = 30.0;
    let set = run_replicates(&s.config, &s.events, &seeds_from(64, 64)).unwrap();
    let v: Vec<f64> = set.trajectories.iter().map(|t| sr_birth(t, 10.0, 30.0).unwrap()).collect();
    // average width over disjoint blocks of each size
    let width = |r: usize| {
        let w: Vec<f64> = v.chunks(r).map(|c| mean_ci(c).unwrap().half_width).collect();
        w.iter().sum::<f64>() / w.len() as f64
    };
    let (w4, w16, w64) = (width(4), width(16), width(64));
    for (ratio, label) in [(w4 / w16, "4/16"), (w16 / w64, "16/64")] {
        assert!((1.4..2.8).contains(&ratio), "width ratio {label} = {ratio}");
    }
}

#[test]
fn draft_raises_birth_ratio_over_paired_peace() {
    let war = builtin("war_draft").unwrap();
    let mut peace = war.clone();
    peace.events.clear();
    let seeds = seeds_from(32, 32);
    let (a, b) = (war.measure.from, war.measure.to);
    let w = run_replicates(&war.config, &war.events, &seeds).unwrap();
    let p = run_replicates(&peace.config, &peace.events, &seeds).unwrap();
    let diffs: Vec<f64> = w.trajectories.iter().zip(&p.trajectories).map(|(x, y)| sr_birth(x, a, b).unwrap() - sr_birth(y, a, b).unwrap()).collect();
    let d = mean_ci(&diffs).unwrap();
    assert!(d.lower() > 0.0, "uplift {d:?}");
}

fn lag(cfg: &RaceConfig, v: f64, seeds: &[u64]) -> MeanCi {
    let mut c = cfg.clone();
    c.drift.rate = v;
    let lags: Vec<f64> = seeds
        .iter()
        .filter_map(|&seed| {
            let t = run_race_arm(&c, seed).unwrap();
            let gaps: Vec<f64> = t.snapshots.iter().filter(|s| s.time >= 50.0).filter_map(|s| Some(s.optimum? - s.mean_genotype?)).collect();
            (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64)
        })
        .collect();
    mean_ci(&lags).unwrap()
}

#[test]
fn asexual_lag_grows_with_drift() {
    let cfg = RaceConfig { mode: RaceMode::Asexual, ..RaceConfig::default() };
    let seeds = seeds_from(5, 16);
    let lags: Vec<MeanCi> = [0.01, 0.03, 0.05].iter().map(|&v| lag(&cfg, v, &seeds)).collect();
    assert!(lags.windows(2).all(|w| w[0].mean < w[1].mean), "{lags:?}");
    assert!(lags[0].upper() < lags[2].lower(), "{lags:?}");
}

#[test]
fn every_builtin_runs_at_ten_thousand_within_a_minute() {
    for name in BUILTINS {
        let s = builtin(name).unwrap();
        let start = Instant::now();
        if s.mode == Mode::Tracking {
            let (sexual, asexual) = s.race.as_ref().unwrap().arms();
            for arm in [sexual, asexual] {
                let t = run_race_arm(&arm, 1).unwrap();
                checks_every_step(&t, &SimConfig { dt: arm.dt, horizon: arm.horizon, ..SimConfig::default() });
            }
        } else {
            let s = scaled(&s, 10_000);
            let t = run(&s.config, &s.events, 1).unwrap();
            checks_every_step(&t, &s.config);
            assert!(!t.extinct, "{name} went extinct");
        }
        let secs = start.elapsed().as_secs_f64();
        assert!(secs < 60.0, "{name} took {secs:.0} s");
    }
}

#[test]
fn comfort_drives_sons_toward_zero() {
    let s = builtin("comfort_parthenogenesis").unwrap();
    let t = run(&s.config, &s.events, 3).unwrap();
    let late = sr_birth(&t, 20.0, 30.0).unwrap();
    assert!(late < 5.0, "SR(t_b) {late}");
}

// ---------------------------------------------------------------- calibration

fn small_peace() -> Scenario {
    let mut s = scaled(&builtin("baseline_peace").unwrap(), 3_000);
    s.config.horizon = 30.0;
    s.measure = Window { from: 10.0, to: 30.0 };
    s
}

fn two_targets(s: &Scenario, values: [f64; 2]) -> Vec<Target> {
    [Statistic::SrBirth, Statistic::SrConception]
        .iter()
        .zip(values)
        .map(|(&statistic, value)| Target { statistic, group: None, from: s.measure.from, to: s.measure.to, value, weight: 1.0 })
        .collect()
}

#[test]
fn calibration_recovers_known_parameters() {
    let mut truth = small_peace();
    truth.config.reproduction.preconception.p_base = 0.6;
    truth.config.hazard.male.fetal = 0.45;
    truth.targets = two_targets(&truth, [0.0, 0.0]);
    let seed = 77;
    let spec = CalibrationSpec {
        free: vec![
            FreeParam { name: "config.reproduction.preconception.p_base".into(), lower: 0.55, upper: 0.7 },
            FreeParam { name: "config.hazard.male.fetal".into(), lower: 0.15, upper: 0.8 },
        ],
        budget: 500,
        replicates: 2,
        tolerance: 1.0,
        ftol: 1e-4,
    };
    let (generated, _) = target_means(&truth, &seeds_from(seed, spec.replicates)).unwrap();

    let mut s = small_peace();
    s.targets = two_targets(&s, [generated[0].unwrap(), generated[1].unwrap()]);
    s.calibration = Some(spec.clone());
    let r = calibrate(&s, seed).unwrap();
    assert!(r.evaluations <= 500);
    assert!(r.objective < spec.tolerance, "objective {} after {} evaluations", r.objective, r.evaluations);
    assert!(r.feasible, "{:?}", r.residuals);
}

#[test]
fn impossible_target_is_flagged_infeasible() {
    let mut s = small_peace();
    s.targets[0].value = 500.0;
    s.calibration.as_mut().unwrap().budget = 20;
    let r = calibrate(&s, 9).unwrap();
    assert!(!r.feasible);
    assert!(r.objective < PENALTY);
    assert!(r.evaluations <= 20);
}

#[test]
fn calibration_is_deterministic_and_in_bounds() {
    let mut s = small_peace();
    // a target above reach pushes the fit against the upper bound
    s.targets[0].value = 400.0;
    s.calibration.as_mut().unwrap().budget = 25;
    let a = calibrate(&s, 12).unwrap();
    let b = calibrate(&s, 12).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    for p in &a.params {
        assert!(p.value >= p.lower && p.value <= p.upper, "{p:?}");
    }
}

// ---------------------------------------------------------------- invariants

fn random_config(size: usize, harshness: f64, sr0: f64, dt: f64, horizon: f64, famine: bool) -> SimConfig {
    let mut c = SimConfig::default();
    c.initial.size = size;
    c.initial.sr_conception = sr0;
    c.reproduction.carrying_capacity = size as f64;
    c.dt = dt;
    c.horizon = horizon;
    c.record_interval = 1.0;
    c.environment.harshness = Schedule::constant(harshness);
    if famine {
        c.environment.nutrition = Schedule::from_pairs(&[(0.0, 1.0), (1.0, 0.2), (2.0, 1.0)]);
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn runs_conserve_individuals_and_repeat_exactly(
        size in 100usize..600,
        harshness in 0.0f64..2.0,
        sr0 in 100.0f64..200.0,
        dt in prop::sample::select(vec![0.05, 0.025, 0.0125]),
        horizon in 1u32..8,
        famine in any::<bool>(),
        seed in any::<u64>(),
    ) {
        // whole years, so the last snapshot is taken at the final step
        let cfg = random_config(size, harshness, sr0, dt, horizon as f64, famine);
        let a = run(&cfg, &[], seed).unwrap();
        let b = run(&cfg, &[], seed).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        checks_every_step(&a, &cfg);
        let last = a.last();
        let present = last.alive[0] + last.alive[1] + last.in_utero[0] + last.in_utero[1];
        prop_assert_eq!(a.tallies.expected_present(), present);
        for s in &a.snapshots {
            let counted: u64 = s.profile.males.iter().chain(&s.profile.females).sum();
            // survivors past the last grid edge are not binned
            prop_assert!(counted <= s.population() + s.in_utero[0] + s.in_utero[1]);
        }
    }

    #[test]
    fn recorded_times_increase(horizon in 0.0f64..6.0, seed in any::<u64>()) {
        let cfg = random_config(200, 0.4, 150.0, 0.05, horizon, false);
        let t = run(&cfg, &[], seed).unwrap();
        prop_assert!(t.snapshots.windows(2).all(|w| w[0].time < w[1].time));
        prop_assert_eq!(t.snapshots[0].time, 0.0);
    }
}
