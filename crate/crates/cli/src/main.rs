//! `sexratio`: run scenarios, sweep a parameter, calibrate, race sexual
//! against asexual populations, and verify stored artifacts.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sexratio::engine::{run_replicates, seeds_from, tracking_race};
use sexratio::output::{self, summarize};
use sexratio::scenarios::{apply_assignments, builtin, calibrate, load_scenario, sweep, Mode, Scenario};
use sexratio::Error;

const OUT_ENV: &str = "SEXRATIO_OUT";

#[derive(Parser, Debug)]
#[command(name = "sexratio", version, about = "Age-resolved sex-ratio population simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write trajectories, profiles and a summary.
    Run(RunArgs),
    /// Run one scenario at every value of a parameter grid.
    Sweep(SweepArgs),
    /// Fit the scenario's free parameters to its targets.
    Calibrate(CalibrateArgs),
    /// Sexual versus asexual extinction under a drifting optimum.
    Race(RaceArgs),
    /// Re-run the invocations recorded in an output directory and compare.
    Report(ReportArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Built-in scenario name.
    #[arg(long, conflicts_with = "config")]
    scenario: Option<String>,
    /// Scenario file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed. Required: runs are never seeded implicitly.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of replicates.
    #[arg(long)]
    replicates: Option<usize>,
    /// Output directory.
    #[arg(long, env = OUT_ENV, default_value = "out")]
    out: PathBuf,
    /// Comma-separated output formats.
    #[arg(long, value_delimiter = ',', default_value = "csv,json")]
    format: Vec<Format>,
    /// Override a scenario value, `path=value` with a JSON value.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    set: Vec<String>,
    /// Suppress progress messages.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Dotted parameter path, e.g. `config.environment.harshness`.
    #[arg(long)]
    param: String,
    /// Comma-separated values.
    #[arg(long, default_value = "")]
    grid: String,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[command(flatten)]
    common: Common,
    /// Maximum objective evaluations.
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Args, Debug)]
struct RaceArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated drift rates.
    #[arg(long, value_delimiter = ',')]
    drift: Vec<f64>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Output directory to verify.
    #[arg(long)]
    verify: PathBuf,
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn fail(code: u8, error: impl Into<anyhow::Error>) -> Failure {
    Failure { code, error: error.into() }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Parse { .. } | Error::UnknownScenario { .. } | Error::Domain(_) | Error::Unsupported(_) => 1,
            Error::Parity(_) | Error::Io(_) => 2,
        };
        fail(code, e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        fail(2, e)
    }
}

type Outcome<T> = Result<T, Failure>;

/// What was run, with the scenario fully resolved; stored next to the
/// artifacts so that `report --verify` can repeat it.
fn manifest(command: &str, scenario: &Scenario, seed: u64, replicates: Option<usize>, formats: &[Format], extra: Value) -> Value {
    json!({
        "command": command,
        "seed": seed,
        "replicates": replicates,
        "formats": formats.iter().map(|f| match f { Format::Csv => "csv", Format::Json => "json" }).collect::<Vec<_>>(),
        "extra": extra,
        "scenario": scenario,
    })
}

/// Files are written to a hidden staging name and renamed into place.
struct Artifacts {
    dir: PathBuf,
    prefix: String,
    written: Vec<PathBuf>,
}

impl Artifacts {
    fn new(dir: &Path, scenario: &str, seed: u64) -> Outcome<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), prefix: format!("{scenario}_seed{seed}"), written: Vec::new() })
    }

    fn write(&mut self, kind: &str, f: impl FnOnce(BufWriter<&mut fs::File>) -> sexratio::Result<()>) -> Outcome<()> {
        let name = format!("{}_{kind}", self.prefix);
        let staging = self.dir.join(format!(".{name}.partial"));
        let target = self.dir.join(&name);
        let mut file = fs::File::create(&staging).with_context(|| format!("cannot write {}", staging.display()))?;
        f(BufWriter::new(&mut file)).map_err(|e| fail(2, e))?;
        file.sync_all().context("cannot flush output")?;
        fs::rename(&staging, &target).with_context(|| format!("cannot move {} into place", target.display()))?;
        self.written.push(target);
        Ok(())
    }
}

fn resolve(common: &Common) -> Outcome<(Scenario, u64)> {
    let seed = common.seed.ok_or_else(|| {
        fail(1, anyhow::anyhow!("--seed is required: every run must be reproducible from its configuration and seed"))
    })?;
    let base = match (&common.scenario, &common.config) {
        (Some(name), None) => builtin(name)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| fail(1, anyhow::anyhow!("cannot read {}: {e}", path.display())))?;
            load_scenario(&text)?
        }
        _ => return Err(fail(1, anyhow::anyhow!("give exactly one of --scenario or --config"))),
    };
    let s = apply_assignments(&base, &common.set)?;
    if common.replicates == Some(0) {
        return Err(fail(1, anyhow::anyhow!("--replicates must be at least 1")));
    }
    if common.format.is_empty() {
        return Err(fail(1, anyhow::anyhow!("--format needs at least one of csv, json")));
    }
    Ok((s, seed))
}

fn say(quiet: bool, msg: impl AsRef<str>) {
    if !quiet {
        eprintln!("{}", msg.as_ref());
    }
}

fn cmd_run(common: &Common) -> Outcome<Vec<PathBuf>> {
    let (s, seed) = resolve(common)?;
    if s.mode == Mode::Tracking {
        return Err(fail(1, anyhow::anyhow!("scenario `{}` is a tracking race; use the race subcommand", s.name)));
    }
    let reps = common.replicates.unwrap_or(8);
    say(common.quiet, format!("running {} with {reps} replicates, seed {seed}", s.name));
    let set = run_replicates(&s.config, &s.events, &seeds_from(seed, reps))?;
    let summary = summarize(&s, seed, &set);
    let mut out = Artifacts::new(&common.out, &s.name, seed)?;
    let csv = common.format.contains(&Format::Csv);
    if csv {
        let runs = &set.trajectories;
        out.write("trajectory.csv", |w| output::write_trajectory_csv(w, runs))?;
        out.write("profiles.csv", |w| output::write_profiles_csv(w, runs))?;
        out.write("sr_birth.csv", |w| output::write_sr_birth_csv(w, runs))?;
        out.write("birth_order.csv", |w| output::write_birth_order_csv(w, &summary.birth_order))?;
        if let Some(p) = output::pooled_profile(runs, s.measure.from, s.measure.to) {
            out.write("quality.csv", |w| output::write_quality_csv(w, &p))?;
        }
    }
    if common.format.contains(&Format::Json) {
        out.write("summary.json", |w| output::write_json(w, &summary))?;
    }
    let m = manifest("run", &s, seed, Some(reps), &common.format, Value::Null);
    out.write("manifest.json", |w| output::write_json(w, &m))?;
    if let Some(ci) = summary.sr_birth {
        say(common.quiet, format!("SR(t_b) = {:.2} ± {:.2}", ci.mean, ci.half_width));
    }
    let extinct = summary.extinct.iter().filter(|&&e| e).count();
    if extinct > 0 {
        return Err(fail(3, anyhow::anyhow!("{extinct} of {reps} replicates went extinct before the horizon; partial outputs written to {}", common.out.display())));
    }
    Ok(out.written)
}

fn cmd_sweep(a: &SweepArgs) -> Outcome<Vec<PathBuf>> {
    let (s, seed) = resolve(&a.common)?;
    let grid = parse_grid(&a.grid)?;
    if grid.is_empty() {
        return Err(fail(1, anyhow::anyhow!("--grid is empty")));
    }
    let reps = a.common.replicates.unwrap_or(8);
    say(a.common.quiet, format!("sweeping {} over {} values", a.param, grid.len()));
    let rows = sweep(&s, &a.param, &grid, reps, seed)?;
    let mut out = Artifacts::new(&a.common.out, &s.name, seed)?;
    let kind = a.param.replace(['.', '/'], "_");
    if a.common.format.contains(&Format::Csv) {
        out.write(&format!("sweep_{kind}.csv"), |w| output::write_sweep_csv(w, &a.param, &rows))?;
    }
    if a.common.format.contains(&Format::Json) {
        out.write(&format!("sweep_{kind}.json"), |w| output::write_json(w, &json!({ "parameter": a.param, "rows": rows, "config": s })))?;
    }
    let m = manifest("sweep", &s, seed, Some(reps), &a.common.format, json!({ "param": a.param, "grid": a.grid }));
    out.write(&format!("sweep_{kind}_manifest.json"), |w| output::write_json(w, &m))?;
    for r in rows.iter().filter(|r| r.error.is_some()) {
        say(a.common.quiet, format!("cell {} failed: {}", r.value, r.error.as_deref().unwrap_or("")));
    }
    Ok(out.written)
}

fn parse_grid(text: &str) -> Outcome<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<f64>().map_err(|e| fail(1, anyhow::anyhow!("grid value `{v}`: {e}"))))
        .collect()
}

fn cmd_calibrate(a: &CalibrateArgs) -> Outcome<Vec<PathBuf>> {
    let (mut s, seed) = resolve(&a.common)?;
    let Some(spec) = s.calibration.as_mut() else {
        return Err(fail(1, anyhow::anyhow!("scenario `{}` declares no calibration", s.name)));
    };
    if let Some(b) = a.budget {
        spec.budget = b;
    }
    if let Some(r) = a.common.replicates {
        spec.replicates = r;
    }
    s.validate()?;
    say(a.common.quiet, format!("calibrating {}", s.name));
    let report = calibrate(&s, seed)?;
    let fitted = report.apply(&s)?;
    let mut out = Artifacts::new(&a.common.out, &s.name, seed)?;
    if a.common.format.contains(&Format::Json) {
        out.write("calibration.json", |w| output::write_json(w, &report))?;
    }
    let text = fitted.to_toml()?;
    out.write("fitted.toml", |mut w| {
        use std::io::Write;
        w.write_all(text.as_bytes()).map_err(Error::from)?;
        w.flush().map_err(Error::from)
    })?;
    let m = manifest("calibrate", &s, seed, None, &a.common.format, Value::Null);
    out.write("calibration_manifest.json", |w| output::write_json(w, &m))?;
    say(a.common.quiet, format!("objective {:.4} after {} evaluations; feasible: {}", report.objective, report.evaluations, report.feasible));
    Ok(out.written)
}

fn cmd_race(a: &RaceArgs) -> Outcome<Vec<PathBuf>> {
    let (s, seed) = resolve(&a.common)?;
    let Some(spec) = s.race.clone() else {
        return Err(fail(1, anyhow::anyhow!("scenario `{}` has no race section", s.name)));
    };
    let drifts = if a.drift.is_empty() { spec.drifts.clone() } else { a.drift.clone() };
    if drifts.is_empty() || drifts.iter().any(|v| !v.is_finite()) {
        return Err(fail(1, anyhow::anyhow!("race needs at least one finite drift rate")));
    }
    let reps = a.common.replicates.unwrap_or(spec.replicates);
    let (sexual, asexual) = spec.arms();
    let mut rows = Vec::new();
    for &v in &drifts {
        say(a.common.quiet, format!("drift {v}"));
        rows.push(tracking_race(&sexual, &asexual, v, reps, seed)?);
    }
    let mut out = Artifacts::new(&a.common.out, &s.name, seed)?;
    if a.common.format.contains(&Format::Csv) {
        out.write("race.csv", |w| output::write_race_csv(w, &rows))?;
    }
    if a.common.format.contains(&Format::Json) {
        out.write("race.json", |w| output::write_json(w, &json!({ "rows": rows, "sexual": sexual, "asexual": asexual, "seed": seed })))?;
    }
    let m = manifest("race", &s, seed, Some(reps), &a.common.format, json!({ "drift": drifts }));
    out.write("race_manifest.json", |w| output::write_json(w, &m))?;
    for r in &rows {
        say(
            a.common.quiet,
            format!("v = {}: P_ext sexual {}/{reps}, asexual {}/{reps}{}", r.drift, r.extinct_sexual, r.extinct_asexual, if r.sexual_advantage { " (significant)" } else { "" }),
        );
    }
    Ok(out.written)
}

/// Re-run every manifest in `dir` into a staging directory inside it and
/// compare the artifacts byte for byte.
fn cmd_report(a: &ReportArgs) -> Outcome<()> {
    let dir = &a.verify;
    let mut manifests: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot read {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with("manifest.json") && !n.starts_with('.')))
        .collect();
    manifests.sort();
    if manifests.is_empty() {
        return Err(fail(1, anyhow::anyhow!("no manifest files in {}", dir.display())));
    }
    let staging = dir.join(".verify");
    let mut mismatches = Vec::new();
    for path in &manifests {
        if staging.exists() {
            fs::remove_dir_all(&staging).context("cannot clear staging directory")?;
        }
        let m: Value = serde_json::from_str(&fs::read_to_string(path).context("cannot read manifest")?).map_err(|e| fail(1, anyhow::anyhow!("{}: {e}", path.display())))?;
        let written = rerun(&m, &staging)?;
        for file in written {
            let name = file.file_name().expect("artifact has a name");
            let original = dir.join(name);
            let same = fs::read(&original).ok().is_some_and(|bytes| bytes == fs::read(&file).unwrap_or_default());
            println!("{} {}", if same { "identical" } else { "DIFFERS" }, name.to_string_lossy());
            if !same {
                mismatches.push(name.to_string_lossy().into_owned());
            }
        }
    }
    fs::remove_dir_all(&staging).context("cannot remove staging directory")?;
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(fail(2, anyhow::anyhow!("{} artifact(s) differ on re-run: {}", mismatches.len(), mismatches.join(", "))))
    }
}

fn rerun(m: &Value, out: &Path) -> Outcome<Vec<PathBuf>> {
    let bad = |what: &str| fail(1, anyhow::anyhow!("manifest is missing `{what}`"));
    let scenario: Scenario = serde_json::from_value(m.get("scenario").cloned().ok_or_else(|| bad("scenario"))?).map_err(|e| fail(1, e))?;
    let seed = m.get("seed").and_then(Value::as_u64).ok_or_else(|| bad("seed"))?;
    let formats = m
        .get("formats")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("formats"))?
        .iter()
        .map(|f| if f.as_str() == Some("csv") { Format::Csv } else { Format::Json })
        .collect();
    let dir = out.join("scenario");
    fs::create_dir_all(&dir).context("cannot create staging directory")?;
    let config = dir.join("scenario.toml");
    fs::write(&config, scenario.to_toml()?).context("cannot write staged scenario")?;
    let common = Common {
        scenario: None,
        config: Some(config),
        seed: Some(seed),
        replicates: m.get("replicates").and_then(Value::as_u64).map(|r| r as usize),
        out: out.to_path_buf(),
        format: formats,
        set: Vec::new(),
        quiet: true,
    };
    let extra = m.get("extra").cloned().unwrap_or(Value::Null);
    let floats = |key: &str| -> Vec<f64> { extra.get(key).and_then(Value::as_array).map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default() };
    let written = match m.get("command").and_then(Value::as_str) {
        Some("run") => match cmd_run(&common) {
            Ok(w) => w,
            Err(f) if f.code == 3 => list_files(out)?,
            Err(f) => return Err(f),
        },
        Some("sweep") => {
            let param = extra.get("param").and_then(Value::as_str).ok_or_else(|| bad("extra.param"))?.to_string();
            let grid = extra.get("grid").and_then(Value::as_str).unwrap_or_default().to_string();
            cmd_sweep(&SweepArgs { common, param, grid })?
        }
        Some("calibrate") => cmd_calibrate(&CalibrateArgs { common, budget: None })?,
        Some("race") => cmd_race(&RaceArgs { common, drift: floats("drift") })?,
        _ => return Err(bad("command")),
    };
    Ok(written.into_iter().filter(|p| !p.to_string_lossy().ends_with("manifest.json")).collect())
}

fn list_files(dir: &Path) -> Outcome<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).context("cannot list staging directory")?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_file()).collect();
    v.sort();
    Ok(v)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(&a.common).map(|_| ()),
        Command::Sweep(a) => cmd_sweep(a).map(|_| ()),
        Command::Calibrate(a) => cmd_calibrate(a).map(|_| ()),
        Command::Race(a) => cmd_race(a).map(|_| ()),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
