mod config;
mod output;

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use strz_core::counterexamples::{
    build_family, pseudoconformal_build, ratio_rows, ratio_series, window_crosscheck,
};
use strz_core::exponents::{self, dual, is_admissible, scaling_exponent, ScheduleKind};
use strz_core::groundstate::{ground_pair, standing_wave_potential};
use strz_core::potentials::{partition_interval, window_norm_rows, PotentialSpec};
use strz_core::solver::{
    calibrate_tau, solve_global, split_step_evolve, CalibrationCase, CalibrationOptions,
    EvolveOptions, SolveReport,
};
use strz_core::spectral::write_snapshot;
use strz_core::verify;
use strz_core::{classify_potential, Criticality, Error, ExtExponent, Grid};

use config::{Config, GridConfig, Method};
use output::Bundle;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  usage error (bad flags, malformed config, bad STRZ_THREADS)
  3  precondition violated (invalid exponents, grids, regimes or inputs)
  4  numerical failure (no contraction, box escape, unresolved field, ...)
  5  I/O error
  6  at least one acceptance criterion failed (verify)

Environment:
  STRZ_THREADS  caps the worker thread pool";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
    Io(String),
    VerifyFailed(Vec<usize>),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 5,
            CliError::VerifyFailed(_) => 6,
            CliError::Core(e) => match e {
                Error::DimensionOutOfRange(_)
                | Error::InvalidExponent(_)
                | Error::Precondition(_)
                | Error::WrongRegime { .. }
                | Error::InvalidGrid(_)
                | Error::EmptyConstraint
                | Error::InadmissiblePair { .. }
                | Error::Format(_) => 3,
                Error::Io(_) => 5,
                _ => 4,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::VerifyFailed(ids) => write!(f, "failed criteria: {ids:?}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "strz", version, about = "Strichartz-estimate laboratory for i u_t - Δu + V u = F", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether (p, q) is admissible in dimension n.
    Admissible {
        #[arg(long)]
        p: ExtExponent,
        #[arg(long)]
        q: ExtExponent,
        #[arg(long)]
        n: usize,
    },
    /// Classify (r, s) and select cascade parameters.
    Params {
        #[arg(long)]
        r: ExtExponent,
        #[arg(long)]
        s: ExtExponent,
        #[arg(long)]
        n: usize,
        /// global-subcritical, global-supercritical or local; every kind
        /// matching the regime when omitted.
        #[arg(long)]
        kind: Option<ScheduleKind>,
    },
    /// Evolve a configured problem by split-step or Duhamel iteration.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the final state as a binary snapshot.
        #[arg(long)]
        snapshot: bool,
    },
    /// Ground pair (μ, f) of -Δf + f = μ w f.
    Eigensolve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        /// Write f to this snapshot file.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Greedy partition of the configured time interval at threshold tau.
    Partition {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ratio series of a counterexample family.
    Counterexample {
        /// global-subcritical, global-supercritical, local or pseudoconformal.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        r: ExtExponent,
        #[arg(long)]
        s: ExtExponent,
        #[arg(long)]
        n: usize,
        /// Number of windows (or samples for the pseudoconformal family).
        #[arg(long = "K", default_value_t = 200)]
        windows: usize,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        /// Semicolon-separated admissible pairs, e.g. "2,6;8/3,4".
        #[arg(long)]
        pairs: Option<String>,
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// Comma-separated windows to evolve numerically, e.g. "1,2,3".
        #[arg(long)]
        crosscheck: Option<String>,
        #[arg(long, default_value_t = 1e-2)]
        dt: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suites.
    Verify {
        /// Run only these criteria (repeatable).
        #[arg(long)]
        criterion: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the canonical form of a config (defaults filled in).
    Config {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match setup_threads().and_then(|()| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("strz: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn setup_threads() -> CliResult<()> {
    let Ok(text) = std::env::var("STRZ_THREADS") else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("STRZ_THREADS={text:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn print_json<T: Serialize>(value: &T) {
    use std::io::Write;
    // a closed pipe (e.g. `| head`) is not an error worth reporting
    let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn load_config(path: Option<&PathBuf>) -> CliResult<Config> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn run(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Admissible { p, q, n } => {
            let ok = is_admissible(p, q, n)?;
            print_json(&json!({ "p": p, "q": q, "n": n, "admissible": ok, "dual": [dual(p), dual(q)] }));
            Ok(())
        }
        Command::Params { r, s, n, kind } => params(r, s, n, kind),
        Command::Simulate { config, out, snapshot } => simulate(&load_config(config.as_ref())?, out, snapshot),
        Command::Eigensolve { config, dim, half_width, points, amplitude, sigma, snapshot } => {
            let mut cfg = load_config(config.as_ref())?;
            let g = &mut cfg.grid;
            *g = GridConfig {
                dim: dim.unwrap_or(g.dim),
                half_width: half_width.unwrap_or(g.half_width),
                points: points.unwrap_or(g.points),
            };
            cfg.ground_state.amplitude = amplitude.unwrap_or(cfg.ground_state.amplitude);
            cfg.ground_state.sigma = sigma.unwrap_or(cfg.ground_state.sigma);
            eigensolve(&cfg, snapshot)
        }
        Command::Partition { config, tau, out } => partition(&load_config(config.as_ref())?, tau, out),
        Command::Counterexample {
            kind,
            r,
            s,
            n,
            windows,
            delta,
            pairs,
            half_width,
            points,
            crosscheck,
            dt,
            out,
        } => counterexample(CounterexampleArgs {
            kind,
            r,
            s,
            n,
            windows,
            delta,
            pairs,
            half_width,
            points,
            crosscheck,
            dt,
            out,
        }),
        Command::Verify { criterion, out } => run_verify(criterion, out),
        Command::Config { config } => {
            print!("{}", load_config(config.as_ref())?.to_toml());
            Ok(())
        }
    }
}

fn params(r: ExtExponent, s: ExtExponent, n: usize, kind: Option<ScheduleKind>) -> CliResult<()> {
    let class = classify_potential(r, s, n)?;
    let kinds = match (kind, class.criticality) {
        (Some(k), _) => vec![k],
        (None, Criticality::Subcritical) => vec![ScheduleKind::GlobalSubcritical],
        (None, Criticality::Supercritical) => vec![ScheduleKind::GlobalSupercritical, ScheduleKind::Local],
        (None, Criticality::Critical) => Vec::new(),
    };
    let selected = kinds
        .into_iter()
        .map(|k| {
            let p = exponents::schedule_params(k, r, s, n)?;
            Ok(json!({
                "kind": k,
                "alpha": p.alpha.to_string(),
                "beta": p.beta.to_string(),
                "alpha_f64": exponents::rat_f64(p.alpha),
                "beta_f64": exponents::rat_f64(p.beta),
            }))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let pc = if r.is_finite() { exponents::pseudoconformal_ok(r, s, n).ok() } else { None };
    print_json(&json!({
        "r": r,
        "s": s,
        "n": n,
        "rho": class.rho.to_string(),
        "criticality": class.criticality.to_string(),
        "scaling_exponent": scaling_exponent(r, s, n)?.to_string(),
        "params": selected,
        "pseudoconformal_ok": pc,
    }));
    Ok(())
}

#[derive(Serialize)]
struct SampleRow {
    t: f64,
    l2_norm: f64,
}

fn simulate(cfg: &Config, out: Option<PathBuf>, snapshot: bool) -> CliResult<()> {
    let grid = cfg.grid.build()?;
    let wave = if cfg.needs_wave() { Some(cfg.ground_state.standing_wave(grid)?) } else { None };
    let u0 = cfg.initial(grid, wave.as_ref())?;
    let v = cfg.potential(grid, wave.as_ref())?;
    let src = cfg.source(grid)?;
    let sc = &cfg.solver;
    let interval = (sc.t0, sc.t1);
    let report: SolveReport = match sc.method {
        Method::SplitStep => {
            let opts = EvolveOptions {
                dt: sc.dt,
                record_every: sc.record_every,
                pairs: sc.pairs.clone(),
                guard: Some(Default::default()),
            };
            split_step_evolve(&u0, &v, src.as_ref(), interval, &opts)?
        }
        Method::Duhamel => {
            let (r, s) = (cfg.potential.r, cfg.potential.s);
            let tau = match sc.tau {
                Some(t) => t,
                None => {
                    let span = (sc.t1 - sc.t0).min(1.0);
                    let case = CalibrationCase {
                        potential: v.clone(),
                        u0: u0.clone(),
                        interval: (sc.t0, sc.t0 + span),
                        r,
                        s,
                    };
                    calibrate_tau(&[case], &CalibrationOptions::default())?.tau
                }
            };
            solve_global(&u0, src.as_ref(), &v, interval, r, s, tau, &sc.duhamel(), &sc.pairs)?
        }
    };
    let summary = json!({
        "method": sc.method,
        "samples": report.trajectory.len(),
        "report": &report,
        "standing_wave_mu": wave.as_ref().map(|w| w.mu),
    });
    if let Some(dir) = out {
        let mut bundle = Bundle::create(&dir)?;
        let every = if sc.method == Method::Duhamel { sc.record_every.max(1) } else { 1 };
        let rows: Vec<SampleRow> = report
            .trajectory
            .times
            .iter()
            .zip(&report.trajectory.energy_log)
            .enumerate()
            .filter(|(i, _)| i % every == 0 || *i + 1 == report.trajectory.len())
            .map(|(_, (&t, &l2_norm))| SampleRow { t, l2_norm })
            .collect();
        bundle.csv("trajectory.csv", &rows)?;
        if !report.partition.is_empty() {
            bundle.csv("pieces.csv", &report.partition)?;
        }
        if snapshot {
            let last = report.trajectory.last().expect("nonempty trajectory");
            let path = bundle.path("final.strz");
            let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            write_snapshot(last, BufWriter::new(file))?;
            bundle.note_file("final.strz");
        }
        bundle.finish("simulate", &cfg.to_toml(), &summary)?;
    }
    print_json(&summary);
    Ok(())
}

fn eigensolve(cfg: &Config, snapshot: Option<PathBuf>) -> CliResult<()> {
    let grid = cfg.grid.build()?;
    let gp = ground_pair(&cfg.ground_state.weight(grid), &cfg.ground_state.options())?;
    let wave = standing_wave_potential(&gp);
    if let Some(path) = snapshot {
        let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        write_snapshot(&gp.f, BufWriter::new(file))?;
    }
    print_json(&json!({
        "mu": gp.mu,
        "residual": gp.residual,
        "constraint": gp.constraint(),
        "variational_energy": gp.variational_energy(),
        "spectral_tail": gp.spectral_tail(),
        "standing_wave_residual": wave.residual(),
        "iterations": gp.iterations,
    }));
    Ok(())
}

fn partition(cfg: &Config, tau: f64, out: Option<PathBuf>) -> CliResult<()> {
    let grid = cfg.grid.build()?;
    let wave = if cfg.potential.profile.as_deref() == Some("standing_wave") {
        Some(cfg.ground_state.standing_wave(grid)?)
    } else {
        None
    };
    let v = cfg.potential(grid, wave.as_ref())?;
    let (r, s) = (cfg.potential.r, cfg.potential.s);
    let sc = &cfg.solver;
    let pieces = partition_interval(&v, r, s, (sc.t0, sc.t1), tau, sc.dt, &grid)?;
    let summary = json!({ "tau": tau, "r": r, "s": s, "pieces": pieces.len(), "partition": &pieces });
    if let Some(dir) = out {
        let mut bundle = Bundle::create(&dir)?;
        bundle.csv("partition.csv", &pieces)?;
        if let PotentialSpec::PatchedRescaled { profile, schedule } = &v {
            let rows = window_norm_rows(schedule, r, s, grid.dim(), strz_core::spectral::lq_norm(profile, s));
            bundle.csv("windows.csv", &rows)?;
        }
        bundle.finish("partition", &cfg.to_toml(), &summary)?;
    }
    print_json(&summary);
    Ok(())
}

struct CounterexampleArgs {
    kind: String,
    r: ExtExponent,
    s: ExtExponent,
    n: usize,
    windows: usize,
    delta: f64,
    pairs: Option<String>,
    half_width: Option<f64>,
    points: Option<usize>,
    crosscheck: Option<String>,
    dt: f64,
    out: Option<PathBuf>,
}

fn parse_pairs(text: &str) -> CliResult<Vec<(ExtExponent, ExtExponent)>> {
    text.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (a, b) = p
                .split_once(',')
                .ok_or_else(|| CliError::Usage(format!("pair {p:?} is not of the form p,q")))?;
            Ok((a.trim().parse()?, b.trim().parse()?))
        })
        .collect()
}

#[derive(Serialize)]
struct CsvRatio {
    p: String,
    q: String,
    k: usize,
    start: f64,
    length: f64,
    eps: f64,
    ratio: f64,
}

fn counterexample(a: CounterexampleArgs) -> CliResult<()> {
    if !(2..=3).contains(&a.n) {
        return Err(Error::DimensionOutOfRange(a.n).into());
    }
    let (hw, pts) = match a.n {
        2 => (24.0, 128),
        _ => (12.0, 32),
    };
    let grid = Grid::new(a.n, a.half_width.unwrap_or(hw), a.points.unwrap_or(pts))?;
    let wave = config::GroundStateConfig::default().standing_wave(grid)?;
    let pairs = match &a.pairs {
        Some(t) => parse_pairs(t)?,
        None if a.n == 3 => parse_pairs("2,6;8/3,4")?,
        None => parse_pairs("4,4;8,8/3")?,
    };
    let pseudo = a.kind.trim().eq_ignore_ascii_case("pseudoconformal");
    let (family, sampler) = if pseudo {
        let (f, s) = pseudoconformal_build(&wave, a.r, a.s, a.delta, a.windows)?;
        (f, Some(s))
    } else {
        let kind: ScheduleKind = a.kind.parse()?;
        (build_family(kind, a.r, a.s, &wave, a.windows, None)?, None)
    };
    let mut rows = Vec::new();
    let mut series_out = Vec::new();
    for &(p, q) in &pairs {
        let series = ratio_series(&family, p, q, None)?;
        for row in ratio_rows(&family, &series) {
            rows.push(CsvRatio {
                p: p.to_string(),
                q: q.to_string(),
                k: row.k,
                start: row.start,
                length: row.length,
                eps: row.eps,
                ratio: row.ratio,
            });
        }
        let verdict = series.slope_error().is_some_and(|e| e < 0.1) && series.growth() > 1.0;
        let mut entry = json!({
            "p": p,
            "q": q,
            "fitted_slope": series.fitted_slope,
            "predicted_slope": series.predicted_slope,
            "fit_range": series.fit_range,
            "growth": series.growth(),
            "diverges": verdict,
        });
        if let Some(s) = &sampler {
            entry["solution_norm"] = json!(s.solution_norm(p, q)?);
        }
        series_out.push(entry);
    }
    let checks = match (&a.crosscheck, pseudo) {
        (Some(text), false) => {
            let ks = text
                .split(',')
                .map(|k| k.trim().parse::<usize>().map_err(|e| CliError::Usage(format!("window {k:?}: {e}"))))
                .collect::<CliResult<Vec<_>>>()?;
            Some(window_crosscheck(&family, &ks, a.dt, &pairs)?)
        }
        (Some(_), true) => return Err(CliError::Usage("--crosscheck needs a windowed family".into())),
        (None, _) => None,
    };
    let summary = json!({
        "kind": a.kind,
        "r": a.r,
        "s": a.s,
        "n": a.n,
        "K": a.windows,
        "delta": family.delta,
        "mu": wave.mu,
        "potential_norm": family.analytic_potential_norm,
        "schedule": family.schedule.as_ref().map(|s| s.params),
        "series": series_out,
        "crosscheck": checks,
    });
    if let Some(dir) = a.out {
        let mut bundle = Bundle::create(&dir)?;
        bundle.csv("ratios.csv", &rows)?;
        let cfg = format!(
            "kind = {:?}\nr = \"{}\"\ns = \"{}\"\nn = {}\nK = {}\ndelta = {}\npairs = {:?}\ngrid = [{}, {}]\n",
            a.kind, a.r, a.s, a.n, a.windows, a.delta, a.pairs.unwrap_or_default(), grid.half_width(), grid.points()
        );
        bundle.finish("counterexample", &cfg, &summary)?;
    }
    print_json(&summary);
    Ok(())
}

fn run_verify(ids: Vec<usize>, out: Option<PathBuf>) -> CliResult<()> {
    let ids = if ids.is_empty() { (1..=12).collect() } else { ids };
    let mut outcomes = Vec::new();
    for id in ids {
        let o = verify::criterion(id)
            .ok_or_else(|| CliError::Usage(format!("no criterion {id}; valid ids are 1-12")))?;
        println!("{o}");
        outcomes.push(o);
    }
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    if let Some(dir) = out {
        let mut bundle = Bundle::create(&dir)?;
        bundle.csv("criteria.csv", &outcomes)?;
        let ids: Vec<String> = outcomes.iter().map(|o| o.id.to_string()).collect();
        bundle.finish("verify", &format!("criteria = [{}]\n", ids.join(", ")), &outcomes)?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::VerifyFailed(failed))
    }
}
