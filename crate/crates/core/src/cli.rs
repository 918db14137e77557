//! Command-line front end: argument parsing, dispatch and report emission.
//!
//! Every command prints a one-line summary on stdout and, with `--output`,
//! writes a canonical JSON report. Exit codes: 0 pass, 1 check failed,
//! 2 invalid arguments, unreadable input or any other error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::error::{invalid, Result};
use crate::linalg::ComplexMatrix;
use crate::io::{format_g17, read_strategy, to_canonical_string};
use crate::optimize::{classify_outcome_measurement, seesaw, write_history_csv, SeesawConfig, SeesawMetric};
use crate::robustness::{
    fidelity_edge_eps, fidelity_lower_bound_with, grid_sweep, partial_bell_trace_bounds,
    partial_fidelity_bound, partial_fidelity_edge_eps, write_grid_csv, FidelityBoundParams,
    GridConfig,
};
use crate::scenario::counterexample::{
    counterexample_table, counterexample_value, entangled_components, entangled_fixture,
    separable_components, separable_fixture,
    CounterexampleStrategy,
};
use crate::scenario::partial_bell::{
    ideal_partial_bell_strategy, optimal_rac_observables, optimal_s_rac, partial_bell_traces,
    rac_bloch_vectors, rac_bound, s_comm, s_rac,
};
use crate::scenario::{a_operators, build_w, AOperators};
use crate::selftest::{
    bound, certify, shifted_min_eig, sorted, sos_residual, spectrum_closed_form, Tolerances,
};
use crate::states::{
    ideal_sender_states, ideal_strategy, random_antipodal_sender, rng_from_seed, BitString,
    Strategy,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Environment variable capping worker threads (0 or unset = automatic).
pub const THREADS_ENV: &str = "GHZ_SELFTEST_THREADS";

#[derive(Parser, Debug, Clone, PartialEq)]
#[command(
    name = "ghz-selftest",
    version,
    about = "Self-testing of GHZ basis measurements in a prepare-and-measure scenario"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum Command {
    /// Run every certification check on a strategy file (default: ideal strategy).
    Certify(InputArgs),
    /// Compare the closed-form witness spectra with numerical diagonalization.
    Spectrum(InputArgs),
    /// Sum-of-squares residuals for random pure antipodal strategies.
    Sos(SosArgs),
    /// See-saw optimization of a game metric.
    Seesaw(SeesawArgs),
    /// Evaluate and classify the entangled and separable optima of the three-input game.
    Counterexample(CounterexampleArgs),
    /// Minimum operator-inequality margin over an angle grid.
    RobustnessGrid(GridArgs),
    /// Fidelity lower bound for a metric deficit eps.
    FidelityBound(BoundArgs),
    /// Scores of the three-outcome partial Bell measurement game.
    PartialBell(InputArgs),
    /// Random-access-code score of the first sender's messages.
    Rac(InputArgs),
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct Common {
    /// Number of senders.
    #[arg(long, default_value_t = 2, value_parser = parse_n)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the JSON report here.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Tolerance override, also accepted as `--tol.<name>=<value>`.
    #[arg(long = "tol", value_name = "NAME=VALUE", value_parser = parse_tol)]
    pub tol: Vec<(String, f64)>,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct InputArgs {
    #[command(flatten)]
    pub common: Common,
    /// Strategy JSON file.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct SosArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Random strategies to test when no input is given.
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct SeesawArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "ghz")]
    pub metric: SeesawMetric,
    #[arg(long, default_value_t = crate::optimize::DEFAULT_RESTARTS)]
    pub restarts: usize,
    #[arg(long, default_value_t = crate::optimize::DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    #[arg(long, default_value_t = crate::optimize::DEFAULT_CONV_TOL)]
    pub conv_tol: f64,
    /// Write `restart,iter,value` rows here.
    #[arg(long)]
    pub history_csv: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct CounterexampleArgs {
    #[command(flatten)]
    pub common: Common,
    /// See-saw restarts to run in addition to the fixtures (0 skips the search).
    #[arg(long, default_value_t = 0)]
    pub restarts: usize,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct GridArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 80)]
    pub steps: usize,
    #[arg(long, default_value_t = 4)]
    pub refine: usize,
    #[arg(long, requires = "mu")]
    pub r: Option<f64>,
    #[arg(long, requires = "r", allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Write every evaluated grid point here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct BoundArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, requires = "mu")]
    pub r: Option<f64>,
    #[arg(long, requires = "r", allow_hyphen_values = true)]
    pub mu: Option<f64>,
}

fn parse_n(text: &str) -> std::result::Result<usize, String> {
    let n: usize = text.parse().map_err(|_| format!("'{text}' is not a count"))?;
    if !(2..=crate::MAX_SENDERS).contains(&n) {
        return Err(format!("n must be between 2 and {}", crate::MAX_SENDERS));
    }
    Ok(n)
}

fn parse_tol(text: &str) -> std::result::Result<(String, f64), String> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got '{text}'"))?;
    let value: f64 = value
        .parse()
        .map_err(|_| format!("tolerance '{name}' has a non-numeric value '{value}'"))?;
    if !Tolerances::NAMES.contains(&name) {
        return Err(format!(
            "unknown tolerance '{name}' (known: {})",
            Tolerances::NAMES.join(", ")
        ));
    }
    Ok((name.to_string(), value))
}

/// Rewrites `--tol.<name>=<value>` into `--tol <name>=<value>` and parses.
pub fn parse_args<I, T>(argv: I) -> std::result::Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let mut args = Vec::new();
    for arg in argv {
        let arg: OsString = arg.into();
        match arg.to_str().and_then(|s| s.strip_prefix("--tol.")) {
            Some(rest) => {
                args.push(OsString::from("--tol"));
                args.push(OsString::from(rest));
            }
            None => args.push(arg),
        }
    }
    RunConfig::try_parse_from(args)
}

/// Result of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub summary: String,
    pub report: Value,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Certify(_) => "certify",
            Self::Spectrum(_) => "spectrum",
            Self::Sos(_) => "sos",
            Self::Seesaw(_) => "seesaw",
            Self::Counterexample(_) => "counterexample",
            Self::RobustnessGrid(_) => "robustness-grid",
            Self::FidelityBound(_) => "fidelity-bound",
            Self::PartialBell(_) => "partial-bell",
            Self::Rac(_) => "rac",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Self::Certify(a) | Self::Spectrum(a) | Self::PartialBell(a) | Self::Rac(a) => &a.common,
            Self::Sos(a) => &a.common,
            Self::Seesaw(a) => &a.common,
            Self::Counterexample(a) => &a.common,
            Self::RobustnessGrid(a) => &a.common,
            Self::FidelityBound(a) => &a.common,
        }
    }
}

fn tolerances(common: &Common) -> Result<Tolerances> {
    let mut tol = Tolerances::default();
    for (name, value) in &common.tol {
        tol.set(name, *value)?;
    }
    Ok(tol)
}

fn load_or(input: &Option<PathBuf>, fallback: impl FnOnce() -> Result<Strategy>) -> Result<Strategy> {
    match input {
        Some(path) => read_strategy(path),
        None => fallback(),
    }
}

fn config_echo(command: &Command, input: Option<&PathBuf>) -> Value {
    let common = command.common();
    let tol: BTreeMap<&str, f64> = common.tol.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    json!({
        "command": command.name(),
        "n": common.n,
        "seed": common.seed,
        "input": input.map(|p| p.display().to_string()),
        "tolerance_overrides": tol,
    })
}

fn params_from(n: usize, r: Option<f64>, mu: Option<f64>) -> Result<FidelityBoundParams> {
    match (r, mu) {
        (Some(r), Some(mu)) => FidelityBoundParams::new(r, mu, n),
        _ => FidelityBoundParams::analytic(n),
    }
}

fn to_value<T: serde::Serialize>(value: &T) -> Result<Value> {
    Ok(serde_json::to_value(value)?)
}

fn run_certify(args: &InputArgs) -> Result<Outcome> {
    let tol = tolerances(&args.common)?;
    let strategy = load_or(&args.input, || ideal_strategy(args.common.n))?;
    let report = certify(&strategy, &tol)?;
    let passed = report.passed.all;
    let min_fidelity = report.ghz_fidelities.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        passed,
        summary: format!(
            "certify n={}: {} (S = {}, min GHZ fidelity = {})",
            report.n,
            if passed { "PASS" } else { "FAIL" },
            format_g17(report.metric_value),
            format_g17(min_fidelity)
        ),
        report: to_value(&report)?,
    })
}

fn run_spectrum(args: &InputArgs) -> Result<Outcome> {
    let tol = tolerances(&args.common)?;
    let (n, ops) = match &args.input {
        Some(path) => {
            let strategy = read_strategy(path)?;
            (strategy.n, a_operators(&strategy))
        }
        None => (args.common.n, AOperators::aligned_ideal(args.common.n)),
    };
    let mut rows = Vec::new();
    let mut max_dev: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    for s in BitString::all(n) {
        let closed = sorted(spectrum_closed_form(n, &s)?);
        let numeric = crate::linalg::eigenvalues(&build_w(n, &s, &ops)?)?;
        let dev = closed
            .iter()
            .zip(&numeric)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let k = numeric.len();
        let gap = numeric[k - 1] - numeric[k - 2];
        max_dev = max_dev.max(dev);
        min_gap = min_gap.min(gap);
        rows.push(json!({
            "s": s.to_string(),
            "closed_form": closed,
            "numeric": numeric,
            "deviation": dev,
            "top_gap": gap,
        }));
    }
    let passed = max_dev <= tol.spectrum;
    Ok(Outcome {
        passed,
        summary: format!(
            "spectrum n={n}: {} (max deviation = {}, top eigenvalue bound = {}, min top gap = {})",
            if passed { "PASS" } else { "FAIL" },
            format_g17(max_dev),
            format_g17(bound(n)),
            format_g17(min_gap)
        ),
        report: json!({
            "n": n,
            "max_deviation": max_dev,
            "bound": bound(n),
            "min_top_gap": min_gap,
            "outcomes": rows,
            "tolerance": tol.spectrum,
        }),
    })
}

fn run_sos(args: &SosArgs) -> Result<Outcome> {
    let tol = tolerances(&args.common)?;
    let strategies: Vec<Strategy> = match &args.input {
        Some(path) => vec![read_strategy(path)?],
        None => {
            if args.samples == 0 {
                return Err(invalid("samples must be at least 1"));
            }
            let n = args.common.n;
            let mut rng = rng_from_seed(args.common.seed);
            (0..args.samples)
                .map(|_| {
                    let senders = (0..n).map(|_| random_antipodal_sender(&mut rng)).collect();
                    Strategy {
                        n,
                        senders,
                        povm: crate::states::ghz_povm(n),
                    }
                })
                .collect()
        }
    };
    let mut max_residual: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    let mut rows = Vec::new();
    for strategy in &strategies {
        let n = strategy.n;
        let ops = a_operators(strategy);
        let mut residual: f64 = 0.0;
        let mut eig = f64::INFINITY;
        for s in BitString::all(n) {
            residual = residual.max(sos_residual(n, &s, &ops)?);
            eig = eig.min(shifted_min_eig(n, &s, &ops)?);
        }
        max_residual = max_residual.max(residual);
        min_eig = min_eig.min(eig);
        rows.push(json!({"max_residual": residual, "min_shifted_eig": eig}));
    }
    let passed = max_residual <= tol.sos && min_eig >= -tol.sos;
    Ok(Outcome {
        passed,
        summary: format!(
            "sos n={} over {} strategies: {} (max residual = {}, min shifted eigenvalue = {})",
            strategies[0].n,
            strategies.len(),
            if passed { "PASS" } else { "FAIL" },
            format_g17(max_residual),
            format_g17(min_eig)
        ),
        report: json!({
            "n": strategies[0].n,
            "max_residual": max_residual,
            "min_shifted_eig": min_eig,
            "strategies": rows,
            "tolerance": tol.sos,
        }),
    })
}

fn classification_value(povm: &crate::states::Povm) -> Result<Value> {
    to_value(&classify_outcome_measurement(povm)?)
}

fn run_seesaw(args: &SeesawArgs) -> Result<Outcome> {
    let tol = tolerances(&args.common)?;
    let config = SeesawConfig {
        n: args.common.n,
        metric: args.metric,
        restarts: args.restarts,
        max_iters: args.max_iters,
        conv_tol: args.conv_tol,
        seed: args.common.seed,
    };
    let result = seesaw(&config)?;
    if let Some(path) = &args.history_csv {
        write_history_csv(&result, File::create(path)?)?;
    }
    let target = match args.metric {
        SeesawMetric::Counterexample => 2.0 * std::f64::consts::SQRT_2,
        _ => 1.0,
    };
    let passed = result.best_value >= target - tol.metric;
    let mut report = result.to_value();
    if config.n == 2 {
        report["classification"] = classification_value(&result.best_strategy.povm())?;
    }
    Ok(Outcome {
        passed,
        summary: format!(
            "seesaw {} n={} restarts={}: best = {} after {} iterations (restart {})",
            args.metric,
            config.n,
            config.restarts,
            format_g17(result.best_value),
            result.iters_used,
            result.best_restart
        ),
        report,
    })
}

fn fixture_value(strategy: &CounterexampleStrategy, components: [ComplexMatrix; 2]) -> Result<Value> {
    let povm = strategy.povm();
    let completeness = crate::linalg::max_abs_diff(
        &(&povm.elements[0] + &povm.elements[1]),
        &crate::linalg::identity(4),
    );
    let m0_eigs = crate::linalg::eigenvalues(&strategy.m0)?;
    Ok(json!({
        "value": counterexample_value(strategy),
        "p0": counterexample_table(strategy).p0,
        "m0_eigenvalues": m0_eigs,
        "completeness_deviation": completeness,
        "classification": classification_value(&povm)?,
        "component_classification": classification_value(&crate::states::Povm {
            elements: components.to_vec(),
        })?,
    }))
}

fn run_counterexample(args: &CounterexampleArgs) -> Result<Outcome> {
    let entangled = entangled_fixture();
    let separable = separable_fixture();
    let mut report = json!({
        "entangled_fixture": fixture_value(&entangled, entangled_components())?,
        "separable_fixture": fixture_value(&separable, separable_components())?,
    });
    let mut summary = format!(
        "counterexample: entangled fixture S = {}, separable fixture S = {}",
        format_g17(counterexample_value(&entangled)),
        format_g17(counterexample_value(&separable))
    );
    if args.restarts > 0 {
        let mut config = SeesawConfig::new(2, SeesawMetric::Counterexample);
        config.restarts = args.restarts;
        config.seed = args.common.seed;
        let result = seesaw(&config)?;
        let mut search = result.to_value();
        search["classification"] = classification_value(&result.best_strategy.povm())?;
        report["seesaw"] = search;
        summary.push_str(&format!(", see-saw best = {}", format_g17(result.best_value)));
    }
    Ok(Outcome {
        passed: true,
        summary,
        report,
    })
}

fn run_grid(args: &GridArgs) -> Result<Outcome> {
    let n = args.common.n;
    if args.steps == 0 {
        return Err(invalid("steps must be at least 1"));
    }
    let config = GridConfig {
        n,
        steps: args.steps,
        refine: args.refine,
        params: params_from(n, args.r, args.mu)?,
    };
    let result = grid_sweep(&config)?;
    if let Some(path) = &args.csv {
        write_grid_csv(&result, File::create(path)?)?;
    }
    Ok(Outcome {
        passed: result.passed,
        summary: format!(
            "robustness-grid n={n} steps={}: {} (min margin = {} at s = {}, {} points)",
            args.steps,
            if result.passed { "PASS" } else { "FAIL" },
            format_g17(result.min_margin),
            BitString::from_index(result.argmin.s, n),
            result.evaluated
        ),
        report: to_value(&result)?,
    })
}

fn run_bound(args: &BoundArgs) -> Result<Outcome> {
    let params = params_from(args.common.n, args.r, args.mu)?;
    let value = fidelity_lower_bound_with(&params, args.eps)?;
    Ok(Outcome {
        passed: true,
        summary: format!(
            "fidelity-bound n={} eps={}: {}",
            params.n,
            args.eps,
            format_g17(value)
        ),
        report: json!({
            "params": to_value(&params)?,
            "eps": args.eps,
            "bound": value,
            "edge_eps": fidelity_edge_eps(&params),
        }),
    })
}

fn run_partial_bell(args: &InputArgs) -> Result<Outcome> {
    let tol = tolerances(&args.common)?;
    let strategy = load_or(&args.input, || Ok(ideal_partial_bell_strategy()))?;
    let traces = partial_bell_traces(&strategy)?;
    let comm = s_comm(&strategy)?;
    let (mx, mz) = optimal_rac_observables(&strategy.senders[0]);
    let rac = s_rac(&strategy.senders[0], &mx, &mz)?;
    let eps = (1.0 - comm).max(0.0);
    let fidelity = partial_fidelity_bound(eps, rac)?;
    let trace_bounds = partial_bell_trace_bounds(&strategy)?;
    let passed = comm >= 1.0 - tol.metric;
    Ok(Outcome {
        passed,
        summary: format!(
            "partial-bell: {} (S_comm = {}, S_rac = {}, fidelity bound = {})",
            if passed { "PASS" } else { "FAIL" },
            format_g17(comm),
            format_g17(rac),
            format_g17(fidelity)
        ),
        report: json!({
            "traces": traces,
            "s_comm": comm,
            "s_rac": rac,
            "eps": eps,
            "fidelity_bound": fidelity,
            "edge_eps": partial_fidelity_edge_eps(),
            "trace_bounds": trace_bounds.iter().map(|(t, b)| json!({"trace": t, "bound": b})).collect::<Vec<_>>(),
            "notes": [
                "the fidelity bound uses a second-order expansion in the first sender's angle deviation and is only reliable near the optimum"
            ],
        }),
    })
}

fn run_rac(args: &InputArgs) -> Result<Outcome> {
    let tol = tolerances(&args.common)?;
    let sender = match &args.input {
        Some(path) => read_strategy(path)?.senders.swap_remove(0),
        None => ideal_sender_states(1, 2)?,
    };
    let (mx, mz) = optimal_rac_observables(&sender);
    let value = s_rac(&sender, &mx, &mz)?;
    let bound = rac_bound(&rac_bloch_vectors(&sender))?;
    let optimum = optimal_s_rac();
    let passed = value >= optimum - tol.metric;
    Ok(Outcome {
        passed,
        summary: format!(
            "rac: {} (S_rac = {}, bound = {}, optimum = {})",
            if passed { "PASS" } else { "FAIL" },
            format_g17(value),
            format_g17(bound),
            format_g17(optimum)
        ),
        report: json!({
            "s_rac": value,
            "bound": bound,
            "optimum": optimum,
            "bloch_vectors": rac_bloch_vectors(&sender),
        }),
    })
}

/// Executes a parsed command and writes its report.
pub fn run(config: &RunConfig) -> Result<Outcome> {
    let command = &config.command;
    let (mut outcome, input) = match command {
        Command::Certify(a) => (run_certify(a)?, a.input.as_ref()),
        Command::Spectrum(a) => (run_spectrum(a)?, a.input.as_ref()),
        Command::Sos(a) => (run_sos(a)?, a.input.as_ref()),
        Command::Seesaw(a) => (run_seesaw(a)?, None),
        Command::Counterexample(a) => (run_counterexample(a)?, None),
        Command::RobustnessGrid(a) => (run_grid(a)?, None),
        Command::FidelityBound(a) => (run_bound(a)?, None),
        Command::PartialBell(a) => (run_partial_bell(a)?, a.input.as_ref()),
        Command::Rac(a) => (run_rac(a)?, a.input.as_ref()),
    };
    outcome.report = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": config_echo(command, input),
        "passed": outcome.passed,
        "result": outcome.report,
    });
    if let Some(path) = &command.common().output {
        fs::write(path, to_canonical_string(&outcome.report))?;
    }
    Ok(outcome)
}

/// Sizes the global worker pool from [`THREADS_ENV`].
pub fn configure_threads() -> Result<()> {
    let Ok(text) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = text
        .trim()
        .parse()
        .map_err(|_| invalid(format!("{THREADS_ENV}={text:?} is not a thread count")))?;
    if threads > 0 {
        // an already-initialized pool keeps its size
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    Ok(())
}

/// Full command-line entry point; returns the process exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let config = match parse_args(argv) {
        Ok(config) => config,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_ERROR;
    }
    match run(&config) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
