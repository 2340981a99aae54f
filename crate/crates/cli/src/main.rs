//! Command-line experiments for the Rudvalis shuffle and its variants.
//!
//! Exit codes: 0 success, 1 I/O error or failed diagnostic, 2 invalid
//! input, 3 solver failure, 4 exact state space over the cap.

mod output;

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use output::{emit, envelope, Cell, Csv};
use rudvalis_core::bounds::{theorem_constants, BoundReport};
use rudvalis_core::exact::{psi_moment_series, tv_to_uniform, CardChain, LiftedChain};
use rudvalis_core::montecarlo::{
    coupling_parity, increment_moment_estimate, sample_psi, separation_test,
    shift_count_equivalence,
};
use rudvalis_core::spectral::{solve_with, verify_eigensystem, AuxParams, SolverOptions};
use rudvalis_core::{Error, LiftedState, ShuffleKind, ShuffleSpec};

#[derive(Parser, Debug)]
#[command(
    name = "rudvalis",
    version,
    about = "Spectral lower bounds and exact or sampled mixing for Rudvalis-type shuffles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Leading eigenvalue and eigenfunction summary of the lifted chain (JSON)
    Spectrum(SpectrumArgs),
    /// Mixing-time lower bound and its scaled constant, optionally over a sweep of n (JSON)
    Bound(BoundArgs),
    /// Exact total variation and moments of Psi_t on small decks (columns t,tv,mean_re,mean_im,var)
    TvExact(TvExactArgs),
    /// Exact total variation of one card's position (columns n,t,tv)
    CardTv(CardTvArgs),
    /// Monte Carlo samples of Psi_t (columns trial,re,im,abs; JSON gives a summary)
    Simulate(SimulateArgs),
    /// Swap-parity and trajectory comparison between shift-or-swap and Rudvalis(1/3) (JSON)
    Coupling(CouplingArgs),
}

#[derive(ValueEnum, Serialize, Debug, Clone, Copy)]
#[serde(rename_all = "kebab-case")]
enum KindArg {
    Rudvalis,
    ShiftOrSwap,
    Symmetrized,
}

#[derive(ValueEnum, Serialize, Debug, Clone, Copy, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Serialize, Debug, Clone)]
struct ShuffleArgs {
    /// Which shuffle to run
    #[arg(long, value_enum)]
    shuffle: KindArg,
    /// Swap probability, required for the Rudvalis shuffle and must lie in (0, 1)
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Args, Serialize, Debug, Clone)]
struct SolverArgs {
    /// Newton iteration limit
    #[arg(long)]
    max_iter: Option<usize>,
    /// Accepted root residual per card
    #[arg(long)]
    residual_tol: Option<f64>,
    /// Allowed disagreement between the two boundary expressions
    #[arg(long)]
    consistency_tol: Option<f64>,
    /// Largest n for which the dense eigen-decomposition fallback is tried
    #[arg(long)]
    fallback_max_n: Option<usize>,
}

#[derive(Args, Serialize, Debug, Clone)]
struct OutputArgs {
    /// Output file (stdout when omitted); relative paths go under $RUDVALIS_OUTPUT_DIR when it is set
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    shuffle: ShuffleArgs,
    /// Number of cards
    #[arg(long)]
    n: usize,
    /// Random lifted states sampled for the estimate of max E|Delta Psi|^2 (0 skips it)
    #[arg(long, default_value_t = 1000)]
    r_samples: usize,
    /// Seed for the sampled states
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    solver: SolverArgs,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutputArgs,
}

#[derive(Args, Serialize, Debug)]
struct BoundArgs {
    #[command(flatten)]
    #[serde(flatten)]
    shuffle: ShuffleArgs,
    /// Number of cards, or an increasing comma-separated list for a sweep
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Target distance: the bound certifies total variation at least 1 - epsilon
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    #[command(flatten)]
    #[serde(skip)]
    solver: SolverArgs,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutputArgs,
}

#[derive(Args, Serialize, Debug)]
struct TvExactArgs {
    #[command(flatten)]
    #[serde(flatten)]
    shuffle: ShuffleArgs,
    /// Number of cards (the lifted chain has n! * n states)
    #[arg(long)]
    n: usize,
    /// Last time step; rows are emitted for 0..=t
    #[arg(long)]
    t: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    #[serde(skip)]
    solver: SolverArgs,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutputArgs,
}

#[derive(Args, Serialize, Debug)]
struct CardTvArgs {
    #[command(flatten)]
    #[serde(flatten)]
    shuffle: ShuffleArgs,
    /// Number of cards, or a comma-separated list
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Comma-separated nondecreasing times, or "auto" to use t = 0, 1, 2, 4, ... until the distance drops below the threshold
    #[arg(long, default_value = "auto")]
    t_grid: String,
    /// Stopping distance for --t-grid auto
    #[arg(long, default_value_t = 0.25)]
    threshold: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutputArgs,
}

#[derive(Args, Serialize, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    shuffle: ShuffleArgs,
    /// Number of cards
    #[arg(long)]
    n: usize,
    /// Steps per trajectory
    #[arg(long)]
    t: u64,
    /// Independent trajectories
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Master seed; trial k uses its own stream derived from (seed, k)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Distance parameter of the distinguishing event (JSON summary only)
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    /// Exactly stationary samples for the distinguishing event (JSON summary only)
    #[arg(long, default_value_t = 10_000)]
    stationary_samples: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    #[serde(skip)]
    solver: SolverArgs,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutputArgs,
}

#[derive(Args, Serialize, Debug)]
struct CouplingArgs {
    /// Number of cards
    #[arg(long, default_value_t = 6)]
    n: usize,
    /// Shift moves to observe for the parity fraction
    #[arg(long, default_value_t = 100_000)]
    shifts: u64,
    /// Length of the trajectory replayed against the Rudvalis chain
    #[arg(long, default_value_t = 10_000)]
    t: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutputArgs,
}

#[derive(Debug)]
enum CliError {
    Validation(String),
    Core(Error),
    Io(std::io::Error),
    Diagnostic(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) | CliError::Diagnostic(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Core(Error::InvalidSpec(_) | Error::InvalidParameter(_)) => 2,
            CliError::Core(Error::LemmaInapplicable { .. } | Error::NoRoot(_)) => 3,
            CliError::Core(Error::StateSpaceCap { .. }) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Diagnostic(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

impl ShuffleArgs {
    fn kind(&self, warnings: &mut Vec<String>) -> CliResult<ShuffleKind> {
        match (self.shuffle, self.p) {
            (KindArg::Rudvalis, Some(p)) => Ok(ShuffleKind::Rudvalis { p }),
            (KindArg::Rudvalis, None) => Err(CliError::Validation(
                "the rudvalis shuffle requires --p in (0, 1)".into(),
            )),
            (other, p) => {
                if p.is_some() {
                    warnings.push(format!(
                        "--p is ignored for the {} shuffle",
                        kind_arg_name(other)
                    ));
                }
                Ok(match other {
                    KindArg::ShiftOrSwap => ShuffleKind::ShiftOrSwap,
                    _ => ShuffleKind::Symmetrized,
                })
            }
        }
    }

    fn spec(&self, n: usize, warnings: &mut Vec<String>) -> CliResult<ShuffleSpec> {
        let spec = ShuffleSpec::new(self.kind(warnings)?, n)?;
        warnings.extend(spec.warnings());
        Ok(spec)
    }
}

fn kind_arg_name(k: KindArg) -> &'static str {
    match k {
        KindArg::Rudvalis => "rudvalis",
        KindArg::ShiftOrSwap => "shift-or-swap",
        KindArg::Symmetrized => "symmetrized",
    }
}

impl SolverArgs {
    fn options(&self) -> CliResult<SolverOptions> {
        let mut o = SolverOptions::default();
        if let Some(k) = self.max_iter {
            o.max_iter = k;
        }
        if let Some(x) = self.residual_tol {
            o.residual_tol = x;
        }
        if let Some(x) = self.consistency_tol {
            o.consistency_tol = x;
        }
        if let Some(k) = self.fallback_max_n {
            o.fallback_max_n = k;
        }
        if o.max_iter == 0 || !(o.residual_tol > 0.0) || !(o.consistency_tol > 0.0) {
            return Err(CliError::Validation(
                "solver overrides must be positive (max-iter, residual-tol, consistency-tol)"
                    .into(),
            ));
        }
        Ok(o)
    }
}

/// The argument echo with the solver options as actually used.
fn config<A: Serialize>(args: &A, solver: Option<&SolverOptions>) -> Value {
    let mut v = serde_json::to_value(args).expect("arguments serialize");
    if let (Some(s), Value::Object(map)) = (solver, &mut v) {
        map.insert(
            "solver".into(),
            serde_json::to_value(s).expect("options serialize"),
        );
    }
    v
}

/// Limit of `gamma * n^3` as the deck grows.
fn asymptotic_gap_constant(kind: ShuffleKind) -> f64 {
    match kind {
        ShuffleKind::Rudvalis { p } => 4.0 * PI * PI * p / (1.0 - p),
        ShuffleKind::ShiftOrSwap => PI * PI,
        ShuffleKind::Symmetrized => PI * PI / 2.0,
    }
}

fn check_epsilon(epsilon: f64) -> CliResult<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "--epsilon must lie in (0, 1), got {epsilon}"
        )))
    }
}

fn cmd_spectrum(args: &SpectrumArgs, warnings: &mut Vec<String>) -> CliResult<String> {
    let spec = args.shuffle.spec(args.n, warnings)?;
    let opts = args.solver.options()?;
    let es = solve_with(&spec, &opts)?;
    let n = spec.n as f64;
    let scaled_gap = es.gamma * n.powi(3);
    let mut result = json!({
        "shuffle": spec.kind.name(),
        "n": spec.n,
        "lambda_re": es.lambda.re,
        "lambda_im": es.lambda.im,
        "lambda_minus_one_re": es.lambda_minus_one.re,
        "lambda_minus_one_im": es.lambda_minus_one.im,
        "gamma": es.gamma,
        "scaled_gap": scaled_gap,
        "scaled_gap_ratio": scaled_gap / asymptotic_gap_constant(spec.kind),
        "psi_max": es.psi_max,
        "r_bound": es.r_bound,
        "residual": verify_eigensystem(&es),
        "method": es.method,
        "iterations": es.iterations,
    });
    let map = result.as_object_mut().expect("object literal");
    if args.r_samples > 0 {
        map.insert(
            "r_estimate".into(),
            json!(increment_moment_estimate(&es, args.r_samples, args.seed)),
        );
    }
    match es.aux {
        AuxParams::Chi { chi } => {
            map.insert("chi_re".into(), json!(chi.re));
            map.insert("chi_im".into(), json!(chi.im));
        }
        AuxParams::ThetaDelta { theta, delta } => {
            map.insert("theta".into(), json!(theta));
            map.insert("delta".into(), json!(delta));
        }
    }
    Ok(envelope(
        "spectrum",
        &config(args, Some(&opts)),
        warnings,
        result,
    ))
}

fn cmd_bound(args: &BoundArgs, warnings: &mut Vec<String>) -> CliResult<String> {
    check_epsilon(args.epsilon)?;
    for &n in &args.n {
        args.shuffle.spec(n, warnings)?;
    }
    let opts = args.solver.options()?;
    let kind = args.shuffle.kind(&mut Vec::new())?;
    let reports: Vec<BoundReport> = theorem_constants(kind, args.epsilon, &args.n, &opts)?;
    for r in reports.iter().filter(|r| r.t_lower == 0) {
        warnings.push(format!(
            "t_lower is 0 at n = {}: psi_max does not exceed sqrt(4 r / (gamma epsilon))",
            r.spec.n
        ));
    }
    let decreasing = reports.windows(2).all(|w| w[1].deviation < w[0].deviation);
    let result = json!({
        "reports": reports,
        "deviation_decreasing": decreasing,
    });
    Ok(envelope(
        "bound",
        &config(args, Some(&opts)),
        warnings,
        result,
    ))
}

fn cmd_tv_exact(args: &TvExactArgs, warnings: &mut Vec<String>) -> CliResult<String> {
    let spec = args.shuffle.spec(args.n, warnings)?;
    let chain = LiftedChain::new(&spec)?;
    let opts = args.solver.options()?;
    let start = LiftedState::start(spec.n);
    // The spectral solvers have their own minimum deck sizes; below them only
    // the distance column is available.
    let moments = match solve_with(&spec, &opts) {
        Ok(es) => Some(psi_moment_series(&chain, &es, &start, args.t)),
        Err(Error::InvalidSpec(msg)) => {
            warnings.push(format!("moment columns left empty: {msg}"));
            None
        }
        Err(e) => return Err(e.into()),
    };
    let mut tvs = Vec::with_capacity(args.t + 1);
    match &moments {
        Some(series) => tvs.extend(series.iter().map(|m| m.tv)),
        None => {
            let mut dist = chain.point_mass(&start);
            tvs.push(tv_to_uniform(&dist));
            for _ in 0..args.t {
                dist = chain.step(&dist);
                tvs.push(tv_to_uniform(&dist));
            }
        }
    }
    let moment_at = |t: usize| moments.as_ref().map(|s| s[t]);
    Ok(match args.format {
        Format::Csv => {
            let mut csv = Csv::new(&["t", "tv", "mean_re", "mean_im", "var"]);
            for (t, &tv) in tvs.iter().enumerate() {
                let [re, im, var] = match moment_at(t) {
                    Some(m) => [
                        Cell::Float(m.mean.re),
                        Cell::Float(m.mean.im),
                        Cell::Float(m.variance),
                    ],
                    None => [Cell::Empty, Cell::Empty, Cell::Empty],
                };
                csv.row(&[Cell::Int(t as u64), Cell::Float(tv), re, im, var]);
            }
            csv.into_string()
        }
        Format::Json => {
            let rows: Vec<Value> = tvs
                .iter()
                .enumerate()
                .map(|(t, &tv)| {
                    let m = moment_at(t);
                    json!({
                        "t": t,
                        "tv": tv,
                        "mean_re": m.map(|m| m.mean.re),
                        "mean_im": m.map(|m| m.mean.im),
                        "var": m.map(|m| m.variance),
                    })
                })
                .collect();
            envelope(
                "tv-exact",
                &config(args, Some(&opts)),
                warnings,
                json!({ "rows": rows }),
            )
        }
    })
}

enum TimeGrid {
    Auto,
    Fixed(Vec<u64>),
}

fn parse_t_grid(s: &str) -> CliResult<TimeGrid> {
    if s.trim() == "auto" {
        return Ok(TimeGrid::Auto);
    }
    let ts = s
        .split(',')
        .map(|x| x.trim().parse::<u64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| {
            CliError::Validation(format!(
                "--t-grid must be \"auto\" or a list of integers: {e}"
            ))
        })?;
    if ts.windows(2).any(|w| w[0] > w[1]) {
        return Err(CliError::Validation(
            "--t-grid must be nondecreasing".into(),
        ));
    }
    Ok(TimeGrid::Fixed(ts))
}

/// `(t, tv)` pairs for one deck size.
fn card_curve(
    spec: &ShuffleSpec,
    grid: &TimeGrid,
    threshold: f64,
    warnings: &mut Vec<String>,
) -> CliResult<Vec<(u64, f64)>> {
    let chain = CardChain::new(spec)?;
    let mut dist = chain.start(1);
    let mut t = 0u64;
    let mut out = Vec::new();
    match grid {
        TimeGrid::Fixed(ts) => {
            for &target in ts {
                while t < target {
                    dist = chain.step(&dist);
                    t += 1;
                }
                out.push((t, tv_to_uniform(&dist)));
            }
        }
        TimeGrid::Auto => {
            let limit = 64 * (spec.n as u64).pow(3) + 1024;
            let mut next = 0u64;
            loop {
                while t < next {
                    dist = chain.step(&dist);
                    t += 1;
                }
                let tv = tv_to_uniform(&dist);
                out.push((t, tv));
                if tv < threshold {
                    break;
                }
                if next >= limit {
                    warnings.push(format!(
                        "n = {}: distance still {tv} at t = {t}; stopped before reaching {threshold}",
                        spec.n
                    ));
                    break;
                }
                next = (2 * next).max(1);
            }
        }
    }
    Ok(out)
}

fn cmd_card_tv(args: &CardTvArgs, warnings: &mut Vec<String>) -> CliResult<String> {
    let grid = parse_t_grid(&args.t_grid)?;
    if !(args.threshold > 0.0 && args.threshold <= 1.0) {
        return Err(CliError::Validation(
            "--threshold must lie in (0, 1]".into(),
        ));
    }
    let mut rows = Vec::new();
    for &n in &args.n {
        let spec = args.shuffle.spec(n, warnings)?;
        for (t, tv) in card_curve(&spec, &grid, args.threshold, warnings)? {
            rows.push((n, t, tv));
        }
    }
    Ok(match args.format {
        Format::Csv => {
            let mut csv = Csv::new(&["n", "t", "tv"]);
            for &(n, t, tv) in &rows {
                csv.row(&[Cell::Int(n as u64), Cell::Int(t), Cell::Float(tv)]);
            }
            csv.into_string()
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|&(n, t, tv)| json!({"n": n, "t": t, "tv": tv}))
                .collect();
            envelope(
                "card-tv",
                &config(args, None),
                warnings,
                json!({ "rows": rows }),
            )
        }
    })
}

fn cmd_simulate(args: &SimulateArgs, warnings: &mut Vec<String>) -> CliResult<String> {
    let spec = args.shuffle.spec(args.n, warnings)?;
    if args.trials == 0 {
        return Err(CliError::Validation("--trials must be positive".into()));
    }
    let opts = args.solver.options()?;
    let es = solve_with(&spec, &opts)?;
    let batch = sample_psi(&es, args.t, args.trials, args.seed);
    Ok(match args.format {
        Format::Csv => {
            let mut csv = Csv::new(&["trial", "re", "im", "abs"]);
            for (k, z) in batch.samples.iter().enumerate() {
                csv.row(&[
                    Cell::Int(k as u64),
                    Cell::Float(z.re),
                    Cell::Float(z.im),
                    Cell::Float(z.norm()),
                ]);
            }
            csv.into_string()
        }
        Format::Json => {
            check_epsilon(args.epsilon)?;
            if args.stationary_samples == 0 {
                return Err(CliError::Validation(
                    "--stationary-samples must be positive".into(),
                ));
            }
            let sep = separation_test(&batch, args.stationary_samples, args.epsilon)?;
            let mean = batch.mean();
            let psi0 = es.v.iter().sum::<rudvalis_core::Complex64>();
            let expected = psi0 * es.lambda.powf(args.t as f64);
            let result = json!({
                "mean_re": mean.re,
                "mean_im": mean.im,
                "expected_mean_re": expected.re,
                "expected_mean_im": expected.im,
                "variance": batch.variance(),
                "standard_error": batch.standard_error(),
                "variance_ceiling": es.r_bound / (2.0 * es.gamma),
                "threshold": sep.threshold,
                "p_time_t": sep.p_time_t,
                "p_stationary": sep.p_stationary,
                "empirical_bound": sep.empirical_bound,
            });
            envelope("simulate", &config(args, Some(&opts)), warnings, result)
        }
    })
}

fn cmd_coupling(args: &CouplingArgs, warnings: &mut Vec<String>) -> CliResult<String> {
    let parity = coupling_parity(args.n, args.shifts, args.seed)?;
    let eq = shift_count_equivalence(args.n, args.t, args.seed)?;
    warnings.extend(ShuffleSpec::shift_or_swap(args.n)?.warnings());
    let result = json!({
        "parity": parity,
        "expected_fraction_odd": 1.0 / 3.0,
        "equivalence": eq,
        "shift_epoch_frequency": if eq.steps == 0 { 0.0 } else { eq.shift_epochs as f64 / eq.steps as f64 },
        "matched": eq.matched(),
    });
    let text = envelope("coupling", &config(args, None), warnings, result);
    if !eq.matched() {
        emit(&text, args.out.output.as_deref())?;
        return Err(CliError::Diagnostic(format!(
            "trajectories diverged at shift epoch {:?}",
            eq.first_mismatch
        )));
    }
    Ok(text)
}

fn run(cli: &Cli, warnings: &mut Vec<String>) -> CliResult<()> {
    let (text, out) = match &cli.command {
        Command::Spectrum(a) => (cmd_spectrum(a, warnings)?, &a.out),
        Command::Bound(a) => (cmd_bound(a, warnings)?, &a.out),
        Command::TvExact(a) => (cmd_tv_exact(a, warnings)?, &a.out),
        Command::CardTv(a) => (cmd_card_tv(a, warnings)?, &a.out),
        Command::Simulate(a) => (cmd_simulate(a, warnings)?, &a.out),
        Command::Coupling(a) => (cmd_coupling(a, warnings)?, &a.out),
    };
    emit(&text, out.output.as_deref())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut warnings = Vec::new();
    let outcome = run(&cli, &mut warnings);
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
