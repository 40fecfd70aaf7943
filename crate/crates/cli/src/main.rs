//! `qproj`: command-line front end for the simulator.
//!
//! Exit status is 0 on success, 2 on a usage error and 1 when an internal
//! check fails. Every report carries the seed it was produced with.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qproj_core::circuit::{self, CircuitProgram};
use qproj_core::costmodel::{self, StageTable};
use qproj_core::grover::{self, GameInstance, GameTranscript, MeasureOrder, PhaseAverage, Strategy};
use qproj_core::measure::{self, DensityMatrix};
use qproj_core::selftest::{self, Check, Suite};
use qproj_core::shor::{self, Discipline, PeriodFindingInstance, ShorReport};
use qproj_core::{rng_from_seed, Error, STATE_TOL};

/// Seed used when neither `--seed` nor `QPROJ_SEED` is given.
const DEFAULT_SEED: u64 = 2718;

#[derive(Parser, Debug)]
#[command(
    name = "qproj",
    version,
    about = "Exact state-vector simulation of period finding and Grover search"
)]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, env = "QPROJ_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Print the report as JSON.
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,

    /// Print the report as CSV (only `cost`).
    #[arg(long, global = true)]
    csv: bool,

    /// Run the invariant suites for the subcommand (all suites without one).
    #[arg(long, global = true)]
    selftest: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Period finding on two n-qubit registers.
    Shor(ShorArgs),
    /// Quantum drawer search.
    Grover(GroverArgs),
    /// Classical drawer search.
    Game(GameArgs),
    /// Check that two circuits, or a circuit and its deferred form, agree.
    DeferCheck(DeferArgs),
    /// Classical and quantum unit counts per stage.
    Cost(CostArgs),
    /// Random-phase averages against reduced density matrices.
    MixtureCheck(MixtureArgs),
}

#[derive(Args, Debug)]
struct ShorArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Period of the synthetic function `x mod r` (default 4).
    #[arg(long, conflicts_with_all = ["base", "modulus"])]
    r: Option<u64>,
    /// Use `base^x mod modulus` instead of a synthetic function.
    #[arg(long, requires = "modulus")]
    base: Option<u64>,
    #[arg(long, requires = "base")]
    modulus: Option<u64>,
    #[arg(long, default_value = "skip-F", value_parser = parse_discipline)]
    discipline: Discipline,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Write every measurement as a JSON line.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Write the state after function evaluation as JSON.
    #[arg(long)]
    dump_state: Option<PathBuf>,
    /// Write the circuit program as JSON.
    #[arg(long)]
    emit_circuit: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Variant {
    Standard,
    Extended,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Order {
    KFirst,
    XFirst,
}

#[derive(Args, Debug)]
struct GroverArgs {
    /// Number of drawers, a power of two.
    #[arg(long, default_value_t = 4)]
    n: u64,
    /// Hidden drawer (standard variant; the extended variant draws it from `K`).
    #[arg(long, default_value_t = 0)]
    k: u64,
    #[arg(long, value_enum, default_value_t = Variant::Standard)]
    variant: Variant,
    /// Measurement order for the extended variant.
    #[arg(long, value_enum, default_value_t = Order::KFirst)]
    order: Order,
    /// Write the state right before measurement as JSON.
    #[arg(long)]
    dump_state: Option<PathBuf>,
    #[arg(long)]
    emit_circuit: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum StrategyArg {
    Joint,
    Unilateral,
}

#[derive(Args, Debug)]
struct GameArgs {
    #[arg(long, default_value_t = 4)]
    drawers: u64,
    #[arg(long, default_value_t = 0)]
    k: u64,
    #[arg(long, value_enum, default_value_t = StrategyArg::Joint)]
    strategy: StrategyArg,
}

#[derive(Args, Debug)]
struct DeferArgs {
    /// Circuit program (JSON).
    #[arg(long)]
    circuit: Option<PathBuf>,
    /// Second program to compare against.
    #[arg(long, conflicts_with = "auto_defer")]
    other: Option<PathBuf>,
    /// Compare against the program with its measurements deferred.
    #[arg(long)]
    auto_defer: bool,
    /// Registers whose joint distribution is compared (default: all).
    #[arg(long, value_delimiter = ',')]
    observe: Vec<String>,
    /// Write the deferred program as JSON.
    #[arg(long)]
    emit_circuit: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CostArgs {
    /// Inclusive range `lo:hi` of qubit counts.
    #[arg(long, default_value = "2:10", value_parser = parse_range)]
    n_range: (usize, usize),
}

#[derive(Args, Debug)]
struct MixtureArgs {
    /// Angle of the two-state example.
    #[arg(long, default_value_t = 0.6)]
    phi: f64,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Size of the period-finding state whose function register is discarded.
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    r: u64,
    /// Drawers for the hidden-drawer preparation.
    #[arg(long, default_value_t = 4)]
    drawers: u64,
    /// Write the averaged density matrix of the period-finding state as JSON.
    #[arg(long)]
    dump_density: Option<PathBuf>,
}

fn parse_discipline(s: &str) -> Result<Discipline, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: usize = lo.parse().map_err(|e| format!("{e}"))?;
    let hi: usize = hi.parse().map_err(|e| format!("{e}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}:{hi}"));
    }
    if hi > 40 {
        return Err(format!("n = {hi} is too large"));
    }
    Ok((lo, hi))
}

enum Failure {
    Usage(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Degenerate(_) => Failure::Internal(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Format {
    Text,
    Json,
    Csv,
}

fn print_report<T: Serialize>(format: Format, report: &T, text: impl FnOnce() -> String) -> CmdResult {
    match format {
        Format::Json => {
            let s = serde_json::to_string_pretty(report).map_err(|e| Failure::Internal(e.to_string()))?;
            emit(&(s + "\n"));
        }
        Format::Text => emit(&text()),
        Format::Csv => return Err(Failure::Usage("--csv is only available for `cost`".into())),
    }
    Ok(())
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|()| out.flush());
}

fn write_file(path: &Path, contents: &str) -> CmdResult {
    fs::write(path, contents).map_err(|e| Failure::Internal(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize") + "\n"
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    eprintln!("seed = {}", cli.seed);
    let format = if cli.json {
        Format::Json
    } else if cli.csv {
        Format::Csv
    } else {
        Format::Text
    };
    let outcome = if cli.selftest {
        run_selftest(cli.command.as_ref(), cli.seed, format)
    } else {
        match &cli.command {
            None => Err(Failure::Usage("a subcommand is required (see --help)".into())),
            Some(cmd) => dispatch(cmd, cli.seed, format),
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: &Command, seed: u64, format: Format) -> CmdResult {
    match cmd {
        Command::Shor(a) => cmd_shor(a, seed, format),
        Command::Grover(a) => cmd_grover(a, seed, format),
        Command::Game(a) => cmd_game(a, seed, format),
        Command::DeferCheck(a) => cmd_defer(a, seed, format),
        Command::Cost(a) => cmd_cost(a, seed, format),
        Command::MixtureCheck(a) => cmd_mixture(a, seed, format),
    }
}

fn suites_for(cmd: Option<&Command>) -> Vec<Suite> {
    match cmd {
        None => Suite::ALL.to_vec(),
        Some(Command::Shor(_)) => vec![Suite::Gates, Suite::Measure, Suite::Shor],
        Some(Command::Grover(_)) => vec![Suite::Gates, Suite::Grover],
        Some(Command::Game(_)) => vec![Suite::Grover],
        Some(Command::DeferCheck(_)) => vec![Suite::Circuit],
        Some(Command::Cost(_)) => vec![Suite::Cost],
        Some(Command::MixtureCheck(_)) => vec![Suite::Qstate, Suite::Measure, Suite::Mixture],
    }
}

#[derive(Serialize)]
struct SuiteReport {
    suite: Suite,
    checks: Vec<Check>,
}

#[derive(Serialize)]
struct SelftestReport {
    seed: u64,
    passed: bool,
    suites: Vec<SuiteReport>,
}

fn run_selftest(cmd: Option<&Command>, seed: u64, format: Format) -> CmdResult {
    let suites: Vec<SuiteReport> = selftest::run_suites(&suites_for(cmd), seed)
        .into_iter()
        .map(|(suite, checks)| SuiteReport { suite, checks })
        .collect();
    let failed = suites.iter().flat_map(|s| &s.checks).filter(|c| !c.passed).count();
    let report = SelftestReport {
        seed,
        passed: failed == 0,
        suites,
    };
    print_report(format, &report, || {
        let mut out = String::new();
        for s in &report.suites {
            for c in &s.checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                out.push_str(&format!("{tag} {}: {} ({})\n", s.suite, c.name, c.detail));
            }
        }
        out.push_str(&format!("seed {seed}: {failed} failed\n"));
        out
    })?;
    if failed > 0 {
        return Err(Failure::Internal(format!("{failed} selftest checks failed")));
    }
    Ok(())
}

fn shor_instance(a: &ShorArgs) -> Result<PeriodFindingInstance, Error> {
    match (a.base, a.modulus) {
        (Some(base), Some(modulus)) => shor::build_modexp(base, modulus, a.n),
        _ => shor::build_periodic(a.n, a.r.unwrap_or(4)),
    }
}

fn cmd_shor(a: &ShorArgs, seed: u64, format: Format) -> CmdResult {
    let inst = shor_instance(a)?;
    if let Some(path) = &a.emit_circuit {
        write_file(
            path,
            &(shor::fig1_program(&inst, a.discipline == Discipline::MeasureF)?.to_json() + "\n"),
        )?;
    }
    if let Some(path) = &a.dump_state {
        write_file(path, &to_json(&shor::t2_state(&inst)?))?;
    }
    let mut records = String::new();
    let report: ShorReport = shor::report_with(&inst, a.discipline, a.trials, seed, |_, ms| {
        for m in ms {
            records.push_str(&serde_json::to_string(&m.record(seed)).expect("records serialize"));
            records.push('\n');
        }
    })?;
    if let Some(path) = &a.records {
        write_file(path, &records)?;
    }
    print_report(format, &report, || {
        let mut out = format!(
            "n = {}, r = {}, discipline {}, seed {}\n",
            report.n, report.r, report.discipline, report.seed
        );
        for (c, p) in report.distribution.iter().enumerate() {
            if *p > STATE_TOL {
                out.push_str(&format!("  P(c = {c}) = {p:.6}\n"));
            }
        }
        out.push_str(&format!(
            "exact success probability {:.6}, empirical {:.4} over {} trials\n",
            report.success_probability_exact, report.success_rate_empirical, report.trials
        ));
        out
    })
}

#[derive(Serialize)]
struct OutcomeRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<u64>,
    x: u64,
    probability: f64,
}

#[derive(Serialize)]
struct GroverReport {
    seed: u64,
    variant: &'static str,
    #[serde(flatten)]
    transcript: GameTranscript,
    outcome_table: Vec<OutcomeRow>,
}

fn cmd_grover(a: &GroverArgs, seed: u64, format: Format) -> CmdResult {
    let mut rng = rng_from_seed(seed);
    let (program, pre, transcript, outcome_table) = match a.variant {
        Variant::Standard => {
            let inst = GameInstance::new(a.n, a.k)?;
            let program = grover::standard_program(&inst)?;
            let (pre, t) = grover::run_standard_grover(&inst, &mut rng)?;
            let dist = circuit::exact_distribution(&program, &["X"])?;
            let rows = (0..a.n)
                .map(|x| OutcomeRow {
                    k: None,
                    x,
                    probability: dist.prob(x),
                })
                .collect();
            (program, pre, t, rows)
        }
        Variant::Extended => {
            let order = match a.order {
                Order::KFirst => MeasureOrder::KFirst,
                Order::XFirst => MeasureOrder::XFirst,
            };
            let phases = grover::sample_extended_phases(a.n, &mut rng)?;
            let program = grover::extended_program(a.n, &phases, order)?;
            let (pre, t) = grover::run_extended_grover_with_phases(a.n, &phases, order, &mut rng)?;
            let dist = circuit::exact_distribution(&program, &["K", "X"])?;
            let rows = (0..a.n)
                .flat_map(|k| (0..a.n).map(move |x| (k, x)))
                .map(|(k, x)| OutcomeRow {
                    k: Some(k),
                    x,
                    probability: dist.prob_of(&[k, x]),
                })
                .collect();
            (program, pre, t, rows)
        }
    };
    if let Some(path) = &a.emit_circuit {
        write_file(path, &(program.to_json() + "\n"))?;
    }
    if let Some(path) = &a.dump_state {
        write_file(path, &to_json(&pre))?;
    }
    let report = GroverReport {
        seed,
        variant: match a.variant {
            Variant::Standard => "standard",
            Variant::Extended => "extended",
        },
        transcript,
        outcome_table,
    };
    print_report(format, &report, || {
        let t = &report.transcript;
        let mut out = format!(
            "{} drawers, {} variant, seed {}: hider k = {}, seeker x = {}, {} oracle queries (classical worst case {})\n",
            t.drawers,
            report.variant,
            seed,
            t.announced_k,
            t.answered_x,
            t.oracle_queries,
            t.classical_worst_case.unwrap_or(0)
        );
        for row in report.outcome_table.iter().filter(|r| r.probability > STATE_TOL) {
            match row.k {
                Some(k) => out.push_str(&format!("  P(k = {k}, x = {}) = {:.6}\n", row.x, row.probability)),
                None => out.push_str(&format!("  P(x = {}) = {:.6}\n", row.x, row.probability)),
            }
        }
        out
    })
}

#[derive(Serialize)]
struct ClassicalReport {
    seed: u64,
    #[serde(flatten)]
    transcript: GameTranscript,
    worst_case_queries: u64,
}

fn cmd_game(a: &GameArgs, seed: u64, format: Format) -> CmdResult {
    let strategy = match a.strategy {
        StrategyArg::Joint => Strategy::Joint,
        StrategyArg::Unilateral => Strategy::Unilateral,
    };
    let inst = GameInstance::new(a.drawers, a.k)?;
    let transcript = grover::run_classical_game(&inst, strategy)?;
    let report = ClassicalReport {
        seed,
        transcript,
        worst_case_queries: grover::classical_worst_case(a.drawers, strategy)?,
    };
    print_report(format, &report, || {
        let t = &report.transcript;
        let row = t
            .announced_row
            .map(|r| format!(", row {r} announced"))
            .unwrap_or_default();
        format!(
            "{} drawers, {} search{row}: drawer {} found after {} queries (worst case {})\n",
            t.drawers, t.protocol, t.answered_x, t.oracle_queries, report.worst_case_queries
        )
    })
}

fn read_program(path: &Path) -> Result<CircuitProgram, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(CircuitProgram::from_json(&text)?)
}

#[derive(Serialize)]
struct DeferReport {
    seed: u64,
    auto_defer: bool,
    observed: Vec<String>,
    tv_distance: f64,
    equivalent: bool,
}

fn cmd_defer(a: &DeferArgs, seed: u64, format: Format) -> CmdResult {
    let path = a
        .circuit
        .as_ref()
        .ok_or_else(|| Failure::Usage("--circuit is required".into()))?;
    let first = read_program(path)?;
    first.validate()?;
    let second = match (&a.other, a.auto_defer) {
        (Some(path), _) => read_program(path)?,
        (None, true) => circuit::defer_measurements(&first)?,
        (None, false) => return Err(Failure::Usage("give --other or --auto-defer".into())),
    };
    if let (true, Some(path)) = (a.auto_defer, &a.emit_circuit) {
        write_file(path, &(second.to_json() + "\n"))?;
    }
    let observed: Vec<String> = if a.observe.is_empty() {
        first.layout.names().into_iter().map(str::to_string).collect()
    } else {
        a.observe.clone()
    };
    let regs: Vec<&str> = observed.iter().map(String::as_str).collect();
    let d = circuit::equivalent_distributions(&first, &second, &regs)?;
    let report = DeferReport {
        seed,
        auto_defer: a.auto_defer,
        observed,
        tv_distance: d.value,
        equivalent: d.value < STATE_TOL,
    };
    print_report(format, &report, || {
        format!(
            "total variation over {:?}: {:.3e} ({})\n",
            report.observed,
            report.tv_distance,
            if report.equivalent { "equivalent" } else { "different" }
        )
    })?;
    if a.auto_defer && !report.equivalent {
        return Err(Failure::Internal(format!(
            "deferral changed the outcome distribution by {}",
            d.value
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct CostReport {
    seed: u64,
    #[serde(flatten)]
    table: StageTable,
}

fn cmd_cost(a: &CostArgs, seed: u64, format: Format) -> CmdResult {
    let ns: Vec<usize> = (a.n_range.0..=a.n_range.1).collect();
    let table = costmodel::stage_table(&ns)?;
    let passed = table.all_passed();
    match format {
        Format::Csv => emit(&table.to_csv()),
        _ => {
            let report = CostReport { seed, table };
            print_report(format, &report, || {
                let mut out = format!("{:>3} {:<20} {:>10} {:>8}\n", "n", "stage", "classical", "quantum");
                for r in &report.table.rows {
                    out.push_str(&format!(
                        "{:>3} {:<20} {:>10} {:>8}\n",
                        r.n,
                        r.stage.as_str(),
                        r.classical_units,
                        r.quantum_units
                    ));
                }
                out
            })?;
        }
    }
    if !passed {
        return Err(Failure::Internal("a growth check failed".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct DistanceEntry {
    name: &'static str,
    frobenius: f64,
    tolerance: f64,
    /// `below` when the distance must stay under the tolerance, `above` otherwise.
    expect: &'static str,
    passed: bool,
}

impl DistanceEntry {
    fn below(name: &'static str, frobenius: f64, tolerance: f64) -> Self {
        DistanceEntry {
            name,
            frobenius,
            tolerance,
            expect: "below",
            passed: frobenius < tolerance,
        }
    }

    fn above(name: &'static str, frobenius: f64, tolerance: f64) -> Self {
        DistanceEntry {
            name,
            frobenius,
            tolerance,
            expect: "above",
            passed: frobenius > tolerance,
        }
    }
}

#[derive(Serialize)]
struct MixtureReport {
    seed: u64,
    phi: f64,
    samples: usize,
    n: usize,
    r: u64,
    drawers: u64,
    checks: Vec<DistanceEntry>,
}

/// Monte Carlo tolerance: about three standard errors.
fn sampling_tolerance(samples: usize) -> f64 {
    3.0 / (samples as f64).sqrt()
}

fn cmd_mixture(a: &MixtureArgs, seed: u64, format: Format) -> CmdResult {
    let workers = grover::MIXTURE_WORKERS;
    let mc_tol = sampling_tolerance(a.samples.max(1));
    let two = measure::two_state_mixture(a.phi);
    let target = DensityMatrix::diagonal(&[a.phi.sin().powi(2), a.phi.cos().powi(2)]);
    let t2 = shor::t2_state(&shor::build_periodic(a.n, a.r)?)?;
    let t2_mix = measure::phased_mixture_from_state(&t2, "F")?;
    let reduced = measure::partial_trace(&t2, &["X"])?;
    let t2_avg = measure::analytic_density(&t2_mix)?;
    if let Some(path) = &a.dump_density {
        write_file(path, &to_json(&t2_avg))?;
    }
    let checks = vec![
        DistanceEntry::below(
            "two-state analytic",
            measure::analytic_density(&two)?.frobenius_distance(&target)?.value,
            STATE_TOL,
        ),
        DistanceEntry::below(
            "two-state monte-carlo",
            measure::average_density_parallel(&two, a.samples, seed, workers)?
                .frobenius_distance(&target)?
                .value,
            mc_tol,
        ),
        DistanceEntry::below(
            "function register discarded, analytic",
            t2_avg.frobenius_distance(&reduced)?.value,
            STATE_TOL,
        ),
        DistanceEntry::below(
            "function register discarded, monte-carlo",
            measure::average_density_parallel(&t2_mix, a.samples, seed, workers)?
                .frobenius_distance(&reduced)?
                .value,
            mc_tol,
        ),
        DistanceEntry::below(
            "hidden drawer, analytic",
            grover::mixture_equivalence_check(a.drawers, PhaseAverage::Analytic)?.value,
            STATE_TOL,
        ),
        DistanceEntry::below(
            "hidden drawer, monte-carlo",
            grover::mixture_equivalence_check(
                a.drawers,
                PhaseAverage::MonteCarlo {
                    samples: a.samples,
                    seed,
                },
            )?
            .value,
            mc_tol,
        ),
        DistanceEntry::above(
            "hidden drawer, correlated phases",
            grover::mixture_equivalence_check(a.drawers, PhaseAverage::Correlated)?.value,
            0.1,
        ),
    ];
    let report = MixtureReport {
        seed,
        phi: a.phi,
        samples: a.samples,
        n: a.n,
        r: a.r,
        drawers: a.drawers,
        checks,
    };
    print_report(format, &report, || {
        let mut out = format!("seed {seed}, {} samples\n", a.samples);
        for c in &report.checks {
            out.push_str(&format!(
                "{} {}: {:.3e} ({} {:.1e})\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.frobenius,
                c.expect,
                c.tolerance
            ));
        }
        out
    })?;
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if !failed.is_empty() {
        return Err(Failure::Internal(format!("failed: {}", failed.join(", "))));
    }
    Ok(())
}
