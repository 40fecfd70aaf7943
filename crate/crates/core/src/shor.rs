//! Period finding on two n-qubit registers `X` and `F`.
//!
//! The pipeline prepares a uniform superposition on `X`, evaluates `f` into
//! `F`, treats `F` in one of three ways, applies the Fourier transform to `X`
//! and measures it. The period is read from the outcome by continued fractions.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{self, CircuitProgram, Gate, Instruction, Preparation};
use crate::error::{Error, Result};
use crate::gates::{self, FunctionTable};
use crate::measure::{self, Measurement, OutcomeDistribution};
use crate::qstate::{PureState, RegisterLayout};

/// Largest `n` accepted by the simulated pipeline (two registers of `n` qubits).
pub const MAX_PIPELINE_QUBITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceSource {
    /// `f(x) = x mod r`.
    Synthetic,
    /// `f(x) = base^x mod modulus`.
    ModExp { base: u64, modulus: u64 },
}

/// A function with hidden period `r` on `n`-bit inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodFindingInstance {
    n: usize,
    table: FunctionTable,
    period: u64,
    source: InstanceSource,
}

impl PeriodFindingInstance {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `N = 2^n`.
    pub fn dim(&self) -> u64 {
        1 << self.n
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn table(&self) -> &FunctionTable {
        &self.table
    }

    pub fn source(&self) -> InstanceSource {
        self.source
    }

    /// Whether `r` divides `N`, the regime with the clean comb structure.
    pub fn period_divides_dim(&self) -> bool {
        self.dim().is_multiple_of(self.period)
    }

    pub fn layout(&self) -> Result<RegisterLayout> {
        if self.n == 0 || self.n > MAX_PIPELINE_QUBITS {
            return Err(Error::Usage(format!(
                "the pipeline needs 1 <= n <= {MAX_PIPELINE_QUBITS}, got {}",
                self.n
            )));
        }
        RegisterLayout::new([("X", self.n), ("F", self.n)])
    }
}

/// Synthetic instance `f(x) = x mod r`.
pub fn build_periodic(n: usize, r: u64) -> Result<PeriodFindingInstance> {
    if n > 2 * MAX_PIPELINE_QUBITS {
        return Err(Error::Usage(format!("n = {n} is too large")));
    }
    let big_n = 1u64 << n;
    if r < 1 || r > big_n {
        return Err(Error::Usage(format!("period must satisfy 1 <= r <= {big_n}, got {r}")));
    }
    Ok(PeriodFindingInstance {
        n,
        table: FunctionTable::from_fn(n, n, |x| x % r)?,
        period: r,
        source: InstanceSource::Synthetic,
    })
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Multiplicative order of `a` modulo `m`, by repeated multiplication.
pub fn multiplicative_order(a: u64, m: u64) -> Option<u64> {
    if m < 2 || gcd(a, m) != 1 {
        return None;
    }
    let mut acc = a % m;
    for r in 1..=m {
        if acc == 1 {
            return Some(r);
        }
        acc = ((acc as u128 * a as u128) % m as u128) as u64;
    }
    None
}

/// Modular-exponentiation instance `f(x) = a^x mod M`.
pub fn build_modexp(a: u64, modulus: u64, n: usize) -> Result<PeriodFindingInstance> {
    if n > 2 * MAX_PIPELINE_QUBITS {
        return Err(Error::Usage(format!("n = {n} is too large")));
    }
    if modulus < 2 {
        return Err(Error::Usage(format!("modulus must be at least 2, got {modulus}")));
    }
    if modulus > 1 << n {
        return Err(Error::Usage(format!("values mod {modulus} do not fit in {n} bits")));
    }
    let period = multiplicative_order(a, modulus).ok_or_else(|| Error::Usage(format!("gcd({a}, {modulus}) != 1")))?;
    Ok(PeriodFindingInstance {
        n,
        table: FunctionTable::modexp(a, modulus, n, n)?,
        period,
        source: InstanceSource::ModExp { base: a, modulus },
    })
}

/// How register `F` is treated between function evaluation and the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Discipline {
    /// Measure `F` right after the function evaluation.
    #[serde(rename = "measure-F-at-t2")]
    MeasureF,
    /// Leave `F` alone; only `X` is measured.
    #[serde(rename = "skip-F")]
    SkipF,
    /// Discard `F`; `X` continues as the random-phase mixture.
    #[serde(rename = "annihilate-F")]
    AnnihilateF,
}

impl Discipline {
    pub const ALL: [Discipline; 3] = [Discipline::MeasureF, Discipline::SkipF, Discipline::AnnihilateF];

    pub fn as_str(&self) -> &'static str {
        match self {
            Discipline::MeasureF => "measure-F-at-t2",
            Discipline::SkipF => "skip-F",
            Discipline::AnnihilateF => "annihilate-F",
        }
    }
}

impl fmt::Display for Discipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Discipline {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Discipline::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Usage(format!("unknown discipline {s:?}")))
    }
}

/// Outcome of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodResult {
    pub measured_c: u64,
    pub candidate_r: Option<u64>,
    pub success: bool,
    /// Observed value of `F` when it was measured at t2.
    pub f_bar: Option<u64>,
}

/// The block-diagram program: prepare, Hadamard on `X`, evaluate `f`, optionally
/// measure `F`, transform `X`, measure `X`. Tags `t1`..`t4` mark the stages.
pub fn fig1_program(inst: &PeriodFindingInstance, measure_f: bool) -> Result<CircuitProgram> {
    let layout = inst.layout()?;
    let mut ins = vec![
        Instruction::prepare("X", Preparation::Basis(0)),
        Instruction::prepare("F", Preparation::Basis(0)),
        Instruction::gate(Gate::Hadamard { reg: "X".into() }),
        Instruction::gate(Gate::OracleXor {
            input: "X".into(),
            output: "F".into(),
            table: inst.table.clone(),
        }),
    ];
    if measure_f {
        ins.push(Instruction::measure("F"));
    }
    let after_f = ins.len();
    ins.push(Instruction::gate(Gate::Qft { reg: "X".into() }));
    ins.push(Instruction::measure("X"));
    Ok(CircuitProgram::new(layout, ins)
        .with_tag("t1", 2)
        .with_tag("t2", 4)
        .with_tag("t3", after_f)
        .with_tag("t4", after_f + 1))
}

/// `(1/√N) Σ_x |x⟩_X |f(x)⟩_F`.
pub fn t2_state(inst: &PeriodFindingInstance) -> Result<PureState> {
    circuit::unitary_state_at(&fig1_program(inst, false)?, "t2")
}

/// Exact distribution of the final `X` outcome under a discipline.
///
/// Measuring `F` enumerates every branch, skipping reads the final state, and
/// discarding `F` averages the random phases analytically.
pub fn exact_x_distribution(inst: &PeriodFindingInstance, discipline: Discipline) -> Result<OutcomeDistribution> {
    match discipline {
        Discipline::MeasureF => circuit::exact_distribution(&fig1_program(inst, true)?, &["X"]),
        Discipline::SkipF => circuit::exact_distribution(&fig1_program(inst, false)?, &["X"]),
        Discipline::AnnihilateF => {
            let mixture = measure::phased_mixture_from_state(&t2_state(inst)?, "F")?;
            mixture
                .map_slots(|s| gates::qft(s, "X", false))?
                .outcome_distribution(&["X"])
        }
    }
}

/// Runs the pipeline once.
pub fn run_pipeline<R: Rng + ?Sized>(
    inst: &PeriodFindingInstance,
    discipline: Discipline,
    rng: &mut R,
) -> Result<PeriodResult> {
    Ok(run_pipeline_measured(inst, discipline, rng)?.0)
}

/// [`run_pipeline`] that also returns the measurements in the order they happened.
pub fn run_pipeline_measured<R: Rng + ?Sized>(
    inst: &PeriodFindingInstance,
    discipline: Discipline,
    rng: &mut R,
) -> Result<(PeriodResult, Vec<Measurement>)> {
    let measurements = match discipline {
        Discipline::MeasureF | Discipline::SkipF => {
            let trace = circuit::run(&fig1_program(inst, discipline == Discipline::MeasureF)?, rng)?;
            trace.measurements().cloned().collect::<Vec<_>>()
        }
        Discipline::AnnihilateF => {
            let mixture = measure::phased_mixture_from_state(&t2_state(inst)?, "F")?;
            let x_only = measure::sample_phases(&mixture, rng);
            let transformed = gates::qft(x_only, "X", false)?;
            vec![measure::measure_register(&transformed, "X", rng)?.0]
        }
    };
    let outcome = |reg: &str| measurements.iter().find(|m| m.register == reg).map(|m| m.outcome);
    let c = outcome("X").expect("X is measured");
    let candidate_r = extract_period(c, inst.dim());
    let result = PeriodResult {
        measured_c: c,
        candidate_r,
        success: candidate_r == Some(inst.period),
        f_bar: outcome("F"),
    };
    Ok((result, measurements))
}

/// Continued-fraction expansion `[a0; a1, a2, ...]` of `num/den`.
pub fn continued_fraction(mut num: u64, mut den: u64) -> Vec<u64> {
    let mut terms = Vec::new();
    while den != 0 {
        terms.push(num / den);
        (num, den) = (den, num % den);
    }
    terms
}

/// Convergents `p_i / q_i` of a continued fraction.
pub fn convergents(terms: &[u64]) -> Vec<(u64, u64)> {
    let (mut p_prev, mut p) = (1u64, 0u64);
    let (mut q_prev, mut q) = (0u64, 1u64);
    let mut out = Vec::with_capacity(terms.len());
    for &a in terms {
        (p_prev, p) = (a * p_prev + p, p_prev);
        (q_prev, q) = (a * q_prev + q, q_prev);
        out.push((p_prev, q_prev));
    }
    out
}

/// Period candidate from outcome `c` of an `N`-point transform: the denominator
/// of the last convergent of `c/N`. `c = 0` carries no information.
pub fn extract_period(c: u64, dim: u64) -> Option<u64> {
    if c == 0 || c >= dim {
        return None;
    }
    convergents(&continued_fraction(c, dim)).last().map(|&(_, q)| q)
}

/// Exact probability that one run returns the true period.
pub fn single_run_success_probability(inst: &PeriodFindingInstance) -> Result<f64> {
    let dist = exact_x_distribution(inst, Discipline::SkipF)?;
    Ok(dist
        .probabilities
        .iter()
        .enumerate()
        .filter(|(c, _)| extract_period(*c as u64, inst.dim()) == Some(inst.period))
        .map(|(_, p)| p)
        .sum())
}

/// Machine-readable summary of a batch of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShorReport {
    pub n: usize,
    pub r: u64,
    pub discipline: Discipline,
    pub distribution: Vec<f64>,
    pub success_probability_exact: f64,
    pub success_rate_empirical: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Exact distribution and success probability plus `trials` sampled runs.
pub fn report(inst: &PeriodFindingInstance, discipline: Discipline, trials: usize, seed: u64) -> Result<ShorReport> {
    report_with(inst, discipline, trials, seed, |_, _| {})
}

/// [`report`] that hands every trial's measurements to `observe`.
pub fn report_with(
    inst: &PeriodFindingInstance,
    discipline: Discipline,
    trials: usize,
    seed: u64,
    mut observe: impl FnMut(usize, &[Measurement]),
) -> Result<ShorReport> {
    let distribution = exact_x_distribution(inst, discipline)?.probabilities;
    let exact = single_run_success_probability(inst)?;
    let mut rng = crate::rng_from_seed(seed);
    let mut hits = 0usize;
    for trial in 0..trials {
        let (res, measurements) = run_pipeline_measured(inst, discipline, &mut rng)?;
        observe(trial, &measurements);
        hits += res.success as usize;
    }
    Ok(ShorReport {
        n: inst.n,
        r: inst.period,
        discipline,
        distribution,
        success_probability_exact: exact,
        success_rate_empirical: if trials == 0 { 0.0 } else { hits as f64 / trials as f64 },
        trials,
        seed,
    })
}
