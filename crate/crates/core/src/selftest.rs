//! Invariant suites behind the CLI `--selftest` flag.
//!
//! Every suite is deterministic for a given seed and returns one [`Check`] per
//! property, so callers can print and count failures.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::circuit::{self, CircuitProgram, Gate, Instruction, Preparation};
use crate::costmodel::{self, Stage};
use crate::error::{Error, Result};
use crate::gates::{FunctionTable, ModedFunctionTable};
use crate::grover::{self, GameInstance, MeasureOrder, PhaseAverage, Strategy};
use crate::measure::{self, DensityMatrix, ProjectionOperator};
use crate::qstate::{self, PureState, RegisterLayout};
use crate::shor::{self, Discipline};
use crate::{rng_from_seed, SimRng, STATE_TOL};

/// Significance level of the Born-rule goodness-of-fit test.
pub const BORN_SIGNIFICANCE: f64 = 1e-3;
pub const BORN_SAMPLES: usize = 10_000;
pub const UNITARITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    /// Records an error from the check body as a failure.
    fn from_result(name: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Check::new(name, passed, detail),
            Err(e) => Check::new(name, false, format!("error: {e}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Qstate,
    Gates,
    Measure,
    Circuit,
    Shor,
    Grover,
    Cost,
    Mixture,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Qstate,
        Suite::Gates,
        Suite::Measure,
        Suite::Circuit,
        Suite::Shor,
        Suite::Grover,
        Suite::Cost,
        Suite::Mixture,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Qstate => "qstate",
            Suite::Gates => "gates",
            Suite::Measure => "measure",
            Suite::Circuit => "circuit",
            Suite::Shor => "shor",
            Suite::Grover => "grover",
            Suite::Cost => "cost",
            Suite::Mixture => "mixture",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::Usage(format!("unknown suite {s:?}")))
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Vec<Check> {
    let mut rng = rng_from_seed(seed);
    match suite {
        Suite::Qstate => qstate_suite(&mut rng),
        Suite::Gates => gates_suite(&mut rng),
        Suite::Measure => measure_suite(&mut rng),
        Suite::Circuit => circuit_suite(&mut rng),
        Suite::Shor => shor_suite(),
        Suite::Grover => grover_suite(&mut rng),
        Suite::Cost => cost_suite(),
        Suite::Mixture => mixture_suite(seed),
    }
}

pub fn run_suites(suites: &[Suite], seed: u64) -> Vec<(Suite, Vec<Check>)> {
    suites.iter().map(|&s| (s, run_suite(s, seed))).collect()
}

fn random_state(layout: &RegisterLayout, rng: &mut SimRng) -> PureState {
    let amps = (0..layout.dim())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    qstate::normalize(PureState::from_amplitudes(layout.clone(), amps).expect("sizes match")).expect("nonzero")
}

fn random_table(in_bits: usize, out_bits: usize, rng: &mut SimRng) -> FunctionTable {
    let table = (0..1u64 << in_bits)
        .map(|_| rng.random_range(0..1u64 << out_bits))
        .collect();
    FunctionTable::new(in_bits, out_bits, table).expect("values fit")
}

fn basis_vector(layout: &RegisterLayout, idx: usize) -> PureState {
    let mut amps = vec![Complex64::new(0.0, 0.0); layout.dim()];
    amps[idx] = Complex64::new(1.0, 0.0);
    PureState::from_amplitudes(layout.clone(), amps).expect("sizes match")
}

fn qstate_suite(rng: &mut SimRng) -> Vec<Check> {
    let mut out = Vec::new();
    out.push(Check::from_result(
        "encode-decode round trip",
        (|| {
            let layout = RegisterLayout::new([("A", 2), ("B", 3), ("C", 1)])?;
            for idx in 0..layout.dim() {
                let values = layout.decode(idx);
                let pairs: Vec<(&str, u64)> = values.iter().map(|(n, v)| (n.as_str(), *v)).collect();
                if layout.encode(&pairs)? != idx {
                    return Ok((false, format!("index {idx} does not round trip")));
                }
            }
            Ok((true, format!("{} indices", layout.dim())))
        })(),
    ));
    out.push(Check::from_result(
        "normalize is idempotent",
        (|| {
            let layout = RegisterLayout::new([("A", 3)])?;
            for _ in 0..50 {
                let once = random_state(&layout, rng);
                let twice = qstate::normalize(once.clone())?;
                if once != twice {
                    return Ok((false, "second normalization changed the state".into()));
                }
            }
            Ok((true, "50 random states".into()))
        })(),
    ));
    out.push(Check::from_result(
        "global phase is invisible",
        (|| {
            let layout = RegisterLayout::new([("A", 3)])?;
            let s = random_state(&layout, rng);
            let rotated = s.clone().scaled(Complex64::from_polar(1.0, 1.234));
            let d = qstate::compare_up_to_global_phase(&s, &rotated)?;
            Ok((d.value < STATE_TOL, format!("distance {:.3e}", d.value)))
        })(),
    ));
    out
}

fn unitarity_error(gate: &Gate, layout: &RegisterLayout) -> Result<f64> {
    let cols: Vec<PureState> = (0..layout.dim())
        .map(|i| gate.apply(basis_vector(layout, i)))
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for i in 0..cols.len() {
        for j in i..cols.len() {
            let ip = cols[i].inner(&cols[j])?;
            let expected = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((ip - Complex64::new(expected, 0.0)).norm());
        }
    }
    Ok(worst)
}

fn gates_suite(rng: &mut SimRng) -> Vec<Check> {
    let mut out = Vec::new();
    let layout = RegisterLayout::new([("K", 1), ("X", 3), ("F", 2)]).expect("valid layout");
    let xor_table = random_table(3, 2, rng);
    let moded = ModedFunctionTable::from_fn(1, 3, 2, |k, x| (x + k) % 4).expect("values fit");
    let gates = [
        Gate::Hadamard { reg: "X".into() },
        Gate::Qft { reg: "X".into() },
        Gate::InverseQft { reg: "X".into() },
        Gate::OracleXor {
            input: "X".into(),
            output: "F".into(),
            table: xor_table,
        },
        Gate::OracleModed {
            mode: "K".into(),
            input: "X".into(),
            output: "F".into(),
            table: moded,
        },
        Gate::GroverDiffusion { reg: "X".into() },
    ];
    for g in &gates {
        let name = format!(
            "unitarity of {}",
            serde_json::to_value(g)
                .map(|v| v["kind"].to_string())
                .unwrap_or_default()
        );
        out.push(Check::from_result(
            &name,
            unitarity_error(g, &layout).map(|e| (e < UNITARITY_TOL, format!("max |U†U - I| = {e:.3e}"))),
        ));
    }
    out.push(Check::from_result(
        "gate followed by its inverse is the identity",
        (|| {
            let mut worst = 0.0f64;
            for g in &gates {
                let s = random_state(&layout, rng);
                let back = g.inverse().apply(g.apply(s.clone())?)?;
                worst = worst.max(back.max_abs_diff(&s)?);
            }
            Ok((worst < UNITARITY_TOL, format!("max deviation {worst:.3e}")))
        })(),
    ));
    out.push(Check::from_result(
        "dense and butterfly transforms agree",
        (|| {
            let l = RegisterLayout::new([("X", 6)])?;
            let s = random_state(&l, rng);
            let a = crate::gates::qft(s.clone(), "X", false)?;
            let b = crate::gates::qft_dense(s, "X", false)?;
            let d = a.max_abs_diff(&b)?;
            Ok((d < STATE_TOL, format!("max deviation {d:.3e}")))
        })(),
    ));
    out
}

/// Pearson statistic with expected counts below 5 pooled into one bin (and that
/// bin folded into the largest one if it is still too small).
fn chi_square(probabilities: &[f64], counts: &[usize], samples: usize) -> (f64, usize, bool) {
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    let mut impossible_hit = false;
    for (&p, &c) in probabilities.iter().zip(counts) {
        let expected = p * samples as f64;
        if p == 0.0 {
            impossible_hit |= c > 0;
        } else if expected < 5.0 {
            pooled.0 += expected;
            pooled.1 += c as f64;
        } else {
            bins.push((expected, c as f64));
        }
    }
    if pooled.0 >= 5.0 {
        bins.push(pooled);
    } else if pooled.0 > 0.0 {
        if let Some(big) = bins.iter_mut().max_by(|a, b| a.0.total_cmp(&b.0)) {
            big.0 += pooled.0;
            big.1 += pooled.1;
        } else {
            bins.push(pooled);
        }
    }
    let stat = bins.iter().map(|(e, o)| (o - e) * (o - e) / e).sum();
    (stat, bins.len().saturating_sub(1), impossible_hit)
}

fn measure_suite(rng: &mut SimRng) -> Vec<Check> {
    let mut out = Vec::new();
    out.push(Check::from_result(
        "projector idempotence and completeness",
        (|| {
            let layout = RegisterLayout::new([("X", 3), ("F", 2)])?;
            let mut worst = 0.0f64;
            for _ in 0..20 {
                let s = random_state(&layout, rng);
                for reg in ["X", "F"] {
                    let mut sum = PureState::zeros(layout.clone());
                    for v in 0..layout.register(reg)?.dim() as u64 {
                        let p = ProjectionOperator::new(reg, v);
                        let (once, _) = measure::project_unnormalized(&s, &p)?;
                        let (twice, _) = measure::project_unnormalized(&once, &p)?;
                        worst = worst.max(once.max_abs_diff(&twice)?);
                        for (a, b) in sum.amplitudes_mut().iter_mut().zip(once.amplitudes()) {
                            *a += b;
                        }
                    }
                    worst = worst.max(sum.max_abs_diff(&s)?);
                }
            }
            Ok((worst < 1e-15, format!("max deviation {worst:.3e}")))
        })(),
    ));
    out.push(Check::from_result(
        "Born sampling chi-square",
        (|| {
            let layout = RegisterLayout::new([("X", 4)])?;
            let mut s = random_state(&layout, rng);
            // leave a few outcomes impossible and a few rare
            for i in [3usize, 9] {
                s.amplitudes_mut()[i] = Complex64::new(0.0, 0.0);
            }
            s.amplitudes_mut()[12] *= 0.05;
            let s = qstate::normalize(s)?;
            let dist = measure::outcome_distribution(&s, "X")?;
            let mut counts = vec![0usize; layout.dim()];
            for _ in 0..BORN_SAMPLES {
                let (m, _) = measure::measure_register(&s, "X", rng)?;
                counts[m.outcome as usize] += 1;
            }
            let (stat, df, impossible_hit) = chi_square(&dist.probabilities, &counts, BORN_SAMPLES);
            let critical = ChiSquared::new(df as f64)
                .map_err(|e| Error::Usage(e.to_string()))?
                .inverse_cdf(1.0 - BORN_SIGNIFICANCE);
            Ok((
                !impossible_hit && stat <= critical,
                format!("chi2 = {stat:.3} on {df} dof, critical {critical:.3} at alpha {BORN_SIGNIFICANCE}"),
            ))
        })(),
    ));
    out.push(Check::from_result(
        "filtration support law",
        (|| {
            let mut cases = 0usize;
            for n in 1..=6usize {
                let mut tables: Vec<FunctionTable> = (1..=1u64 << n)
                    .map(|r| FunctionTable::from_fn(n, n, |x| x % r))
                    .collect::<Result<_>>()?;
                if n <= 2 {
                    // every function on n bits
                    let size = 1u64 << n;
                    for code in 0..size.pow(size as u32) {
                        let t = (0..size).map(|x| code / size.pow(x as u32) % size).collect();
                        tables.push(FunctionTable::new(n, n, t)?);
                    }
                } else {
                    tables.extend((0..8).map(|_| random_table(n, n, rng)));
                }
                for f in &tables {
                    let layout = RegisterLayout::new([("X", n), ("F", n)])?;
                    let zero = qstate::make_basis_state(&layout, &[])?;
                    let t2 = crate::gates::oracle_xor(crate::gates::hadamard_all(zero, "X")?, f, "X", "F")?;
                    for f_bar in f.table().iter().copied().collect::<std::collections::BTreeSet<_>>() {
                        let post = measure::project(&t2, &ProjectionOperator::new("F", f_bar))?;
                        let got = measure::outcome_distribution(&post, "X")?.support(0.0);
                        let want: Vec<u64> = (0..1u64 << n).filter(|&x| f.eval(x) == f_bar).collect();
                        if got != want {
                            return Ok((
                                false,
                                format!("n={n} f={:?} f_bar={f_bar}: {got:?} != {want:?}", f.table()),
                            ));
                        }
                        let w = 1.0 / want.len() as f64;
                        let dist = measure::outcome_distribution(&post, "X")?;
                        if want.iter().any(|&x| (dist.prob(x) - w).abs() > STATE_TOL) {
                            return Ok((false, format!("n={n} f_bar={f_bar}: weights not uniform")));
                        }
                        cases += 1;
                    }
                }
            }
            Ok((true, format!("{cases} (f, f_bar) pairs")))
        })(),
    ));
    out.push(Check::from_result(
        "sequential measurement matches joint distribution",
        (|| {
            let layout = RegisterLayout::new([("X", 2), ("F", 2)])?;
            let s = random_state(&layout, rng);
            let a = measure::sequential_distribution(&s, &["X", "F"])?;
            let b = measure::joint_distribution(&s, &["X", "F"])?;
            let d = a.total_variation(&b)?.value;
            Ok((d < STATE_TOL, format!("TV {d:.3e}")))
        })(),
    ));
    out
}

/// A two-function program: `f` into `F`, measure `F`, `g` into `G`, measure
/// `G`, transform `X`, measure `X`.
fn two_oracle_program(n: usize, f: FunctionTable, g: FunctionTable) -> Result<CircuitProgram> {
    let layout = RegisterLayout::new([("X", n), ("F", f.output_bits()), ("G", g.output_bits())])?;
    Ok(CircuitProgram::new(
        layout,
        vec![
            Instruction::prepare("X", Preparation::Uniform),
            Instruction::gate(Gate::OracleXor {
                input: "X".into(),
                output: "F".into(),
                table: f,
            }),
            Instruction::measure("F"),
            Instruction::gate(Gate::OracleXor {
                input: "X".into(),
                output: "G".into(),
                table: g,
            }),
            Instruction::measure("G"),
            Instruction::gate(Gate::Qft { reg: "X".into() }),
            Instruction::measure("X"),
        ],
    ))
}

fn circuit_suite(rng: &mut SimRng) -> Vec<Check> {
    let mut out = Vec::new();
    out.push(Check::from_result(
        "deferral soundness",
        (|| {
            let mut worst = 0.0f64;
            let mut programs = 0;
            for n in 1..=5usize {
                for _ in 0..6 {
                    let inst_f = random_table(n, n, rng);
                    let inst = shor::build_periodic(n, rng.random_range(1..=1u64 << n))?;
                    let fig1 = {
                        let p = shor::fig1_program(&inst, true)?;
                        let mut ins = p.instructions.clone();
                        if let Instruction::Gate(Gate::OracleXor { table, .. }) = &mut ins[3] {
                            *table = inst_f.clone();
                        }
                        CircuitProgram::new(p.layout.clone(), ins)
                    };
                    let b1 = rng.random_range(1..=2usize);
                    let b2 = rng.random_range(1..=2usize);
                    let two = two_oracle_program(n, random_table(n, b1, rng), random_table(n, b2, rng))?;
                    for p in [fig1, two] {
                        let deferred = circuit::defer_measurements(&p)?;
                        let observed: Vec<&str> = p.layout.names();
                        let d = circuit::equivalent_distributions(&p, &deferred, &observed)?.value;
                        worst = worst.max(d);
                        programs += 1;
                    }
                }
            }
            Ok((worst < STATE_TOL, format!("{programs} programs, max TV {worst:.3e}")))
        })(),
    ));
    out.push(Check::from_result(
        "backdating soundness",
        (|| {
            let mut worst = 0.0f64;
            let mut outcomes = 0;
            for n in 1..=5usize {
                for r in 1..=1u64 << n {
                    let inst = shor::build_periodic(n, r)?;
                    let p = shor::fig1_program(&inst, false)?;
                    let t2 = shor::t2_state(&inst)?;
                    let dist = measure::outcome_distribution(&t2, "F")?;
                    for f_bar in dist.support(STATE_TOL) {
                        let back = circuit::backdate_outcome(&p, "F", f_bar)?;
                        let direct = measure::project(&t2, &ProjectionOperator::new("F", f_bar))?;
                        worst = worst.max(qstate::compare_up_to_global_phase(&back, &direct)?.value);
                        outcomes += 1;
                    }
                }
            }
            Ok((
                worst < STATE_TOL,
                format!("{outcomes} outcomes, max distance {worst:.3e}"),
            ))
        })(),
    ));
    out.push(Check::from_result(
        "seeded runs are reproducible",
        (|| {
            let p = shor::fig1_program(&shor::build_periodic(3, 4)?, true)?;
            let seed = rng.random::<u64>();
            let a = circuit::run(&p, &mut rng_from_seed(seed))?;
            let b = circuit::run(&p, &mut rng_from_seed(seed))?;
            Ok((a == b, format!("seed {seed}")))
        })(),
    ));
    out
}

/// Euler's totient by counting coprime residues.
fn totient(r: u64) -> u64 {
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    (1..=r).filter(|&j| gcd(j, r) == 1).count() as u64
}

fn shor_suite() -> Vec<Check> {
    let mut out = Vec::new();
    let dividing = |max_n: usize| (1..=max_n).flat_map(|n| (0..=n).map(move |e| (n, 1u64 << e)));
    out.push(Check::from_result(
        "discipline equivalence",
        (|| {
            let mut worst = 0.0f64;
            for (n, r) in dividing(5) {
                let inst = shor::build_periodic(n, r)?;
                let base = shor::exact_x_distribution(&inst, Discipline::SkipF)?;
                for d in [Discipline::MeasureF, Discipline::AnnihilateF] {
                    worst = worst.max(base.total_variation(&shor::exact_x_distribution(&inst, d)?)?.value);
                }
            }
            Ok((worst < STATE_TOL, format!("max TV {worst:.3e}")))
        })(),
    ));
    out.push(Check::from_result(
        "support law",
        (|| {
            for (n, r) in dividing(5) {
                let inst = shor::build_periodic(n, r)?;
                let dist = shor::exact_x_distribution(&inst, Discipline::SkipF)?;
                let step = (1u64 << n) / r;
                for c in 0..1u64 << n {
                    let want = if c % step == 0 { 1.0 / r as f64 } else { 0.0 };
                    if (dist.prob(c) - want).abs() > STATE_TOL {
                        return Ok((false, format!("n={n} r={r} c={c}: {} != {want}", dist.prob(c))));
                    }
                }
            }
            Ok((true, "all r | N for n <= 5".into()))
        })(),
    ));
    out.push(Check::from_result(
        "success probability is phi(r)/r",
        (|| {
            let mut worst = 0.0f64;
            for (n, r) in dividing(5).filter(|&(_, r)| r >= 2) {
                let p = shor::single_run_success_probability(&shor::build_periodic(n, r)?)?;
                worst = worst.max((p - totient(r) as f64 / r as f64).abs());
            }
            Ok((worst < 1e-12, format!("max deviation {worst:.3e}")))
        })(),
    ));
    out
}

fn grover_suite(rng: &mut SimRng) -> Vec<Check> {
    let mut out = Vec::new();
    out.push(Check::from_result(
        "four-drawer search is exact",
        (|| {
            let mut worst = 0.0f64;
            for k in 0..4 {
                let (_, t) = grover::run_standard_grover(&GameInstance::new(4, k)?, rng)?;
                worst = worst.max((1.0 - t.success_probability.unwrap_or(0.0)).abs());
                if t.answered_x != k {
                    return Ok((false, format!("k={k} answered {}", t.answered_x)));
                }
            }
            Ok((worst < STATE_TOL, format!("max 1 - P(k) = {worst:.3e}")))
        })(),
    ));
    out.push(Check::from_result(
        "joint determination",
        (|| {
            for _ in 0..20 {
                let phases: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
                for order in [MeasureOrder::KFirst, MeasureOrder::XFirst] {
                    let d = grover::extended_joint_distribution(4, &phases, order)?;
                    for k in 0..4 {
                        for x in 0..4 {
                            let want = if k == x { 0.25 } else { 0.0 };
                            if (d.prob_of(&[k, x]) - want).abs() > STATE_TOL {
                                return Ok((false, format!("P({k},{x}) = {}", d.prob_of(&[k, x]))));
                            }
                        }
                    }
                }
            }
            Ok((true, "20 phase draws, both orders".into()))
        })(),
    ));
    out.push(Check::from_result(
        "random phases mimic a uniform mixture",
        grover::mixture_equivalence_check(4, PhaseAverage::Analytic)
            .map(|d| (d.value < STATE_TOL, format!("{:.3e}", d.value))),
    ));
    out.push(Check::from_result(
        "query counts",
        (|| {
            for n in [4u64, 16, 64, 256] {
                let side = (n as f64).sqrt() as u64;
                let joint = grover::classical_worst_case(n, Strategy::Joint)?;
                let alone = grover::classical_worst_case(n, Strategy::Unilateral)?;
                let quantum = crate::gates::grover_iterations(n) as u64;
                let want_q = ((std::f64::consts::FRAC_PI_4) * side as f64).floor() as u64;
                if joint != side || alone != n || quantum != want_q {
                    return Ok((
                        false,
                        format!("n={n}: joint {joint}, unilateral {alone}, quantum {quantum}"),
                    ));
                }
            }
            Ok((true, "n in {4, 16, 64, 256}".into()))
        })(),
    ));
    out
}

fn cost_suite() -> Vec<Check> {
    let mut out = Vec::new();
    out.push(Check::from_result(
        "stage table growth classes",
        costmodel::stage_table(&(2..=10).collect::<Vec<_>>()).map(|t| {
            let failed: Vec<_> = t
                .growth_checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.description.clone())
                .collect();
            (
                failed.is_empty(),
                if failed.is_empty() {
                    format!("{} checks", t.growth_checks.len())
                } else {
                    failed.join("; ")
                },
            )
        }),
    ));
    out.push(Check::from_result(
        "exact counts",
        (|| {
            for n in 1..=10usize {
                let inst = shor::build_periodic(n, 1 << n)?;
                let nn = n as u64;
                let ok = costmodel::classical_symbolic_cost(&inst, Stage::FunctionEvaluation) == 1 << n
                    && costmodel::classical_symbolic_cost(&inst, Stage::Filtration) == 1 << n
                    && costmodel::quantum_step_cost(&inst, Stage::Filtration) == nn
                    && costmodel::quantum_step_cost(&inst, Stage::Extraction) == nn * (nn + 1) / 2 + nn;
                if !ok {
                    return Ok((false, format!("n={n}")));
                }
            }
            Ok((true, "n in 1..=10".into()))
        })(),
    ));
    out.push(Check::from_result(
        "filtration cost ignores entanglement",
        (|| {
            for n in 1..=8usize {
                for r in 1..=1u64 << n {
                    if costmodel::quantum_step_cost(&shor::build_periodic(n, r)?, Stage::Filtration) != n as u64 {
                        return Ok((false, format!("n={n} r={r}")));
                    }
                }
            }
            Ok((true, "every r for n <= 8".into()))
        })(),
    ));
    out
}

fn mixture_suite(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    let phi: f64 = 0.6;
    let target = DensityMatrix::diagonal(&[phi.sin().powi(2), phi.cos().powi(2)]);
    let m = measure::two_state_mixture(phi);
    out.push(Check::from_result(
        "two-state analytic average",
        measure::analytic_density(&m)
            .and_then(|rho| rho.frobenius_distance(&target))
            .map(|d| (d.value < STATE_TOL, format!("{:.3e}", d.value))),
    ));
    out.push(Check::from_result(
        "two-state Monte Carlo average",
        measure::average_density_parallel(&m, 100_000, seed, grover::MIXTURE_WORKERS)
            .and_then(|rho| rho.frobenius_distance(&target))
            .map(|d| (d.value < 5e-3, format!("{:.3e} at 1e5 samples", d.value))),
    ));
    out.push(Check::from_result(
        "t2 mixture equals partial trace",
        (|| {
            let mut worst = 0.0f64;
            for n in 1..=5usize {
                for r in 1..=1u64 << n {
                    let t2 = shor::t2_state(&shor::build_periodic(n, r)?)?;
                    let m = measure::phased_mixture_from_state(&t2, "F")?;
                    let d = measure::analytic_density(&m)?.frobenius_distance(&measure::partial_trace(&t2, &["X"])?)?;
                    worst = worst.max(d.value);
                }
            }
            Ok((worst < STATE_TOL, format!("max distance {worst:.3e}")))
        })(),
    ));
    out.push(Check::from_result(
        "averaged densities are valid",
        (|| {
            let m = measure::phased_mixture_from_state(&shor::t2_state(&shor::build_periodic(3, 3)?)?, "F")?;
            measure::analytic_density(&m)?.validate()?;
            measure::average_density_parallel(&m, 1000, seed, grover::MIXTURE_WORKERS)?.validate()?;
            Ok((true, "trace 1, Hermitian, PSD".into()))
        })(),
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes() {
        for (suite, checks) in run_suites(&Suite::ALL, 2024) {
            for c in checks {
                assert!(c.passed, "{suite}: {} ({})", c.name, c.detail);
            }
        }
    }

    #[test]
    fn chi_square_pools_rare_bins() {
        let (stat, df, hit) = chi_square(&[0.5, 0.4999, 0.0001, 0.0], &[50, 50, 0, 0], 100);
        assert_eq!(df, 1);
        assert!(!hit && stat < 1e-3);
        let (_, _, hit) = chi_square(&[1.0, 0.0], &[9, 1], 10);
        assert!(hit);
    }

    #[test]
    fn totient_values() {
        assert_eq!([1, 2, 4, 8, 16].map(totient), [1, 1, 2, 4, 8]);
    }
}
