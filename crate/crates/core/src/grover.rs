//! The drawer game: a hidden drawer `k` among `n`, found by Grover search, by
//! the K-extended circuit where `k` itself is a quantum register, or by
//! classical row/column search.
//!
//! Drawer numbers are binary with the high half of the bits naming the row of
//! the square chest and the low half the column.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{self, CircuitProgram, Gate, Instruction, Preparation};
use crate::error::{Error, Result};
use crate::gates::{self, FunctionTable, ModedFunctionTable};
use crate::measure::{self, DensityMatrix, OutcomeDistribution, PhaseBinding, PhaseSlot, PhasedMixture};
use crate::qstate::{PureState, RegisterLayout, StateDistance};

/// Largest drawer count simulated by the quantum variants.
pub const MAX_QUANTUM_DRAWERS: u64 = 1 << 10;

/// Tag on the boundary right before the final measurements.
pub const PRE_MEASURE: &str = "pre-measure";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameInstance {
    pub drawers: u64,
    pub k: u64,
}

impl GameInstance {
    pub fn new(drawers: u64, k: u64) -> Result<Self> {
        if drawers == 0 {
            return Err(Error::Usage("the chest needs at least one drawer".into()));
        }
        if k >= drawers {
            return Err(Error::Usage(format!("drawer {k} is outside 0..{drawers}")));
        }
        Ok(GameInstance { drawers, k })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    StandardGrover,
    ExtendedGrover,
    Joint,
    Unilateral,
}

impl Protocol {
    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::StandardGrover => "standard-grover",
            Protocol::ExtendedGrover => "extended-grover",
            Protocol::Joint => "joint",
            Protocol::Unilateral => "unilateral",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classical search strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// The hider announces the row; the seeker scans its columns.
    Joint,
    /// The seeker scans every drawer alone.
    Unilateral,
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(Strategy::Joint),
            "unilateral" => Ok(Strategy::Unilateral),
            other => Err(Error::Usage(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameTranscript {
    pub protocol: Protocol,
    pub drawers: u64,
    /// The hider's drawer (the measured `K` value in the extended circuit).
    pub announced_k: u64,
    /// The seeker's answer.
    pub answered_x: u64,
    pub oracle_queries: u64,
    /// Row announced by the hider in the joint classical game.
    pub announced_row: Option<u64>,
    /// Exact probability that the seeker answers `k`, for quantum runs.
    pub success_probability: Option<f64>,
    /// Queries a deterministic classical search needs before the answer is forced.
    pub classical_worst_case: Option<u64>,
}

fn qubits_for(drawers: u64) -> Result<usize> {
    if drawers < 2 || !drawers.is_power_of_two() || drawers > MAX_QUANTUM_DRAWERS {
        return Err(Error::Usage(format!(
            "the quantum game needs a power of two between 2 and {MAX_QUANTUM_DRAWERS} drawers, got {drawers}"
        )));
    }
    Ok(drawers.trailing_zeros() as usize)
}

/// Standard search: `X` starts at 0, `F` in `(|0⟩ − |1⟩)/√2`, Hadamards on
/// `X`, then the Grover iterations for `k` and a measurement of `X`.
pub fn standard_program(inst: &GameInstance) -> Result<CircuitProgram> {
    let m = qubits_for(inst.drawers)?;
    let layout = RegisterLayout::new([("X", m), ("F", 1)])?;
    let table = FunctionTable::indicator(m, inst.k)?;
    let mut ins = vec![
        Instruction::prepare("X", Preparation::Basis(0)),
        Instruction::prepare("F", Preparation::Minus),
        Instruction::gate(Gate::Hadamard { reg: "X".into() }),
    ];
    for _ in 0..gates::grover_iterations(inst.drawers) {
        ins.push(Instruction::gate(Gate::OracleXor {
            input: "X".into(),
            output: "F".into(),
            table: table.clone(),
        }));
        ins.push(Instruction::gate(Gate::GroverDiffusion { reg: "X".into() }));
    }
    let pre = ins.len();
    ins.push(Instruction::measure("X"));
    Ok(CircuitProgram::new(layout, ins).with_tag(PRE_MEASURE, pre))
}

pub fn run_standard_grover<R: Rng + ?Sized>(inst: &GameInstance, rng: &mut R) -> Result<(PureState, GameTranscript)> {
    let program = standard_program(inst)?;
    let trace = circuit::run(&program, rng)?;
    let pre = trace.at_tag(PRE_MEASURE).expect("tag is inside the program").clone();
    let exact = circuit::exact_distribution(&program, &["X"])?;
    Ok((
        pre,
        GameTranscript {
            protocol: Protocol::StandardGrover,
            drawers: inst.drawers,
            announced_k: inst.k,
            answered_x: trace.outcome("X").expect("X is measured"),
            oracle_queries: gates::grover_iterations(inst.drawers) as u64,
            announced_row: None,
            success_probability: Some(exact.prob(inst.k)),
            classical_worst_case: Some(inst.drawers - 1),
        },
    ))
}

/// Which register of the extended circuit is measured first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureOrder {
    KFirst,
    XFirst,
}

impl MeasureOrder {
    pub fn registers(&self) -> [&'static str; 2] {
        match self {
            MeasureOrder::KFirst => ["K", "X"],
            MeasureOrder::XFirst => ["X", "K"],
        }
    }
}

/// Extended search: `K` holds `(1/√n) Σ_k e^{iδ_k} |k⟩` with `δ_0 = 0`, and the
/// oracle marks `x = k` for every branch of `K` at once. `phases` are `δ_1..`.
pub fn extended_program(drawers: u64, phases: &[f64], order: MeasureOrder) -> Result<CircuitProgram> {
    let m = qubits_for(drawers)?;
    if phases.len() as u64 != drawers - 1 {
        return Err(Error::Shape(format!(
            "{} drawers need {} phases, got {}",
            drawers,
            drawers - 1,
            phases.len()
        )));
    }
    let layout = RegisterLayout::new([("K", m), ("X", m), ("F", 1)])?;
    let table = ModedFunctionTable::kronecker_delta(m)?;
    let k_phases: Vec<f64> = std::iter::once(0.0).chain(phases.iter().copied()).collect();
    let mut ins = vec![
        Instruction::prepare("K", Preparation::Phased(k_phases)),
        Instruction::prepare("X", Preparation::Basis(0)),
        Instruction::prepare("F", Preparation::Minus),
        Instruction::gate(Gate::Hadamard { reg: "X".into() }),
    ];
    for _ in 0..gates::grover_iterations(drawers) {
        ins.push(Instruction::gate(Gate::OracleModed {
            mode: "K".into(),
            input: "X".into(),
            output: "F".into(),
            table: table.clone(),
        }));
        ins.push(Instruction::gate(Gate::GroverDiffusion { reg: "X".into() }));
    }
    let pre = ins.len();
    for reg in order.registers() {
        ins.push(Instruction::measure(reg));
    }
    Ok(CircuitProgram::new(layout, ins).with_tag(PRE_MEASURE, pre))
}

/// `δ_1..δ_{n-1}`, uniform on `[0, 2π)`.
pub fn sample_extended_phases<R: Rng + ?Sized>(drawers: u64, rng: &mut R) -> Result<Vec<f64>> {
    qubits_for(drawers)?;
    Ok((1..drawers).map(|_| rng.random_range(0.0..2.0 * PI)).collect())
}

/// Extended game with freshly drawn phases.
pub fn run_extended_grover<R: Rng + ?Sized>(drawers: u64, rng: &mut R) -> Result<(PureState, GameTranscript)> {
    let phases = sample_extended_phases(drawers, rng)?;
    run_extended_grover_with_phases(drawers, &phases, MeasureOrder::KFirst, rng)
}

pub fn run_extended_grover_with_phases<R: Rng + ?Sized>(
    drawers: u64,
    phases: &[f64],
    order: MeasureOrder,
    rng: &mut R,
) -> Result<(PureState, GameTranscript)> {
    let program = extended_program(drawers, phases, order)?;
    let trace = circuit::run(&program, rng)?;
    let pre = trace.at_tag(PRE_MEASURE).expect("tag is inside the program").clone();
    let joint = circuit::exact_distribution(&program, &["K", "X"])?;
    let agree: f64 = (0..drawers).map(|k| joint.prob_of(&[k, k])).sum();
    Ok((
        pre,
        GameTranscript {
            protocol: Protocol::ExtendedGrover,
            drawers,
            announced_k: trace.outcome("K").expect("K is measured"),
            answered_x: trace.outcome("X").expect("X is measured"),
            oracle_queries: gates::grover_iterations(drawers) as u64,
            announced_row: None,
            success_probability: Some(agree),
            classical_worst_case: Some(drawers - 1),
        },
    ))
}

/// Exact joint `(K, X)` distribution of the extended game, measuring in `order`.
pub fn extended_joint_distribution(drawers: u64, phases: &[f64], order: MeasureOrder) -> Result<OutcomeDistribution> {
    circuit::exact_distribution(&extended_program(drawers, phases, order)?, &["K", "X"])
}

/// The `K` preparation as a random-phase mixture. With `correlated` every
/// non-reference term shares one phase instead of drawing its own.
pub fn k_preparation_mixture(drawers: u64, correlated: bool) -> Result<PhasedMixture> {
    let m = qubits_for(drawers)?;
    let layout = RegisterLayout::new([("K", m)])?;
    let amp = Complex64::new(1.0 / (drawers as f64).sqrt(), 0.0);
    let slots = (0..drawers)
        .map(|k| {
            let mut amplitudes = vec![Complex64::new(0.0, 0.0); drawers as usize];
            amplitudes[k as usize] = amp;
            let binding = match (k, correlated) {
                (0, _) => PhaseBinding::Fixed,
                (_, true) => PhaseBinding::Variable(0),
                (_, false) => PhaseBinding::Variable(k as usize - 1),
            };
            PhaseSlot {
                label: k,
                binding,
                amplitudes,
            }
        })
        .collect();
    PhasedMixture::new(layout, slots)
}

/// How the phase average of the `K` preparation is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseAverage {
    Analytic,
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
    /// Analytic average with all phases forced equal.
    Correlated,
}

/// Worker count for sampled averages. Fixed so that results only depend on the seed.
pub const MIXTURE_WORKERS: usize = 4;

/// Frobenius distance between the averaged `K` density matrix and the uniform
/// classical mixture over drawers.
pub fn mixture_equivalence_check(drawers: u64, average: PhaseAverage) -> Result<StateDistance> {
    let rho = match average {
        PhaseAverage::Analytic => measure::analytic_density(&k_preparation_mixture(drawers, false)?)?,
        PhaseAverage::Correlated => measure::analytic_density(&k_preparation_mixture(drawers, true)?)?,
        PhaseAverage::MonteCarlo { samples, seed } => {
            measure::average_density_parallel(&k_preparation_mixture(drawers, false)?, samples, seed, MIXTURE_WORKERS)?
        }
    };
    let uniform = DensityMatrix::diagonal(&vec![1.0 / drawers as f64; drawers as usize]);
    rho.frobenius_distance(&uniform)
}

fn square_side(drawers: u64) -> Option<u64> {
    let side = (drawers as f64).sqrt().round() as u64;
    (side * side == drawers).then_some(side)
}

/// Classical search. The joint strategy needs a square chest.
pub fn run_classical_game(inst: &GameInstance, strategy: Strategy) -> Result<GameTranscript> {
    let (row, first, step_count) = match strategy {
        Strategy::Joint => {
            let side = square_side(inst.drawers).ok_or_else(|| {
                Error::Usage(format!(
                    "the joint game needs a square number of drawers, got {}",
                    inst.drawers
                ))
            })?;
            let row = inst.k / side;
            (Some(row), row * side, side)
        }
        Strategy::Unilateral => (None, 0, inst.drawers),
    };
    let mut queries = 0;
    let mut answer = None;
    for drawer in first..first + step_count {
        queries += 1;
        if drawer == inst.k {
            answer = Some(drawer);
            break;
        }
    }
    Ok(GameTranscript {
        protocol: match strategy {
            Strategy::Joint => Protocol::Joint,
            Strategy::Unilateral => Protocol::Unilateral,
        },
        drawers: inst.drawers,
        announced_k: inst.k,
        answered_x: answer.expect("the searched drawers contain k"),
        oracle_queries: queries,
        announced_row: row,
        success_probability: None,
        classical_worst_case: None,
    })
}

/// Largest query count of a classical strategy over every hiding place.
pub fn classical_worst_case(drawers: u64, strategy: Strategy) -> Result<u64> {
    let mut worst = 0;
    for k in 0..drawers {
        worst = worst.max(run_classical_game(&GameInstance::new(drawers, k)?, strategy)?.oracle_queries);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{compare_up_to_global_phase, state_from_terms};
    use crate::rng_from_seed;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn expected_standard(k: u64) -> PureState {
        let layout = RegisterLayout::new([("X", 2), ("F", 1)]).unwrap();
        state_from_terms(
            &layout,
            &[
                (vec![("X", k), ("F", 0)], c(FRAC_1_SQRT_2)),
                (vec![("X", k), ("F", 1)], c(-FRAC_1_SQRT_2)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn four_drawer_table() {
        for k in 0..4 {
            let inst = GameInstance::new(4, k).unwrap();
            let (pre, t) = run_standard_grover(&inst, &mut rng_from_seed(k)).unwrap();
            assert!(compare_up_to_global_phase(&pre, &expected_standard(k)).unwrap().value < 1e-10);
            assert_eq!(t.answered_x, k);
            assert_eq!(t.oracle_queries, 1);
            assert!((t.success_probability.unwrap() - 1.0).abs() < 1e-12);
            assert_eq!(t.classical_worst_case, Some(3));
        }
    }

    #[test]
    fn f_factor_survives() {
        let (pre, _) = run_standard_grover(&GameInstance::new(16, 9).unwrap(), &mut rng_from_seed(0)).unwrap();
        let f = pre.register_factor("F").unwrap().expect("F stays a product factor");
        let minus = [c(FRAC_1_SQRT_2), c(-FRAC_1_SQRT_2)];
        let overlap: Complex64 = f.amplitudes().iter().zip(&minus).map(|(a, b)| a.conj() * b).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sixteen_drawers() {
        for k in 0..16 {
            let (_, t) = run_standard_grover(&GameInstance::new(16, k).unwrap(), &mut rng_from_seed(3)).unwrap();
            assert_eq!(t.oracle_queries, 3);
            assert!(t.success_probability.unwrap() >= 0.9);
        }
    }

    #[test]
    fn extended_zero_phases() {
        let layout = RegisterLayout::new([("K", 2), ("X", 2), ("F", 1)]).unwrap();
        let a = 1.0 / (2.0 * 2f64.sqrt());
        let terms: Vec<_> = (0..4)
            .flat_map(|k| {
                [
                    (vec![("K", k), ("X", k), ("F", 0)], c(a)),
                    (vec![("K", k), ("X", k), ("F", 1)], c(-a)),
                ]
            })
            .collect();
        let expected = state_from_terms(&layout, &terms).unwrap();
        let (pre, t) =
            run_extended_grover_with_phases(4, &[0.0; 3], MeasureOrder::KFirst, &mut rng_from_seed(1)).unwrap();
        assert!(pre.max_abs_diff(&expected).unwrap() < 1e-10);
        assert_eq!(t.announced_k, t.answered_x);
    }

    #[test]
    fn extended_keeps_sampled_phases() {
        let phases = [0.3, 2.0, 4.4];
        let prog = extended_program(4, &phases, MeasureOrder::KFirst).unwrap();
        let pre = circuit::unitary_state_at(&prog, PRE_MEASURE).unwrap();
        let layout = pre.layout().clone();
        for k in 0..4u64 {
            let delta = if k == 0 { 0.0 } else { phases[k as usize - 1] };
            let idx = layout.encode(&[("K", k), ("X", k), ("F", 0)]).unwrap();
            let expected = Complex64::from_polar(1.0 / (2.0 * 2f64.sqrt()), delta);
            assert!((pre.amplitude(idx) - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn joint_determination_both_orders() {
        let mut rng = rng_from_seed(11);
        for _ in 0..10 {
            let phases: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            for order in [MeasureOrder::KFirst, MeasureOrder::XFirst] {
                let d = extended_joint_distribution(4, &phases, order).unwrap();
                for k in 0..4 {
                    for x in 0..4 {
                        let expected = if k == x { 0.25 } else { 0.0 };
                        assert!((d.prob_of(&[k, x]) - expected).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn mixture_indistinguishable() {
        assert!(mixture_equivalence_check(4, PhaseAverage::Analytic).unwrap().value < 1e-10);
        let mc = PhaseAverage::MonteCarlo {
            samples: 100_000,
            seed: 4,
        };
        assert!(mixture_equivalence_check(4, mc).unwrap().value < 5e-3);
        // six off-diagonal entries of 1/4 survive: sqrt(6)/4
        let corr = mixture_equivalence_check(4, PhaseAverage::Correlated).unwrap().value;
        assert!((corr - 6f64.sqrt() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn classical_worked_example() {
        let t = run_classical_game(&GameInstance::new(4, 0b10).unwrap(), Strategy::Joint).unwrap();
        assert_eq!(t.announced_row, Some(1));
        assert_eq!(t.answered_x, 0b10);
        assert!(t.oracle_queries <= 2);
    }

    #[test]
    fn classical_worst_cases() {
        for n in [4u64, 16, 64, 256] {
            let side = (n as f64).sqrt() as u64;
            assert_eq!(classical_worst_case(n, Strategy::Joint).unwrap(), side);
            assert_eq!(classical_worst_case(n, Strategy::Unilateral).unwrap(), n);
        }
        let err = run_classical_game(&GameInstance::new(8, 3).unwrap(), Strategy::Joint).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
    }

    #[test]
    fn quantum_needs_power_of_two() {
        assert!(run_standard_grover(&GameInstance::new(6, 1).unwrap(), &mut rng_from_seed(0)).is_err());
        assert!(GameInstance::new(4, 4).is_err());
    }
}
