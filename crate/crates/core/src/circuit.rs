//! Linear circuit programs and measurement rewrites.
//!
//! A program is a preparation prefix followed by gates and measurements.
//! Measured registers are frozen: no later gate may touch them. Under that
//! rule an intermediate measurement commutes with everything after it, which
//! is what [`defer_measurements`] exploits and [`equivalent_distributions`]
//! checks by exact branch enumeration.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{self, FunctionTable, ModedFunctionTable};
use crate::measure::{self, Measurement, OutcomeDistribution, ProjectionOperator};
use crate::qstate::{normalize, PureState, RegisterLayout, StateDistance};

/// Initial content of a register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preparation {
    Basis(u64),
    /// Equal-weight superposition of every value.
    Uniform,
    /// `(|0⟩ − |1⟩)/√2`.
    Minus,
    /// `(1/√N) Σ_v e^{iφ_v} |v⟩` with one phase per value.
    Phased(Vec<f64>),
}

impl Preparation {
    fn amplitudes(&self, reg: &str, qubits: usize) -> Result<Vec<(usize, Complex64)>> {
        let dim = 1usize << qubits;
        match self {
            Preparation::Basis(v) => {
                if *v >= dim as u64 {
                    return Err(Error::Range {
                        reg: reg.to_string(),
                        value: *v,
                        qubits,
                    });
                }
                Ok(vec![(*v as usize, Complex64::new(1.0, 0.0))])
            }
            Preparation::Uniform => {
                let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
                Ok((0..dim).map(|v| (v, a)).collect())
            }
            Preparation::Minus => Ok(vec![
                (0, Complex64::new(FRAC_1_SQRT_2, 0.0)),
                (1, Complex64::new(-FRAC_1_SQRT_2, 0.0)),
            ]),
            Preparation::Phased(phases) => {
                if phases.len() != dim {
                    return Err(Error::Shape(format!(
                        "register {reg} needs {dim} phases, got {}",
                        phases.len()
                    )));
                }
                let r = 1.0 / (dim as f64).sqrt();
                Ok(phases
                    .iter()
                    .enumerate()
                    .map(|(v, phi)| (v, Complex64::from_polar(r, *phi)))
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Gate {
    Hadamard {
        reg: String,
    },
    Qft {
        reg: String,
    },
    InverseQft {
        reg: String,
    },
    OracleXor {
        input: String,
        output: String,
        table: FunctionTable,
    },
    OracleModed {
        mode: String,
        input: String,
        output: String,
        table: ModedFunctionTable,
    },
    GroverDiffusion {
        reg: String,
    },
}

impl Gate {
    pub fn registers(&self) -> Vec<&str> {
        match self {
            Gate::Hadamard { reg } | Gate::Qft { reg } | Gate::InverseQft { reg } | Gate::GroverDiffusion { reg } => {
                vec![reg]
            }
            Gate::OracleXor { input, output, .. } => vec![input, output],
            Gate::OracleModed {
                mode, input, output, ..
            } => vec![mode, input, output],
        }
    }

    pub fn inverse(&self) -> Gate {
        match self {
            Gate::Qft { reg } => Gate::InverseQft { reg: reg.clone() },
            Gate::InverseQft { reg } => Gate::Qft { reg: reg.clone() },
            // the rest are involutions
            other => other.clone(),
        }
    }

    pub fn apply(&self, state: PureState) -> Result<PureState> {
        match self {
            Gate::Hadamard { reg } => gates::hadamard_all(state, reg),
            Gate::Qft { reg } => gates::qft(state, reg, false),
            Gate::InverseQft { reg } => gates::qft(state, reg, true),
            Gate::OracleXor { input, output, table } => gates::oracle_xor(state, table, input, output),
            Gate::OracleModed {
                mode,
                input,
                output,
                table,
            } => gates::oracle_moded(state, table, mode, input, output),
            Gate::GroverDiffusion { reg } => gates::grover_diffusion(state, reg),
        }
    }

    fn check_shape(&self, layout: &RegisterLayout) -> Result<()> {
        let regs = self.registers();
        for (i, r) in regs.iter().enumerate() {
            layout.register(r)?;
            if regs[..i].contains(r) {
                return Err(Error::Program(format!("register {r} used twice by one gate")));
            }
        }
        let width = |r: &str| layout.register(r).map(|r| r.qubits);
        let mismatch = |what: &str| Error::Program(format!("{what} width does not match its register"));
        match self {
            Gate::OracleXor { input, output, table } => {
                if width(input)? != table.input_bits() || width(output)? != table.output_bits() {
                    return Err(mismatch("oracle table"));
                }
            }
            Gate::OracleModed {
                mode,
                input,
                output,
                table,
            } if (width(mode)? != table.mode_bits()
                || width(input)? != table.input_bits()
                || width(output)? != table.output_bits()) =>
            {
                return Err(mismatch("moded oracle table"));
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Instruction {
    Prepare { reg: String, state: Preparation },
    Gate(Gate),
    Measure { reg: String },
}

impl Instruction {
    pub fn gate(g: Gate) -> Self {
        Instruction::Gate(g)
    }

    pub fn measure(reg: &str) -> Self {
        Instruction::Measure { reg: reg.to_string() }
    }

    pub fn prepare(reg: &str, state: Preparation) -> Self {
        Instruction::Prepare {
            reg: reg.to_string(),
            state,
        }
    }

    fn is_measure(&self) -> bool {
        matches!(self, Instruction::Measure { .. })
    }
}

/// A circuit over a fixed register layout.
///
/// `time_tags` maps a label to an instruction boundary: tag `t` at `b` names
/// the state after the first `b` instructions. Tags are annotations only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitProgram {
    pub layout: RegisterLayout,
    pub instructions: Vec<Instruction>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub time_tags: BTreeMap<String, usize>,
}

impl CircuitProgram {
    pub fn new(layout: RegisterLayout, instructions: Vec<Instruction>) -> Self {
        CircuitProgram {
            layout,
            instructions,
            time_tags: BTreeMap::new(),
        }
    }

    pub fn with_tag(mut self, tag: &str, boundary: usize) -> Self {
        self.time_tags.insert(tag.to_string(), boundary);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Program(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("programs always serialize")
    }

    /// Structural rules: registers exist, preparations form a prefix and
    /// touch each register once, gate shapes match, tags are in range, and
    /// each register is measured at most once.
    pub fn check_structure(&self) -> Result<()> {
        let mut prepared = Vec::new();
        let mut measured = Vec::new();
        let mut in_prefix = true;
        for (i, ins) in self.instructions.iter().enumerate() {
            match ins {
                Instruction::Prepare { reg, state } => {
                    if !in_prefix {
                        return Err(Error::Program(format!(
                            "instruction {i}: preparation of {reg} after the preparation prefix"
                        )));
                    }
                    let r = self.layout.register(reg)?;
                    if prepared.contains(reg) {
                        return Err(Error::Program(format!("register {reg} prepared twice")));
                    }
                    state.amplitudes(reg, r.qubits)?;
                    prepared.push(reg.clone());
                }
                Instruction::Gate(g) => {
                    in_prefix = false;
                    g.check_shape(&self.layout)?;
                }
                Instruction::Measure { reg } => {
                    in_prefix = false;
                    self.layout.register(reg)?;
                    if measured.contains(reg) {
                        return Err(Error::Program(format!("register {reg} measured twice")));
                    }
                    measured.push(reg.clone());
                }
            }
        }
        for (tag, b) in &self.time_tags {
            if *b > self.instructions.len() {
                return Err(Error::Program(format!("time tag {tag} points past the program end")));
            }
        }
        Ok(())
    }

    /// The first gate that touches an already measured register, if any.
    fn frozen_violation(&self) -> Option<String> {
        let mut measured: Vec<&str> = Vec::new();
        for (i, ins) in self.instructions.iter().enumerate() {
            match ins {
                Instruction::Measure { reg } => measured.push(reg),
                Instruction::Gate(g) => {
                    if let Some(r) = g.registers().into_iter().find(|r| measured.contains(r)) {
                        return Some(format!("instruction {i} applies a gate to measured register {r}"));
                    }
                }
                Instruction::Prepare { .. } => {}
            }
        }
        None
    }

    /// Full well-formedness, as required by [`run`].
    pub fn validate(&self) -> Result<()> {
        self.check_structure()?;
        match self.frozen_violation() {
            Some(msg) => Err(Error::Program(msg)),
            None => Ok(()),
        }
    }

    /// The all-zero basis state of the layout.
    pub fn zero_state(&self) -> PureState {
        let mut s = PureState::zeros(self.layout.clone());
        s.amplitudes_mut()[0] = Complex64::new(1.0, 0.0);
        s
    }

    /// Keeps the instructions selected by `keep`, re-anchoring every tag on the
    /// retained instructions that precede it.
    fn retain(
        &self,
        keep: impl Fn(usize, &Instruction) -> bool,
    ) -> (Vec<Instruction>, Vec<Instruction>, BTreeMap<String, usize>) {
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        let mut new_boundary = Vec::with_capacity(self.instructions.len() + 1);
        new_boundary.push(0);
        for (i, ins) in self.instructions.iter().enumerate() {
            if keep(i, ins) {
                kept.push(ins.clone());
            } else {
                dropped.push(ins.clone());
            }
            new_boundary.push(kept.len());
        }
        let tags = self
            .time_tags
            .iter()
            .map(|(t, b)| (t.clone(), new_boundary[*b]))
            .collect();
        (kept, dropped, tags)
    }

    /// Boundary at which the trailing run of measurements starts.
    fn terminal_suffix_start(&self) -> usize {
        let mut start = self.instructions.len();
        while start > 0 && self.instructions[start - 1].is_measure() {
            start -= 1;
        }
        start
    }
}

/// Applies a preparation to a register that currently holds |0⟩.
fn prepare(state: PureState, reg: &str, prep: &Preparation) -> Result<PureState> {
    let r = state.layout().register(reg)?.clone();
    let amps = prep.amplitudes(reg, r.qubits)?;
    let mut out = PureState::zeros(state.layout().clone());
    for (i, a) in state.amplitudes().iter().enumerate() {
        if *a == Complex64::new(0.0, 0.0) {
            continue;
        }
        debug_assert_eq!(r.value(i), 0, "register prepared twice");
        for (v, b) in &amps {
            out.amplitudes_mut()[r.with_value(i, *v)] += a * b;
        }
    }
    Ok(out)
}

/// Applies the preparation and gate instructions in order; measurements are rejected.
fn apply_unitary(mut state: PureState, instructions: &[Instruction]) -> Result<PureState> {
    for ins in instructions {
        state = match ins {
            Instruction::Prepare { reg, state: prep } => prepare(state, reg, prep)?,
            Instruction::Gate(g) => g.apply(state)?,
            Instruction::Measure { reg } => {
                return Err(Error::RewriteNotApplicable(format!(
                    "segment contains a measurement of {reg}"
                )))
            }
        };
    }
    Ok(state)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub instruction: Instruction,
    /// State after the instruction.
    pub state: PureState,
    pub measurement: Option<Measurement>,
}

/// The execution record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub initial: PureState,
    pub steps: Vec<TraceStep>,
    pub time_tags: BTreeMap<String, usize>,
}

impl Trace {
    /// State after the first `boundary` instructions.
    pub fn snapshot(&self, boundary: usize) -> Option<&PureState> {
        match boundary {
            0 => Some(&self.initial),
            b => self.steps.get(b - 1).map(|s| &s.state),
        }
    }

    pub fn at_tag(&self, tag: &str) -> Option<&PureState> {
        self.time_tags.get(tag).and_then(|b| self.snapshot(*b))
    }

    pub fn final_state(&self) -> &PureState {
        self.steps.last().map(|s| &s.state).unwrap_or(&self.initial)
    }

    pub fn measurements(&self) -> impl Iterator<Item = &Measurement> {
        self.steps.iter().filter_map(|s| s.measurement.as_ref())
    }

    pub fn outcome(&self, reg: &str) -> Option<u64> {
        self.measurements().find(|m| m.register == reg).map(|m| m.outcome)
    }
}

/// Executes the program, sampling every measurement from `rng`.
pub fn run<R: Rng + ?Sized>(program: &CircuitProgram, rng: &mut R) -> Result<Trace> {
    program.validate()?;
    let initial = program.zero_state();
    let mut state = initial.clone();
    let mut steps = Vec::with_capacity(program.instructions.len());
    for ins in &program.instructions {
        let mut measurement = None;
        state = match ins {
            Instruction::Prepare { reg, state: prep } => prepare(state, reg, prep)?,
            Instruction::Gate(g) => g.apply(state)?,
            Instruction::Measure { reg } => {
                let (m, post) = measure::measure_register(&state, reg, rng)?;
                measurement = Some(m);
                post
            }
        };
        steps.push(TraceStep {
            instruction: ins.clone(),
            state: state.clone(),
            measurement,
        });
    }
    Ok(Trace {
        initial,
        steps,
        time_tags: program.time_tags.clone(),
    })
}

/// Moves every intermediate measurement to the end of the program, after the
/// existing terminal measurements and in its original relative order.
pub fn defer_measurements(program: &CircuitProgram) -> Result<CircuitProgram> {
    program.check_structure()?;
    if let Some(msg) = program.frozen_violation() {
        return Err(Error::RewriteNotApplicable(msg));
    }
    let suffix = program.terminal_suffix_start();
    let (mut kept, moved, time_tags) = program.retain(|i, ins| !(ins.is_measure() && i < suffix));
    kept.extend(moved);
    Ok(CircuitProgram {
        layout: program.layout.clone(),
        instructions: kept,
        time_tags,
    })
}

/// Exact joint distribution of `observed`, enumerating every measurement
/// branch. Observed registers that the program never measures are read from
/// the final state.
///
/// Branches carry unnormalized amplitudes, so a branch's squared amplitudes
/// are directly the joint probabilities. This keeps deferred and intermediate
/// measurements on the same floating-point footing.
pub fn exact_distribution(program: &CircuitProgram, observed: &[&str]) -> Result<OutcomeDistribution> {
    program.validate()?;
    let regs: Vec<_> = observed
        .iter()
        .map(|r| program.layout.register(r))
        .collect::<Result<_>>()?;
    let template = measure::joint_distribution(&program.zero_state(), observed)?;
    let mut probabilities = vec![0.0; template.probabilities.len()];

    let mut branches = vec![program.zero_state()];
    for ins in &program.instructions {
        let mut next = Vec::with_capacity(branches.len());
        for b in branches {
            match ins {
                Instruction::Prepare { reg, state } => next.push(prepare(b, reg, state)?),
                Instruction::Gate(g) => next.push(g.apply(b)?),
                Instruction::Measure { reg } => {
                    for v in 0..program.layout.register(reg)?.dim() as u64 {
                        let (post, p) = measure::project_unnormalized(&b, &ProjectionOperator::new(reg.as_str(), v))?;
                        if p > 0.0 {
                            next.push(post);
                        }
                    }
                }
            }
        }
        branches = next;
    }

    let mut values = vec![0u64; regs.len()];
    for b in &branches {
        for (idx, a) in b.amplitudes().iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            for (slot, r) in values.iter_mut().zip(&regs) {
                *slot = r.value(idx) as u64;
            }
            probabilities[template.join(&values) as usize] += p;
        }
    }
    Ok(OutcomeDistribution {
        probabilities,
        ..template
    })
}

/// Total-variation distance between the exact joint distributions of
/// `observed` under two programs on the same layout.
pub fn equivalent_distributions(p1: &CircuitProgram, p2: &CircuitProgram, observed: &[&str]) -> Result<StateDistance> {
    if p1.layout != p2.layout {
        return Err(Error::Shape(format!("layouts {} and {} differ", p1.layout, p2.layout)));
    }
    let d1 = exact_distribution(p1, observed)?;
    let d2 = exact_distribution(p2, observed)?;
    d1.total_variation(&d2)
}

/// Reconstructs the post-measurement state at `t2` from a measurement of
/// `reg` taken at `t4`.
///
/// Measurements of `reg` are removed; the rest of the program up to `t4` must
/// then be measurement-free. The final projection is applied at `t4` and the
/// gates between `t2` and `t4` are undone in reverse order.
///
/// Tags default to the boundary before the first measurement of `reg` (`t2`)
/// and the start of the trailing measurements (`t4`).
pub fn backdate_outcome(program: &CircuitProgram, reg: &str, value: u64) -> Result<PureState> {
    program.check_structure()?;
    program.layout.register(reg)?;
    let first_measure = program
        .instructions
        .iter()
        .position(|ins| matches!(ins, Instruction::Measure { reg: r } if r == reg));
    let mut tagged = program.clone();
    if !tagged.time_tags.contains_key("t2") {
        let b = first_measure
            .ok_or_else(|| Error::Program(format!("no t2 tag and no measurement of {reg} to anchor one")))?;
        tagged.time_tags.insert("t2".into(), b);
    }
    if !tagged.time_tags.contains_key("t4") {
        tagged.time_tags.insert("t4".into(), program.terminal_suffix_start());
    }
    let (stripped, _, tags) = tagged.retain(|_, ins| !matches!(ins, Instruction::Measure { reg: r } if r == reg));
    let (t2, t4) = (tags["t2"], tags["t4"]);
    if t2 > t4 {
        return Err(Error::Program("t2 comes after t4".into()));
    }
    let segment = &stripped[t2..t4];
    if segment.iter().any(|i| matches!(i, Instruction::Prepare { .. })) {
        return Err(Error::RewriteNotApplicable("segment contains a preparation".into()));
    }
    let at_t2 = apply_unitary(program.zero_state(), &stripped[..t2])?;
    let at_t4 = apply_unitary(at_t2, segment)?;
    let mut state = measure::project(&at_t4, &ProjectionOperator::new(reg, value))?;
    for ins in segment.iter().rev() {
        if let Instruction::Gate(g) = ins {
            state = g.inverse().apply(state)?;
        }
    }
    normalize(state)
}

/// The state at boundary `tag` of the program with every measurement removed.
pub fn unitary_state_at(program: &CircuitProgram, tag: &str) -> Result<PureState> {
    program.check_structure()?;
    let (stripped, _, tags) = program.retain(|_, ins| !ins.is_measure());
    let b = *tags
        .get(tag)
        .ok_or_else(|| Error::Program(format!("unknown time tag {tag}")))?;
    apply_unitary(program.zero_state(), &stripped[..b])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{compare_up_to_global_phase, state_from_terms};
    use crate::rng_from_seed;

    fn fig1(n: usize, f: FunctionTable, measure_f: bool) -> CircuitProgram {
        let layout = RegisterLayout::new([("X", n), ("F", f.output_bits())]).unwrap();
        let mut ins = vec![
            Instruction::prepare("X", Preparation::Basis(0)),
            Instruction::prepare("F", Preparation::Basis(0)),
            Instruction::gate(Gate::Hadamard { reg: "X".into() }),
            Instruction::gate(Gate::OracleXor {
                input: "X".into(),
                output: "F".into(),
                table: f,
            }),
        ];
        if measure_f {
            ins.push(Instruction::measure("F"));
        }
        ins.push(Instruction::gate(Gate::Qft { reg: "X".into() }));
        ins.push(Instruction::measure("X"));
        let off = usize::from(measure_f);
        CircuitProgram::new(layout, ins)
            .with_tag("t1", 2)
            .with_tag("t2", 4)
            .with_tag("t3", 4 + off)
            .with_tag("t4", 5 + off)
    }

    fn periodic(n: usize, r: u64) -> FunctionTable {
        FunctionTable::from_fn(n, n, |x| x % r).unwrap()
    }

    #[test]
    fn fig1_snapshot_at_t2() {
        let p = fig1(2, periodic(2, 2), true);
        let trace = run(&p, &mut rng_from_seed(3)).unwrap();
        let expected = state_from_terms(
            &p.layout,
            &(0..4u64)
                .map(|x| (vec![("X", x), ("F", x % 2)], Complex64::new(0.5, 0.0)))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        assert!(trace.at_tag("t2").unwrap().max_abs_diff(&expected).unwrap() < 1e-10);
        let f_bar = trace.outcome("F").unwrap();
        let x = trace.outcome("X").unwrap();
        assert!(f_bar < 2 && x.is_multiple_of(2));
    }

    #[test]
    fn empty_program_is_zero_state() {
        let layout = RegisterLayout::new([("X", 2)]).unwrap();
        let p = CircuitProgram::new(layout, vec![]);
        let trace = run(&p, &mut rng_from_seed(0)).unwrap();
        assert_eq!(trace.final_state(), &p.zero_state());
        assert_eq!(trace.measurements().count(), 0);
    }

    #[test]
    fn prepare_then_measure_is_deterministic() {
        let layout = RegisterLayout::new([("X", 3)]).unwrap();
        let p = CircuitProgram::new(
            layout,
            vec![
                Instruction::prepare("X", Preparation::Basis(6)),
                Instruction::measure("X"),
            ],
        );
        for seed in 0..10 {
            assert_eq!(run(&p, &mut rng_from_seed(seed)).unwrap().outcome("X"), Some(6));
        }
    }

    #[test]
    fn run_is_bit_reproducible() {
        let p = fig1(3, periodic(3, 3), true);
        assert_eq!(
            run(&p, &mut rng_from_seed(77)).unwrap(),
            run(&p, &mut rng_from_seed(77)).unwrap()
        );
    }

    #[test]
    fn well_formedness() {
        let layout = RegisterLayout::new([("X", 2), ("F", 1)]).unwrap();
        let bad = [
            vec![Instruction::measure("Y")],
            vec![Instruction::measure("X"), Instruction::measure("X")],
            vec![
                Instruction::gate(Gate::Hadamard { reg: "X".into() }),
                Instruction::prepare("F", Preparation::Minus),
            ],
            vec![Instruction::gate(Gate::OracleXor {
                input: "X".into(),
                output: "F".into(),
                table: FunctionTable::new(2, 2, vec![0; 4]).unwrap(),
            })],
            vec![
                Instruction::measure("X"),
                Instruction::gate(Gate::Qft { reg: "X".into() }),
            ],
            vec![Instruction::prepare("X", Preparation::Phased(vec![0.0; 3]))],
        ];
        for ins in bad {
            let p = CircuitProgram::new(layout.clone(), ins.clone());
            assert!(run(&p, &mut rng_from_seed(0)).is_err(), "{ins:?}");
        }
    }

    #[test]
    fn deferral_moves_intermediate_measurement_to_end() {
        let p = fig1(3, periodic(3, 4), true);
        let d = defer_measurements(&p).unwrap();
        assert_eq!(d, fig1(3, periodic(3, 4), false).deferred_reference());
        assert_eq!(d.instructions.last(), Some(&Instruction::measure("F")));
        assert_eq!(d.instructions[d.instructions.len() - 2], Instruction::measure("X"));
        assert_eq!(d.time_tags["t2"], 4);
        assert_eq!(d.time_tags["t4"], 5);
    }

    impl CircuitProgram {
        /// The skip-F program with F measured last, as the rewrite should produce it.
        fn deferred_reference(mut self) -> CircuitProgram {
            self.instructions.push(Instruction::measure("F"));
            self.time_tags.insert("t3".into(), 4);
            self
        }
    }

    #[test]
    fn deferral_without_intermediate_measurement_is_identity() {
        let p = fig1(2, periodic(2, 2), false);
        assert_eq!(defer_measurements(&p).unwrap(), p);
    }

    #[test]
    fn deferral_guard() {
        let layout = RegisterLayout::new([("X", 2)]).unwrap();
        let p = CircuitProgram::new(
            layout,
            vec![
                Instruction::measure("X"),
                Instruction::gate(Gate::Qft { reg: "X".into() }),
            ],
        );
        assert!(matches!(defer_measurements(&p), Err(Error::RewriteNotApplicable(_))));
    }

    #[test]
    fn deferred_program_has_same_distribution() {
        let p = fig1(3, periodic(3, 4), true);
        let d = defer_measurements(&p).unwrap();
        for observed in [&["X"][..], &["F"], &["X", "F"], &["F", "X"]] {
            assert!(equivalent_distributions(&p, &d, observed).unwrap().value < 1e-10);
        }
        assert_eq!(equivalent_distributions(&p, &p, &["X"]).unwrap().value, 0.0);
    }

    #[test]
    fn different_periods_are_distinguishable() {
        // period 2: c ∈ {0,4}; period 4: c ∈ {0,2,4,6}; TV = |1/2−1/4|·2·½ + 2·(1/4)·½ = 1/2
        let p2 = fig1(3, periodic(3, 2), true);
        let p4 = fig1(3, periodic(3, 4), true);
        let tv = equivalent_distributions(&p2, &p4, &["X"]).unwrap().value;
        assert!((tv - 0.5).abs() < 1e-12, "tv={tv}");
        let other = fig1(2, periodic(2, 2), true);
        assert!(matches!(
            equivalent_distributions(&p2, &other, &["X"]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn backdated_outcome_equals_early_projection() {
        let p = fig1(3, periodic(3, 4), true);
        let t2 = unitary_state_at(&p, "t2").unwrap();
        for f_bar in 0..4 {
            let back = backdate_outcome(&p, "F", f_bar).unwrap();
            let direct = measure::project(&t2, &ProjectionOperator::new("F", f_bar)).unwrap();
            assert!(compare_up_to_global_phase(&back, &direct).unwrap().value < 1e-10);
        }
        assert!(matches!(backdate_outcome(&p, "F", 5), Err(Error::Degenerate(_))));
    }

    #[test]
    fn backdating_without_later_unitaries_is_projection() {
        let layout = RegisterLayout::new([("X", 2), ("F", 2)]).unwrap();
        let p = CircuitProgram::new(
            layout,
            vec![
                Instruction::gate(Gate::Hadamard { reg: "X".into() }),
                Instruction::gate(Gate::OracleXor {
                    input: "X".into(),
                    output: "F".into(),
                    table: periodic(2, 2),
                }),
                Instruction::measure("F"),
            ],
        );
        let t2 = unitary_state_at(&p.clone().with_tag("t2", 2), "t2").unwrap();
        let back = backdate_outcome(&p, "F", 1).unwrap();
        let direct = measure::project(&t2, &ProjectionOperator::new("F", 1)).unwrap();
        assert!(back.max_abs_diff(&direct).unwrap() < 1e-15);
    }

    #[test]
    fn backdating_rejects_foreign_measurements_in_segment() {
        let layout = RegisterLayout::new([("X", 2), ("F", 2), ("A", 1)]).unwrap();
        let p = CircuitProgram::new(
            layout,
            vec![
                Instruction::gate(Gate::Hadamard { reg: "X".into() }),
                Instruction::gate(Gate::Hadamard { reg: "A".into() }),
                Instruction::measure("F"),
                Instruction::measure("A"),
                Instruction::gate(Gate::Qft { reg: "X".into() }),
                Instruction::measure("X"),
            ],
        );
        assert!(matches!(
            backdate_outcome(&p, "F", 0),
            Err(Error::RewriteNotApplicable(_))
        ));
    }

    #[test]
    fn program_json_format() {
        let p = fig1(1, periodic(1, 1), true);
        let text = p.to_json();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(
            value["instructions"][2],
            serde_json::json!({"op": "gate", "kind": "hadamard", "reg": "X"})
        );
        assert_eq!(value["instructions"][0]["state"], serde_json::json!({"basis": 0}));
        assert_eq!(
            value["instructions"][4],
            serde_json::json!({"op": "measure", "reg": "F"})
        );
        assert_eq!(CircuitProgram::from_json(&text).unwrap(), p);
        let minus = serde_json::to_value(Instruction::prepare("F", Preparation::Minus)).unwrap();
        assert_eq!(
            minus,
            serde_json::json!({"op": "prepare", "reg": "F", "state": "minus"})
        );
        assert!(CircuitProgram::from_json(r#"{"layout":{"registers":[]},"instructions":[{"op":"jump"}]}"#).is_err());
    }
}
