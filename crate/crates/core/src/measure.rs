//! Projective measurement of register contents.
//!
//! A measurement of register `R` with outcome `v` is the projection onto the
//! eigenspace `{i : R(i) = v}` followed by renormalization; the outcome is drawn
//! with probability equal to the squared norm of that projection. Mixed states
//! reached by discarding a register are available both as dense reduced
//! density matrices and in random-phase form.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{normalize, DistanceKind, PureState, RegisterLayout, StateDistance};
use crate::SimRng;

/// Largest number of kept qubits for which dense density matrices are built.
pub const MAX_DENSITY_QUBITS: usize = 10;

/// Projector onto the eigenspace where `reg` holds `outcome`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionOperator {
    pub reg: String,
    pub outcome: u64,
}

impl ProjectionOperator {
    pub fn new(reg: impl Into<String>, outcome: u64) -> Self {
        ProjectionOperator {
            reg: reg.into(),
            outcome,
        }
    }
}

/// Exact outcome probabilities for one register or a tuple of registers.
///
/// For several registers the outcome index is their concatenation, first
/// register most significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub registers: Vec<String>,
    pub widths: Vec<usize>,
    pub probabilities: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn prob(&self, outcome: u64) -> f64 {
        self.probabilities.get(outcome as usize).copied().unwrap_or(0.0)
    }

    /// Probability of a tuple of register values, in `registers` order.
    pub fn prob_of(&self, values: &[u64]) -> f64 {
        self.prob(self.join(values))
    }

    pub fn join(&self, values: &[u64]) -> u64 {
        values.iter().zip(&self.widths).fold(0u64, |acc, (v, w)| (acc << w) | v)
    }

    /// Splits a joint outcome index into per-register values.
    pub fn split(&self, outcome: u64) -> Vec<u64> {
        let mut out = vec![0; self.widths.len()];
        let mut rest = outcome;
        for (slot, w) in out.iter_mut().zip(&self.widths).rev() {
            *slot = rest & ((1 << w) - 1);
            rest >>= w;
        }
        out
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Outcomes with probability above `tol`.
    pub fn support(&self, tol: f64) -> Vec<u64> {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > tol)
            .map(|(i, _)| i as u64)
            .collect()
    }

    pub fn total_variation(&self, other: &OutcomeDistribution) -> Result<StateDistance> {
        if self.registers != other.registers || self.widths != other.widths {
            return Err(Error::Shape(format!(
                "distributions over {:?} and {:?}",
                self.registers, other.registers
            )));
        }
        let tv = 0.5
            * self
                .probabilities
                .iter()
                .zip(&other.probabilities)
                .map(|(p, q)| (p - q).abs())
                .sum::<f64>();
        Ok(StateDistance::new(DistanceKind::Distribution, tv))
    }

    /// Draws one outcome.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        sample_index(&self.probabilities, rng) as u64
    }
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            last_nonzero = i;
            acc += w;
            if target < acc {
                return i;
            }
        }
    }
    last_nonzero
}

/// Outcome probabilities of `reg`.
pub fn outcome_distribution(state: &PureState, reg: &str) -> Result<OutcomeDistribution> {
    joint_distribution(state, &[reg])
}

/// Joint outcome probabilities of several registers, marginalizing the rest.
pub fn joint_distribution(state: &PureState, regs: &[&str]) -> Result<OutcomeDistribution> {
    let layout = state.layout();
    let registers: Vec<_> = regs.iter().map(|r| layout.register(r)).collect::<Result<_>>()?;
    for (i, a) in regs.iter().enumerate() {
        if regs[..i].contains(a) {
            return Err(Error::Shape(format!("register {a} listed twice")));
        }
    }
    let widths: Vec<usize> = registers.iter().map(|r| r.qubits).collect();
    let bits: usize = widths.iter().sum();
    let mut probabilities = vec![0.0; 1 << bits];
    for (i, a) in state.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        if p == 0.0 {
            continue;
        }
        let key = registers.iter().fold(0usize, |acc, r| (acc << r.qubits) | r.value(i));
        probabilities[key] += p;
    }
    Ok(OutcomeDistribution {
        registers: regs.iter().map(|s| s.to_string()).collect(),
        widths,
        probabilities,
    })
}

/// `P|ψ⟩/‖P|ψ⟩‖`: zero every amplitude outside the eigenspace and renormalize.
pub fn project(state: &PureState, p: &ProjectionOperator) -> Result<PureState> {
    let (projected, weight) = project_unnormalized(state, p)?;
    if weight == 0.0 {
        return Err(Error::Degenerate(format!(
            "outcome {} of register {} has zero probability",
            p.outcome, p.reg
        )));
    }
    normalize(projected)
}

/// `P|ψ⟩` together with its squared norm.
pub fn project_unnormalized(state: &PureState, p: &ProjectionOperator) -> Result<(PureState, f64)> {
    let reg = state.layout().register(&p.reg)?;
    if p.outcome >= reg.dim() as u64 {
        return Err(Error::Range {
            reg: reg.name.clone(),
            value: p.outcome,
            qubits: reg.qubits,
        });
    }
    let mut out = PureState::zeros(state.layout().clone());
    let mut weight = 0.0;
    for (i, a) in state.amplitudes().iter().enumerate() {
        if reg.value(i) as u64 == p.outcome {
            out.amplitudes_mut()[i] = *a;
            weight += a.norm_sqr();
        }
    }
    Ok((out, weight))
}

/// One measurement outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub register: String,
    pub outcome: u64,
    pub probability: f64,
}

impl Measurement {
    pub fn record(&self, seed: u64) -> MeasurementRecord {
        MeasurementRecord {
            seed,
            register: self.register.clone(),
            outcome: self.outcome,
            probability: self.probability,
        }
    }
}

/// A measurement as emitted on JSON lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub seed: u64,
    pub register: String,
    pub outcome: u64,
    pub probability: f64,
}

/// Samples an outcome of `reg` by the Born rule and projects onto it.
pub fn measure_register<R: Rng + ?Sized>(
    state: &PureState,
    reg: &str,
    rng: &mut R,
) -> Result<(Measurement, PureState)> {
    let dist = outcome_distribution(state, reg)?;
    let outcome = dist.sample(rng);
    let post = project(state, &ProjectionOperator::new(reg, outcome))?;
    let probability = dist.prob(outcome) / dist.total();
    Ok((
        Measurement {
            register: reg.to_string(),
            outcome,
            probability,
        },
        post,
    ))
}

/// Exact joint distribution obtained by measuring `regs` one after another,
/// enumerating every branch.
pub fn sequential_distribution(state: &PureState, regs: &[&str]) -> Result<OutcomeDistribution> {
    let template = joint_distribution(state, regs)?;
    let mut probabilities = vec![0.0; template.probabilities.len()];
    let mut stack: Vec<(PureState, f64, Vec<u64>)> = vec![(normalize(state.clone())?, 1.0, Vec::new())];
    while let Some((branch, weight, values)) = stack.pop() {
        if values.len() == regs.len() {
            probabilities[template.join(&values) as usize] += weight;
            continue;
        }
        let reg = regs[values.len()];
        let dist = outcome_distribution(&branch, reg)?;
        for (v, p) in dist.probabilities.iter().enumerate() {
            if *p == 0.0 {
                continue;
            }
            let post = project(&branch, &ProjectionOperator::new(reg, v as u64))?;
            let mut next = values.clone();
            next.push(v as u64);
            stack.push((post, weight * p, next));
        }
    }
    Ok(OutcomeDistribution {
        probabilities,
        ..template
    })
}

/// A dense density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    /// Row-major entries.
    entries: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zeros(dim: usize) -> Self {
        DensityMatrix {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn from_entries(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::Shape(format!("{dim}x{dim} matrix needs {} entries", dim * dim)));
        }
        Ok(DensityMatrix { dim, entries })
    }

    /// `|v⟩⟨v|` for an amplitude vector.
    pub fn outer(amplitudes: &[Complex64]) -> Self {
        let mut rho = DensityMatrix::zeros(amplitudes.len());
        rho.add_outer(amplitudes, 1.0);
        rho
    }

    pub fn from_pure(state: &PureState) -> Result<Self> {
        check_density_size(state.layout().total_qubits())?;
        Ok(Self::outer(state.amplitudes()))
    }

    /// Diagonal matrix with the given weights.
    pub fn diagonal(weights: &[f64]) -> Self {
        let mut rho = DensityMatrix::zeros(weights.len());
        for (i, w) in weights.iter().enumerate() {
            rho.entries[i * rho.dim + i] = Complex64::new(*w, 0.0);
        }
        rho
    }

    /// `self += weight · |v⟩⟨v|`.
    pub fn add_outer(&mut self, v: &[Complex64], weight: f64) {
        assert_eq!(v.len(), self.dim);
        for (i, vi) in v.iter().enumerate() {
            if *vi == Complex64::new(0.0, 0.0) {
                continue;
            }
            let row = &mut self.entries[i * self.dim..(i + 1) * self.dim];
            let scaled = vi * weight;
            for (e, vj) in row.iter_mut().zip(v) {
                *e += scaled * vj.conj();
            }
        }
    }

    pub fn add_scaled(&mut self, other: &DensityMatrix, weight: f64) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += b * weight;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for e in &mut self.entries {
            *e *= factor;
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|e| e.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = nalgebra::DMatrix::from_row_slice(self.dim, self.dim, &self.entries);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Checks Hermiticity, unit trace and positivity.
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > 1e-10 {
            return Err(Error::Shape(format!("not Hermitian (error {herm:e})")));
        }
        let tr = self.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::Shape(format!("trace {tr} is not 1")));
        }
        let min = self.min_eigenvalue();
        if min < -1e-9 {
            return Err(Error::Shape(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn frobenius_distance(&self, other: &DensityMatrix) -> Result<StateDistance> {
        if self.dim != other.dim {
            return Err(Error::Shape(format!("dimensions {} and {}", self.dim, other.dim)));
        }
        let d = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        Ok(StateDistance::new(DistanceKind::Frobenius, d))
    }
}

#[derive(Serialize, Deserialize)]
struct DensityDoc {
    dim: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DensityDoc {
            dim: self.dim,
            entries: self.entries.iter().map(|e| [e.re, e.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = DensityDoc::deserialize(d)?;
        let entries = doc.entries.into_iter().map(|[re, im]| Complex64::new(re, im)).collect();
        DensityMatrix::from_entries(doc.dim, entries).map_err(serde::de::Error::custom)
    }
}

fn check_density_size(qubits: usize) -> Result<()> {
    if qubits > MAX_DENSITY_QUBITS {
        return Err(Error::Usage(format!(
            "density matrices are limited to {MAX_DENSITY_QUBITS} qubits, got {qubits}"
        )));
    }
    Ok(())
}

type SplitRows = Vec<Vec<(usize, Complex64)>>;

/// Amplitudes arranged as a `kept × traced` matrix, rows indexed in the kept
/// sub-layout.
fn split_amplitudes(state: &PureState, keep: &[&str]) -> Result<(RegisterLayout, SplitRows)> {
    let layout = state.layout();
    let kept = layout.sub_layout(keep)?;
    let kept_regs: Vec<_> = kept
        .registers()
        .iter()
        .map(|r| layout.register(&r.name).cloned())
        .collect::<Result<_>>()?;
    let traced_regs: Vec<_> = layout
        .registers()
        .iter()
        .filter(|r| !keep.contains(&r.name.as_str()))
        .cloned()
        .collect();
    // rows[traced_index] = list of (kept_index, amplitude)
    let traced_bits: usize = traced_regs.iter().map(|r| r.qubits).sum();
    let mut rows = vec![Vec::new(); 1 << traced_bits];
    for (i, a) in state.amplitudes().iter().enumerate() {
        if *a == Complex64::new(0.0, 0.0) {
            continue;
        }
        let k = kept_regs.iter().fold(0usize, |acc, r| (acc << r.qubits) | r.value(i));
        let t = traced_regs.iter().fold(0usize, |acc, r| (acc << r.qubits) | r.value(i));
        rows[t].push((k, *a));
    }
    Ok((kept, rows))
}

/// Reduced density matrix over `keep`, tracing out every other register.
pub fn partial_trace(state: &PureState, keep: &[&str]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::Usage("partial trace needs at least one kept register".into()));
    }
    let (kept, rows) = split_amplitudes(state, keep)?;
    check_density_size(kept.total_qubits())?;
    let mut rho = DensityMatrix::zeros(kept.dim());
    let mut v = vec![Complex64::new(0.0, 0.0); kept.dim()];
    for row in rows.iter().filter(|r| !r.is_empty()) {
        v.iter_mut().for_each(|e| *e = Complex64::new(0.0, 0.0));
        for (k, a) in row {
            v[*k] = *a;
        }
        rho.add_outer(&v, 1.0);
    }
    Ok(rho)
}

/// Which random phase multiplies a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseBinding {
    /// No phase; the slot is the reference.
    Fixed,
    /// Multiplied by `e^{iδ_v}` for phase variable `v`.
    Variable(usize),
}

/// One group of terms sharing a phase factor.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSlot {
    /// Value of the discarded register this slot came from, if any.
    pub label: u64,
    pub binding: PhaseBinding,
    pub amplitudes: Vec<Complex64>,
}

/// A mixed state written as a pure state `Σ_h e^{iδ_h} |s_h⟩` with independent
/// uniform phases; its phase-averaged outer product is the density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasedMixture {
    layout: RegisterLayout,
    slots: Vec<PhaseSlot>,
    variables: usize,
}

impl PhasedMixture {
    pub fn new(layout: RegisterLayout, slots: Vec<PhaseSlot>) -> Result<Self> {
        let mut variables = 0;
        for s in &slots {
            if s.amplitudes.len() != layout.dim() {
                return Err(Error::Shape(format!(
                    "slot {} has {} amplitudes, layout needs {}",
                    s.label,
                    s.amplitudes.len(),
                    layout.dim()
                )));
            }
            if let PhaseBinding::Variable(v) = s.binding {
                variables = variables.max(v + 1);
            }
        }
        Ok(PhasedMixture {
            layout,
            slots,
            variables,
        })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn slots(&self) -> &[PhaseSlot] {
        &self.slots
    }

    /// Number of independent phase variables.
    pub fn variables(&self) -> usize {
        self.variables
    }

    /// `Σ_h e^{iδ_{b(h)}} |s_h⟩` for explicit phase values.
    pub fn with_phases(&self, phases: &[f64]) -> Result<PureState> {
        if phases.len() != self.variables {
            return Err(Error::Shape(format!(
                "{} phase variables, got {} values",
                self.variables,
                phases.len()
            )));
        }
        let mut out = PureState::zeros(self.layout.clone());
        for slot in &self.slots {
            let factor = match slot.binding {
                PhaseBinding::Fixed => Complex64::new(1.0, 0.0),
                PhaseBinding::Variable(v) => Complex64::from_polar(1.0, phases[v]),
            };
            for (o, a) in out.amplitudes_mut().iter_mut().zip(&slot.amplitudes) {
                *o += a * factor;
            }
        }
        Ok(out)
    }

    /// Each slot evolved separately: returns a mixture with `apply` mapped over
    /// the slot vectors. Linear maps commute with the phase factors.
    pub fn map_slots(&self, apply: impl Fn(PureState) -> Result<PureState>) -> Result<PhasedMixture> {
        let slots = self
            .slots
            .iter()
            .map(|s| {
                let state = PureState::from_amplitudes(self.layout.clone(), s.amplitudes.clone())?;
                let (_, amplitudes) = apply(state)?.into_parts();
                Ok(PhaseSlot {
                    amplitudes,
                    ..s.clone()
                })
            })
            .collect::<Result<_>>()?;
        PhasedMixture::new(self.layout.clone(), slots)
    }

    /// Slot vectors summed within each phase group. Cross-group terms vanish
    /// under the phase average, so these are the components of the mixture.
    pub fn components(&self) -> Vec<Vec<Complex64>> {
        let mut groups: BTreeMap<Option<usize>, Vec<Complex64>> = BTreeMap::new();
        for slot in &self.slots {
            let key = match slot.binding {
                PhaseBinding::Fixed => None,
                PhaseBinding::Variable(v) => Some(v),
            };
            let acc = groups
                .entry(key)
                .or_insert_with(|| vec![Complex64::new(0.0, 0.0); self.layout.dim()]);
            for (o, a) in acc.iter_mut().zip(&slot.amplitudes) {
                *o += a;
            }
        }
        groups.into_values().collect()
    }

    /// Exact outcome probabilities of `regs` under the phase average.
    pub fn outcome_distribution(&self, regs: &[&str]) -> Result<OutcomeDistribution> {
        let mut total: Option<OutcomeDistribution> = None;
        for comp in self.components() {
            let state = PureState::from_amplitudes(self.layout.clone(), comp)?;
            let d = joint_distribution(&state, regs)?;
            match total.as_mut() {
                None => total = Some(d),
                Some(t) => {
                    for (a, b) in t.probabilities.iter_mut().zip(&d.probabilities) {
                        *a += b;
                    }
                }
            }
        }
        match total {
            Some(t) => Ok(t),
            None => joint_distribution(&PureState::zeros(self.layout.clone()), regs),
        }
    }
}

/// Groups the terms of `state` by the value of `traced_reg`; the discarded
/// register's value becomes the slot label and each slot gets its own phase.
pub fn phased_mixture_from_state(state: &PureState, traced_reg: &str) -> Result<PhasedMixture> {
    let layout = state.layout();
    layout.register(traced_reg)?;
    let keep: Vec<&str> = layout.names().into_iter().filter(|n| *n != traced_reg).collect();
    if keep.is_empty() {
        return Err(Error::Usage(format!(
            "register {traced_reg} is the whole system; nothing would remain"
        )));
    }
    let (kept, rows) = split_amplitudes(state, &keep)?;
    let mut slots = Vec::new();
    for (label, row) in rows.into_iter().enumerate() {
        if row.iter().all(|(_, a)| a.norm_sqr() == 0.0) {
            continue;
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); kept.dim()];
        for (k, a) in row {
            amplitudes[k] = a;
        }
        let binding = PhaseBinding::Variable(slots.len());
        slots.push(PhaseSlot {
            label: label as u64,
            binding,
            amplitudes,
        });
    }
    PhasedMixture::new(kept, slots)
}

/// `sin φ |0⟩ + e^{iδ} cos φ |1⟩` on one qubit; its phase average is
/// `sin²φ |0⟩⟨0| + cos²φ |1⟩⟨1|`.
pub fn two_state_mixture(phi: f64) -> PhasedMixture {
    let layout = RegisterLayout::new([("Q", 1)]).expect("valid layout");
    let zero = Complex64::new(0.0, 0.0);
    PhasedMixture::new(
        layout,
        vec![
            PhaseSlot {
                label: 0,
                binding: PhaseBinding::Fixed,
                amplitudes: vec![Complex64::new(phi.sin(), 0.0), zero],
            },
            PhaseSlot {
                label: 1,
                binding: PhaseBinding::Variable(0),
                amplitudes: vec![zero, Complex64::new(phi.cos(), 0.0)],
            },
        ],
    )
    .expect("slot sizes match")
}

/// Draws every phase uniformly from `[0, 2π)` and returns the resulting pure state.
pub fn sample_phases<R: Rng + ?Sized>(m: &PhasedMixture, rng: &mut R) -> PureState {
    let phases: Vec<f64> = (0..m.variables).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    m.with_phases(&phases).expect("phase count matches")
}

/// Exact phase average of `|ψ(δ)⟩⟨ψ(δ)|`.
pub fn analytic_density(m: &PhasedMixture) -> Result<DensityMatrix> {
    check_density_size(m.layout.total_qubits())?;
    let mut rho = DensityMatrix::zeros(m.layout.dim());
    for comp in m.components() {
        rho.add_outer(&comp, 1.0);
    }
    Ok(rho)
}

/// Monte Carlo phase average over `samples` draws.
pub fn average_density<R: Rng + ?Sized>(m: &PhasedMixture, samples: usize, rng: &mut R) -> Result<DensityMatrix> {
    if samples == 0 {
        return Err(Error::Usage("at least one sample is required".into()));
    }
    check_density_size(m.layout.total_qubits())?;
    let mut rho = DensityMatrix::zeros(m.layout.dim());
    for _ in 0..samples {
        let psi = sample_phases(m, rng);
        rho.add_outer(psi.amplitudes(), 1.0);
    }
    rho.scale(1.0 / samples as f64);
    Ok(rho)
}

/// Monte Carlo phase average split across `workers` threads.
///
/// Worker `w` draws from stream `w` of the generator seeded with `seed`, and the
/// partial sums are combined in worker order, so a fixed `(seed, workers)` pair
/// gives bit-identical output.
pub fn average_density_parallel(m: &PhasedMixture, samples: usize, seed: u64, workers: usize) -> Result<DensityMatrix> {
    if samples == 0 {
        return Err(Error::Usage("at least one sample is required".into()));
    }
    check_density_size(m.layout.total_qubits())?;
    let workers = workers.clamp(1, samples);
    let partials: Vec<DensityMatrix> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let share = samples / workers + usize::from(w < samples % workers);
                scope.spawn(move || {
                    let mut rng = SimRng::seed_from_u64(seed);
                    rng.set_stream(w as u64);
                    let mut rho = DensityMatrix::zeros(m.layout.dim());
                    for _ in 0..share {
                        let psi = sample_phases(m, &mut rng);
                        rho.add_outer(psi.amplitudes(), 1.0);
                    }
                    rho
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let mut rho = DensityMatrix::zeros(m.layout.dim());
    for p in &partials {
        rho.add_scaled(p, 1.0);
    }
    rho.scale(1.0 / samples as f64);
    Ok(rho)
}

/// Derives an independent sub-seed; used to hand out per-run seeds.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut rng = SimRng::seed_from_u64(master);
    rng.set_stream(index.wrapping_add(1 << 32));
    rng.next_u64()
}
