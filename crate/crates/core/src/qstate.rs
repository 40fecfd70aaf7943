//! Register layouts and dense pure states.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest register layout the simulator will allocate.
pub const MAX_TOTAL_QUBITS: usize = 24;

/// One named register together with its bit position in a basis index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub qubits: usize,
    /// Position of the register's least significant bit.
    pub offset: usize,
}

impl Register {
    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn mask(&self) -> usize {
        (self.dim() - 1) << self.offset
    }

    /// The register's value inside basis index `index`.
    #[inline]
    pub fn value(&self, index: usize) -> usize {
        (index >> self.offset) & (self.dim() - 1)
    }

    /// `index` with this register's bits replaced by `value`.
    #[inline]
    pub fn with_value(&self, index: usize, value: usize) -> usize {
        (index & !self.mask()) | (value << self.offset)
    }

    /// Basis indices (below `total_dim`) whose bits for this register are all zero.
    pub fn bases(&self, total_dim: usize) -> impl Iterator<Item = usize> + '_ {
        let mask = self.mask();
        (0..total_dim).filter(move |i| i & mask == 0)
    }
}

#[derive(Serialize, Deserialize)]
struct RegisterSpec {
    name: String,
    qubits: usize,
}

#[derive(Serialize, Deserialize)]
struct LayoutSpec {
    registers: Vec<RegisterSpec>,
}

/// Ordered named registers. The first register holds the most significant bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LayoutSpec", into = "LayoutSpec")]
pub struct RegisterLayout {
    registers: Vec<Register>,
    total_qubits: usize,
}

impl TryFrom<LayoutSpec> for RegisterLayout {
    type Error = Error;

    fn try_from(spec: LayoutSpec) -> Result<Self> {
        RegisterLayout::new(spec.registers.into_iter().map(|r| (r.name, r.qubits)))
    }
}

impl From<RegisterLayout> for LayoutSpec {
    fn from(layout: RegisterLayout) -> Self {
        LayoutSpec {
            registers: layout
                .registers
                .into_iter()
                .map(|r| RegisterSpec {
                    name: r.name,
                    qubits: r.qubits,
                })
                .collect(),
        }
    }
}

impl RegisterLayout {
    pub fn new<I, S>(registers: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let specs: Vec<(String, usize)> = registers.into_iter().map(|(n, q)| (n.into(), q)).collect();
        let mut seen = std::collections::BTreeSet::new();
        for (name, qubits) in &specs {
            if name.is_empty() {
                return Err(Error::Usage("register name must not be empty".into()));
            }
            if *qubits == 0 {
                return Err(Error::Usage(format!("register {name} must have at least one qubit")));
            }
            if !seen.insert(name.clone()) {
                return Err(Error::Usage(format!("duplicate register name {name}")));
            }
        }
        let total_qubits: usize = specs.iter().map(|(_, q)| q).sum();
        if total_qubits > MAX_TOTAL_QUBITS {
            return Err(Error::Usage(format!(
                "{total_qubits} qubits exceeds the simulator limit of {MAX_TOTAL_QUBITS}"
            )));
        }
        let mut offset = total_qubits;
        let registers = specs
            .into_iter()
            .map(|(name, qubits)| {
                offset -= qubits;
                Register { name, qubits, offset }
            })
            .collect();
        Ok(RegisterLayout {
            registers,
            total_qubits,
        })
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn total_qubits(&self) -> usize {
        self.total_qubits
    }

    /// Dimension of the full Hilbert space.
    pub fn dim(&self) -> usize {
        1 << self.total_qubits
    }

    pub fn register(&self, name: &str) -> Result<&Register> {
        self.registers
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.registers.iter().any(|r| r.name == name)
    }

    /// Encodes register assignments into a basis index. Registers not mentioned are zero.
    pub fn encode(&self, assignments: &[(&str, u64)]) -> Result<usize> {
        let mut index = 0usize;
        for (name, value) in assignments {
            let reg = self.register(name)?;
            if *value >= reg.dim() as u64 {
                return Err(Error::Range {
                    reg: reg.name.clone(),
                    value: *value,
                    qubits: reg.qubits,
                });
            }
            index = reg.with_value(index, *value as usize);
        }
        Ok(index)
    }

    /// Splits a basis index into per-register values, in layout order.
    pub fn decode(&self, index: usize) -> Vec<(String, u64)> {
        self.registers
            .iter()
            .map(|r| (r.name.clone(), r.value(index) as u64))
            .collect()
    }

    /// The layout restricted to `keep`, in layout order.
    pub fn sub_layout(&self, keep: &[&str]) -> Result<RegisterLayout> {
        for name in keep {
            self.register(name)?;
        }
        RegisterLayout::new(
            self.registers
                .iter()
                .filter(|r| keep.contains(&r.name.as_str()))
                .map(|r| (r.name.clone(), r.qubits)),
        )
    }

    pub fn names(&self) -> Vec<&str> {
        self.registers.iter().map(|r| r.name.as_str()).collect()
    }
}

impl fmt::Display for RegisterLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .registers
            .iter()
            .map(|r| format!("{}:{}", r.name, r.qubits))
            .collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// A dense complex amplitude vector over a register layout.
///
/// The vector is not forced to unit norm; [`normalize`] produces one that is.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    layout: RegisterLayout,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn from_amplitudes(layout: RegisterLayout, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::Shape(format!(
                "layout {layout} needs {} amplitudes, got {}",
                layout.dim(),
                amplitudes.len()
            )));
        }
        Ok(PureState { layout, amplitudes })
    }

    /// The all-zero vector, useful as an accumulator.
    pub fn zeros(layout: RegisterLayout) -> Self {
        let amplitudes = vec![Complex64::new(0.0, 0.0); layout.dim()];
        PureState { layout, amplitudes }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn into_parts(self) -> (RegisterLayout, Vec<Complex64>) {
        (self.layout, self.amplitudes)
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.layout != other.layout {
            return Err(Error::Shape(format!(
                "layouts differ: {} vs {}",
                self.layout, other.layout
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Multiplies every amplitude by `factor`.
    pub fn scaled(mut self, factor: Complex64) -> Self {
        for a in &mut self.amplitudes {
            *a *= factor;
        }
        self
    }

    /// Largest componentwise difference, for exact (phase-sensitive) comparisons.
    pub fn max_abs_diff(&self, other: &PureState) -> Result<f64> {
        if self.layout != other.layout {
            return Err(Error::Shape("layouts differ".into()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// The amplitude of `self` viewed as a product state factor: returns the
    /// reduced pure state on `reg` if the state is a product `|a⟩_reg ⊗ |rest⟩`.
    ///
    /// Used to check that a register was left untouched by an entangling process.
    pub fn register_factor(&self, reg: &str) -> Result<Option<PureState>> {
        let rho = crate::measure::partial_trace(self, &[reg])?;
        let purity = rho.purity();
        if (purity - 1.0).abs() > 1e-9 {
            return Ok(None);
        }
        // rank one: any nonzero column is proportional to the factor
        let d = rho.dim();
        let col = (0..d)
            .max_by(|&i, &j| rho.get(i, i).re.total_cmp(&rho.get(j, j).re))
            .unwrap_or(0);
        let amps: Vec<Complex64> = (0..d).map(|i| rho.get(i, col)).collect();
        let layout = self.layout.sub_layout(&[reg])?;
        let state = PureState::from_amplitudes(layout, amps)?;
        normalize(state).map(Some)
    }
}

#[derive(Serialize, Deserialize)]
struct StateDoc {
    layout: RegisterLayout,
    amplitudes: Vec<[f64; 2]>,
}

impl Serialize for PureState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        StateDoc {
            layout: self.layout.clone(),
            amplitudes: self.amplitudes.iter().map(|a| [a.re, a.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = StateDoc::deserialize(deserializer)?;
        let amps = doc
            .amplitudes
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        PureState::from_amplitudes(doc.layout, amps).map_err(serde::de::Error::custom)
    }
}

/// What a [`StateDistance`] measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceKind {
    /// 1 − |⟨a|b⟩| between unit vectors.
    Pure,
    /// Total variation between outcome distributions.
    Distribution,
    /// Frobenius norm of a density-matrix difference.
    Frobenius,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateDistance {
    pub kind: DistanceKind,
    pub value: f64,
}

impl StateDistance {
    pub fn new(kind: DistanceKind, value: f64) -> Self {
        // rounding can push 1 - |<a|b>| a hair below zero
        StateDistance {
            kind,
            value: value.max(0.0),
        }
    }

    pub fn within(&self, tol: f64) -> bool {
        self.value < tol
    }
}

/// A computational basis state with the given register values.
pub fn make_basis_state(layout: &RegisterLayout, assignments: &[(&str, u64)]) -> Result<PureState> {
    let index = layout.encode(assignments)?;
    let mut state = PureState::zeros(layout.clone());
    state.amplitudes[index] = Complex64::new(1.0, 0.0);
    Ok(state)
}

/// Rescales to unit norm. A zero vector is a degenerate-state error.
pub fn normalize(state: PureState) -> Result<PureState> {
    let norm = state.norm_sqr().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Degenerate("cannot normalize a zero-norm vector".into()));
    }
    // already unit within rounding: leave untouched so normalize is idempotent
    if (norm - 1.0).abs() <= 8.0 * f64::EPSILON {
        return Ok(state);
    }
    Ok(state.scaled(Complex64::new(1.0 / norm, 0.0)))
}

/// 1 − |⟨a|b⟩| for unit vectors; zero exactly when the states differ by a global phase.
pub fn compare_up_to_global_phase(a: &PureState, b: &PureState) -> Result<StateDistance> {
    let overlap = a.inner(b)?.norm();
    Ok(StateDistance::new(DistanceKind::Pure, 1.0 - overlap))
}

/// Builds a state over `layout` from a sparse list of `(assignments, amplitude)` terms.
pub fn state_from_terms(layout: &RegisterLayout, terms: &[(Vec<(&str, u64)>, Complex64)]) -> Result<PureState> {
    let mut state = PureState::zeros(layout.clone());
    for (assign, amp) in terms {
        let idx = layout.encode(assign)?;
        state.amplitudes[idx] += amp;
    }
    Ok(state)
}

/// Register values for every basis index with nonzero amplitude.
pub fn support(state: &PureState, tol: f64) -> BTreeMap<usize, Complex64> {
    state
        .amplitudes
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm() > tol)
        .map(|(i, a)| (i, *a))
        .collect()
}
