//! Unitary operators acting on named registers.
//!
//! Oracles are basis permutations of the amplitude vector and the Fourier
//! transform has two interchangeable routes: a dense O(N²) sum per register
//! slice and a radix-2 butterfly network. Both act on every slice of the
//! other registers independently.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{PureState, Register};

/// A classical function `{0,1}^n -> {0,1}^m` given as a lookup table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct FunctionTable {
    input_bits: usize,
    output_bits: usize,
    table: Vec<u64>,
}

#[derive(Deserialize)]
struct RawTable {
    input_bits: usize,
    output_bits: usize,
    table: Vec<u64>,
}

impl TryFrom<RawTable> for FunctionTable {
    type Error = Error;
    fn try_from(raw: RawTable) -> Result<Self> {
        FunctionTable::new(raw.input_bits, raw.output_bits, raw.table)
    }
}

fn check_table(rows: usize, output_bits: usize, table: &[u64]) -> Result<()> {
    if output_bits >= 64 {
        return Err(Error::Usage("output width must be below 64 bits".into()));
    }
    if table.len() != rows {
        return Err(Error::Shape(format!("table needs {rows} entries, got {}", table.len())));
    }
    if let Some((i, v)) = table.iter().enumerate().find(|(_, &v)| v >> output_bits != 0) {
        return Err(Error::Shape(format!(
            "entry {i} = {v} does not fit in {output_bits} output bits"
        )));
    }
    Ok(())
}

impl FunctionTable {
    pub fn new(input_bits: usize, output_bits: usize, table: Vec<u64>) -> Result<Self> {
        if input_bits >= 32 {
            return Err(Error::Usage("input width must be below 32 bits".into()));
        }
        check_table(1 << input_bits, output_bits, &table)?;
        Ok(FunctionTable {
            input_bits,
            output_bits,
            table,
        })
    }

    pub fn from_fn(input_bits: usize, output_bits: usize, f: impl Fn(u64) -> u64) -> Result<Self> {
        let table = (0..1u64 << input_bits).map(f).collect();
        Self::new(input_bits, output_bits, table)
    }

    /// `f(x) = base^x mod modulus` over `input_bits`-bit inputs, written into
    /// `output_bits`-bit outputs.
    pub fn modexp(base: u64, modulus: u64, input_bits: usize, output_bits: usize) -> Result<Self> {
        if modulus < 2 {
            return Err(Error::Usage(format!("modulus must be at least 2, got {modulus}")));
        }
        let mut table = Vec::with_capacity(1 << input_bits);
        let mut acc = 1 % modulus;
        for _ in 0..1u64 << input_bits {
            table.push(acc);
            acc = ((acc as u128 * base as u128) % modulus as u128) as u64;
        }
        Self::new(input_bits, output_bits, table)
    }

    /// The drawer indicator `f_k(x) = [x == k]` with a one-bit output.
    pub fn indicator(input_bits: usize, marked: u64) -> Result<Self> {
        if marked >> input_bits != 0 {
            return Err(Error::Usage(format!(
                "marked item {marked} needs more than {input_bits} bits"
            )));
        }
        Self::from_fn(input_bits, 1, |x| (x == marked) as u64)
    }

    pub fn input_bits(&self) -> usize {
        self.input_bits
    }

    pub fn output_bits(&self) -> usize {
        self.output_bits
    }

    pub fn table(&self) -> &[u64] {
        &self.table
    }

    pub fn eval(&self, x: u64) -> u64 {
        self.table[x as usize]
    }
}

/// `F(k, x) = f_k(x)`: a family of functions selected by a mode register.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawModedTable")]
pub struct ModedFunctionTable {
    mode_bits: usize,
    input_bits: usize,
    output_bits: usize,
    /// Row-major over `(k, x)`: entry `k * 2^input_bits + x`.
    table: Vec<u64>,
}

#[derive(Deserialize)]
struct RawModedTable {
    mode_bits: usize,
    input_bits: usize,
    output_bits: usize,
    table: Vec<u64>,
}

impl TryFrom<RawModedTable> for ModedFunctionTable {
    type Error = Error;
    fn try_from(raw: RawModedTable) -> Result<Self> {
        ModedFunctionTable::new(raw.mode_bits, raw.input_bits, raw.output_bits, raw.table)
    }
}

impl ModedFunctionTable {
    pub fn new(mode_bits: usize, input_bits: usize, output_bits: usize, table: Vec<u64>) -> Result<Self> {
        if mode_bits + input_bits >= 32 {
            return Err(Error::Usage("mode plus input width must be below 32 bits".into()));
        }
        check_table(1 << (mode_bits + input_bits), output_bits, &table)?;
        Ok(ModedFunctionTable {
            mode_bits,
            input_bits,
            output_bits,
            table,
        })
    }

    pub fn from_fn(
        mode_bits: usize,
        input_bits: usize,
        output_bits: usize,
        f: impl Fn(u64, u64) -> u64,
    ) -> Result<Self> {
        let mut table = Vec::with_capacity(1 << (mode_bits + input_bits));
        for k in 0..1u64 << mode_bits {
            for x in 0..1u64 << input_bits {
                table.push(f(k, x));
            }
        }
        Self::new(mode_bits, input_bits, output_bits, table)
    }

    /// `F(k, x) = δ_{k,x}` over equal-width mode and input registers.
    pub fn kronecker_delta(bits: usize) -> Result<Self> {
        Self::from_fn(bits, bits, 1, |k, x| (k == x) as u64)
    }

    pub fn mode_bits(&self) -> usize {
        self.mode_bits
    }

    pub fn input_bits(&self) -> usize {
        self.input_bits
    }

    pub fn output_bits(&self) -> usize {
        self.output_bits
    }

    pub fn eval(&self, k: u64, x: u64) -> u64 {
        self.table[((k as usize) << self.input_bits) | x as usize]
    }

    /// The function selected by mode `k`.
    pub fn mode(&self, k: u64) -> Result<FunctionTable> {
        let rows = 1usize << self.input_bits;
        let start = (k as usize) * rows;
        let slice = self
            .table
            .get(start..start + rows)
            .ok_or_else(|| Error::Usage(format!("mode {k} out of range")))?;
        FunctionTable::new(self.input_bits, self.output_bits, slice.to_vec())
    }
}

fn register_pair<'a>(state: &'a PureState, a: &str, b: &str) -> Result<(&'a Register, &'a Register)> {
    if a == b {
        return Err(Error::Shape(format!("register {a} used twice")));
    }
    Ok((state.layout().register(a)?, state.layout().register(b)?))
}

fn expect_width(reg: &Register, bits: usize, what: &str) -> Result<()> {
    if reg.qubits != bits {
        return Err(Error::Shape(format!(
            "register {} has {} qubits but the {what} needs {bits}",
            reg.name, reg.qubits
        )));
    }
    Ok(())
}

/// Runs `transform` on the amplitudes of `reg`, once for every assignment of
/// the remaining registers.
fn for_each_slice(state: &mut PureState, reg: &str, mut transform: impl FnMut(&mut [Complex64])) -> Result<()> {
    let reg = state.layout().register(reg)?.clone();
    let total = state.layout().dim();
    let mut buf = vec![Complex64::new(0.0, 0.0); reg.dim()];
    let amps = state.amplitudes_mut();
    for base in reg.bases(total) {
        for (v, slot) in buf.iter_mut().enumerate() {
            *slot = amps[base | (v << reg.offset)];
        }
        transform(&mut buf);
        for (v, val) in buf.iter().enumerate() {
            amps[base | (v << reg.offset)] = *val;
        }
    }
    Ok(())
}

/// `H^{⊗q}` on every qubit of `reg`.
pub fn hadamard_all(mut state: PureState, reg: &str) -> Result<PureState> {
    let reg = state.layout().register(reg)?.clone();
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let amps = state.amplitudes_mut();
    for q in 0..reg.qubits {
        let bit = 1usize << (reg.offset + q);
        for i in 0..amps.len() {
            if i & bit == 0 {
                let a = amps[i];
                let b = amps[i | bit];
                amps[i] = (a + b) * h;
                amps[i | bit] = (a - b) * h;
            }
        }
    }
    Ok(state)
}

/// `e^{2πi·sign·j/n}`, exact on the quarter turns.
fn root_of_unity(j: usize, n: usize, sign: f64) -> Complex64 {
    let j = j % n;
    if (4 * j).is_multiple_of(n) {
        return match 4 * j / n {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, sign),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -sign),
        };
    }
    Complex64::from_polar(1.0, sign * 2.0 * PI * j as f64 / n as f64)
}

/// `1/√(2^qubits)`, built from exact powers of two.
fn inv_sqrt_dim(qubits: usize) -> f64 {
    let half = (qubits / 2) as i32;
    let s = 0.5f64.powi(half);
    if qubits % 2 == 1 {
        s * FRAC_1_SQRT_2
    } else {
        s
    }
}

fn direction(inverse: bool) -> f64 {
    if inverse {
        -1.0
    } else {
        1.0
    }
}

/// Dense transform `y_c = (1/√N) Σ_x e^{±2πi cx/N} a_x` on one slice.
pub fn dft_dense_slice(input: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = input.len();
    let qubits = n.trailing_zeros() as usize;
    let scale = inv_sqrt_dim(qubits);
    let sign = direction(inverse);
    (0..n)
        .map(|c| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, a) in input.iter().enumerate() {
                acc += a * root_of_unity((c * x) % n, n, sign);
            }
            acc * scale
        })
        .collect()
}

/// In-place radix-2 butterfly network computing the same transform as
/// [`dft_dense_slice`].
pub fn dft_butterfly_slice(data: &mut [Complex64], inverse: bool) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    let bits = n.trailing_zeros();
    if bits > 0 {
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if i < j {
                data.swap(i, j);
            }
        }
    }
    let sign = direction(inverse);
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let twiddles: Vec<Complex64> = (0..half).map(|j| root_of_unity(j, len, sign)).collect();
        for start in (0..n).step_by(len) {
            for j in 0..half {
                let u = data[start + j];
                let v = data[start + j + half] * twiddles[j];
                data[start + j] = u + v;
                data[start + j + half] = u - v;
            }
        }
        len <<= 1;
    }
    let scale = inv_sqrt_dim(bits as usize);
    for a in data.iter_mut() {
        *a *= scale;
    }
}

/// Quantum Fourier transform on `reg` (butterfly route).
pub fn qft(mut state: PureState, reg: &str, inverse: bool) -> Result<PureState> {
    for_each_slice(&mut state, reg, |slice| dft_butterfly_slice(slice, inverse))?;
    Ok(state)
}

/// Quantum Fourier transform on `reg` (dense route).
pub fn qft_dense(mut state: PureState, reg: &str, inverse: bool) -> Result<PureState> {
    for_each_slice(&mut state, reg, |slice| {
        let out = dft_dense_slice(slice, inverse);
        slice.copy_from_slice(&out);
    })?;
    Ok(state)
}

/// `|x⟩|y⟩ -> |x⟩|y ⊕ f(x)⟩`.
pub fn oracle_xor(state: PureState, f: &FunctionTable, in_reg: &str, out_reg: &str) -> Result<PureState> {
    let (input, output) = register_pair(&state, in_reg, out_reg)?;
    expect_width(input, f.input_bits, "function input")?;
    expect_width(output, f.output_bits, "function output")?;
    let (input, output) = (input.clone(), output.clone());
    Ok(permute(state, |i| {
        let x = input.value(i) as u64;
        let y = output.value(i) as u64;
        output.with_value(i, (y ^ f.eval(x)) as usize)
    }))
}

/// `|k⟩|x⟩|y⟩ -> |k⟩|x⟩|y ⊕ F(k,x)⟩`.
pub fn oracle_moded(
    state: PureState,
    f: &ModedFunctionTable,
    mode_reg: &str,
    in_reg: &str,
    out_reg: &str,
) -> Result<PureState> {
    let (mode, input) = register_pair(&state, mode_reg, in_reg)?;
    let output = state.layout().register(out_reg)?;
    if out_reg == mode_reg || out_reg == in_reg {
        return Err(Error::Shape(format!("register {out_reg} used twice")));
    }
    expect_width(mode, f.mode_bits, "mode")?;
    expect_width(input, f.input_bits, "function input")?;
    expect_width(output, f.output_bits, "function output")?;
    let (mode, input, output) = (mode.clone(), input.clone(), output.clone());
    Ok(permute(state, |i| {
        let k = mode.value(i) as u64;
        let x = input.value(i) as u64;
        let y = output.value(i) as u64;
        output.with_value(i, (y ^ f.eval(k, x)) as usize)
    }))
}

/// Moves the amplitude at every index `i` to `target(i)`; `target` must be a bijection.
fn permute(state: PureState, target: impl Fn(usize) -> usize) -> PureState {
    let (layout, amps) = state.into_parts();
    let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
    for (i, a) in amps.into_iter().enumerate() {
        out[target(i)] = a;
    }
    PureState::from_amplitudes(layout, out).expect("permutation keeps the dimension")
}

/// Inversion about the mean, `2|s⟩⟨s| − I`, on `reg`.
pub fn grover_diffusion(mut state: PureState, reg: &str) -> Result<PureState> {
    for_each_slice(&mut state, reg, |slice| {
        let mean = slice.iter().sum::<Complex64>() / slice.len() as f64;
        for a in slice.iter_mut() {
            *a = mean * 2.0 - *a;
        }
    })?;
    Ok(state)
}

/// The function queried by one Grover iteration.
#[derive(Debug, Clone, Copy)]
pub enum Oracle<'a> {
    /// A single function on the search register.
    Xor(&'a FunctionTable),
    /// A moded family with its mode register.
    Moded {
        table: &'a ModedFunctionTable,
        mode_reg: &'a str,
    },
}

/// One oracle query into `f_reg` followed by diffusion on `x_reg`.
///
/// `f_reg` is expected to hold `(|0⟩−|1⟩)/√2`, so the query acts as the phase
/// `(−1)^{f(x)}` on `x_reg` and leaves `f_reg` unchanged.
pub fn grover_iteration(state: PureState, oracle: Oracle<'_>, x_reg: &str, f_reg: &str) -> Result<PureState> {
    let state = match oracle {
        Oracle::Xor(table) => oracle_xor(state, table, x_reg, f_reg)?,
        Oracle::Moded { table, mode_reg } => oracle_moded(state, table, mode_reg, x_reg, f_reg)?,
    };
    grover_diffusion(state, x_reg)
}

/// `⌊(π/4)√n⌋` iterations for `n` items; one for the four-item case.
pub fn grover_iterations(items: u64) -> usize {
    ((PI / 4.0) * (items as f64).sqrt()).floor() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{compare_up_to_global_phase, make_basis_state, normalize, state_from_terms, RegisterLayout};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn layout(regs: &[(&str, usize)]) -> RegisterLayout {
        RegisterLayout::new(regs.iter().map(|(n, q)| (n.to_string(), *q))).unwrap()
    }

    #[test]
    fn hadamard_single_qubit() {
        let s = make_basis_state(&layout(&[("X", 1)]), &[]).unwrap();
        let s = hadamard_all(s, "X").unwrap();
        assert_eq!(s.amplitudes(), &[c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]);
    }

    #[test]
    fn hadamard_two_qubits_is_uniform_and_involutive() {
        let start = make_basis_state(&layout(&[("X", 2)]), &[]).unwrap();
        let s = hadamard_all(start.clone(), "X").unwrap();
        for a in s.amplitudes() {
            assert!((a - c(0.5, 0.0)).norm() < 1e-15);
        }
        let back = hadamard_all(s, "X").unwrap();
        assert!(back.max_abs_diff(&start).unwrap() < 1e-10);
        assert!(matches!(hadamard_all(back, "Y"), Err(Error::UnknownRegister(_))));
    }

    #[test]
    fn qft_of_zero_is_uniform() {
        let s = make_basis_state(&layout(&[("X", 2)]), &[]).unwrap();
        for s in [qft(s.clone(), "X", false).unwrap(), qft_dense(s, "X", false).unwrap()] {
            for a in s.amplitudes() {
                assert!((a - c(0.5, 0.0)).norm() < 1e-15);
            }
        }
    }

    fn brute_dft_probability(support: &[u64], n: usize, c_out: usize) -> f64 {
        let big_n = (1usize << n) as f64;
        let amp = 1.0 / (support.len() as f64).sqrt() / big_n.sqrt();
        let mut acc = c(0.0, 0.0);
        for &x in support {
            acc += Complex64::from_polar(amp, 2.0 * PI * c_out as f64 * x as f64 / big_n);
        }
        acc.norm_sqr()
    }

    #[test]
    fn qft_of_periodic_comb() {
        let l = layout(&[("X", 3)]);
        // spacing 2 on N = 8: brute force puts weight 1/2 on {0, 4}
        // spacing 4 on N = 8: brute force puts weight 1/4 on {0, 2, 4, 6}
        let cases: [(&[u64], [f64; 8]); 2] = [
            (&[0, 2, 4, 6], [0.5, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0]),
            (&[1, 5], [0.25, 0.0, 0.25, 0.0, 0.25, 0.0, 0.25, 0.0]),
        ];
        for (support, frozen) in cases {
            let comb = normalize(
                state_from_terms(
                    &l,
                    &support
                        .iter()
                        .map(|&x| (vec![("X", x)], c(1.0, 0.0)))
                        .collect::<Vec<_>>(),
                )
                .unwrap(),
            )
            .unwrap();
            let fast = qft(comb.clone(), "X", false).unwrap();
            let dense = qft_dense(comb, "X", false).unwrap();
            for (cidx, &want) in frozen.iter().enumerate() {
                let brute = brute_dft_probability(support, 3, cidx);
                assert!((brute - want).abs() < 1e-12);
                assert!((fast.amplitude(cidx).norm_sqr() - want).abs() < 1e-12, "c={cidx}");
                assert!((dense.amplitude(cidx).norm_sqr() - want).abs() < 1e-12, "c={cidx}");
            }
        }
    }

    #[test]
    fn qft_matches_hadamard_on_one_qubit_exactly() {
        let l = layout(&[("A", 2), ("X", 1)]);
        let s = normalize(
            PureState::from_amplitudes(
                l,
                vec![
                    c(0.1, 0.7),
                    c(-0.3, 0.2),
                    c(0.5, -0.5),
                    c(0.9, 0.0),
                    c(0.0, 0.0),
                    c(-0.4, 0.4),
                    c(0.25, 0.1),
                    c(0.3, 0.3),
                ],
            )
            .unwrap(),
        )
        .unwrap();
        let h = hadamard_all(s.clone(), "X").unwrap();
        assert_eq!(h, qft(s.clone(), "X", false).unwrap());
        assert_eq!(h, qft_dense(s, "X", false).unwrap());
    }

    #[test]
    fn oracle_xor_writes_function_into_output() {
        let l = layout(&[("X", 2), ("F", 2)]);
        let f = FunctionTable::new(2, 2, vec![3, 1, 0, 2]).unwrap();
        let s = make_basis_state(&l, &[]).unwrap();
        let s = hadamard_all(s, "X").unwrap();
        let s = oracle_xor(s, &f, "X", "F").unwrap();
        for x in 0..4u64 {
            let idx = l.encode(&[("X", x), ("F", f.eval(x))]).unwrap();
            assert!((s.amplitude(idx) - c(0.5, 0.0)).norm() < 1e-15);
        }
        let zero = FunctionTable::new(2, 2, vec![0; 4]).unwrap();
        assert_eq!(oracle_xor(s.clone(), &zero, "X", "F").unwrap(), s);
    }

    #[test]
    fn oracle_shape_errors() {
        let l = layout(&[("X", 2), ("F", 1)]);
        let s = make_basis_state(&l, &[]).unwrap();
        let f = FunctionTable::new(2, 2, vec![0; 4]).unwrap();
        assert!(matches!(oracle_xor(s.clone(), &f, "X", "F"), Err(Error::Shape(_))));
        assert!(matches!(oracle_xor(s, &f, "X", "X"), Err(Error::Shape(_))));
        assert!(FunctionTable::new(2, 1, vec![0, 1, 2, 0]).is_err());
        assert!(FunctionTable::new(2, 1, vec![0, 1]).is_err());
    }

    #[test]
    fn moded_oracle_delta() {
        let l = layout(&[("K", 2), ("X", 2), ("F", 1)]);
        let delta = ModedFunctionTable::kronecker_delta(2).unwrap();
        let s = make_basis_state(&l, &[("K", 2), ("X", 2), ("F", 0)]).unwrap();
        let s = oracle_moded(s, &delta, "K", "X", "F").unwrap();
        assert_eq!(s, make_basis_state(&l, &[("K", 2), ("X", 2), ("F", 1)]).unwrap());

        let s = make_basis_state(&l, &[("K", 2), ("X", 1), ("F", 0)]).unwrap();
        let out = oracle_moded(s.clone(), &delta, "K", "X", "F").unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn moded_oracle_phase_kickback() {
        // XOR on (|0⟩−|1⟩)/√2 swaps the two branches: the register picks up (−1)^{F(k,x)}
        let l = layout(&[("K", 2), ("X", 2), ("F", 1)]);
        let delta = ModedFunctionTable::kronecker_delta(2).unwrap();
        for k in 0..4u64 {
            for x in 0..4u64 {
                let minus = state_from_terms(
                    &l,
                    &[
                        (vec![("K", k), ("X", x), ("F", 0)], c(FRAC_1_SQRT_2, 0.0)),
                        (vec![("K", k), ("X", x), ("F", 1)], c(-FRAC_1_SQRT_2, 0.0)),
                    ],
                )
                .unwrap();
                let out = oracle_moded(minus.clone(), &delta, "K", "X", "F").unwrap();
                let sign = if k == x { -1.0 } else { 1.0 };
                assert!(out.max_abs_diff(&minus.clone().scaled(c(sign, 0.0))).unwrap() < 1e-15);
            }
        }
    }

    fn minus_f(l: &RegisterLayout, x_amps: &[(u64, Complex64)]) -> PureState {
        let mut terms = Vec::new();
        for &(x, a) in x_amps {
            terms.push((vec![("X", x), ("F", 0)], a * FRAC_1_SQRT_2));
            terms.push((vec![("X", x), ("F", 1)], -a * FRAC_1_SQRT_2));
        }
        state_from_terms(l, &terms).unwrap()
    }

    #[test]
    fn one_grover_iteration_on_four_items_is_exact() {
        // (1/2)(−1,1,1,1) has mean 1/4, so 2·mean − a gives (1,0,0,0)
        let l = layout(&[("X", 2), ("F", 1)]);
        for k in 0..4u64 {
            let uniform = minus_f(&l, &[0u64, 1, 2, 3].map(|x| (x, c(0.5, 0.0))));
            let f = FunctionTable::indicator(2, k).unwrap();
            let out = grover_iteration(uniform, Oracle::Xor(&f), "X", "F").unwrap();
            let expected = minus_f(&l, &[(k, c(1.0, 0.0))]);
            assert!(out.max_abs_diff(&expected).unwrap() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn diffusion_fixes_uniform() {
        let l = layout(&[("X", 3), ("F", 1)]);
        let uniform = minus_f(
            &l,
            &(0..8u64).map(|x| (x, c(8f64.sqrt().recip(), 0.0))).collect::<Vec<_>>(),
        );
        let zero = FunctionTable::new(3, 1, vec![0; 8]).unwrap();
        let out = grover_iteration(uniform.clone(), Oracle::Xor(&zero), "X", "F").unwrap();
        assert!(compare_up_to_global_phase(&out, &uniform).unwrap().value < 1e-10);
        assert!(out.max_abs_diff(&uniform).unwrap() < 1e-10);
    }

    #[test]
    fn iteration_counts() {
        assert_eq!(grover_iterations(4), 1);
        assert_eq!(grover_iterations(16), 3);
        assert_eq!(grover_iterations(64), 6);
        assert_eq!(grover_iterations(256), 12);
    }

    #[test]
    fn modexp_table() {
        let f = FunctionTable::modexp(7, 15, 4, 4).unwrap();
        assert_eq!(&f.table()[..6], &[1, 7, 4, 13, 1, 7]);
    }

    #[test]
    fn table_json() {
        let f = FunctionTable::new(1, 2, vec![3, 1]).unwrap();
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(text, r#"{"input_bits":1,"output_bits":2,"table":[3,1]}"#);
        assert_eq!(serde_json::from_str::<FunctionTable>(&text).unwrap(), f);
        assert!(serde_json::from_str::<FunctionTable>(r#"{"input_bits":1,"output_bits":1,"table":[3,1]}"#).is_err());
        let m = ModedFunctionTable::kronecker_delta(1).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(
            text,
            r#"{"mode_bits":1,"input_bits":1,"output_bits":1,"table":[1,0,0,1]}"#
        );
        assert_eq!(serde_json::from_str::<ModedFunctionTable>(&text).unwrap(), m);
    }
}
