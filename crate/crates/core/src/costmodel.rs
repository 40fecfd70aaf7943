//! Stage-by-stage cost accounting for period finding.
//!
//! Classical cost is the work of writing out the explicit term-by-term
//! description of each intermediate state, so it scales with `N = 2^n` terms.
//! Quantum cost counts gate layers and measured qubits. Both are unit counts
//! under [`CostModel`], not timings.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shor::{self, InstanceSource, PeriodFindingInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    /// (I) evaluating `f` on every input.
    FunctionEvaluation,
    /// (II) restricting to the terms with the observed value of `f`.
    Filtration,
    /// (III) reading `r` off the filtered state.
    Extraction,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::FunctionEvaluation, Stage::Filtration, Stage::Extraction];

    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::FunctionEvaluation => "function-evaluation",
            Stage::Filtration => "filtration",
            Stage::Extraction => "extraction",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Unit prices. The defaults charge one unit per term, gate layer and measured
/// qubit, and credit a modular-exponentiation oracle with `n` layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub term_units: u64,
    pub gate_layer_units: u64,
    pub measurement_units: u64,
    /// Layers charged for one application of a tabulated oracle.
    pub table_oracle_layers: u64,
    /// Layers per qubit charged for a modular-exponentiation oracle.
    pub modexp_layers_per_qubit: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            term_units: 1,
            gate_layer_units: 1,
            measurement_units: 1,
            table_oracle_layers: 1,
            modexp_layers_per_qubit: 1,
        }
    }
}

/// Polynomial growth bound used by [`stage_table`]: quantum counts must stay
/// below `GROWTH_CONSTANT * n^2`.
pub const GROWTH_CONSTANT: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCost {
    pub n: usize,
    pub stage: Stage,
    pub classical_units: u64,
    pub quantum_units: u64,
}

impl CostModel {
    /// Units spent deriving the symbolic description of the next state.
    pub fn classical_symbolic_cost(&self, inst: &PeriodFindingInstance, stage: Stage) -> u64 {
        let terms = inst.dim();
        match stage {
            Stage::FunctionEvaluation | Stage::Filtration => terms * self.term_units,
            Stage::Extraction => (terms / inst.period()).max(inst.n() as u64) * self.term_units,
        }
    }

    pub fn quantum_step_cost(&self, inst: &PeriodFindingInstance, stage: Stage) -> u64 {
        let n = inst.n() as u64;
        match stage {
            Stage::FunctionEvaluation => {
                let oracle_layers = match inst.source() {
                    InstanceSource::Synthetic => self.table_oracle_layers,
                    InstanceSource::ModExp { .. } => self.modexp_layers_per_qubit * n,
                };
                (n + oracle_layers) * self.gate_layer_units
            }
            Stage::Filtration => n * self.measurement_units,
            Stage::Extraction => n * (n + 1) / 2 * self.gate_layer_units + n * self.measurement_units,
        }
    }

    pub fn stage_cost(&self, inst: &PeriodFindingInstance, stage: Stage) -> StageCost {
        StageCost {
            n: inst.n(),
            stage,
            classical_units: self.classical_symbolic_cost(inst, stage),
            quantum_units: self.quantum_step_cost(inst, stage),
        }
    }
}

pub fn classical_symbolic_cost(inst: &PeriodFindingInstance, stage: Stage) -> u64 {
    CostModel::default().classical_symbolic_cost(inst, stage)
}

pub fn quantum_step_cost(inst: &PeriodFindingInstance, stage: Stage) -> u64 {
    CostModel::default().quantum_step_cost(inst, stage)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub description: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTable {
    pub rows: Vec<StageCost>,
    pub growth_checks: Vec<GrowthCheck>,
}

impl StageTable {
    pub fn all_passed(&self) -> bool {
        self.growth_checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, n: usize, stage: Stage) -> Option<&StageCost> {
        self.rows.iter().find(|r| r.n == n && r.stage == stage)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,stage,classical_units,quantum_units\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.n, r.stage, r.classical_units, r.quantum_units
            ));
        }
        out
    }
}

/// Cost rows for the canonical instance `f(x) = x` (period `N`) at each `n`,
/// with growth checks: classical stages I and II double per extra qubit, and
/// every quantum count stays under `GROWTH_CONSTANT * n^2`.
pub fn stage_table(n_values: &[usize]) -> Result<StageTable> {
    stage_table_with(&CostModel::default(), n_values)
}

pub fn stage_table_with(model: &CostModel, n_values: &[usize]) -> Result<StageTable> {
    if n_values.is_empty() {
        return Err(Error::Usage("the stage table needs at least one n".into()));
    }
    let mut ns = n_values.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let mut rows = Vec::with_capacity(ns.len() * 3);
    for &n in &ns {
        let inst = shor::build_periodic(n, 1 << n)?;
        rows.extend(Stage::ALL.iter().map(|&s| model.stage_cost(&inst, s)));
    }
    let find = |n: usize, stage: Stage| {
        rows.iter()
            .find(|r| r.n == n && r.stage == stage)
            .expect("row was just computed")
    };
    let mut growth_checks = Vec::new();
    for pair in ns.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b != a + 1 {
            continue;
        }
        for stage in [Stage::FunctionEvaluation, Stage::Filtration] {
            let (ca, cb) = (find(a, stage).classical_units, find(b, stage).classical_units);
            growth_checks.push(GrowthCheck {
                description: format!("classical {stage} doubles from n={a} to n={b}: {ca} -> {cb}"),
                passed: cb == 2 * ca,
            });
        }
    }
    for &n in &ns {
        let bound = GROWTH_CONSTANT * (n.max(1) as u64).pow(2) * model.gate_layer_units.max(model.measurement_units);
        for stage in Stage::ALL {
            let q = find(n, stage).quantum_units;
            growth_checks.push(GrowthCheck {
                description: format!("quantum {stage} at n={n}: {q} <= {bound}"),
                passed: q <= bound,
            });
        }
    }
    Ok(StageTable { rows, growth_checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shor::{build_modexp, build_periodic};

    #[test]
    fn classical_examples() {
        let inst = build_periodic(3, 4).unwrap();
        assert_eq!(classical_symbolic_cost(&inst, Stage::FunctionEvaluation), 8);
        assert_eq!(classical_symbolic_cost(&inst, Stage::Filtration), 8);
        let single = build_periodic(0, 1).unwrap();
        for s in Stage::ALL {
            assert_eq!(classical_symbolic_cost(&single, s), 1);
        }
    }

    #[test]
    fn quantum_examples() {
        let inst = build_periodic(3, 4).unwrap();
        assert_eq!(quantum_step_cost(&inst, Stage::Filtration), 3);
        assert_eq!(quantum_step_cost(&inst, Stage::Extraction), 9);
        assert_eq!(
            quantum_step_cost(&build_periodic(1, 2).unwrap(), Stage::FunctionEvaluation),
            2
        );
        assert_eq!(
            quantum_step_cost(&build_modexp(7, 15, 4).unwrap(), Stage::FunctionEvaluation),
            8
        );
    }

    #[test]
    fn table_two_to_eight() {
        let table = stage_table(&(2..=8).collect::<Vec<_>>()).unwrap();
        assert!(table.all_passed());
        let classical: Vec<u64> = (2..=8)
            .map(|n| table.get(n, Stage::Filtration).unwrap().classical_units)
            .collect();
        assert_eq!(classical, vec![4, 8, 16, 32, 64, 128, 256]);
        let quantum: Vec<u64> = (2..=8)
            .map(|n| table.get(n, Stage::Filtration).unwrap().quantum_units)
            .collect();
        assert_eq!(quantum, vec![2, 3, 4, 5, 6, 7, 8]);
        let ratios: Vec<f64> = classical
            .iter()
            .zip(&quantum)
            .map(|(c, q)| *c as f64 / *q as f64)
            .collect();
        assert!(ratios.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn filtration_ignores_period() {
        for n in 1..=8usize {
            let counts: Vec<u64> = (1..=1u64 << n)
                .map(|r| quantum_step_cost(&build_periodic(n, r).unwrap(), Stage::Filtration))
                .collect();
            assert!(counts.iter().all(|&c| c == n as u64));
        }
    }

    #[test]
    fn csv_layout() {
        let csv = stage_table(&[2]).unwrap().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n,stage,classical_units,quantum_units"));
        assert_eq!(lines.next(), Some("2,function-evaluation,4,3"));
        assert_eq!(lines.next(), Some("2,filtration,4,2"));
        assert_eq!(lines.next(), Some("2,extraction,2,5"));
        assert!(stage_table(&[]).is_err());
    }
}
