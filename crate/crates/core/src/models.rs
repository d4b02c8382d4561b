//! Problem-instance definitions for the two cascade models: distortion and
//! action-cost tables, budgets, and their expectation functionals.

use thiserror::Error;

use crate::prob::{CondKernel, FiniteAlphabet, JointPmf, ProbError};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error("{0}")]
    Invalid(String),
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
}

/// Per-symbol distortion `d(x, x_hat) >= 0`, stored row-major over
/// `(source, recon)`. The largest entry is the table's `d_max`.
#[derive(Clone, Debug)]
pub struct DistortionTable {
    source: FiniteAlphabet,
    recon: FiniteAlphabet,
    values: Vec<f64>,
}

impl DistortionTable {
    pub fn new(
        source: FiniteAlphabet,
        recon: FiniteAlphabet,
        values: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if values.len() != source.size() * recon.size() {
            return Err(ModelError::Invalid(format!(
                "distortion table has {} entries, expected {}",
                values.len(),
                source.size() * recon.size()
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if v < 0.0 || !v.is_finite() {
                return Err(ModelError::Invalid(format!(
                    "distortion entry {i} is {v}, must be finite and >= 0"
                )));
            }
        }
        Ok(DistortionTable {
            source,
            recon,
            values,
        })
    }

    /// 0/1 distortion on symbol-index equality.
    pub fn hamming(source: FiniteAlphabet, recon: FiniteAlphabet) -> Self {
        let values = (0..source.size())
            .flat_map(|i| (0..recon.size()).map(move |j| if i == j { 0.0 } else { 1.0 }))
            .collect();
        DistortionTable {
            source,
            recon,
            values,
        }
    }

    pub fn source(&self) -> &FiniteAlphabet {
        &self.source
    }

    pub fn recon(&self) -> &FiniteAlphabet {
        &self.recon
    }

    pub fn value(&self, x: usize, xh: usize) -> f64 {
        self.values[x * self.recon.size() + xh]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn d_max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Smallest achievable distortion for a given source symbol.
    pub fn row_min(&self, x: usize) -> f64 {
        (0..self.recon.size())
            .map(|j| self.value(x, j))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Per-action acquisition cost `Λ(a) >= 0`.
#[derive(Clone, Debug)]
pub struct CostTable {
    action: FiniteAlphabet,
    values: Vec<f64>,
}

impl CostTable {
    pub fn new(action: FiniteAlphabet, values: Vec<f64>) -> Result<Self, ModelError> {
        if values.len() != action.size() {
            return Err(ModelError::Invalid(format!(
                "cost table has {} entries, expected {}",
                values.len(),
                action.size()
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if v < 0.0 || !v.is_finite() {
                return Err(ModelError::Invalid(format!(
                    "cost entry {i} is {v}, must be finite and >= 0"
                )));
            }
        }
        Ok(CostTable { action, values })
    }

    pub fn zero(action: FiniteAlphabet) -> Self {
        let values = vec![0.0; action.size()];
        CostTable { action, values }
    }

    pub fn action(&self) -> &FiniteAlphabet {
        &self.action
    }

    pub fn value(&self, a: usize) -> f64 {
        self.values[a]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lambda_max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn lambda_min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Inclusive distortion/cost budgets `(D1, D2, Γ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstraintBudget {
    pub d1: f64,
    pub d2: f64,
    pub gamma: f64,
}

impl ConstraintBudget {
    pub fn new(d1: f64, d2: f64, gamma: f64) -> Result<Self, ModelError> {
        for (name, v) in [("d1", d1), ("d2", d2), ("gamma", gamma)] {
            if v < 0.0 || !v.is_finite() {
                return Err(ModelError::Invalid(format!(
                    "budget {name} is {v}, must be finite and >= 0"
                )));
            }
        }
        Ok(ConstraintBudget { d1, d2, gamma })
    }

    /// Budget loose enough that every decision is feasible.
    pub fn loose(d1: &DistortionTable, d2: &DistortionTable, cost: &CostTable) -> Self {
        ConstraintBudget {
            d1: d1.d_max() + 1.0,
            d2: d2.d_max() + 1.0,
            gamma: cost.lambda_max() + 1.0,
        }
    }
}

/// One violation found by model validation, with a path to the field.
#[derive(Clone, Debug)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

/// Validation report; empty means the model is well formed.
#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, path: &str, message: String) {
        self.violations.push(Violation {
            path: path.to_string(),
            message,
        });
    }
}

fn check_kernel_slices(report: &mut ValidationReport, path: &str, k: &CondKernel) {
    for s in 0..k.from_total() {
        let sum: f64 = k.slice(s).iter().sum();
        if (sum - 1.0).abs() > crate::prob::NORMALIZATION_TOL {
            report.push(
                &format!("{path}.values[slice {s}]"),
                format!("conditional slice sums to {sum}, expected 1"),
            );
        }
    }
    for (i, &v) in k.values().iter().enumerate() {
        if v < 0.0 {
            report.push(&format!("{path}.values[{i}]"), format!("negative entry {v}"));
        }
    }
}

fn check_table(report: &mut ValidationReport, path: &str, values: &[f64]) {
    for (i, &v) in values.iter().enumerate() {
        if v < 0.0 || !v.is_finite() {
            report.push(
                &format!("{path}.values[{i}]"),
                format!("entry {v} out of range [0, inf)"),
            );
        }
    }
}

/// The cascade model: source pair `(X, Y)` at Node 1, side information `Y`
/// at Node 2, and a vending-machine channel `p(z|a, y)` feeding Node 3.
#[derive(Clone, Debug)]
pub struct CascadeVendingModel {
    pub x: FiniteAlphabet,
    pub y: FiniteAlphabet,
    pub z: FiniteAlphabet,
    pub a: FiniteAlphabet,
    pub x1hat: FiniteAlphabet,
    pub x2hat: FiniteAlphabet,
    /// Joint source pmf over `(X, Y)`.
    pub source: JointPmf,
    /// Channel `(A, Y) -> Z`.
    pub vm_channel: CondKernel,
    pub d1: DistortionTable,
    pub d2: DistortionTable,
    pub cost: CostTable,
}

impl CascadeVendingModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        source: JointPmf,
        vm_channel: CondKernel,
        d1: DistortionTable,
        d2: DistortionTable,
        cost: CostTable,
    ) -> Result<Self, ModelError> {
        let x = source.axis("X")?.clone();
        let y = source.axis("Y")?.clone();
        if vm_channel.from_axes().len() != 2 || vm_channel.to_axes().len() != 1 {
            return Err(ModelError::Invalid(
                "vm_channel must condition on (A, Y) and emit Z".into(),
            ));
        }
        let a = vm_channel.from_axes()[0].clone();
        let z = vm_channel.to_axes()[0].clone();
        if a.name() != "A" || vm_channel.from_axes()[1].name() != "Y" || z.name() != "Z" {
            return Err(ModelError::Invalid(
                "vm_channel axes must be named (A, Y) -> Z".into(),
            ));
        }
        if vm_channel.from_axes()[1] != y {
            return Err(ModelError::AlphabetMismatch(
                "vm_channel Y axis differs from the source Y axis".into(),
            ));
        }
        let x1hat = d1.recon().clone();
        let x2hat = d2.recon().clone();
        let m = CascadeVendingModel {
            x,
            y,
            z,
            a,
            x1hat,
            x2hat,
            source,
            vm_channel,
            d1,
            d2,
            cost,
        };
        let report = m.validate();
        if !report.is_ok() {
            return Err(ModelError::Invalid(format!(
                "{} at {}",
                report.violations[0].message, report.violations[0].path
            )));
        }
        Ok(m)
    }

    /// Check axis wiring, normalization and table shapes; the report lists
    /// every violation with a path to the offending field.
    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::default();
        if self.source.axes().len() != 2
            || self.source.axes()[0].name() != "X"
            || self.source.axes()[1].name() != "Y"
        {
            rep.push("source.axes", "source must be a joint pmf over (X, Y)".into());
        }
        let sum: f64 = self.source.values().iter().sum();
        if (sum - 1.0).abs() > crate::prob::NORMALIZATION_TOL {
            rep.push("source.values", format!("pmf sums to {sum}, expected 1"));
        }
        check_kernel_slices(&mut rep, "vm_channel", &self.vm_channel);
        if self.d1.source() != &self.x {
            rep.push("d1.source_alphabet", "d1 source alphabet must be X".into());
        }
        if self.d1.recon() != &self.x1hat {
            rep.push("d1.recon_alphabet", "d1 recon alphabet must be X1".into());
        }
        if self.d2.source() != &self.x {
            rep.push("d2.source_alphabet", "d2 source alphabet must be X".into());
        }
        if self.cost.action() != &self.a {
            rep.push("cost.action_alphabet", "cost alphabet must be A".into());
        }
        check_table(&mut rep, "d1", self.d1.values());
        check_table(&mut rep, "d2", self.d2.values());
        check_table(&mut rep, "cost", self.cost.values());
        rep
    }
}

/// The cascade-broadcast model under the common-reconstruction constraint:
/// source `X` at Node 1 and a vending-machine channel `p(y|a, x)` at Node 2.
#[derive(Clone, Debug)]
pub struct BroadcastCRModel {
    pub x: FiniteAlphabet,
    pub y: FiniteAlphabet,
    pub a: FiniteAlphabet,
    pub x1hat: FiniteAlphabet,
    pub x2hat: FiniteAlphabet,
    /// Source pmf over `X`.
    pub source: JointPmf,
    /// Channel `(A, X) -> Y`.
    pub vm_channel: CondKernel,
    pub d1: DistortionTable,
    pub d2: DistortionTable,
    pub cost: CostTable,
}

impl BroadcastCRModel {
    pub fn new(
        source: JointPmf,
        vm_channel: CondKernel,
        d1: DistortionTable,
        d2: DistortionTable,
        cost: CostTable,
    ) -> Result<Self, ModelError> {
        let x = source.axis("X")?.clone();
        if vm_channel.from_axes().len() != 2 || vm_channel.to_axes().len() != 1 {
            return Err(ModelError::Invalid(
                "vm_channel must condition on (A, X) and emit Y".into(),
            ));
        }
        let a = vm_channel.from_axes()[0].clone();
        let y = vm_channel.to_axes()[0].clone();
        if a.name() != "A" || vm_channel.from_axes()[1].name() != "X" || y.name() != "Y" {
            return Err(ModelError::Invalid(
                "vm_channel axes must be named (A, X) -> Y".into(),
            ));
        }
        if vm_channel.from_axes()[1] != x {
            return Err(ModelError::AlphabetMismatch(
                "vm_channel X axis differs from the source X axis".into(),
            ));
        }
        let x1hat = d1.recon().clone();
        let x2hat = d2.recon().clone();
        let m = BroadcastCRModel {
            x,
            y,
            a,
            x1hat,
            x2hat,
            source,
            vm_channel,
            d1,
            d2,
            cost,
        };
        let report = m.validate();
        if !report.is_ok() {
            return Err(ModelError::Invalid(format!(
                "{} at {}",
                report.violations[0].message, report.violations[0].path
            )));
        }
        Ok(m)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::default();
        if self.source.axes().len() != 1 || self.source.axes()[0].name() != "X" {
            rep.push("source.axes", "source must be a pmf over X".into());
        }
        let sum: f64 = self.source.values().iter().sum();
        if (sum - 1.0).abs() > crate::prob::NORMALIZATION_TOL {
            rep.push("source.values", format!("pmf sums to {sum}, expected 1"));
        }
        check_kernel_slices(&mut rep, "vm_channel", &self.vm_channel);
        if self.d1.source() != &self.x {
            rep.push("d1.source_alphabet", "d1 source alphabet must be X".into());
        }
        if self.d2.source() != &self.x {
            rep.push("d2.source_alphabet", "d2 source alphabet must be X".into());
        }
        if self.cost.action() != &self.a {
            rep.push("cost.action_alphabet", "cost alphabet must be A".into());
        }
        check_table(&mut rep, "d1", self.d1.values());
        check_table(&mut rep, "d2", self.d2.values());
        check_table(&mut rep, "cost", self.cost.values());
        rep
    }
}

/// `E[d(X_src, X_rec)]` of a joint pmf under a distortion table.
pub fn expected_distortion(
    j: &JointPmf,
    table: &DistortionTable,
    source_axis: &str,
    recon_axis: &str,
) -> Result<f64, ModelError> {
    let m = j.marginalize(&[source_axis, recon_axis])?;
    if m.axes()[0].symbols() != table.source().symbols() {
        return Err(ModelError::AlphabetMismatch(format!(
            "axis {source_axis} does not match the table's source alphabet"
        )));
    }
    if m.axes()[1].symbols() != table.recon().symbols() {
        return Err(ModelError::AlphabetMismatch(format!(
            "axis {recon_axis} does not match the table's recon alphabet"
        )));
    }
    let nr = table.recon().size();
    let mut acc = 0.0;
    for (flat, &p) in m.values().iter().enumerate() {
        acc += p * table.values()[flat % (nr * table.source().size())];
    }
    Ok(acc)
}

/// `E[Λ(A)]` of a joint pmf under a cost table.
pub fn expected_cost(j: &JointPmf, cost: &CostTable, action_axis: &str) -> Result<f64, ModelError> {
    let m = j.marginalize(&[action_axis])?;
    if m.axes()[0].symbols() != cost.action().symbols() {
        return Err(ModelError::AlphabetMismatch(format!(
            "axis {action_axis} does not match the cost table's action alphabet"
        )));
    }
    Ok(m.values()
        .iter()
        .zip(cost.values())
        .map(|(p, c)| p * c)
        .sum())
}
