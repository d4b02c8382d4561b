//! Exact discrete probability engine: joint pmfs over named finite axes,
//! marginalization, kernel composition, and the entropy / mutual-information
//! functionals everything else is written in terms of.
//!
//! Conventions: logarithms are base 2 (all rates in bits), `0 log 0 = 0`,
//! and zero-probability conditioning slices contribute nothing. Values are
//! immutable after construction and every operation is a pure function.

use thiserror::Error;

/// Absolute tolerance for normalization checks on construction. Inputs that
/// are farther off are rejected rather than silently renormalized.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Tiny negative mutual informations (floating-point noise) are clamped to 0.
pub const MI_CLAMP_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ProbError {
    #[error("alphabet must have at least one symbol")]
    EmptyAlphabet,
    #[error("alphabet {0:?} has duplicate symbol labels")]
    DuplicateSymbols(String),
    #[error("duplicate axis name {0:?}")]
    DuplicateAxis(String),
    #[error("unknown axis name {0:?}")]
    UnknownAxis(String),
    #[error("axis set must be nonempty")]
    EmptyAxisSet,
    #[error("axis sets overlap on {0:?}")]
    OverlappingSets(String),
    #[error("tensor has {got} entries, expected {expected}")]
    ShapeMismatch { got: usize, expected: usize },
    #[error("negative entry {value} at flat index {index}")]
    NegativeEntry { index: usize, value: f64 },
    #[error("pmf sums to {sum}, expected 1 within {tol}")]
    NotNormalized { sum: f64, tol: f64 },
    #[error("kernel slice {slice} sums to {sum}, expected 1 within {tol}")]
    SliceNotNormalized { slice: usize, sum: f64, tol: f64 },
    #[error("kernel axis {0:?} does not match any base axis")]
    KernelFromAxisMissing(String),
    #[error("axis {name:?} mismatch: {detail}")]
    AxisMismatch { name: String, detail: String },
}

/// A named finite alphabet with distinct symbol labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteAlphabet {
    name: String,
    symbols: Vec<String>,
}

impl FiniteAlphabet {
    pub fn new(name: impl Into<String>, symbols: Vec<String>) -> Result<Self, ProbError> {
        let name = name.into();
        if symbols.is_empty() {
            return Err(ProbError::EmptyAlphabet);
        }
        for i in 0..symbols.len() {
            for j in (i + 1)..symbols.len() {
                if symbols[i] == symbols[j] {
                    return Err(ProbError::DuplicateSymbols(name));
                }
            }
        }
        Ok(FiniteAlphabet { name, symbols })
    }

    /// Alphabet with symbols `"0", "1", ..., "size-1"`.
    pub fn indexed(name: impl Into<String>, size: usize) -> Result<Self, ProbError> {
        FiniteAlphabet::new(name, (0..size).map(|i| i.to_string()).collect())
    }

    pub fn binary(name: impl Into<String>) -> Self {
        FiniteAlphabet::indexed(name, 2).expect("binary alphabet")
    }

    pub fn singleton(name: impl Into<String>) -> Self {
        FiniteAlphabet::indexed(name, 1).expect("singleton alphabet")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    /// Same symbol set under a new axis name (e.g. a reconstruction copy of
    /// a source alphabet).
    pub fn renamed(&self, name: impl Into<String>) -> Self {
        FiniteAlphabet {
            name: name.into(),
            symbols: self.symbols.clone(),
        }
    }
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

fn total(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// Step a row-major multi-index; returns false after the last cell.
fn advance(idx: &mut [usize], shape: &[usize]) -> bool {
    for i in (0..idx.len()).rev() {
        idx[i] += 1;
        if idx[i] < shape[i] {
            return true;
        }
        idx[i] = 0;
    }
    false
}

/// A dense joint pmf over an ordered list of named axes (row-major).
#[derive(Clone, Debug)]
pub struct JointPmf {
    axes: Vec<FiniteAlphabet>,
    values: Vec<f64>,
}

impl JointPmf {
    pub fn new(axes: Vec<FiniteAlphabet>, values: Vec<f64>) -> Result<Self, ProbError> {
        for i in 0..axes.len() {
            for j in (i + 1)..axes.len() {
                if axes[i].name() == axes[j].name() {
                    return Err(ProbError::DuplicateAxis(axes[i].name().to_string()));
                }
            }
        }
        let expected = axes.iter().map(|a| a.size()).product::<usize>();
        if values.len() != expected {
            return Err(ProbError::ShapeMismatch {
                got: values.len(),
                expected,
            });
        }
        for (i, &v) in values.iter().enumerate() {
            if v < 0.0 || !v.is_finite() {
                return Err(ProbError::NegativeEntry { index: i, value: v });
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(ProbError::NotNormalized {
                sum,
                tol: NORMALIZATION_TOL,
            });
        }
        Ok(JointPmf { axes, values })
    }

    pub fn from_fn(
        axes: Vec<FiniteAlphabet>,
        f: impl Fn(&[usize]) -> f64,
    ) -> Result<Self, ProbError> {
        let shape: Vec<usize> = axes.iter().map(|a| a.size()).collect();
        let mut values = Vec::with_capacity(total(&shape));
        let mut idx = vec![0usize; shape.len()];
        loop {
            values.push(f(&idx));
            if !advance(&mut idx, &shape) {
                break;
            }
        }
        JointPmf::new(axes, values)
    }

    pub fn axes(&self) -> &[FiniteAlphabet] {
        &self.axes
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.size()).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn axis_position(&self, name: &str) -> Result<usize, ProbError> {
        self.axes
            .iter()
            .position(|a| a.name() == name)
            .ok_or_else(|| ProbError::UnknownAxis(name.to_string()))
    }

    pub fn axis(&self, name: &str) -> Result<&FiniteAlphabet, ProbError> {
        Ok(&self.axes[self.axis_position(name)?])
    }

    pub fn value(&self, idx: &[usize]) -> f64 {
        let shape = self.shape();
        let st = strides(&shape);
        let flat: usize = idx.iter().zip(&st).map(|(i, s)| i * s).sum();
        self.values[flat]
    }

    fn positions(&self, names: &[&str]) -> Result<Vec<usize>, ProbError> {
        let mut out = Vec::with_capacity(names.len());
        for n in names {
            let p = self.axis_position(n)?;
            if out.contains(&p) {
                return Err(ProbError::DuplicateAxis(n.to_string()));
            }
            out.push(p);
        }
        Ok(out)
    }

    fn check_disjoint(a: &[&str], b: &[&str]) -> Result<(), ProbError> {
        for n in a {
            if b.contains(n) {
                return Err(ProbError::OverlappingSets(n.to_string()));
            }
        }
        Ok(())
    }

    /// Sum out every axis not listed in `keep`; the order of `keep` is the
    /// axis order of the result.
    pub fn marginalize(&self, keep: &[&str]) -> Result<JointPmf, ProbError> {
        if keep.is_empty() {
            return Err(ProbError::EmptyAxisSet);
        }
        let kept = self.positions(keep)?;
        let shape = self.shape();
        let out_axes: Vec<FiniteAlphabet> = kept.iter().map(|&p| self.axes[p].clone()).collect();
        let out_shape: Vec<usize> = kept.iter().map(|&p| shape[p]).collect();
        let out_strides = strides(&out_shape);
        let mut out = vec![0.0f64; total(&out_shape)];
        let mut idx = vec![0usize; shape.len()];
        let mut flat = 0usize;
        loop {
            let o: usize = kept
                .iter()
                .zip(&out_strides)
                .map(|(&p, s)| idx[p] * s)
                .sum();
            out[o] += self.values[flat];
            flat += 1;
            if !advance(&mut idx, &shape) {
                break;
            }
        }
        // Re-validating would reject sums off by accumulated rounding; build
        // directly since marginalization preserves the invariants.
        Ok(JointPmf {
            axes: out_axes,
            values: out,
        })
    }

    /// Extend this pmf by a conditional kernel whose conditioning axes all
    /// appear here: the result is the joint over `self.axes ++ k.to_axes`
    /// with entries `self[i] * k[to | from(i)]`.
    pub fn compose(&self, k: &CondKernel) -> Result<JointPmf, ProbError> {
        let mut from_pos = Vec::with_capacity(k.from_axes.len());
        for fa in &k.from_axes {
            let p = self
                .axes
                .iter()
                .position(|a| a.name() == fa.name())
                .ok_or_else(|| ProbError::KernelFromAxisMissing(fa.name().to_string()))?;
            if self.axes[p] != *fa {
                return Err(ProbError::AxisMismatch {
                    name: fa.name().to_string(),
                    detail: "kernel conditioning alphabet differs from base axis".into(),
                });
            }
            from_pos.push(p);
        }
        for ta in &k.to_axes {
            if self.axes.iter().any(|a| a.name() == ta.name()) {
                return Err(ProbError::DuplicateAxis(ta.name().to_string()));
            }
        }
        let shape = self.shape();
        let from_shape: Vec<usize> = k.from_axes.iter().map(|a| a.size()).collect();
        let from_strides = strides(&from_shape);
        let to_total: usize = k.to_axes.iter().map(|a| a.size()).product();

        let mut out_axes = self.axes.clone();
        out_axes.extend(k.to_axes.iter().cloned());
        let mut out = vec![0.0f64; self.values.len() * to_total];

        let mut idx = vec![0usize; shape.len()];
        let mut flat = 0usize;
        loop {
            let base = self.values[flat];
            let from_flat: usize = from_pos
                .iter()
                .zip(&from_strides)
                .map(|(&p, s)| idx[p] * s)
                .sum();
            let krow = &k.values[from_flat * to_total..(from_flat + 1) * to_total];
            let orow = &mut out[flat * to_total..(flat + 1) * to_total];
            for (o, &kv) in orow.iter_mut().zip(krow) {
                *o = base * kv;
            }
            flat += 1;
            if !advance(&mut idx, &shape) {
                break;
            }
        }
        Ok(JointPmf {
            axes: out_axes,
            values: out,
        })
    }

    /// Conditional entropy `H(target | given)` in bits; `given` may be empty.
    pub fn entropy(&self, target: &[&str], given: &[&str]) -> Result<f64, ProbError> {
        if target.is_empty() {
            return Err(ProbError::EmptyAxisSet);
        }
        Self::check_disjoint(target, given)?;
        let mut tg: Vec<&str> = target.to_vec();
        tg.extend_from_slice(given);
        let joint = self.marginalize(&tg)?;
        if given.is_empty() {
            let mut h = 0.0;
            for &p in joint.values() {
                if p > 0.0 {
                    h -= p * p.log2();
                }
            }
            return Ok(h);
        }
        // Group cells of p(target, given) by the `given` coordinates.
        let shape = joint.shape();
        let given_pos: Vec<usize> = (target.len()..tg.len()).collect();
        let given_shape: Vec<usize> = given_pos.iter().map(|&p| shape[p]).collect();
        let given_strides = strides(&given_shape);
        let mut gsum = vec![0.0f64; total(&given_shape)];
        let mut idx = vec![0usize; shape.len()];
        let mut flat = 0usize;
        loop {
            let g: usize = given_pos
                .iter()
                .zip(&given_strides)
                .map(|(&p, s)| idx[p] * s)
                .sum();
            gsum[g] += joint.values[flat];
            flat += 1;
            if !advance(&mut idx, &shape) {
                break;
            }
        }
        let mut h = 0.0;
        idx.iter_mut().for_each(|v| *v = 0);
        flat = 0;
        loop {
            let p = joint.values[flat];
            if p > 0.0 {
                let g: usize = given_pos
                    .iter()
                    .zip(&given_strides)
                    .map(|(&p2, s)| idx[p2] * s)
                    .sum();
                h += p * (gsum[g] / p).log2();
            }
            flat += 1;
            if !advance(&mut idx, &shape) {
                break;
            }
        }
        Ok(h)
    }

    /// Conditional mutual information `I(a; b | given)` in bits, computed as
    /// `H(a|given) - H(a|b,given)`, clamped to 0 within floating-point noise.
    pub fn mutual_information(
        &self,
        a: &[&str],
        b: &[&str],
        given: &[&str],
    ) -> Result<f64, ProbError> {
        if a.is_empty() || b.is_empty() {
            return Err(ProbError::EmptyAxisSet);
        }
        Self::check_disjoint(a, b)?;
        Self::check_disjoint(a, given)?;
        Self::check_disjoint(b, given)?;
        let mut bg: Vec<&str> = b.to_vec();
        bg.extend_from_slice(given);
        let mi = self.entropy(a, given)? - self.entropy(a, &bg)?;
        if mi < 0.0 && mi >= -MI_CLAMP_TOL {
            return Ok(0.0);
        }
        Ok(mi)
    }

    /// True iff `a — b — c` is a Markov chain at the given tolerance,
    /// i.e. `I(a; c | b) <= tol`.
    pub fn is_markov(
        &self,
        a: &[&str],
        b: &[&str],
        c: &[&str],
        tol: f64,
    ) -> Result<bool, ProbError> {
        Ok(self.mutual_information(a, c, b)? <= tol)
    }
}

/// A conditional pmf: for every setting of `from_axes`, a pmf over `to_axes`.
/// Stored row-major as `(from..., to...)`.
#[derive(Clone, Debug)]
pub struct CondKernel {
    from_axes: Vec<FiniteAlphabet>,
    to_axes: Vec<FiniteAlphabet>,
    values: Vec<f64>,
}

impl CondKernel {
    pub fn new(
        from_axes: Vec<FiniteAlphabet>,
        to_axes: Vec<FiniteAlphabet>,
        values: Vec<f64>,
    ) -> Result<Self, ProbError> {
        let mut names: Vec<&str> = Vec::new();
        for a in from_axes.iter().chain(to_axes.iter()) {
            if names.contains(&a.name()) {
                return Err(ProbError::DuplicateAxis(a.name().to_string()));
            }
            names.push(a.name());
        }
        if to_axes.is_empty() {
            return Err(ProbError::EmptyAxisSet);
        }
        let from_total: usize = from_axes.iter().map(|a| a.size()).product();
        let to_total: usize = to_axes.iter().map(|a| a.size()).product();
        if values.len() != from_total * to_total {
            return Err(ProbError::ShapeMismatch {
                got: values.len(),
                expected: from_total * to_total,
            });
        }
        for (i, &v) in values.iter().enumerate() {
            if v < 0.0 || !v.is_finite() {
                return Err(ProbError::NegativeEntry { index: i, value: v });
            }
        }
        for s in 0..from_total {
            let sum: f64 = values[s * to_total..(s + 1) * to_total].iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(ProbError::SliceNotNormalized {
                    slice: s,
                    sum,
                    tol: NORMALIZATION_TOL,
                });
            }
        }
        Ok(CondKernel {
            from_axes,
            to_axes,
            values,
        })
    }

    pub fn from_fn(
        from_axes: Vec<FiniteAlphabet>,
        to_axes: Vec<FiniteAlphabet>,
        f: impl Fn(&[usize], &[usize]) -> f64,
    ) -> Result<Self, ProbError> {
        let from_shape: Vec<usize> = from_axes.iter().map(|a| a.size()).collect();
        let to_shape: Vec<usize> = to_axes.iter().map(|a| a.size()).collect();
        let mut values = Vec::with_capacity(total(&from_shape) * total(&to_shape));
        let mut fi = vec![0usize; from_shape.len()];
        loop {
            let mut ti = vec![0usize; to_shape.len()];
            loop {
                values.push(f(&fi, &ti));
                if !advance(&mut ti, &to_shape) {
                    break;
                }
            }
            if from_shape.is_empty() || !advance(&mut fi, &from_shape) {
                break;
            }
        }
        CondKernel::new(from_axes, to_axes, values)
    }

    /// Deterministic kernel: `map` sends a conditioning index to the chosen
    /// output index.
    pub fn deterministic(
        from_axes: Vec<FiniteAlphabet>,
        to_axes: Vec<FiniteAlphabet>,
        map: impl Fn(&[usize]) -> Vec<usize>,
    ) -> Result<Self, ProbError> {
        CondKernel::from_fn(from_axes, to_axes, |fi, ti| {
            if map(fi) == ti {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn from_axes(&self) -> &[FiniteAlphabet] {
        &self.from_axes
    }

    pub fn to_axes(&self) -> &[FiniteAlphabet] {
        &self.to_axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn from_total(&self) -> usize {
        self.from_axes.iter().map(|a| a.size()).product()
    }

    pub fn to_total(&self) -> usize {
        self.to_axes.iter().map(|a| a.size()).product()
    }

    /// The pmf row conditioned on the flat `from` index.
    pub fn slice(&self, from_flat: usize) -> &[f64] {
        let t = self.to_total();
        &self.values[from_flat * t..(from_flat + 1) * t]
    }

    /// Test-only constructor that skips validation, for exercising the
    /// defect-reporting paths on deliberately broken kernels.
    #[cfg(test)]
    pub(crate) fn new_unchecked(
        from_axes: Vec<FiniteAlphabet>,
        to_axes: Vec<FiniteAlphabet>,
        values: Vec<f64>,
    ) -> CondKernel {
        CondKernel {
            from_axes,
            to_axes,
            values,
        }
    }
}
