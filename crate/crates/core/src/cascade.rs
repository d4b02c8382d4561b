//! The cascade region: rate corners, the symbol-by-symbol decoder at the
//! end node, and scalarized optimization over decision kernels.
//!
//! For a decision kernel `p(x1, a, u | x, y)` the joint factorizes as
//! `p(x,y) p(x1,a,u|x,y) p(z|y,a)`, the corner rates are
//! `R1 = I(X; X1, A, U | Y)` and `R2 = I(X,Y; A) + I(X,Y; U | A, Z)`, and
//! the end-node reconstruction is the pointwise Bayes decoder `f(u, z)`,
//! which is optimal among all decoders, so it is computed rather than
//! searched.

use thiserror::Error;

use crate::models::{
    expected_cost, expected_distortion, CascadeVendingModel, ConstraintBudget, DistortionTable,
    ModelError,
};
use crate::prob::{CondKernel, FiniteAlphabet, JointPmf, ProbError, MI_CLAMP_TOL};
use crate::search::{minimize, BlockObjective, SearchConfig, SearchResult};

#[derive(Debug, Error)]
pub enum RegionError {
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("decision kernel does not match the model: {0}")]
    DecisionMismatch(String),
    #[error("no feasible decision found at this search resolution")]
    NoFeasible,
}

/// The optimizer's free variable: `p(x1, a, u | x, y)` with `|U| = u_size`.
#[derive(Clone, Debug)]
pub struct CascadeDecision {
    kernel: CondKernel,
}

impl CascadeDecision {
    pub fn new(m: &CascadeVendingModel, kernel: CondKernel) -> Result<Self, RegionError> {
        let from_ok = kernel.from_axes().len() == 2
            && kernel.from_axes()[0] == m.x
            && kernel.from_axes()[1] == m.y;
        let to_ok = kernel.to_axes().len() == 3
            && kernel.to_axes()[0] == m.x1hat
            && kernel.to_axes()[1] == m.a
            && kernel.to_axes()[2].name() == "U";
        if !from_ok || !to_ok {
            return Err(RegionError::DecisionMismatch(
                "kernel must map (X, Y) to (X1, A, U)".into(),
            ));
        }
        let u = kernel.to_axes()[2].size();
        if u > u_cardinality_bound(m) {
            return Err(RegionError::DecisionMismatch(format!(
                "u_size {u} exceeds the cardinality bound {}",
                u_cardinality_bound(m)
            )));
        }
        Ok(CascadeDecision { kernel })
    }

    /// Build from flat per-cell simplex values in `(x1, a, u)` output order.
    pub fn from_flat(
        m: &CascadeVendingModel,
        u_size: usize,
        values: Vec<f64>,
    ) -> Result<Self, RegionError> {
        let kernel = CondKernel::new(
            vec![m.x.clone(), m.y.clone()],
            vec![
                m.x1hat.clone(),
                m.a.clone(),
                FiniteAlphabet::indexed("U", u_size)?,
            ],
            values,
        )?;
        CascadeDecision::new(m, kernel)
    }

    /// The all-constant decision: `x1 = a = u = 0` regardless of the input.
    pub fn constant(m: &CascadeVendingModel, u_size: usize) -> Result<Self, RegionError> {
        let dim = m.x1hat.size() * m.a.size() * u_size;
        let cells = m.x.size() * m.y.size();
        let mut values = vec![0.0; cells * dim];
        for c in 0..cells {
            values[c * dim] = 1.0;
        }
        CascadeDecision::from_flat(m, u_size, values)
    }

    pub fn kernel(&self) -> &CondKernel {
        &self.kernel
    }

    pub fn u_size(&self) -> usize {
        self.kernel.to_axes()[2].size()
    }

    pub fn flat(&self) -> &[f64] {
        self.kernel.values()
    }
}

/// The cardinality bound on the auxiliary alphabet: `|X||Y||A| + 3`.
pub fn u_cardinality_bound(m: &CascadeVendingModel) -> usize {
    m.x.size() * m.y.size() * m.a.size() + 3
}

/// Deterministic end-node reconstruction table `f: (u, z) -> x2 index`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolDecoder {
    u_size: usize,
    z_size: usize,
    table: Vec<usize>,
}

impl SymbolDecoder {
    pub fn new(u_size: usize, z_size: usize, table: Vec<usize>) -> Self {
        assert_eq!(table.len(), u_size * z_size, "decoder table must be total");
        SymbolDecoder {
            u_size,
            z_size,
            table,
        }
    }

    pub fn decode(&self, u: usize, z: usize) -> usize {
        self.table[u * self.z_size + z]
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }
}

/// Provenance of an optimizer output (search seed and restart index).
#[derive(Clone, Copy, Debug, Default)]
pub struct Provenance {
    pub seed: u64,
    pub restart: u32,
}

/// An evaluated corner of the cascade region with its witness.
#[derive(Clone, Debug)]
pub struct RatePoint2 {
    pub r1: f64,
    pub r2: f64,
    pub d1: f64,
    pub d2: f64,
    pub gamma: f64,
    pub decision: CascadeDecision,
    pub decoder: SymbolDecoder,
    pub provenance: Provenance,
}

/// The factorized joint over `(X, Y, X1, A, U, Z)` for a decision.
pub fn assemble_joint(
    m: &CascadeVendingModel,
    d: &CascadeDecision,
) -> Result<JointPmf, RegionError> {
    Ok(m.source.compose(d.kernel())?.compose(&m.vm_channel)?)
}

/// Pointwise Bayes decoder: for each `(u, z)` with positive probability,
/// the reconstruction minimizing the posterior expected distortion, ties
/// broken toward the lowest symbol index; zero-probability cells get
/// index 0. Minimizes `E[d2(X, f(U, Z))]` over all decoders.
pub fn bayes_decoder(j: &JointPmf, d2: &DistortionTable) -> Result<SymbolDecoder, RegionError> {
    let pxuz = j.marginalize(&["X", "U", "Z"])?;
    let nx = pxuz.axes()[0].size();
    let nu = pxuz.axes()[1].size();
    let nz = pxuz.axes()[2].size();
    let n2 = d2.recon().size();
    let mut table = vec![0usize; nu * nz];
    for u in 0..nu {
        for z in 0..nz {
            let mut best = 0usize;
            let mut best_score = f64::INFINITY;
            for xh in 0..n2 {
                let mut score = 0.0;
                for x in 0..nx {
                    score += pxuz.value(&[x, u, z]) * d2.value(x, xh);
                }
                if score < best_score {
                    best_score = score;
                    best = xh;
                }
            }
            table[u * nz + z] = best;
        }
    }
    Ok(SymbolDecoder {
        u_size: nu,
        z_size: nz,
        table,
    })
}

/// Expected end-node distortion under a fixed decoder.
pub fn decoder_distortion(
    j: &JointPmf,
    d2: &DistortionTable,
    f: &SymbolDecoder,
) -> Result<f64, RegionError> {
    let pxuz = j.marginalize(&["X", "U", "Z"])?;
    let nx = pxuz.axes()[0].size();
    let nu = pxuz.axes()[1].size();
    let nz = pxuz.axes()[2].size();
    let mut acc = 0.0;
    for x in 0..nx {
        for u in 0..nu {
            for z in 0..nz {
                acc += pxuz.value(&[x, u, z]) * d2.value(x, f.decode(u, z));
            }
        }
    }
    Ok(acc)
}

/// Evaluate the full corner for a decision: rates, distortions and cost,
/// with the Bayes decoder as witness.
pub fn rate_corner(
    m: &CascadeVendingModel,
    d: &CascadeDecision,
) -> Result<RatePoint2, RegionError> {
    let j = assemble_joint(m, d)?;
    let r1 = j.mutual_information(&["X"], &["X1", "A", "U"], &["Y"])?;
    let r2 = j.mutual_information(&["X", "Y"], &["A"], &[])?
        + j.mutual_information(&["X", "Y"], &["U"], &["A", "Z"])?;
    let d1 = expected_distortion(&j, &m.d1, "X", "X1")?;
    let decoder = bayes_decoder(&j, &m.d2)?;
    let d2 = decoder_distortion(&j, &m.d2, &decoder)?;
    let gamma = expected_cost(&j, &m.cost, "A")?;
    Ok(RatePoint2 {
        r1,
        r2,
        d1,
        d2,
        gamma,
        decision: d.clone(),
        decoder,
        provenance: Provenance::default(),
    })
}

// ---------------------------------------------------------------------------
// Fast evaluator (same quantities as rate_corner, scratch-buffer loops)
// ---------------------------------------------------------------------------

/// Raw corner values produced by the fast path.
#[derive(Clone, Copy, Debug, Default)]
pub struct CornerValues {
    pub r1: f64,
    pub r2: f64,
    pub d1: f64,
    pub d2: f64,
    pub gamma: f64,
}

/// Precomputed constants for evaluating corners of one model at one
/// auxiliary alphabet size. The decision is a flat slice with one simplex
/// of size `|X1||A||U|` per source cell `(x, y)`.
pub struct CascadeEvaluator<'m> {
    pub m: &'m CascadeVendingModel,
    nx: usize,
    ny: usize,
    nz: usize,
    na: usize,
    n1: usize,
    nu: usize,
    n2: usize,
    h_x_given_y: f64,
    h_xy: f64,
}

/// Reusable scratch buffers for [`CascadeEvaluator::corners`].
#[derive(Default, Clone)]
pub struct CascadeScratch {
    m1: Vec<f64>,
    g1: Vec<f64>,
    pxya: Vec<f64>,
    pa: Vec<f64>,
    pxyau: Vec<f64>,
    q: Vec<f64>,
    paz: Vec<f64>,
    pxyaz: Vec<f64>,
    pazu: Vec<f64>,
    pxuz: Vec<f64>,
}

fn clamp_mi(v: f64) -> f64 {
    if v < 0.0 && v >= -MI_CLAMP_TOL {
        0.0
    } else {
        v
    }
}

impl<'m> CascadeEvaluator<'m> {
    pub fn new(m: &'m CascadeVendingModel, u_size: usize) -> Self {
        let (nx, ny) = (m.x.size(), m.y.size());
        let h_x_given_y = m.source.entropy(&["X"], &["Y"]).expect("source axes");
        let h_xy = m.source.entropy(&["X", "Y"], &[]).expect("source axes");
        CascadeEvaluator {
            m,
            nx,
            ny,
            nz: m.z.size(),
            na: m.a.size(),
            n1: m.x1hat.size(),
            nu: u_size,
            n2: m.x2hat.size(),
            h_x_given_y,
            h_xy,
        }
    }

    pub fn u_size(&self) -> usize {
        self.nu
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_dim(&self) -> usize {
        self.n1 * self.na * self.nu
    }

    /// Corner values for a flat decision; optionally fills a decoder table.
    pub fn corners(
        &self,
        k: &[f64],
        s: &mut CascadeScratch,
        decoder_out: Option<&mut Vec<usize>>,
    ) -> CornerValues {
        let (nx, ny, nz, na, n1, nu) = (self.nx, self.ny, self.nz, self.na, self.n1, self.nu);
        let dim = self.cell_dim();
        debug_assert_eq!(k.len(), self.cells() * dim);
        let pxy = self.m.source.values();
        let w = self.m.vm_channel.values(); // (a, y) -> z
        let d1t = self.m.d1.values();
        let cost = self.m.cost.values();

        s.m1.clear();
        s.m1.resize(nx * ny * n1 * na * nu, 0.0);
        s.g1.clear();
        s.g1.resize(ny * n1 * na * nu, 0.0);
        s.pxya.clear();
        s.pxya.resize(nx * ny * na, 0.0);
        s.pa.clear();
        s.pa.resize(na, 0.0);
        s.pxyau.clear();
        s.pxyau.resize(nx * ny * na * nu, 0.0);

        let mut d1 = 0.0;
        let mut gamma = 0.0;
        for x in 0..nx {
            for y in 0..ny {
                let base = pxy[x * ny + y];
                let cell = &k[(x * ny + y) * dim..(x * ny + y + 1) * dim];
                for x1 in 0..n1 {
                    for a in 0..na {
                        for u in 0..nu {
                            let v = base * cell[(x1 * na + a) * nu + u];
                            if v == 0.0 {
                                continue;
                            }
                            s.m1[(((x * ny + y) * n1 + x1) * na + a) * nu + u] = v;
                            s.g1[((y * n1 + x1) * na + a) * nu + u] += v;
                            s.pxya[(x * ny + y) * na + a] += v;
                            s.pxyau[((x * ny + y) * na + a) * nu + u] += v;
                            d1 += v * d1t[x * n1 + x1];
                            gamma += v * cost[a];
                        }
                    }
                }
            }
        }
        for a in 0..na {
            for x in 0..nx {
                for y in 0..ny {
                    s.pa[a] += s.pxya[(x * ny + y) * na + a];
                }
            }
        }

        // R1 = H(X|Y) - H(X | X1, A, U, Y).
        let mut h_x_rest = 0.0;
        for x in 0..nx {
            for y in 0..ny {
                for x1 in 0..n1 {
                    for a in 0..na {
                        for u in 0..nu {
                            let v = s.m1[(((x * ny + y) * n1 + x1) * na + a) * nu + u];
                            if v > 0.0 {
                                let g = s.g1[((y * n1 + x1) * na + a) * nu + u];
                                h_x_rest += v * (g / v).log2();
                            }
                        }
                    }
                }
            }
        }
        let r1 = clamp_mi(self.h_x_given_y - h_x_rest);

        // I(X,Y; A) = H(X,Y) - H(X,Y | A).
        let mut h_xy_a = 0.0;
        for x in 0..nx {
            for y in 0..ny {
                for a in 0..na {
                    let v = s.pxya[(x * ny + y) * na + a];
                    if v > 0.0 {
                        h_xy_a += v * (s.pa[a] / v).log2();
                    }
                }
            }
        }
        let mi_xy_a = clamp_mi(self.h_xy - h_xy_a);

        // q over (x, y, a, z, u) = p(x,y,a,u) * p(z | a, y).
        s.q.clear();
        s.q.resize(nx * ny * na * nz * nu, 0.0);
        s.paz.clear();
        s.paz.resize(na * nz, 0.0);
        s.pxyaz.clear();
        s.pxyaz.resize(nx * ny * na * nz, 0.0);
        s.pazu.clear();
        s.pazu.resize(na * nz * nu, 0.0);
        s.pxuz.clear();
        s.pxuz.resize(nx * nu * nz, 0.0);
        for x in 0..nx {
            for y in 0..ny {
                for a in 0..na {
                    for u in 0..nu {
                        let v = s.pxyau[((x * ny + y) * na + a) * nu + u];
                        if v == 0.0 {
                            continue;
                        }
                        for z in 0..nz {
                            let qv = v * w[(a * ny + y) * nz + z];
                            if qv == 0.0 {
                                continue;
                            }
                            s.q[(((x * ny + y) * na + a) * nz + z) * nu + u] += qv;
                            s.paz[a * nz + z] += qv;
                            s.pxyaz[((x * ny + y) * na + a) * nz + z] += qv;
                            s.pazu[(a * nz + z) * nu + u] += qv;
                            s.pxuz[(x * nu + u) * nz + z] += qv;
                        }
                    }
                }
            }
        }
        // I(X,Y; U | A,Z) = H(X,Y|A,Z) - H(X,Y|U,A,Z).
        let mut h_xy_az = 0.0;
        for x in 0..nx {
            for y in 0..ny {
                for a in 0..na {
                    for z in 0..nz {
                        let v = s.pxyaz[((x * ny + y) * na + a) * nz + z];
                        if v > 0.0 {
                            h_xy_az += v * (s.paz[a * nz + z] / v).log2();
                        }
                    }
                }
            }
        }
        let mut h_xy_uaz = 0.0;
        for x in 0..nx {
            for y in 0..ny {
                for a in 0..na {
                    for z in 0..nz {
                        for u in 0..nu {
                            let v = s.q[(((x * ny + y) * na + a) * nz + z) * nu + u];
                            if v > 0.0 {
                                h_xy_uaz += v * (s.pazu[(a * nz + z) * nu + u] / v).log2();
                            }
                        }
                    }
                }
            }
        }
        let mi_xy_u_az = clamp_mi(h_xy_az - h_xy_uaz);
        let r2 = mi_xy_a + mi_xy_u_az;

        // Bayes decoder distortion on p(x, u, z).
        let d2t = self.m.d2.values();
        let n2 = self.n2;
        let mut d2 = 0.0;
        let mut table: Option<&mut Vec<usize>> = decoder_out;
        if let Some(t) = table.as_deref_mut() {
            t.clear();
            t.resize(nu * nz, 0);
        }
        for u in 0..nu {
            for z in 0..nz {
                let mut best = 0usize;
                let mut best_score = f64::INFINITY;
                for xh in 0..n2 {
                    let mut score = 0.0;
                    for x in 0..nx {
                        score += s.pxuz[(x * nu + u) * nz + z] * d2t[x * n2 + xh];
                    }
                    if score < best_score {
                        best_score = score;
                        best = xh;
                    }
                }
                d2 += best_score;
                if let Some(t) = table.as_deref_mut() {
                    t[u * nz + z] = best;
                }
            }
        }

        CornerValues {
            r1,
            r2,
            d1,
            d2,
            gamma,
        }
    }
}

/// Corner evaluation plus witness assembly for a flat decision.
pub fn corner_from_flat(
    m: &CascadeVendingModel,
    u_size: usize,
    x: &[f64],
    provenance: Provenance,
) -> Result<RatePoint2, RegionError> {
    let ev = CascadeEvaluator::new(m, u_size);
    let mut scratch = CascadeScratch::default();
    let mut table = Vec::new();
    let v = ev.corners(x, &mut scratch, Some(&mut table));
    let decision = CascadeDecision::from_flat(m, u_size, x.to_vec())?;
    Ok(RatePoint2 {
        r1: v.r1,
        r2: v.r2,
        d1: v.d1,
        d2: v.d2,
        gamma: v.gamma,
        decision,
        decoder: SymbolDecoder {
            u_size,
            z_size: m.z.size(),
            table,
        },
        provenance,
    })
}

// ---------------------------------------------------------------------------
// Scalarized optimization
// ---------------------------------------------------------------------------

struct CascadeObjective<'m> {
    ev: CascadeEvaluator<'m>,
    budget: ConstraintBudget,
    weights: (f64, f64),
    /// When set, minimize the hinge distance to a rate target instead of
    /// the weighted sum (membership searches).
    target: Option<(f64, f64)>,
}

impl BlockObjective for CascadeObjective<'_> {
    fn block_dims(&self) -> Vec<usize> {
        vec![self.ev.cell_dim(); self.ev.cells()]
    }

    fn evaluate(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut s = CascadeScratch::default();
        let v = self.ev.corners(x, &mut s, None);
        let obj = match self.target {
            Some((t1, t2)) => (v.r1 - t1).max(0.0) + (v.r2 - t2).max(0.0),
            None => self.weights.0 * v.r1 + self.weights.1 * v.r2,
        };
        (
            obj,
            vec![
                v.d1 - self.budget.d1,
                v.d2 - self.budget.d2,
                v.gamma - self.budget.gamma,
            ],
        )
    }
}

/// Resolve the auxiliary alphabet size from the config or the bound.
pub fn resolve_u_size(m: &CascadeVendingModel, cfg: &SearchConfig) -> usize {
    cfg.u_size.unwrap_or_else(|| u_cardinality_bound(m)).max(1)
}

fn search_internal(
    m: &CascadeVendingModel,
    budget: &ConstraintBudget,
    weights: (f64, f64),
    target: Option<(f64, f64)>,
    cfg: &SearchConfig,
    warm: &[Vec<f64>],
) -> Option<(SearchResult, RatePoint2)> {
    let u_size = resolve_u_size(m, cfg);
    let obj = CascadeObjective {
        ev: CascadeEvaluator::new(m, u_size),
        budget: *budget,
        weights,
        target,
    };
    let res = minimize(&obj, cfg, warm)?;
    let point = corner_from_flat(
        m,
        u_size,
        &res.x,
        Provenance {
            seed: res.seed,
            restart: res.restart,
        },
    )
    .ok()?;
    Some((res, point))
}

/// Best found feasible decision minimizing `w1 R1 + w2 R2`; an upper bound
/// on the true scalarized minimum (local search).
pub fn min_weighted_rate(
    m: &CascadeVendingModel,
    budget: &ConstraintBudget,
    weights: (f64, f64),
    cfg: &SearchConfig,
) -> Result<RatePoint2, RegionError> {
    min_weighted_rate_warm(m, budget, weights, cfg, &[])
}

/// Same as [`min_weighted_rate`] with extra warm-start decisions.
pub fn min_weighted_rate_warm(
    m: &CascadeVendingModel,
    budget: &ConstraintBudget,
    weights: (f64, f64),
    cfg: &SearchConfig,
    warm: &[Vec<f64>],
) -> Result<RatePoint2, RegionError> {
    search_internal(m, budget, weights, None, cfg, warm)
        .map(|(_, p)| p)
        .ok_or(RegionError::NoFeasible)
}

/// A traced trade-off curve: per-weight optimizer outputs plus the indices
/// of the points on the lower convex envelope (the region is convexified
/// by time sharing; raw points are retained).
#[derive(Clone, Debug)]
pub struct Frontier2 {
    pub weights: Vec<(f64, f64)>,
    pub points: Vec<Option<RatePoint2>>,
    pub envelope: Vec<usize>,
}

/// Indices of points on the lower-left convex envelope of `(R1, R2)`.
pub fn lower_envelope(points: &[(f64, f64)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points[a]
            .partial_cmp(&points[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    // Monotone chain on the lower hull, then keep the Pareto-decreasing
    // part only.
    let mut hull: Vec<usize> = Vec::new();
    for &i in &idx {
        while hull.len() >= 2 {
            let o = points[hull[hull.len() - 2]];
            let a = points[hull[hull.len() - 1]];
            let b = points[i];
            let cross = (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
            if cross <= 1e-15 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut out = Vec::new();
    let mut last_r2 = f64::INFINITY;
    for &i in &hull {
        if points[i].1 <= last_r2 + 1e-12 {
            out.push(i);
            last_r2 = points[i].1;
        }
    }
    out
}

/// Trace the frontier over a weight grid. Witnesses found for one weight
/// warm-start the next, and a final pass re-scores every point under every
/// weight so the per-weight outputs are globally consistent.
pub fn trace_frontier(
    m: &CascadeVendingModel,
    budget: &ConstraintBudget,
    weights: &[(f64, f64)],
    cfg: &SearchConfig,
) -> Frontier2 {
    let mut found: Vec<Option<RatePoint2>> = Vec::with_capacity(weights.len());
    let mut warm: Vec<Vec<f64>> = Vec::new();
    for (wi, &w) in weights.iter().enumerate() {
        let mut wcfg = cfg.clone();
        wcfg.seed = cfg.seed.wrapping_add(wi as u64);
        match search_internal(m, budget, w, None, &wcfg, &warm) {
            Some((res, p)) => {
                warm.push(res.x.clone());
                found.push(Some(p));
            }
            None => found.push(None),
        }
    }
    // Cross-weight consistency pass: every point is re-scored under every
    // weight and the best one wins (all candidates are feasible).
    let candidates: Vec<RatePoint2> = found.iter().flatten().cloned().collect();
    for (wi, &(w1, w2)) in weights.iter().enumerate() {
        let mut best: Option<RatePoint2> = found[wi].clone();
        for c in &candidates {
            let score = w1 * c.r1 + w2 * c.r2;
            let better = match &best {
                Some(b) => score < w1 * b.r1 + w2 * b.r2 - 1e-15,
                None => false,
            };
            if better {
                best = Some(c.clone());
            }
        }
        found[wi] = best;
    }
    let coords: Vec<(f64, f64)> = found.iter().flatten().map(|p| (p.r1, p.r2)).collect();
    let envelope = lower_envelope(&coords);
    Frontier2 {
        weights: weights.to_vec(),
        points: found,
        envelope,
    }
}

/// Verdict of a membership query. The search can certify achievability with
/// a witness; failure to find one is never a converse claim.
#[derive(Clone, Debug)]
pub enum Verdict2 {
    Achievable(Box<RatePoint2>),
    NotFoundAtResolution,
}

/// Search for a feasible decision whose corner is dominated by the queried
/// rate pair.
pub fn membership(
    m: &CascadeVendingModel,
    r1: f64,
    r2: f64,
    budget: &ConstraintBudget,
    cfg: &SearchConfig,
) -> Verdict2 {
    if let Some((_, p)) = search_internal(m, budget, (0.0, 0.0), Some((r1, r2)), cfg, &[]) {
        let hinge = (p.r1 - r1).max(0.0) + (p.r2 - r2).max(0.0);
        if hinge <= 1e-9 {
            return Verdict2::Achievable(Box::new(p));
        }
    }
    // Plain scalarized corners sometimes dominate the target even when the
    // hinge search stalls.
    for w in [(1.0, 1.0), (1.0, 0.0), (0.0, 1.0)] {
        if let Some((_, p)) = search_internal(m, budget, w, None, cfg, &[]) {
            if p.r1 <= r1 + 1e-9 && p.r2 <= r2 + 1e-9 {
                return Verdict2::Achievable(Box::new(p));
            }
        }
    }
    Verdict2::NotFoundAtResolution
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::CostTable;
    use crate::rng::Rng;

    fn bin(name: &str) -> FiniteAlphabet {
        FiniteAlphabet::binary(name)
    }

    fn sing(name: &str) -> FiniteAlphabet {
        FiniteAlphabet::singleton(name)
    }

    /// Y independent of X, Z uninformative: the forced-lossless instance
    /// used across the test suite.
    fn lossless_instance() -> CascadeVendingModel {
        let source = JointPmf::new(vec![bin("X"), bin("Y")], vec![0.25; 4]).unwrap();
        let vm =
            CondKernel::from_fn(vec![bin("A"), bin("Y")], vec![bin("Z")], |_, _| 0.5).unwrap();
        CascadeVendingModel::new(
            source,
            vm,
            DistortionTable::hamming(bin("X"), bin("X1")),
            DistortionTable::hamming(bin("X"), bin("X2")),
            CostTable::zero(bin("A")),
        )
        .unwrap()
    }

    fn random_instance(seed: u64) -> CascadeVendingModel {
        let mut rng = Rng::new(seed);
        let source = JointPmf::new(vec![bin("X"), bin("Y")], rng.positive_pmf(4)).unwrap();
        let mut wv = Vec::new();
        for _ in 0..4 {
            wv.extend(rng.simplex(2));
        }
        let vm = CondKernel::new(vec![bin("A"), bin("Y")], vec![bin("Z")], wv).unwrap();
        CascadeVendingModel::new(
            source,
            vm,
            DistortionTable::hamming(bin("X"), bin("X1")),
            DistortionTable::hamming(bin("X"), bin("X2")),
            CostTable::new(bin("A"), vec![0.0, 1.0]).unwrap(),
        )
        .unwrap()
    }

    fn random_decision(m: &CascadeVendingModel, u_size: usize, rng: &mut Rng) -> CascadeDecision {
        let dim = m.x1hat.size() * m.a.size() * u_size;
        let mut v = Vec::new();
        for _ in 0..m.x.size() * m.y.size() {
            v.extend(rng.simplex(dim));
        }
        CascadeDecision::from_flat(m, u_size, v).unwrap()
    }

    /// The copy decision on the lossless instance: x1 = x, a = 0, u = x.
    fn copy_decision(m: &CascadeVendingModel) -> CascadeDecision {
        let dim = 8;
        let mut v = vec![0.0; 4 * dim];
        for x in 0..2 {
            for y in 0..2 {
                v[(x * 2 + y) * dim + (x * 2) * 2 + x] = 1.0;
            }
        }
        CascadeDecision::from_flat(m, 2, v).unwrap()
    }

    #[test]
    fn assemble_degenerate_decision_reduces_to_channel() {
        // singleton A, U, X1: joint must equal p(x,y) p(z|y,a0).
        let source = JointPmf::new(vec![bin("X"), bin("Y")], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let vm = CondKernel::from_fn(vec![sing("A"), bin("Y")], vec![bin("Z")], |f, t| {
            if f[1] == t[0] {
                0.8
            } else {
                0.2
            }
        })
        .unwrap();
        let m = CascadeVendingModel::new(
            source.clone(),
            vm,
            DistortionTable::hamming(bin("X"), sing("X1")),
            DistortionTable::hamming(bin("X"), bin("X2")),
            CostTable::zero(sing("A")),
        )
        .unwrap();
        let d = CascadeDecision::constant(&m, 1).unwrap();
        let j = assemble_joint(&m, &d).unwrap();
        let mzy = j.marginalize(&["X", "Y", "Z"]).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    let expect = source.value(&[x, y]) * if y == z { 0.8 } else { 0.2 };
                    assert!((mzy.value(&[x, y, z]) - expect).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn assemble_copy_decision_diagonal_marginal() {
        let m = lossless_instance();
        let d = copy_decision(&m);
        let j = assemble_joint(&m, &d).unwrap();
        let mx = j.marginalize(&["X", "X1"]).unwrap();
        assert!(mx.value(&[0, 1]).abs() < 1e-15);
        assert!(mx.value(&[1, 0]).abs() < 1e-15);
    }

    #[test]
    fn assembled_joint_is_markov_and_preserves_source() {
        let m = random_instance(3);
        let mut rng = Rng::new(4);
        for _ in 0..20 {
            let d = random_decision(&m, 2, &mut rng);
            let j = assemble_joint(&m, &d).unwrap();
            let mi = j.mutual_information(&["X"], &["Z"], &["A", "Y"]).unwrap();
            assert!(mi <= 1e-10, "I(X;Z|A,Y) = {mi}");
            assert!(j.is_markov(&["X"], &["A", "Y"], &["Z"], 1e-9).unwrap());
            let back = j.marginalize(&["X", "Y"]).unwrap();
            for (a, b) in back.values().iter().zip(m.source.values()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bayes_decoder_copies_u_when_u_copies_x() {
        let m = lossless_instance();
        let d = copy_decision(&m);
        let j = assemble_joint(&m, &d).unwrap();
        let f = bayes_decoder(&j, &m.d2).unwrap();
        for z in 0..2 {
            assert_eq!(f.decode(0, z), 0);
            assert_eq!(f.decode(1, z), 1);
        }
        assert!(decoder_distortion(&j, &m.d2, &f).unwrap().abs() < 1e-15);
    }

    #[test]
    fn bayes_decoder_tie_breaks_to_lowest_index() {
        // U, Z independent of X, uniform X: every reconstruction is equally
        // bad; the decoder must pick index 0 and the distortion is 0.5.
        let m = lossless_instance();
        let d = CascadeDecision::constant(&m, 2).unwrap();
        let j = assemble_joint(&m, &d).unwrap();
        let f = bayes_decoder(&j, &m.d2).unwrap();
        assert!(f.table().iter().all(|&t| t == 0));
        assert!((decoder_distortion(&j, &m.d2, &f).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bayes_decoder_matches_exhaustive_enumeration() {
        let m = random_instance(11);
        let mut rng = Rng::new(12);
        for _ in 0..10 {
            let d = random_decision(&m, 2, &mut rng);
            let j = assemble_joint(&m, &d).unwrap();
            let f = bayes_decoder(&j, &m.d2).unwrap();
            let best = decoder_distortion(&j, &m.d2, &f).unwrap();
            // Exhaustive: all |X2|^(|U||Z|) = 16 decoders.
            let (nu, nz, n2) = (2usize, 2usize, 2usize);
            let cells = nu * nz;
            let mut min_seen = f64::INFINITY;
            for code in 0..n2.pow(cells as u32) {
                let mut c = code;
                let table: Vec<usize> = (0..cells)
                    .map(|_| {
                        let t = c % n2;
                        c /= n2;
                        t
                    })
                    .collect();
                let cand = SymbolDecoder::new(nu, nz, table);
                let v = decoder_distortion(&j, &m.d2, &cand).unwrap();
                min_seen = min_seen.min(v);
            }
            assert!(
                best <= min_seen + 1e-12,
                "bayes {best} vs exhaustive {min_seen}"
            );
        }
    }

    #[test]
    fn constant_decision_has_zero_rates() {
        let m = random_instance(21);
        let d = CascadeDecision::constant(&m, 2).unwrap();
        let p = rate_corner(&m, &d).unwrap();
        assert!(p.r1.abs() < 1e-12 && p.r2.abs() < 1e-12);
    }

    #[test]
    fn lossless_corner_rates_are_source_entropy() {
        // U = X1 = copy of X, constant action, Y independent of X, Z
        // uninformative: R1 = H(X), R2 = H(X).
        let m = lossless_instance();
        let d = copy_decision(&m);
        let p = rate_corner(&m, &d).unwrap();
        assert!((p.r1 - 1.0).abs() < 1e-12, "r1 {}", p.r1);
        assert!((p.r2 - 1.0).abs() < 1e-12, "r2 {}", p.r2);
        assert!(p.d1.abs() < 1e-15 && p.d2.abs() < 1e-15);
    }

    #[test]
    fn r2_matches_algebraic_rederivation() {
        // R2 = I(X,Y; U,A,Z) - I(Z; X,Y | A) on the assembled joint.
        let m = random_instance(31);
        let mut rng = Rng::new(32);
        for _ in 0..10 {
            let d = random_decision(&m, 2, &mut rng);
            let j = assemble_joint(&m, &d).unwrap();
            let p = rate_corner(&m, &d).unwrap();
            let alt = j
                .mutual_information(&["X", "Y"], &["U", "A", "Z"], &[])
                .unwrap()
                - j.mutual_information(&["Z"], &["X", "Y"], &["A"]).unwrap();
            assert!((p.r2 - alt).abs() < 1e-10, "{} vs {alt}", p.r2);
        }
    }

    #[test]
    fn fast_evaluator_matches_generic_corner() {
        let m = random_instance(41);
        let ev = CascadeEvaluator::new(&m, 3);
        let mut scratch = CascadeScratch::default();
        let mut rng = Rng::new(42);
        for _ in 0..30 {
            let d = random_decision(&m, 3, &mut rng);
            let slow = rate_corner(&m, &d).unwrap();
            let fast = ev.corners(d.flat(), &mut scratch, None);
            assert!((slow.r1 - fast.r1).abs() < 1e-12);
            assert!((slow.r2 - fast.r2).abs() < 1e-12);
            assert!((slow.d1 - fast.d1).abs() < 1e-12);
            assert!((slow.d2 - fast.d2).abs() < 1e-12);
            assert!((slow.gamma - fast.gamma).abs() < 1e-12);
        }
    }

    #[test]
    fn witness_reproducibility() {
        let m = random_instance(51);
        let budget = ConstraintBudget::new(0.3, 0.4, 0.8).unwrap();
        let cfg = SearchConfig {
            restarts: 8,
            seed: 52,
            u_size: Some(2),
            ..Default::default()
        };
        let p = min_weighted_rate(&m, &budget, (1.0, 1.0), &cfg).unwrap();
        let again = rate_corner(&m, &p.decision).unwrap();
        assert!((p.r1 - again.r1).abs() < 1e-9);
        assert!((p.r2 - again.r2).abs() < 1e-9);
        assert!((p.d1 - again.d1).abs() < 1e-9);
        assert!((p.d2 - again.d2).abs() < 1e-9);
        assert!((p.gamma - again.gamma).abs() < 1e-9);
    }

    #[test]
    fn loose_budget_minimum_is_zero() {
        let m = random_instance(61);
        let budget = ConstraintBudget::loose(&m.d1, &m.d2, &m.cost);
        let cfg = SearchConfig {
            restarts: 4,
            seed: 62,
            u_size: Some(2),
            ..Default::default()
        };
        let p = min_weighted_rate(&m, &budget, (1.0, 1.0), &cfg).unwrap();
        assert!(p.r1 + p.r2 < 1e-9, "got {} {}", p.r1, p.r2);
    }

    #[test]
    fn forced_lossless_scalarized_minimum() {
        // D1 = D2 = 0 with useless side information: the optimizer must
        // land on the (H(X), H(X)) corner exactly.
        let m = lossless_instance();
        let budget = ConstraintBudget::new(0.0, 0.0, 1.0).unwrap();
        let cfg = SearchConfig {
            restarts: 8,
            seed: 63,
            u_size: Some(2),
            ..Default::default()
        };
        let p = min_weighted_rate(&m, &budget, (1.0, 1.0), &cfg).unwrap();
        assert!((p.r1 + p.r2 - 2.0).abs() < 1e-6, "sum {}", p.r1 + p.r2);
    }

    #[test]
    fn infeasible_budget_reports_no_feasible() {
        // D1 = 0 but X1 is a singleton that cannot copy X.
        let source = JointPmf::new(vec![bin("X"), bin("Y")], vec![0.25; 4]).unwrap();
        let vm =
            CondKernel::from_fn(vec![bin("A"), bin("Y")], vec![bin("Z")], |_, _| 0.5).unwrap();
        let m = CascadeVendingModel::new(
            source,
            vm,
            DistortionTable::hamming(bin("X"), sing("X1")),
            DistortionTable::hamming(bin("X"), bin("X2")),
            CostTable::zero(bin("A")),
        )
        .unwrap();
        let budget = ConstraintBudget::new(0.0, 1.0, 1.0).unwrap();
        let cfg = SearchConfig {
            restarts: 4,
            seed: 64,
            u_size: Some(2),
            ..Default::default()
        };
        match min_weighted_rate(&m, &budget, (1.0, 1.0), &cfg) {
            Err(RegionError::NoFeasible) => {}
            other => panic!("expected NoFeasible, got {other:?}"),
        }
    }

    #[test]
    fn frontier_collapses_under_loose_budget() {
        let m = random_instance(71);
        let budget = ConstraintBudget::loose(&m.d1, &m.d2, &m.cost);
        let cfg = SearchConfig {
            restarts: 4,
            seed: 72,
            u_size: Some(2),
            ..Default::default()
        };
        let f = trace_frontier(&m, &budget, &[(1.0, 0.0), (1.0, 1.0), (0.0, 1.0)], &cfg);
        for p in f.points.iter().flatten() {
            assert!(p.r1 + p.r2 < 1e-9);
        }
    }

    #[test]
    fn frontier_is_monotone_staircase() {
        let m = lossless_instance();
        let budget = ConstraintBudget::new(0.1, 0.2, 1.0).unwrap();
        let cfg = SearchConfig {
            restarts: 12,
            seed: 73,
            u_size: Some(2),
            ..Default::default()
        };
        let weights: Vec<(f64, f64)> = (0..11)
            .map(|i| {
                let t = i as f64 / 10.0;
                (1.0 - t, t)
            })
            .collect();
        let f = trace_frontier(&m, &budget, &weights, &cfg);
        let pts: Vec<(f64, f64)> = f.points.iter().flatten().map(|p| (p.r1, p.r2)).collect();
        assert!(!pts.is_empty());
        let mut sorted = pts.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in sorted.windows(2) {
            assert!(
                w[1].1 <= w[0].1 + 1e-6,
                "R2 must not increase along increasing R1: {w:?}"
            );
        }
    }

    #[test]
    fn membership_verdicts() {
        let m = lossless_instance();
        let tight = ConstraintBudget::new(0.0, 0.0, 1.0).unwrap();
        let cfg = SearchConfig {
            restarts: 6,
            seed: 81,
            u_size: Some(2),
            ..Default::default()
        };
        match membership(&m, 1.1, 1.1, &tight, &cfg) {
            Verdict2::Achievable(p) => {
                assert!(p.r1 <= 1.1 + 1e-9 && p.r2 <= 1.1 + 1e-9);
            }
            v => panic!("expected achievable, got {v:?}"),
        }
        let loose = ConstraintBudget::loose(&m.d1, &m.d2, &m.cost);
        assert!(matches!(
            membership(&m, 0.0, 0.0, &loose, &cfg),
            Verdict2::Achievable(_)
        ));
        // Lossless needs positive rate: (0, 0) is not found.
        assert!(matches!(
            membership(&m, 0.0, 0.0, &tight, &cfg),
            Verdict2::NotFoundAtResolution
        ));
    }

    #[test]
    fn budget_monotonicity_with_warm_starts() {
        let m = random_instance(91);
        let cfg = SearchConfig {
            restarts: 8,
            seed: 92,
            u_size: Some(2),
            ..Default::default()
        };
        let mut warm: Vec<Vec<f64>> = Vec::new();
        let mut prev = f64::INFINITY;
        for step in 0..5 {
            let d = 0.05 + 0.1 * step as f64;
            let budget = ConstraintBudget::new(d, d, 1.0).unwrap();
            let p = min_weighted_rate_warm(&m, &budget, (1.0, 1.0), &cfg, &warm).unwrap();
            let obj = p.r1 + p.r2;
            assert!(
                obj <= prev + 1e-9,
                "scalarized minimum increased along the ladder: {obj} > {prev}"
            );
            prev = obj;
            warm.push(p.decision.flat().to_vec());
        }
    }

    #[test]
    fn rates_respect_crude_caps() {
        let m = random_instance(101);
        let mut rng = Rng::new(102);
        let cap = 2.0 + 2.0 + (2.0f64 * 2.0 * 2.0).log2();
        for _ in 0..20 {
            let d = random_decision(&m, 2, &mut rng);
            let p = rate_corner(&m, &d).unwrap();
            assert!(p.r1 >= 0.0 && p.r2 >= 0.0);
            assert!(p.r1 <= cap && p.r2 <= cap);
        }
    }
}
