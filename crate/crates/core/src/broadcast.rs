//! The cascade-broadcast region under the common-reconstruction
//! constraint.
//!
//! A decision is the pair `p(a|x)` (actions driven by the broadcast
//! message) and `p(x1, x2 | x)` (reconstructions drawn from the source
//! symbol alone — this factorization IS the common-reconstruction
//! structure). The joint is `p(x, a) p(y | x, a) p(x1, x2 | x)` and the
//! region is cut out by four lower bounds:
//!
//! ```text
//! Rb           >= L_b   = I(X; A)
//! R1 + Rb      >= L_1b  = I(X; A) + I(X; X1, X2 | A, Y)
//! R2 + Rb      >= L_2b  = I(X; A) + I(X; X2 | A)
//! R1 + R2 + Rb >= L_12b = I(X; A) + I(X; X2 | A) + I(X; X1 | A, Y, X2)
//! ```
//!
//! Scalarization scores a decision at the lexicographically minimal vertex
//! `Rb = L_b`, `R2 = L_2b - L_b`, `R1 = max(L_1b - L_b, L_12b - L_2b)`,
//! which satisfies all four inequalities with equality in at least two and
//! is the exact weighted-sum optimum whenever `wb > w1 + w2` and
//! `w2 >= w1`.

use crate::cascade::{Provenance, RegionError};
use crate::models::{BroadcastCRModel, ConstraintBudget};
use crate::prob::{CondKernel, JointPmf, MI_CLAMP_TOL};
use crate::search::{minimize, BlockObjective, SearchConfig, SearchResult};

/// The optimizer's free variable for the broadcast model.
#[derive(Clone, Debug)]
pub struct BroadcastDecision {
    action_kernel: CondKernel,
    recon_kernel: CondKernel,
}

impl BroadcastDecision {
    pub fn new(
        m: &BroadcastCRModel,
        action_kernel: CondKernel,
        recon_kernel: CondKernel,
    ) -> Result<Self, RegionError> {
        let act_ok = action_kernel.from_axes().len() == 1
            && action_kernel.from_axes()[0] == m.x
            && action_kernel.to_axes().len() == 1
            && action_kernel.to_axes()[0] == m.a;
        if !act_ok {
            return Err(RegionError::DecisionMismatch(
                "action kernel must map X to A".into(),
            ));
        }
        let rec_ok = recon_kernel.from_axes().len() == 1
            && recon_kernel.from_axes()[0] == m.x
            && recon_kernel.to_axes().len() == 2
            && recon_kernel.to_axes()[0] == m.x1hat
            && recon_kernel.to_axes()[1] == m.x2hat;
        if !rec_ok {
            return Err(RegionError::DecisionMismatch(
                "reconstruction kernel must map X to (X1, X2)".into(),
            ));
        }
        Ok(BroadcastDecision {
            action_kernel,
            recon_kernel,
        })
    }

    /// Build from flat simplex blocks: `|X|` action cells over `A` followed
    /// by `|X|` reconstruction cells over `(X1, X2)`.
    pub fn from_flat(m: &BroadcastCRModel, values: &[f64]) -> Result<Self, RegionError> {
        let nx = m.x.size();
        let na = m.a.size();
        let nr = m.x1hat.size() * m.x2hat.size();
        let expected = nx * na + nx * nr;
        if values.len() != expected {
            return Err(RegionError::DecisionMismatch(format!(
                "flat decision has {} entries, expected {expected}",
                values.len()
            )));
        }
        let action_kernel = CondKernel::new(
            vec![m.x.clone()],
            vec![m.a.clone()],
            values[..nx * na].to_vec(),
        )?;
        let recon_kernel = CondKernel::new(
            vec![m.x.clone()],
            vec![m.x1hat.clone(), m.x2hat.clone()],
            values[nx * na..].to_vec(),
        )?;
        BroadcastDecision::new(m, action_kernel, recon_kernel)
    }

    /// Constant decision: action 0 and reconstruction (0, 0) everywhere.
    pub fn constant(m: &BroadcastCRModel) -> Result<Self, RegionError> {
        let nx = m.x.size();
        let na = m.a.size();
        let nr = m.x1hat.size() * m.x2hat.size();
        let mut v = vec![0.0; nx * na + nx * nr];
        for x in 0..nx {
            v[x * na] = 1.0;
            v[nx * na + x * nr] = 1.0;
        }
        BroadcastDecision::from_flat(m, &v)
    }

    /// Both reconstructions copy the source; constant action.
    pub fn lossless_copy(m: &BroadcastCRModel) -> Result<Self, RegionError> {
        let nx = m.x.size();
        let na = m.a.size();
        let n1 = m.x1hat.size();
        let n2 = m.x2hat.size();
        let mut v = vec![0.0; nx * na + nx * n1 * n2];
        for x in 0..nx {
            v[x * na] = 1.0;
            v[nx * na + x * (n1 * n2) + x * n2 + x] = 1.0;
        }
        BroadcastDecision::from_flat(m, &v)
    }

    pub fn action_kernel(&self) -> &CondKernel {
        &self.action_kernel
    }

    pub fn recon_kernel(&self) -> &CondKernel {
        &self.recon_kernel
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.action_kernel.values().to_vec();
        v.extend_from_slice(self.recon_kernel.values());
        v
    }
}

/// The four lower bounds, budget functionals and the pinned-vertex rate
/// triple for one decision, with the decision as witness.
#[derive(Clone, Debug)]
pub struct RatePoint3 {
    pub l_b: f64,
    pub l_1b: f64,
    pub l_2b: f64,
    pub l_12b: f64,
    /// Pinned-vertex assignment (see module docs).
    pub r1: f64,
    pub r2: f64,
    pub rb: f64,
    pub d1: f64,
    pub d2: f64,
    pub gamma: f64,
    pub decision: BroadcastDecision,
    pub provenance: Provenance,
}

impl RatePoint3 {
    /// Slack of the four inequalities at the stored triple (min over the
    /// four; nonnegative up to floating-point noise by construction).
    pub fn vertex_slack(&self) -> f64 {
        let s1 = self.rb - self.l_b;
        let s2 = self.r1 + self.rb - self.l_1b;
        let s3 = self.r2 + self.rb - self.l_2b;
        let s4 = self.r1 + self.r2 + self.rb - self.l_12b;
        s1.min(s2).min(s3).min(s4)
    }
}

/// The factorized joint over `(X, A, Y, X1, X2)` for a decision.
pub fn assemble_joint(
    m: &BroadcastCRModel,
    d: &BroadcastDecision,
) -> Result<JointPmf, RegionError> {
    Ok(m.source
        .compose(d.action_kernel())?
        .compose(&m.vm_channel)?
        .compose(d.recon_kernel())?)
}

fn clamp_mi(v: f64) -> f64 {
    if v < 0.0 && v >= -MI_CLAMP_TOL {
        0.0
    } else {
        v
    }
}

/// Pinned-vertex triple from the four bounds.
pub fn vertex_triple(l_b: f64, l_1b: f64, l_2b: f64, l_12b: f64) -> (f64, f64, f64) {
    let rb = l_b.max(0.0);
    let r2 = (l_2b - l_b).max(0.0);
    let r1 = (l_1b - l_b).max(l_12b - l_2b).max(0.0);
    (r1, r2, rb)
}

/// Evaluate the four bounds and budget functionals for a decision.
pub fn corner(m: &BroadcastCRModel, d: &BroadcastDecision) -> Result<RatePoint3, RegionError> {
    let j = assemble_joint(m, d)?;
    let l_b = j.mutual_information(&["X"], &["A"], &[])?;
    let combined = j.mutual_information(&["X"], &["X1", "X2"], &["A", "Y"])?;
    let beta = j.mutual_information(&["X"], &["X2"], &["A"])?;
    let delta = j.mutual_information(&["X"], &["X1"], &["A", "Y", "X2"])?;
    let l_1b = l_b + combined;
    let l_2b = l_b + beta;
    let l_12b = l_2b + delta;
    let d1 = crate::models::expected_distortion(&j, &m.d1, "X", "X1")?;
    let d2 = crate::models::expected_distortion(&j, &m.d2, "X", "X2")?;
    let gamma = crate::models::expected_cost(&j, &m.cost, "A")?;
    let (r1, r2, rb) = vertex_triple(l_b, l_1b, l_2b, l_12b);
    Ok(RatePoint3 {
        l_b,
        l_1b,
        l_2b,
        l_12b,
        r1,
        r2,
        rb,
        d1,
        d2,
        gamma,
        decision: d.clone(),
        provenance: Provenance::default(),
    })
}

// ---------------------------------------------------------------------------
// Fast evaluator
// ---------------------------------------------------------------------------

/// Raw bound and budget values from the fast path.
#[derive(Clone, Copy, Debug, Default)]
pub struct BoundValues {
    pub l_b: f64,
    pub l_1b: f64,
    pub l_2b: f64,
    pub l_12b: f64,
    pub d1: f64,
    pub d2: f64,
    pub gamma: f64,
}

/// Precomputed constants for evaluating one broadcast model. The decision
/// layout matches [`BroadcastDecision::from_flat`].
pub struct BroadcastEvaluator<'m> {
    pub m: &'m BroadcastCRModel,
    nx: usize,
    ny: usize,
    na: usize,
    n1: usize,
    n2: usize,
}

/// Reusable scratch buffers for [`BroadcastEvaluator::bounds`].
#[derive(Default, Clone)]
pub struct BroadcastScratch {
    j: Vec<f64>,     // (x, a, y, x1, x2)
    pxa: Vec<f64>,   // (x, a)
    pa: Vec<f64>,    // a
    pxax2: Vec<f64>, // (x, a, x2)
    pax2: Vec<f64>,  // (a, x2)
    pay: Vec<f64>,   // (a, y)
    pxay: Vec<f64>,  // (x, a, y)
    payr: Vec<f64>,  // (a, y, x1, x2)
    payx2: Vec<f64>,  // (a, y, x2)
    pxayx2: Vec<f64>, // (x, a, y, x2)
}

impl<'m> BroadcastEvaluator<'m> {
    pub fn new(m: &'m BroadcastCRModel) -> Self {
        BroadcastEvaluator {
            m,
            nx: m.x.size(),
            ny: m.y.size(),
            na: m.a.size(),
            n1: m.x1hat.size(),
            n2: m.x2hat.size(),
        }
    }

    pub fn action_cells(&self) -> usize {
        self.nx
    }

    pub fn action_dim(&self) -> usize {
        self.na
    }

    pub fn recon_dim(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn flat_len(&self) -> usize {
        self.nx * self.na + self.nx * self.recon_dim()
    }

    /// Bound and budget values for a flat decision.
    pub fn bounds(&self, k: &[f64], s: &mut BroadcastScratch) -> BoundValues {
        let (nx, ny, na, n1, n2) = (self.nx, self.ny, self.na, self.n1, self.n2);
        debug_assert_eq!(k.len(), self.flat_len());
        let px = self.m.source.values();
        let w = self.m.vm_channel.values(); // (a, x) -> y
        let ka = &k[..nx * na];
        let kr = &k[nx * na..];
        let nr = n1 * n2;

        s.j.clear();
        s.j.resize(nx * na * ny * nr, 0.0);
        s.pxa.clear();
        s.pxa.resize(nx * na, 0.0);
        s.pa.clear();
        s.pa.resize(na, 0.0);
        s.pxax2.clear();
        s.pxax2.resize(nx * na * n2, 0.0);
        s.pax2.clear();
        s.pax2.resize(na * n2, 0.0);
        s.pay.clear();
        s.pay.resize(na * ny, 0.0);
        s.pxay.clear();
        s.pxay.resize(nx * na * ny, 0.0);
        s.payr.clear();
        s.payr.resize(na * ny * nr, 0.0);
        s.payx2.clear();
        s.payx2.resize(na * ny * n2, 0.0);
        s.pxayx2.clear();
        s.pxayx2.resize(nx * na * ny * n2, 0.0);

        let mut d1 = 0.0;
        let mut d2 = 0.0;
        let mut gamma = 0.0;
        let d1t = self.m.d1.values();
        let d2t = self.m.d2.values();
        let cost = self.m.cost.values();

        for x in 0..nx {
            let base = px[x];
            for a in 0..na {
                let pxa = base * ka[x * na + a];
                if pxa == 0.0 {
                    continue;
                }
                s.pxa[x * na + a] = pxa;
                s.pa[a] += pxa;
                gamma += pxa * cost[a];
                for r in 0..nr {
                    let x2 = r % n2;
                    let v2 = pxa * kr[x * nr + r];
                    if v2 == 0.0 {
                        continue;
                    }
                    s.pxax2[(x * na + a) * n2 + x2] += v2;
                    s.pax2[a * n2 + x2] += v2;
                }
                for y in 0..ny {
                    let pxay = pxa * w[(a * nx + x) * ny + y];
                    if pxay == 0.0 {
                        continue;
                    }
                    s.pxay[(x * na + a) * ny + y] = pxay;
                    s.pay[a * ny + y] += pxay;
                    for r in 0..nr {
                        let v = pxay * kr[x * nr + r];
                        if v == 0.0 {
                            continue;
                        }
                        let x2 = r % n2;
                        s.j[((x * na + a) * ny + y) * nr + r] += v;
                        s.payr[(a * ny + y) * nr + r] += v;
                        s.payx2[(a * ny + y) * n2 + x2] += v;
                        s.pxayx2[((x * na + a) * ny + y) * n2 + x2] += v;
                    }
                }
            }
            for r in 0..nr {
                let x1 = r / n2;
                let x2 = r % n2;
                let v = base * kr[x * nr + r];
                d1 += v * d1t[x * n1 + x1];
                d2 += v * d2t[x * n2 + x2];
            }
        }

        // L_b = I(X; A) = H(X) + H(A) - H(X, A) via conditional form
        // H(X) - H(X|A): use the grouped sum directly.
        let mut h_x = 0.0;
        for x in 0..nx {
            if px[x] > 0.0 {
                h_x -= px[x] * px[x].log2();
            }
        }
        let mut h_x_a = 0.0;
        for x in 0..nx {
            for a in 0..na {
                let v = s.pxa[x * na + a];
                if v > 0.0 {
                    h_x_a += v * (s.pa[a] / v).log2();
                }
            }
        }
        let l_b = clamp_mi(h_x - h_x_a);

        // beta = I(X; X2 | A) = H(X|A) - H(X | X2, A).
        let mut h_x_ax2 = 0.0;
        for x in 0..nx {
            for a in 0..na {
                for x2 in 0..n2 {
                    let v = s.pxax2[(x * na + a) * n2 + x2];
                    if v > 0.0 {
                        h_x_ax2 += v * (s.pax2[a * n2 + x2] / v).log2();
                    }
                }
            }
        }
        let beta = clamp_mi(h_x_a - h_x_ax2);

        // combined = I(X; X1, X2 | A, Y) = H(X|A,Y) - H(X|A,Y,X1,X2).
        let mut h_x_ay = 0.0;
        for x in 0..nx {
            for a in 0..na {
                for y in 0..ny {
                    let v = s.pxay[(x * na + a) * ny + y];
                    if v > 0.0 {
                        h_x_ay += v * (s.pay[a * ny + y] / v).log2();
                    }
                }
            }
        }
        let mut h_x_ayr = 0.0;
        for x in 0..nx {
            for a in 0..na {
                for y in 0..ny {
                    for r in 0..n1 * n2 {
                        let v = s.j[((x * na + a) * ny + y) * (n1 * n2) + r];
                        if v > 0.0 {
                            h_x_ayr += v * (s.payr[(a * ny + y) * (n1 * n2) + r] / v).log2();
                        }
                    }
                }
            }
        }
        let combined = clamp_mi(h_x_ay - h_x_ayr);

        // delta = I(X; X1 | A, Y, X2) = H(X|A,Y,X2) - H(X|A,Y,X1,X2).
        let mut h_x_ayx2 = 0.0;
        for x in 0..nx {
            for a in 0..na {
                for y in 0..ny {
                    for x2 in 0..n2 {
                        let v = s.pxayx2[((x * na + a) * ny + y) * n2 + x2];
                        if v > 0.0 {
                            h_x_ayx2 += v * (s.payx2[(a * ny + y) * n2 + x2] / v).log2();
                        }
                    }
                }
            }
        }
        let delta = clamp_mi(h_x_ayx2 - h_x_ayr);

        let l_1b = l_b + combined;
        let l_2b = l_b + beta;
        let l_12b = l_2b + delta;
        BoundValues {
            l_b,
            l_1b,
            l_2b,
            l_12b,
            d1,
            d2,
            gamma,
        }
    }
}

/// Corner evaluation plus witness assembly for a flat decision.
pub fn corner_from_flat(
    m: &BroadcastCRModel,
    x: &[f64],
    provenance: Provenance,
) -> Result<RatePoint3, RegionError> {
    let ev = BroadcastEvaluator::new(m);
    let mut s = BroadcastScratch::default();
    let b = ev.bounds(x, &mut s);
    let decision = BroadcastDecision::from_flat(m, x)?;
    let (r1, r2, rb) = vertex_triple(b.l_b, b.l_1b, b.l_2b, b.l_12b);
    Ok(RatePoint3 {
        l_b: b.l_b,
        l_1b: b.l_1b,
        l_2b: b.l_2b,
        l_12b: b.l_12b,
        r1,
        r2,
        rb,
        d1: b.d1,
        d2: b.d2,
        gamma: b.gamma,
        decision,
        provenance,
    })
}

// ---------------------------------------------------------------------------
// Scalarized optimization and membership
// ---------------------------------------------------------------------------

struct BroadcastObjective<'m> {
    ev: BroadcastEvaluator<'m>,
    budget: ConstraintBudget,
    weights: (f64, f64, f64),
    /// Membership target `(R1, R2, Rb)`; when set the objective is the
    /// total violation of the four bound inequalities at that triple.
    target: Option<(f64, f64, f64)>,
}

impl BlockObjective for BroadcastObjective<'_> {
    fn block_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.ev.action_dim(); self.ev.action_cells()];
        dims.extend(std::iter::repeat(self.ev.recon_dim()).take(self.ev.action_cells()));
        dims
    }

    fn evaluate(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut s = BroadcastScratch::default();
        let b = self.ev.bounds(x, &mut s);
        let obj = match self.target {
            Some((t1, t2, tb)) => {
                (b.l_b - tb).max(0.0)
                    + (b.l_1b - (t1 + tb)).max(0.0)
                    + (b.l_2b - (t2 + tb)).max(0.0)
                    + (b.l_12b - (t1 + t2 + tb)).max(0.0)
            }
            None => {
                let (r1, r2, rb) = vertex_triple(b.l_b, b.l_1b, b.l_2b, b.l_12b);
                self.weights.0 * r1 + self.weights.1 * r2 + self.weights.2 * rb
            }
        };
        (
            obj,
            vec![
                b.d1 - self.budget.d1,
                b.d2 - self.budget.d2,
                b.gamma - self.budget.gamma,
            ],
        )
    }
}

fn search_internal3(
    m: &BroadcastCRModel,
    budget: &ConstraintBudget,
    weights: (f64, f64, f64),
    target: Option<(f64, f64, f64)>,
    cfg: &SearchConfig,
    warm: &[Vec<f64>],
) -> Option<(SearchResult, RatePoint3)> {
    let obj = BroadcastObjective {
        ev: BroadcastEvaluator::new(m),
        budget: *budget,
        weights,
        target,
    };
    let res = minimize(&obj, cfg, warm)?;
    let point = corner_from_flat(
        m,
        &res.x,
        Provenance {
            seed: res.seed,
            restart: res.restart,
        },
    )
    .ok()?;
    // The assigned triple must satisfy all four bound inequalities; checked
    // on every optimizer output.
    assert!(
        point.vertex_slack() >= -1e-9,
        "vertex assignment violates a bound: slack {}",
        point.vertex_slack()
    );
    Some((res, point))
}

/// Best found feasible decision minimizing the weighted pinned-vertex
/// triple `w1 R1 + w2 R2 + wb Rb`.
pub fn min_weighted_rate3(
    m: &BroadcastCRModel,
    budget: &ConstraintBudget,
    weights: (f64, f64, f64),
    cfg: &SearchConfig,
) -> Result<RatePoint3, RegionError> {
    min_weighted_rate3_warm(m, budget, weights, cfg, &[])
}

/// Same as [`min_weighted_rate3`] with extra warm-start decisions.
pub fn min_weighted_rate3_warm(
    m: &BroadcastCRModel,
    budget: &ConstraintBudget,
    weights: (f64, f64, f64),
    cfg: &SearchConfig,
    warm: &[Vec<f64>],
) -> Result<RatePoint3, RegionError> {
    search_internal3(m, budget, weights, None, cfg, warm)
        .map(|(_, p)| p)
        .ok_or(RegionError::NoFeasible)
}

/// Per-weight optimal triples plus the envelope flags: every point that is
/// the minimum for its own weight vector supports the convex envelope.
#[derive(Clone, Debug)]
pub struct Surface3 {
    pub weights: Vec<(f64, f64, f64)>,
    pub points: Vec<Option<RatePoint3>>,
    pub envelope: Vec<usize>,
}

/// Trace the surface over a 3-weight grid with warm starts and a final
/// cross-weight consistency pass.
pub fn trace_surface3(
    m: &BroadcastCRModel,
    budget: &ConstraintBudget,
    weights: &[(f64, f64, f64)],
    cfg: &SearchConfig,
) -> Surface3 {
    let mut found: Vec<Option<RatePoint3>> = Vec::with_capacity(weights.len());
    let mut warm: Vec<Vec<f64>> = Vec::new();
    for (wi, &w) in weights.iter().enumerate() {
        let mut wcfg = cfg.clone();
        wcfg.seed = cfg.seed.wrapping_add(wi as u64);
        match search_internal3(m, budget, w, None, &wcfg, &warm) {
            Some((res, p)) => {
                warm.push(res.x.clone());
                found.push(Some(p));
            }
            None => found.push(None),
        }
    }
    let candidates: Vec<RatePoint3> = found.iter().flatten().cloned().collect();
    for (wi, &(w1, w2, wb)) in weights.iter().enumerate() {
        let mut best: Option<RatePoint3> = found[wi].clone();
        for c in &candidates {
            let score = w1 * c.r1 + w2 * c.r2 + wb * c.rb;
            let better = match &best {
                Some(b) => score < w1 * b.r1 + w2 * b.r2 + wb * b.rb - 1e-15,
                None => false,
            };
            if better {
                best = Some(c.clone());
            }
        }
        found[wi] = best;
    }
    // A point is on the convex envelope when it attains the minimum of its
    // own supporting weight over all traced points.
    let mut envelope = Vec::new();
    for (wi, p) in found.iter().enumerate() {
        let Some(p) = p else { continue };
        let (w1, w2, wb) = weights[wi];
        let own = w1 * p.r1 + w2 * p.r2 + wb * p.rb;
        let is_min = found.iter().flatten().all(|q| {
            w1 * q.r1 + w2 * q.r2 + wb * q.rb >= own - 1e-12
        });
        if is_min {
            envelope.push(wi);
        }
    }
    Surface3 {
        weights: weights.to_vec(),
        points: found,
        envelope,
    }
}

/// Verdict of a 3-rate membership query.
#[derive(Clone, Debug)]
pub enum Verdict3 {
    Achievable(Box<RatePoint3>),
    NotFoundAtResolution,
}

/// Search for a feasible decision whose four bounds are satisfied by the
/// queried triple `(R1, R2, Rb)`.
pub fn membership3(
    m: &BroadcastCRModel,
    r1: f64,
    r2: f64,
    rb: f64,
    budget: &ConstraintBudget,
    cfg: &SearchConfig,
) -> Verdict3 {
    let check = |p: &RatePoint3| -> bool {
        rb + 1e-9 >= p.l_b
            && r1 + rb + 1e-9 >= p.l_1b
            && r2 + rb + 1e-9 >= p.l_2b
            && r1 + r2 + rb + 1e-9 >= p.l_12b
    };
    if let Some((_, p)) = search_internal3(m, budget, (0.0, 0.0, 0.0), Some((r1, r2, rb)), cfg, &[])
    {
        if check(&p) {
            return Verdict3::Achievable(Box::new(p));
        }
    }
    for w in [(1.0, 1.0, 1.0), (1.0, 2.0, 4.0), (0.0, 0.0, 1.0)] {
        if let Some((_, p)) = search_internal3(m, budget, w, None, cfg, &[]) {
            if check(&p) {
                return Verdict3::Achievable(Box::new(p));
            }
        }
    }
    Verdict3::NotFoundAtResolution
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CostTable, DistortionTable};
    use crate::prob::FiniteAlphabet;
    use crate::rng::Rng;

    fn bin(name: &str) -> FiniteAlphabet {
        FiniteAlphabet::binary(name)
    }

    fn sing(name: &str) -> FiniteAlphabet {
        FiniteAlphabet::singleton(name)
    }

    /// Singleton action, Y a perfect copy of X.
    fn copy_instance() -> BroadcastCRModel {
        let source = JointPmf::new(vec![bin("X")], vec![0.5, 0.5]).unwrap();
        let vm = CondKernel::from_fn(vec![sing("A"), bin("X")], vec![bin("Y")], |f, t| {
            if f[1] == t[0] {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        BroadcastCRModel::new(
            source,
            vm,
            DistortionTable::hamming(bin("X"), bin("X1")),
            DistortionTable::hamming(bin("X"), bin("X2")),
            CostTable::zero(sing("A")),
        )
        .unwrap()
    }

    fn random_instance(seed: u64) -> BroadcastCRModel {
        let mut rng = Rng::new(seed);
        let source = JointPmf::new(vec![bin("X")], rng.positive_pmf(2)).unwrap();
        let mut wv = Vec::new();
        for _ in 0..4 {
            wv.extend(rng.simplex(2));
        }
        let vm = CondKernel::new(vec![bin("A"), bin("X")], vec![bin("Y")], wv).unwrap();
        BroadcastCRModel::new(
            source,
            vm,
            DistortionTable::hamming(bin("X"), bin("X1")),
            DistortionTable::hamming(bin("X"), bin("X2")),
            CostTable::new(bin("A"), vec![0.0, 1.0]).unwrap(),
        )
        .unwrap()
    }

    fn random_decision(m: &BroadcastCRModel, rng: &mut Rng) -> BroadcastDecision {
        let mut v = Vec::new();
        for _ in 0..m.x.size() {
            v.extend(rng.simplex(m.a.size()));
        }
        for _ in 0..m.x.size() {
            v.extend(rng.simplex(m.x1hat.size() * m.x2hat.size()));
        }
        BroadcastDecision::from_flat(m, &v).unwrap()
    }

    #[test]
    fn assemble_singleton_action_factorizes() {
        let m = copy_instance();
        let d = BroadcastDecision::lossless_copy(&m).unwrap();
        let j = assemble_joint(&m, &d).unwrap();
        // p(x, y, x1, x2) concentrated on the diagonal.
        let mm = j.marginalize(&["X", "Y", "X1", "X2"]).unwrap();
        for x in 0..2 {
            assert!((mm.value(&[x, x, x, x]) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn assemble_recon_copy_is_diagonal() {
        let m = random_instance(5);
        let d = BroadcastDecision::lossless_copy(&m).unwrap();
        let j = assemble_joint(&m, &d).unwrap();
        let mm = j.marginalize(&["X", "X1", "X2"]).unwrap();
        for x in 0..2 {
            for x1 in 0..2 {
                for x2 in 0..2 {
                    if x == x1 && x == x2 {
                        continue;
                    }
                    assert!(mm.value(&[x, x1, x2]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn assembled_joint_satisfies_cr_independence() {
        let m = random_instance(7);
        let mut rng = Rng::new(8);
        for _ in 0..20 {
            let d = random_decision(&m, &mut rng);
            let j = assemble_joint(&m, &d).unwrap();
            let mi = j
                .mutual_information(&["X1", "X2"], &["A", "Y"], &["X"])
                .unwrap();
            assert!(mi <= 1e-10, "I(X1,X2; A,Y | X) = {mi}");
        }
    }

    #[test]
    fn constant_decision_all_bounds_zero() {
        let m = random_instance(9);
        let d = BroadcastDecision::constant(&m).unwrap();
        let p = corner(&m, &d).unwrap();
        assert!(p.l_b.abs() < 1e-12);
        assert!(p.l_1b.abs() < 1e-12);
        assert!(p.l_2b.abs() < 1e-12);
        assert!(p.l_12b.abs() < 1e-12);
    }

    #[test]
    fn copy_instance_corner_identities() {
        // Singleton A, Y = X, both reconstructions copy X:
        // L_b = 0, L_1b = 0 (conditioning on Y = X), L_2b = L_12b = H(X).
        let m = copy_instance();
        let d = BroadcastDecision::lossless_copy(&m).unwrap();
        let p = corner(&m, &d).unwrap();
        assert!(p.l_b.abs() < 1e-12);
        assert!(p.l_1b.abs() < 1e-12, "L_1b = {}", p.l_1b);
        assert!((p.l_2b - 1.0).abs() < 1e-12, "L_2b = {}", p.l_2b);
        assert!((p.l_12b - 1.0).abs() < 1e-12, "L_12b = {}", p.l_12b);
        assert!(p.d1.abs() < 1e-15 && p.d2.abs() < 1e-15);
    }

    #[test]
    fn chain_rule_consistency_of_l1b() {
        let m = random_instance(13);
        let mut rng = Rng::new(14);
        for _ in 0..20 {
            let d = random_decision(&m, &mut rng);
            let p = corner(&m, &d).unwrap();
            let j = assemble_joint(&m, &d).unwrap();
            let via_chain = p.l_b
                + j.mutual_information(&["X"], &["X2"], &["A", "Y"]).unwrap()
                + j.mutual_information(&["X"], &["X1"], &["A", "Y", "X2"]).unwrap();
            assert!((p.l_1b - via_chain).abs() < 1e-10);
        }
    }

    #[test]
    fn bound_ordering_holds() {
        let m = random_instance(15);
        let mut rng = Rng::new(16);
        for _ in 0..50 {
            let d = random_decision(&m, &mut rng);
            let p = corner(&m, &d).unwrap();
            assert!(p.l_b >= 0.0);
            assert!(p.l_b <= p.l_1b + 1e-12);
            assert!(p.l_b <= p.l_2b + 1e-12);
            assert!(p.l_2b <= p.l_12b + 1e-12);
        }
    }

    #[test]
    fn vertex_triple_is_feasible_for_every_decision() {
        let m = random_instance(17);
        let mut rng = Rng::new(18);
        for _ in 0..50 {
            let d = random_decision(&m, &mut rng);
            let p = corner(&m, &d).unwrap();
            assert!(
                p.vertex_slack() >= -1e-9,
                "vertex violates a bound: slack {}",
                p.vertex_slack()
            );
        }
    }

    #[test]
    fn fast_evaluator_matches_generic_corner() {
        let m = random_instance(19);
        let ev = BroadcastEvaluator::new(&m);
        let mut s = BroadcastScratch::default();
        let mut rng = Rng::new(20);
        for _ in 0..30 {
            let d = random_decision(&m, &mut rng);
            let slow = corner(&m, &d).unwrap();
            let fast = ev.bounds(&d.flat(), &mut s);
            assert!((slow.l_b - fast.l_b).abs() < 1e-12);
            assert!((slow.l_1b - fast.l_1b).abs() < 1e-12);
            assert!((slow.l_2b - fast.l_2b).abs() < 1e-12);
            assert!((slow.l_12b - fast.l_12b).abs() < 1e-12);
            assert!((slow.d1 - fast.d1).abs() < 1e-12);
            assert!((slow.d2 - fast.d2).abs() < 1e-12);
            assert!((slow.gamma - fast.gamma).abs() < 1e-12);
        }
    }

    #[test]
    fn loose_budget_surface_collapses_to_zero() {
        let m = random_instance(23);
        let budget = ConstraintBudget::loose(&m.d1, &m.d2, &m.cost);
        let cfg = SearchConfig {
            restarts: 4,
            seed: 24,
            ..Default::default()
        };
        let s = trace_surface3(
            &m,
            &budget,
            &[(1.0, 2.0, 4.0), (0.0, 1.0, 2.0), (1.0, 1.0, 3.0)],
            &cfg,
        );
        for p in s.points.iter().flatten() {
            assert!(p.r1 + p.r2 + p.rb < 1e-9);
        }
    }

    #[test]
    fn min_rb_with_free_cost_is_zero() {
        // Weights (0, 0, 1) minimize Rb alone; a constant action gives 0.
        let m = copy_instance();
        let budget = ConstraintBudget::loose(&m.d1, &m.d2, &m.cost);
        let cfg = SearchConfig {
            restarts: 4,
            seed: 25,
            ..Default::default()
        };
        let p = min_weighted_rate3(&m, &budget, (0.0, 0.0, 1.0), &cfg).unwrap();
        assert!(p.rb < 1e-9);
    }

    #[test]
    fn membership_verdicts_for_lossless_x2_over_useless_y() {
        // Useless Y, D2 = 0 forces X2 = X: (R1, R2, Rb) needs R2 + Rb >= H(X).
        let source = JointPmf::new(vec![bin("X")], vec![0.5, 0.5]).unwrap();
        let vm = CondKernel::from_fn(vec![bin("A"), bin("X")], vec![bin("Y")], |_, _| 0.5)
            .unwrap();
        let m = BroadcastCRModel::new(
            source,
            vm,
            DistortionTable::hamming(bin("X"), bin("X1")),
            DistortionTable::hamming(bin("X"), bin("X2")),
            CostTable::zero(bin("A")),
        )
        .unwrap();
        let budget = ConstraintBudget::new(1.0, 0.0, 1.0).unwrap();
        let cfg = SearchConfig {
            restarts: 6,
            seed: 26,
            ..Default::default()
        };
        match membership3(&m, 0.0, 1.0, 1.0, &budget, &cfg) {
            Verdict3::Achievable(_) => {}
            v => panic!("expected achievable, got {v:?}"),
        }
        assert!(matches!(
            membership3(&m, 0.0, 1.0, 0.0, &budget, &cfg),
            Verdict3::NotFoundAtResolution
        ));
        // A point strictly dominating a random corner's bounds is achievable.
        let mut rng = Rng::new(27);
        let d = random_decision(&m, &mut rng);
        let mut dv = d.flat();
        // force exact X2 copy to stay feasible under D2 = 0
        let nx = 2;
        let na = 2;
        let nr = 4;
        for x in 0..nx {
            for r in 0..nr {
                dv[nx * na + x * nr + r] = 0.0;
            }
            // x1 = 0, x2 = x
            dv[nx * na + x * nr + x] = 1.0;
        }
        let d = BroadcastDecision::from_flat(&m, &dv).unwrap();
        let p = corner(&m, &d).unwrap();
        match membership3(&m, p.r1 + 0.05, p.r2 + 0.05, p.rb + 0.05, &budget, &cfg) {
            Verdict3::Achievable(_) => {}
            v => panic!("expected achievable, got {v:?}"),
        }
    }

    #[test]
    fn zero_rates_achievable_under_loose_budget() {
        let m = random_instance(29);
        let budget = ConstraintBudget::loose(&m.d1, &m.d2, &m.cost);
        let cfg = SearchConfig {
            restarts: 4,
            seed: 30,
            ..Default::default()
        };
        assert!(matches!(
            membership3(&m, 0.0, 0.0, 0.0, &budget, &cfg),
            Verdict3::Achievable(_)
        ));
    }

    #[test]
    fn surface_monotone_in_budgets() {
        let m = random_instance(33);
        let cfg = SearchConfig {
            restarts: 8,
            seed: 34,
            ..Default::default()
        };
        let mut warm: Vec<Vec<f64>> = Vec::new();
        let mut prev = f64::INFINITY;
        for step in 0..5 {
            let dbud = 0.05 + 0.1 * step as f64;
            let budget = ConstraintBudget::new(dbud, dbud, 1.0).unwrap();
            let p =
                min_weighted_rate3_warm(&m, &budget, (1.0, 2.0, 4.0), &cfg, &warm).unwrap();
            let obj = p.r1 + 2.0 * p.r2 + 4.0 * p.rb;
            assert!(obj <= prev + 1e-9, "{obj} > {prev}");
            prev = obj;
            warm.push(p.decision.flat());
        }
    }
}
