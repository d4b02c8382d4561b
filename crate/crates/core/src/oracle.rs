//! Brute-force ground truth: exhaustive minimization over the lattice of
//! decision kernels whose conditional simplices have denominator K.
//!
//! Enumeration is a depth-first walk over per-cell lattice points with
//! sound pruning: distortion and cost accumulate per cell with nonnegative
//! contributions, so a partial assignment whose accumulated value plus the
//! best possible remainder already exceeds a budget can be cut. The guard
//! refuses instances whose predicted (post-filter) leaf count exceeds the
//! configured bound instead of running forever.

use thiserror::Error;

use crate::broadcast::{
    corner_from_flat as corner3_from_flat, vertex_triple, BroadcastEvaluator, BroadcastScratch,
    RatePoint3,
};
use crate::cascade::{
    corner_from_flat, CascadeEvaluator, CascadeScratch, Provenance, RatePoint2, RegionError,
};
use crate::models::{BroadcastCRModel, CascadeVendingModel, ConstraintBudget};

/// Lattice resolution and guard for brute-force searches.
#[derive(Clone, Copy, Debug)]
pub struct GridSpec {
    /// Simplex denominator K: entries are multiples of 1/K.
    pub resolution: u32,
    /// Auxiliary alphabet size pinned for the comparison.
    pub u_size: usize,
    /// Hard bound on predicted leaf evaluations.
    pub guard: u128,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            resolution: 4,
            u_size: 2,
            guard: 100_000_000,
        }
    }
}

/// Feasibility slack allowed when comparing against budgets.
pub const ORACLE_FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("predicted enumeration count {predicted} exceeds the guard {guard}")]
    GuardExceeded { predicted: u128, guard: u128 },
    #[error("no feasible lattice decision at this resolution")]
    EmptyFeasible,
    #[error(transparent)]
    Region(#[from] RegionError),
}

/// `C(k + dim - 1, dim - 1)`: lattice points of the (dim-1)-simplex with
/// denominator k.
pub fn count_simplex_lattice(k: u32, dim: usize) -> u128 {
    let n = k as u128 + dim as u128 - 1;
    let r = (dim - 1) as u128;
    let r = r.min(n - r);
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..r {
        num *= n - i;
        den *= i + 1;
        let g = gcd_u128(num, den);
        num /= g;
        den /= g;
    }
    num / den
}

fn gcd_u128(a: u128, b: u128) -> u128 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// All compositions of k into `dim` nonnegative parts, as probabilities
/// i/k, first coordinate descending (the point mass on index 0 comes
/// first, so ties resolve toward constant-style decisions).
pub fn lattice_points(k: u32, dim: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut parts = vec![0u32; dim];
    fn rec(k_left: u32, pos: usize, parts: &mut Vec<u32>, k: u32, out: &mut Vec<Vec<f64>>) {
        if pos == parts.len() - 1 {
            parts[pos] = k_left;
            out.push(parts.iter().map(|&p| p as f64 / k as f64).collect());
            return;
        }
        for v in (0..=k_left).rev() {
            parts[pos] = v;
            rec(k_left - v, pos + 1, parts, k, out);
        }
    }
    if dim == 1 {
        return vec![vec![1.0]];
    }
    rec(k, 0, &mut parts, k, &mut out);
    out
}

/// One enumeration block: admitted lattice points with their prunable
/// budget contributions (d1, d2, gamma).
struct Block {
    points: Vec<Vec<f64>>,
    contribs: Vec<[f64; 3]>,
    min_contrib: [f64; 3],
    offset: usize,
    dim: usize,
}

fn build_blocks(
    dims_and_contrib: Vec<(usize, Box<dyn Fn(&[f64]) -> [f64; 3]>)>,
    k: u32,
    budget: [f64; 3],
) -> Option<Vec<Block>> {
    // First pass: raw lattice and per-block minimum contributions.
    let mut raw: Vec<(Vec<Vec<f64>>, Vec<[f64; 3]>, [f64; 3])> = Vec::new();
    for (dim, contrib_fn) in &dims_and_contrib {
        let pts = lattice_points(k, *dim);
        let contribs: Vec<[f64; 3]> = pts.iter().map(|p| contrib_fn(p)).collect();
        let mut min_c = [f64::INFINITY; 3];
        for c in &contribs {
            for i in 0..3 {
                min_c[i] = min_c[i].min(c[i]);
            }
        }
        raw.push((pts, contribs, min_c));
    }
    // Second pass: admit a point only when it fits within the budget after
    // granting every other block its minimum contribution.
    let total_min: [f64; 3] = {
        let mut t = [0.0; 3];
        for (_, _, m) in &raw {
            for i in 0..3 {
                t[i] += m[i];
            }
        }
        t
    };
    let mut blocks = Vec::new();
    let mut offset = 0usize;
    for (pts, contribs, min_c) in raw {
        let dim = pts[0].len();
        let mut fpts = Vec::new();
        let mut fcon = Vec::new();
        for (p, c) in pts.into_iter().zip(contribs) {
            let ok = (0..3).all(|i| c[i] + (total_min[i] - min_c[i]) <= budget[i] + ORACLE_FEAS_TOL);
            if ok {
                fpts.push(p);
                fcon.push(c);
            }
        }
        if fpts.is_empty() {
            return None;
        }
        let mut new_min = [f64::INFINITY; 3];
        for c in &fcon {
            for i in 0..3 {
                new_min[i] = new_min[i].min(c[i]);
            }
        }
        blocks.push(Block {
            points: fpts,
            contribs: fcon,
            min_contrib: new_min,
            offset,
            dim,
        });
        offset += dim;
    }
    Some(blocks)
}

fn predicted_count(blocks: &[Block]) -> u128 {
    blocks
        .iter()
        .fold(1u128, |acc, b| acc.saturating_mul(b.points.len() as u128))
}

/// Best leaf per weight vector: objective, corner summary, flat decision
/// and the enumeration index tuple for deterministic tie-breaking.
struct Best {
    objective: f64,
    index: Vec<usize>,
    flat: Vec<f64>,
}

fn merge_best(slot: &mut Option<Best>, cand_obj: f64, idx: &[usize], flat: &[f64]) {
    let replace = match slot {
        None => true,
        Some(b) => {
            cand_obj < b.objective
                || (cand_obj == b.objective && idx < b.index.as_slice())
        }
    };
    if replace {
        *slot = Some(Best {
            objective: cand_obj,
            index: idx.to_vec(),
            flat: flat.to_vec(),
        });
    }
}

/// Depth-first enumeration with budget pruning; `eval_leaf` scores a full
/// flat decision and returns per-weight objectives, or None when the leaf
/// fails a non-prunable feasibility check.
fn dfs_enumerate(
    blocks: &[Block],
    budget: [f64; 3],
    suffix_min: &[[f64; 3]],
    level: usize,
    partial: [f64; 3],
    flat: &mut [f64],
    idx: &mut Vec<usize>,
    bests: &mut [Option<Best>],
    eval_leaf: &mut dyn FnMut(&[f64]) -> Option<Vec<f64>>,
) {
    if level == blocks.len() {
        if let Some(objs) = eval_leaf(flat) {
            for (slot, obj) in bests.iter_mut().zip(objs) {
                merge_best(slot, obj, idx, flat);
            }
        }
        return;
    }
    let b = &blocks[level];
    for (pi, (p, c)) in b.points.iter().zip(&b.contribs).enumerate() {
        let mut next = partial;
        let mut ok = true;
        for i in 0..3 {
            next[i] += c[i];
            if next[i] + suffix_min[level + 1][i] > budget[i] + ORACLE_FEAS_TOL {
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        flat[b.offset..b.offset + b.dim].copy_from_slice(p);
        idx.push(pi);
        dfs_enumerate(
            blocks,
            budget,
            suffix_min,
            level + 1,
            next,
            flat,
            idx,
            bests,
            eval_leaf,
        );
        idx.pop();
    }
}

fn suffix_minima(blocks: &[Block]) -> Vec<[f64; 3]> {
    let mut out = vec![[0.0; 3]; blocks.len() + 1];
    for l in (0..blocks.len()).rev() {
        for i in 0..3 {
            out[l][i] = out[l + 1][i] + blocks[l].min_contrib[i];
        }
    }
    out
}

/// Predicted leaf count for the cascade enumeration (after the cell-local
/// feasibility filter). Errors only when a block has no admissible points.
pub fn predicted_count_cascade(
    m: &CascadeVendingModel,
    budget: &ConstraintBudget,
    grid: &GridSpec,
) -> Result<u128, OracleError> {
    let blocks = cascade_blocks(m, budget, grid).ok_or(OracleError::EmptyFeasible)?;
    Ok(predicted_count(&blocks))
}

fn cascade_blocks(
    m: &CascadeVendingModel,
    budget: &ConstraintBudget,
    grid: &GridSpec,
) -> Option<Vec<Block>> {
    let (nx, ny) = (m.x.size(), m.y.size());
    let (n1, na, nu) = (m.x1hat.size(), m.a.size(), grid.u_size);
    let dim = n1 * na * nu;
    let pxy = m.source.values().to_vec();
    let d1 = m.d1.values().to_vec();
    let cost = m.cost.values().to_vec();
    let mut specs: Vec<(usize, Box<dyn Fn(&[f64]) -> [f64; 3]>)> = Vec::new();
    for x in 0..nx {
        for y in 0..ny {
            let base = pxy[x * ny + y];
            let d1 = d1.clone();
            let cost = cost.clone();
            specs.push((
                dim,
                Box::new(move |p: &[f64]| {
                    let mut c = [0.0f64; 3];
                    for x1 in 0..n1 {
                        for a in 0..na {
                            for u in 0..nu {
                                let v = base * p[(x1 * na + a) * nu + u];
                                c[0] += v * d1[x * n1 + x1];
                                c[2] += v * cost[a];
                            }
                        }
                    }
                    c
                }),
            ));
        }
    }
    build_blocks(specs, grid.resolution, [budget.d1, budget.d2, budget.gamma])
}

/// Exact minimum of every scalarized objective over the lattice, subject
/// to the budget. Deterministic: ties keep the first decision in
/// enumeration order.
pub fn brute_force_cascade(
    m: &CascadeVendingModel,
    budget: &ConstraintBudget,
    weights: &[(f64, f64)],
    grid: &GridSpec,
) -> Result<Vec<RatePoint2>, OracleError> {
    let blocks = cascade_blocks(m, budget, grid).ok_or(OracleError::EmptyFeasible)?;
    let predicted = predicted_count(&blocks);
    if predicted > grid.guard {
        return Err(OracleError::GuardExceeded {
            predicted,
            guard: grid.guard,
        });
    }
    let ev = CascadeEvaluator::new(m, grid.u_size);
    let mut scratch = CascadeScratch::default();
    let total: usize = blocks.iter().map(|b| b.dim).sum();
    let mut flat = vec![0.0; total];
    let mut idx: Vec<usize> = Vec::with_capacity(blocks.len());
    let mut bests: Vec<Option<Best>> = (0..weights.len()).map(|_| None).collect();
    let suffix = suffix_minima(&blocks);
    let b = *budget;
    let w = weights.to_vec();
    let mut eval_leaf = |k: &[f64]| -> Option<Vec<f64>> {
        let v = ev.corners(k, &mut scratch, None);
        if v.d1 > b.d1 + ORACLE_FEAS_TOL
            || v.d2 > b.d2 + ORACLE_FEAS_TOL
            || v.gamma > b.gamma + ORACLE_FEAS_TOL
        {
            return None;
        }
        Some(w.iter().map(|&(w1, w2)| w1 * v.r1 + w2 * v.r2).collect())
    };
    dfs_enumerate(
        &blocks,
        [b.d1, b.d2, b.gamma],
        &suffix,
        0,
        [0.0; 3],
        &mut flat,
        &mut idx,
        &mut bests,
        &mut eval_leaf,
    );
    let mut out = Vec::with_capacity(weights.len());
    for best in bests {
        let best = best.ok_or(OracleError::EmptyFeasible)?;
        let p = corner_from_flat(m, grid.u_size, &best.flat, Provenance::default())?;
        out.push(p);
    }
    Ok(out)
}

fn broadcast_blocks(
    m: &BroadcastCRModel,
    budget: &ConstraintBudget,
    grid: &GridSpec,
) -> Option<Vec<Block>> {
    let nx = m.x.size();
    let na = m.a.size();
    let (n1, n2) = (m.x1hat.size(), m.x2hat.size());
    let nr = n1 * n2;
    let px = m.source.values().to_vec();
    let d1 = m.d1.values().to_vec();
    let d2 = m.d2.values().to_vec();
    let cost = m.cost.values().to_vec();
    let mut specs: Vec<(usize, Box<dyn Fn(&[f64]) -> [f64; 3]>)> = Vec::new();
    for x in 0..nx {
        let base = px[x];
        let cost = cost.clone();
        specs.push((
            na,
            Box::new(move |p: &[f64]| {
                let mut c = [0.0f64; 3];
                for (a, pa) in p.iter().enumerate() {
                    c[2] += base * pa * cost[a];
                }
                c
            }),
        ));
    }
    for x in 0..nx {
        let base = px[x];
        let d1 = d1.clone();
        let d2 = d2.clone();
        specs.push((
            nr,
            Box::new(move |p: &[f64]| {
                let mut c = [0.0f64; 3];
                for (r, pr) in p.iter().enumerate() {
                    let x1 = r / n2;
                    let x2 = r % n2;
                    c[0] += base * pr * d1[x * n1 + x1];
                    c[1] += base * pr * d2[x * n2 + x2];
                }
                c
            }),
        ));
    }
    build_blocks(specs, grid.resolution, [budget.d1, budget.d2, budget.gamma])
}

/// Predicted leaf count for the broadcast enumeration.
pub fn predicted_count_broadcast(
    m: &BroadcastCRModel,
    budget: &ConstraintBudget,
    grid: &GridSpec,
) -> Result<u128, OracleError> {
    let blocks = broadcast_blocks(m, budget, grid).ok_or(OracleError::EmptyFeasible)?;
    Ok(predicted_count(&blocks))
}

/// Exact lattice minimum of the weighted pinned-vertex triple for every
/// weight vector, subject to the budget.
pub fn brute_force_broadcast(
    m: &BroadcastCRModel,
    budget: &ConstraintBudget,
    weights: &[(f64, f64, f64)],
    grid: &GridSpec,
) -> Result<Vec<RatePoint3>, OracleError> {
    let blocks = broadcast_blocks(m, budget, grid).ok_or(OracleError::EmptyFeasible)?;
    let predicted = predicted_count(&blocks);
    if predicted > grid.guard {
        return Err(OracleError::GuardExceeded {
            predicted,
            guard: grid.guard,
        });
    }
    let ev = BroadcastEvaluator::new(m);
    let mut scratch = BroadcastScratch::default();
    let total: usize = blocks.iter().map(|b| b.dim).sum();
    let mut flat = vec![0.0; total];
    let mut idx: Vec<usize> = Vec::with_capacity(blocks.len());
    let mut bests: Vec<Option<Best>> = (0..weights.len()).map(|_| None).collect();
    let suffix = suffix_minima(&blocks);
    let b = *budget;
    let w = weights.to_vec();
    let mut eval_leaf = |k: &[f64]| -> Option<Vec<f64>> {
        let v = ev.bounds(k, &mut scratch);
        if v.d1 > b.d1 + ORACLE_FEAS_TOL
            || v.d2 > b.d2 + ORACLE_FEAS_TOL
            || v.gamma > b.gamma + ORACLE_FEAS_TOL
        {
            return None;
        }
        let (r1, r2, rb) = vertex_triple(v.l_b, v.l_1b, v.l_2b, v.l_12b);
        Some(
            w.iter()
                .map(|&(w1, w2, wb)| w1 * r1 + w2 * r2 + wb * rb)
                .collect(),
        )
    };
    dfs_enumerate(
        &blocks,
        [b.d1, b.d2, b.gamma],
        &suffix,
        0,
        [0.0; 3],
        &mut flat,
        &mut idx,
        &mut bests,
        &mut eval_leaf,
    );
    let mut out = Vec::with_capacity(weights.len());
    for best in bests {
        let best = best.ok_or(OracleError::EmptyFeasible)?;
        let p = corner3_from_flat(m, &best.flat, Provenance::default())?;
        out.push(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CostTable, DistortionTable};
    use crate::prob::{CondKernel, FiniteAlphabet, JointPmf};
    use crate::rng::Rng;
    use crate::search::SearchConfig;

    fn bin(name: &str) -> FiniteAlphabet {
        FiniteAlphabet::binary(name)
    }

    #[test]
    fn lattice_counts_match_stars_and_bars() {
        assert_eq!(count_simplex_lattice(2, 2), 3);
        assert_eq!(count_simplex_lattice(4, 8), 330);
        assert_eq!(lattice_points(2, 2).len(), 3);
        assert_eq!(lattice_points(4, 8).len(), 330);
        assert_eq!(lattice_points(4, 4).len(), count_simplex_lattice(4, 4) as usize);
        // two conditioning cells with binary output at K = 2: 3^2 kernels
        assert_eq!(count_simplex_lattice(2, 2).pow(2), 9);
        // the cascade decision at K = 4 with all-binary alphabets and
        // u_size 2 has 330^4 lattice kernels
        let full: u128 = (0..4).fold(1u128, |acc, _| acc * count_simplex_lattice(4, 8));
        assert_eq!(full, 330u128.pow(4));
        assert_eq!(full, 11_859_210_000u128);
    }

    #[test]
    fn lattice_points_binary_k2() {
        let pts = lattice_points(2, 2);
        assert_eq!(pts, vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]]);
    }

    fn small_cascade(seed: u64) -> CascadeVendingModel {
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

    #[test]
    fn guard_refuses_oversized_enumeration() {
        let m = small_cascade(1);
        let budget = ConstraintBudget::loose(&m.d1, &m.d2, &m.cost);
        let grid = GridSpec {
            resolution: 4,
            u_size: 2,
            guard: 1_000_000,
        };
        match brute_force_cascade(&m, &budget, &[(1.0, 1.0)], &grid) {
            Err(OracleError::GuardExceeded { predicted, .. }) => {
                assert_eq!(predicted, 330u128.pow(4));
            }
            other => panic!("expected guard refusal, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn zero_budget_prunes_the_lattice_hard() {
        let m = small_cascade(2);
        let budget = ConstraintBudget::new(0.0, 0.0, 2.0).unwrap();
        let grid = GridSpec::default();
        // Hamming d1 at D1 = 0 pins x1 = x in every cell: C(4+3,3)^4.
        let predicted = predicted_count_cascade(&m, &budget, &grid).unwrap();
        assert_eq!(predicted, 35u128.pow(4));
    }

    #[test]
    fn loose_budget_minimum_is_constant_decision() {
        let m = small_cascade(3);
        let budget = ConstraintBudget::loose(&m.d1, &m.d2, &m.cost);
        let grid = GridSpec {
            resolution: 2,
            u_size: 2,
            guard: 10_000_000,
        };
        let out = brute_force_cascade(&m, &budget, &[(1.0, 1.0)], &grid).unwrap();
        assert!(out[0].r1 + out[0].r2 < 1e-12);
        // first-found tie-break: the witness is the all-constant decision
        let flat = out[0].decision.flat();
        let dim = 8;
        for c in 0..4 {
            assert_eq!(flat[c * dim], 1.0);
        }
    }

    #[test]
    fn forced_lossless_grid_matches_analytic_corner() {
        // Uniform X, useless Y and Z: minimum of R1 + R2 under D = 0 is
        // 2 H(X) = 2, attained at a copy-style lattice vertex.
        let source = JointPmf::new(vec![bin("X"), bin("Y")], vec![0.25; 4]).unwrap();
        let vm =
            CondKernel::from_fn(vec![bin("A"), bin("Y")], vec![bin("Z")], |_, _| 0.5).unwrap();
        let m = CascadeVendingModel::new(
            source,
            vm,
            DistortionTable::hamming(bin("X"), bin("X1")),
            DistortionTable::hamming(bin("X"), bin("X2")),
            CostTable::zero(bin("A")),
        )
        .unwrap();
        let budget = ConstraintBudget::new(0.0, 0.0, 1.0).unwrap();
        let grid = GridSpec::default();
        let out = brute_force_cascade(&m, &budget, &[(1.0, 1.0)], &grid).unwrap();
        assert!((out[0].r1 + out[0].r2 - 2.0).abs() < 1e-9, "{}", out[0].r1 + out[0].r2);
    }

    #[test]
    fn empty_feasible_set_is_reported() {
        // Singleton X1 cannot meet D1 = 0 on a binary source.
        let source = JointPmf::new(vec![bin("X"), bin("Y")], vec![0.25; 4]).unwrap();
        let vm =
            CondKernel::from_fn(vec![bin("A"), bin("Y")], vec![bin("Z")], |_, _| 0.5).unwrap();
        let m = CascadeVendingModel::new(
            source,
            vm,
            DistortionTable::hamming(bin("X"), FiniteAlphabet::singleton("X1")),
            DistortionTable::hamming(bin("X"), bin("X2")),
            CostTable::zero(bin("A")),
        )
        .unwrap();
        let budget = ConstraintBudget::new(0.0, 1.0, 1.0).unwrap();
        match brute_force_cascade(&m, &budget, &[(1.0, 1.0)], &GridSpec::default()) {
            Err(OracleError::EmptyFeasible) => {}
            other => panic!("expected EmptyFeasible, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn optimizer_never_beats_the_lattice_on_lossless_corpus() {
        // The optimizer searches the continuum but the lossless optimum is
        // a lattice vertex, so the delta stays in [-1e-9, 1e-3].
        let source = JointPmf::new(vec![bin("X"), bin("Y")], vec![0.3, 0.2, 0.15, 0.35]).unwrap();
        let vm = CondKernel::from_fn(vec![bin("A"), bin("Y")], vec![bin("Z")], |f, t| {
            if f[1] == t[0] {
                0.7
            } else {
                0.3
            }
        })
        .unwrap();
        let m = CascadeVendingModel::new(
            source,
            vm,
            DistortionTable::hamming(bin("X"), bin("X1")),
            DistortionTable::hamming(bin("X"), bin("X2")),
            CostTable::zero(bin("A")),
        )
        .unwrap();
        let budget = ConstraintBudget::new(0.0, 0.0, 1.0).unwrap();
        let grid = GridSpec::default();
        let weights = [(1.0, 1.0), (1.0, 0.0), (0.0, 1.0)];
        let oracle = brute_force_cascade(&m, &budget, &weights, &grid).unwrap();
        let cfg = SearchConfig {
            restarts: 8,
            seed: 7,
            u_size: Some(2),
            ..Default::default()
        };
        for (w, o) in weights.iter().zip(&oracle) {
            let opt = crate::cascade::min_weighted_rate(&m, &budget, *w, &cfg).unwrap();
            let delta = (w.0 * opt.r1 + w.1 * opt.r2) - (w.0 * o.r1 + w.1 * o.r2);
            assert!(delta >= -1e-9 && delta <= 1e-3, "delta {delta}");
        }
    }

    fn small_broadcast(seed: u64) -> BroadcastCRModel {
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

    #[test]
    fn broadcast_enumeration_size_and_loose_minimum() {
        let m = small_broadcast(5);
        let budget = ConstraintBudget::loose(&m.d1, &m.d2, &m.cost);
        let grid = GridSpec::default();
        let predicted = predicted_count_broadcast(&m, &budget, &grid).unwrap();
        // action cells: C(5,1)^2 = 25; recon cells: C(7,3)^2 = 35^2.
        assert_eq!(predicted, 25u128 * 35 * 35);
        let out = brute_force_broadcast(&m, &budget, &[(1.0, 2.0, 4.0)], &grid).unwrap();
        assert!(out[0].r1 + out[0].r2 + out[0].rb < 1e-12);
    }

    #[test]
    fn broadcast_optimizer_vs_oracle_on_lossless_instance() {
        let source = JointPmf::new(vec![bin("X")], vec![0.4, 0.6]).unwrap();
        // action-independent side channel
        let vm = CondKernel::from_fn(vec![bin("A"), bin("X")], vec![bin("Y")], |f, t| {
            if f[1] == t[0] {
                0.8
            } else {
                0.2
            }
        })
        .unwrap();
        let m = BroadcastCRModel::new(
            source,
            vm,
            DistortionTable::hamming(bin("X"), bin("X1")),
            DistortionTable::hamming(bin("X"), bin("X2")),
            CostTable::zero(bin("A")),
        )
        .unwrap();
        let budget = ConstraintBudget::new(0.0, 0.0, 1.0).unwrap();
        let grid = GridSpec::default();
        let weights = [(1.0, 2.0, 4.0), (0.0, 1.0, 2.0), (1.0, 1.0, 3.0)];
        let oracle = brute_force_broadcast(&m, &budget, &weights, &grid).unwrap();
        let cfg = SearchConfig {
            restarts: 8,
            seed: 9,
            ..Default::default()
        };
        for (w, o) in weights.iter().zip(&oracle) {
            let opt = crate::broadcast::min_weighted_rate3(&m, &budget, *w, &cfg).unwrap();
            let delta = (w.0 * opt.r1 + w.1 * opt.r2 + w.2 * opt.rb)
                - (w.0 * o.r1 + w.1 * o.r2 + w.2 * o.rb);
            assert!(delta >= -1e-9 && delta <= 1e-3, "delta {delta}");
        }
    }

    #[test]
    fn oracle_budget_ladder_is_monotone() {
        let m = small_cascade(13);
        let grid = GridSpec {
            resolution: 2,
            u_size: 2,
            guard: 10_000_000,
        };
        let mut prev = f64::INFINITY;
        for step in 0..5 {
            let d = 0.1 + 0.1 * step as f64;
            let budget = ConstraintBudget::new(d, d, 1.0).unwrap();
            let out = brute_force_cascade(&m, &budget, &[(1.0, 1.0)], &grid).unwrap();
            let obj = out[0].r1 + out[0].r2;
            assert!(obj <= prev + 1e-12);
            prev = obj;
        }
    }
}
