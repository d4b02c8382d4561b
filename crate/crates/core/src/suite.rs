//! The degeneration and invariant battery: action-free reductions checked
//! by paired grid searches, loose-budget zero-rate checks, budget
//! monotonicity ladders, and structural invariants on sampled decisions.
//!
//! The action-free reductions verify that when the vending channel ignores
//! the action and the cost is zero, restricting the action alphabet to a
//! single symbol does not change the scalarized grid minima: replacing a
//! decision's action component with a constant never increases any rate
//! bound in that regime, and the constant-action family embeds in the full
//! one, so the paired minima must coincide.

use crate::broadcast::{
    assemble_joint as assemble_joint3, corner, vertex_triple, BroadcastDecision,
};
use crate::cascade::{assemble_joint, bayes_decoder, decoder_distortion, CascadeDecision, SymbolDecoder};
use crate::models::{
    BroadcastCRModel, CascadeVendingModel, ConstraintBudget, CostTable, DistortionTable,
};
use crate::oracle::{brute_force_broadcast, brute_force_cascade, GridSpec};
use crate::prob::{CondKernel, FiniteAlphabet, JointPmf};
use crate::rng::Rng;
use crate::search::SearchConfig;

#[derive(Clone, Debug)]
pub struct BatteryCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct BatteryReport {
    pub checks: Vec<BatteryCheck>,
}

impl BatteryReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn push(&mut self, name: impl Into<String>, pass: bool, detail: String) {
        self.checks.push(BatteryCheck {
            name: name.into(),
            pass,
            detail,
        });
    }
}

fn bin(name: &str) -> FiniteAlphabet {
    FiniteAlphabet::binary(name)
}

/// Random binary cascade instance whose vending channel ignores the action
/// (`p(z|a,y) = p(z|y)`) and whose cost is identically zero.
pub fn action_free_cascade(seed: u64) -> CascadeVendingModel {
    let mut rng = Rng::new(seed);
    let source = JointPmf::new(vec![bin("X"), bin("Y")], rng.positive_pmf(4)).unwrap();
    let rows: Vec<Vec<f64>> = (0..2).map(|_| rng.simplex(2)).collect();
    let vm = CondKernel::from_fn(vec![bin("A"), bin("Y")], vec![bin("Z")], |f, t| {
        rows[f[1]][t[0]]
    })
    .unwrap();
    CascadeVendingModel::new(
        source,
        vm,
        DistortionTable::hamming(bin("X"), bin("X1")),
        DistortionTable::hamming(bin("X"), bin("X2")),
        CostTable::zero(bin("A")),
    )
    .unwrap()
}

/// Random binary broadcast instance with `p(y|a,x) = p(y|x)` and zero cost.
pub fn action_free_broadcast(seed: u64) -> BroadcastCRModel {
    let mut rng = Rng::new(seed);
    let source = JointPmf::new(vec![bin("X")], rng.positive_pmf(2)).unwrap();
    let rows: Vec<Vec<f64>> = (0..2).map(|_| rng.simplex(2)).collect();
    let vm = CondKernel::from_fn(vec![bin("A"), bin("X")], vec![bin("Y")], |f, t| {
        rows[f[1]][t[0]]
    })
    .unwrap();
    BroadcastCRModel::new(
        source,
        vm,
        DistortionTable::hamming(bin("X"), bin("X1")),
        DistortionTable::hamming(bin("X"), bin("X2")),
        CostTable::zero(bin("A")),
    )
    .unwrap()
}

/// The same cascade model with the action alphabet restricted to one
/// symbol (the channel's `a = 0` slice, which by construction equals every
/// other slice in the action-free family).
pub fn restrict_actions_cascade(m: &CascadeVendingModel) -> CascadeVendingModel {
    let a1 = FiniteAlphabet::singleton("A");
    let ny = m.y.size();
    let nz = m.z.size();
    let vm_values: Vec<f64> = (0..ny)
        .flat_map(|y| (0..nz).map(move |z| m.vm_channel.values()[y * nz + z]))
        .collect();
    let vm = CondKernel::new(vec![a1.clone(), m.y.clone()], vec![m.z.clone()], vm_values).unwrap();
    CascadeVendingModel::new(
        m.source.clone(),
        vm,
        m.d1.clone(),
        m.d2.clone(),
        CostTable::zero(a1),
    )
    .unwrap()
}

/// Single-action restriction of a broadcast model (action-free family).
pub fn restrict_actions_broadcast(m: &BroadcastCRModel) -> BroadcastCRModel {
    let a1 = FiniteAlphabet::singleton("A");
    let nx = m.x.size();
    let ny = m.y.size();
    let vm_values: Vec<f64> = (0..nx)
        .flat_map(|x| (0..ny).map(move |y| m.vm_channel.values()[x * ny + y]))
        .collect();
    let vm = CondKernel::new(vec![a1.clone(), m.x.clone()], vec![m.y.clone()], vm_values).unwrap();
    BroadcastCRModel::new(
        m.source.clone(),
        vm,
        m.d1.clone(),
        m.d2.clone(),
        CostTable::zero(a1),
    )
    .unwrap()
}

/// Paired-grid action-free reduction checks (two families per model),
/// loose-budget zero checks and oracle budget ladders.
pub fn degeneracy_suite(seed: u64) -> BatteryReport {
    let mut rep = BatteryReport::default();
    let cascade_weights = [(1.0, 1.0), (1.0, 0.0), (0.0, 1.0)];
    // Lexicographic-compatible weights (wb > w1 + w2, w2 >= w1), where the
    // pinned vertex is the exact weighted-sum optimum.
    let broadcast_weights = [(1.0, 2.0, 4.0), (0.0, 1.0, 2.0), (1.0, 1.0, 3.0)];

    for (fi, s) in [seed, seed.wrapping_add(1)].iter().enumerate() {
        let m = action_free_cascade(*s);
        let r = restrict_actions_cascade(&m);
        let budget = ConstraintBudget::new(0.3, 0.3, 1.0).unwrap();
        let grid = GridSpec {
            resolution: 2,
            u_size: 2,
            guard: 10_000_000,
        };
        match (
            brute_force_cascade(&m, &budget, &cascade_weights, &grid),
            brute_force_cascade(&r, &budget, &cascade_weights, &grid),
        ) {
            (Ok(full), Ok(restricted)) => {
                for ((w, f), g) in cascade_weights.iter().zip(&full).zip(&restricted) {
                    let of = w.0 * f.r1 + w.1 * f.r2;
                    let og = w.0 * g.r1 + w.1 * g.r2;
                    let delta = (of - og).abs();
                    rep.push(
                        format!("cascade-action-free-{fi}-w{:?}", w),
                        delta <= 1e-3,
                        format!("full {of:.9} vs single-action {og:.9} (|delta| {delta:.2e})"),
                    );
                }
            }
            _ => rep.push(
                format!("cascade-action-free-{fi}"),
                false,
                "grid search failed".into(),
            ),
        }
    }

    for (fi, s) in [seed.wrapping_add(2), seed.wrapping_add(3)].iter().enumerate() {
        let m = action_free_broadcast(*s);
        let r = restrict_actions_broadcast(&m);
        let budget = ConstraintBudget::new(0.25, 0.25, 1.0).unwrap();
        let grid = GridSpec::default();
        match (
            brute_force_broadcast(&m, &budget, &broadcast_weights, &grid),
            brute_force_broadcast(&r, &budget, &broadcast_weights, &grid),
        ) {
            (Ok(full), Ok(restricted)) => {
                for ((w, f), g) in broadcast_weights.iter().zip(&full).zip(&restricted) {
                    let of = w.0 * f.r1 + w.1 * f.r2 + w.2 * f.rb;
                    let og = w.0 * g.r1 + w.1 * g.r2 + w.2 * g.rb;
                    let delta = (of - og).abs();
                    rep.push(
                        format!("broadcast-action-free-{fi}-w{:?}", w),
                        delta <= 1e-3,
                        format!("full {of:.9} vs single-action {og:.9} (|delta| {delta:.2e})"),
                    );
                }
            }
            _ => rep.push(
                format!("broadcast-action-free-{fi}"),
                false,
                "grid search failed".into(),
            ),
        }
    }

    // Loose budgets: zero rates at the constant decision.
    {
        let m = action_free_cascade(seed.wrapping_add(4));
        let budget = ConstraintBudget::loose(&m.d1, &m.d2, &m.cost);
        let grid = GridSpec {
            resolution: 2,
            u_size: 2,
            guard: 10_000_000,
        };
        let pass = match brute_force_cascade(&m, &budget, &[(1.0, 1.0)], &grid) {
            Ok(out) => out[0].r1 + out[0].r2 < 1e-12,
            Err(_) => false,
        };
        rep.push("cascade-loose-budget-zero", pass, String::new());

        let mb = action_free_broadcast(seed.wrapping_add(5));
        let budget3 = ConstraintBudget::loose(&mb.d1, &mb.d2, &mb.cost);
        let pass3 = match brute_force_broadcast(&mb, &budget3, &[(1.0, 2.0, 4.0)], &GridSpec::default())
        {
            Ok(out) => out[0].r1 + out[0].r2 + out[0].rb < 1e-12,
            Err(_) => false,
        };
        rep.push("broadcast-loose-budget-zero", pass3, String::new());
    }

    // Oracle budget ladder: exact minima are nonincreasing.
    {
        let m = action_free_cascade(seed.wrapping_add(6));
        let grid = GridSpec {
            resolution: 2,
            u_size: 2,
            guard: 10_000_000,
        };
        let mut prev = f64::INFINITY;
        let mut pass = true;
        let mut detail = String::new();
        for step in 0..5 {
            let d = 0.1 + 0.1 * step as f64;
            let budget = ConstraintBudget::new(d, d, 1.0).unwrap();
            match brute_force_cascade(&m, &budget, &[(1.0, 1.0)], &grid) {
                Ok(out) => {
                    let obj = out[0].r1 + out[0].r2;
                    if obj > prev + 1e-12 {
                        pass = false;
                    }
                    detail.push_str(&format!("{obj:.6} "));
                    prev = obj;
                }
                Err(e) => {
                    pass = false;
                    detail = e.to_string();
                    break;
                }
            }
        }
        rep.push("cascade-oracle-ladder", pass, detail);
    }

    rep
}

/// Structural invariants on sampled random decisions: factorization
/// Markov/independence checks, bound ordering, pinned-vertex feasibility,
/// and Bayes-decoder optimality against exhaustive enumeration.
pub fn structural_invariants(seed: u64, samples: usize) -> BatteryReport {
    let mut rep = BatteryReport::default();
    let mut rng = Rng::new(seed);

    let mc = action_free_cascade(seed.wrapping_add(10));
    let mut max_mi: f64 = 0.0;
    let mut bayes_ok = true;
    for _ in 0..samples {
        let dim = mc.x1hat.size() * mc.a.size() * 2;
        let mut v = Vec::new();
        for _ in 0..4 {
            v.extend(rng.simplex(dim));
        }
        let d = CascadeDecision::from_flat(&mc, 2, v).unwrap();
        let j = assemble_joint(&mc, &d).unwrap();
        let mi = j.mutual_information(&["X"], &["Z"], &["A", "Y"]).unwrap();
        max_mi = max_mi.max(mi);
        // Bayes vs exhaustive (|X2|^(|U||Z|) = 16 decoders).
        let f = bayes_decoder(&j, &mc.d2).unwrap();
        let best = decoder_distortion(&j, &mc.d2, &f).unwrap();
        for code in 0..16usize {
            let table: Vec<usize> = (0..4).map(|c| (code >> c) & 1).collect();
            let cand = SymbolDecoder::new(2, 2, table);
            if decoder_distortion(&j, &mc.d2, &cand).unwrap() < best - 1e-12 {
                bayes_ok = false;
            }
        }
    }
    rep.push(
        "cascade-markov-factorization",
        max_mi <= 1e-10,
        format!("max I(X;Z|A,Y) = {max_mi:.2e} over {samples} decisions"),
    );
    rep.push(
        "cascade-bayes-optimality",
        bayes_ok,
        format!("{samples} decisions x 16 decoders"),
    );

    let mb = action_free_broadcast(seed.wrapping_add(11));
    let mut max_ci: f64 = 0.0;
    let mut order_ok = true;
    let mut vertex_ok = true;
    for _ in 0..samples {
        let mut v = Vec::new();
        for _ in 0..2 {
            v.extend(rng.simplex(2));
        }
        for _ in 0..2 {
            v.extend(rng.simplex(4));
        }
        let d = BroadcastDecision::from_flat(&mb, &v).unwrap();
        let j = assemble_joint3(&mb, &d).unwrap();
        let ci = j
            .mutual_information(&["X1", "X2"], &["A", "Y"], &["X"])
            .unwrap();
        max_ci = max_ci.max(ci);
        let p = corner(&mb, &d).unwrap();
        if !(p.l_b <= p.l_1b + 1e-12 && p.l_b <= p.l_2b + 1e-12 && p.l_2b <= p.l_12b + 1e-12) {
            order_ok = false;
        }
        let (r1, r2, rb) = vertex_triple(p.l_b, p.l_1b, p.l_2b, p.l_12b);
        let slack = (rb - p.l_b)
            .min(r1 + rb - p.l_1b)
            .min(r2 + rb - p.l_2b)
            .min(r1 + r2 + rb - p.l_12b);
        if slack < -1e-9 {
            vertex_ok = false;
        }
    }
    rep.push(
        "broadcast-cr-independence",
        max_ci <= 1e-10,
        format!("max I(X1,X2;A,Y|X) = {max_ci:.2e} over {samples} decisions"),
    );
    rep.push("broadcast-bound-ordering", order_ok, String::new());
    rep.push("broadcast-vertex-feasibility", vertex_ok, String::new());
    rep
}

/// Optimizer budget ladders (warm-started) in each budget coordinate.
pub fn monotonicity_ladders(seed: u64) -> BatteryReport {
    let mut rep = BatteryReport::default();
    for (i, s) in [seed, seed.wrapping_add(1), seed.wrapping_add(2)]
        .iter()
        .enumerate()
    {
        let m = ladder_cascade_instance(*s);
        let cfg = SearchConfig {
            restarts: 8,
            seed: *s,
            u_size: Some(2),
            ..Default::default()
        };
        for (coord, name) in [(0usize, "d1"), (1, "d2"), (2, "gamma")] {
            let mut warm: Vec<Vec<f64>> = Vec::new();
            let mut prev = f64::INFINITY;
            let mut pass = true;
            let mut detail = String::new();
            for step in 0..5 {
                let t = 0.05 + 0.2 * step as f64;
                let (d1, d2, g) = match coord {
                    0 => (t, 0.25, 0.6),
                    1 => (0.25, t, 0.6),
                    _ => (0.25, 0.25, t),
                };
                let budget = ConstraintBudget::new(d1, d2, g).unwrap();
                match crate::cascade::min_weighted_rate_warm(&m, &budget, (1.0, 1.0), &cfg, &warm)
                {
                    Ok(p) => {
                        let obj = p.r1 + p.r2;
                        if obj > prev + 1e-9 {
                            pass = false;
                        }
                        detail.push_str(&format!("{obj:.6} "));
                        prev = obj;
                        warm.push(p.decision.flat().to_vec());
                    }
                    Err(_) => {
                        // tighter steps may be infeasible; skip them
                        detail.push_str("inf ");
                    }
                }
            }
            rep.push(format!("ladder-{i}-{name}"), pass, detail);
        }
    }
    rep
}

fn ladder_cascade_instance(seed: u64) -> CascadeVendingModel {
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
        CostTable::new(bin("A"), vec![0.1, 0.9]).unwrap(),
    )
    .unwrap()
}

/// The full battery: degeneration suite, structural invariants and
/// monotonicity ladders.
pub fn run_battery(seed: u64) -> BatteryReport {
    let mut rep = degeneracy_suite(seed);
    rep.checks
        .extend(structural_invariants(seed.wrapping_add(100), 200).checks);
    rep.checks
        .extend(monotonicity_ladders(seed.wrapping_add(200)).checks);
    rep
}
