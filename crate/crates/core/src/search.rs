//! Multi-start projected local search over products of probability
//! simplices, shared by both region optimizers.
//!
//! A decision is a flat vector split into simplex blocks (one block per
//! conditioning cell). Constraints are handled by a quadratic penalty whose
//! weight grows by x10 per restart round, plus a feasibility filter on the
//! final candidates; near-feasible candidates are pulled exactly feasible by
//! mixing toward a known feasible anchor. Restarts may run concurrently;
//! the merge is a min-reduction ordered by (objective, restart index), so
//! the result does not depend on scheduling.

use crate::rng::Rng;

/// Search settings. `u_size` is carried here because the auxiliary alphabet
/// is a property of the search space, not of the model.
#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub restarts: u32,
    pub max_iters: u32,
    pub seed: u64,
    pub u_size: Option<usize>,
    pub penalty_init: f64,
    pub penalty_rounds: u32,
    /// Enumerate every deterministic decision as a seed when their count is
    /// at most this cap.
    pub det_seed_cap: usize,
    /// A candidate is kept only when every constraint excess is below this.
    pub feas_tol: f64,
    pub converge_window: u32,
    pub converge_eps: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            restarts: 32,
            max_iters: 400,
            seed: 1,
            u_size: None,
            penalty_init: 10.0,
            penalty_rounds: 4,
            det_seed_cap: 4096,
            feas_tol: 1e-12,
            converge_window: 50,
            converge_eps: 1e-9,
        }
    }
}

/// Objective over a product of simplices. `evaluate` returns the raw
/// objective and the constraint excesses (achieved minus budget; positive
/// means violated). Implementations must be pure.
pub trait BlockObjective: Sync {
    fn block_dims(&self) -> Vec<usize>;
    fn evaluate(&self, x: &[f64]) -> (f64, Vec<f64>);
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub objective: f64,
    pub excess: Vec<f64>,
    /// Restart index that produced the point (deterministic provenance);
    /// u32::MAX marks a seed-phase candidate.
    pub restart: u32,
    pub seed: u64,
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &mut [f64]) {
    let n = v.len();
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
    // Exact renormalization guards against drift.
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        for x in v.iter_mut() {
            *x /= s;
        }
    } else {
        v.fill(1.0 / n as f64);
    }
}

fn project_blocks(x: &mut [f64], dims: &[usize]) {
    let mut off = 0;
    for &d in dims {
        project_simplex(&mut x[off..off + d]);
        off += d;
    }
}

fn feasible(excess: &[f64], tol: f64) -> bool {
    excess.iter().all(|&e| e <= tol)
}

fn penalized(obj: f64, excess: &[f64], mu: f64) -> f64 {
    let pen: f64 = excess.iter().map(|&e| e.max(0.0).powi(2)).sum();
    obj + mu * pen
}

/// Deterministic vertex enumeration: every assignment of one pure output
/// per block, in lexicographic order.
fn vertex_seed(dims: &[usize], mut index: usize) -> Vec<f64> {
    let choices: Vec<usize> = dims
        .iter()
        .rev()
        .map(|&d| {
            let c = index % d;
            index /= d;
            c
        })
        .collect();
    let mut x = Vec::with_capacity(dims.iter().sum());
    for (bi, &d) in dims.iter().enumerate() {
        let c = choices[dims.len() - 1 - bi];
        for j in 0..d {
            x.push(if j == c { 1.0 } else { 0.0 });
        }
    }
    x
}

fn vertex_count(dims: &[usize]) -> Option<usize> {
    let mut n: usize = 1;
    for &d in dims {
        n = n.checked_mul(d)?;
        if n > 1 << 40 {
            return None;
        }
    }
    Some(n)
}

/// Smallest mix toward a feasible anchor that makes the point exactly
/// feasible: bisection on `(1-t) x + t anchor`. The distortion and cost
/// functionals are monotone along the segment in practice; the returned
/// point is re-evaluated, never assumed feasible.
fn polish_to_feasible(
    obj: &dyn BlockObjective,
    x: &[f64],
    anchor: &[f64],
) -> Option<(Vec<f64>, f64, Vec<f64>)> {
    let eval_at = |t: f64| -> (Vec<f64>, f64, Vec<f64>, bool) {
        let p: Vec<f64> = x
            .iter()
            .zip(anchor)
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
        let (o, e) = obj.evaluate(&p);
        let f = feasible(&e, 0.0);
        (p, o, e, f)
    };
    let (_, _, _, f1) = eval_at(1.0);
    if !f1 {
        return None;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (_, _, _, f) = eval_at(mid);
        if f {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (p, o, e, f) = eval_at(hi);
    if f {
        Some((p, o, e))
    } else {
        None
    }
}

/// One penalized projected-gradient descent from `start`.
fn refine(
    obj: &dyn BlockObjective,
    dims: &[usize],
    start: &[f64],
    mu: f64,
    cfg: &SearchConfig,
) -> Vec<f64> {
    let n = start.len();
    let mut x = start.to_vec();
    let (o0, e0) = obj.evaluate(&x);
    let mut fx = penalized(o0, &e0, mu);
    let mut best_window = fx;
    let mut since_improve = 0u32;
    let mut grad = vec![0.0f64; n];
    let h = 1e-6;
    for _ in 0..cfg.max_iters {
        // Forward-difference gradient of the penalized objective.
        for i in 0..n {
            let old = x[i];
            x[i] = old + h;
            let (o, e) = obj.evaluate(&x);
            grad[i] = (penalized(o, &e, mu) - fx) / h;
            x[i] = old;
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-14 {
            break;
        }
        let mut step = 0.25 / gnorm.max(1.0);
        let mut accepted = false;
        for _ in 0..24 {
            let mut cand: Vec<f64> = x
                .iter()
                .zip(&grad)
                .map(|(xi, gi)| xi - step * gi)
                .collect();
            project_blocks(&mut cand, dims);
            let (o, e) = obj.evaluate(&cand);
            let fc = penalized(o, &e, mu);
            if fc < fx - 1e-15 {
                x = cand;
                fx = fc;
                accepted = true;
                break;
            }
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
        if !accepted {
            break;
        }
        if fx < best_window - cfg.converge_eps {
            best_window = fx;
            since_improve = 0;
        } else {
            since_improve += 1;
            if since_improve >= cfg.converge_window {
                break;
            }
        }
    }
    x
}

struct Candidate {
    x: Vec<f64>,
    objective: f64,
    excess: Vec<f64>,
    restart: u32,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    (a.objective, a.restart) < (b.objective, b.restart)
}

fn worker_count() -> usize {
    if let Ok(v) = std::env::var("CASCADE_RD_WORKERS") {
        if let Ok(n) = v.parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get().min(8))
        .unwrap_or(1)
}

/// Multi-start minimization. `warm_starts` are extra seed points (e.g. the
/// witnesses of a neighboring budget or weight). Returns the best feasible
/// point found, or None when nothing feasible was seen at this resolution.
pub fn minimize(
    obj: &dyn BlockObjective,
    cfg: &SearchConfig,
    warm_starts: &[Vec<f64>],
) -> Option<SearchResult> {
    let dims = obj.block_dims();
    let total: usize = dims.iter().sum();

    fn consider(cand: Candidate, tol: f64, best: &mut Option<Candidate>) {
        if feasible(&cand.excess, tol) && best.as_ref().map(|b| better(&cand, b)).unwrap_or(true) {
            *best = Some(cand);
        }
    }

    // Seed phase: deterministic vertices (when enumerable), the uniform
    // decision, and warm starts. Seeds are scored exactly.
    let mut best_feasible: Option<Candidate> = None;
    let mut best_any: Option<(f64, Vec<f64>)> = None; // (penalized score, point)

    let mut seeds: Vec<Vec<f64>> = Vec::new();
    if let Some(vc) = vertex_count(&dims) {
        if vc <= cfg.det_seed_cap {
            for i in 0..vc {
                seeds.push(vertex_seed(&dims, i));
            }
        }
    }
    let uniform: Vec<f64> = dims
        .iter()
        .flat_map(|&d| std::iter::repeat(1.0 / d as f64).take(d))
        .collect();
    seeds.push(uniform);
    seeds.extend(warm_starts.iter().cloned());

    for s in &seeds {
        debug_assert_eq!(s.len(), total);
        let (o, e) = obj.evaluate(s);
        let score = penalized(o, &e, cfg.penalty_init);
        if best_any.as_ref().map(|(b, _)| score < *b).unwrap_or(true) {
            best_any = Some((score, s.clone()));
        }
        consider(
            Candidate {
                x: s.clone(),
                objective: o,
                excess: e,
                restart: u32::MAX,
            },
            cfg.feas_tol,
            &mut best_feasible,
        );
    }
    let anchor: Option<Vec<f64>> = best_feasible.as_ref().map(|c| c.x.clone());

    // Restart phase: rounds of random starts with a growing penalty weight,
    // plus one descent from the best seed per round.
    let rounds = cfg.penalty_rounds.max(1);
    let per_round = (cfg.restarts / rounds).max(1);
    let mut jobs: Vec<(u32, f64, Option<Vec<f64>>)> = Vec::new();
    let mut restart_idx = 0u32;
    for r in 0..rounds {
        let mu = cfg.penalty_init * 10f64.powi(r as i32);
        if let Some((_, b)) = &best_any {
            jobs.push((restart_idx, mu, Some(b.clone())));
            restart_idx += 1;
        }
        for _ in 0..per_round {
            jobs.push((restart_idx, mu, None));
            restart_idx += 1;
        }
    }

    let nworkers = worker_count().min(jobs.len().max(1));
    let base_rng = Rng::new(cfg.seed);
    let dims_ref = &dims;
    let run_job = move |(idx, mu, start): &(u32, f64, Option<Vec<f64>>)| -> Candidate {
        let start_x = match start {
            Some(s) => s.clone(),
            None => {
                let mut r = base_rng.child(*idx as u64);
                let mut x = Vec::with_capacity(total);
                for &d in dims_ref {
                    x.extend(r.simplex(d));
                }
                x
            }
        };
        let refined = refine(obj, dims_ref, &start_x, *mu, cfg);
        let (o, e) = obj.evaluate(&refined);
        Candidate {
            x: refined,
            objective: o,
            excess: e,
            restart: *idx,
        }
    };

    let run_job = &run_job;
    let results: Vec<Candidate> = if nworkers <= 1 || jobs.len() <= 1 {
        jobs.iter().map(run_job).collect()
    } else {
        let chunk_size = jobs.len().div_ceil(nworkers);
        std::thread::scope(|scope| {
            let handles: Vec<_> = jobs
                .chunks(chunk_size)
                .map(|chunk| scope.spawn(move || chunk.iter().map(run_job).collect::<Vec<_>>()))
                .collect();
            let mut all = Vec::with_capacity(jobs.len());
            for h in handles {
                all.extend(h.join().expect("search worker"));
            }
            all
        })
    };

    for cand in results {
        if feasible(&cand.excess, cfg.feas_tol) {
            consider(cand, cfg.feas_tol, &mut best_feasible);
        } else if let Some(a) = &anchor {
            if let Some((px, po, pe)) = polish_to_feasible(obj, &cand.x, a) {
                consider(
                    Candidate {
                        x: px,
                        objective: po,
                        excess: pe,
                        restart: cand.restart,
                    },
                    cfg.feas_tol,
                    &mut best_feasible,
                );
            }
        }
    }

    best_feasible.map(|c| SearchResult {
        x: c.x,
        objective: c.objective,
        excess: c.excess,
        restart: c.restart,
        seed: cfg.seed,
    })
}
