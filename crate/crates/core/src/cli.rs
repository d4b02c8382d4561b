//! Batch front end: config ingestion, command dispatch, and deterministic
//! tabular output. Identical (config, seed) pairs produce byte-identical
//! output; every frontier row carries its seed, restart index and witness
//! hash so it can be re-derived.
//!
//! Exit codes: 0 success, 1 config error, 2 infeasible / not found,
//! 3 golden or oracle mismatch.

use std::fmt::Write as _;

use crate::broadcast::{self, RatePoint3};
use crate::cascade::{self, RatePoint2};
use crate::config::{build, Built, BuiltDecision, BuiltModel, RunConfig};
use crate::fm;
use crate::models::ConstraintBudget;
use crate::oracle::{self, OracleError};
use crate::suite;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

/// Nine significant digits, scientific: stable across platforms.
pub fn sig9(x: f64) -> String {
    format!("{:.8e}", x)
}

/// FNV-1a 64 over the flat decision values; hex witness fingerprint.
pub fn witness_hash(values: &[f64]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
    }
    format!("{h:016x}")
}

pub struct CmdOutput {
    pub text: String,
    pub exit: i32,
}

fn config_error(e: impl std::fmt::Display) -> CmdOutput {
    CmdOutput {
        text: format!("error: {e}\n"),
        exit: EXIT_CONFIG,
    }
}

pub fn load(config_text: &str) -> Result<Built, CmdOutput> {
    let cfg = RunConfig::from_json(config_text).map_err(config_error)?;
    build(&cfg).map_err(config_error)
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

fn eval_cascade_report(
    m: &crate::models::CascadeVendingModel,
    p: &RatePoint2,
    budget: &ConstraintBudget,
) -> String {
    let mut out = String::new();
    let j = cascade::assemble_joint(m, &p.decision).expect("witness joint");
    let mi_r1 = j
        .mutual_information(&["X"], &["X1", "A", "U"], &["Y"])
        .unwrap();
    let mi_a = j.mutual_information(&["X", "Y"], &["A"], &[]).unwrap();
    let mi_u = j
        .mutual_information(&["X", "Y"], &["U"], &["A", "Z"])
        .unwrap();
    writeln!(out, "model: cascade").unwrap();
    writeln!(out, "R1 = {}", sig9(p.r1)).unwrap();
    writeln!(out, "R2 = {}", sig9(p.r2)).unwrap();
    writeln!(out, "D1 = {}  (budget {})", sig9(p.d1), sig9(budget.d1)).unwrap();
    writeln!(out, "D2 = {}  (budget {})", sig9(p.d2), sig9(budget.d2)).unwrap();
    writeln!(
        out,
        "Gamma = {}  (budget {})",
        sig9(p.gamma),
        sig9(budget.gamma)
    )
    .unwrap();
    writeln!(out, "I(X;X1,A,U|Y) = {}", sig9(mi_r1)).unwrap();
    writeln!(out, "I(X,Y;A) = {}", sig9(mi_a)).unwrap();
    writeln!(out, "I(X,Y;U|A,Z) = {}", sig9(mi_u)).unwrap();
    writeln!(out, "decoder = {:?}", p.decoder.table()).unwrap();
    writeln!(out, "witness = {}", witness_hash(p.decision.flat())).unwrap();
    out
}

fn eval_broadcast_report(
    m: &crate::models::BroadcastCRModel,
    p: &RatePoint3,
    budget: &ConstraintBudget,
) -> String {
    let mut out = String::new();
    let j = broadcast::assemble_joint(m, &p.decision).expect("witness joint");
    let alpha = j.mutual_information(&["X"], &["A"], &[]).unwrap();
    let beta = j.mutual_information(&["X"], &["X2"], &["A"]).unwrap();
    let combined = j
        .mutual_information(&["X"], &["X1", "X2"], &["A", "Y"])
        .unwrap();
    let delta = j
        .mutual_information(&["X"], &["X1"], &["A", "Y", "X2"])
        .unwrap();
    writeln!(out, "model: broadcast").unwrap();
    writeln!(out, "L_b = {}", sig9(p.l_b)).unwrap();
    writeln!(out, "L_1b = {}", sig9(p.l_1b)).unwrap();
    writeln!(out, "L_2b = {}", sig9(p.l_2b)).unwrap();
    writeln!(out, "L_12b = {}", sig9(p.l_12b)).unwrap();
    writeln!(out, "R1 = {}", sig9(p.r1)).unwrap();
    writeln!(out, "R2 = {}", sig9(p.r2)).unwrap();
    writeln!(out, "Rb = {}", sig9(p.rb)).unwrap();
    writeln!(out, "D1 = {}  (budget {})", sig9(p.d1), sig9(budget.d1)).unwrap();
    writeln!(out, "D2 = {}  (budget {})", sig9(p.d2), sig9(budget.d2)).unwrap();
    writeln!(
        out,
        "Gamma = {}  (budget {})",
        sig9(p.gamma),
        sig9(budget.gamma)
    )
    .unwrap();
    writeln!(out, "I(X;A) = {}", sig9(alpha)).unwrap();
    writeln!(out, "I(X;X2|A) = {}", sig9(beta)).unwrap();
    writeln!(out, "I(X;X1,X2|A,Y) = {}", sig9(combined)).unwrap();
    writeln!(out, "I(X;X1|A,Y,X2) = {}", sig9(delta)).unwrap();
    writeln!(out, "witness = {}", witness_hash(&p.decision.flat())).unwrap();
    out
}

/// Evaluate an explicit decision from the config and print the corner with
/// every intermediate mutual-information term.
pub fn cmd_eval(config_text: &str) -> CmdOutput {
    let built = match load(config_text) {
        Ok(b) => b,
        Err(e) => return e,
    };
    let Some(decision) = built.decision else {
        return config_error("eval requires an explicit decision in the config");
    };
    match (&built.model, decision) {
        (BuiltModel::Cascade(m), BuiltDecision::Cascade(d)) => match cascade::rate_corner(m, &d) {
            Ok(p) => CmdOutput {
                text: eval_cascade_report(m, &p, &built.budget),
                exit: EXIT_OK,
            },
            Err(e) => config_error(e),
        },
        (BuiltModel::Broadcast(m), BuiltDecision::Broadcast(d)) => match broadcast::corner(m, &d) {
            Ok(p) => CmdOutput {
                text: eval_broadcast_report(m, &p, &built.budget),
                exit: EXIT_OK,
            },
            Err(e) => config_error(e),
        },
        _ => config_error("decision kind does not match the model kind"),
    }
}

// ---------------------------------------------------------------------------
// frontier
// ---------------------------------------------------------------------------

struct CsvRow {
    weights: Vec<f64>,
    fields: Option<Vec<f64>>, // rates then budgets then objective
    seed: u64,
    restart: String,
    witness: String,
    status: &'static str,
}

fn render_csv(header: &str, mut rows: Vec<CsvRow>) -> String {
    rows.sort_by(|a, b| {
        let wa: Vec<_> = a.weights.iter().map(|v| v.to_bits()).collect();
        let wb: Vec<_> = b.weights.iter().map(|v| v.to_bits()).collect();
        let ra = a.fields.as_ref().map(|f| f[0].to_bits()).unwrap_or(u64::MAX);
        let rb = b.fields.as_ref().map(|f| f[0].to_bits()).unwrap_or(u64::MAX);
        (wa, ra).cmp(&(wb, rb))
    });
    let mut out = String::new();
    writeln!(out, "{header}").unwrap();
    for r in rows {
        let mut cols: Vec<String> = r.weights.iter().map(|w| sig9(*w)).collect();
        match &r.fields {
            Some(fs) => cols.extend(fs.iter().map(|v| sig9(*v))),
            None => {
                let n = header.split(',').count() - r.weights.len() - 4;
                cols.extend(std::iter::repeat(String::new()).take(n));
            }
        }
        cols.push(r.seed.to_string());
        cols.push(r.restart.clone());
        cols.push(r.witness.clone());
        cols.push(r.status.to_string());
        writeln!(out, "{}", cols.join(",")).unwrap();
    }
    out
}

/// Trace the frontier (cascade) or surface (broadcast) and emit CSV.
pub fn cmd_frontier(config_text: &str) -> CmdOutput {
    let built = match load(config_text) {
        Ok(b) => b,
        Err(e) => return e,
    };
    match &built.model {
        BuiltModel::Cascade(m) => {
            let f = cascade::trace_frontier(m, &built.budget, &built.weights2, &built.search);
            let mut rows = Vec::new();
            let mut any = false;
            for (w, p) in f.weights.iter().zip(&f.points) {
                match p {
                    Some(p) => {
                        any = true;
                        rows.push(CsvRow {
                            weights: vec![w.0, w.1],
                            fields: Some(vec![
                                p.r1,
                                p.r2,
                                p.d1,
                                p.d2,
                                p.gamma,
                                w.0 * p.r1 + w.1 * p.r2,
                            ]),
                            seed: p.provenance.seed,
                            restart: p.provenance.restart.to_string(),
                            witness: witness_hash(p.decision.flat()),
                            status: "ok",
                        });
                    }
                    None => rows.push(CsvRow {
                        weights: vec![w.0, w.1],
                        fields: None,
                        seed: built.search.seed,
                        restart: String::new(),
                        witness: String::new(),
                        status: "no-feasible",
                    }),
                }
            }
            CmdOutput {
                text: render_csv(
                    "w1,w2,R1,R2,D1,D2,Gamma,objective,seed,restart,witness,status",
                    rows,
                ),
                exit: if any { EXIT_OK } else { EXIT_INFEASIBLE },
            }
        }
        BuiltModel::Broadcast(m) => {
            let s = broadcast::trace_surface3(m, &built.budget, &built.weights3, &built.search);
            let mut rows = Vec::new();
            let mut any = false;
            for (w, p) in s.weights.iter().zip(&s.points) {
                match p {
                    Some(p) => {
                        any = true;
                        rows.push(CsvRow {
                            weights: vec![w.0, w.1, w.2],
                            fields: Some(vec![
                                p.r1,
                                p.r2,
                                p.rb,
                                p.d1,
                                p.d2,
                                p.gamma,
                                w.0 * p.r1 + w.1 * p.r2 + w.2 * p.rb,
                            ]),
                            seed: p.provenance.seed,
                            restart: p.provenance.restart.to_string(),
                            witness: witness_hash(&p.decision.flat()),
                            status: "ok",
                        });
                    }
                    None => rows.push(CsvRow {
                        weights: vec![w.0, w.1, w.2],
                        fields: None,
                        seed: built.search.seed,
                        restart: String::new(),
                        witness: String::new(),
                        status: "no-feasible",
                    }),
                }
            }
            CmdOutput {
                text: render_csv(
                    "w1,w2,wb,R1,R2,Rb,D1,D2,Gamma,objective,seed,restart,witness,status",
                    rows,
                ),
                exit: if any { EXIT_OK } else { EXIT_INFEASIBLE },
            }
        }
    }
}

// ---------------------------------------------------------------------------
// membership
// ---------------------------------------------------------------------------

pub fn cmd_membership(config_text: &str, r1: f64, r2: f64, rb: Option<f64>) -> CmdOutput {
    let built = match load(config_text) {
        Ok(b) => b,
        Err(e) => return e,
    };
    match &built.model {
        BuiltModel::Cascade(m) => {
            if rb.is_some() {
                return config_error("cascade membership takes (r1, r2) only");
            }
            match cascade::membership(m, r1, r2, &built.budget, &built.search) {
                cascade::Verdict2::Achievable(p) => CmdOutput {
                    text: format!(
                        "ACHIEVABLE\nwitness rates: R1 = {} R2 = {}\nwitness = {}\n",
                        sig9(p.r1),
                        sig9(p.r2),
                        witness_hash(p.decision.flat())
                    ),
                    exit: EXIT_OK,
                },
                cascade::Verdict2::NotFoundAtResolution => CmdOutput {
                    text: "NOT-FOUND-AT-RESOLUTION\n".to_string(),
                    exit: EXIT_INFEASIBLE,
                },
            }
        }
        BuiltModel::Broadcast(m) => {
            let Some(rb) = rb else {
                return config_error("broadcast membership needs --rb");
            };
            match broadcast::membership3(m, r1, r2, rb, &built.budget, &built.search) {
                broadcast::Verdict3::Achievable(p) => CmdOutput {
                    text: format!(
                        "ACHIEVABLE\nwitness bounds: L_b = {} L_1b = {} L_2b = {} L_12b = {}\nwitness = {}\n",
                        sig9(p.l_b),
                        sig9(p.l_1b),
                        sig9(p.l_2b),
                        sig9(p.l_12b),
                        witness_hash(&p.decision.flat())
                    ),
                    exit: EXIT_OK,
                },
                broadcast::Verdict3::NotFoundAtResolution => CmdOutput {
                    text: "NOT-FOUND-AT-RESOLUTION\n".to_string(),
                    exit: EXIT_INFEASIBLE,
                },
            }
        }
    }
}

// ---------------------------------------------------------------------------
// fm
// ---------------------------------------------------------------------------

/// Print the projected rate-split system and compare it to the built-in
/// golden region; exit 0 on exact match, 3 otherwise.
pub fn cmd_fm(drop_nonneg: &[String], reversed: bool) -> CmdOutput {
    let drops: Vec<&str> = drop_nonneg.iter().map(|s| s.as_str()).collect();
    for d in &drops {
        if !fm::SPLIT_RATE_VARS.contains(d) {
            return config_error(format!(
                "unknown split rate {d:?}; expected one of {:?}",
                fm::SPLIT_RATE_VARS
            ));
        }
    }
    let derived = fm::project_broadcast_with(&drops, reversed);
    let golden = fm::golden_broadcast_region();
    let mut text = fm::render_system(&derived);
    let matches = fm::systems_equal(&derived, &golden);
    if !matches {
        text.push_str("\nMISMATCH with the golden region:\n");
        text.push_str(&fm::render_system(&golden));
    }
    CmdOutput {
        text,
        exit: if matches { EXIT_OK } else { EXIT_MISMATCH },
    }
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

/// Optimizer-vs-oracle comparison at the configured grid: per-weight
/// deltas must lie within [-1e-9, +1e-3] bits.
pub fn cmd_oracle(config_text: &str) -> CmdOutput {
    let built = match load(config_text) {
        Ok(b) => b,
        Err(e) => return e,
    };
    let mut out = String::new();
    let mut pass = true;
    match &built.model {
        BuiltModel::Cascade(m) => {
            let mut search = built.search.clone();
            search.u_size = Some(built.grid.u_size); // pin both sides
            let oracle = match oracle::brute_force_cascade(m, &built.budget, &built.weights2, &built.grid)
            {
                Ok(o) => o,
                Err(OracleError::GuardExceeded { predicted, guard }) => {
                    return CmdOutput {
                        text: format!("guard exceeded: predicted {predicted} > {guard}\n"),
                        exit: EXIT_CONFIG,
                    }
                }
                Err(OracleError::EmptyFeasible) => {
                    return CmdOutput {
                        text: "no feasible lattice decision\n".to_string(),
                        exit: EXIT_INFEASIBLE,
                    }
                }
                Err(e) => return config_error(e),
            };
            writeln!(out, "weights,optimizer,oracle,delta,verdict").unwrap();
            for (w, o) in built.weights2.iter().zip(&oracle) {
                let obj_o = w.0 * o.r1 + w.1 * o.r2;
                match cascade::min_weighted_rate(m, &built.budget, *w, &search) {
                    Ok(p) => {
                        let obj = w.0 * p.r1 + w.1 * p.r2;
                        let delta = obj - obj_o;
                        let ok = (-1e-9..=1e-3).contains(&delta);
                        pass &= ok;
                        writeln!(
                            out,
                            "({};{}),{},{},{},{}",
                            sig9(w.0),
                            sig9(w.1),
                            sig9(obj),
                            sig9(obj_o),
                            sig9(delta),
                            if ok { "ok" } else { "out-of-window" }
                        )
                        .unwrap();
                    }
                    Err(_) => {
                        pass = false;
                        writeln!(out, "({};{}),,,,optimizer-no-feasible", sig9(w.0), sig9(w.1))
                            .unwrap();
                    }
                }
            }
        }
        BuiltModel::Broadcast(m) => {
            let oracle =
                match oracle::brute_force_broadcast(m, &built.budget, &built.weights3, &built.grid) {
                    Ok(o) => o,
                    Err(OracleError::GuardExceeded { predicted, guard }) => {
                        return CmdOutput {
                            text: format!("guard exceeded: predicted {predicted} > {guard}\n"),
                            exit: EXIT_CONFIG,
                        }
                    }
                    Err(OracleError::EmptyFeasible) => {
                        return CmdOutput {
                            text: "no feasible lattice decision\n".to_string(),
                            exit: EXIT_INFEASIBLE,
                        }
                    }
                    Err(e) => return config_error(e),
                };
            writeln!(out, "weights,optimizer,oracle,delta,verdict").unwrap();
            for (w, o) in built.weights3.iter().zip(&oracle) {
                let obj_o = w.0 * o.r1 + w.1 * o.r2 + w.2 * o.rb;
                match broadcast::min_weighted_rate3(m, &built.budget, *w, &built.search) {
                    Ok(p) => {
                        let obj = w.0 * p.r1 + w.1 * p.r2 + w.2 * p.rb;
                        let delta = obj - obj_o;
                        let ok = (-1e-9..=1e-3).contains(&delta);
                        pass &= ok;
                        writeln!(
                            out,
                            "({};{};{}),{},{},{},{}",
                            sig9(w.0),
                            sig9(w.1),
                            sig9(w.2),
                            sig9(obj),
                            sig9(obj_o),
                            sig9(delta),
                            if ok { "ok" } else { "out-of-window" }
                        )
                        .unwrap();
                    }
                    Err(_) => {
                        pass = false;
                        writeln!(
                            out,
                            "({};{};{}),,,,optimizer-no-feasible",
                            sig9(w.0),
                            sig9(w.1),
                            sig9(w.2)
                        )
                        .unwrap();
                    }
                }
            }
        }
    }
    writeln!(out, "{}", if pass { "PASS" } else { "FAIL" }).unwrap();
    CmdOutput {
        text: out,
        exit: if pass { EXIT_OK } else { EXIT_MISMATCH },
    }
}

// ---------------------------------------------------------------------------
// suite
// ---------------------------------------------------------------------------

/// Run the degeneration + invariant battery.
pub fn cmd_suite(seed: u64) -> CmdOutput {
    let rep = suite::run_battery(seed);
    let mut out = String::new();
    for c in &rep.checks {
        writeln!(
            out,
            "[{}] {} {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        )
        .unwrap();
    }
    let pass = rep.all_pass();
    writeln!(out, "{}: {} checks", if pass { "PASS" } else { "FAIL" }, rep.checks.len()).unwrap();
    CmdOutput {
        text: out,
        exit: if pass { EXIT_OK } else { EXIT_MISMATCH },
    }
}
