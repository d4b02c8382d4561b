//! Run configuration: a single structured JSON document declaring the
//! model, budgets, search settings, weight grid and (optionally) an
//! explicit decision. Alphabets are declared first and referenced by name;
//! pmfs are nested arrays in declared axis order. A run is reproducible
//! from its config alone: the seed always comes from here, never from
//! time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::broadcast::BroadcastDecision;
use crate::cascade::CascadeDecision;
use crate::models::{
    BroadcastCRModel, CascadeVendingModel, ConstraintBudget, CostTable, DistortionTable,
};
use crate::oracle::GridSpec;
use crate::prob::{CondKernel, FiniteAlphabet, JointPmf};
use crate::search::SearchConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("json parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("unsupported schema_version {0}, expected {SCHEMA_VERSION}")]
    SchemaVersion(u32),
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_string(),
        message: message.into(),
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AlphabetDecl {
    pub name: String,
    #[serde(default)]
    pub symbols: Option<Vec<String>>,
    #[serde(default)]
    pub size: Option<usize>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TensorDecl {
    pub axes: Vec<String>,
    pub values: Value,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDecl {
    pub from: Vec<String>,
    pub to: Vec<String>,
    pub values: Value,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TableDecl {
    pub source: String,
    pub recon: String,
    pub values: Value,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CostDecl {
    pub action: String,
    pub values: Value,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: String,
    pub alphabets: Vec<AlphabetDecl>,
    pub source: TensorDecl,
    pub vm_channel: KernelDecl,
    pub d1: TableDecl,
    pub d2: TableDecl,
    pub cost: CostDecl,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub d1: f64,
    pub d2: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfigSer {
    pub restarts: u32,
    pub max_iters: u32,
    pub seed: u64,
    pub u_size: Option<usize>,
    pub penalty_init: f64,
    pub penalty_rounds: u32,
    pub det_seed_cap: usize,
}

impl Default for SearchConfigSer {
    fn default() -> Self {
        let d = SearchConfig::default();
        SearchConfigSer {
            restarts: d.restarts,
            max_iters: d.max_iters,
            seed: d.seed,
            u_size: d.u_size,
            penalty_init: d.penalty_init,
            penalty_rounds: d.penalty_rounds,
            det_seed_cap: d.det_seed_cap,
        }
    }
}

impl SearchConfigSer {
    pub fn to_search_config(&self) -> SearchConfig {
        SearchConfig {
            restarts: self.restarts,
            max_iters: self.max_iters,
            seed: self.seed,
            u_size: self.u_size,
            penalty_init: self.penalty_init,
            penalty_rounds: self.penalty_rounds,
            det_seed_cap: self.det_seed_cap,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionConfig {
    /// Cascade: nested values over `[x][y][x1][a][u]` (or flat).
    #[serde(default)]
    pub kernel: Option<Value>,
    #[serde(default)]
    pub u_size: Option<usize>,
    /// Broadcast: `p(a|x)` over `[x][a]` and `p(x1,x2|x)` over `[x][x1][x2]`.
    #[serde(default)]
    pub action: Option<Value>,
    #[serde(default)]
    pub recon: Option<Value>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfigSer {
    pub resolution: u32,
    pub u_size: usize,
    pub guard: u64,
}

impl Default for OracleConfigSer {
    fn default() -> Self {
        let g = GridSpec::default();
        OracleConfigSer {
            resolution: g.resolution,
            u_size: g.u_size,
            guard: g.guard as u64,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub model: ModelConfig,
    #[serde(default)]
    pub budget: Option<BudgetConfig>,
    #[serde(default)]
    pub search: SearchConfigSer,
    #[serde(default)]
    pub weights: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub decision: Option<DecisionConfig>,
    #[serde(default)]
    pub oracle: OracleConfigSer,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::SchemaVersion(cfg.schema_version));
        }
        Ok(cfg)
    }
}

/// A fully built problem instance.
pub enum BuiltModel {
    Cascade(CascadeVendingModel),
    Broadcast(BroadcastCRModel),
}

pub enum BuiltDecision {
    Cascade(CascadeDecision),
    Broadcast(BroadcastDecision),
}

pub struct Built {
    pub model: BuiltModel,
    pub budget: ConstraintBudget,
    pub search: SearchConfig,
    pub weights2: Vec<(f64, f64)>,
    pub weights3: Vec<(f64, f64, f64)>,
    pub decision: Option<BuiltDecision>,
    pub grid: GridSpec,
}

/// Parse a `values` JSON node against a shape: either nested arrays in
/// declared axis order or a flat array of the total length.
fn parse_tensor(v: &Value, shape: &[usize], path: &str) -> Result<Vec<f64>, ConfigError> {
    let total: usize = shape.iter().product();
    if let Value::Array(items) = v {
        // Flat form.
        if items.len() == total && items.iter().all(|x| x.is_number()) {
            return items
                .iter()
                .map(|x| {
                    x.as_f64()
                        .ok_or_else(|| invalid(path, "expected a number"))
                })
                .collect();
        }
    }
    fn rec(v: &Value, shape: &[usize], path: &str, out: &mut Vec<f64>) -> Result<(), ConfigError> {
        match shape.split_first() {
            None => {
                let x = v
                    .as_f64()
                    .ok_or_else(|| invalid(path, "expected a number"))?;
                out.push(x);
                Ok(())
            }
            Some((&n, rest)) => {
                let arr = v
                    .as_array()
                    .ok_or_else(|| invalid(path, format!("expected an array of length {n}")))?;
                if arr.len() != n {
                    return Err(invalid(
                        path,
                        format!("expected length {n}, found {}", arr.len()),
                    ));
                }
                for (i, item) in arr.iter().enumerate() {
                    rec(item, rest, &format!("{path}[{i}]"), out)?;
                }
                Ok(())
            }
        }
    }
    let mut out = Vec::with_capacity(total);
    rec(v, shape, path, &mut out)?;
    Ok(out)
}

struct AlphabetSet {
    by_name: BTreeMap<String, FiniteAlphabet>,
}

impl AlphabetSet {
    fn build(decls: &[AlphabetDecl]) -> Result<Self, ConfigError> {
        let mut by_name = BTreeMap::new();
        for (i, d) in decls.iter().enumerate() {
            let path = format!("model.alphabets[{i}]");
            let alpha = match (&d.symbols, d.size) {
                (Some(sym), _) => FiniteAlphabet::new(d.name.clone(), sym.clone())
                    .map_err(|e| invalid(&path, e.to_string()))?,
                (None, Some(n)) => FiniteAlphabet::indexed(d.name.clone(), n)
                    .map_err(|e| invalid(&path, e.to_string()))?,
                (None, None) => {
                    return Err(invalid(&path, "alphabet needs either symbols or size"))
                }
            };
            if by_name.insert(d.name.clone(), alpha).is_some() {
                return Err(invalid(&path, format!("duplicate alphabet {:?}", d.name)));
            }
        }
        Ok(AlphabetSet { by_name })
    }

    fn get(&self, name: &str, path: &str) -> Result<FiniteAlphabet, ConfigError> {
        self.by_name
            .get(name)
            .cloned()
            .ok_or_else(|| invalid(path, format!("unknown alphabet {name:?}")))
    }

    /// Reconstruction alphabets default to a copy of X when undeclared.
    fn get_or_copy_of(
        &self,
        name: &str,
        copy_from: &FiniteAlphabet,
    ) -> FiniteAlphabet {
        self.by_name
            .get(name)
            .cloned()
            .unwrap_or_else(|| copy_from.renamed(name))
    }
}

fn build_kernel(
    decl: &KernelDecl,
    alphas: &AlphabetSet,
    path: &str,
) -> Result<CondKernel, ConfigError> {
    let from: Vec<FiniteAlphabet> = decl
        .from
        .iter()
        .map(|n| alphas.get(n, &format!("{path}.from")))
        .collect::<Result<_, _>>()?;
    let to: Vec<FiniteAlphabet> = decl
        .to
        .iter()
        .map(|n| alphas.get(n, &format!("{path}.to")))
        .collect::<Result<_, _>>()?;
    let shape: Vec<usize> = from.iter().chain(to.iter()).map(|a| a.size()).collect();
    let values = parse_tensor(&decl.values, &shape, &format!("{path}.values"))?;
    CondKernel::new(from, to, values).map_err(|e| invalid(path, e.to_string()))
}

fn build_table(
    decl: &TableDecl,
    alphas: &AlphabetSet,
    x: &FiniteAlphabet,
    path: &str,
) -> Result<DistortionTable, ConfigError> {
    let source = alphas.get(&decl.source, &format!("{path}.source"))?;
    let recon = alphas.get_or_copy_of(&decl.recon, x);
    let values = parse_tensor(
        &decl.values,
        &[source.size(), recon.size()],
        &format!("{path}.values"),
    )?;
    DistortionTable::new(source, recon, values).map_err(|e| invalid(path, e.to_string()))
}

/// Build and validate everything in a config.
pub fn build(cfg: &RunConfig) -> Result<Built, ConfigError> {
    let alphas = AlphabetSet::build(&cfg.model.alphabets)?;
    let x = alphas.get("X", "model.alphabets")?;

    let src_axes: Vec<FiniteAlphabet> = cfg
        .model
        .source
        .axes
        .iter()
        .map(|n| alphas.get(n, "model.source.axes"))
        .collect::<Result<_, _>>()?;
    let src_shape: Vec<usize> = src_axes.iter().map(|a| a.size()).collect();
    let src_values = parse_tensor(&cfg.model.source.values, &src_shape, "model.source.values")?;
    let source = JointPmf::new(src_axes, src_values)
        .map_err(|e| invalid("model.source", e.to_string()))?;

    let vm = build_kernel(&cfg.model.vm_channel, &alphas, "model.vm_channel")?;
    let d1 = build_table(&cfg.model.d1, &alphas, &x, "model.d1")?;
    let d2 = build_table(&cfg.model.d2, &alphas, &x, "model.d2")?;
    let cost_action = alphas.get(&cfg.model.cost.action, "model.cost.action")?;
    let cost_values = parse_tensor(
        &cfg.model.cost.values,
        &[cost_action.size()],
        "model.cost.values",
    )?;
    let cost =
        CostTable::new(cost_action, cost_values).map_err(|e| invalid("model.cost", e.to_string()))?;

    let model = match cfg.model.kind.as_str() {
        "cascade" => BuiltModel::Cascade(
            CascadeVendingModel::new(source, vm, d1.clone(), d2.clone(), cost.clone())
                .map_err(|e| invalid("model", e.to_string()))?,
        ),
        "broadcast" => BuiltModel::Broadcast(
            BroadcastCRModel::new(source, vm, d1.clone(), d2.clone(), cost.clone())
                .map_err(|e| invalid("model", e.to_string()))?,
        ),
        other => {
            return Err(invalid(
                "model.kind",
                format!("unknown kind {other:?}, expected \"cascade\" or \"broadcast\""),
            ))
        }
    };

    let budget = match &cfg.budget {
        Some(b) => ConstraintBudget::new(b.d1, b.d2, b.gamma)
            .map_err(|e| invalid("budget", e.to_string()))?,
        None => ConstraintBudget::loose(&d1, &d2, &cost),
    };

    let (weights2, weights3) = build_weights(cfg, &model)?;
    let search = cfg.search.to_search_config();
    let grid = GridSpec {
        resolution: cfg.oracle.resolution,
        u_size: cfg.oracle.u_size,
        guard: cfg.oracle.guard as u128,
    };

    let decision = match &cfg.decision {
        None => None,
        Some(d) => Some(build_decision(d, &model, &search)?),
    };

    Ok(Built {
        model,
        budget,
        search,
        weights2,
        weights3,
        decision,
        grid,
    })
}

fn build_weights(
    cfg: &RunConfig,
    model: &BuiltModel,
) -> Result<(Vec<(f64, f64)>, Vec<(f64, f64, f64)>), ConfigError> {
    let is_cascade = matches!(model, BuiltModel::Cascade(_));
    let default2: Vec<(f64, f64)> = (0..11)
        .map(|i| {
            let t = i as f64 / 10.0;
            (1.0 - t, t)
        })
        .collect();
    let default3 = vec![(1.0, 2.0, 4.0), (0.0, 1.0, 2.0), (1.0, 1.0, 3.0)];
    match &cfg.weights {
        None => Ok((default2, default3)),
        Some(rows) => {
            let mut w2 = Vec::new();
            let mut w3 = Vec::new();
            for (i, row) in rows.iter().enumerate() {
                let path = format!("weights[{i}]");
                if row.iter().any(|v| *v < 0.0 || !v.is_finite()) {
                    return Err(invalid(&path, "weights must be finite and >= 0"));
                }
                if row.iter().sum::<f64>() <= 0.0 {
                    return Err(invalid(&path, "weight vector must have positive sum"));
                }
                match (is_cascade, row.len()) {
                    (true, 2) => w2.push((row[0], row[1])),
                    (false, 3) => w3.push((row[0], row[1], row[2])),
                    (true, n) => {
                        return Err(invalid(&path, format!("cascade weights need 2 entries, found {n}")))
                    }
                    (false, n) => {
                        return Err(invalid(&path, format!("broadcast weights need 3 entries, found {n}")))
                    }
                }
            }
            if is_cascade {
                Ok((w2, default3))
            } else {
                Ok((default2, w3))
            }
        }
    }
}

fn build_decision(
    d: &DecisionConfig,
    model: &BuiltModel,
    search: &SearchConfig,
) -> Result<BuiltDecision, ConfigError> {
    match model {
        BuiltModel::Cascade(m) => {
            let kernel = d
                .kernel
                .as_ref()
                .ok_or_else(|| invalid("decision", "cascade decision needs a kernel"))?;
            let u_size = d
                .u_size
                .or(search.u_size)
                .unwrap_or_else(|| crate::cascade::u_cardinality_bound(m));
            let shape = [
                m.x.size(),
                m.y.size(),
                m.x1hat.size(),
                m.a.size(),
                u_size,
            ];
            let values = parse_tensor(kernel, &shape, "decision.kernel")?;
            let dec = CascadeDecision::from_flat(m, u_size, values)
                .map_err(|e| invalid("decision.kernel", e.to_string()))?;
            Ok(BuiltDecision::Cascade(dec))
        }
        BuiltModel::Broadcast(m) => {
            let action = d
                .action
                .as_ref()
                .ok_or_else(|| invalid("decision", "broadcast decision needs an action kernel"))?;
            let recon = d
                .recon
                .as_ref()
                .ok_or_else(|| invalid("decision", "broadcast decision needs a recon kernel"))?;
            let av = parse_tensor(action, &[m.x.size(), m.a.size()], "decision.action")?;
            let rv = parse_tensor(
                recon,
                &[m.x.size(), m.x1hat.size(), m.x2hat.size()],
                "decision.recon",
            )?;
            let mut flat = av;
            flat.extend(rv);
            let dec = BroadcastDecision::from_flat(m, &flat)
                .map_err(|e| invalid("decision", e.to_string()))?;
            Ok(BuiltDecision::Broadcast(dec))
        }
    }
}
