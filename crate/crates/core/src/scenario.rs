//! Experiment sweeps: every (load, policy, strategy, PSD) cell runs the
//! margin tuner and is summarised for the report writer.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modes::{default_transceivers, ModeCatalog, Transceiver};
use crate::par::{self, Exec};
use crate::physical::{FiberParams, PsdConfig};
use crate::precalc::{Candidate, PlanContext};
use crate::spacing::Strategy;
use crate::throughput::{BaudPolicy, DemandMatrix, Engine, ThroughputOptions};
use crate::topology::{load_topology, Network};
use crate::tuner::{tune, IterationResult, TuneConfig, TuneTrace};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("topology: {0}")]
    Topology(String),
    #[error("mode table: {0}")]
    Modes(String),
    #[error("reading scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing scenario: {0}")]
    Json(#[from] serde_json::Error),
}

/// Transceiver set and baud-rate preference of one sweep column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Policy {
    /// A single baud-rate (16, 32 or 64 Gbaud).
    Single(u32),
    Lb,
    Rb,
    Hb,
}

impl Policy {
    pub fn transceivers(&self) -> Result<Vec<Transceiver>, ScenarioError> {
        let all = default_transceivers();
        match self {
            Policy::Single(b) => all
                .into_iter()
                .find(|t| t.key() == *b)
                .map(|t| vec![t])
                .ok_or_else(|| ScenarioError::Invalid(format!("no {b}-Gbaud transceiver"))),
            _ => Ok(all),
        }
    }

    pub fn baud_policy(&self) -> BaudPolicy {
        match self {
            Policy::Single(_) => BaudPolicy::Any,
            Policy::Lb => BaudPolicy::Lb,
            Policy::Rb => BaudPolicy::Rb,
            Policy::Hb => BaudPolicy::Hb,
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Single(b) => write!(f, "{b}"),
            Policy::Lb => f.write_str("lb"),
            Policy::Rb => f.write_str("rb"),
            Policy::Hb => f.write_str("hb"),
        }
    }
}

impl FromStr for Policy {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lb" => Ok(Policy::Lb),
            "rb" => Ok(Policy::Rb),
            "hb" => Ok(Policy::Hb),
            other => {
                let p = other
                    .trim_end_matches("gbaud")
                    .parse()
                    .map(Policy::Single)
                    .map_err(|_| ScenarioError::Invalid(format!("unknown baud policy `{s}`")))?;
                p.transceivers()?;
                Ok(p)
            }
        }
    }
}

impl TryFrom<String> for Policy {
    type Error = ScenarioError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Policy> for String {
    fn from(p: Policy) -> String {
        p.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DemandSpec {
    /// D̂ = 1/(n(n−1)) over all ordered pairs, served by bidirectional lightpaths.
    #[default]
    Uniform,
    /// All traffic between two named nodes.
    Pair(String, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Bundled topology name or a path to a topology JSON file.
    pub topology: String,
    /// W_cur/W fractions; empty keeps the topology's own W_cur.
    pub loads: Vec<f64>,
    pub policies: Vec<Policy>,
    pub strategies: Vec<Strategy>,
    pub psd_uw_per_ghz: Vec<f64>,
    /// `default`, `p2p` or a CSV path.
    pub modes: String,
    pub penalty_db: f64,
    pub demand: DemandSpec,
    pub seed: u64,
    /// ILP or heuristic; unset picks ILP for rings and chains, heuristic for meshes.
    pub engine: Option<Engine>,
    pub k: usize,
    pub gap: f64,
    pub delta_m_db: f64,
    pub max_iters: usize,
    pub time_limit_s: Option<f64>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            topology: "ring4".into(),
            loads: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            policies: vec![Policy::Single(16)],
            strategies: vec![Strategy::Cso],
            psd_uw_per_ghz: vec![25.0],
            modes: "default".into(),
            penalty_db: 0.0,
            demand: DemandSpec::Uniform,
            seed: 1,
            engine: None,
            k: 10,
            gap: 0.05,
            delta_m_db: 0.5,
            max_iters: 64,
            time_limit_s: Some(60.0),
        }
    }
}

/// Coordinates of one sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub load: Option<f64>,
    pub policy: Policy,
    pub strategy: Strategy,
    pub psd_uw_per_ghz: f64,
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        let s: Scenario = serde_json::from_str(&text)?;
        s.validate()?;
        Ok(s)
    }

    /// The single-pair 600-km example: 30 two-slot channels in 60 of 320 slots.
    pub fn p2p() -> Self {
        Self {
            name: "p2p".into(),
            topology: "p2p600".into(),
            loads: vec![],
            strategies: vec![Strategy::Cso, Strategy::Fix { h_ghz: 37.5 }],
            psd_uw_per_ghz: vec![15.03],
            modes: "p2p".into(),
            demand: DemandSpec::Pair("A".into(), "B".into()),
            k: 1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        if let Some(l) = self.loads.iter().find(|l| !(**l > 0.0 && **l <= 1.0)) {
            return bad(format!("load fraction {l} outside (0, 1]"));
        }
        if self.policies.is_empty() || self.strategies.is_empty() || self.psd_uw_per_ghz.is_empty() {
            return bad("policies, strategies and psd_uw_per_ghz must be nonempty".into());
        }
        if let Some(p) = self.psd_uw_per_ghz.iter().find(|p| !(**p > 0.0)) {
            return bad(format!("PSD {p} must be positive"));
        }
        if self.k == 0 {
            return bad("K must be at least 1".into());
        }
        if !(self.delta_m_db > 0.0) {
            return bad(format!("margin step {} must be positive", self.delta_m_db));
        }
        if !(self.gap >= 0.0) {
            return bad(format!("gap {} must be non-negative", self.gap));
        }
        for p in &self.policies {
            p.transceivers()?;
        }
        Ok(())
    }

    pub fn network(&self) -> Result<Network, ScenarioError> {
        Network::bundled(&self.topology)
            .or_else(|_| load_topology(&self.topology))
            .map_err(|e| ScenarioError::Topology(format!("{}: {e}", self.topology)))
    }

    pub fn catalog(&self) -> Result<ModeCatalog, ScenarioError> {
        let cat = match self.modes.as_str() {
            "default" => ModeCatalog::default_table(),
            "p2p" => ModeCatalog::two_mode_table(),
            path => ModeCatalog::load(path).map_err(|e| ScenarioError::Modes(format!("{path}: {e}")))?,
        };
        Ok(cat.with_penalty(self.penalty_db))
    }

    pub fn demand(&self, net: &Network) -> Result<DemandMatrix, ScenarioError> {
        match &self.demand {
            DemandSpec::Uniform => Ok(DemandMatrix::uniform(net.num_nodes()).bidirectional()),
            DemandSpec::Pair(s, d) => {
                let idx = |n: &str| {
                    net.node_index(n)
                        .ok_or_else(|| ScenarioError::Invalid(format!("node `{n}` not in {}", net.name)))
                };
                Ok(DemandMatrix::single((idx(s)?, idx(d)?)))
            }
        }
    }

    pub fn engine_for(&self, net: &Network) -> Engine {
        self.engine.unwrap_or_else(|| {
            let max_degree = (0..net.num_nodes()).map(|n| net.incident(n).len()).max().unwrap_or(0);
            if max_degree <= 2 {
                Engine::Ilp
            } else {
                Engine::Heuristic
            }
        })
    }

    pub fn cells(&self) -> Vec<CellKey> {
        let loads: Vec<Option<f64>> =
            if self.loads.is_empty() { vec![None] } else { self.loads.iter().copied().map(Some).collect() };
        let mut out = Vec::new();
        for &load in &loads {
            for &policy in &self.policies {
                for strategy in &self.strategies {
                    for &psd in &self.psd_uw_per_ghz {
                        out.push(CellKey {
                            load,
                            policy,
                            strategy: strategy.clone(),
                            psd_uw_per_ghz: psd,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn tune_config(&self, net: &Network, key: &CellKey) -> TuneConfig {
        TuneConfig {
            delta_m_db: self.delta_m_db,
            max_iters: self.max_iters,
            strategy: key.strategy.clone(),
            throughput: ThroughputOptions {
                engine: self.engine_for(net),
                gap: self.gap,
                time_limit: self.time_limit_s.map(Duration::from_secs_f64),
                policy: key.policy.baud_policy(),
                seed: self.seed,
                ..ThroughputOptions::default()
            },
            ..TuneConfig::default()
        }
    }
}

/// Reads `null` as NaN, the inverse of how serde_json writes non-finite floats.
pub(crate) fn f64_or_nan<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Min, mean and max of the per-lightpath nearest-neighbour center spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacingStats {
    pub min_ghz: f64,
    pub avg_ghz: f64,
    pub max_ghz: f64,
}

/// Center distance from each lightpath to its closest link-sharing
/// neighbour; lightpaths without a neighbour are skipped.
pub fn nearest_spacing_ghz(placed: &[Candidate], f_grid: f64) -> Vec<f64> {
    placed
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            placed
                .iter()
                .enumerate()
                .filter(|&(j, q)| j != i && p.shares_link(q))
                .map(|(_, q)| (p.channel.center_ghz(f_grid) - q.channel.center_ghz(f_grid)).abs())
                .min_by(f64::total_cmp)
        })
        .collect()
}

pub fn spacing_stats(placed: &[Candidate], f_grid: f64) -> Option<SpacingStats> {
    let s = nearest_spacing_ghz(placed, f_grid);
    if s.is_empty() {
        return None;
    }
    Some(SpacingStats {
        min_ghz: s.iter().copied().fold(f64::INFINITY, f64::min),
        avg_ghz: s.iter().sum::<f64>() / s.len() as f64,
        max_ghz: s.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Number of links on which each slot is occupied; entry `i` is slot `i + 1`.
pub fn slot_usage(placed: &[Candidate], w: usize) -> Vec<usize> {
    let mut usage = vec![0; w];
    for c in placed {
        for s in c.channel.slots().filter(|&s| s <= w) {
            usage[s - 1] += c.links.len();
        }
    }
    usage
}

/// What the report keeps of one plan (EP or JP).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub reduction_db: f64,
    pub th: f64,
    pub count: usize,
    pub min_q_db: f64,
    #[serde(deserialize_with = "f64_or_nan")]
    pub x_network_db: f64,
    pub modes: BTreeMap<String, usize>,
    pub spacing: Option<SpacingStats>,
    pub slot_usage: Vec<usize>,
}

impl PlanSummary {
    pub fn from_iteration(ctx: &PlanContext, it: &IterationResult) -> Self {
        let mut modes = BTreeMap::new();
        for c in &it.placed {
            let label = format!("{}@{}", ctx.catalog.label(c.mode), ctx.transceivers[c.trx].key());
            *modes.entry(label).or_insert(0) += 1;
        }
        Self {
            reduction_db: it.reduction_db,
            th: it.th(),
            count: it.count(),
            min_q_db: it.min_q_db(),
            x_network_db: it.spacing.x_network_db,
            modes,
            spacing: spacing_stats(&it.placed, ctx.net.f_grid_ghz),
            slot_usage: slot_usage(&it.placed, ctx.net.w),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellData {
    pub w_cur: usize,
    pub ep: PlanSummary,
    pub jp: PlanSummary,
    pub trace: TuneTrace,
}

impl CellData {
    pub fn abs_gain(&self) -> f64 {
        self.jp.th - self.ep.th
    }

    /// (TH_JP − TH_EP) / TH_EP.
    pub fn rel_gain(&self) -> f64 {
        self.abs_gain() / self.ep.th
    }

    /// Relative lightpath-count increase of JP over EP.
    pub fn count_increase(&self) -> f64 {
        (self.jp.count as f64 - self.ep.count as f64) / self.ep.count as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub key: CellKey,
    pub outcome: Result<CellData, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub scenario: Scenario,
    pub cells: Vec<CellResult>,
}

impl ResultBundle {
    pub fn empty(scenario: Scenario) -> Self {
        Self { scenario, cells: Vec::new() }
    }

    /// Some cell failed.
    pub fn is_partial(&self) -> bool {
        self.cells.iter().any(|c| c.outcome.is_err())
    }

    pub fn ok_cells(&self) -> impl Iterator<Item = (&CellKey, &CellData)> {
        self.cells.iter().filter_map(|c| c.outcome.as_ref().ok().map(|d| (&c.key, d)))
    }
}

pub fn run_cell(scenario: &Scenario, key: &CellKey, exec: Exec) -> Result<CellData, String> {
    let base = scenario.network().map_err(|e| e.to_string())?;
    let net = match key.load {
        Some(l) => base.with_load(l),
        None => base,
    };
    let demand = scenario.demand(&net).map_err(|e| e.to_string())?;
    let trx = key.policy.transceivers().map_err(|e| e.to_string())?;
    let catalog = scenario.catalog().map_err(|e| e.to_string())?;
    let cfg = scenario.tune_config(&net, key);
    let w_cur = net.w_cur;
    let ctx = PlanContext::new(
        net,
        &demand.pairs(),
        scenario.k,
        trx,
        catalog,
        FiberParams::default(),
        PsdConfig::from_uw_per_ghz(key.psd_uw_per_ghz),
        exec,
    );
    let res = tune(&ctx, &demand, &cfg).map_err(|e| e.to_string())?;
    Ok(CellData {
        w_cur,
        ep: PlanSummary::from_iteration(&ctx, &res.ep),
        jp: PlanSummary::from_iteration(&ctx, &res.jp),
        trace: res.trace,
    })
}

/// Runs every cell; failures are kept per cell instead of aborting the sweep.
pub fn run_scenario(scenario: &Scenario, exec: Exec) -> Result<ResultBundle, ScenarioError> {
    scenario.validate()?;
    scenario.network()?;
    scenario.catalog()?;
    let cells = scenario.cells();
    let outcomes = par::map(exec, &cells, |key| {
        let out = run_cell(scenario, key, exec);
        if let Err(e) = &out {
            log::warn!("cell {key:?} failed: {e}");
        }
        out
    });
    Ok(ResultBundle {
        scenario: scenario.clone(),
        cells: cells
            .into_iter()
            .zip(outcomes)
            .map(|(key, outcome)| CellResult { key, outcome })
            .collect(),
    })
}
