//! Throughput maximisation over the candidate set: the exact ILP (maximise
//! TH, then minimise the lightpath count at that TH) and the sequential
//! loading heuristic.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Duration;

use flexplan_optim::{
    solve_milp, Cmp, LinearModel, MilpOptions, MilpResult, MilpStatus, Sense, Var, VarKind,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modes::Transceiver;
use crate::precalc::{Candidate, CandidateSet, PlanContext};
use crate::topology::{Network, Occupancy};

const EPS: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ThroughputError {
    #[error("demand matrix: {0}")]
    Demand(String),
    #[error("solver returned {0:?} without a feasible assignment")]
    Solver(MilpStatus),
}

/// Normalised traffic matrix D̂ over ordered node pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandMatrix {
    entries: BTreeMap<(usize, usize), f64>,
}

impl DemandMatrix {
    /// Equal share for every ordered pair of distinct nodes.
    pub fn uniform(num_nodes: usize) -> Self {
        let n = num_nodes as f64;
        let share = 1.0 / (n * (n - 1.0));
        let entries = (0..num_nodes)
            .flat_map(|s| (0..num_nodes).filter(move |&d| d != s).map(move |d| ((s, d), share)))
            .collect();
        Self { entries }
    }

    /// Normalises non-negative weights to unit sum; zero entries are dropped.
    pub fn from_weights(weights: BTreeMap<(usize, usize), f64>) -> Result<Self, ThroughputError> {
        if let Some((p, w)) = weights.iter().find(|(_, w)| !(**w >= 0.0) || !w.is_finite()) {
            return Err(ThroughputError::Demand(format!("pair {p:?} has weight {w}")));
        }
        if let Some(((s, d), _)) = weights.iter().find(|((s, d), _)| s == d) {
            return Err(ThroughputError::Demand(format!("self-demand at node {s}->{d}")));
        }
        let total: f64 = weights.values().sum();
        if total <= 0.0 {
            return Err(ThroughputError::Demand("weights sum to zero".into()));
        }
        let entries = weights
            .into_iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(p, w)| (p, w / total))
            .collect();
        Ok(Self { entries })
    }

    pub fn single(pair: (usize, usize)) -> Self {
        Self {
            entries: BTreeMap::from([(pair, 1.0)]),
        }
    }

    /// Folds `(s, d)` and `(d, s)` into one unordered pair `(min, max)`
    /// carrying the larger share: a lightpath on a fiber pair serves both
    /// directions, so TH keeps its ordered-pair meaning.
    pub fn bidirectional(&self) -> Self {
        let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (&(s, d), &v) in &self.entries {
            let e = entries.entry((s.min(d), s.max(d))).or_insert(0.0);
            *e = e.max(v);
        }
        Self { entries }
    }

    pub fn get(&self, pair: (usize, usize)) -> f64 {
        self.entries.get(&pair).copied().unwrap_or(0.0)
    }

    /// Pairs with positive demand, lexicographic.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.entries.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.entries.iter().map(|(&p, &v)| (p, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Largest TH with TH·D̂ ≤ T for every demanded pair.
pub fn supported_throughput(per_pair: &BTreeMap<(usize, usize), f64>, demand: &DemandMatrix) -> f64 {
    demand
        .iter()
        .map(|(p, dh)| per_pair.get(&p).copied().unwrap_or(0.0) / dh)
        .fold(f64::INFINITY, f64::min)
        .max(0.0)
}

fn capacity_by_pair<'a>(adopted: impl Iterator<Item = &'a Candidate>) -> BTreeMap<(usize, usize), f64> {
    let mut t = BTreeMap::new();
    for c in adopted {
        *t.entry(c.pair).or_insert(0.0) += c.capacity;
    }
    t
}

/// Adopted lightpaths with the throughput they support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProvisioningState {
    pub adopted: Vec<Candidate>,
    pub th: f64,
    /// T per pair in Gbps.
    pub per_pair: BTreeMap<(usize, usize), f64>,
    #[serde(skip)]
    pub occupancy: Occupancy,
}

impl ProvisioningState {
    /// Claims `th` for the given adopted set. Slots are marked as found; use
    /// [`ProvisioningState::validate`] to check the result.
    pub fn new(net: &Network, adopted: Vec<Candidate>, th: f64) -> Self {
        let mut occupancy = Occupancy::new(net.links.len(), net.w);
        for c in &adopted {
            occupancy.set(&c.links, &c.channel, true);
        }
        let per_pair = capacity_by_pair(adopted.iter());
        Self {
            adopted,
            th,
            per_pair,
            occupancy,
        }
    }

    /// State claiming the largest TH the adopted set supports.
    pub fn from_adopted(net: &Network, adopted: Vec<Candidate>, demand: &DemandMatrix) -> Self {
        let th = supported_throughput(&capacity_by_pair(adopted.iter()), demand);
        Self::new(net, adopted, th)
    }

    pub fn count(&self) -> usize {
        self.adopted.len()
    }

    pub fn total_capacity(&self) -> f64 {
        self.per_pair.values().sum()
    }

    pub fn t(&self, pair: (usize, usize)) -> f64 {
        self.per_pair.get(&pair).copied().unwrap_or(0.0)
    }

    /// Checks slot exclusivity, band limits, the W_cur cap, one mode per
    /// channel and D = TH·D̂ ≤ T on every pair.
    pub fn validate(&self, net: &Network, demand: &DemandMatrix, w_cur: usize) -> Result<(), String> {
        let mut usage = vec![vec![0u32; net.w + 1]; net.links.len()];
        for c in &self.adopted {
            if c.channel.start < 1 || c.channel.end() > w_cur || c.channel.end() > net.w {
                return Err(format!("lightpath {} occupies {:?} beyond W_cur={w_cur}", c.id, c.channel));
            }
            if c.links.is_empty() {
                return Err(format!("lightpath {} has no links", c.id));
            }
            for &l in c.links.iter() {
                for s in c.channel.slots() {
                    usage[l][s] += 1;
                    if usage[l][s] > 1 {
                        return Err(format!("slot {s} on link {l} used more than once"));
                    }
                }
            }
        }
        let recomputed = capacity_by_pair(self.adopted.iter());
        for (p, t) in &recomputed {
            if (self.t(*p) - t).abs() > EPS {
                return Err(format!("pair {p:?}: stored T {} differs from {}", self.t(*p), t));
            }
        }
        for (p, dh) in demand.iter() {
            let d = self.th * dh;
            if d > self.t(p) + EPS * (1.0 + d) {
                return Err(format!("pair {p:?}: D={d} exceeds T={}", self.t(p)));
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, ctx: &PlanContext, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["s", "d", "k", "links", "start", "slots", "baud", "mode", "capacity_gbps"])?;
        for c in &self.adopted {
            let links: Vec<String> = c.links.iter().map(|l| l.to_string()).collect();
            w.write_record([
                ctx.net.nodes[c.pair.0].clone(),
                ctx.net.nodes[c.pair.1].clone(),
                (c.route + 1).to_string(),
                links.join(" "),
                c.channel.start.to_string(),
                c.channel.width.to_string(),
                ctx.transceivers[c.trx].baud_gbaud.to_string(),
                ctx.catalog.label(c.mode),
                c.capacity.to_string(),
            ])?;
        }
        w.write_record(["TH", "", "", "", "", "", "", "", &format!("{:.3}", self.th)])?;
        w.flush()?;
        Ok(())
    }
}

/// The Phase-2 ILP together with handles to its variables.
#[derive(Debug, Clone)]
pub struct ThroughputModel {
    pub model: LinearModel,
    pub delta: Vec<Var>,
    /// Integer count variables with the candidates they sum.
    pub counts: Vec<(Var, Vec<usize>)>,
    pub th: Var,
    pub d: BTreeMap<(usize, usize), Var>,
    pub t: BTreeMap<(usize, usize), Var>,
}

impl ThroughputModel {
    /// Full variable vector for a selection of candidate indices.
    pub fn assignment(&self, cands: &CandidateSet, demand: &DemandMatrix, selected: &[usize]) -> Vec<f64> {
        let mut x = vec![0.0; self.model.num_vars()];
        for &i in selected {
            x[self.delta[i].0] = 1.0;
        }
        for (n, ids) in &self.counts {
            x[n.0] = ids.iter().filter(|&&i| x[self.delta[i].0] > 0.5).count() as f64;
        }
        let per_pair = capacity_by_pair(selected.iter().map(|&i| &cands.candidates[i]));
        let th = supported_throughput(&per_pair, demand).min(self.model.vars[self.th.0].ub);
        let th = th.max(self.model.vars[self.th.0].lb);
        x[self.th.0] = th;
        for (p, dh) in demand.iter() {
            x[self.d[&p].0] = th * dh;
            x[self.t[&p].0] = per_pair.get(&p).copied().unwrap_or(0.0);
        }
        x
    }

    pub fn selected(&self, values: &[f64]) -> Vec<usize> {
        self.delta
            .iter()
            .enumerate()
            .filter(|(_, v)| values[v.0] > 0.5)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Maximise TH subject to demand scaling, capacity sums, D ≤ T, slot
/// exclusivity per link and the W_cur cap.
pub fn build_phase2_model(net: &Network, cands: &CandidateSet, demand: &DemandMatrix, w_cur: usize) -> ThroughputModel {
    let mut m = LinearModel::new("phase2_max_th", Sense::Maximize);
    // Lightpath counts per (pair, capacity level); branching on these
    // breaks the symmetry between equivalent slot positions.
    let mut levels: BTreeMap<((usize, usize), i64), Vec<usize>> = BTreeMap::new();
    for c in &cands.candidates {
        if c.channel.end() <= w_cur {
            levels.entry((c.pair, (c.capacity * 1000.0).round() as i64)).or_default().push(c.id);
        }
    }
    let min_width = cands.candidates.iter().map(|c| c.channel.width).min().unwrap_or(1);
    let mut totals: Vec<(Var, Vec<usize>)> = Vec::new();
    for (p, _) in demand.iter() {
        let ids: Vec<usize> = cands.for_pair(p).filter(|c| c.channel.end() <= w_cur).map(|c| c.id).collect();
        if ids.len() >= 2 {
            let routes = ids.iter().map(|&i| cands.candidates[i].route).max().unwrap_or(0) + 1;
            let ub = (ids.len() as f64).min(((w_cur / min_width) * routes) as f64);
            totals.push((m.add_var(format!("N_{}_{}", p.0, p.1), VarKind::Integer, 0.0, ub), ids));
        }
    }
    let per_link = (w_cur / min_width) as f64;
    let counts: Vec<(Var, Vec<usize>)> = levels
        .iter()
        .map(|(((s, d), lvl), ids)| {
            let routes = ids.iter().map(|&i| cands.candidates[i].route).max().unwrap_or(0) + 1;
            let ub = (ids.len() as f64).min(per_link * routes as f64);
            (m.add_var(format!("n_{s}_{d}_{lvl}"), VarKind::Integer, 0.0, ub), ids.clone())
        })
        .collect();
    let delta: Vec<Var> = cands.candidates.iter().map(|c| m.add_binary(format!("x{}", c.id))).collect();
    for (n, _) in &totals {
        m.set_priority(*n, 2);
    }
    for (n, _) in &counts {
        m.set_priority(*n, 1);
    }
    let counts: Vec<(Var, Vec<usize>)> = totals.into_iter().chain(counts).collect();
    for (i, (n, ids)) in counts.iter().enumerate() {
        let mut terms = vec![(*n, 1.0)];
        terms.extend(ids.iter().map(|&c| (delta[c], -1.0)));
        m.add_constraint(format!("count_{i}"), terms, Cmp::Eq, 0.0);
    }
    for (c, &v) in cands.candidates.iter().zip(&delta) {
        if c.channel.end() > w_cur || c.channel.start < 1 {
            m.set_bounds(v, 0.0, 0.0);
        }
    }
    let mut th_ub = f64::INFINITY;
    for (p, dh) in demand.iter() {
        let cap: f64 = cands.for_pair(p).map(|c| c.capacity).sum();
        th_ub = th_ub.min(cap / dh);
    }
    if !th_ub.is_finite() {
        th_ub = 0.0;
    }
    let th = m.add_continuous("TH", 0.0, th_ub);
    let mut d = BTreeMap::new();
    let mut t = BTreeMap::new();
    for (p, _) in demand.iter() {
        d.insert(p, m.add_continuous(format!("D_{}_{}", p.0, p.1), 0.0, f64::INFINITY));
        t.insert(p, m.add_continuous(format!("T_{}_{}", p.0, p.1), 0.0, f64::INFINITY));
    }
    for (p, dh) in demand.iter() {
        m.add_constraint(format!("scale_{}_{}", p.0, p.1), vec![(d[&p], 1.0), (th, -dh)], Cmp::Eq, 0.0);
        let mut terms = vec![(t[&p], 1.0)];
        terms.extend(cands.for_pair(p).map(|c| (delta[c.id], -c.capacity)));
        m.add_constraint(format!("cap_{}_{}", p.0, p.1), terms, Cmp::Eq, 0.0);
        m.add_constraint(format!("serve_{}_{}", p.0, p.1), vec![(d[&p], 1.0), (t[&p], -1.0)], Cmp::Le, 0.0);
    }
    let mut cover: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); w_cur + 1]; net.links.len()];
    for c in &cands.candidates {
        if c.channel.end() > w_cur {
            continue;
        }
        for &l in c.links.iter() {
            for s in c.channel.slots() {
                cover[l][s].push(c.id);
            }
        }
    }
    for (l, slots) in cover.iter().enumerate() {
        for (s, ids) in slots.iter().enumerate() {
            if ids.len() >= 2 {
                let terms = ids.iter().map(|&i| (delta[i], 1.0)).collect();
                m.add_constraint(format!("slot_{l}_{s}"), terms, Cmp::Le, 1.0);
            }
        }
    }
    let mut classes: BTreeMap<_, Vec<usize>> = BTreeMap::new();
    for c in &cands.candidates {
        classes.entry(c.class_key()).or_default().push(c.id);
    }
    for ((p, k, trx, start), ids) in classes {
        if ids.len() >= 2 {
            let terms = ids.iter().map(|&i| (delta[i], 1.0)).collect();
            m.add_constraint(format!("one_{}_{}_{k}_{trx}_{start}", p.0, p.1), terms, Cmp::Le, 1.0);
        }
    }
    m.set_objective(vec![(th, 1.0)]);
    ThroughputModel { model: m, delta, counts, th, d, t }
}

/// Phase-3 variant: minimise the lightpath count while keeping TH ≥ `th_min`.
pub fn build_phase3_model(
    net: &Network,
    cands: &CandidateSet,
    demand: &DemandMatrix,
    w_cur: usize,
    th_min: f64,
) -> ThroughputModel {
    let mut tm = build_phase2_model(net, cands, demand, w_cur);
    tm.model.name = "phase3_min_count".into();
    tm.model.sense = Sense::Minimize;
    let ub = tm.model.vars[tm.th.0].ub;
    let lb = (th_min - EPS * th_min.max(1.0)).max(0.0).min(ub);
    tm.model.set_bounds(tm.th, lb, ub);
    tm.model.set_objective(tm.delta.iter().map(|&v| (v, 1.0)).collect());
    tm
}

/// Engine used for Phases 2 and 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Ilp,
    Heuristic,
}

/// Baud-rate preference for the heuristic; the ILP is indifferent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaudPolicy {
    #[default]
    Any,
    /// Lowest baud-rate first.
    Lb,
    /// Highest baud-rate first.
    Hb,
    /// Random baud-rate order per decision.
    Rb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThroughputOptions {
    pub engine: Engine,
    pub gap: f64,
    pub time_limit: Option<Duration>,
    pub node_limit: usize,
    pub policy: BaudPolicy,
    pub delta_th: f64,
    pub seed: u64,
    /// Seed the ILP incumbent with the heuristic.
    pub heuristic_start: bool,
    /// Run Phase 3 (or the greedy pruning for the heuristic).
    pub remove_redundant: bool,
}

impl Default for ThroughputOptions {
    fn default() -> Self {
        Self {
            engine: Engine::Ilp,
            gap: 0.05,
            time_limit: Some(Duration::from_secs(60)),
            node_limit: 200_000,
            policy: BaudPolicy::Any,
            delta_th: 25.0,
            seed: 1,
            heuristic_start: true,
            remove_redundant: true,
        }
    }
}

impl ThroughputOptions {
    fn milp(&self) -> MilpOptions {
        MilpOptions {
            rel_gap: self.gap.max(1e-9),
            time_limit: self.time_limit,
            node_limit: self.node_limit,
            ..MilpOptions::default()
        }
    }
}

/// Spacing of attainable TH values: with equal shares, TH is a multiple of
/// the capacity grid divided by the share.
pub fn throughput_step(cands: &CandidateSet, demand: &DemandMatrix) -> Option<f64> {
    let share = demand.iter().next()?.1;
    if demand.iter().any(|(_, v)| (v - share).abs() > 1e-12 * share) {
        return None;
    }
    let mut g: u64 = 0;
    for c in &cands.candidates {
        let milli = (c.capacity * 1000.0).round();
        if (milli - c.capacity * 1000.0).abs() > 1e-6 {
            return None;
        }
        g = gcd(g, milli as u64);
    }
    (g > 0).then(|| g as f64 / 1000.0 / share)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveStats {
    pub status: String,
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub incumbents: usize,
}

impl From<&MilpResult> for SolveStats {
    fn from(r: &MilpResult) -> Self {
        Self {
            status: format!("{:?}", r.status),
            objective: r.objective.unwrap_or(f64::NAN),
            bound: r.bound,
            gap: r.gap,
            nodes: r.nodes,
            incumbents: r.trace.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThroughputOutcome {
    pub th_max: f64,
    pub state: ProvisioningState,
    pub phase2: Option<SolveStats>,
    pub phase3: Option<SolveStats>,
}

fn pick(cands: &CandidateSet, ids: &[usize]) -> Vec<Candidate> {
    ids.iter().map(|&i| cands.candidates[i].clone()).collect()
}

/// Phase 2: solves the ILP with optional starting selections (candidate
/// indices). Returns TH_max and the selected indices.
pub fn maximize_throughput(
    net: &Network,
    cands: &CandidateSet,
    demand: &DemandMatrix,
    w_cur: usize,
    opts: &ThroughputOptions,
    starts: &[Vec<usize>],
) -> Result<(f64, Vec<usize>, SolveStats), ThroughputError> {
    let tm = build_phase2_model(net, cands, demand, w_cur);
    let seed = starts
        .iter()
        .map(|s| tm.assignment(cands, demand, s))
        .filter(|x| tm.model.max_violation(x) <= 1e-6)
        .max_by(|a, b| a[tm.th.0].total_cmp(&b[tm.th.0]));
    let milp = MilpOptions {
        objective_step: throughput_step(cands, demand),
        ..opts.milp()
    };
    let r = solve_milp(&tm.model, &milp, seed.as_deref());
    let values = r.values.as_ref().ok_or(ThroughputError::Solver(r.status))?;
    let sel = tm.selected(values);
    let per_pair = capacity_by_pair(sel.iter().map(|&i| &cands.candidates[i]));
    let th = supported_throughput(&per_pair, demand);
    log::debug!("phase 2: TH={th:.1} status={:?} nodes={} gap={:.4}", r.status, r.nodes, r.gap);
    Ok((th, sel, SolveStats::from(&r)))
}

/// Phase 3: fewest lightpaths keeping TH ≥ `th_max`, seeded with `start`.
pub fn remove_redundant(
    net: &Network,
    cands: &CandidateSet,
    demand: &DemandMatrix,
    w_cur: usize,
    th_max: f64,
    opts: &ThroughputOptions,
    start: &[usize],
) -> Result<(Vec<usize>, SolveStats), ThroughputError> {
    let tm = build_phase3_model(net, cands, demand, w_cur, th_max);
    let x0 = tm.assignment(cands, demand, start);
    let r = solve_milp(&tm.model, &opts.milp(), Some(&x0));
    let values = r.values.as_ref().ok_or(ThroughputError::Solver(r.status))?;
    let sel = tm.selected(values);
    log::debug!("phase 3: {} lightpaths status={:?} nodes={}", sel.len(), r.status, r.nodes);
    Ok((sel, SolveStats::from(&r)))
}

/// Drops adopted lightpaths, smallest capacity first, while every pair
/// still meets TH·D̂.
pub fn prune_redundant(cands: &CandidateSet, demand: &DemandMatrix, th: f64, selected: &[usize]) -> Vec<usize> {
    let mut keep: Vec<usize> = selected.to_vec();
    let mut order = keep.clone();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&cands.candidates[a], &cands.candidates[b]);
        ca.capacity
            .total_cmp(&cb.capacity)
            .then(cb.footprint().cmp(&ca.footprint()))
            .then(b.cmp(&a))
    });
    let mut per_pair = capacity_by_pair(keep.iter().map(|&i| &cands.candidates[i]));
    for i in order {
        let c = &cands.candidates[i];
        let t = per_pair[&c.pair] - c.capacity;
        if t + EPS >= th * demand.get(c.pair) {
            per_pair.insert(c.pair, t);
            keep.retain(|&k| k != i);
        }
    }
    keep
}

/// Sequential loading heuristic. Returns the highest TH (a multiple of
/// `delta_th`) reached and the adopted candidate indices.
pub fn sequential_loading(
    net: &Network,
    cands: &CandidateSet,
    demand: &DemandMatrix,
    transceivers: &[Transceiver],
    delta_th: f64,
    policy: BaudPolicy,
    seed: u64,
) -> (f64, Vec<usize>) {
    assert!(delta_th > 0.0, "delta_th must be positive");
    let mut loader = Loader::new(net, cands, transceivers, policy, seed);
    let pairs = demand.pairs();
    if pairs.is_empty() {
        return (0.0, Vec::new());
    }
    let mut th = 0.0;
    'rounds: loop {
        let target = th + delta_th;
        for &p in &pairs {
            if !loader.serve(p, target * demand.get(p)) {
                break 'rounds;
            }
        }
        th = target;
    }
    let mut adopted = loader.adopted;
    adopted.sort_unstable();
    (th, adopted)
}

struct Loader<'a> {
    cands: &'a CandidateSet,
    by_pair: BTreeMap<(usize, usize), Vec<usize>>,
    upgrades: BTreeMap<((usize, usize), usize, usize, usize), Vec<usize>>,
    adopted: Vec<usize>,
    occ: Occupancy,
    t: BTreeMap<(usize, usize), f64>,
    baud_rank: Vec<usize>,
    policy: BaudPolicy,
    rng: ChaCha8Rng,
}

#[derive(Clone, Copy)]
enum Move {
    Swap { old: usize, new: usize },
    Add(usize),
}

impl<'a> Loader<'a> {
    fn new(net: &Network, cands: &'a CandidateSet, transceivers: &[Transceiver], policy: BaudPolicy, seed: u64) -> Self {
        let mut by_pair: BTreeMap<_, Vec<usize>> = BTreeMap::new();
        let mut upgrades: BTreeMap<_, Vec<usize>> = BTreeMap::new();
        for c in &cands.candidates {
            by_pair.entry(c.pair).or_default().push(c.id);
            upgrades.entry(c.class_key()).or_default().push(c.id);
        }
        for ids in upgrades.values_mut() {
            ids.sort_by(|&a, &b| cands.candidates[b].capacity.total_cmp(&cands.candidates[a].capacity));
        }
        let mut by_baud: Vec<usize> = (0..transceivers.len()).collect();
        by_baud.sort_by(|&a, &b| transceivers[a].baud_gbaud.total_cmp(&transceivers[b].baud_gbaud));
        let mut baud_rank = vec![0; transceivers.len()];
        for (r, &t) in by_baud.iter().enumerate() {
            baud_rank[t] = r;
        }
        Self {
            cands,
            by_pair,
            upgrades,
            adopted: Vec::new(),
            occ: Occupancy::new(net.links.len(), net.w),
            t: BTreeMap::new(),
            baud_rank,
            policy,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn t(&self, p: (usize, usize)) -> f64 {
        self.t.get(&p).copied().unwrap_or(0.0)
    }

    fn ranks(&mut self) -> Vec<usize> {
        let n = self.baud_rank.len();
        match self.policy {
            BaudPolicy::Any => vec![0; n],
            BaudPolicy::Lb => self.baud_rank.clone(),
            BaudPolicy::Hb => self.baud_rank.iter().map(|r| n - 1 - r).collect(),
            BaudPolicy::Rb => {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut self.rng);
                perm
            }
        }
    }

    /// Raises T for `p` to at least `need`; false when no move helps.
    fn serve(&mut self, p: (usize, usize), need: f64) -> bool {
        while self.t(p) + EPS < need {
            if self.upgrade(p) {
                continue;
            }
            let Some(mv) = self.best_move(p) else {
                return false;
            };
            self.apply(p, mv);
        }
        true
    }

    /// Option i: best higher-rate mode on the same route, channel and baud.
    fn upgrade(&mut self, p: (usize, usize)) -> bool {
        let cs = &self.cands.candidates;
        let mut best: Option<(usize, usize, f64)> = None;
        for (slot, &a) in self.adopted.iter().enumerate() {
            if cs[a].pair != p {
                continue;
            }
            if let Some(&u) = self.upgrades[&cs[a].class_key()].first() {
                let gain = cs[u].capacity - cs[a].capacity;
                if gain > EPS && best.map_or(true, |(_, _, g)| gain > g) {
                    best = Some((slot, u, gain));
                }
            }
        }
        match best {
            Some((slot, u, gain)) => {
                self.adopted[slot] = u;
                *self.t.entry(p).or_insert(0.0) += gain;
                true
            }
            None => false,
        }
    }

    /// Options ii and iii, ranked by baud preference, then gain (swap wins
    /// ties), then fewest slot-links, lowest start and index.
    fn best_move(&mut self, p: (usize, usize)) -> Option<Move> {
        let ranks = self.ranks();
        let cs = &self.cands.candidates;
        let pool = self.by_pair.get(&p)?;
        type Key = (usize, f64, u8, usize, usize, usize);
        let better = |k: &Key, best: &Option<(Key, Move)>| match best {
            None => true,
            Some((b, _)) => {
                k.0.cmp(&b.0)
                    .then(b.1.total_cmp(&k.1))
                    .then(k.2.cmp(&b.2))
                    .then(k.3.cmp(&b.3))
                    .then(k.4.cmp(&b.4))
                    .then(k.5.cmp(&b.5))
                    .is_lt()
            }
        };
        let mut best: Option<(Key, Move)> = None;
        let adopted_here: Vec<usize> = self.adopted.iter().copied().filter(|&a| cs[a].pair == p).collect();
        for &a in &adopted_here {
            self.occ.set(&cs[a].links, &cs[a].channel, false);
            for &c in pool {
                let gain = cs[c].capacity - cs[a].capacity;
                if gain <= EPS || cs[c].same_class(&cs[a]) || self.adopted.contains(&c) {
                    continue;
                }
                let key = (ranks[cs[c].trx], gain, 0, cs[c].footprint(), cs[c].channel.start, c);
                if better(&key, &best) && self.occ.is_free(&cs[c].links, &cs[c].channel) {
                    best = Some((key, Move::Swap { old: a, new: c }));
                }
            }
            self.occ.set(&cs[a].links, &cs[a].channel, true);
        }
        for &c in pool {
            let key = (ranks[cs[c].trx], cs[c].capacity, 1, cs[c].footprint(), cs[c].channel.start, c);
            if cs[c].capacity > EPS && better(&key, &best) && self.occ.is_free(&cs[c].links, &cs[c].channel) {
                best = Some((key, Move::Add(c)));
            }
        }
        best.map(|(_, m)| m)
    }

    fn apply(&mut self, p: (usize, usize), mv: Move) {
        let cs = &self.cands.candidates;
        match mv {
            Move::Swap { old, new } => {
                self.occ.set(&cs[old].links, &cs[old].channel, false);
                self.occ.set(&cs[new].links, &cs[new].channel, true);
                let slot = self.adopted.iter().position(|&a| a == old).expect("adopted");
                self.adopted[slot] = new;
                *self.t.entry(p).or_insert(0.0) += cs[new].capacity - cs[old].capacity;
            }
            Move::Add(c) => {
                self.occ.set(&cs[c].links, &cs[c].channel, true);
                self.adopted.push(c);
                *self.t.entry(p).or_insert(0.0) += cs[c].capacity;
            }
        }
    }
}

/// Phases 2 and 3 with the configured engine. `warm` lists lightpath
/// classes adopted previously; they seed the ILP when still feasible.
pub fn plan_throughput(
    ctx: &PlanContext,
    cands: &CandidateSet,
    demand: &DemandMatrix,
    opts: &ThroughputOptions,
    warm: Option<&[Candidate]>,
) -> Result<ThroughputOutcome, ThroughputError> {
    let net = &ctx.net;
    let w_cur = cands.w_cur;
    match opts.engine {
        Engine::Heuristic => {
            let (th, sel) =
                sequential_loading(net, cands, demand, &ctx.transceivers, opts.delta_th, opts.policy, opts.seed);
            let sel = if opts.remove_redundant { prune_redundant(cands, demand, th, &sel) } else { sel };
            Ok(ThroughputOutcome {
                th_max: th,
                state: ProvisioningState::new(net, pick(cands, &sel), th),
                phase2: None,
                phase3: None,
            })
        }
        Engine::Ilp => {
            let mut starts = Vec::new();
            if opts.heuristic_start {
                let (_, sel) = sequential_loading(
                    net,
                    cands,
                    demand,
                    &ctx.transceivers,
                    opts.delta_th,
                    BaudPolicy::Any,
                    opts.seed,
                );
                starts.push(sel);
            }
            if let Some(prev) = warm {
                starts.push(map_classes(cands, prev));
            }
            let (th, sel, s2) = maximize_throughput(net, cands, demand, w_cur, opts, &starts)?;
            let (sel, s3) = if opts.remove_redundant {
                let start = prune_redundant(cands, demand, th, &sel);
                let (s, st) = remove_redundant(net, cands, demand, w_cur, th, opts, &start)?;
                (s, Some(st))
            } else {
                (sel, None)
            };
            let state = ProvisioningState::new(net, pick(cands, &sel), th);
            Ok(ThroughputOutcome {
                th_max: th,
                state,
                phase2: Some(s2),
                phase3: s3,
            })
        }
    }
}

/// Highest-rate candidate of each previously adopted class.
fn map_classes(cands: &CandidateSet, prev: &[Candidate]) -> Vec<usize> {
    let mut best: BTreeMap<_, usize> = BTreeMap::new();
    for c in &cands.candidates {
        let e = best.entry(c.class_key()).or_insert(c.id);
        if c.capacity > cands.candidates[*e].capacity {
            *e = c.id;
        }
    }
    prev.iter().filter_map(|p| best.get(&p.class_key()).copied()).collect()
}
