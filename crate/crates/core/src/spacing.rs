//! Phase 4: channel-spacing optimisation as a min-max LP over continuous
//! center frequencies, the FIX/CAN comparison strategies and grid rounding.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use flexplan_optim::{solve_lp, Cmp, LinearModel, LpOptions, LpStatus, Sense, Var};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::physical::{ase_psd, nli_psd, snr_db, FiberParams, FitError, Interferer, Placement, PsdConfig, XciEval, XciFitTable};
use crate::precalc::{Candidate, PlanContext};
use crate::topology::ChannelIndex;

#[derive(Debug, Error, PartialEq)]
pub enum SpacingError {
    #[error("no XCI fit for bandwidth pair ({0}, {1}) slots")]
    MissingFit(usize, usize),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("spacing strategy infeasible: {0}")]
    Infeasible(String),
    #[error("spacing LP stopped with {0:?}")]
    Solver(LpStatus),
    #[error("invalid strategy: {0}")]
    Strategy(String),
}

/// Channel-spacing strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Strategy {
    /// Free spacing minimising the worst weighted NLI.
    Cso,
    /// Nearest neighbours exactly `h` apart (integer multiples for narrower channels).
    Fix { h_ghz: f64 },
    /// Nearest spacing anywhere in `[inf ℋ, sup ℋ]`, NLI minimised.
    CanOpt { set_ghz: Vec<f64> },
    /// Nearest spacing in `[h_p, sup ℋ]` with `h_p` drawn from ℋ, no objective.
    CanRandom { set_ghz: Vec<f64>, seed: u64 },
}

impl Strategy {
    pub fn label(&self) -> String {
        match self {
            Strategy::Cso => "CSO".into(),
            Strategy::Fix { h_ghz } => format!("FIX({h_ghz})"),
            Strategy::CanOpt { .. } => "CAN(opt)".into(),
            Strategy::CanRandom { .. } => "CAN(random)".into(),
        }
    }

    /// Text form accepted by [`FromStr`].
    pub fn spec(&self) -> String {
        let join = |s: &[f64]| s.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        match self {
            Strategy::Cso => "cso".into(),
            Strategy::Fix { h_ghz } => format!("fix:{h_ghz}"),
            Strategy::CanOpt { set_ghz } => format!("can-opt:{}", join(set_ghz)),
            Strategy::CanRandom { set_ghz, seed } => format!("can-random:{}@{seed}", join(set_ghz)),
        }
    }

    pub fn has_objective(&self) -> bool {
        matches!(self, Strategy::Cso | Strategy::CanOpt { .. })
    }

    fn check(&self) -> Result<(), SpacingError> {
        let bad = |s: &[f64]| s.is_empty() || s.iter().any(|h| !(*h > 0.0));
        match self {
            Strategy::Fix { h_ghz } if !(*h_ghz > 0.0) => Err(SpacingError::Strategy(format!("FIX spacing {h_ghz}"))),
            Strategy::CanOpt { set_ghz } | Strategy::CanRandom { set_ghz, .. } if bad(set_ghz) => {
                Err(SpacingError::Strategy("candidate spacing set must be nonempty and positive".into()))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Parses `cso`, `fix:37.5`, `can-opt:25,37.5,50` and `can-random:25,37.5,50@7`.
impl FromStr for Strategy {
    type Err = SpacingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let (kind, arg) = s.split_once(':').map_or((s.as_str(), ""), |(k, a)| (k, a));
        let list = |a: &str| -> Result<Vec<f64>, SpacingError> {
            a.split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse::<f64>().map_err(|e| SpacingError::Strategy(format!("`{t}`: {e}"))))
                .collect()
        };
        let out = match kind {
            "cso" => Strategy::Cso,
            "fix" => Strategy::Fix {
                h_ghz: if arg.is_empty() { 37.5 } else { list(arg)?.first().copied().unwrap_or(37.5) },
            },
            "can-opt" | "can" => Strategy::CanOpt {
                set_ghz: if arg.is_empty() { default_set() } else { list(arg)? },
            },
            "can-random" => {
                let (set, seed) = arg.split_once('@').unwrap_or((arg, "1"));
                Strategy::CanRandom {
                    set_ghz: if set.is_empty() { default_set() } else { list(set)? },
                    seed: seed.parse().map_err(|e| SpacingError::Strategy(format!("seed `{seed}`: {e}")))?,
                }
            }
            other => return Err(SpacingError::Strategy(format!("unknown strategy `{other}`"))),
        };
        out.check()?;
        Ok(out)
    }
}

impl TryFrom<String> for Strategy {
    type Error = SpacingError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.spec()
    }
}

fn default_set() -> Vec<f64> {
    vec![25.0, 37.5, 50.0]
}

/// Which interferers enter the XCI rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Neighbors {
    /// Nearest and second-nearest sharer on each side.
    #[default]
    Nearest,
    /// Every lightpath sharing a link.
    All,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpacingConfig {
    /// Affine pieces per efficiency fit.
    pub q: usize,
    pub step_ghz: f64,
    pub neighbors: Neighbors,
    #[serde(skip)]
    pub lp: LpOptions,
}

impl Default for SpacingConfig {
    fn default() -> Self {
        Self {
            q: 5,
            step_ghz: 1.0,
            neighbors: Neighbors::Nearest,
            lp: LpOptions::default(),
        }
    }
}

/// Fits over the full band for every transceiver width of `ctx`.
pub fn build_fits(ctx: &PlanContext, cfg: &SpacingConfig) -> Result<XciFitTable, SpacingError> {
    let widths: Vec<usize> = ctx.transceivers.iter().map(|t| t.slots).collect();
    Ok(XciFitTable::build(
        &widths,
        ctx.net.f_grid_ghz,
        ctx.net.band_ghz(),
        &ctx.fiber,
        cfg.q,
        cfg.step_ghz,
        ctx.exec,
    )?)
}

/// Adopted lightpaths with everything the Phase-4 LP needs as parameters.
#[derive(Debug, Clone)]
pub struct SpacingProblem {
    pub lightpaths: Vec<Candidate>,
    pub w: usize,
    pub f_grid: f64,
    pub link_spans: Vec<u32>,
    /// |𝒯_B|, distinct transceiver bandwidths.
    pub n_bandwidths: usize,
    pub thresholds_db: Vec<f64>,
    /// Linear `SNR_threshold / SNR_best` per lightpath.
    pub weights: Vec<f64>,
    /// `G³ / G_span_ase`, turning an efficiency into a per-span NLI/ASE ratio.
    pub nli_scale: f64,
    /// Sharers of each lightpath with the spans they have in common.
    pub sharers: Vec<BTreeMap<usize, u32>>,
    pub y1: Vec<BTreeSet<usize>>,
    pub y2: Vec<BTreeSet<usize>>,
    pub neighbors: Neighbors,
    pub fits: Arc<XciFitTable>,
    pub psd: PsdConfig,
    pub fiber: FiberParams,
}

impl SpacingProblem {
    pub fn new(ctx: &PlanContext, adopted: &[Candidate], cfg: &SpacingConfig) -> Result<Self, SpacingError> {
        let fits = Arc::new(build_fits(ctx, cfg)?);
        Self::with_fits(ctx, adopted, fits, cfg.neighbors)
    }

    pub fn with_fits(
        ctx: &PlanContext,
        adopted: &[Candidate],
        fits: Arc<XciFitTable>,
        neighbors: Neighbors,
    ) -> Result<Self, SpacingError> {
        let n = adopted.len();
        let link_spans: Vec<u32> = ctx.net.links.iter().map(|l| l.n_spans).collect();
        let mut sharers = vec![BTreeMap::new(); n];
        for a in 0..n {
            for b in a + 1..n {
                let common: u32 = adopted[a]
                    .links
                    .iter()
                    .filter(|l| adopted[b].links.contains(l))
                    .map(|&l| link_spans[l])
                    .sum();
                if adopted[a].shares_link(&adopted[b]) {
                    sharers[a].insert(b, common);
                    sharers[b].insert(a, common);
                }
            }
        }
        for a in 0..n {
            for &b in sharers[a].keys() {
                let (wa, wb) = (adopted[a].channel.width, adopted[b].channel.width);
                if fits.get(wa, wb).is_none() {
                    return Err(SpacingError::MissingFit(wa, wb));
                }
            }
        }
        let channels: Vec<ChannelIndex> = adopted.iter().map(|c| c.channel).collect();
        let adjacency: Vec<Vec<usize>> = sharers.iter().map(|s| s.keys().copied().collect()).collect();
        let (y1, y2) = nearest_neighbors(&channels, &adjacency);
        let thresholds_db: Vec<f64> = adopted.iter().map(|c| ctx.catalog.threshold_db(c.mode)).collect();
        let g = ctx.psd.w_per_hz();
        let weights = adopted
            .iter()
            .zip(&thresholds_db)
            .map(|(c, thr)| 10f64.powf(thr / 10.0) * ase_psd(c.n_spans, &ctx.fiber) / g)
            .collect();
        let mut widths: Vec<usize> = ctx.transceivers.iter().map(|t| t.slots).collect();
        widths.sort_unstable();
        widths.dedup();
        Ok(Self {
            lightpaths: adopted.to_vec(),
            w: ctx.net.w,
            f_grid: ctx.net.f_grid_ghz,
            link_spans,
            n_bandwidths: widths.len().max(1),
            thresholds_db,
            weights,
            nli_scale: g * g * g / ase_psd(1, &ctx.fiber),
            sharers,
            y1,
            y2,
            neighbors,
            fits,
            psd: ctx.psd,
            fiber: ctx.fiber,
        })
    }

    pub fn len(&self) -> usize {
        self.lightpaths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lightpaths.is_empty()
    }

    fn width(&self, p: usize) -> usize {
        self.lightpaths[p].channel.width
    }

    fn gamma(&self, p: usize) -> usize {
        self.lightpaths[p].channel.start
    }

    /// u_{p,p'}: `p` sits above `p'` in the incoming slot order.
    pub fn above(&self, p: usize, q: usize) -> bool {
        (self.gamma(p), p) > (self.gamma(q), q)
    }

    /// Interferers whose efficiency enters `p`'s NLI under `mode`.
    pub fn active(&self, p: usize, mode: Neighbors) -> Vec<usize> {
        match mode {
            Neighbors::All => self.sharers[p].keys().copied().collect(),
            Neighbors::Nearest => self.y1[p].union(&self.y2[p]).copied().collect(),
        }
    }

    /// Closest legal center distance between `p` and `q`.
    pub fn min_gap_ghz(&self, p: usize, q: usize) -> f64 {
        (self.width(p) + self.width(q)) as f64 * self.f_grid / 2.0
    }

    /// Continuous center range from the band limits.
    pub fn center_bounds(&self, p: usize) -> (f64, f64) {
        let half = self.width(p) as f64 / 2.0;
        (half * self.f_grid, (self.w as f64 - half) * self.f_grid)
    }

    /// Centers of the incoming slot assignment.
    pub fn initial_centers(&self) -> Vec<f64> {
        self.lightpaths.iter().map(|c| c.channel.center_ghz(self.f_grid)).collect()
    }

    /// Consecutive sharers on every link, lower one first.
    pub fn adjacent_pairs(&self) -> Vec<(usize, usize)> {
        let mut per_link: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (p, c) in self.lightpaths.iter().enumerate() {
            for &l in c.links.iter() {
                per_link.entry(l).or_default().push(p);
            }
        }
        let mut pairs = BTreeSet::new();
        for list in per_link.values_mut() {
            list.sort_by_key(|&p| (self.gamma(p), p));
            for w in list.windows(2) {
                pairs.insert((w[0], w[1]));
            }
        }
        pairs.into_iter().collect()
    }

    fn fitted_eta(&self, p: usize, q: usize, delta: f64) -> f64 {
        self.fits.eval(self.width(p), self.width(q), delta).max(0.0)
    }

    /// Weighted NLI strength of `p` at centers `f` using the fits.
    pub fn fitted_x(&self, p: usize, f: &[f64], mode: Neighbors) -> f64 {
        let n_p = self.lightpaths[p].n_spans as f64;
        let nli: f64 = self
            .active(p, mode)
            .into_iter()
            .map(|q| self.sharers[p][&q] as f64 / n_p * self.nli_scale * self.fitted_eta(p, q, (f[p] - f[q]).abs()))
            .sum();
        self.weights[p] * (1.0 + nli)
    }
}

/// y1/y2 indicators from start slots and link-sharing adjacency. y1 holds the
/// closest sharer below and above; y2 continues each y1 chain one step
/// further out on the same side, kept only if it shares a link with `p`.
pub fn nearest_neighbors(channels: &[ChannelIndex], sharers: &[Vec<usize>]) -> (Vec<BTreeSet<usize>>, Vec<BTreeSet<usize>>) {
    let n = channels.len();
    let key = |p: usize| (channels[p].start, p);
    let side = |p: usize, below: bool| -> Option<usize> {
        let it = sharers[p].iter().copied().filter(|&q| (key(q) < key(p)) == below);
        if below {
            it.max_by_key(|&q| key(q))
        } else {
            it.min_by_key(|&q| key(q))
        }
    };
    let sides: Vec<[Option<usize>; 2]> = (0..n).map(|p| [side(p, true), side(p, false)]).collect();
    let y1 = sides.iter().map(|s| s.iter().flatten().copied().collect()).collect();
    let y2 = (0..n)
        .map(|p| {
            let mut out = BTreeSet::new();
            for (k, first) in sides[p].iter().enumerate() {
                if let Some(r) = first.and_then(|m| sides[m][k]) {
                    if r != p && sharers[p].contains(&r) {
                        out.insert(r);
                    }
                }
            }
            out
        })
        .collect();
    (y1, y2)
}

/// The Phase-4 LP with handles to its variables.
#[derive(Debug, Clone)]
pub struct Phase4Model {
    pub model: LinearModel,
    pub f: Vec<Var>,
    /// η̄ per ordered (victim, interferer) pair, scaled to a per-span NLI/ASE ratio.
    pub eta: BTreeMap<(usize, usize), Var>,
    pub x_link: BTreeMap<(usize, usize), Var>,
    pub x_network: Var,
    pub xci_rows: usize,
}

/// Builds the spacing LP under `strategy`.
pub fn build_phase4_model(prob: &SpacingProblem, strategy: &Strategy) -> Result<Phase4Model, SpacingError> {
    strategy.check()?;
    let n = prob.len();
    let mut m = LinearModel::new(format!("phase4_{}", strategy.label()), Sense::Minimize);
    let f: Vec<Var> = (0..n)
        .map(|p| {
            let (lo, hi) = prob.center_bounds(p);
            m.add_continuous(format!("f_{p}"), lo, hi)
        })
        .collect();
    let x_network = m.add_continuous("X_net", 0.0, f64::INFINITY);

    let mut eta = BTreeMap::new();
    let mut xci_rows = 0;
    for p in 0..n {
        for q in prob.active(p, prob.neighbors) {
            let e = m.add_continuous(format!("eta_{p}_{q}"), 0.0, f64::INFINITY);
            let fit = prob
                .fits
                .get(prob.width(p), prob.width(q))
                .ok_or(SpacingError::MissingFit(prob.width(p), prob.width(q)))?;
            // Distance is f_p − f_q when p is above q, else f_q − f_p.
            let dir = if prob.above(p, q) { 1.0 } else { -1.0 };
            for (k, &(a, b)) in fit.segments.iter().enumerate() {
                let s = prob.nli_scale;
                m.add_constraint(
                    format!("xci_{p}_{q}_{k}"),
                    vec![(f[p], dir * a * s), (f[q], -dir * a * s), (e, -1.0)],
                    Cmp::Le,
                    -b * s,
                );
                xci_rows += 1;
            }
            eta.insert((p, q), e);
        }
    }

    let mut x_link = BTreeMap::new();
    for p in 0..n {
        let c = &prob.lightpaths[p];
        let n_p = c.n_spans as f64;
        let mut net_terms = vec![(x_network, -1.0)];
        for &l in c.links.iter() {
            let x = m.add_continuous(format!("X_{p}_{l}"), 0.0, f64::INFINITY);
            let mut terms = vec![(x, -1.0)];
            for (&(v, q), &e) in eta.range((p, 0)..(p + 1, 0)) {
                debug_assert_eq!(v, p);
                if prob.lightpaths[q].uses(l) {
                    terms.push((e, 1.0));
                }
            }
            m.add_constraint(format!("nli_{p}_{l}"), terms, Cmp::Le, -1.0);
            net_terms.push((x, prob.weights[p] * prob.link_spans[l] as f64 / n_p));
            x_link.insert((p, l), x);
        }
        m.add_constraint(format!("net_{p}"), net_terms, Cmp::Le, 0.0);
    }

    for (a, b) in prob.adjacent_pairs() {
        m.add_constraint(format!("sep_{a}_{b}"), vec![(f[b], 1.0), (f[a], -1.0)], Cmp::Ge, prob.min_gap_ghz(a, b));
    }

    // Spacing windows to the nearest neighbour below, per strategy.
    let window: Box<dyn Fn(usize, usize) -> Result<(f64, f64), SpacingError> + '_> = match strategy {
        Strategy::Cso => Box::new(|_, _| Ok((f64::NEG_INFINITY, f64::INFINITY))),
        Strategy::Fix { h_ghz } => {
            let h = *h_ghz;
            Box::new(move |p, q| {
                let mult = (prob.min_gap_ghz(p, q) / h - 1e-9).ceil().max(1.0);
                if mult > prob.n_bandwidths as f64 {
                    return Err(SpacingError::Infeasible(format!(
                        "FIX {h} GHz cannot separate {}- and {}-slot channels within {} multiples",
                        prob.width(p),
                        prob.width(q),
                        prob.n_bandwidths
                    )));
                }
                Ok((h, mult * h))
            })
        }
        Strategy::CanOpt { set_ghz } => {
            let (lo, hi) = set_range(set_ghz);
            Box::new(move |_, _| Ok((lo, hi)))
        }
        Strategy::CanRandom { set_ghz, seed } => {
            let hi = set_range(set_ghz).1;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let h: Vec<f64> = (0..n).map(|_| *set_ghz.choose(&mut rng).unwrap()).collect();
            Box::new(move |p, _| Ok((h[p], hi)))
        }
    };
    if !matches!(strategy, Strategy::Cso) {
        for p in 0..n {
            for &q in &prob.y1[p] {
                if !prob.above(p, q) {
                    continue;
                }
                let (lo, hi) = window(p, q)?;
                let terms = vec![(f[p], 1.0), (f[q], -1.0)];
                m.add_constraint(format!("lo_{p}_{q}"), terms.clone(), Cmp::Ge, lo);
                m.add_constraint(format!("hi_{p}_{q}"), terms, Cmp::Le, hi);
            }
        }
    }
    if strategy.has_objective() {
        m.set_objective(vec![(x_network, 1.0)]);
        m.epigraph = Some(x_network);
    }
    Ok(Phase4Model {
        model: m,
        f,
        eta,
        x_link,
        x_network,
        xci_rows,
    })
}

fn set_range(set: &[f64]) -> (f64, f64) {
    set.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &h| (lo.min(h), hi.max(h)))
}

/// Largest weighted NLI strength (linear) at centers `f` under the fits.
pub fn model_x_network(prob: &SpacingProblem, f: &[f64], mode: Neighbors) -> f64 {
    (0..prob.len()).map(|p| prob.fitted_x(p, f, mode)).fold(0.0, f64::max)
}

/// Per-lightpath Q in dB at centers `f`: exact XCI over every sharer.
pub fn evaluate_qot(prob: &SpacingProblem, f: &[f64]) -> Vec<f64> {
    let g = prob.psd.w_per_hz();
    (0..prob.len())
        .map(|p| {
            let c = &prob.lightpaths[p];
            let victim = Placement::new(f[p], c.channel.width);
            let interferers: Vec<Interferer> = prob.sharers[p]
                .iter()
                .map(|(&q, &spans)| Interferer {
                    placement: Placement::new(f[q], prob.width(q)),
                    shared_spans: spans,
                })
                .collect();
            let g_ase = ase_psd(c.n_spans, &prob.fiber);
            let snr = nli_psd(&victim, c.n_spans, &interferers, &prob.psd, &prob.fiber, prob.f_grid, XciEval::Exact)
                .and_then(|nli| snr_db(g, g_ase, nli))
                .unwrap_or(f64::NEG_INFINITY);
            snr - prob.thresholds_db[p]
        })
        .collect()
}

/// Snaps centers so slot edges sit on the grid, then shifts up and back
/// down along the incoming order until no sharers overlap.
pub fn round_to_grid(prob: &SpacingProblem, f: &[f64]) -> Result<Vec<f64>, SpacingError> {
    let n = prob.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&p| (prob.gamma(p), p));
    let w = prob.w as i64;
    let mut edge: Vec<i64> = (0..n)
        .map(|p| {
            let b = prob.width(p) as i64;
            ((f[p] / prob.f_grid - b as f64 / 2.0).round() as i64).clamp(0, w - b)
        })
        .collect();
    for (i, &p) in order.iter().enumerate() {
        for &q in &order[..i] {
            if prob.sharers[p].contains_key(&q) {
                edge[p] = edge[p].max(edge[q] + prob.width(q) as i64);
            }
        }
    }
    for (i, &p) in order.iter().enumerate().rev() {
        edge[p] = edge[p].min(w - prob.width(p) as i64);
        for &q in &order[i + 1..] {
            if prob.sharers[p].contains_key(&q) {
                edge[p] = edge[p].min(edge[q] - prob.width(p) as i64);
            }
        }
        if edge[p] < 0 {
            return Err(SpacingError::Infeasible(format!("lightpath {p} cannot be placed on the grid")));
        }
    }
    Ok((0..n)
        .map(|p| (edge[p] as f64 + prob.width(p) as f64 / 2.0) * prob.f_grid)
        .collect())
}

/// Grid-aligned outcome of one strategy run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpacingSolution {
    pub strategy: String,
    pub f_ghz: Vec<f64>,
    pub channels: Vec<ChannelIndex>,
    /// LP optimum or, without an objective, the fitted value at the LP point.
    pub x_network_continuous: f64,
    /// Fitted 𝒳^network at the rounded centers, dB.
    pub x_network_db: f64,
    pub q_db: Vec<f64>,
    pub lp_iterations: usize,
}

impl SpacingSolution {
    pub fn min_q_db(&self) -> f64 {
        self.q_db.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Adopted lightpaths moved to their new channels.
    pub fn relocated(&self, prob: &SpacingProblem) -> Vec<Candidate> {
        prob.lightpaths
            .iter()
            .zip(&self.channels)
            .map(|(c, ch)| Candidate {
                channel: *ch,
                ..c.clone()
            })
            .collect()
    }

    /// Distance to the closest sharer per lightpath (∞ when alone).
    pub fn min_spacing_ghz(&self, prob: &SpacingProblem) -> Vec<f64> {
        (0..prob.len())
            .map(|p| {
                prob.sharers[p]
                    .keys()
                    .map(|&q| (self.f_ghz[p] - self.f_ghz[q]).abs())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, prob: &SpacingProblem, ctx: &PlanContext, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lightpath", "s", "d", "start", "slots", "mode", "f_ghz", "min_spacing_ghz", "q_db"])?;
        let spacing = self.min_spacing_ghz(prob);
        for (p, c) in prob.lightpaths.iter().enumerate() {
            w.write_record([
                p.to_string(),
                ctx.net.nodes[c.pair.0].clone(),
                ctx.net.nodes[c.pair.1].clone(),
                self.channels[p].start.to_string(),
                self.channels[p].width.to_string(),
                ctx.catalog.label(c.mode),
                format!("{:.3}", self.f_ghz[p]),
                format!("{:.3}", spacing[p]),
                format!("{:.4}", self.q_db[p]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Solves the Phase-4 LP under `strategy`, rounds and checks QoT.
pub fn optimize_spacing(prob: &SpacingProblem, strategy: &Strategy, lp: &LpOptions) -> Result<SpacingSolution, SpacingError> {
    if prob.is_empty() {
        return Ok(SpacingSolution {
            strategy: strategy.label(),
            f_ghz: Vec::new(),
            channels: Vec::new(),
            x_network_continuous: 0.0,
            x_network_db: f64::NEG_INFINITY,
            q_db: Vec::new(),
            lp_iterations: 0,
        });
    }
    let pm = build_phase4_model(prob, strategy)?;
    let out = solve_lp(&pm.model, lp);
    match out.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(SpacingError::Infeasible(format!(
                "{} does not fit {} lightpaths into {} slots",
                strategy.label(),
                prob.len(),
                prob.w
            )))
        }
        s => return Err(SpacingError::Solver(s)),
    }
    let f: Vec<f64> = pm.f.iter().map(|v| out.x[v.0]).collect();
    let x_cont = if strategy.has_objective() {
        out.objective
    } else {
        model_x_network(prob, &f, prob.neighbors)
    };
    let aligned = round_to_grid(prob, &f)?;
    let channels = prob
        .lightpaths
        .iter()
        .zip(&aligned)
        .map(|(c, &fc)| {
            let start = (fc / prob.f_grid - c.channel.width as f64 / 2.0).round() as usize + 1;
            ChannelIndex::new(start, c.channel.width)
        })
        .collect();
    Ok(SpacingSolution {
        strategy: strategy.label(),
        q_db: evaluate_qot(prob, &aligned),
        x_network_db: 10.0 * model_x_network(prob, &aligned, prob.neighbors).log10(),
        f_ghz: aligned,
        channels,
        x_network_continuous: x_cont,
        lp_iterations: out.iterations,
    })
}

/// Q per lightpath for channels exactly as assigned.
pub fn qot_as_assigned(prob: &SpacingProblem) -> Vec<f64> {
    evaluate_qot(prob, &prob.initial_centers())
}
