//! Candidate-lightpath enumeration filtered by the SNR margin requirement.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::modes::{ModeCatalog, Transceiver};
use crate::par::{self, Exec};
use crate::physical::{snr_best_db, worst_case_ratio, FiberParams, PsdConfig};
use crate::topology::{enumerate_channels_strided, ChannelIndex, Network, RouteTable};

/// 𝒳_worst in dB per (channel width, start slot) over the full `W` slots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstCaseTable {
    pub w: usize,
    pub min_slots: usize,
    pub x_db: BTreeMap<(usize, usize), f64>,
}

impl WorstCaseTable {
    pub fn build(net: &Network, transceivers: &[Transceiver], psd: &PsdConfig, fp: &FiberParams, exec: Exec) -> Self {
        let min_slots = transceivers.iter().map(|t| t.slots).min().unwrap_or(1);
        let mut widths: Vec<usize> = transceivers.iter().map(|t| t.slots).collect();
        widths.sort_unstable();
        widths.dedup();
        let keys: Vec<(usize, usize)> = widths
            .iter()
            .filter(|&&b| b <= net.w)
            .flat_map(|&b| (1..=net.w - b + 1).map(move |s| (b, s)))
            .collect();
        let vals = par::map(exec, &keys, |&(b, s)| {
            let ch = ChannelIndex::new(s, b);
            10.0 * (1.0 + worst_case_ratio(&ch, net.w, min_slots, psd, fp, net.f_grid_ghz)).log10()
        });
        Self {
            w: net.w,
            min_slots,
            x_db: keys.into_iter().zip(vals).collect(),
        }
    }

    pub fn get(&self, ch: &ChannelIndex) -> f64 {
        self.x_db[&(ch.width, ch.start)]
    }

    pub fn max_db(&self) -> f64 {
        self.x_db.values().copied().fold(0.0, f64::max)
    }
}

/// SNR margin M_p per lightpath class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum MarginAssignment {
    /// `max(𝒳_worst − reduction, 0)` for every class.
    WorstCase { reduction_db: f64 },
    /// The same margin everywhere.
    Uniform(f64),
}

impl MarginAssignment {
    pub fn margin_db(&self, table: &WorstCaseTable, ch: &ChannelIndex) -> f64 {
        match *self {
            MarginAssignment::WorstCase { reduction_db } => (table.get(ch) - reduction_db).max(0.0),
            MarginAssignment::Uniform(m) => m.max(0.0),
        }
    }
}

/// Everything the phases share: topology, routes, catalog and physics.
#[derive(Debug, Clone)]
pub struct PlanContext {
    pub net: Network,
    pub routes: RouteTable,
    pub transceivers: Vec<Transceiver>,
    pub catalog: ModeCatalog,
    pub fiber: FiberParams,
    pub psd: PsdConfig,
    pub worst: WorstCaseTable,
    pub exec: Exec,
}

impl PlanContext {
    pub fn new(
        net: Network,
        pairs: &[(usize, usize)],
        k: usize,
        transceivers: Vec<Transceiver>,
        catalog: ModeCatalog,
        fiber: FiberParams,
        psd: PsdConfig,
        exec: Exec,
    ) -> Self {
        let routes = RouteTable::build(&net, pairs, k, exec);
        let worst = WorstCaseTable::build(&net, &transceivers, &psd, &fiber, exec);
        Self {
            net,
            routes,
            transceivers,
            catalog,
            fiber,
            psd,
            worst,
            exec,
        }
    }

    /// Same physics at another launch PSD.
    pub fn with_psd(&self, psd: PsdConfig) -> Self {
        let worst = WorstCaseTable::build(&self.net, &self.transceivers, &psd, &self.fiber, self.exec);
        Self {
            psd,
            worst,
            ..self.clone()
        }
    }

    pub fn with_w_cur(&self, w_cur: usize) -> Self {
        let mut c = self.clone();
        c.net.w_cur = w_cur.clamp(1, c.net.w);
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub id: usize,
    pub pair: (usize, usize),
    /// Index into the pair's route list (rank − 1).
    pub route: usize,
    pub links: Arc<[usize]>,
    pub n_spans: u32,
    pub channel: ChannelIndex,
    pub trx: usize,
    pub mode: usize,
    pub capacity: f64,
    pub snr_best_db: f64,
    pub x_worst_db: f64,
    pub margin_db: f64,
}

impl Candidate {
    /// Same route, transceiver and channel.
    pub fn same_class(&self, other: &Candidate) -> bool {
        self.pair == other.pair && self.route == other.route && self.trx == other.trx && self.channel == other.channel
    }

    pub fn class_key(&self) -> ((usize, usize), usize, usize, usize) {
        (self.pair, self.route, self.trx, self.channel.start)
    }

    pub fn uses(&self, link: usize) -> bool {
        self.links.contains(&link)
    }

    pub fn shares_link(&self, other: &Candidate) -> bool {
        self.links.iter().any(|l| other.links.contains(l))
    }

    /// Slot-links consumed: width times hop count.
    pub fn footprint(&self) -> usize {
        self.channel.width * self.links.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrecalcOptions {
    /// Keep only the highest-rate mode per (route, channel, transceiver).
    pub prune_dominated: bool,
    /// Start-slot stride for channel enumeration.
    pub stride: usize,
}

impl Default for PrecalcOptions {
    fn default() -> Self {
        Self {
            prune_dominated: true,
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
    pub w_cur: usize,
    /// Demanded pairs left without any candidate.
    pub unreachable: Vec<(usize, usize)>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn for_pair(&self, pair: (usize, usize)) -> impl Iterator<Item = &Candidate> {
        self.candidates.iter().filter(move |c| c.pair == pair)
    }

    /// β_{s,d,k,l} for candidate `id` and link `l`.
    pub fn beta(&self, id: usize, link: usize) -> bool {
        self.candidates[id].uses(link)
    }

    pub fn write_csv<W: Write>(&self, ctx: &PlanContext, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "id", "s", "d", "k", "links", "start", "slots", "baud", "mode", "capacity_gbps", "snr_best_db",
            "x_worst_db", "margin_db",
        ])?;
        for c in &self.candidates {
            let links: Vec<String> = c.links.iter().map(|l| l.to_string()).collect();
            w.write_record([
                c.id.to_string(),
                ctx.net.nodes[c.pair.0].clone(),
                ctx.net.nodes[c.pair.1].clone(),
                (c.route + 1).to_string(),
                links.join(" "),
                c.channel.start.to_string(),
                c.channel.width.to_string(),
                ctx.transceivers[c.trx].baud_gbaud.to_string(),
                ctx.catalog.label(c.mode),
                c.capacity.to_string(),
                format!("{:.4}", c.snr_best_db),
                format!("{:.4}", c.x_worst_db),
                format!("{:.4}", c.margin_db),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Phase 1: every (pair, route, channel ≤ W_cur, transceiver, mode) whose
/// SNR budget `SNR_best − M_p` covers the mode threshold.
pub fn precalculate(
    ctx: &PlanContext,
    pairs: &[(usize, usize)],
    margins: &MarginAssignment,
    opts: &PrecalcOptions,
) -> CandidateSet {
    let net = &ctx.net;
    let per_pair = par::map(ctx.exec, pairs, |&pair| {
        let mut out = Vec::new();
        for (ri, route) in ctx.routes.get(pair).iter().enumerate() {
            let links: Arc<[usize]> = route.links.clone().into();
            let snr_best = snr_best_db(route.n_spans, &ctx.psd, &ctx.fiber);
            for (ti, trx) in ctx.transceivers.iter().enumerate() {
                for ch in enumerate_channels_strided(trx.slots, net.w_cur, opts.stride) {
                    let margin = margins.margin_db(&ctx.worst, &ch);
                    let budget = snr_best - margin;
                    let modes = ctx.catalog.feasible_modes(budget, trx);
                    let keep = if opts.prune_dominated { modes.len().min(1) } else { modes.len() };
                    for &m in &modes[..keep] {
                        out.push(Candidate {
                            id: 0,
                            pair,
                            route: ri,
                            links: links.clone(),
                            n_spans: route.n_spans,
                            channel: ch,
                            trx: ti,
                            mode: m,
                            capacity: ctx.catalog.bitrate(m, trx).unwrap_or(0.0),
                            snr_best_db: snr_best,
                            x_worst_db: ctx.worst.get(&ch),
                            margin_db: margin,
                        });
                    }
                }
            }
        }
        out
    });
    let mut unreachable = Vec::new();
    let mut candidates = Vec::new();
    for (pair, list) in pairs.iter().zip(per_pair) {
        if list.is_empty() {
            log::warn!("pair {:?} has no candidate lightpath at any mode", pair);
            unreachable.push(*pair);
        }
        candidates.extend(list);
    }
    for (i, c) in candidates.iter_mut().enumerate() {
        c.id = i;
    }
    CandidateSet {
        candidates,
        w_cur: net.w_cur,
        unreachable,
    }
}
