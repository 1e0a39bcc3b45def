#![allow(dead_code)]

use std::sync::Arc;

use flexplan::modes::{ModeCatalog, Transceiver};
use flexplan::physical::{FiberParams, PsdConfig};
use flexplan::precalc::{Candidate, PlanContext};
use flexplan::throughput::DemandMatrix;
use flexplan::topology::{ChannelIndex, Network};
use flexplan::Exec;

pub fn ctx(net: Network, demand: &DemandMatrix, k: usize, trx: Vec<Transceiver>, catalog: ModeCatalog, psd_uw: f64) -> PlanContext {
    PlanContext::new(
        net,
        &demand.pairs(),
        k,
        trx,
        catalog,
        FiberParams::default(),
        PsdConfig::from_uw_per_ghz(psd_uw),
        Exec::Parallel,
    )
}

/// Ring4 at `load` with folded uniform demand and 16 Gbaud transceivers.
pub fn ring(load: f64, psd_uw: f64) -> (PlanContext, DemandMatrix) {
    let net = Network::bundled("ring4").unwrap().with_load(load);
    let demand = DemandMatrix::uniform(4).bidirectional();
    let c = ctx(net, &demand, 2, vec![Transceiver::new(16.0, 2)], ModeCatalog::default_table(), psd_uw);
    (c, demand)
}

/// Two nodes joined by one link of `km`, `w` slots.
pub fn p2p(km: f64, w: usize, trx: Vec<Transceiver>, psd_uw: f64) -> (PlanContext, DemandMatrix) {
    let net = Network::new("p2p", vec!["A".into(), "B".into()], &[(0, 1, km)], 100.0, 12.5, w).unwrap();
    let demand = DemandMatrix::single((0, 1));
    let c = ctx(net, &demand, 1, trx, ModeCatalog::default_table(), psd_uw);
    (c, demand)
}

/// Lightpaths on the single p2p link at the given channels, lowest mode.
pub fn on_link(ctx: &PlanContext, channels: &[ChannelIndex]) -> Vec<Candidate> {
    let links: Arc<[usize]> = vec![0].into();
    let n_spans = ctx.net.links[0].n_spans;
    channels
        .iter()
        .enumerate()
        .map(|(i, ch)| {
            let trx = ctx.transceivers.iter().position(|t| t.slots == ch.width).expect("width has a transceiver");
            Candidate {
                id: i,
                pair: (0, 1),
                route: 0,
                links: links.clone(),
                n_spans,
                channel: *ch,
                trx,
                mode: 0,
                capacity: ctx.catalog.bitrate(0, &ctx.transceivers[trx]).unwrap_or(0.0),
                snr_best_db: 0.0,
                x_worst_db: 0.0,
                margin_db: 0.0,
            }
        })
        .collect()
}

/// The 30-lightpath point-to-point example.
pub fn thirty() -> (PlanContext, DemandMatrix) {
    let net = Network::bundled("p2p600").unwrap();
    let demand = DemandMatrix::single((0, 1));
    let c = ctx(net, &demand, 1, vec![Transceiver::new(16.0, 2)], ModeCatalog::two_mode_table(), 15.03);
    (c, demand)
}

/// Exhaustive Phase-2/3 reference: the best TH over every slot-disjoint
/// candidate subset and the fewest lightpaths reaching it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enumerated {
    pub th: f64,
    pub count: usize,
    pub leaves: u64,
}

pub fn enumerate_best(
    num_links: usize,
    cands: &flexplan::precalc::CandidateSet,
    demand: &DemandMatrix,
) -> Enumerated {
    let pairs = demand.pairs();
    let share: Vec<f64> = pairs.iter().map(|&p| demand.get(p)).collect();
    let mut items: Vec<(usize, u64, Vec<usize>, f64)> = cands
        .candidates
        .iter()
        .filter_map(|c| {
            let pi = pairs.iter().position(|&p| p == c.pair)?;
            let mask = c.channel.slots().fold(0u64, |m, s| m | 1 << (s - 1));
            Some((pi, mask, c.links.to_vec(), c.capacity))
        })
        .collect();
    // Efficient lightpaths first so the bound bites early.
    items.sort_by(|a, b| (b.3 / (a.2.len() * a.1.count_ones() as usize) as f64).total_cmp(&(a.3 / (b.2.len() * b.1.count_ones() as usize) as f64)).then(b.3.total_cmp(&a.3)));

    struct Search<'a> {
        items: &'a [(usize, u64, Vec<usize>, f64)],
        share: &'a [f64],
        /// Capacity still available per pair from item `i` on.
        rest: Vec<Vec<f64>>,
        occ: Vec<u64>,
        t: Vec<f64>,
        best: Enumerated,
    }
    impl Search<'_> {
        fn leaf(&mut self, count: usize) {
            self.best.leaves += 1;
            let th = self.t.iter().zip(self.share).map(|(t, s)| t / s).fold(f64::INFINITY, f64::min);
            if th > self.best.th + 1e-6 {
                self.best.th = th;
                self.best.count = count;
            } else if th > self.best.th - 1e-6 && count < self.best.count {
                self.best.count = count;
            }
        }
        fn go(&mut self, i: usize, count: usize) {
            let bound = self
                .t
                .iter()
                .zip(&self.rest[i])
                .zip(self.share)
                .map(|((t, r), s)| (t + r) / s)
                .fold(f64::INFINITY, f64::min);
            if bound < self.best.th - 1e-6 || (bound < self.best.th + 1e-6 && count >= self.best.count) {
                return;
            }
            if i == self.items.len() {
                self.leaf(count);
                return;
            }
            let (pi, mask, links, cap) = &self.items[i];
            if links.iter().all(|&l| self.occ[l] & mask == 0) {
                for &l in links {
                    self.occ[l] |= mask;
                }
                self.t[*pi] += cap;
                self.go(i + 1, count + 1);
                self.t[*pi] -= cap;
                for &l in links {
                    self.occ[l] &= !mask;
                }
            }
            self.go(i + 1, count);
        }
    }
    let mut rest = vec![vec![0.0; pairs.len()]; items.len() + 1];
    for i in (0..items.len()).rev() {
        rest[i] = rest[i + 1].clone();
        rest[i][items[i].0] += items[i].3;
    }
    let mut s = Search {
        items: &items,
        rest,
        share: &share,
        occ: vec![0; num_links],
        t: vec![0.0; pairs.len()],
        best: Enumerated {
            th: 0.0,
            count: 0,
            leaves: 0,
        },
    };
    s.go(0, 0);
    s.best
}

/// Random desk-scale ring instance: W ≤ 12, K = 2, two modes, one or two
/// baud-rates and one to three demanded pairs.
pub fn tiny_ring(seed: u64) -> (PlanContext, DemandMatrix) {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let w = rng.gen_range(6..=10);
    let net = Network::new(
        "tiny",
        ["A", "B", "C", "D"].map(String::from).to_vec(),
        &[(0, 1, 400.0), (1, 2, 400.0), (2, 3, 400.0), (3, 0, 400.0)],
        100.0,
        12.5,
        w,
    )
    .unwrap();
    let mut all: Vec<(usize, usize)> = (0..4).flat_map(|s| (0..4).filter(move |&d| d != s).map(move |d| (s, d))).collect();
    all.shuffle(&mut rng);
    let n_pairs = rng.gen_range(1..=3);
    let weights = all[..n_pairs].iter().map(|&p| (p, 1.0)).collect();
    let demand = DemandMatrix::from_weights(weights).unwrap();
    let trx = if rng.gen_bool(0.5) {
        vec![Transceiver::new(16.0, 2)]
    } else {
        vec![Transceiver::new(16.0, 2), Transceiver::new(32.0, 4)]
    };
    let catalog = ModeCatalog::from_csv_str("mf,fec,threshold_db,16,32\nQPSK,0.62,5.5,50,100\n16QAM,0.62,11.0,75,150\n").unwrap();
    let psd = [5.0, 15.0, 25.0][rng.gen_range(0..3)];
    let c = ctx(net, &demand, 2, trx, catalog, psd);
    (c, demand)
}
