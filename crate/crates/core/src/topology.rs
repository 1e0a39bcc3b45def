//! Network graph, K-shortest routes and spectrum-slot bookkeeping.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use bitvec::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum TopologyError {
    #[error("cannot read topology: {0}")]
    Io(#[from] std::io::Error),
    #[error("topology parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("link {u}-{v} references an undeclared node")]
    DanglingEndpoint { u: String, v: String },
    #[error("link {u}-{v} has nonpositive length {length}")]
    NonPositiveLength { u: String, v: String, length: f64 },
    #[error("link {0}-{0} is a self loop")]
    SelfLoop(String),
    #[error("duplicate link {u}-{v}")]
    DuplicateLink { u: String, v: String },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("unknown bundled topology `{0}`")]
    UnknownBundled(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Link {
    pub id: usize,
    pub u: usize,
    pub v: usize,
    pub length_km: f64,
    pub span_km: f64,
    pub n_spans: u32,
}

impl Link {
    pub fn other(&self, node: usize) -> usize {
        if node == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Network {
    pub name: String,
    pub nodes: Vec<String>,
    pub links: Vec<Link>,
    pub f_grid_ghz: f64,
    /// Slots per link.
    pub w: usize,
    /// Highest usable slot index.
    pub w_cur: usize,
    pub span_km: f64,
    #[serde(skip)]
    adjacency: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
struct LinkSpec {
    u: String,
    v: String,
    length_km: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
struct TopologyFile {
    #[serde(default)]
    name: Option<String>,
    nodes: Vec<String>,
    links: Vec<LinkSpec>,
    span_km: f64,
    f_grid_ghz: f64,
    #[serde(rename = "W")]
    w: usize,
    #[serde(rename = "W_cur", default)]
    w_cur: Option<usize>,
    #[serde(default = "one")]
    scale_factor: f64,
}

pub const BUNDLED: [&str; 4] = ["ring4", "cost239", "nsf", "p2p600"];

impl Network {
    pub fn new(
        name: impl Into<String>,
        nodes: Vec<String>,
        links: &[(usize, usize, f64)],
        span_km: f64,
        f_grid_ghz: f64,
        w: usize,
    ) -> Result<Self, TopologyError> {
        if !(f_grid_ghz > 0.0) || w == 0 || !(span_km > 0.0) {
            return Err(TopologyError::Grid(format!(
                "f_grid={f_grid_ghz} W={w} span={span_km}"
            )));
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(links.len());
        for &(u, v, len) in links {
            let name_of = |i: usize| nodes.get(i).cloned().unwrap_or_else(|| format!("#{i}"));
            if u >= nodes.len() || v >= nodes.len() {
                return Err(TopologyError::DanglingEndpoint {
                    u: name_of(u),
                    v: name_of(v),
                });
            }
            if u == v {
                return Err(TopologyError::SelfLoop(name_of(u)));
            }
            if !(len > 0.0) {
                return Err(TopologyError::NonPositiveLength {
                    u: name_of(u),
                    v: name_of(v),
                    length: len,
                });
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(TopologyError::DuplicateLink {
                    u: name_of(u),
                    v: name_of(v),
                });
            }
            let n_spans = ((len / span_km) - 1e-9).ceil().max(1.0) as u32;
            out.push(Link {
                id: out.len(),
                u,
                v,
                length_km: len,
                span_km,
                n_spans,
            });
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for l in &out {
            adjacency[l.u].push(l.id);
            adjacency[l.v].push(l.id);
        }
        Ok(Self {
            name: name.into(),
            nodes,
            links: out,
            f_grid_ghz,
            w,
            w_cur: w,
            span_km,
            adjacency,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self, TopologyError> {
        let file: TopologyFile = serde_json::from_str(text)?;
        let index: HashMap<&str, usize> = file
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let mut links = Vec::new();
        for l in &file.links {
            let (Some(&u), Some(&v)) = (index.get(l.u.as_str()), index.get(l.v.as_str())) else {
                return Err(TopologyError::DanglingEndpoint {
                    u: l.u.clone(),
                    v: l.v.clone(),
                });
            };
            links.push((u, v, l.length_km * file.scale_factor));
        }
        let mut net = Network::new(
            file.name.unwrap_or_else(|| "network".into()),
            file.nodes.clone(),
            &links,
            file.span_km,
            file.f_grid_ghz,
            file.w,
        )?;
        if let Some(wc) = file.w_cur {
            net.set_w_cur(wc)?;
        }
        Ok(net)
    }

    /// Bundled topologies: `ring4`, `cost239`, `nsf`, `p2p600`.
    pub fn bundled(name: &str) -> Result<Self, TopologyError> {
        let text = match name {
            "ring4" => include_str!("../data/ring4.json"),
            "cost239" => include_str!("../data/cost239.json"),
            "nsf" => include_str!("../data/nsf.json"),
            "p2p600" => include_str!("../data/p2p600.json"),
            other => return Err(TopologyError::UnknownBundled(other.to_string())),
        };
        Self::from_json_str(text)
    }

    pub fn set_w_cur(&mut self, w_cur: usize) -> Result<(), TopologyError> {
        if w_cur == 0 || w_cur > self.w {
            return Err(TopologyError::Grid(format!("W_cur={w_cur} outside 1..={}", self.w)));
        }
        self.w_cur = w_cur;
        Ok(())
    }

    /// Copy with `W_cur = round(load · W)`, at least one slot.
    pub fn with_load(&self, load: f64) -> Self {
        let mut n = self.clone();
        n.w_cur = ((load * self.w as f64).round() as usize).clamp(1, self.w);
        n
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    pub fn incident(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn link_between(&self, u: usize, v: usize) -> Option<usize> {
        self.adjacency[u]
            .iter()
            .copied()
            .find(|&l| self.links[l].other(u) == v)
    }

    /// Total spectrum per link in GHz.
    pub fn band_ghz(&self) -> f64 {
        self.w as f64 * self.f_grid_ghz
    }

    /// Ordered node pairs (s, d), s != d, in lexicographic order.
    pub fn ordered_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.num_nodes();
        (0..n)
            .flat_map(|s| (0..n).filter(move |&d| d != s).map(move |d| (s, d)))
            .collect()
    }

    pub fn route_from_nodes(&self, k: usize, nodes: &[usize]) -> Option<Route> {
        let mut links = Vec::with_capacity(nodes.len().saturating_sub(1));
        for w in nodes.windows(2) {
            links.push(self.link_between(w[0], w[1])?);
        }
        let length_km = links.iter().map(|&l| self.links[l].length_km).sum();
        let n_spans = links.iter().map(|&l| self.links[l].n_spans).sum();
        Some(Route {
            s: nodes[0],
            d: *nodes.last()?,
            k,
            nodes: nodes.to_vec(),
            links,
            length_km,
            n_spans,
        })
    }
}

pub fn load_topology(path: impl AsRef<Path>) -> Result<Network, TopologyError> {
    Network::from_json_str(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Route {
    pub s: usize,
    pub d: usize,
    /// 1-based rank among the K shortest routes.
    pub k: usize,
    pub nodes: Vec<usize>,
    pub links: Vec<usize>,
    pub length_km: f64,
    pub n_spans: u32,
}

impl Route {
    pub fn uses(&self, link: usize) -> bool {
        self.links.contains(&link)
    }

    pub fn is_loopless(&self) -> bool {
        let set: BTreeSet<_> = self.nodes.iter().collect();
        set.len() == self.nodes.len()
    }
}

fn length_key(len: f64) -> i64 {
    (len * 1e6).round() as i64
}

/// Dijkstra restricted to allowed nodes and links; ties prefer the
/// lexicographically smaller node sequence.
fn shortest_path(
    net: &Network,
    s: usize,
    d: usize,
    banned_nodes: &[bool],
    banned_links: &BTreeSet<usize>,
) -> Option<(f64, Vec<usize>)> {
    let n = net.num_nodes();
    let mut best: Vec<Option<(i64, Vec<usize>)>> = vec![None; n];
    let mut done = vec![false; n];
    best[s] = Some((0, vec![s]));
    let mut dist = vec![f64::INFINITY; n];
    dist[s] = 0.0;
    loop {
        let mut pick: Option<usize> = None;
        for v in 0..n {
            if done[v] || best[v].is_none() {
                continue;
            }
            pick = match pick {
                None => Some(v),
                Some(p) => {
                    let (kp, pp) = best[p].as_ref().unwrap();
                    let (kv, pv) = best[v].as_ref().unwrap();
                    if (kv, pv) < (kp, pp) {
                        Some(v)
                    } else {
                        Some(p)
                    }
                }
            };
        }
        let u = pick?;
        done[u] = true;
        if u == d {
            let (_, path) = best[d].take().unwrap();
            return Some((dist[d], path));
        }
        let (_, upath) = best[u].clone().unwrap();
        for &l in net.incident(u) {
            if banned_links.contains(&l) {
                continue;
            }
            let v = net.links[l].other(u);
            if done[v] || banned_nodes[v] {
                continue;
            }
            let nd = dist[u] + net.links[l].length_km;
            let mut np = upath.clone();
            np.push(v);
            let key = length_key(nd);
            let better = match &best[v] {
                None => true,
                Some((kv, pv)) => (key, &np) < (*kv, pv),
            };
            if better {
                dist[v] = nd;
                best[v] = Some((key, np));
            }
        }
    }
}

/// Up to `k` loopless routes from `s` to `d` (Yen), sorted by length with
/// ties broken by the lexicographic node sequence.
pub fn k_shortest_paths(net: &Network, s: usize, d: usize, k: usize) -> Vec<Route> {
    if s == d || k == 0 || s >= net.num_nodes() || d >= net.num_nodes() {
        return Vec::new();
    }
    let none_banned = vec![false; net.num_nodes()];
    let Some(first) = shortest_path(net, s, d, &none_banned, &BTreeSet::new()) else {
        return Vec::new();
    };
    let mut accepted: Vec<(f64, Vec<usize>)> = vec![first];
    let mut candidates: BTreeSet<(i64, Vec<usize>)> = BTreeSet::new();
    let mut lengths: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut known: BTreeSet<Vec<usize>> = BTreeSet::new();
    known.insert(accepted[0].1.clone());

    loop {
        let (_, last) = accepted.last().unwrap().clone();
        for i in 0..last.len() - 1 {
            let spur = last[i];
            let root = &last[..=i];
            let mut banned_links = BTreeSet::new();
            for (_, p) in &accepted {
                if p.len() > i + 1 && &p[..=i] == root {
                    if let Some(l) = net.link_between(p[i], p[i + 1]) {
                        banned_links.insert(l);
                    }
                }
            }
            let mut banned_nodes = vec![false; net.num_nodes()];
            for &v in &root[..i] {
                banned_nodes[v] = true;
            }
            if let Some((_, tail)) = shortest_path(net, spur, d, &banned_nodes, &banned_links) {
                let mut full = root[..i].to_vec();
                full.extend(tail);
                if known.insert(full.clone()) {
                    let route = net.route_from_nodes(0, &full).expect("path uses existing links");
                    candidates.insert((length_key(route.length_km), full.clone()));
                    lengths.insert(full, route.length_km);
                }
            }
        }
        let kth_key = if accepted.len() >= k {
            Some(length_key(accepted[k - 1].0))
        } else {
            None
        };
        let Some(next) = candidates.iter().next().cloned() else {
            break;
        };
        // Keep popping past K while lengths tie with the K-th route.
        if let Some(kk) = kth_key {
            if next.0 > kk {
                break;
            }
        }
        candidates.remove(&next);
        let len = lengths[&next.1];
        accepted.push((len, next.1));
    }
    accepted.sort_by(|a, b| length_key(a.0).cmp(&length_key(b.0)).then_with(|| a.1.cmp(&b.1)));
    accepted.truncate(k);
    accepted
        .iter()
        .enumerate()
        .map(|(i, (_, p))| net.route_from_nodes(i + 1, p).expect("valid path"))
        .collect()
}

/// K-shortest routes for a set of pairs, keyed by pair.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RouteTable {
    pub k: usize,
    pub routes: std::collections::BTreeMap<(usize, usize), Vec<Route>>,
}

impl RouteTable {
    pub fn build(net: &Network, pairs: &[(usize, usize)], k: usize, exec: crate::par::Exec) -> Self {
        let found = crate::par::map(exec, pairs, |&(s, d)| k_shortest_paths(net, s, d, k));
        Self {
            k,
            routes: pairs.iter().copied().zip(found).collect(),
        }
    }

    pub fn get(&self, pair: (usize, usize)) -> &[Route] {
        self.routes.get(&pair).map_or(&[], Vec::as_slice)
    }
}

/// Contiguous run of `width` slots starting at the 1-based slot `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChannelIndex {
    pub start: usize,
    pub width: usize,
}

impl ChannelIndex {
    pub fn new(start: usize, width: usize) -> Self {
        debug_assert!(start >= 1 && width >= 1);
        Self { start, width }
    }

    /// Last occupied slot (inclusive, 1-based).
    pub fn end(&self) -> usize {
        self.start + self.width - 1
    }

    pub fn slots(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end()
    }

    pub fn overlaps(&self, other: &ChannelIndex) -> bool {
        self.start <= other.end() && other.start <= self.end()
    }

    /// Bit mask of length `w`; bit `i` stands for slot `i + 1`.
    pub fn mask(&self, w: usize) -> BitVec {
        let mut m = bitvec![0; w];
        for s in self.slots() {
            if s <= w {
                m.set(s - 1, true);
            }
        }
        m
    }

    /// Center frequency relative to the band edge, GHz.
    pub fn center_ghz(&self, f_grid: f64) -> f64 {
        (self.start as f64 - 1.0 + self.width as f64 / 2.0) * f_grid
    }
}

/// All placements of a `width`-slot channel below `w_cur`.
pub fn enumerate_channels(width: usize, w_cur: usize) -> Vec<ChannelIndex> {
    enumerate_channels_strided(width, w_cur, 1)
}

/// Placements whose start slot is `1 + j·stride`.
pub fn enumerate_channels_strided(width: usize, w_cur: usize, stride: usize) -> Vec<ChannelIndex> {
    if width == 0 || width > w_cur {
        return Vec::new();
    }
    (1..=w_cur - width + 1)
        .step_by(stride.max(1))
        .map(|s| ChannelIndex::new(s, width))
        .collect()
}

/// Per-link slot occupancy.
#[derive(Debug, Clone, PartialEq)]
pub struct Occupancy {
    pub w: usize,
    pub links: Vec<BitVec>,
}

impl Occupancy {
    pub fn new(num_links: usize, w: usize) -> Self {
        Self {
            w,
            links: vec![bitvec![0; w]; num_links],
        }
    }

    pub fn is_free(&self, links: &[usize], ch: &ChannelIndex) -> bool {
        if ch.end() > self.w {
            return false;
        }
        links
            .iter()
            .all(|&l| self.links[l][ch.start - 1..ch.end()].not_any())
    }

    pub fn set(&mut self, links: &[usize], ch: &ChannelIndex, used: bool) {
        for &l in links {
            self.links[l][ch.start - 1..ch.end()].fill(used);
        }
    }

    /// Count of lightpaths per (link, slot) would exceed one if this fails.
    pub fn try_occupy(&mut self, links: &[usize], ch: &ChannelIndex) -> bool {
        if !self.is_free(links, ch) {
            return false;
        }
        self.set(links, ch, true);
        true
    }
}
