//! Best-bound branch and bound over the simplex relaxation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::model::{LinearModel, Sense};
use std::rc::Rc;

use crate::simplex::{
    resolve_from_basis, resolve_from_tableau, solve_keep, solve_relaxation, Basis, LpOptions, LpStatus, WarmTableau,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    /// Proven optimal within numerical tolerance.
    Optimal,
    /// Feasible with a proven gap no larger than the requested one.
    GapFeasible,
    Infeasible,
    Unbounded,
    /// Stopped by a time or node limit; an incumbent may exist.
    Limit,
}

#[derive(Debug, Clone, Copy)]
pub struct MilpOptions {
    pub lp: LpOptions,
    /// Relative optimality gap at which the search stops.
    pub rel_gap: f64,
    pub abs_gap: f64,
    pub time_limit: Option<Duration>,
    pub node_limit: usize,
    pub integrality_tol: f64,
    /// Round-and-fix heuristic frequency in nodes (0 disables).
    pub heuristic_every: usize,
    /// Every integer-feasible objective value is a multiple of this step;
    /// node bounds are rounded to it. Detected as 1 for integral objectives.
    pub objective_step: Option<f64>,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            lp: LpOptions::default(),
            rel_gap: 1e-6,
            abs_gap: 1e-9,
            time_limit: None,
            node_limit: 1_000_000,
            integrality_tol: 1e-6,
            heuristic_every: 50,
            objective_step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncumbentEvent {
    pub node: usize,
    pub elapsed: Duration,
    pub objective: f64,
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct MilpResult {
    pub status: MilpStatus,
    pub objective: Option<f64>,
    pub values: Option<Vec<f64>>,
    /// Best proven bound in the model's sense.
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub trace: Vec<IncumbentEvent>,
}

impl MilpResult {
    pub fn is_feasible(&self) -> bool {
        self.values.is_some()
    }
}

struct Node {
    /// Bound inherited from the parent relaxation (minimisation form).
    bound: f64,
    depth: usize,
    seq: usize,
    parent: usize,
    /// Optimal basis of the parent relaxation.
    basis: Option<Rc<Basis>>,
    changes: Vec<(usize, f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap: smaller bound first, deeper first on ties.
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(self.seq.cmp(&other.seq))
    }
}

struct Search<'a> {
    model: &'a LinearModel,
    opts: MilpOptions,
    sign: f64,
    base_lb: Vec<f64>,
    base_ub: Vec<f64>,
    objective_step: Option<f64>,
    incumbent: Option<(f64, Vec<f64>)>,
    trace: Vec<IncumbentEvent>,
    start: Instant,
    nodes: usize,
}

impl<'a> Search<'a> {
    fn bounds_for(&self, changes: &[(usize, f64, f64)]) -> (Vec<f64>, Vec<f64>) {
        let mut lb = self.base_lb.clone();
        let mut ub = self.base_ub.clone();
        for &(j, l, u) in changes {
            lb[j] = l;
            ub[j] = u;
        }
        (lb, ub)
    }

    fn tighten(&self, bound: f64) -> f64 {
        match self.objective_step {
            Some(g) if bound.is_finite() => g * (bound / g - 1e-6).ceil(),
            _ => bound,
        }
    }

    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            None => f64::INFINITY,
            Some((z, _)) => {
                let tol = self.opts.abs_gap.max(self.opts.rel_gap * z.abs());
                z - tol
            }
        }
    }

    fn offer(&mut self, x: &[f64], global_bound: f64) -> bool {
        let mut x = x.to_vec();
        for (v, xi) in self.model.vars.iter().zip(x.iter_mut()) {
            if v.kind.is_integral() {
                *xi = xi.round();
            }
        }
        if self.model.max_violation(&x) > 1e-6 {
            return false;
        }
        let z = self.sign * self.model.objective_value(&x);
        let better = match &self.incumbent {
            None => true,
            Some((best, _)) => z < best - 1e-9 * (1.0 + best.abs()),
        };
        if better {
            self.trace.push(IncumbentEvent {
                node: self.nodes,
                elapsed: self.start.elapsed(),
                objective: self.sign * z,
                bound: self.sign * global_bound.min(z),
            });
            self.incumbent = Some((z, x));
        }
        better
    }

    fn round_and_fix(&mut self, x: &[f64], lb: &[f64], ub: &[f64], global_bound: f64) {
        let mut flb = lb.to_vec();
        let mut fub = ub.to_vec();
        for (j, v) in self.model.vars.iter().enumerate() {
            if v.kind.is_integral() {
                let r = x[j].round().clamp(lb[j], ub[j]);
                flb[j] = r;
                fub[j] = r;
            }
        }
        let out = solve_relaxation(self.model, &flb, &fub, &self.opts.lp);
        if out.status == LpStatus::Optimal {
            self.offer(&out.x, global_bound);
        }
    }

    fn timed_out(&self) -> bool {
        self.opts.time_limit.is_some_and(|t| self.start.elapsed() >= t)
            || self.nodes >= self.opts.node_limit
    }
}

/// Branch and bound. `initial` seeds the incumbent when it is feasible.
pub fn solve_milp(model: &LinearModel, opts: &MilpOptions, initial: Option<&[f64]>) -> MilpResult {
    let sign = match model.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let integral_objective = !model.objective.is_empty()
        && model.objective.iter().all(|&(v, c)| {
            model.vars[v.0].kind.is_integral() && (c - c.round()).abs() < 1e-12
        });
    let mut s = Search {
        model,
        opts: *opts,
        sign,
        base_lb: model.vars.iter().map(|v| v.lb).collect(),
        base_ub: model.vars.iter().map(|v| v.ub).collect(),
        objective_step: opts
            .objective_step
            .filter(|g| *g > 0.0)
            .or(integral_objective.then_some(1.0)),
        incumbent: None,
        trace: Vec::new(),
        start: Instant::now(),
        nodes: 0,
    };
    if let Some(x0) = initial {
        if x0.len() == model.num_vars() && model.is_integral(x0, opts.integrality_tol) {
            s.offer(x0, f64::NEG_INFINITY);
        }
    }

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        depth: 0,
        seq: 0,
        parent: usize::MAX,
        basis: None,
        changes: Vec::new(),
    });
    let mut seq = 0;
    // Tableau of the most recently solved node; its children start from it.
    let mut last: Option<(usize, WarmTableau)> = None;
    // Smallest bound among nodes dropped only because of the gap tolerance.
    let mut gap_pruned = f64::INFINITY;
    let mut limited = false;
    let mut root_unbounded = false;

    while let Some(node) = heap.pop() {
        if node.bound >= s.cutoff() {
            gap_pruned = gap_pruned.min(node.bound);
            continue;
        }
        if s.timed_out() {
            heap.push(node);
            limited = true;
            break;
        }
        s.nodes += 1;
        let (lb, ub) = s.bounds_for(&node.changes);
        let (out, warm) = match (last.take(), &node.basis) {
            (Some((id, tab)), _) if id == node.parent => resolve_from_tableau(model, tab, &lb, &ub, &opts.lp),
            (_, Some(b)) => resolve_from_basis(model, b, &lb, &ub, &opts.lp),
            _ => solve_keep(model, &lb, &ub, &opts.lp),
        };
        let basis = warm.as_ref().and_then(|w| w.basis()).map(Rc::new);
        if let Some(w) = warm {
            last = Some((node.seq, w));
        }
        match out.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                if node.depth == 0 {
                    root_unbounded = true;
                    break;
                }
                continue;
            }
            LpStatus::IterationLimit => {
                limited = true;
                continue;
            }
            LpStatus::Optimal => {}
        }
        let z = s.tighten(sign * out.objective).max(node.bound);
        let open_min = heap.peek().map_or(f64::INFINITY, |n| n.bound);
        let global = z.min(open_min).min(gap_pruned);
        if z >= s.cutoff() {
            gap_pruned = gap_pruned.min(z);
            continue;
        }

        // Highest priority, then most fractional, first declared on ties.
        let mut branch: Option<(usize, f64)> = None;
        let mut best = (i32::MIN, opts.integrality_tol);
        for (j, v) in model.vars.iter().enumerate() {
            if !v.kind.is_integral() {
                continue;
            }
            let f = out.x[j] - out.x[j].floor();
            let score = f.min(1.0 - f);
            if score <= opts.integrality_tol {
                continue;
            }
            if v.priority > best.0 || (v.priority == best.0 && score > best.1 + 1e-12) {
                best = (v.priority, score);
                branch = Some((j, out.x[j]));
            }
        }
        let Some((j, xj)) = branch else {
            s.offer(&out.x, global);
            continue;
        };
        if opts.heuristic_every > 0 && (s.nodes == 1 || s.nodes % opts.heuristic_every == 0) {
            s.round_and_fix(&out.x, &lb, &ub, global);
            if z >= s.cutoff() {
                gap_pruned = gap_pruned.min(z);
                continue;
            }
        }
        let down = xj.floor();
        let mut left = node.changes.clone();
        left.push((j, lb[j], down));
        let mut right = node.changes;
        right.push((j, down + 1.0, ub[j]));
        // The child in the rounding direction is explored first.
        let (second, first) = if xj - down >= 0.5 { (left, right) } else { (right, left) };
        for changes in [second, first] {
            seq += 1;
            heap.push(Node {
                bound: z,
                depth: node.depth + 1,
                seq,
                parent: node.seq,
                basis: basis.clone(),
                changes,
            });
        }
    }

    let open_min = heap.peek().map_or(f64::INFINITY, |n| n.bound);
    let nodes = s.nodes;
    let trace = std::mem::take(&mut s.trace);
    if root_unbounded {
        return MilpResult {
            status: MilpStatus::Unbounded,
            objective: None,
            values: None,
            bound: sign * f64::NEG_INFINITY,
            gap: f64::INFINITY,
            nodes,
            trace,
        };
    }
    match s.incumbent {
        None => MilpResult {
            status: if limited {
                MilpStatus::Limit
            } else {
                MilpStatus::Infeasible
            },
            objective: None,
            values: None,
            bound: sign * open_min,
            gap: f64::INFINITY,
            nodes,
            trace,
        },
        Some((z, x)) => {
            let bound = open_min.min(gap_pruned).min(z);
            let gap = if z.abs() > 1e-12 {
                (z - bound) / z.abs()
            } else {
                z - bound
            };
            let status = if limited && bound < z - opts.abs_gap.max(opts.rel_gap * z.abs()) {
                MilpStatus::Limit
            } else if z - bound <= 1e-9 * (1.0 + z.abs()) {
                MilpStatus::Optimal
            } else {
                MilpStatus::GapFeasible
            };
            MilpResult {
                status,
                objective: Some(sign * z),
                values: Some(x),
                bound: sign * bound,
                gap: gap.max(0.0),
                nodes,
                trace,
            }
        }
    }
}
