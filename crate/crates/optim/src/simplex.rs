//! Dense bounded-variable simplex: primal for cold starts, dual for
//! re-solves after bound changes.
//!
//! Every row `a·x (cmp) b` becomes `a·x + s = b` with a bounded slack, so the
//! initial basis is made of slacks. Rows whose slack would start outside its
//! bounds get an artificial column; phase one drives those to zero. The full
//! tableau `B⁻¹M` is kept in row-major order, which is adequate for the few
//! thousand columns the planning models produce.

use crate::model::{Cmp, LinearModel, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row duals in the model's own sense: `objective = duals·rhs + reduced·x`.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct LpOptions {
    pub max_iterations: usize,
    pub optimality_tol: f64,
    pub feasibility_tol: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200_000,
            optimality_tol: 1e-9,
            feasibility_tol: 1e-7,
        }
    }
}

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_SWITCH: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColState {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free column sitting at zero.
    Zero,
}

struct Tableau {
    m: usize,
    ncols: usize,
    n_struct: usize,
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<ColState>,
    xval: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    rhs: Vec<f64>,
    iterations: usize,
}

enum StepResult {
    Optimal,
    Unbounded,
    Progress,
}

impl Tableau {
    fn row(&self, i: usize) -> &[f64] {
        &self.t[i * self.ncols..(i + 1) * self.ncols]
    }

    fn recompute_reduced_costs(&mut self) {
        let mut d = self.cost.clone();
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
                for (dj, &a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        for i in 0..self.m {
            d[self.basis[i]] = 0.0;
        }
        self.d = d;
    }

    /// beta = B⁻¹b − Σ_nonbasic T_j x_j, using the slack block as B⁻¹.
    fn refresh_beta(&mut self) {
        let n = self.n_struct;
        for i in 0..self.m {
            let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
            let mut v = 0.0;
            for k in 0..self.m {
                v += row[n + k] * self.rhs[k];
            }
            for j in 0..self.ncols {
                if self.state[j] != ColState::Basic && self.xval[j] != 0.0 {
                    v -= row[j] * self.xval[j];
                }
            }
            self.beta[i] = v;
        }
    }

    fn choose_entering(&self, tol: f64, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols {
            let st = self.state[j];
            if st == ColState::Basic || self.ub[j] - self.lb[j] <= 0.0 {
                continue;
            }
            let dj = self.d[j];
            let dir = if dj < -tol && matches!(st, ColState::Lower | ColState::Zero) {
                1.0
            } else if dj > tol && matches!(st, ColState::Upper | ColState::Zero) {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if dj.abs() > best_score {
                best_score = dj.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn step(&mut self, tol: f64, bland: bool) -> (StepResult, f64) {
        let Some((j, dir)) = self.choose_entering(tol, bland) else {
            return (StepResult::Optimal, 0.0);
        };
        let nc = self.ncols;
        // Ratio test.
        let mut t_best = self.ub[j] - self.lb[j];
        let mut leave: Option<usize> = None;
        let mut best_alpha = 0.0;
        for i in 0..self.m {
            let a = self.t[i * nc + j] * dir;
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let b = self.basis[i];
            let lim = if a > 0.0 {
                if self.lb[b].is_finite() {
                    (self.beta[i] - self.lb[b]) / a
                } else {
                    continue;
                }
            } else if self.ub[b].is_finite() {
                (self.ub[b] - self.beta[i]) / (-a)
            } else {
                continue;
            };
            let lim = lim.max(0.0);
            let better = if lim < t_best - 1e-12 {
                true
            } else if lim <= t_best + 1e-12 {
                match leave {
                    // A basic leaving is preferred to a bound flip of equal length.
                    None => true,
                    Some(r) if bland => b < self.basis[r],
                    Some(_) => a.abs() > best_alpha,
                }
            } else {
                false
            };
            if better {
                t_best = t_best.min(lim);
                leave = Some(i);
                best_alpha = a.abs();
            }
        }
        if !t_best.is_finite() {
            return (StepResult::Unbounded, 0.0);
        }
        let step = t_best;
        // Move basics along the column.
        if step != 0.0 {
            for i in 0..self.m {
                let a = self.t[i * nc + j];
                if a != 0.0 {
                    self.beta[i] -= dir * step * a;
                }
            }
        }
        let entering_value = self.xval[j] + dir * step;
        match leave {
            None => {
                // Bound flip.
                if dir > 0.0 {
                    self.state[j] = ColState::Upper;
                    self.xval[j] = self.ub[j];
                } else {
                    self.state[j] = ColState::Lower;
                    self.xval[j] = self.lb[j];
                }
            }
            Some(r) => {
                let out = self.basis[r];
                let a = self.t[r * nc + j] * dir;
                if a > 0.0 {
                    self.state[out] = ColState::Lower;
                    self.xval[out] = self.lb[out];
                } else {
                    self.state[out] = ColState::Upper;
                    self.xval[out] = self.ub[out];
                }
                self.pivot(r, j);
                self.basis[r] = j;
                self.state[j] = ColState::Basic;
                self.xval[j] = 0.0;
                self.beta[r] = entering_value;
            }
        }
        self.iterations += 1;
        (StepResult::Progress, step)
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let nc = self.ncols;
        let piv = self.t[r * nc + j];
        {
            let row = &mut self.t[r * nc..(r + 1) * nc];
            let inv = 1.0 / piv;
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[j] = 1.0;
        }
        let pivot_row: Vec<f64> = self.t[r * nc..(r + 1) * nc].to_vec();
        let nz: Vec<usize> = (0..nc).filter(|&k| pivot_row[k] != 0.0).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * nc + j];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * nc..(i + 1) * nc];
            for &k in &nz {
                row[k] -= f * pivot_row[k];
            }
            row[j] = 0.0;
        }
        let f = self.d[j];
        if f != 0.0 {
            for &k in &nz {
                self.d[k] -= f * pivot_row[k];
            }
            self.d[j] = 0.0;
        }
    }

    fn run(&mut self, opts: &LpOptions) -> Option<LpStatus> {
        let mut degenerate = 0usize;
        let mut bland = false;
        let mut since_refresh = 0usize;
        loop {
            if self.iterations >= opts.max_iterations {
                return Some(LpStatus::IterationLimit);
            }
            let (res, step) = self.step(opts.optimality_tol, bland);
            match res {
                StepResult::Optimal => {
                    self.refresh_beta();
                    return None;
                }
                StepResult::Unbounded => return Some(LpStatus::Unbounded),
                StepResult::Progress => {
                    if step <= 1e-12 {
                        degenerate += 1;
                        if degenerate > DEGENERATE_SWITCH {
                            bland = true;
                        }
                    } else {
                        degenerate = 0;
                        bland = false;
                    }
                    since_refresh += 1;
                    if since_refresh >= 400 {
                        since_refresh = 0;
                        self.refresh_beta();
                        self.recompute_reduced_costs();
                    }
                }
            }
        }
    }
}

/// Solves the continuous relaxation of `model` with the supplied bounds.
pub fn solve_relaxation(model: &LinearModel, lb: &[f64], ub: &[f64], opts: &LpOptions) -> LpOutcome {
    solve_cold(model, lb, ub, opts).0
}

fn solve_cold(model: &LinearModel, lb: &[f64], ub: &[f64], opts: &LpOptions) -> (LpOutcome, Option<Tableau>) {
    let n = model.num_vars();
    let m = model.num_constraints();
    let infeasible = |iterations| LpOutcome {
        status: LpStatus::Infeasible,
        x: vec![0.0; n],
        objective: f64::NAN,
        duals: vec![0.0; m],
        reduced_costs: vec![0.0; n],
        iterations,
    };
    if lb.iter().zip(ub).any(|(l, u)| l > u) {
        return (infeasible(0), None);
    }

    // Dense row matrix of the structural part.
    let mut a = vec![0.0; m * n];
    let mut rhs = vec![0.0; m];
    let mut slack_lb = vec![0.0; m];
    let mut slack_ub = vec![0.0; m];
    for (i, c) in model.constraints.iter().enumerate() {
        for &(v, coef) in &c.terms {
            a[i * n + v.0] += coef;
        }
        rhs[i] = c.rhs;
        match c.cmp {
            Cmp::Le => {
                slack_lb[i] = 0.0;
                slack_ub[i] = f64::INFINITY;
            }
            Cmp::Ge => {
                slack_lb[i] = f64::NEG_INFINITY;
                slack_ub[i] = 0.0;
            }
            Cmp::Eq => {}
        }
    }

    let mut xval0 = vec![0.0; n];
    let mut state0 = vec![ColState::Zero; n];
    for j in 0..n {
        if lb[j].is_finite() {
            xval0[j] = lb[j];
            state0[j] = ColState::Lower;
        } else if ub[j].is_finite() {
            xval0[j] = ub[j];
            state0[j] = ColState::Upper;
        }
    }

    // Residuals decide which rows need an artificial column.
    let mut resid = rhs.clone();
    for i in 0..m {
        let row = &a[i * n..(i + 1) * n];
        for j in 0..n {
            if xval0[j] != 0.0 {
                resid[i] -= row[j] * xval0[j];
            }
        }
    }
    let mut art_rows = Vec::new();
    for i in 0..m {
        let r = resid[i];
        if r < slack_lb[i] - 1e-12 || r > slack_ub[i] + 1e-12 {
            art_rows.push(i);
        }
    }
    let n_art = art_rows.len();
    let ncols = n + m + n_art;
    let mut tab = Tableau {
        m,
        ncols,
        n_struct: n,
        t: vec![0.0; m * ncols],
        beta: vec![0.0; m],
        basis: vec![0; m],
        state: vec![ColState::Lower; ncols],
        xval: vec![0.0; ncols],
        lb: vec![0.0; ncols],
        ub: vec![0.0; ncols],
        cost: vec![0.0; ncols],
        d: vec![0.0; ncols],
        rhs: rhs.clone(),
        iterations: 0,
    };
    for j in 0..n {
        tab.lb[j] = lb[j];
        tab.ub[j] = ub[j];
        tab.state[j] = state0[j];
        tab.xval[j] = xval0[j];
    }
    for i in 0..m {
        tab.lb[n + i] = slack_lb[i];
        tab.ub[n + i] = slack_ub[i];
    }
    let mut art_of_row = vec![usize::MAX; m];
    for (k, &i) in art_rows.iter().enumerate() {
        art_of_row[i] = n + m + k;
        tab.lb[n + m + k] = 0.0;
        tab.ub[n + m + k] = f64::INFINITY;
    }
    for i in 0..m {
        let row = &mut tab.t[i * ncols..(i + 1) * ncols];
        row[..n].copy_from_slice(&a[i * n..(i + 1) * n]);
        row[n + i] = 1.0;
        let r = resid[i];
        if art_of_row[i] == usize::MAX {
            tab.basis[i] = n + i;
            tab.state[n + i] = ColState::Basic;
            tab.beta[i] = r;
        } else {
            let k = art_of_row[i];
            let v = r.clamp(slack_lb[i], slack_ub[i]);
            let sigma = if r > v { 1.0 } else { -1.0 };
            row[k] = sigma;
            if sigma < 0.0 {
                for x in row.iter_mut() {
                    *x = -*x;
                }
            }
            tab.xval[n + i] = v;
            tab.state[n + i] = if v == slack_lb[i] {
                ColState::Lower
            } else {
                ColState::Upper
            };
            tab.basis[i] = k;
            tab.state[k] = ColState::Basic;
            tab.beta[i] = (r - v).abs();
        }
    }

    // Phase one.
    if n_art > 0 {
        for k in 0..n_art {
            tab.cost[n + m + k] = 1.0;
        }
        tab.recompute_reduced_costs();
        if let Some(st) = tab.run(opts) {
            if st == LpStatus::IterationLimit {
                let out = LpOutcome {
                    status: st,
                    ..infeasible(tab.iterations)
                };
                return (out, None);
            }
        }
        let mut infeas = 0.0;
        for i in 0..m {
            if tab.basis[i] >= n + m {
                infeas += tab.beta[i].max(0.0);
            }
        }
        let scale = 1.0 + rhs.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if infeas > opts.feasibility_tol * scale {
            return (infeasible(tab.iterations), None);
        }
        for k in 0..n_art {
            let c = n + m + k;
            tab.ub[c] = 0.0;
            tab.cost[c] = 0.0;
            if tab.state[c] != ColState::Basic {
                tab.state[c] = ColState::Lower;
                tab.xval[c] = 0.0;
            }
        }
        // Pivot degenerate artificials out where a usable column exists.
        for r in 0..m {
            if tab.basis[r] < n + m {
                continue;
            }
            let row = tab.row(r);
            let mut pick = None;
            let mut best = 1e-7;
            for j in 0..n + m {
                if tab.state[j] != ColState::Basic && tab.ub[j] > tab.lb[j] && row[j].abs() > best {
                    best = row[j].abs();
                    pick = Some(j);
                }
            }
            if let Some(j) = pick {
                let out = tab.basis[r];
                let val = tab.xval[j];
                tab.pivot(r, j);
                tab.basis[r] = j;
                tab.state[j] = ColState::Basic;
                tab.xval[j] = 0.0;
                tab.beta[r] = val;
                tab.state[out] = ColState::Lower;
                tab.xval[out] = 0.0;
            }
        }
        tab.refresh_beta();
    }

    // Phase two.
    set_phase_two_costs(&mut tab, model);
    tab.recompute_reduced_costs();
    let status = match tab.run(opts) {
        None => LpStatus::Optimal,
        Some(s) => s,
    };
    finish(model, tab, status)
}

fn set_phase_two_costs(tab: &mut Tableau, model: &LinearModel) {
    let sign = sense_sign(model);
    for c in tab.cost.iter_mut() {
        *c = 0.0;
    }
    for &(v, coef) in &model.objective {
        tab.cost[v.0] += sign * coef;
    }
}

fn sense_sign(model: &LinearModel) -> f64 {
    match model.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    }
}

fn finish(model: &LinearModel, mut tab: Tableau, status: LpStatus) -> (LpOutcome, Option<Tableau>) {
    let n = tab.n_struct;
    let m = tab.m;
    let sign = sense_sign(model);
    // Final reduced costs from scratch for clean duals.
    tab.recompute_reduced_costs();

    let mut x = vec![0.0; n];
    for j in 0..n {
        if tab.state[j] != ColState::Basic {
            x[j] = tab.xval[j];
        }
    }
    for i in 0..m {
        let b = tab.basis[i];
        if b < n {
            x[b] = tab.beta[i];
        }
    }
    // Snap values within rounding noise of a bound.
    for j in 0..n {
        if tab.lb[j].is_finite() && (x[j] - tab.lb[j]).abs() < 1e-10 {
            x[j] = tab.lb[j];
        }
        if tab.ub[j].is_finite() && (x[j] - tab.ub[j]).abs() < 1e-10 {
            x[j] = tab.ub[j];
        }
    }
    let objective = model.objective_value(&x);
    let duals = (0..m).map(|i| -sign * tab.d[n + i]).collect::<Vec<_>>();
    let reduced_costs = (0..n).map(|j| sign * tab.d[j]).collect::<Vec<_>>();
    let out = LpOutcome {
        status,
        x,
        objective,
        duals,
        reduced_costs,
        iterations: tab.iterations,
    };
    let keep = (status == LpStatus::Optimal).then_some(tab);
    (out, keep)
}

/// Optimal basis of a solved relaxation, reusable after bound changes.
#[derive(Debug, Clone)]
pub(crate) struct Basis {
    basis: Vec<usize>,
    state: Vec<ColState>,
}

/// Optimal tableau kept for warm starts.
pub(crate) struct WarmTableau(Tableau);

impl WarmTableau {
    pub(crate) fn basis(&self) -> Option<Basis> {
        let t = &self.0;
        let width = t.n_struct + t.m;
        if t.basis.iter().any(|&b| b >= width) {
            return None;
        }
        Some(Basis {
            basis: t.basis.clone(),
            state: t.state[..width].to_vec(),
        })
    }
}

/// Cold solve that also returns the optimal tableau.
pub(crate) fn solve_keep(
    model: &LinearModel,
    lb: &[f64],
    ub: &[f64],
    opts: &LpOptions,
) -> (LpOutcome, Option<WarmTableau>) {
    let (out, tab) = solve_cold(model, lb, ub, opts);
    (out, tab.map(WarmTableau))
}

/// Re-solves from an optimal tableau of the same model after bound changes.
pub(crate) fn resolve_from_tableau(
    model: &LinearModel,
    warm: WarmTableau,
    lb: &[f64],
    ub: &[f64],
    opts: &LpOptions,
) -> (LpOutcome, Option<WarmTableau>) {
    let mut tab = warm.0;
    if lb.iter().zip(ub).any(|(l, u)| l > u) {
        return (infeasible_outcome(model, 0), None);
    }
    let n = tab.n_struct;
    tab.lb[..n].copy_from_slice(lb);
    tab.ub[..n].copy_from_slice(ub);
    tab.iterations = 0;
    match dual_then_primal(&mut tab, opts) {
        Some(LpStatus::Infeasible) => (infeasible_outcome(model, tab.iterations), None),
        Some(LpStatus::Optimal) => {
            let (o, t) = finish(model, tab, LpStatus::Optimal);
            (o, t.map(WarmTableau))
        }
        _ => solve_keep(model, lb, ub, opts),
    }
}

/// Rebuilds the tableau for `basis`, then re-solves with the new bounds.
pub(crate) fn resolve_from_basis(
    model: &LinearModel,
    basis: &Basis,
    lb: &[f64],
    ub: &[f64],
    opts: &LpOptions,
) -> (LpOutcome, Option<WarmTableau>) {
    if lb.iter().zip(ub).any(|(l, u)| l > u) {
        return (infeasible_outcome(model, 0), None);
    }
    let n = model.num_vars();
    let m = model.num_constraints();
    let ncols = n + m;
    let mut tab = Tableau {
        m,
        ncols,
        n_struct: n,
        t: vec![0.0; m * ncols],
        beta: vec![0.0; m],
        basis: (n..n + m).collect(),
        state: vec![ColState::Lower; ncols],
        xval: vec![0.0; ncols],
        lb: vec![0.0; ncols],
        ub: vec![0.0; ncols],
        cost: vec![0.0; ncols],
        d: vec![0.0; ncols],
        rhs: model.constraints.iter().map(|c| c.rhs).collect(),
        iterations: 0,
    };
    for (i, c) in model.constraints.iter().enumerate() {
        for &(v, coef) in &c.terms {
            tab.t[i * ncols + v.0] += coef;
        }
        tab.t[i * ncols + n + i] = 1.0;
        let (sl, su) = slack_bounds(c.cmp);
        tab.lb[n + i] = sl;
        tab.ub[n + i] = su;
    }
    tab.lb[..n].copy_from_slice(lb);
    tab.ub[..n].copy_from_slice(ub);
    let mut wanted = vec![false; ncols];
    for &b in &basis.basis {
        wanted[b] = true;
    }
    for &c in basis.basis.iter().filter(|&&c| c < n) {
        let mut pick = None;
        let mut best = 1e-9;
        for r in 0..m {
            let cur = tab.basis[r];
            if cur >= n && !wanted[cur] {
                let a = tab.t[r * ncols + c].abs();
                if a > best {
                    best = a;
                    pick = Some(r);
                }
            }
        }
        let Some(r) = pick else {
            return solve_keep(model, lb, ub, opts);
        };
        tab.pivot(r, c);
        tab.basis[r] = c;
    }
    for j in 0..ncols {
        tab.state[j] = if wanted[j] { ColState::Basic } else { basis.state[j] };
        if tab.state[j] == ColState::Basic && !wanted[j] {
            tab.state[j] = ColState::Lower;
        }
    }
    for &b in &tab.basis {
        tab.state[b] = ColState::Basic;
    }
    set_phase_two_costs(&mut tab, model);
    tab.recompute_reduced_costs();
    match dual_then_primal(&mut tab, opts) {
        Some(LpStatus::Infeasible) => (infeasible_outcome(model, tab.iterations), None),
        Some(LpStatus::Optimal) => {
            let (o, t) = finish(model, tab, LpStatus::Optimal);
            (o, t.map(WarmTableau))
        }
        _ => solve_keep(model, lb, ub, opts),
    }
}

fn slack_bounds(cmp: Cmp) -> (f64, f64) {
    match cmp {
        Cmp::Le => (0.0, f64::INFINITY),
        Cmp::Ge => (f64::NEG_INFINITY, 0.0),
        Cmp::Eq => (0.0, 0.0),
    }
}

fn infeasible_outcome(model: &LinearModel, iterations: usize) -> LpOutcome {
    LpOutcome {
        status: LpStatus::Infeasible,
        x: vec![0.0; model.num_vars()],
        objective: f64::NAN,
        duals: vec![0.0; model.num_constraints()],
        reduced_costs: vec![0.0; model.num_vars()],
        iterations,
    }
}

/// Places nonbasic columns on their (new) bounds, restores dual
/// feasibility by bound flips where possible, runs the dual simplex and
/// polishes with primal steps. `None` signals a numerical give-up.
fn dual_then_primal(tab: &mut Tableau, opts: &LpOptions) -> Option<LpStatus> {
    let tol = opts.optimality_tol.max(1e-9);
    for j in 0..tab.ncols {
        if tab.state[j] == ColState::Basic {
            continue;
        }
        let (l, u) = (tab.lb[j], tab.ub[j]);
        let want_upper = match tab.state[j] {
            ColState::Upper => true,
            ColState::Lower => false,
            _ => tab.d[j] < 0.0,
        };
        // Flip towards the dual-feasible side when that bound exists.
        let want_upper = if tab.d[j] < -tol && u.is_finite() {
            true
        } else if tab.d[j] > tol && l.is_finite() {
            false
        } else {
            want_upper
        };
        if want_upper && u.is_finite() {
            tab.state[j] = ColState::Upper;
            tab.xval[j] = u;
        } else if l.is_finite() {
            tab.state[j] = ColState::Lower;
            tab.xval[j] = l;
        } else if u.is_finite() {
            tab.state[j] = ColState::Upper;
            tab.xval[j] = u;
        } else {
            tab.state[j] = ColState::Zero;
            tab.xval[j] = 0.0;
        }
    }
    tab.refresh_beta();
    let feas = opts.feasibility_tol;
    let nc = tab.ncols;
    loop {
        if tab.iterations >= opts.max_iterations {
            return None;
        }
        // Leaving row: largest bound violation.
        let mut leave = None;
        let mut worst = feas;
        for i in 0..tab.m {
            let b = tab.basis[i];
            let v = tab.beta[i];
            let scale = 1.0 + v.abs();
            let viol = if v < tab.lb[b] { tab.lb[b] - v } else if v > tab.ub[b] { v - tab.ub[b] } else { 0.0 };
            if viol > worst * scale {
                worst = viol / scale;
                leave = Some(i);
            }
        }
        let Some(r) = leave else {
            break;
        };
        let b = tab.basis[r];
        let to_lower = tab.beta[r] < tab.lb[b];
        // x_b = const − Σ T_rj x_j; pick the entering column by the dual ratio.
        let mut enter = None;
        let mut best_ratio = f64::INFINITY;
        let mut best_alpha = 0.0;
        for j in 0..nc {
            let st = tab.state[j];
            if st == ColState::Basic || tab.ub[j] - tab.lb[j] <= 0.0 {
                continue;
            }
            let a = tab.t[r * nc + j];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            // Direction of x_j that moves x_b towards its violated bound.
            let inc = if to_lower { a < 0.0 } else { a > 0.0 };
            let ok = match st {
                ColState::Lower => inc,
                ColState::Upper => !inc,
                ColState::Zero => true,
                ColState::Basic => false,
            };
            if !ok {
                continue;
            }
            let ratio = (tab.d[j].abs() / a.abs()).max(0.0);
            if ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && a.abs() > best_alpha) {
                best_ratio = ratio;
                best_alpha = a.abs();
                enter = Some(j);
            }
        }
        let Some(j) = enter else {
            return Some(LpStatus::Infeasible);
        };
        let target = if to_lower { tab.lb[b] } else { tab.ub[b] };
        let delta = (tab.beta[r] - target) / tab.t[r * nc + j];
        for i in 0..tab.m {
            let a = tab.t[i * nc + j];
            if a != 0.0 {
                tab.beta[i] -= a * delta;
            }
        }
        let entering = tab.xval[j] + delta;
        tab.state[b] = if to_lower { ColState::Lower } else { ColState::Upper };
        tab.xval[b] = target;
        tab.pivot(r, j);
        tab.basis[r] = j;
        tab.state[j] = ColState::Basic;
        tab.xval[j] = 0.0;
        tab.beta[r] = entering;
        tab.iterations += 1;
        if tab.iterations % 200 == 0 {
            tab.refresh_beta();
        }
    }
    match tab.run(opts) {
        None => Some(LpStatus::Optimal),
        Some(LpStatus::IterationLimit) => None,
        Some(s) => Some(s),
    }
}
