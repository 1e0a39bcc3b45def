//! Linear and mixed-integer optimisation kernel used by the planners.
//!
//! Models are built with [`LinearModel`], solved with [`solve_lp`] or
//! [`solve_milp`], and exchanged as CPLEX LP text through [`export_model`]
//! and [`import_model`].

pub mod lp_format;
pub mod milp;
pub mod model;
mod scaling;
pub mod simplex;

pub use lp_format::{read_lp as import_model, write_lp as export_model, LpFormatError};
pub use milp::{solve_milp, IncumbentEvent, MilpOptions, MilpResult, MilpStatus};
pub use model::{Cmp, Constraint, LinearModel, ModelError, Sense, Var, VarKind, Variable};
pub use simplex::{LpOptions, LpOutcome, LpStatus};

/// Solves the continuous relaxation of `model` (integrality is ignored).
/// Rows and columns are equilibrated first; an optimum that fails the
/// feasibility check is re-solved from a fresh factorization of its basis.
pub fn solve_lp(model: &LinearModel, opts: &LpOptions) -> LpOutcome {
    let scaling = scaling::Scaling::equilibrate(model, 4);
    let scaled = scaling.apply(model);
    let lb: Vec<f64> = scaled.vars.iter().map(|v| v.lb).collect();
    let ub: Vec<f64> = scaled.vars.iter().map(|v| v.ub).collect();
    let (mut out, warm) = simplex::solve_keep(&scaled, &lb, &ub, opts);
    let tol = |o: &LpOutcome| opts.feasibility_tol * 1e3 * (1.0 + o.x.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    if out.status == LpStatus::Optimal && scaled.max_violation(&out.x) > tol(&out) {
        if let Some(basis) = warm.and_then(|w| w.basis()) {
            let (again, _) = simplex::resolve_from_basis(&scaled, &basis, &lb, &ub, opts);
            out = again;
        }
    }
    scaling.unscale(out)
}
