//! Geometric-mean equilibration of rows and columns (powers of two).

use crate::model::LinearModel;
use crate::simplex::LpOutcome;

#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    /// Row multipliers.
    pub row: Vec<f64>,
    /// Original `x_j = col_j · x'_j`.
    pub col: Vec<f64>,
}

fn pow2(v: f64) -> f64 {
    if v.is_finite() && v > 0.0 {
        2f64.powi(v.log2().round() as i32)
    } else {
        1.0
    }
}

impl Scaling {
    pub fn equilibrate(model: &LinearModel, passes: usize) -> Self {
        let m = model.num_constraints();
        let n = model.num_vars();
        let mut row = vec![1.0; m];
        let mut col = vec![1.0; n];
        for _ in 0..passes {
            for (i, c) in model.constraints.iter().enumerate() {
                let (lo, hi) = c.terms.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &(v, a)| {
                    let s = (a * col[v.0]).abs();
                    if s > 0.0 {
                        (lo.min(s), hi.max(s))
                    } else {
                        (lo, hi)
                    }
                });
                row[i] = if hi > 0.0 { pow2(1.0 / (lo * hi).sqrt()) } else { 1.0 };
            }
            let mut lo = vec![f64::INFINITY; n];
            let mut hi = vec![0.0f64; n];
            for (i, c) in model.constraints.iter().enumerate() {
                for &(v, a) in &c.terms {
                    let s = (a * row[i]).abs();
                    if s > 0.0 {
                        lo[v.0] = lo[v.0].min(s);
                        hi[v.0] = hi[v.0].max(s);
                    }
                }
            }
            for j in 0..n {
                col[j] = if hi[j] > 0.0 && !model.vars[j].kind.is_integral() {
                    pow2(1.0 / (lo[j] * hi[j]).sqrt())
                } else {
                    1.0
                };
            }
        }
        Self { row, col }
    }

    pub fn apply(&self, model: &LinearModel) -> LinearModel {
        let mut out = model.clone();
        for (j, v) in out.vars.iter_mut().enumerate() {
            v.lb /= self.col[j];
            v.ub /= self.col[j];
        }
        for (i, c) in out.constraints.iter_mut().enumerate() {
            for (v, a) in c.terms.iter_mut() {
                *a *= self.row[i] * self.col[v.0];
            }
            c.rhs *= self.row[i];
        }
        for (v, a) in out.objective.iter_mut() {
            *a *= self.col[v.0];
        }
        out
    }

    pub fn unscale(&self, mut out: LpOutcome) -> LpOutcome {
        for (x, c) in out.x.iter_mut().zip(&self.col) {
            *x *= c;
        }
        for (d, c) in out.reduced_costs.iter_mut().zip(&self.col) {
            *d /= c;
        }
        for (y, r) in out.duals.iter_mut().zip(&self.row) {
            *y *= r;
        }
        out
    }
}
