//! Iterative SNR-margin tuning: run Phases 1 to 4, check QoT with the exact
//! NLI, lower every margin by one step and keep the last feasible result.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::physical::XciFitTable;
use crate::precalc::{precalculate, Candidate, MarginAssignment, PlanContext, PrecalcOptions};
use crate::spacing::{build_fits, optimize_spacing, SpacingConfig, SpacingError, SpacingProblem, SpacingSolution, Strategy};
use crate::throughput::{plan_throughput, DemandMatrix, ThroughputError, ThroughputOptions, ThroughputOutcome};

#[derive(Debug, Error, PartialEq)]
pub enum TuneError {
    #[error("margin step must be positive, got {0}")]
    Step(f64),
    #[error("no candidate lightpath for pairs {0:?} at worst-case margins")]
    NoCandidates(Vec<(usize, usize)>),
    #[error("worst-case iteration failed in phases 2-3: {0}")]
    Throughput(#[from] ThroughputError),
    #[error("worst-case iteration failed in phase 4: {0}")]
    Spacing(#[from] SpacingError),
    #[error("worst-case iteration violates QoT (min Q = {0:.3} dB)")]
    Baseline(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct TuneConfig {
    pub delta_m_db: f64,
    pub max_iters: usize,
    pub strategy: Strategy,
    pub throughput: ThroughputOptions,
    pub precalc: PrecalcOptions,
    pub spacing: SpacingConfig,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            delta_m_db: 0.5,
            max_iters: 64,
            strategy: Strategy::Cso,
            throughput: ThroughputOptions::default(),
            precalc: PrecalcOptions::default(),
            spacing: SpacingConfig::default(),
        }
    }
}

/// Outcome of one pass through Phases 1 to 4.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationResult {
    pub reduction_db: f64,
    pub throughput: ThroughputOutcome,
    pub spacing: SpacingSolution,
    /// Adopted lightpaths on their Phase-4 channels.
    pub placed: Vec<Candidate>,
    /// Every candidate already carries its transceiver's top mode.
    pub saturated: bool,
}

impl IterationResult {
    pub fn th(&self) -> f64 {
        self.throughput.th_max
    }

    pub fn count(&self) -> usize {
        self.placed.len()
    }

    pub fn min_q_db(&self) -> f64 {
        self.spacing.min_q_db()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IterStatus {
    Feasible,
    /// Some Q_p fell below zero.
    Violated,
    /// Phase 4 found no placement.
    Infeasible,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub reduction_db: f64,
    pub max_margin_db: f64,
    /// NaN when the iteration produced no plan (stored as null).
    #[serde(deserialize_with = "crate::scenario::f64_or_nan")]
    pub th: f64,
    pub count: usize,
    #[serde(deserialize_with = "crate::scenario::f64_or_nan")]
    pub min_q_db: f64,
    #[serde(deserialize_with = "crate::scenario::f64_or_nan")]
    pub x_network_db: f64,
    pub status: IterStatus,
    /// Lightpaths per mode label.
    pub modes: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TuneTrace {
    pub records: Vec<TraceRecord>,
}

impl TuneTrace {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iter", "reduction_db", "max_margin_db", "th_gbps", "lightpaths", "min_q_db", "x_network_db", "status", "modes"])?;
        for r in &self.records {
            let modes: Vec<String> = r.modes.iter().map(|(k, v)| format!("{k}:{v}")).collect();
            w.write_record([
                r.iter.to_string(),
                format!("{:.2}", r.reduction_db),
                format!("{:.4}", r.max_margin_db),
                r.th.to_string(),
                r.count.to_string(),
                format!("{:.4}", r.min_q_db),
                format!("{:.4}", r.x_network_db),
                format!("{:?}", r.status).to_lowercase(),
                modes.join(" "),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneResult {
    /// Iteration 0: worst-case margins.
    pub ep: IterationResult,
    /// Last stored feasible iteration; a feasible iteration with lower TH
    /// does not replace it.
    pub jp: IterationResult,
    pub trace: TuneTrace,
}

/// Runs Phases 1 to 4 once with margins `max(𝒳_worst − reduction, 0)`.
pub fn run_iteration(
    ctx: &PlanContext,
    demand: &DemandMatrix,
    reduction_db: f64,
    cfg: &TuneConfig,
    fits: &Arc<XciFitTable>,
    warm: Option<&[Candidate]>,
) -> Result<IterationResult, TuneError> {
    let pairs = demand.pairs();
    let margins = MarginAssignment::WorstCase { reduction_db };
    let cands = precalculate(ctx, &pairs, &margins, &cfg.precalc);
    if !cands.unreachable.is_empty() {
        return Err(TuneError::NoCandidates(cands.unreachable));
    }
    let saturated = cands.candidates.iter().all(|c| {
        ctx.catalog.best_mode(f64::INFINITY, &ctx.transceivers[c.trx]) == Some(c.mode)
    });
    let throughput = plan_throughput(ctx, &cands, demand, &cfg.throughput, warm)?;
    let prob = SpacingProblem::with_fits(ctx, &throughput.state.adopted, fits.clone(), cfg.spacing.neighbors)?;
    let spacing = optimize_spacing(&prob, &cfg.strategy, &cfg.spacing.lp)?;
    let placed = spacing.relocated(&prob);
    Ok(IterationResult {
        reduction_db,
        throughput,
        spacing,
        placed,
        saturated,
    })
}

fn record(ctx: &PlanContext, iter: usize, reduction: f64, status: IterStatus, res: Option<&IterationResult>) -> TraceRecord {
    let mut modes = BTreeMap::new();
    if let Some(r) = res {
        for c in &r.placed {
            let label = format!("{}@{}", ctx.catalog.label(c.mode), ctx.transceivers[c.trx].baud_gbaud);
            *modes.entry(label).or_insert(0) += 1;
        }
    }
    TraceRecord {
        iter,
        reduction_db: reduction,
        max_margin_db: (ctx.worst.max_db() - reduction).max(0.0),
        th: res.map_or(f64::NAN, |r| r.th()),
        count: res.map_or(0, |r| r.count()),
        min_q_db: res.map_or(f64::NAN, |r| r.min_q_db()),
        x_network_db: res.map_or(f64::NAN, |r| r.spacing.x_network_db),
        status,
        modes,
    }
}

/// The margin-tuning loop. Iteration 0 is the worst-case (EP) plan; every
/// further iteration lowers all margins by `delta_m_db` until a lightpath
/// violates QoT, Phase 4 fails, margins reach zero or `max_iters` passes.
pub fn tune(ctx: &PlanContext, demand: &DemandMatrix, cfg: &TuneConfig) -> Result<TuneResult, TuneError> {
    if !(cfg.delta_m_db > 0.0) {
        return Err(TuneError::Step(cfg.delta_m_db));
    }
    let fits = Arc::new(build_fits(ctx, &cfg.spacing)?);
    let ep = run_iteration(ctx, demand, 0.0, cfg, &fits, None)?;
    let mut trace = TuneTrace::default();
    trace.records.push(record(ctx, 0, 0.0, IterStatus::Feasible, Some(&ep)));
    if ep.min_q_db() < 0.0 {
        trace.records[0].status = IterStatus::Violated;
        return Err(TuneError::Baseline(ep.min_q_db()));
    }
    let max_worst = if ep.saturated { 0.0 } else { ctx.worst.max_db() };
    let mut stored = ep.clone();
    let mut reduction = 0.0;
    for iter in 1..=cfg.max_iters {
        if reduction >= max_worst {
            break;
        }
        reduction = iter as f64 * cfg.delta_m_db;
        let warm = stored.throughput.state.adopted.clone();
        match run_iteration(ctx, demand, reduction, cfg, &fits, Some(&warm)) {
            Ok(res) if res.min_q_db() >= 0.0 => {
                trace.records.push(record(ctx, iter, reduction, IterStatus::Feasible, Some(&res)));
                let saturated = res.saturated;
                if res.th() + 1e-9 < stored.th() {
                    log::warn!(
                        "TH fell from {} to {} at reduction {reduction} dB; keeping the stored plan",
                        stored.th(),
                        res.th()
                    );
                } else {
                    stored = res;
                }
                if saturated {
                    break;
                }
            }
            Ok(res) => {
                trace.records.push(record(ctx, iter, reduction, IterStatus::Violated, Some(&res)));
                break;
            }
            Err(TuneError::Spacing(e)) => {
                log::info!("phase 4 at reduction {reduction} dB: {e}");
                trace.records.push(record(ctx, iter, reduction, IterStatus::Infeasible, None));
                break;
            }
            Err(e) => {
                log::warn!("iteration {iter} failed: {e}");
                trace.records.push(record(ctx, iter, reduction, IterStatus::Failed, None));
                break;
            }
        }
    }
    Ok(TuneResult { ep, jp: stored, trace })
}
