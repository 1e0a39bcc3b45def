use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use flexplan::physical::{FiberParams, PsdConfig};
use flexplan::precalc::{precalculate, MarginAssignment, PlanContext, PrecalcOptions};
use flexplan::report::write_report;
use flexplan::scenario::{run_scenario, CellKey, DemandSpec, Policy, ResultBundle, Scenario};
use flexplan::spacing::{optimize_spacing, SpacingConfig, SpacingProblem, Strategy};
use flexplan::throughput::{plan_throughput, DemandMatrix, Engine, ProvisioningState};
use flexplan::tuner::tune;
use flexplan::Exec;

#[derive(Parser)]
#[command(name = "flexplan", version, about = "Flexible optical network planning")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Phase 1: list candidate lightpaths that pass their margin.
    Precalc(RunArgs),
    /// Phases 1-3: maximise throughput, then minimise the lightpath count.
    Optimize(RunArgs),
    /// Phases 1-4 at worst-case margins with the chosen spacing strategy.
    Spacing(RunArgs),
    /// Full margin-tuning loop (EP then JP).
    Tune(RunArgs),
    /// Run every cell of a scenario and write the report.
    Sweep(RunArgs),
    /// Rewrite the report files from a saved `bundle.json`.
    Report {
        bundle: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Scenario JSON; the flags below override its fields.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Built-in scenario: `p2p` or `ring`.
    #[arg(long, conflicts_with = "scenario")]
    preset: Option<String>,
    /// Bundled topology name or topology JSON path.
    #[arg(long)]
    topology: Option<String>,
    /// W_cur/W fractions, comma separated.
    #[arg(long, value_delimiter = ',')]
    load: Option<Vec<f64>>,
    /// Baud policies: 16, 32, 64, lb, rb, hb.
    #[arg(long, value_delimiter = ';')]
    policy: Option<Vec<Policy>>,
    /// Spacing strategies, `;` separated: cso, fix:37.5, can-opt:25,37.5,50, can-random:25,37.5,50@7.
    #[arg(long, value_delimiter = ';')]
    strategy: Option<Vec<Strategy>>,
    /// Candidate spacing set ℋ (GHz) applied to CAN strategies.
    #[arg(long = "h", value_delimiter = ',')]
    h_set: Option<Vec<f64>>,
    /// Launch PSD values, μW/GHz.
    #[arg(long, value_delimiter = ',')]
    psd: Option<Vec<f64>>,
    /// Mode table: `default`, `p2p` or a CSV path.
    #[arg(long)]
    modes: Option<String>,
    /// Route all traffic between two nodes, e.g. `A,B`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pair: Option<Vec<String>>,
    #[arg(long)]
    engine: Option<EngineArg>,
    /// Relative MILP gap.
    #[arg(long)]
    gap: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
    /// Margin step per tuner iteration, dB.
    #[arg(long)]
    delta_m: Option<f64>,
    /// Margin reduction below worst case for precalc/optimize/spacing, dB.
    #[arg(long, default_value_t = 0.0)]
    reduction: f64,
    /// Run loops on one thread.
    #[arg(long)]
    sequential: bool,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum EngineArg {
    Ilp,
    Heuristic,
}

impl RunArgs {
    fn scenario(&self) -> Result<Scenario> {
        let mut s = match (&self.scenario, self.preset.as_deref()) {
            (Some(p), _) => Scenario::load(p).with_context(|| format!("loading {}", p.display()))?,
            (None, Some("p2p")) => Scenario::p2p(),
            (None, Some("ring")) => Scenario {
                name: "ring".into(),
                ..Scenario::default()
            },
            (None, Some(other)) => bail!("unknown preset `{other}` (p2p, ring)"),
            (None, None) => Scenario::default(),
        };
        if let Some(t) = &self.topology {
            s.topology = t.clone();
        }
        if let Some(l) = &self.load {
            s.loads = l.clone();
        }
        if let Some(p) = &self.policy {
            s.policies = p.clone();
        }
        if let Some(st) = &self.strategy {
            s.strategies = st.clone();
        }
        if let Some(h) = &self.h_set {
            for st in &mut s.strategies {
                match st {
                    Strategy::CanOpt { set_ghz } | Strategy::CanRandom { set_ghz, .. } => *set_ghz = h.clone(),
                    _ => {}
                }
            }
        }
        if let Some(p) = &self.psd {
            s.psd_uw_per_ghz = p.clone();
        }
        if let Some(m) = &self.modes {
            s.modes = m.clone();
        }
        if let Some(p) = &self.pair {
            s.demand = DemandSpec::Pair(p[0].clone(), p[1].clone());
        }
        if let Some(e) = self.engine {
            s.engine = Some(match e {
                EngineArg::Ilp => Engine::Ilp,
                EngineArg::Heuristic => Engine::Heuristic,
            });
        }
        if let Some(g) = self.gap {
            s.gap = g;
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(k) = self.k {
            s.k = k;
        }
        if let Some(d) = self.delta_m {
            s.delta_m_db = d;
        }
        s.validate()?;
        Ok(s)
    }

    fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::Parallel
        }
    }
}

/// Everything a single-cell command needs.
struct Single {
    scenario: Scenario,
    key: CellKey,
    ctx: PlanContext,
    demand: DemandMatrix,
}

fn single(args: &RunArgs) -> Result<Single> {
    let scenario = args.scenario()?;
    let cells = scenario.cells();
    if cells.len() > 1 {
        log::warn!("{} cells configured; using the first (run `sweep` for all)", cells.len());
    }
    let key = cells.into_iter().next().context("scenario has no cells")?;
    let base = scenario.network()?;
    let net = match key.load {
        Some(l) => base.with_load(l),
        None => base,
    };
    let demand = scenario.demand(&net)?;
    let ctx = PlanContext::new(
        net,
        &demand.pairs(),
        scenario.k,
        key.policy.transceivers()?,
        scenario.catalog()?,
        FiberParams::default(),
        PsdConfig::from_uw_per_ghz(key.psd_uw_per_ghz),
        args.exec(),
    );
    Ok(Single { scenario, key, ctx, demand })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut stdout = io::stdout().lock();
    match cli.cmd {
        Cmd::Precalc(args) => {
            let s = single(&args)?;
            let margins = MarginAssignment::WorstCase { reduction_db: args.reduction };
            let cands = precalculate(&s.ctx, &s.demand.pairs(), &margins, &PrecalcOptions::default());
            cands.write_csv(&s.ctx, create(&args.out_dir, "candidates.csv")?)?;
            writeln!(stdout, "{} candidates, {} unreachable pairs", cands.len(), cands.unreachable.len())?;
        }
        Cmd::Optimize(args) => {
            let s = single(&args)?;
            let cfg = s.scenario.tune_config(&s.ctx.net, &s.key);
            let margins = MarginAssignment::WorstCase { reduction_db: args.reduction };
            let cands = precalculate(&s.ctx, &s.demand.pairs(), &margins, &cfg.precalc);
            let out = plan_throughput(&s.ctx, &cands, &s.demand, &cfg.throughput, None)?;
            out.state.write_csv(&s.ctx, create(&args.out_dir, "provisioning.csv")?)?;
            writeln!(stdout, "TH = {} Gbps with {} lightpaths", out.th_max, out.state.count())?;
        }
        Cmd::Spacing(args) => {
            let s = single(&args)?;
            let cfg = s.scenario.tune_config(&s.ctx.net, &s.key);
            let margins = MarginAssignment::WorstCase { reduction_db: args.reduction };
            let cands = precalculate(&s.ctx, &s.demand.pairs(), &margins, &cfg.precalc);
            let out = plan_throughput(&s.ctx, &cands, &s.demand, &cfg.throughput, None)?;
            let prob = SpacingProblem::new(&s.ctx, &out.state.adopted, &SpacingConfig::default())?;
            let sol = optimize_spacing(&prob, &s.key.strategy, &cfg.spacing.lp)?;
            sol.write_csv(&prob, &s.ctx, create(&args.out_dir, "spacing.csv")?)?;
            writeln!(
                stdout,
                "{}: X_network = {:.4} dB, min Q = {:.4} dB over {} lightpaths",
                s.key.strategy.label(),
                sol.x_network_db,
                sol.min_q_db(),
                prob.len()
            )?;
        }
        Cmd::Tune(args) => {
            let s = single(&args)?;
            let cfg = s.scenario.tune_config(&s.ctx.net, &s.key);
            let res = tune(&s.ctx, &s.demand, &cfg)?;
            res.trace.write_csv(create(&args.out_dir, "trace.csv")?)?;
            let jp = ProvisioningState::new(&s.ctx.net, res.jp.placed.clone(), res.jp.th());
            jp.write_csv(&s.ctx, create(&args.out_dir, "jp.csv")?)?;
            writeln!(
                stdout,
                "EP = {} Gbps ({} lightpaths), JP = {} Gbps ({} lightpaths), min Q = {:.4} dB",
                res.ep.th(),
                res.ep.count(),
                res.jp.th(),
                res.jp.count(),
                res.jp.min_q_db()
            )?;
        }
        Cmd::Sweep(args) => {
            let scenario = args.scenario()?;
            let bundle = run_scenario(&scenario, args.exec())?;
            serde_json::to_writer_pretty(create(&args.out_dir, "bundle.json")?, &bundle)?;
            write_report(&bundle, &args.out_dir)?;
            stdout.write_all(flexplan::report::summary(&bundle).as_bytes())?;
            if bundle.is_partial() {
                log::warn!("some cells failed; see summary.txt");
            }
        }
        Cmd::Report { bundle, out_dir } => {
            let text = fs::read_to_string(&bundle).with_context(|| format!("reading {}", bundle.display()))?;
            let b: ResultBundle = serde_json::from_str(&text)?;
            for p in write_report(&b, &out_dir)? {
                writeln!(stdout, "{}", p.display())?;
            }
        }
    }
    Ok(())
}
