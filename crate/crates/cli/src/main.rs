//! `noe`: run the line-up experiment matrix and write CSV results.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use noe_core::runner::parse_societies;
use noe_core::{run_batch, ExperimentPlan, ExperimentReport, SocietyKind};

/// Simulate obedient, anarchic, sanctioning and Noe societies queueing for food.
///
/// Settings are layered: built-in defaults, then NOE_SEED / NOE_OUT, then
/// flags, then the `key = value` lines of --config.
#[derive(Debug, Parser)]
#[command(name = "noe", version)]
struct Args {
    /// Number of agents.
    #[arg(long)]
    agents: Option<usize>,
    /// Queue capacity.
    #[arg(long)]
    queue_size: Option<usize>,
    /// Steps per run.
    #[arg(long)]
    steps: Option<u64>,
    /// obedient, anarchy, sanctioning, noe, all, or a comma-separated list.
    #[arg(long, value_parser = societies)]
    society: Option<Societies>,
    /// Runs per society; run i uses seed + i.
    #[arg(long)]
    iterations: Option<u32>,
    /// Base seed.
    #[arg(long, env = "NOE_SEED")]
    seed: Option<u64>,
    /// Moving-average window for smoothed series and convergence.
    #[arg(long)]
    window: Option<usize>,
    /// Output directory for per-run, summary and time-series CSVs.
    #[arg(long, env = "NOE_OUT")]
    out: Option<PathBuf>,
    /// Settings file with `key = value` lines; overrides flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write a per-agent event log for every run.
    #[arg(long)]
    events: bool,
}

#[derive(Clone, Debug)]
struct Societies(Vec<SocietyKind>);

fn societies(value: &str) -> Result<Societies, String> {
    parse_societies(value).map(Societies)
}

fn plan_from(args: &Args) -> Result<ExperimentPlan> {
    let mut plan = ExperimentPlan::default();
    let c = &mut plan.config;
    if let Some(v) = args.agents {
        c.n_agents = v;
    }
    if let Some(v) = args.queue_size {
        c.queue_size = v;
    }
    if let Some(v) = args.steps {
        c.n_steps = v;
    }
    c.record_events |= args.events;
    if let Some(v) = &args.society {
        plan.societies = v.0.clone();
    }
    if let Some(v) = args.iterations {
        plan.iterations = v;
    }
    if let Some(v) = args.seed {
        plan.base_seed = v;
    }
    if let Some(v) = args.window {
        plan.aggregate.window = v;
    }
    plan.out_dir = args.out.clone();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        plan.apply_text(&text)
            .with_context(|| format!("bad config {}", path.display()))?;
    }
    plan.validate()?;
    Ok(plan)
}

fn fmt(x: Option<f64>, prec: usize) -> String {
    x.map_or_else(|| "NA".into(), |v| format!("{v:.prec$}"))
}

fn print_report(report: &ExperimentReport) {
    println!(
        "{:<12} {:>5} {:>9} {:>9} {:>8} {:>8}",
        "society", "runs", "cohesion", "deceased", "health", "waiting"
    );
    for s in &report.summaries {
        println!(
            "{:<12} {:>5} {:>9} {:>9} {:>8} {:>8}",
            s.society.to_string(),
            s.runs,
            fmt(s.cohesion_mean, 3),
            fmt(s.deceased_mean, 1),
            fmt(s.health_mean, 2),
            fmt(s.waiting_mean, 2)
        );
    }
    if report.comparisons.is_empty() {
        return;
    }
    println!();
    println!("noe against each baseline (Glass's delta, Welch t-test):");
    for c in &report.comparisons {
        let what = format!("{} {}", c.baseline, c.metric.label());
        match &c.report {
            Ok(r) => println!(
                "  {what:<22} delta {:>9.2} {:<10} t {:>8.2} p {:.2e}",
                r.delta, r.label.to_string(), r.t_statistic, r.p_value
            ),
            Err(e) => println!("  {what:<22} {e}"),
        }
    }
}

fn run(args: Args) -> Result<()> {
    let plan = plan_from(&args)?;
    let report = run_batch(&plan)?;
    print_report(&report);
    if let Some(out) = &plan.out_dir {
        println!();
        println!("wrote {} files to {}", report.files.len(), out.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("noe: {e:#}");
            ExitCode::FAILURE
        }
    }
}
