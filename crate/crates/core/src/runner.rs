//! Seeded runs, the society by seed experiment matrix and CSV export.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::environment::{ConfigError, SimConfig, World};
use crate::metrics::{effect_size_report, mean, moving_average, EffectSizeReport, StatsError, StepMetrics};
use crate::societies::SocietyKind;

pub const DEFAULT_ITERATIONS: u32 = 10;
pub const DEFAULT_WINDOW: usize = 100;
pub const DEFAULT_WARMUP: u64 = 100;
/// Smoothed cohesion above which a society counts as having converged.
pub const CONVERGENCE_LEVEL: f64 = 0.9;

const MISSING: &str = "NA";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{society} run with seed {seed} failed: {source}")]
    Run {
        society: SocietyKind,
        seed: u64,
        source: Box<RunError>,
    },
    #[error("line {line}: {message}")]
    Setting { line: usize, message: String },
    #[error("invalid plan: {0}")]
    Plan(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> RunError + '_ {
    move |source| RunError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Whether cohesion and health aggregates average the post-warm-up window or
/// take the last step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AggregateMode {
    #[default]
    RunAverage,
    RunFinal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AggregateOptions {
    pub warmup: u64,
    pub window: usize,
    pub mode: AggregateMode,
}

impl Default for AggregateOptions {
    fn default() -> Self {
        AggregateOptions {
            warmup: DEFAULT_WARMUP,
            window: DEFAULT_WINDOW,
            mode: AggregateMode::RunAverage,
        }
    }
}

/// Per-run summary values. `None` marks a value the run never defined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunAggregates {
    pub cohesion: Option<f64>,
    pub deceased_final: Option<usize>,
    pub health: Option<f64>,
    /// Mean wait of the agents served after warm-up.
    pub waiting: Option<f64>,
    /// First step whose smoothed cohesion exceeds [`CONVERGENCE_LEVEL`].
    pub convergence_step: Option<u64>,
}

impl RunAggregates {
    pub fn from_metrics(metrics: &[StepMetrics], opts: &AggregateOptions) -> Self {
        let settled: Vec<&StepMetrics> = metrics.iter().filter(|m| m.step >= opts.warmup).collect();
        let pick = |f: fn(&StepMetrics) -> Option<f64>| match opts.mode {
            AggregateMode::RunAverage => {
                let xs: Vec<f64> = settled.iter().filter_map(|m| f(m)).collect();
                (!xs.is_empty()).then(|| mean(&xs))
            }
            AggregateMode::RunFinal => metrics.iter().rev().find_map(f),
        };
        let served: usize = settled.iter().map(|m| m.served).sum();
        let waited: u64 = settled.iter().map(|m| m.wait_total).sum();
        let cohesion: Vec<Option<f64>> = metrics.iter().map(|m| m.cohesion).collect();
        let convergence_step = moving_average(&cohesion, opts.window.max(1))
            .iter()
            .zip(metrics)
            .find(|(ma, _)| ma.is_some_and(|v| v > CONVERGENCE_LEVEL))
            .map(|(_, m)| m.step);
        RunAggregates {
            cohesion: pick(|m| m.cohesion),
            deceased_final: metrics.last().map(|m| m.deceased_cum),
            health: pick(|m| m.avg_health),
            waiting: (served > 0).then(|| waited as f64 / served as f64),
            convergence_step,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub config: SimConfig,
    pub seed: u64,
    pub metrics: Vec<StepMetrics>,
    pub aggregates: RunAggregates,
    pub event_log: Option<PathBuf>,
}

impl RunResult {
    pub fn society(&self) -> SocietyKind {
        self.config.society
    }

    /// Writes the per-step metric series as CSV.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "step",
            "cohesion",
            "deceased",
            "avg_health",
            "avg_waiting",
            "served",
            "queue_len",
            "jumps",
            "outcomes",
        ])?;
        for m in &self.metrics {
            w.write_record([
                m.step.to_string(),
                fmt_opt(m.cohesion),
                m.deceased_cum.to_string(),
                fmt_opt(m.avg_health),
                fmt_opt(m.avg_waiting),
                m.served.to_string(),
                m.queue_len.to_string(),
                m.jumps.to_string(),
                m.outcomes.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| MISSING.to_string(), |v| v.to_string())
}

/// Runs one configuration to completion with default aggregation.
pub fn run_simulation(config: SimConfig) -> Result<RunResult, RunError> {
    run_simulation_with(config, &AggregateOptions::default(), None)
}

/// Runs one configuration, writing its event log to `event_log` when the
/// config records events.
pub fn run_simulation_with(
    config: SimConfig,
    opts: &AggregateOptions,
    event_log: Option<&Path>,
) -> Result<RunResult, RunError> {
    let mut world = World::new(config)?;
    world.run_to_end();
    let event_log = match event_log {
        Some(path) if world.config.record_events => {
            let file = File::create(path).map_err(io_err(path))?;
            world
                .write_event_log(BufWriter::new(file))
                .map_err(csv_err(path))?;
            Some(path.to_path_buf())
        }
        _ => None,
    };
    let aggregates = RunAggregates::from_metrics(&world.metrics, opts);
    Ok(RunResult {
        seed: world.config.seed,
        metrics: std::mem::take(&mut world.metrics),
        config: world.config.clone(),
        aggregates,
        event_log,
    })
}

/// Seed of iteration `i`; the same for every society.
pub fn iteration_seed(base_seed: u64, i: u32) -> u64 {
    base_seed.wrapping_add(i as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    Cohesion,
    Deceased,
    Health,
    Waiting,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Cohesion, Metric::Deceased, Metric::Health, Metric::Waiting];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Cohesion => "cohesion",
            Metric::Deceased => "deceased",
            Metric::Health => "health",
            Metric::Waiting => "waiting",
        }
    }

    pub fn of_run(self, a: &RunAggregates) -> Option<f64> {
        match self {
            Metric::Cohesion => a.cohesion,
            Metric::Deceased => a.deceased_final.map(|d| d as f64),
            Metric::Health => a.health,
            Metric::Waiting => a.waiting,
        }
    }

    pub fn of_step(self, m: &StepMetrics) -> Option<f64> {
        match self {
            Metric::Cohesion => m.cohesion,
            Metric::Deceased => Some(m.deceased_cum as f64),
            Metric::Health => m.avg_health,
            Metric::Waiting => m.avg_waiting,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub societies: Vec<SocietyKind>,
    pub iterations: u32,
    pub base_seed: u64,
    /// Template for every run; society and seed are overwritten per run.
    pub config: SimConfig,
    pub out_dir: Option<PathBuf>,
    pub aggregate: AggregateOptions,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            societies: SocietyKind::ALL.to_vec(),
            iterations: DEFAULT_ITERATIONS,
            base_seed: 0,
            config: SimConfig::default(),
            out_dir: None,
            aggregate: AggregateOptions::default(),
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), RunError> {
        if self.societies.is_empty() {
            return Err(RunError::Plan("no societies selected".into()));
        }
        if self.iterations == 0 {
            return Err(RunError::Plan("iterations must be positive".into()));
        }
        if self.aggregate.window == 0 {
            return Err(RunError::Plan("window must be positive".into()));
        }
        self.config.validate()?;
        Ok(())
    }

    /// Applies one `key = value` setting. Keys accept `-` or `_`.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("`{value}` is not a valid value for `{key}`"))
        }
        let key = key.trim().replace('-', "_").to_ascii_lowercase();
        let value = value.trim();
        let c = &mut self.config;
        match key.as_str() {
            "agents" => c.n_agents = num(&key, value)?,
            "queue_size" => c.queue_size = num(&key, value)?,
            "steps" => c.n_steps = num(&key, value)?,
            "society" => self.societies = parse_societies(value)?,
            "iterations" => self.iterations = num(&key, value)?,
            "seed" => self.base_seed = num(&key, value)?,
            "window" => self.aggregate.window = num(&key, value)?,
            "warmup" => self.aggregate.warmup = num(&key, value)?,
            "aggregate" => {
                self.aggregate.mode = match value {
                    "average" => AggregateMode::RunAverage,
                    "final" => AggregateMode::RunFinal,
                    _ => return Err(format!("`{value}` is not `average` or `final`")),
                }
            }
            "out" => self.out_dir = Some(PathBuf::from(value)),
            "events" => c.record_events = num(&key, value)?,
            "packets_per_service" => c.food.packets_per_service = num(&key, value)?,
            "restore_per_packet" => c.food.restore_per_packet = num(&key, value)?,
            "max_packets" => c.food.max_packets = num(&key, value)?,
            "food_expiry" => c.food.expiry = num(&key, value)?,
            "intention_threshold" => c.intention_threshold = num(&key, value)?,
            "goal_reward" => c.goal_reward = num(&key, value)?,
            "deceased_payoff" => c.payoffs.deceased = num(&key, value)?,
            "compliance_payoff" => c.payoffs.compliance = num(&key, value)?,
            "violation_payoff" => c.payoffs.violation = num(&key, value)?,
            "emotion_unit" => c.emotion.unit = num(&key, value)?,
            "emotion_duration" => c.emotion.duration = num(&key, value)?,
            "emotion_decay" => c.emotion.decay = num(&key, value)?,
            "mood_scaling" => c.emotion.mood_scaling = num(&key, value)?,
            _ => return Err(format!("unknown setting `{key}`")),
        }
        Ok(())
    }

    /// Applies a `key = value` settings text. Blank lines and `#` comments are
    /// ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<(), RunError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let setting_err = |message| RunError::Setting { line: i + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| setting_err(format!("expected `key = value`, got `{line}`")))?;
            self.apply(key, value).map_err(setting_err)?;
        }
        Ok(())
    }
}

/// Parses `all` or a comma-separated list of society names.
pub fn parse_societies(value: &str) -> Result<Vec<SocietyKind>, String> {
    if value.trim().eq_ignore_ascii_case("all") {
        return Ok(SocietyKind::ALL.to_vec());
    }
    let mut kinds = Vec::new();
    for part in value.split(',') {
        let kind: SocietyKind = part.parse().map_err(|e| format!("{e}"))?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    Ok(kinds)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SocietySummary {
    pub society: SocietyKind,
    pub runs: usize,
    pub cohesion_mean: Option<f64>,
    pub deceased_mean: Option<f64>,
    pub health_mean: Option<f64>,
    pub waiting_mean: Option<f64>,
}

impl SocietySummary {
    pub fn mean_of(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Cohesion => self.cohesion_mean,
            Metric::Deceased => self.deceased_mean,
            Metric::Health => self.health_mean,
            Metric::Waiting => self.waiting_mean,
        }
    }
}

/// Noe (treatment) against one baseline society (control) on one metric.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub baseline: SocietyKind,
    pub metric: Metric,
    pub report: Result<EffectSizeReport, StatsError>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub results: Vec<RunResult>,
    pub summaries: Vec<SocietySummary>,
    pub comparisons: Vec<Comparison>,
    pub files: Vec<PathBuf>,
}

impl ExperimentReport {
    pub fn runs_of(&self, society: SocietyKind) -> impl Iterator<Item = &RunResult> {
        self.results.iter().filter(move |r| r.society() == society)
    }

    /// Defined per-run values of `metric` for `society`, in seed order.
    pub fn values(&self, society: SocietyKind, metric: Metric) -> Vec<f64> {
        self.runs_of(society)
            .filter_map(|r| metric.of_run(&r.aggregates))
            .collect()
    }

    pub fn summary(&self, society: SocietyKind) -> Option<&SocietySummary> {
        self.summaries.iter().find(|s| s.society == society)
    }

    pub fn comparison(&self, baseline: SocietyKind, metric: Metric) -> Option<&Comparison> {
        self.comparisons
            .iter()
            .find(|c| c.baseline == baseline && c.metric == metric)
    }

    pub fn write_summary_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = [
            "society",
            "runs",
            "cohesion_mean",
            "deceased_final_mean",
            "health_mean",
            "waiting_mean",
        ]
        .map(String::from)
        .to_vec();
        for m in Metric::ALL {
            for col in ["t", "p", "delta", "label"] {
                header.push(format!("{}_{col}", m.label()));
            }
        }
        w.write_record(&header)?;
        for s in &self.summaries {
            let mut row = vec![
                s.society.to_string(),
                s.runs.to_string(),
                fmt_opt(s.cohesion_mean),
                fmt_opt(s.deceased_mean),
                fmt_opt(s.health_mean),
                fmt_opt(s.waiting_mean),
            ];
            for m in Metric::ALL {
                match self.comparison(s.society, m).map(|c| &c.report) {
                    None => row.extend(std::iter::repeat_n(String::new(), 4)),
                    Some(Ok(r)) => row.extend([
                        r.t_statistic.to_string(),
                        r.p_value.to_string(),
                        r.delta.to_string(),
                        r.label.to_string(),
                    ]),
                    Some(Err(e)) => row.extend(std::iter::repeat_n(stats_marker(*e).to_string(), 4)),
                }
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn stats_marker(e: StatsError) -> &'static str {
    match e {
        StatsError::InsufficientSample => "insufficient_sample",
        StatsError::DegenerateVariance => "degenerate_variance",
        StatsError::ZeroControlVariance => "zero_control_variance",
    }
}

fn run_file_stem(society: SocietyKind, seed: u64) -> String {
    format!("{society}_seed{seed}")
}

/// Runs every society for every iteration, summarizes and compares them
/// against Noe, and writes CSVs when the plan names an output directory.
pub fn run_batch(plan: &ExperimentPlan) -> Result<ExperimentReport, RunError> {
    plan.validate()?;
    let runs_dir = plan.out_dir.as_ref().map(|d| d.join("runs"));
    if let Some(dir) = &runs_dir {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let jobs: Vec<(SocietyKind, u64)> = plan
        .societies
        .iter()
        .flat_map(|&s| (0..plan.iterations).map(move |i| (s, iteration_seed(plan.base_seed, i))))
        .collect();
    let results: Vec<RunResult> = jobs
        .par_iter()
        .map(|&(society, seed)| {
            let config = SimConfig {
                society,
                seed,
                ..plan.config.clone()
            };
            let log = runs_dir
                .as_ref()
                .map(|d| d.join(format!("{}_events.csv", run_file_stem(society, seed))));
            run_simulation_with(config, &plan.aggregate, log.as_deref()).map_err(|e| RunError::Run {
                society,
                seed,
                source: Box::new(e),
            })
        })
        .collect::<Result<_, _>>()?;

    let mut report = summarize(plan, results);
    if let (Some(out), Some(runs)) = (&plan.out_dir, &runs_dir) {
        for r in &report.results {
            let path = runs.join(format!("{}.csv", run_file_stem(r.society(), r.seed)));
            let file = File::create(&path).map_err(io_err(&path))?;
            r.write_csv(BufWriter::new(file)).map_err(csv_err(&path))?;
            report.files.push(path);
            report.files.extend(r.event_log.clone());
        }
        let path = out.join("summary.csv");
        let file = File::create(&path).map_err(io_err(&path))?;
        report
            .write_summary_csv(BufWriter::new(file))
            .map_err(csv_err(&path))?;
        report.files.push(path);
        let series = export_timeseries(&report.results, plan.aggregate.window, out)?;
        report.files.extend(series);
    }
    Ok(report)
}

fn summarize(plan: &ExperimentPlan, results: Vec<RunResult>) -> ExperimentReport {
    let mut report = ExperimentReport {
        results,
        summaries: Vec::new(),
        comparisons: Vec::new(),
        files: Vec::new(),
    };
    for &society in &plan.societies {
        let avg = |m: Metric| {
            let xs = report.values(society, m);
            (!xs.is_empty()).then(|| mean(&xs))
        };
        report.summaries.push(SocietySummary {
            society,
            runs: report.runs_of(society).count(),
            cohesion_mean: avg(Metric::Cohesion),
            deceased_mean: avg(Metric::Deceased),
            health_mean: avg(Metric::Health),
            waiting_mean: avg(Metric::Waiting),
        });
    }
    if plan.societies.contains(&SocietyKind::Noe) {
        for &baseline in plan.societies.iter().filter(|&&s| s != SocietyKind::Noe) {
            for metric in Metric::ALL {
                let treatment = report.values(SocietyKind::Noe, metric);
                let control = report.values(baseline, metric);
                report.comparisons.push(Comparison {
                    baseline,
                    metric,
                    report: effect_size_report(&treatment, &control),
                });
            }
        }
    }
    report
}

/// Smoothed per-society series of one metric: the per-step mean over a
/// society's runs, then a trailing moving average.
pub fn timeseries(results: &[RunResult], metric: Metric, window: usize) -> Vec<(SocietyKind, Vec<Option<f64>>)> {
    let mut societies: Vec<SocietyKind> = Vec::new();
    for r in results {
        if !societies.contains(&r.society()) {
            societies.push(r.society());
        }
    }
    societies
        .into_iter()
        .map(|s| {
            let runs: Vec<&RunResult> = results.iter().filter(|r| r.society() == s).collect();
            let len = runs.iter().map(|r| r.metrics.len()).max().unwrap_or(0);
            let raw: Vec<Option<f64>> = (0..len)
                .map(|t| {
                    let xs: Vec<f64> = runs
                        .iter()
                        .filter_map(|r| r.metrics.get(t).and_then(|m| metric.of_step(m)))
                        .collect();
                    (!xs.is_empty()).then(|| mean(&xs))
                })
                .collect();
            (s, moving_average(&raw, window))
        })
        .collect()
}

/// Writes `timeseries_<metric>.csv` for every metric into `out_dir`.
pub fn export_timeseries(results: &[RunResult], window: usize, out_dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut files = Vec::new();
    for metric in Metric::ALL {
        let path = out_dir.join(format!("timeseries_{}.csv", metric.label()));
        let columns = timeseries(results, metric, window);
        let write = || -> csv::Result<()> {
            let file = File::create(&path)?;
            let mut w = csv::Writer::from_writer(BufWriter::new(file));
            let mut header = vec!["step".to_string()];
            header.extend(columns.iter().map(|(s, _)| s.to_string()));
            w.write_record(&header)?;
            let len = columns.iter().map(|(_, c)| c.len()).max().unwrap_or(0);
            for t in 0..len {
                let mut row = vec![t.to_string()];
                row.extend(columns.iter().map(|(_, c)| fmt_opt(c.get(t).copied().flatten())));
                w.write_record(&row)?;
            }
            w.flush()?;
            Ok(())
        };
        write().map_err(csv_err(&path))?;
        files.push(path);
    }
    Ok(files)
}
