use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use ippbeam::envs::{generate_grid, GainMode, GridGraphSpec, DEFAULT_FRONTIER_FRACTION};
use ippbeam::executor::{ReplanStrategy, Setting};
use ippbeam::harness::{read_traces, run_experiment, ExperimentSpec, Report, Scenario, TraceRecord};
use ippbeam::planners::{BeamParams, PlannerSpec, ThresholdParams};
use ippbeam::worldsim::{Task, WorldSpec};
use ippbeam::Criterion;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ippbeam", version, about = "Beam-search informative path planning experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a lattice benchmark graph as JSON.
    GenGraph {
        #[arg(long, default_value_t = 25.0)]
        extent: f64,
        /// scattered | clustered
        #[arg(long, default_value = "scattered")]
        mode: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run a planner grid on lattice graphs.
    Bench(BenchArgs),
    /// Run planners in the simulated worlds.
    Sim(SimArgs),
    /// Re-run stored traces and compare.
    Replay { traces: PathBuf },
    /// Run the property suites.
    Verify,
}

#[derive(Args)]
struct PlannerFlags {
    /// nbs | dbs | spt | tsp | oracle, repeatable
    #[arg(long = "planner")]
    planners: Vec<String>,
    /// Beam widths for nbs and dbs.
    #[arg(long = "beam")]
    beams: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    depth: usize,
    /// Thresholds for spt and tsp.
    #[arg(long = "alpha")]
    alphas: Vec<f64>,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment spec; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    extent: Option<f64>,
    #[arg(long)]
    mode: Option<String>,
    /// Perceive vertices within this radius instead of knowing the graph.
    #[arg(long)]
    online: Option<f64>,
    #[command(flatten)]
    planners: PlannerFlags,
    /// gain | ratio | expected_gain, repeatable
    #[arg(long = "criterion")]
    criteria: Vec<String>,
    /// no_replan | at_goal | every_node, repeatable
    #[arg(long = "strategy")]
    strategies: Vec<String>,
    #[arg(long = "budget")]
    budgets: Vec<f64>,
    /// Number of seeds, counted from --first-seed.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long, default_value_t = 0)]
    first_seed: u64,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// point_collection | exploration | surface
    #[arg(long)]
    task: Option<String>,
    #[command(flatten)]
    planners: PlannerFlags,
    #[arg(long = "criterion")]
    criteria: Vec<String>,
    /// Episode length in simulated seconds.
    #[arg(long = "budget")]
    budgets: Vec<f64>,
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long, default_value_t = 0)]
    first_seed: u64,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.cmd {
        Cmd::GenGraph { extent, mode, seed, out } => {
            let spec = GridGraphSpec::new(extent, parse_mode(&mode)?, seed);
            let json = generate_grid(&spec)?.to_json();
            match out {
                Some(p) => std::fs::write(&p, json).with_context(|| format!("writing {}", p.display()))?,
                None => std::io::stdout().write_all(json.as_bytes())?,
            }
            Ok(true)
        }
        Cmd::Bench(a) => bench(a),
        Cmd::Sim(a) => sim(a),
        Cmd::Replay { traces } => replay(&read_traces(&traces)?),
        Cmd::Verify => {
            let checks = ippbeam::verify::run_all();
            for c in &checks {
                println!("{c}");
            }
            Ok(checks.iter().all(|c| c.passed))
        }
    }
}

fn parse_mode(s: &str) -> anyhow::Result<GainMode> {
    match s {
        "scattered" => Ok(GainMode::Scattered),
        "clustered" => Ok(GainMode::Clustered),
        _ => bail!("unknown gain mode '{s}' (expected scattered | clustered)"),
    }
}

impl PlannerFlags {
    fn is_empty(&self) -> bool {
        self.planners.is_empty()
    }

    /// Cross product of planner names with their parameter lists.
    fn expand(&self, beams: &[usize], alphas: &[f64]) -> anyhow::Result<Vec<PlannerSpec>> {
        let beams = if self.beams.is_empty() { beams } else { &self.beams };
        let alphas = if self.alphas.is_empty() { alphas } else { &self.alphas };
        let mut out = Vec::new();
        for name in &self.planners {
            match name.as_str() {
                "nbs" | "dbs" => {
                    for &b in beams {
                        let p = BeamParams::new(b, self.depth)?;
                        out.push(if name == "nbs" { PlannerSpec::Nbs(p) } else { PlannerSpec::Dbs(p) });
                    }
                }
                "spt" | "tsp" => {
                    for &a in alphas {
                        let p = ThresholdParams::new(a)?;
                        out.push(if name == "spt" { PlannerSpec::Spt(p) } else { PlannerSpec::Tsp(p) });
                    }
                }
                "oracle" => out.push(PlannerSpec::Oracle),
                other => bail!("unknown planner '{other}'"),
            }
        }
        Ok(out)
    }
}

fn default_grid() -> anyhow::Result<Vec<PlannerSpec>> {
    let mut out = Vec::new();
    for b in [1, 100, 10_000] {
        out.push(PlannerSpec::Dbs(BeamParams::new(b, 100)?));
    }
    for b in [1, 10, 100] {
        out.push(PlannerSpec::Nbs(BeamParams::new(b, 100)?));
    }
    for a in [0.5, 0.75, 1.0] {
        out.push(PlannerSpec::Spt(ThresholdParams::new(a)?));
        out.push(PlannerSpec::Tsp(ThresholdParams::new(a)?));
    }
    Ok(out)
}

fn seed_list(count: Option<u64>, first: u64, fallback: &[u64]) -> Vec<u64> {
    match count {
        Some(n) => (first..first + n).collect(),
        None => fallback.to_vec(),
    }
}

fn parse_all<T: std::str::FromStr>(names: &[String]) -> anyhow::Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    names
        .iter()
        .map(|s| s.parse::<T>().map_err(|e| anyhow::anyhow!("{e}")))
        .collect()
}

fn bench(a: BenchArgs) -> anyhow::Result<bool> {
    let mut spec = match &a.config {
        Some(p) => ExperimentSpec::load(p)?,
        None => ExperimentSpec {
            name: "grid".into(),
            scenario: Scenario::Graph {
                grid: GridGraphSpec::new(25.0, GainMode::Scattered, 0),
                setting: Setting::APriori,
            },
            planners: default_grid()?,
            criteria: vec![Criterion::ExpectedGain],
            strategies: vec![ReplanStrategy::EveryNode],
            budgets: vec![50.0],
            seeds: (0..5).collect(),
            skip_invalid: true,
            output_dir: None,
        },
    };
    let Scenario::Graph { grid, setting } = &mut spec.scenario else {
        bail!("bench runs graph scenarios; use sim for worlds");
    };
    if let Some(e) = a.extent {
        grid.extent = e;
    }
    if let Some(m) = &a.mode {
        grid.gain_mode = parse_mode(m)?;
    }
    if let Some(r) = a.online {
        *setting = Setting::Online {
            radius: r,
            frontier_fraction: DEFAULT_FRONTIER_FRACTION,
        };
    }
    if !a.planners.is_empty() {
        spec.planners = a.planners.expand(&[1], &[0.5])?;
    }
    if !a.criteria.is_empty() {
        spec.criteria = parse_all(&a.criteria)?;
    }
    if !a.strategies.is_empty() {
        spec.strategies = parse_all(&a.strategies)?;
    }
    if !a.budgets.is_empty() {
        spec.budgets = a.budgets.clone();
    }
    spec.seeds = seed_list(a.seeds, a.first_seed, &spec.seeds);
    if a.out.is_some() {
        spec.output_dir = a.out.clone();
    }
    let report = run_experiment(&spec)?;
    print_summary(&report);
    Ok(report.all_succeeded())
}

fn sim(a: SimArgs) -> anyhow::Result<bool> {
    let mut spec = match &a.config {
        Some(p) => ExperimentSpec::load(p)?,
        None => ExperimentSpec {
            name: "world".into(),
            scenario: Scenario::World {
                world: WorldSpec::new(Task::PointCollection, 0),
            },
            planners: vec![
                PlannerSpec::Nbs(BeamParams::new(1, 100)?),
                PlannerSpec::Dbs(BeamParams::new(100, 100)?),
                PlannerSpec::Spt(ThresholdParams::new(1.0)?),
                PlannerSpec::Tsp(ThresholdParams::new(0.5)?),
            ],
            criteria: vec![Criterion::ExpectedGain],
            strategies: vec![ReplanStrategy::EveryNode],
            budgets: vec![120.0],
            seeds: (0..10).collect(),
            skip_invalid: false,
            output_dir: None,
        },
    };
    let Scenario::World { world } = &mut spec.scenario else {
        bail!("sim runs world scenarios; use bench for graphs");
    };
    if let Some(t) = &a.task {
        world.task = t.parse().map_err(|e: String| anyhow::anyhow!(e))?;
    }
    if !a.planners.is_empty() {
        spec.planners = a.planners.expand(&[1], &[0.5])?;
    }
    if !a.criteria.is_empty() {
        spec.criteria = parse_all(&a.criteria)?;
    }
    if !a.budgets.is_empty() {
        spec.budgets = a.budgets.clone();
    }
    spec.seeds = seed_list(a.seeds, a.first_seed, &spec.seeds);
    if a.out.is_some() {
        spec.output_dir = a.out.clone();
    }
    let report = run_experiment(&spec)?;
    print_summary(&report);
    if let Some(dir) = &spec.output_dir {
        write_curves(dir, &report)?;
    }
    Ok(report.all_succeeded())
}

/// `curves.csv`: realized gain against sim time, one row per motion step.
fn write_curves(dir: &std::path::Path, report: &Report) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(dir.join("curves.csv"))?;
    w.write_record(["scenario", "planner", "params", "criterion", "seed", "t", "gain"])?;
    for t in &report.traces {
        if let TraceRecord::World {
            scenario,
            seed,
            config,
            result,
            ..
        } = t
        {
            for s in &result.steps {
                w.write_record([
                    scenario.clone(),
                    config.planner.name().to_string(),
                    config.planner.params_label(),
                    config.criterion.name().to_string(),
                    seed.to_string(),
                    format!("{:.1}", s.t),
                    s.gain.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn print_summary(report: &Report) {
    println!(
        "{:<28} {:<7} {:<14} {:<14} {:<11} {:>4} {:>10} {:>9} {:>10}",
        "scenario", "planner", "params", "criterion", "strategy", "n", "gain", "std", "plan s"
    );
    for s in &report.summary {
        println!(
            "{:<28} {:<7} {:<14} {:<14} {:<11} {:>4} {:>10.2} {:>9.2} {:>10.4}",
            s.scenario, s.planner, s.params, s.criterion, s.strategy, s.episodes, s.gain_mean, s.gain_std, s.plan_time_mean
        );
    }
    for (cell, err) in &report.failures {
        eprintln!("FAILED {cell}: {err}");
    }
}

fn replay(traces: &[TraceRecord]) -> anyhow::Result<bool> {
    let mut same = 0;
    for t in traces {
        let ok = t.replay()?;
        println!("{} {}", if ok { "same" } else { "DIFFERS" }, t.label());
        same += ok as usize;
    }
    println!("{same} of {} episodes reproduced", traces.len());
    Ok(same == traces.len())
}
