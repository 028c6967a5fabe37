//! Experiment grids: run every (planner, criterion, strategy, budget, seed)
//! combination, write per-episode rows, per-cell summaries and traces.

use crate::criteria::Criterion;
use crate::envs::{generate_grid, GridGraphSpec};
use crate::executor::{run_episode, EpisodeConfig, EpisodeResult, ReplanStrategy, Setting};
use crate::graph::VertexId;
use crate::planners::PlannerSpec;
use crate::worldsim::{run_sim_episode, SimConfig, SimResult, WorldSpec};
use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};
use std::time::Duration;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    /// Lattice graphs; the grid's own seed is replaced by each run seed.
    Graph { grid: GridGraphSpec, setting: Setting },
    /// Simulated worlds; the world seed is replaced by each run seed.
    World { world: WorldSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub scenario: Scenario,
    pub planners: Vec<PlannerSpec>,
    #[serde(default = "default_criteria")]
    pub criteria: Vec<Criterion>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<ReplanStrategy>,
    pub budgets: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Drop combinations the executor rejects instead of failing.
    #[serde(default)]
    pub skip_invalid: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_criteria() -> Vec<Criterion> {
    vec![Criterion::ExpectedGain]
}

fn default_strategies() -> Vec<ReplanStrategy> {
    vec![ReplanStrategy::EveryNode]
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<FsPath>) -> anyhow::Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Every valid cell, in grid order.
    pub fn cells(&self) -> anyhow::Result<Vec<Cell>> {
        if self.planners.is_empty() || self.criteria.is_empty() || self.strategies.is_empty() || self.budgets.is_empty() {
            bail!("experiment '{}' has an empty grid axis", self.name);
        }
        if self.seeds.is_empty() {
            bail!("experiment '{}' has no seeds", self.name);
        }
        let mut out = Vec::new();
        for &budget in &self.budgets {
            for planner in &self.planners {
                for &criterion in &self.criteria {
                    for &strategy in &self.strategies {
                        let cell = Cell {
                            scenario: format!("{}/C={}", self.name, budget),
                            planner: *planner,
                            criterion,
                            strategy,
                            budget,
                        };
                        match self.validate_cell(&cell) {
                            Ok(()) => out.push(cell),
                            Err(_) if self.skip_invalid => {}
                            Err(e) => return Err(e.context(format!("cell {}", cell.label()))),
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn validate_cell(&self, cell: &Cell) -> anyhow::Result<()> {
        match &self.scenario {
            Scenario::Graph { setting, .. } => cell.episode_config(*setting).validate()?,
            Scenario::World { .. } => cell.sim_config().validate()?,
        }
        Ok(())
    }
}

/// One combination of the grid, run once per seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub scenario: String,
    pub planner: PlannerSpec,
    pub criterion: Criterion,
    pub strategy: ReplanStrategy,
    pub budget: f64,
}

impl Cell {
    pub fn label(&self) -> String {
        format!("{} {} {} {}", self.scenario, self.planner, self.criterion, self.strategy)
    }

    fn episode_config(&self, setting: Setting) -> EpisodeConfig {
        EpisodeConfig {
            planner: self.planner,
            criterion: self.criterion,
            strategy: self.strategy,
            budget: self.budget,
            setting,
        }
    }

    fn sim_config(&self) -> SimConfig {
        SimConfig::new(self.planner, self.criterion, self.budget)
    }
}

/// One row of `episodes.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub scenario: String,
    pub planner: String,
    pub params: String,
    pub criterion: String,
    pub strategy: String,
    pub seed: u64,
    pub final_gain: f64,
    pub cost_used: f64,
    pub plan_time_total: f64,
}

/// One row of `summary.csv`: statistics over the seeds of a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub planner: String,
    pub params: String,
    pub criterion: String,
    pub strategy: String,
    pub episodes: usize,
    pub failed: usize,
    pub gain_mean: f64,
    pub gain_std: f64,
    pub cost_mean: f64,
    pub plan_time_mean: f64,
    pub plan_time_std: f64,
}

/// Everything needed to re-run one episode and compare.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceRecord {
    Graph {
        scenario: String,
        seed: u64,
        grid: GridGraphSpec,
        config: EpisodeConfig,
        result: EpisodeResult,
    },
    World {
        scenario: String,
        seed: u64,
        world: WorldSpec,
        config: SimConfig,
        result: SimResult,
    },
}

impl TraceRecord {
    /// Re-runs the episode; `Ok(true)` when the outcome matches bit for bit
    /// (plan timings aside).
    pub fn replay(&self) -> anyhow::Result<bool> {
        match self {
            TraceRecord::Graph { grid, config, result, .. } => {
                let graph = generate_grid(grid)?;
                let again = run_episode(&graph, VertexId(0), config)?;
                Ok(strip_graph(&again) == strip_graph(result))
            }
            TraceRecord::World { world, config, result, .. } => {
                let again = run_sim_episode(world, config)?;
                Ok(again.without_timing() == result.without_timing())
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            TraceRecord::Graph { scenario, seed, config, .. } => {
                format!("{scenario} {} {} {} seed {seed}", config.planner, config.criterion, config.strategy)
            }
            TraceRecord::World { scenario, seed, config, .. } => {
                format!("{scenario} {} {} seed {seed}", config.planner, config.criterion)
            }
        }
    }
}

fn strip_graph(r: &EpisodeResult) -> String {
    let mut r = r.clone();
    r.plan_time_total = Duration::ZERO;
    serde_json::to_string(&r).expect("serializable")
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub rows: Vec<EpisodeRow>,
    pub summary: Vec<SummaryRow>,
    pub traces: Vec<TraceRecord>,
    /// Cell label and error for every episode that aborted.
    pub failures: Vec<(String, String)>,
}

impl Report {
    pub fn all_succeeded(&self) -> bool {
        self.failures.is_empty()
    }

    /// Mean final gain of the summary row matching `planner` and friends.
    pub fn mean_gain(&self, planner: &PlannerSpec, criterion: Criterion, strategy: ReplanStrategy) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| {
                s.planner == planner.name()
                    && s.params == planner.params_label()
                    && s.criterion == criterion.name()
                    && s.strategy == strategy.name()
            })
            .map(|s| s.gain_mean)
    }

    pub fn write(&self, dir: impl AsRef<FsPath>) -> anyhow::Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut w = csv::Writer::from_path(dir.join("episodes.csv"))?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
        for r in &self.summary {
            w.serialize(r)?;
        }
        w.flush()?;
        write_traces(dir.join("traces.jsonl"), &self.traces)?;
        Ok(())
    }
}

pub fn write_traces(path: impl AsRef<FsPath>, traces: &[TraceRecord]) -> anyhow::Result<()> {
    let mut out = BufWriter::new(fs::File::create(path.as_ref())?);
    for t in traces {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_traces(path: impl AsRef<FsPath>) -> anyhow::Result<Vec<TraceRecord>> {
    let path = path.as_ref();
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}

struct Outcome {
    cell: usize,
    seed: u64,
    result: Result<(EpisodeRow, TraceRecord), String>,
}

/// Runs the whole grid in parallel. Output order is grid order, then seed
/// order, regardless of scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> anyhow::Result<Report> {
    let cells = spec.cells()?;
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| spec.seeds.iter().map(move |&s| (c, s)))
        .collect();
    let outcomes: Vec<Outcome> = jobs
        .into_par_iter()
        .map(|(c, seed)| Outcome {
            cell: c,
            seed,
            result: run_one(spec, &cells[c], seed).map_err(|e| format!("{e:#}")),
        })
        .collect();

    let mut report = Report::default();
    let mut per_cell: Vec<Vec<EpisodeRow>> = vec![Vec::new(); cells.len()];
    let mut failed = vec![0usize; cells.len()];
    for o in outcomes {
        match o.result {
            Ok((row, trace)) => {
                per_cell[o.cell].push(row.clone());
                report.rows.push(row);
                report.traces.push(trace);
            }
            Err(e) => {
                failed[o.cell] += 1;
                report
                    .failures
                    .push((format!("{} seed {}", cells[o.cell].label(), o.seed), e));
            }
        }
    }
    for (i, cell) in cells.iter().enumerate() {
        let rows = &per_cell[i];
        let gains: Vec<f64> = rows.iter().map(|r| r.final_gain).collect();
        let costs: Vec<f64> = rows.iter().map(|r| r.cost_used).collect();
        let times: Vec<f64> = rows.iter().map(|r| r.plan_time_total).collect();
        report.summary.push(SummaryRow {
            scenario: cell.scenario.clone(),
            planner: cell.planner.name().to_string(),
            params: cell.planner.params_label(),
            criterion: cell.criterion.name().to_string(),
            strategy: cell.strategy.name().to_string(),
            episodes: rows.len(),
            failed: failed[i],
            gain_mean: mean(&gains),
            gain_std: std_dev(&gains),
            cost_mean: mean(&costs),
            plan_time_mean: mean(&times),
            plan_time_std: std_dev(&times),
        });
    }
    if let Some(dir) = &spec.output_dir {
        report.write(dir)?;
    }
    Ok(report)
}

fn run_one(spec: &ExperimentSpec, cell: &Cell, seed: u64) -> anyhow::Result<(EpisodeRow, TraceRecord)> {
    let mut row = EpisodeRow {
        scenario: cell.scenario.clone(),
        planner: cell.planner.name().to_string(),
        params: cell.planner.params_label(),
        criterion: cell.criterion.name().to_string(),
        strategy: cell.strategy.name().to_string(),
        seed,
        final_gain: 0.0,
        cost_used: 0.0,
        plan_time_total: 0.0,
    };
    let trace = match &spec.scenario {
        Scenario::Graph { grid, setting } => {
            let mut grid = grid.clone();
            grid.seed = seed;
            let graph = generate_grid(&grid)?;
            let config = cell.episode_config(*setting);
            let result = run_episode(&graph, VertexId(0), &config)?;
            row.final_gain = result.collected_gain;
            row.cost_used = result.cost_used;
            row.plan_time_total = result.plan_time_total.as_secs_f64();
            TraceRecord::Graph {
                scenario: cell.scenario.clone(),
                seed,
                grid,
                config,
                result,
            }
        }
        Scenario::World { world } => {
            let mut world = world.clone();
            world.seed = seed;
            let config = cell.sim_config();
            let result = run_sim_episode(&world, &config)?;
            row.final_gain = result.realized_gain;
            row.cost_used = result.time_used;
            row.plan_time_total = result.plan_time_total.as_secs_f64();
            TraceRecord::World {
                scenario: cell.scenario.clone(),
                seed,
                world,
                config,
                result,
            }
        }
    };
    Ok((row, trace))
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::GainMode;
    use crate::planners::BeamParams;

    fn small_spec() -> ExperimentSpec {
        ExperimentSpec {
            name: "tiny".into(),
            scenario: Scenario::Graph {
                grid: GridGraphSpec::new(6.0, GainMode::Scattered, 0),
                setting: Setting::APriori,
            },
            planners: vec![PlannerSpec::Nbs(BeamParams::new(1, 20).unwrap())],
            criteria: vec![Criterion::PathGain, Criterion::PathRatio],
            strategies: vec![ReplanStrategy::NoReplan, ReplanStrategy::EveryNode],
            budgets: vec![8.0],
            seeds: vec![1, 2],
            skip_invalid: true,
            output_dir: None,
        }
    }

    #[test]
    fn invalid_cells_are_skipped_or_rejected() {
        let mut spec = small_spec();
        assert_eq!(spec.cells().unwrap().len(), 3);
        spec.skip_invalid = false;
        assert!(spec.cells().is_err());
    }

    #[test]
    fn run_summarize_replay() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = small_spec();
        spec.output_dir = Some(dir.path().to_path_buf());
        let report = run_experiment(&spec).unwrap();
        assert!(report.all_succeeded());
        assert_eq!(report.rows.len(), 6);
        assert_eq!(report.summary.len(), 3);
        for s in &report.summary {
            assert_eq!(s.episodes, 2);
        }
        let traces = read_traces(dir.path().join("traces.jsonl")).unwrap();
        assert_eq!(traces.len(), 6);
        for t in &traces {
            assert!(t.replay().unwrap(), "{}", t.label());
        }
        let header = fs::read_to_string(dir.path().join("episodes.csv")).unwrap();
        assert!(header.starts_with(
            "scenario,planner,params,criterion,strategy,seed,final_gain,cost_used,plan_time_total\n"
        ));
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = small_spec();
        let text = serde_json::to_string_pretty(&spec).unwrap();
        assert_eq!(ExperimentSpec::from_json(&text).unwrap(), spec);
    }

    #[test]
    fn statistics() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(std_dev(&[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(std_dev(&[4.0]), 0.0);
    }
}
