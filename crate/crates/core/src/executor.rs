//! Episode engine: plan, move, update budget and gains, replan.

use crate::criteria::{CriteriaError, Criterion, CriterionContext, BUDGET_SLACK};
use crate::envs::{EnvError, PerceptionState};
use crate::graph::{PlanGraph, VertexId};
use crate::planners::{PlanError, PlannerSpec};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("the ratio criterion needs replanning; it cannot be used with no_replan")]
    RatioWithoutReplanning,
    #[error("online perception requires replanning")]
    OnlineWithoutReplanning,
    #[error("unknown replanning strategy '{0}' (expected no_replan | at_goal | every_node)")]
    UnknownStrategy(String),
    #[error("planner returned an invalid path: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplanStrategy {
    NoReplan,
    AtGoal,
    EveryNode,
}

impl ReplanStrategy {
    pub const ALL: [ReplanStrategy; 3] = [ReplanStrategy::NoReplan, ReplanStrategy::AtGoal, ReplanStrategy::EveryNode];

    pub fn name(self) -> &'static str {
        match self {
            ReplanStrategy::NoReplan => "no_replan",
            ReplanStrategy::AtGoal => "at_goal",
            ReplanStrategy::EveryNode => "every_node",
        }
    }
}

impl fmt::Display for ReplanStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for ReplanStrategy {
    type Err = ExecError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| ExecError::UnknownStrategy(s.to_string()))
    }
}

/// Whether the whole graph is known up front or revealed around each
/// visited vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Setting {
    APriori,
    Online { radius: f64, frontier_fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub planner: PlannerSpec,
    pub criterion: Criterion,
    pub strategy: ReplanStrategy,
    pub budget: f64,
    pub setting: Setting,
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), ExecError> {
        self.planner.validate()?;
        if !(self.budget > 0.0 && self.budget.is_finite()) {
            return Err(CriteriaError::InvalidBudget(self.budget).into());
        }
        if self.strategy == ReplanStrategy::NoReplan {
            if self.criterion == Criterion::PathRatio {
                return Err(ExecError::RatioWithoutReplanning);
            }
            if matches!(self.setting, Setting::Online { .. }) {
                return Err(ExecError::OnlineWithoutReplanning);
            }
        }
        Ok(())
    }
}

/// One traversed edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    /// Vertex reached by this step.
    pub vertex: VertexId,
    pub edge_cost: f64,
    /// Budget left after the step.
    pub remaining_budget: f64,
    pub collected_gain: f64,
    /// The plan this step starts executing, when it was just (re)computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<Vec<VertexId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub collected_gain: f64,
    pub cost_used: f64,
    pub visited: Vec<VertexId>,
    pub trace: Vec<TraceStep>,
    pub plans: usize,
    #[serde(with = "duration_secs")]
    pub plan_time_total: Duration,
}

pub(crate) mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)?))
    }
}

struct Walker<'g> {
    truth: &'g PlanGraph,
    budget: f64,
    gains: Vec<f64>,
    cost_used: f64,
    collected: f64,
    visited: Vec<VertexId>,
    trace: Vec<TraceStep>,
    perception: Option<PerceptionState<'g>>,
}

impl Walker<'_> {
    fn here(&self) -> VertexId {
        *self.visited.last().unwrap()
    }

    fn remaining(&self) -> f64 {
        self.budget - self.cost_used
    }

    fn arrive(&mut self, v: VertexId) {
        self.collected += self.gains[v.index()];
        self.gains[v.index()] = 0.0;
        if let Some(p) = self.perception.as_mut() {
            p.observe(v);
        }
    }

    fn step(&mut self, to: VertexId, plan: Option<Vec<VertexId>>) {
        let from = self.here();
        let c = self.truth.edge_cost(from, to).expect("plans follow graph edges");
        self.cost_used += c;
        self.visited.push(to);
        self.arrive(to);
        self.trace.push(TraceStep {
            vertex: to,
            edge_cost: c,
            remaining_budget: self.remaining(),
            collected_gain: self.collected,
            plan,
        });
    }

    fn can_move(&self) -> bool {
        let rem = self.remaining();
        self.truth
            .out_edges(self.here())
            .iter()
            .any(|e| e.cost <= rem + BUDGET_SLACK && self.perception.as_ref().map_or(true, |p| p.is_discovered(e.target)))
    }
}

/// Runs one episode from `start` on `graph` under `config`.
pub fn run_episode(graph: &PlanGraph, start: VertexId, config: &EpisodeConfig) -> Result<EpisodeResult, ExecError> {
    config.validate()?;
    if !graph.contains(start) {
        return Err(PlanError::UnknownStart(start).into());
    }
    let perception = match config.setting {
        Setting::APriori => None,
        Setting::Online {
            radius,
            frontier_fraction,
        } => Some(PerceptionState::new(graph, radius, frontier_fraction)?),
    };
    let mut w = Walker {
        truth: graph,
        budget: config.budget,
        gains: graph.vertex_ids().map(|v| graph.gain(v)).collect(),
        cost_used: 0.0,
        collected: 0.0,
        visited: vec![start],
        trace: Vec::new(),
        perception,
    };
    w.arrive(start);

    let mut plan_time = Duration::ZERO;
    let mut plans = 0usize;
    let mut scratch = graph.clone();
    scratch.clear_frontiers();

    while w.can_move() {
        let here = w.here();
        let remaining = w.remaining();
        let (plan, elapsed) = match &w.perception {
            None => {
                for (i, &g) in w.gains.iter().enumerate() {
                    scratch.set_gain(VertexId::from(i), g).expect("gains stay valid");
                }
                let ctx = CriterionContext::new(config.criterion, remaining, scratch.frontier_flags())?;
                let t0 = Instant::now();
                let r = config.planner.plan(&scratch, here, &ctx)?;
                (r.best_path.into_vertices(), t0.elapsed())
            }
            Some(p) => {
                let d = p.discovered_subgraph(&w.gains);
                let local = d.local_id(here).expect("current vertex is discovered");
                let ctx = CriterionContext::for_graph(config.criterion, remaining, &d.graph)?;
                let t0 = Instant::now();
                let r = config.planner.plan(&d.graph, local, &ctx)?;
                let elapsed = t0.elapsed();
                (r.best_path.vertices().iter().map(|&v| d.true_id(v)).collect(), elapsed)
            }
        };
        plan_time += elapsed;
        plans += 1;
        check_plan(graph, &plan, here, remaining, config.planner.returns_trails())?;
        if plan.len() == 1 {
            break;
        }

        let mut label = Some(plan.clone());
        match config.strategy {
            ReplanStrategy::EveryNode => w.step(plan[1], label.take()),
            ReplanStrategy::AtGoal | ReplanStrategy::NoReplan => {
                for &v in &plan[1..] {
                    w.step(v, label.take());
                }
            }
        }
        if config.strategy == ReplanStrategy::NoReplan {
            break;
        }
    }

    Ok(EpisodeResult {
        collected_gain: w.collected,
        cost_used: w.cost_used,
        visited: w.visited,
        trace: w.trace,
        plans,
        plan_time_total: plan_time,
    })
}

fn check_plan(graph: &PlanGraph, plan: &[VertexId], here: VertexId, remaining: f64, trail: bool) -> Result<(), ExecError> {
    if plan.first() != Some(&here) {
        return Err(ExecError::InvalidPlan(format!("plan does not start at {here}")));
    }
    let mut cost = 0.0;
    let mut seen = std::collections::BTreeSet::new();
    for w in plan.windows(2) {
        cost += graph
            .edge_cost(w[0], w[1])
            .ok_or_else(|| ExecError::InvalidPlan(format!("missing edge {} -> {}", w[0], w[1])))?;
        if trail && !seen.insert((w[0], w[1])) {
            return Err(ExecError::InvalidPlan(format!("edge {} -> {} repeated", w[0], w[1])));
        }
    }
    if cost > remaining + BUDGET_SLACK {
        return Err(ExecError::InvalidPlan(format!("cost {cost} exceeds remaining budget {remaining}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{generate_grid, GainMode, GridGraphSpec, DEFAULT_FRONTIER_FRACTION};
    use crate::graph::Path;
    use crate::planners::BeamParams;

    fn nbs() -> PlannerSpec {
        PlannerSpec::Nbs(BeamParams::new(1, 100).unwrap())
    }

    fn config(criterion: Criterion, strategy: ReplanStrategy, setting: Setting) -> EpisodeConfig {
        EpisodeConfig {
            planner: nbs(),
            criterion,
            strategy,
            budget: 20.0,
            setting,
        }
    }

    #[test]
    fn invalid_combinations_rejected() {
        let g = generate_grid(&GridGraphSpec::new(5.0, GainMode::Scattered, 1)).unwrap();
        let c = config(Criterion::PathRatio, ReplanStrategy::NoReplan, Setting::APriori);
        assert!(matches!(run_episode(&g, VertexId(0), &c), Err(ExecError::RatioWithoutReplanning)));
        let online = Setting::Online {
            radius: 2.0,
            frontier_fraction: DEFAULT_FRONTIER_FRACTION,
        };
        let c = config(Criterion::PathGain, ReplanStrategy::NoReplan, online);
        assert!(matches!(run_episode(&g, VertexId(0), &c), Err(ExecError::OnlineWithoutReplanning)));
    }

    #[test]
    fn no_replan_collects_the_first_plan() {
        let g = generate_grid(&GridGraphSpec::new(10.0, GainMode::Scattered, 5)).unwrap();
        let c = config(Criterion::PathGain, ReplanStrategy::NoReplan, Setting::APriori);
        let r = run_episode(&g, VertexId(0), &c).unwrap();
        assert_eq!(r.plans, 1);
        let planned = Path::from_vertices(&g, &r.visited).unwrap();
        assert!((r.collected_gain - planned.gain()).abs() < 1e-9);
        assert!(r.cost_used <= 20.0 + 1e-9);
    }

    #[test]
    fn budget_is_conserved_along_the_trace() {
        let g = generate_grid(&GridGraphSpec::new(10.0, GainMode::Clustered, 2)).unwrap();
        for strategy in [ReplanStrategy::AtGoal, ReplanStrategy::EveryNode] {
            let c = config(Criterion::ExpectedGain, strategy, Setting::APriori);
            let r = run_episode(&g, VertexId(0), &c).unwrap();
            let mut used = 0.0;
            let mut last = 0.0;
            for s in &r.trace {
                used += s.edge_cost;
                assert_eq!(s.remaining_budget, 20.0 - used);
                assert!(s.collected_gain >= last);
                last = s.collected_gain;
            }
            let mut unique = r.visited.clone();
            unique.sort();
            unique.dedup();
            let total: f64 = unique.iter().map(|&v| g.gain(v)).sum();
            assert!((total - r.collected_gain).abs() < 1e-9);
        }
    }

    #[test]
    fn full_reveal_matches_a_priori() {
        let g = generate_grid(&GridGraphSpec::new(8.0, GainMode::Scattered, 3)).unwrap();
        let online = Setting::Online {
            radius: 100.0,
            frontier_fraction: DEFAULT_FRONTIER_FRACTION,
        };
        for criterion in Criterion::ALL {
            let a = run_episode(&g, VertexId(0), &config(criterion, ReplanStrategy::EveryNode, Setting::APriori)).unwrap();
            let b = run_episode(&g, VertexId(0), &config(criterion, ReplanStrategy::EveryNode, online)).unwrap();
            assert_eq!(a.trace, b.trace);
        }
    }

    #[test]
    fn strategy_names() {
        for s in ReplanStrategy::ALL {
            assert_eq!(s.name().parse::<ReplanStrategy>().unwrap(), s);
        }
    }
}
