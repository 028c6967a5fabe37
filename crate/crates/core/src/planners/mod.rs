//! Informative path planners.
//!
//! Every planner maps `(graph, start, criterion context, params)` to the
//! best path it finds under the context's budget:
//!
//! - [`dbs`]: depth-wise beam search, the best `B` partial paths per depth;
//! - [`nbs`]: node-wise beam search, the best `B` partial paths per terminal vertex;
//! - [`spt_plan`]: best root path of the shortest-path tree;
//! - [`tsp_plan`]: open tour over high-gain and frontier vertices;
//! - [`oracle_trails`]: exhaustive trail enumeration for small graphs.

mod beam;
mod oracle;
pub mod shortest;
mod spt;
mod tsp;

pub use beam::{dbs, dbs_with, nbs, nbs_with};
pub use oracle::{oracle_trails, oracle_trails_with, ORACLE_MAX_EDGES};
pub use spt::{spt_plan, spt_plan_with};
pub use tsp::{tsp_plan, tsp_plan_with};

use crate::criteria::{CriteriaError, CriterionContext};
use crate::graph::{GraphError, Path, PlanGraph, VertexId};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("start vertex {0} is not in the graph")]
    UnknownStart(VertexId),
    #[error("invalid planner parameters: {0}")]
    InvalidParams(String),
    #[error("oracle refuses graphs with {edges} directed edges (limit {limit})")]
    OracleTooLarge { edges: usize, limit: usize },
    #[error("beam search expanded {expanded} paths, above its bound of {bound}")]
    ExpansionBound { expanded: u64, bound: u64 },
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Gain of a path as a function of its vertex set.
///
/// Planners only ever need the increment from appending one vertex, so a
/// model is described by that increment.
pub trait GainModel {
    fn start_gain(&self, graph: &PlanGraph, start: VertexId) -> f64 {
        graph.gain(start)
    }

    /// Gain added by appending `to` to the walk `path`.
    fn marginal(&self, graph: &PlanGraph, path: &[VertexId], to: VertexId) -> f64;

    /// True only when `marginal` is "vertex gain if unvisited, else 0";
    /// lets planners skip the call.
    fn is_additive(&self) -> bool {
        false
    }
}

/// Sum of vertex gains over the unique vertices visited.
#[derive(Debug, Clone, Copy, Default)]
pub struct AdditiveGain;

impl GainModel for AdditiveGain {
    fn is_additive(&self) -> bool {
        true
    }

    #[inline]
    fn marginal(&self, graph: &PlanGraph, path: &[VertexId], to: VertexId) -> f64 {
        if path.contains(&to) {
            0.0
        } else {
            graph.gain(to)
        }
    }
}

/// Evaluates a whole vertex sequence under `model`, validating edges.
pub fn evaluate_path<M: GainModel + ?Sized>(
    graph: &PlanGraph,
    vertices: &[VertexId],
    model: &M,
) -> Result<Path, GraphError> {
    let (&first, rest) = vertices.split_first().ok_or(GraphError::EmptyPath)?;
    if !graph.contains(first) {
        return Err(GraphError::UnknownVertex(first));
    }
    let mut cost = 0.0;
    let mut gain = model.start_gain(graph, first);
    for (i, &v) in rest.iter().enumerate() {
        let from = vertices[i];
        cost += graph
            .edge_cost(from, v)
            .ok_or(GraphError::MissingEdge { from, to: v })?;
        gain += model.marginal(graph, &vertices[..=i], v);
    }
    Ok(Path::from_parts(vertices.to_vec(), cost, gain))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeamParams {
    pub beam_width: usize,
    pub depth: usize,
}

impl BeamParams {
    pub fn new(beam_width: usize, depth: usize) -> Result<Self, PlanError> {
        let p = Self { beam_width, depth };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if self.beam_width == 0 || self.depth == 0 {
            return Err(PlanError::InvalidParams(format!(
                "beam width and depth must be >= 1, got B={} D={}",
                self.beam_width, self.depth
            )));
        }
        Ok(())
    }
}

/// Fraction of the gain range used to pick candidate vertices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub alpha: f64,
}

pub type TspParams = ThresholdParams;
pub type SptParams = ThresholdParams;

impl ThresholdParams {
    pub fn new(alpha: f64) -> Result<Self, PlanError> {
        let p = Self { alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if (0.0..=1.0).contains(&self.alpha) {
            Ok(())
        } else {
            Err(PlanError::InvalidParams(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )))
        }
    }

    /// `g_max - alpha (g_max - g_min)` over all vertex gains.
    pub fn threshold(&self, graph: &PlanGraph) -> f64 {
        let (lo, hi) = graph
            .vertex_ids()
            .map(|v| graph.gain(v))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), g| {
                (lo.min(g), hi.max(g))
            });
        if lo > hi {
            return 0.0;
        }
        hi - self.alpha * (hi - lo)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub best_path: Path,
    pub paths_expanded: u64,
    pub wall_time: Duration,
}

/// Planner choice as written in experiment configs:
/// `{"planner": "nbs", "params": {"beam_width": 1, "depth": 100}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "planner", content = "params", rename_all = "lowercase")]
pub enum PlannerSpec {
    Nbs(BeamParams),
    Dbs(BeamParams),
    Spt(SptParams),
    Tsp(TspParams),
    Oracle,
}

impl PlannerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PlannerSpec::Nbs(_) => "nbs",
            PlannerSpec::Dbs(_) => "dbs",
            PlannerSpec::Spt(_) => "spt",
            PlannerSpec::Tsp(_) => "tsp",
            PlannerSpec::Oracle => "oracle",
        }
    }

    /// Parameter summary used in CSV rows, e.g. `B=1;D=100`.
    pub fn params_label(&self) -> String {
        match self {
            PlannerSpec::Nbs(p) | PlannerSpec::Dbs(p) => format!("B={};D={}", p.beam_width, p.depth),
            PlannerSpec::Spt(p) | PlannerSpec::Tsp(p) => format!("alpha={}", p.alpha),
            PlannerSpec::Oracle => String::new(),
        }
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        match self {
            PlannerSpec::Nbs(p) | PlannerSpec::Dbs(p) => p.validate(),
            PlannerSpec::Spt(p) | PlannerSpec::Tsp(p) => p.validate(),
            PlannerSpec::Oracle => Ok(()),
        }
    }

    /// Whether returned paths are guaranteed to be trails.
    pub fn returns_trails(&self) -> bool {
        !matches!(self, PlannerSpec::Tsp(_))
    }

    pub fn plan(&self, graph: &PlanGraph, start: VertexId, ctx: &CriterionContext<'_>) -> Result<PlanResult, PlanError> {
        self.plan_with(graph, start, ctx, &AdditiveGain)
    }

    pub fn plan_with<M: GainModel + ?Sized>(
        &self,
        graph: &PlanGraph,
        start: VertexId,
        ctx: &CriterionContext<'_>,
        model: &M,
    ) -> Result<PlanResult, PlanError> {
        let r = match self {
            PlannerSpec::Nbs(p) => nbs_with(graph, start, *p, ctx, model),
            PlannerSpec::Dbs(p) => dbs_with(graph, start, *p, ctx, model),
            PlannerSpec::Spt(p) => spt_plan_with(graph, start, *p, ctx, model),
            PlannerSpec::Tsp(p) => tsp_plan_with(graph, start, *p, ctx, model),
            PlannerSpec::Oracle => oracle_trails_with(graph, start, ctx, model),
        }?;
        if let Some(bound) = self.expansion_bound(graph) {
            if r.paths_expanded > bound {
                return Err(PlanError::ExpansionBound {
                    expanded: r.paths_expanded,
                    bound,
                });
            }
        }
        Ok(r)
    }

    /// Worst-case path expansions of a beam planner on `graph`; `None` for
    /// the others.
    pub fn expansion_bound(&self, graph: &PlanGraph) -> Option<u64> {
        let (per_depth, p) = match self {
            PlannerSpec::Dbs(p) => (graph.vertex_count(), p),
            PlannerSpec::Nbs(p) => (graph.edge_count(), p),
            _ => return None,
        };
        Some(per_depth as u64 * p.depth as u64 * p.beam_width as u64)
    }
}

impl fmt::Display for PlannerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params = self.params_label();
        if params.is_empty() {
            f.pad(self.name())
        } else {
            f.pad(&format!("{}({})", self.name(), params.replace(';', ",")))
        }
    }
}

/// Which beam planner produced a result, for [`expansion_count_audit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamKind {
    DepthWise,
    NodeWise,
}

/// Checks the path-expansion counter against its worst-case bound:
/// `|V| D B` for depth-wise and `|E| D B` for node-wise beam search.
pub fn expansion_count_audit(result: &PlanResult, graph: &PlanGraph, kind: BeamKind, params: BeamParams) -> bool {
    let per_depth = match kind {
        BeamKind::DepthWise => graph.vertex_count(),
        BeamKind::NodeWise => graph.edge_count(),
    } as u64;
    result.paths_expanded <= per_depth * params.depth as u64 * params.beam_width as u64
}

pub(crate) fn check_start(graph: &PlanGraph, start: VertexId, ctx: &CriterionContext<'_>) -> Result<(), PlanError> {
    if !graph.contains(start) {
        return Err(PlanError::UnknownStart(start));
    }
    ctx.check_graph(graph)?;
    Ok(())
}
