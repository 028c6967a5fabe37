//! Path selection criteria: plain gain, gain-to-cost ratio, and the
//! frontier-aware expected gain.

use crate::graph::{ratio, Path, PlanGraph, VertexId};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CriteriaError {
    #[error("budget must be positive and finite, got {0}")]
    InvalidBudget(f64),
    #[error("frontier flags cover {flags} vertices but the graph has {vertices}")]
    FrontierMismatch { flags: usize, vertices: usize },
    #[error("candidate set is empty")]
    EmptyCandidates,
    #[error("candidate paths must have positive cost")]
    ZeroCostCandidate,
    #[error("unknown criterion '{0}' (expected gain | ratio | expected_gain)")]
    UnknownName(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[serde(rename = "gain")]
    PathGain,
    #[serde(rename = "ratio")]
    PathRatio,
    ExpectedGain,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::PathGain, Criterion::PathRatio, Criterion::ExpectedGain];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::PathGain => "gain",
            Criterion::PathRatio => "ratio",
            Criterion::ExpectedGain => "expected_gain",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Criterion {
    type Err = CriteriaError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gain" => Ok(Criterion::PathGain),
            "ratio" => Ok(Criterion::PathRatio),
            "expected_gain" => Ok(Criterion::ExpectedGain),
            other => Err(CriteriaError::UnknownName(other.to_string())),
        }
    }
}

/// Everything needed to score a path: which criterion, the budget used
/// for extrapolation, and frontier membership for every vertex.
#[derive(Debug, Clone, Copy)]
pub struct CriterionContext<'a> {
    pub criterion: Criterion,
    pub budget: f64,
    frontier: &'a [bool],
}

impl<'a> CriterionContext<'a> {
    pub fn new(criterion: Criterion, budget: f64, frontier: &'a [bool]) -> Result<Self, CriteriaError> {
        if !(budget > 0.0 && budget.is_finite()) {
            return Err(CriteriaError::InvalidBudget(budget));
        }
        Ok(Self {
            criterion,
            budget,
            frontier,
        })
    }

    /// Context whose frontier set is the graph's own frontier flags.
    pub fn for_graph(criterion: Criterion, budget: f64, graph: &'a PlanGraph) -> Result<Self, CriteriaError> {
        Self::new(criterion, budget, graph.frontier_flags())
    }

    /// Checks the frontier accessor is total over `graph`.
    pub fn check_graph(&self, graph: &PlanGraph) -> Result<(), CriteriaError> {
        if self.frontier.len() == graph.vertex_count() {
            Ok(())
        } else {
            Err(CriteriaError::FrontierMismatch {
                flags: self.frontier.len(),
                vertices: graph.vertex_count(),
            })
        }
    }

    /// `cost <= C`, up to float noise from summing edge costs.
    #[inline]
    pub fn affordable(&self, cost: f64) -> bool {
        cost <= self.budget + BUDGET_SLACK
    }

    pub fn is_frontier(&self, v: VertexId) -> bool {
        self.frontier[v.index()]
    }

    pub fn quality(&self, path: &Path) -> f64 {
        self.score(path.last(), path.gain(), path.cost())
    }

    /// Quality of a path summarized by its terminal vertex, gain and cost.
    #[inline]
    pub fn score(&self, last: VertexId, gain: f64, cost: f64) -> f64 {
        match self.criterion {
            Criterion::PathGain => gain,
            Criterion::PathRatio => ratio(gain, cost),
            Criterion::ExpectedGain => {
                if self.frontier[last.index()] {
                    expected_frontier_gain(gain, cost, self.budget)
                } else {
                    gain
                }
            }
        }
    }
}

/// `r(p) * C`, with the zero-gain case pinned to zero so a bare, gainless
/// frontier start never scores `0 * inf`.
fn expected_frontier_gain(gain: f64, cost: f64, budget: f64) -> f64 {
    if gain <= 0.0 {
        0.0
    } else {
        ratio(gain, cost) * budget
    }
}

pub const BUDGET_SLACK: f64 = 1e-9;

/// Relative tolerance used when deciding whether two objective values tie.
pub const TIE_TOLERANCE: f64 = 1e-9;

fn maximizers(values: &[f64]) -> Vec<usize> {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOLERANCE * best.abs().max(1.0);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= best - tol)
        .map(|(i, _)| i)
        .collect()
}

/// Checks that extrapolating every candidate with its own ratio,
/// `r(p) * C`, selects the same maximizer set as extrapolating with the
/// best ratio among the candidates, `g(p) + r* (C - c(p))`.
pub fn argmax_equivalence_check(candidates: &[Path], budget: f64) -> Result<bool, CriteriaError> {
    if candidates.is_empty() {
        return Err(CriteriaError::EmptyCandidates);
    }
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(CriteriaError::InvalidBudget(budget));
    }
    if candidates.iter().any(|p| p.cost() <= 0.0) {
        return Err(CriteriaError::ZeroCostCandidate);
    }
    let best_ratio = candidates
        .iter()
        .map(Path::ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    let own: Vec<f64> = candidates.iter().map(|p| p.ratio() * budget).collect();
    let shared: Vec<f64> = candidates
        .iter()
        .map(|p| p.gain() + best_ratio * (budget - p.cost()))
        .collect();
    Ok(maximizers(&own) == maximizers(&shared))
}
