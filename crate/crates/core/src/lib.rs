//! Informative path planning on graphs.

pub mod criteria;
pub mod envs;
pub mod executor;
pub mod geom;
pub mod graph;
pub mod grid;
pub mod harness;
pub mod planners;
pub mod rrag;
pub mod verify;
pub mod worldsim;

pub use criteria::{Criterion, CriterionContext};
pub use geom::Point2;
pub use graph::{Path, PlanGraph, VertexId};
pub use planners::{BeamParams, PlanResult, PlannerSpec};
