//! 2D active-perception simulator: a robot with a planar range sensor maps
//! an unknown world, grows an annulus roadmap over what it has seen and
//! replans on it at a fixed rate.

mod episode;
pub mod gain;
pub mod sensor;
pub mod world;

pub use episode::{run_sim_episode, PlanRecord, SimResult, StepRecord};
pub use gain::{FrontierParams, PointGain};
pub use sensor::{sense, trace_ray, SensorParams, View, ViewEvaluator};
pub use world::{l_corridor, CollectiblePoint, Task, Template, World, WorldSpec};

use crate::criteria::Criterion;
use crate::planners::{PlanError, PlannerSpec};
use crate::rrag::{AnnulusParams, Construction, FlsParams, RragError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("robot hit an obstacle at t={t:.1}s, ({x:.2}, {y:.2})")]
    Collision { t: f64, x: f64, y: f64 },
    #[error(transparent)]
    Roadmap(#[from] RragError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotParams {
    pub v_max: f64,
    pub omega_max: f64,
    pub dt: f64,
    pub radius: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            v_max: 0.5,
            omega_max: 1.6,
            dt: 0.2,
            radius: 0.3,
        }
    }
}

fn default_construction() -> Construction {
    Construction::Rrag
}

fn default_fls() -> Option<FlsParams> {
    Some(FlsParams::default())
}

fn default_replan_steps() -> usize {
    5
}

fn default_radius() -> f64 {
    5.0
}

fn default_l_col() -> f64 {
    1.0
}

fn default_idle_limit() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub planner: PlannerSpec,
    pub criterion: Criterion,
    /// Episode length in simulated seconds.
    pub budget: f64,
    #[serde(default = "default_construction")]
    pub construction: Construction,
    /// Task default when absent.
    #[serde(default)]
    pub annulus: Option<AnnulusParams>,
    #[serde(default = "default_fls")]
    pub fls: Option<FlsParams>,
    /// Motion steps between replans.
    #[serde(default = "default_replan_steps")]
    pub replan_steps: usize,
    #[serde(default = "default_radius")]
    pub l_gain: f64,
    #[serde(default = "default_radius")]
    pub l_edge: f64,
    #[serde(default = "default_l_col")]
    pub l_col: f64,
    #[serde(default)]
    pub robot: RobotParams,
    #[serde(default)]
    pub sensor: SensorParams,
    #[serde(default)]
    pub frontier: FrontierParams,
    /// Stop after this many consecutive replans without motion.
    #[serde(default = "default_idle_limit")]
    pub idle_limit: usize,
}

impl SimConfig {
    pub fn new(planner: PlannerSpec, criterion: Criterion, budget: f64) -> Self {
        Self {
            planner,
            criterion,
            budget,
            construction: default_construction(),
            annulus: None,
            fls: default_fls(),
            replan_steps: default_replan_steps(),
            l_gain: default_radius(),
            l_edge: default_radius(),
            l_col: default_l_col(),
            robot: RobotParams::default(),
            sensor: SensorParams::default(),
            frontier: FrontierParams::default(),
            idle_limit: default_idle_limit(),
        }
    }

    /// `l_min = 1, l_max = 2` for point collection, `1.5, 3` otherwise.
    pub fn annulus_for(&self, task: Task) -> AnnulusParams {
        self.annulus.unwrap_or_else(|| match task {
            Task::PointCollection => AnnulusParams::new(1.0, 2.0),
            Task::Exploration | Task::Surface => AnnulusParams::new(1.5, 3.0),
        })
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.planner.validate()?;
        if matches!(self.planner, PlannerSpec::Oracle) {
            return Err(SimError::Config("the exhaustive oracle cannot run on roadmaps".into()));
        }
        if !(self.budget.is_finite() && self.budget > 0.0) {
            return Err(SimError::Config(format!("budget must be positive, got {}", self.budget)));
        }
        let r = &self.robot;
        if !(r.v_max > 0.0 && r.omega_max > 0.0 && r.dt > 0.0 && r.radius > 0.0) {
            return Err(SimError::Config("robot limits must be positive".into()));
        }
        if self.replan_steps == 0 {
            return Err(SimError::Config("replan_steps must be at least 1".into()));
        }
        if !(self.l_gain >= 0.0 && self.l_edge >= 0.0 && self.l_col >= 0.0) {
            return Err(SimError::Config("radii must be non-negative".into()));
        }
        if !(self.sensor.range > 0.0 && self.sensor.fov > 0.0 && self.sensor.rays > 0) {
            return Err(SimError::Config("sensor needs range, field of view and rays".into()));
        }
        if let Some(a) = &self.annulus {
            a.validate()?;
        }
        Ok(())
    }
}
