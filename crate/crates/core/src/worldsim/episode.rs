use super::gain::{point_sum, points_near, view_gain, PointGain};
use super::sensor::{sense, View, ViewEvaluator};
use super::world::{Task, World, WorldSpec};
use super::{SimConfig, SimError};
use crate::criteria::CriterionContext;
use crate::executor::duration_secs;
use crate::geom::{angle_diff, wrap_angle, yaw_of_index, Point2};
use crate::graph::{Path, VertexId};
use crate::grid::{Cell, OccupancyGrid};
use crate::planners::{AdditiveGain, GainModel, PlanError};
use crate::rrag::{nearest_member_yaw, AnnulusParams, BuildStats, ClearanceField, Construction, CostModel, Roadmap, Snapshot};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::time::{Duration, Instant};

/// Robot state after one motion step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    /// Realized gain so far.
    pub gain: f64,
    pub unknown: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub t: f64,
    pub start_cluster: usize,
    pub vertices: usize,
    pub planned_gain: f64,
    pub planned_cost: f64,
    /// Nothing on the graph had task gain; this plan used unknown-cell
    /// counts.
    pub fallback: bool,
    pub clusters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub task: Task,
    pub realized_gain: f64,
    /// Upper bound on `realized_gain` for this world.
    pub available_gain: f64,
    pub time_used: f64,
    pub points_collected: usize,
    pub cells_revealed: usize,
    pub occupied_found: usize,
    pub views_evaluated: u64,
    /// Views whose surface count exceeded their unknown count.
    pub containment_violations: u64,
    /// Steps after which the Unknown count grew.
    pub unknown_increases: u64,
    /// Known estimate cells that disagree with the ground truth.
    pub truth_conflicts: usize,
    /// Smallest true obstacle distance minus robot radius over all steps.
    pub min_clearance: f64,
    pub clusters: usize,
    pub links: usize,
    pub build: BuildStats,
    pub steps: Vec<StepRecord>,
    pub plans: Vec<PlanRecord>,
    #[serde(with = "duration_secs")]
    pub plan_time_total: Duration,
}

impl SimResult {
    /// Everything except wall-clock timing, for replay comparison.
    pub fn without_timing(&self) -> SimResult {
        let mut r = self.clone();
        r.plan_time_total = Duration::ZERO;
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Loc {
    At(usize),
    On(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Action {
    Rotate(f64),
    Translate { to: Point2, from: usize, next: usize },
    Arrive(usize),
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    task: Task,
    world: World,
    annulus: AnnulusParams,
    est: OccupancyGrid,
    truth_field: ClearanceField,
    evaluator: ViewEvaluator,
    roadmap: Roadmap,
    views: Vec<Option<Vec<View>>>,
    history: Vec<Vec<u32>>,
    observed: Vec<bool>,
    collected: Vec<bool>,
    temps: Vec<usize>,
    pos: Point2,
    yaw: f64,
    loc: Loc,
    actions: VecDeque<Action>,
    rng: ChaCha8Rng,
    realized: f64,
    baseline_unknown: usize,
    unknown: usize,
    idle: usize,
    pending: bool,
    result: SimResult,
}

/// Runs one episode: sense, replan every `replan_steps` motion steps, move,
/// until the time budget runs out.
pub fn run_sim_episode(spec: &WorldSpec, cfg: &SimConfig) -> Result<SimResult, SimError> {
    cfg.validate()?;
    let mut sim = Sim::new(spec, cfg)?;
    sim.run()?;
    Ok(sim.finish())
}

impl<'a> Sim<'a> {
    fn new(spec: &WorldSpec, cfg: &'a SimConfig) -> Result<Self, SimError> {
        let world = World::generate(spec);
        let task = spec.task;
        let annulus = cfg.annulus_for(task);
        let r = cfg.robot.radius;
        let truth = &world.truth;
        let mut est = OccupancyGrid::new(truth.origin(), truth.resolution(), truth.width(), truth.height(), Cell::Unknown);
        // the robot knows the floor it stands on
        let footprint = r + 0.2;
        for iy in 0..est.height() {
            for ix in 0..est.width() {
                if truth.get(ix, iy) == Cell::Free && est.distance_to_cell(world.start, ix as i64, iy as i64) <= footprint {
                    est.set(ix, iy, Cell::Free);
                }
            }
        }
        let truth_field = ClearanceField::new(truth, r, 1.0);
        let cost = CostModel {
            v_max: cfg.robot.v_max,
            omega_max: cfg.robot.omega_max,
            ..CostModel::default()
        };
        let mut roadmap = Roadmap::new(cfg.construction, annulus, cost, est.bounds())?;
        roadmap.set_fls(cfg.fls);
        let baseline_unknown = est.count(Cell::Unknown);
        let available = match task {
            Task::PointCollection => world.total_point_gain(),
            Task::Exploration => baseline_unknown as f64,
            Task::Surface => truth.count(Cell::Occupied) as f64,
        };
        let n_points = world.points.len();
        let evaluator = ViewEvaluator::new(&est);
        let mut sim = Sim {
            cfg,
            task,
            pos: world.start,
            yaw: world.start_yaw,
            world,
            annulus,
            est,
            truth_field,
            evaluator,
            roadmap,
            views: Vec::new(),
            history: Vec::new(),
            observed: vec![false; n_points],
            collected: vec![false; n_points],
            temps: Vec::new(),
            loc: Loc::At(0),
            actions: VecDeque::new(),
            rng: ChaCha8Rng::seed_from_u64(spec.seed ^ 0x9e37_79b9_7f4a_7c15),
            realized: 0.0,
            baseline_unknown,
            unknown: baseline_unknown,
            idle: 0,
            pending: false,
            result: SimResult {
                task,
                realized_gain: 0.0,
                available_gain: available,
                time_used: 0.0,
                points_collected: 0,
                cells_revealed: 0,
                occupied_found: 0,
                views_evaluated: 0,
                containment_violations: 0,
                unknown_increases: 0,
                truth_conflicts: 0,
                min_clearance: 0.0,
                clusters: 0,
                links: 0,
                build: BuildStats::default(),
                steps: Vec::new(),
                plans: Vec::new(),
                plan_time_total: Duration::ZERO,
            },
        };
        sim.result.min_clearance = sim.truth_field.clearance(sim.pos);
        sim.perceive();
        let field = sim.field();
        let root = sim.roadmap.insert_root(sim.pos, &field)?;
        sim.loc = Loc::At(root);
        Ok(sim)
    }

    fn field(&self) -> ClearanceField {
        ClearanceField::new(&self.est, self.cfg.robot.radius, self.annulus.l_max)
    }

    fn is_tree(&self) -> bool {
        self.cfg.construction != Construction::Rrag
    }

    fn k(&self) -> u32 {
        self.annulus.yaw_count
    }

    /// Sense, mark points observed, collect what is in reach.
    fn perceive(&mut self) {
        sense(&mut self.est, &self.world.truth, &self.cfg.sensor, self.pos, self.yaw);
        let unknown = self.est.count(Cell::Unknown);
        if unknown > self.unknown {
            self.result.unknown_increases += 1;
        }
        self.unknown = unknown;
        let l2 = self.cfg.l_col * self.cfg.l_col;
        for (i, p) in self.world.points.iter().enumerate() {
            if !self.observed[i] && self.est.at(p.position) != Some(Cell::Unknown) {
                self.observed[i] = true;
            }
            if self.observed[i] && !self.collected[i] && p.position.distance_sq(self.pos) <= l2 {
                self.collected[i] = true;
                if self.task == Task::PointCollection {
                    self.realized += p.gain;
                }
            }
        }
        match self.task {
            Task::PointCollection => {}
            Task::Exploration => self.realized = (self.baseline_unknown - self.unknown) as f64,
            Task::Surface => self.realized = self.est.count(Cell::Occupied) as f64,
        }
    }

    fn run(&mut self) -> Result<(), SimError> {
        let dt = self.cfg.robot.dt;
        let total = (self.cfg.budget / dt + 1e-9).floor() as usize;
        for k in 0..total {
            let t = k as f64 * dt;
            let due = k % self.cfg.replan_steps == 0 || self.pending;
            if due {
                if matches!(self.loc, Loc::On(..)) && self.is_tree() {
                    // trees replan on arrival
                    self.pending = true;
                } else {
                    self.pending = false;
                    self.replan(t, self.cfg.budget - t)?;
                }
            }
            if self.idle >= self.cfg.idle_limit || self.all_collected() {
                break;
            }
            self.advance(dt);
            let t = (k + 1) as f64 * dt;
            self.result.time_used = t;
            let d = self.truth_field.obstacle_distance(self.pos);
            let r = self.cfg.robot.radius;
            self.result.min_clearance = self.result.min_clearance.min(d - r);
            // edges are checked every half cell, so a quarter cell of
            // overlap is within what the checks promise
            if d < r - self.est.resolution() / 4.0 {
                return Err(SimError::Collision { t, x: self.pos.x, y: self.pos.y });
            }
            self.perceive();
            self.result.steps.push(StepRecord {
                t,
                x: self.pos.x,
                y: self.pos.y,
                yaw: self.yaw,
                gain: self.realized,
                unknown: self.unknown,
            });
        }
        Ok(())
    }

    fn all_collected(&self) -> bool {
        self.task == Task::PointCollection && !self.collected.is_empty() && self.collected.iter().all(|&c| c)
    }

    fn evaluate_views(&mut self, c: usize) {
        let k = self.k();
        let p = self.roadmap.position(c);
        if self.views.len() <= c {
            self.views.resize(c + 1, None);
            self.history.resize(c + 1, Vec::new());
        }
        let mut vs = Vec::with_capacity(k as usize);
        for y in 0..k {
            let v = self.evaluator.evaluate(&self.est, &self.cfg.sensor, p, yaw_of_index(y, k));
            self.result.views_evaluated += 1;
            if v.surface > v.unknown {
                self.result.containment_violations += 1;
            }
            vs.push(v);
        }
        let h = &mut self.history[c];
        h.resize(k as usize, 0);
        for (m, v) in h.iter_mut().zip(&vs) {
            *m = (*m).max(v.visible);
        }
        self.views[c] = Some(vs);
    }

    fn refresh_views(&mut self, center: Point2, radius: f64) {
        let r2 = radius * radius;
        let ids: Vec<usize> = self.roadmap.cluster_ids().collect();
        for c in ids {
            let stale = self.views.get(c).is_none_or(|v| v.is_none());
            if stale || self.roadmap.position(c).distance_sq(center) <= r2 {
                self.evaluate_views(c);
            }
        }
    }

    /// Observed, uncollected points near each cluster.
    fn point_lists(&self) -> Vec<Vec<u32>> {
        let live: Vec<(u32, Point2)> = self
            .world
            .points
            .iter()
            .enumerate()
            .filter(|(i, _)| self.observed[*i] && !self.collected[*i])
            .map(|(i, p)| (i as u32, p.position))
            .collect();
        let mut out = vec![Vec::new(); self.views.len().max(self.roadmap.cluster_ids().max().map_or(0, |c| c + 1))];
        if live.is_empty() {
            return out;
        }
        for c in self.roadmap.cluster_ids() {
            out[c] = points_near(self.roadmap.position(c), self.cfg.l_col, &live);
        }
        out
    }

    fn replan(&mut self, t: f64, remaining: f64) -> Result<(), SimError> {
        let field = self.field();
        let start = match self.loc {
            Loc::At(c) => c,
            Loc::On(a, _) if self.roadmap.position(a).distance(self.pos) < 1e-9 => a,
            Loc::On(_, b) if self.roadmap.position(b).distance(self.pos) < 1e-9 => b,
            Loc::On(a, b) => {
                let id = self.roadmap.insert_intermediate(a, b, self.pos, &field)?;
                self.loc = Loc::At(id);
                id
            }
        };
        for c in std::mem::take(&mut self.temps) {
            if c != start {
                self.roadmap.remove_cluster(c)?;
            }
        }
        if self.roadmap.cluster(start).is_some_and(|c| c.temporary) {
            self.temps.push(start);
        }
        if self.is_tree() && self.roadmap.root() != Some(start) {
            if self.cfg.construction == Construction::Rrat {
                let mut child = start;
                while let Some(p) = self.roadmap.parent(child) {
                    if Some(p) == self.roadmap.root() {
                        break;
                    }
                    child = p;
                }
                self.roadmap.prune_root_except(child)?;
            }
            self.roadmap.reroot(start, &field)?;
        }
        self.roadmap.revalidate(self.pos, self.cfg.l_edge, &field);
        self.roadmap.expand(&field, &mut self.rng);
        self.refresh_views(self.pos, self.cfg.l_gain);
        let lists = self.point_lists();
        let gains: Vec<f64> = self.world.points.iter().map(|p| p.gain).collect();
        let task = self.task;
        let views = &self.views;
        let history = &self.history;
        let frontier = self.cfg.frontier;
        let gain_of = |c: usize, y: u32| -> f64 {
            match task {
                Task::PointCollection => point_sum(&lists[c], &gains),
                _ => views[c].as_ref().map_or(0.0, |v| view_gain(task, v[y as usize])),
            }
        };
        let frontier_of = |c: usize, y: u32| -> bool {
            views[c]
                .as_ref()
                .is_some_and(|v| frontier.is_frontier(v[y as usize], history[c][y as usize]))
        };
        if self.is_tree() {
            self.roadmap.select_yaws(gain_of);
        }
        let snap = self.roadmap.snapshot(gain_of, frontier_of)?;
        let start_v = snap
            .vertex(start, nearest_member_yaw(self.yaw, self.k()))
            .expect("start cluster is live");

        let clock = Instant::now();
        let criterion = self.cfg.criterion;
        let best = if task == Task::PointCollection {
            let near: Vec<Vec<u32>> = snap.members.iter().map(|&(c, _)| lists[c].clone()).collect();
            let group: Vec<u32> = snap.members.iter().map(|&(c, _)| c as u32).collect();
            let model = PointGain::new(near, group, gains.clone());
            self.plan_once(&snap, start_v, criterion, &model, remaining)?
        } else {
            self.plan_once(&snap, start_v, criterion, &AdditiveGain, remaining)?
        };
        self.result.plan_time_total += clock.elapsed();

        let (path, fallback) = best;
        self.result.plans.push(PlanRecord {
            t,
            start_cluster: start,
            vertices: path.vertices().len(),
            planned_gain: path.gain(),
            planned_cost: path.cost(),
            fallback,
            clusters: self.roadmap.cluster_count(),
        });
        self.actions = self.schedule(&snap, path.vertices());
        if self.actions.is_empty() {
            self.idle += 1;
        } else {
            self.idle = 0;
        }
        Ok(())
    }

    /// Plans with the task gain. While nothing on the graph has task gain
    /// the same planner runs on unknown-cell counts instead, so there is
    /// always something to explore toward.
    fn plan_once<M: GainModel>(
        &self,
        snap: &Snapshot,
        start: VertexId,
        criterion: crate::criteria::Criterion,
        model: &M,
        remaining: f64,
    ) -> Result<(Path, bool), SimError> {
        let g = &snap.graph;
        if g.vertex_ids().any(|v| g.gain(v) > 0.0) {
            let ctx = CriterionContext::new(criterion, remaining, g.frontier_flags()).map_err(PlanError::from)?;
            return Ok((self.cfg.planner.plan_with(g, start, &ctx, model)?.best_path, false));
        }
        let mut g = g.clone();
        for v in g.vertex_ids().collect::<Vec<_>>() {
            let (c, y) = snap.member(v);
            let unknown = self.views[c].as_ref().map_or(0, |vs| vs[y as usize].unknown);
            g.set_gain(v, unknown as f64).map_err(PlanError::from)?;
        }
        let ctx = CriterionContext::new(criterion, remaining, g.frontier_flags()).map_err(PlanError::from)?;
        Ok((self.cfg.planner.plan_with(&g, start, &ctx, &AdditiveGain)?.best_path, true))
    }

    fn schedule(&self, snap: &Snapshot, path: &[VertexId]) -> VecDeque<Action> {
        let k = self.k();
        let mut out = VecDeque::new();
        for w in path.windows(2) {
            let (cu, _) = snap.member(w[0]);
            let (cv, yv) = snap.member(w[1]);
            if cu != cv {
                let link = self.roadmap.link(cu, cv).expect("snapshot edges come from links");
                let pts = self.roadmap.polyline(cu, link);
                for s in pts.windows(2) {
                    out.push_back(Action::Rotate((s[1] - s[0]).heading()));
                    out.push_back(Action::Translate { to: s[1], from: cu, next: cv });
                }
                out.push_back(Action::Arrive(cv));
            }
            out.push_back(Action::Rotate(yaw_of_index(yv, k)));
        }
        out
    }

    /// Moves along the action queue for `dt` seconds.
    fn advance(&mut self, dt: f64) {
        let (v, w) = (self.cfg.robot.v_max, self.cfg.robot.omega_max);
        let mut left = dt;
        while left > 0.0 {
            let Some(&a) = self.actions.front() else { break };
            match a {
                Action::Rotate(target) => {
                    let need = angle_diff(self.yaw, target) / w;
                    if need <= left {
                        self.yaw = wrap_angle(target);
                        left -= need;
                        self.actions.pop_front();
                    } else {
                        let dir = wrap_angle(target - self.yaw).signum();
                        self.yaw = wrap_angle(self.yaw + dir * w * left);
                        left = 0.0;
                    }
                }
                Action::Translate { to, from, next } => {
                    self.loc = Loc::On(from, next);
                    let d = self.pos.distance(to);
                    let need = d / v;
                    if need <= left {
                        self.pos = to;
                        left -= need;
                        self.actions.pop_front();
                    } else {
                        self.pos = self.pos.lerp(to, v * left / d);
                        left = 0.0;
                    }
                }
                Action::Arrive(c) => {
                    self.loc = Loc::At(c);
                    self.actions.pop_front();
                    if self.pending {
                        break;
                    }
                }
            }
        }
        // arriving takes no time
        while let Some(&Action::Arrive(c)) = self.actions.front() {
            self.loc = Loc::At(c);
            self.actions.pop_front();
        }
    }

    fn finish(mut self) -> SimResult {
        let truth = &self.world.truth;
        let conflicts = self
            .est
            .cells()
            .iter()
            .zip(truth.cells())
            .filter(|(e, t)| **e != Cell::Unknown && e != t)
            .count();
        let r = &mut self.result;
        r.realized_gain = self.realized;
        r.points_collected = self.collected.iter().filter(|&&c| c).count();
        r.cells_revealed = self.baseline_unknown - self.unknown;
        r.occupied_found = self.est.count(Cell::Occupied);
        r.truth_conflicts = conflicts;
        r.clusters = self.roadmap.cluster_count();
        r.links = self.roadmap.link_count();
        r.build = self.roadmap.stats();
        self.result
    }
}
