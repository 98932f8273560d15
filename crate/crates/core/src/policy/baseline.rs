use serde::{Deserialize, Serialize};

use super::frontier::{nearest_frontier, random_free_cell, FrontierParams};
use super::planner::{DistanceField, STRAIGHT, UNREACHED};
use super::reactive::{reactive_navigate, ReactiveInput, ReactiveParams};
use super::{AgentView, Policy};
use crate::geom::Vec2;
use crate::grid::{dilate, BinaryGrid};
use crate::rng::SimRng;

/// When the baseline picks a new waypoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaypointSchedule {
    /// Only on the macro-step schedule, with the near-frontier exclusion.
    #[default]
    Macro,
    /// Also on arrival, once the frontier target is resolved, when the
    /// target turns out to be an obstacle, or when stuck. Skips the
    /// exclusion and prefers frontiers ahead of the current heading.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineParams {
    pub schedule: WaypointSchedule,
    pub macro_period: u64,
    pub reach_radius: f64,
    /// Obstacle inflation for path planning.
    pub clearance: f64,
    pub replan_interval: u64,
    /// Cells walked down the distance field to place the steering point.
    pub lookahead: usize,
    /// A robot that moved less than `stuck_distance` over `stuck_window`
    /// steps asks for a new waypoint.
    pub stuck_window: u64,
    pub stuck_distance: f64,
    pub frontier: FrontierParams,
    pub reactive: ReactiveParams,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            schedule: WaypointSchedule::Macro,
            macro_period: 50,
            reach_radius: 15.0,
            clearance: 4.0,
            replan_interval: 10,
            lookahead: 8,
            stuck_window: 60,
            stuck_distance: 3.0,
            frontier: FrontierParams::default(),
            reactive: ReactiveParams::default(),
        }
    }
}

impl BaselineParams {
    /// Pixel-valued parameters for a map `factor` times the reference size
    /// with collision radius `col_rad`.
    pub fn scaled(factor: f64, col_rad: f64) -> Self {
        let d = Self::default();
        Self {
            reach_radius: d.reach_radius * factor,
            clearance: col_rad + 1.0,
            lookahead: ((d.lookahead as f64 * factor).round() as usize).max(3),
            stuck_distance: (d.stuck_distance * factor).max(0.5),
            frontier: FrontierParams {
                exclusion_radius: d.frontier.exclusion_radius * factor,
                clearance: col_rad + 1.0,
                claim_radius: d.frontier.claim_radius * factor,
                claim_penalty: 0.0,
                segment_radius: d.frontier.segment_radius * factor,
                heading_weight: 30.0 * factor,
            },
            reactive: ReactiveParams {
                obstacle_margin: (d.reactive.obstacle_margin * factor).max(1.0),
                neighbor_margin: (d.reactive.neighbor_margin * factor).max(1.0),
                ..d.reactive
            },
            ..d
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Memory {
    field: Option<DistanceField>,
    planned_for: Option<Vec2>,
    planned_at: u64,
    anchor: Option<(Vec2, u64)>,
    frontier_target: bool,
    stuck: bool,
}

/// Frontier waypoints plus distance-field path following with a reactive
/// controller on top.
#[derive(Debug, Clone, Default)]
pub struct BaselinePolicy {
    params: BaselineParams,
    memory: Vec<Memory>,
}

impl BaselinePolicy {
    pub fn new(params: BaselineParams) -> Self {
        Self {
            params,
            memory: Vec::new(),
        }
    }

    pub fn params(&self) -> &BaselineParams {
        &self.params
    }

    fn memory(&mut self, id: usize) -> &mut Memory {
        if self.memory.len() <= id {
            self.memory.resize_with(id + 1, Memory::default);
        }
        &mut self.memory[id]
    }
}

fn cell_of(p: Vec2, grid: &BinaryGrid) -> (usize, usize) {
    (
        p.x.round().clamp(0.0, (grid.width() - 1) as f64) as usize,
        p.y.round().clamp(0.0, (grid.height() - 1) as f64) as usize,
    )
}

/// A frontier target is resolved once it and its 4-neighbours are explored.
fn frontier_resolved(explored: &BinaryGrid, t: Vec2) -> bool {
    let (x, y) = cell_of(t, explored);
    [(0i64, 0i64), (1, 0), (-1, 0), (0, 1), (0, -1)]
        .iter()
        .all(|&(dx, dy)| explored.get_signed(x as i64 + dx, y as i64 + dy) != Some(0))
}

impl Policy for BaselinePolicy {
    fn name(&self) -> &str {
        "frontier-reactive"
    }

    fn macro_period(&self) -> u64 {
        self.params.macro_period
    }

    fn wants_waypoint(&mut self, view: &AgentView) -> bool {
        if self.params.schedule == WaypointSchedule::Macro {
            return false;
        }
        let a = view.agent;
        let reach = self.params.reach_radius;
        let m = self.memory(a.id);
        if m.stuck || m.planned_for.is_none() && m.field.is_none() && m.anchor.is_none() {
            return true;
        }
        if m.frontier_target && frontier_resolved(&a.fused_explored, a.target) {
            return true;
        }
        let (tx, ty) = cell_of(a.target, &a.fused_obstacles);
        a.position.distance(a.target) <= reach || a.fused_obstacles.get(tx, ty) != 0
    }

    fn select_waypoint(&mut self, view: &AgentView, rng: &mut SimRng) -> Vec2 {
        let a = view.agent;
        let claims = view.neighbor_targets();
        let params = self.params;
        let (heading, frontier) = match params.schedule {
            WaypointSchedule::Macro => (Vec2::ZERO, params.frontier),
            WaypointSchedule::Adaptive => (
                a.velocity,
                FrontierParams {
                    exclusion_radius: 0.0,
                    ..params.frontier
                },
            ),
        };
        let found = nearest_frontier(
            &a.fused_explored,
            &a.fused_obstacles,
            a.position,
            heading,
            &claims,
            &frontier,
        );
        let target =
            found.unwrap_or_else(|| random_free_cell(&a.fused_obstacles, params.frontier.clearance, a.position, rng));
        *self.memory(a.id) = Memory {
            frontier_target: found.is_some(),
            anchor: Some((a.position, view.step)),
            ..Memory::default()
        };
        target
    }

    fn navigate(&mut self, view: &AgentView) -> Vec2 {
        let a = view.agent;
        let params = self.params;
        let step = view.step;
        let m = self.memory(a.id);

        let stale = m.field.is_none()
            || m.planned_for != Some(a.target)
            || step.saturating_sub(m.planned_at) >= params.replan_interval;
        if stale {
            let blocked = dilate(&a.fused_obstacles, params.clearance);
            let passable = blocked.not();
            m.field = Some(DistanceField::compute(&passable, &[cell_of(a.target, &blocked)]));
            m.planned_for = Some(a.target);
            m.planned_at = step;
        }
        let field = m.field.as_ref().expect("field planned above");

        let here = cell_of(a.position, &a.fused_obstacles);
        let (carrot, remaining) = if field.cost(here.0, here.1) != UNREACHED {
            let c = field.descend(here, params.lookahead);
            (
                Vec2::new(c.0 as f64, c.1 as f64),
                field.distance(here.0, here.1).unwrap_or(0.0),
            )
        } else {
            // Inside an inflated wall: head for the best nearby planned cell.
            let mut best: Option<(u32, i64, i64)> = None;
            for dy in -3i64..=3 {
                for dx in -3i64..=3 {
                    let (x, y) = (here.0 as i64 + dx, here.1 as i64 + dy);
                    if let Some(c) = field.cost_signed(x, y) {
                        if c != UNREACHED && best.is_none_or(|b| c < b.0) {
                            best = Some((c, x, y));
                        }
                    }
                }
            }
            match best {
                Some((c, x, y)) => (Vec2::new(x as f64, y as f64), c as f64 / STRAIGHT as f64 + 3.0),
                None => {
                    m.stuck = true;
                    (a.target, a.position.distance(a.target))
                }
            }
        };

        match m.anchor {
            Some((p0, s0)) if step.saturating_sub(s0) >= params.stuck_window => {
                if a.position.distance(p0) < params.stuck_distance {
                    m.stuck = true;
                }
                m.anchor = Some((a.position, step));
            }
            None => m.anchor = Some((a.position, step)),
            _ => {}
        }

        reactive_navigate(
            &ReactiveInput {
                position: a.position,
                velocity: a.velocity,
                target: a.target,
                carrot,
                remaining,
                obstacles: &a.fused_obstacles,
                neighbors: view.neighbors,
                limits: view.limits,
                reach_radius: params.reach_radius,
            },
            &params.reactive,
        )
    }
}
