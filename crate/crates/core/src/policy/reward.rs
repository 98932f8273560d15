//! Per-step reward evaluators for external trainers. Pure functions.

use serde::{Deserialize, Serialize};

use crate::agent::{agent_collision, predict_collision_time, static_collision, KinematicLimits};
use crate::geom::Vec2;
use crate::grid::BinaryGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardParams {
    pub terminal_bonus: f64,
    pub reach_radius: f64,
    pub prox_gain: f64,
    pub align_gain: f64,
    pub collision_penalty: f64,
    pub predicted_collision_scale: f64,
    pub collision_window: u32,
    pub exp_end_scale: f64,
    pub self_exp_base: f64,
    pub self_exp_gain: f64,
    pub near_waypoint_radius: f64,
    pub near_penalty: f64,
    pub far_bonus: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            terminal_bonus: 1500.0,
            reach_radius: 15.0,
            prox_gain: 4.0,
            align_gain: 2.0,
            collision_penalty: -100.0,
            predicted_collision_scale: -10.0,
            collision_window: 15,
            exp_end_scale: 100.0,
            self_exp_base: 200.0,
            self_exp_gain: 300.0,
            near_waypoint_radius: 40.0,
            near_penalty: -3.0,
            far_bonus: 1.5,
        }
    }
}

impl RewardParams {
    /// Rescales the two pixel radii for a map of `factor` times the reference size.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            reach_radius: self.reach_radius * factor,
            near_waypoint_radius: self.near_waypoint_radius * factor,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavSnapshot {
    pub position: Vec2,
    pub velocity: Vec2,
}

/// What the navigation reward can see besides the agent itself.
#[derive(Debug, Clone, Copy)]
pub struct NavScene<'a> {
    pub target: Vec2,
    pub obstacles: &'a BinaryGrid,
    /// `(position, velocity)` of every other robot after the step.
    pub others: &'a [(Vec2, Vec2)],
    pub limits: &'a KinematicLimits,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NavReward {
    pub terminal: f64,
    pub proximity: f64,
    pub alignment: f64,
    pub collision: f64,
    pub predicted_collision: f64,
}

impl NavReward {
    pub fn total(&self) -> f64 {
        self.terminal + self.proximity + self.alignment + self.collision + self.predicted_collision
    }
}

/// `S · (T - t + 1) / T` for a collision predicted `t` steps ahead.
pub fn predicted_collision_penalty(t_coll: u32, params: &RewardParams) -> f64 {
    let window = params.collision_window as f64;
    params.predicted_collision_scale * (window - t_coll as f64 + 1.0) / window
}

pub fn navigation_reward(prev: &NavSnapshot, next: &NavSnapshot, scene: &NavScene, params: &RewardParams) -> NavReward {
    let d_prev = prev.position.distance(scene.target);
    let d_next = next.position.distance(scene.target);

    let terminal = if d_next <= params.reach_radius {
        params.terminal_bonus
    } else {
        0.0
    };
    let proximity = params.prox_gain * (d_prev - d_next);

    let to_target = scene.target - next.position;
    let alignment = if next.velocity.norm() == 0.0 || to_target.norm() == 0.0 {
        0.0
    } else {
        let cos = next.velocity.dot(to_target) / (next.velocity.norm() * to_target.norm());
        params.align_gain * cos.clamp(-1.0, 1.0).powi(3)
    };

    let hits_wall = static_collision(next.position, next.velocity, scene.obstacles, scene.limits);
    let hits_robot = scene
        .others
        .iter()
        .any(|&(q, w)| agent_collision(next.position, next.velocity, q, w, scene.limits));
    let collision = if hits_wall || hits_robot {
        params.collision_penalty
    } else {
        0.0
    };

    let predicted_collision = predict_collision_time(
        next.position,
        next.velocity,
        scene.others,
        scene.obstacles,
        scene.limits,
        params.collision_window,
    )
    .map_or(0.0, |t| predicted_collision_penalty(t, params));

    NavReward {
        terminal,
        proximity,
        alignment,
        collision,
        predicted_collision,
    }
}

/// Exploration fractions at one instant: `global` over the collective
/// fused exploration, `own` over the agent's self-explored map.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExpProgress {
    pub global: f64,
    pub own: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ExpReward {
    pub terminal: f64,
    pub progress: f64,
    pub waypoint: f64,
}

impl ExpReward {
    pub fn total(&self) -> f64 {
        self.terminal + self.progress + self.waypoint
    }
}

/// `waypoint_distance` is the distance from the agent to a waypoint picked
/// during this step, if one was picked.
pub fn exploration_reward(
    prev: ExpProgress,
    next: ExpProgress,
    waypoint_distance: Option<f64>,
    episode_done: bool,
    params: &RewardParams,
) -> ExpReward {
    let terminal = if episode_done {
        params.exp_end_scale * (2.0 * next.global - 1.0)
    } else {
        0.0
    };
    let progress = (params.self_exp_base + params.self_exp_gain * next.global) * (next.own - prev.own);
    let waypoint = match waypoint_distance {
        Some(d) if d <= params.near_waypoint_radius => params.near_penalty,
        Some(_) => params.far_bonus,
        None => 0.0,
    };
    ExpReward {
        terminal,
        progress,
        waypoint,
    }
}
