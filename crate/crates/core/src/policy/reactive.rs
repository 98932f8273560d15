//! Potential-field style acceleration controller.

use serde::{Deserialize, Serialize};

use crate::agent::{clip_acceleration, nearest_obstacle, KinematicLimits};
use crate::comms::NeighborRecord;
use crate::geom::Vec2;
use crate::grid::BinaryGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReactiveParams {
    /// Extra distance beyond `col_rad` over which walls repel.
    pub obstacle_margin: f64,
    /// Extra distance beyond `2·col_rad` over which robots repel.
    pub neighbor_margin: f64,
    /// Peak repulsion, in units of `max_acc`.
    pub repulsion_gain: f64,
}

impl Default for ReactiveParams {
    fn default() -> Self {
        Self {
            obstacle_margin: 2.0,
            neighbor_margin: 3.0,
            repulsion_gain: 2.0,
        }
    }
}

/// Local data the controller looks at.
#[derive(Debug, Clone, Copy)]
pub struct ReactiveInput<'a> {
    pub position: Vec2,
    pub velocity: Vec2,
    pub target: Vec2,
    /// Steering point; equal to `target` when there is no plan.
    pub carrot: Vec2,
    /// Remaining path length to `target`.
    pub remaining: f64,
    pub obstacles: &'a BinaryGrid,
    pub neighbors: &'a [NeighborRecord],
    pub limits: &'a KinematicLimits,
    pub reach_radius: f64,
}

pub fn reactive_navigate(input: &ReactiveInput, params: &ReactiveParams) -> Vec2 {
    let l = input.limits;
    let p = input.position;
    let v = input.velocity;
    if p.distance(input.target) <= input.reach_radius {
        return clip_acceleration(-v * (1.0 / l.dt), l.max_acc);
    }

    let mut heading = input.carrot - p;
    if heading.norm() < 1e-9 {
        heading = input.target - p;
    }
    let braking = (2.0 * l.max_acc * (input.remaining - 0.5 * input.reach_radius).max(0.0)).sqrt();
    let speed = l.max_vel.min(braking);
    let desired = heading.normalized() * speed;
    let mut a = clip_acceleration((desired - v) * (1.0 / l.dt), l.max_acc);

    let peak = params.repulsion_gain * l.max_acc;
    let wall_range = l.col_rad + params.obstacle_margin;
    if let Some((d, c)) = nearest_obstacle(p, input.obstacles, wall_range) {
        let away = (p - c).normalized();
        a += away * (peak * (1.0 - d / wall_range));
        let closing = -v.dot(away);
        if closing > 0.0 {
            a += away * (closing / l.dt).min(l.max_acc);
        }
    }

    let contact = 2.0 * l.col_rad;
    let robot_range = contact + params.neighbor_margin;
    let ahead = p + v * l.dt;
    for n in input.neighbors.iter().filter(|n| !n.is_virtual()) {
        let q = n.position + n.velocity * l.dt;
        let gap = ahead - q;
        let d = gap.norm();
        if d < robot_range {
            let away = if d > 1e-9 { gap * (1.0 / d) } else { Vec2::new(1.0, 0.0) };
            let strength = ((robot_range - d) / (robot_range - contact)).clamp(0.0, 1.0);
            // sidestep to the right of the line of contact so head-on pairs separate
            let side = Vec2::new(-away.y, away.x);
            a += (away + side * 0.5) * (peak * strength);
            let closing = -(v - n.velocity).dot(away);
            if closing > 0.0 {
                a += away * (closing / l.dt).min(l.max_acc);
            }
        }
    }
    clip_acceleration(a, l.max_acc)
}
