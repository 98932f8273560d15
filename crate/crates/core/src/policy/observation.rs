//! Observation vectors for the two decision levels.
//!
//! Layouts (all `f32`, concatenated in this order):
//!
//! * navigation: crop latent, self pose (4), target (2), `M` neighbour poses (4 each)
//! * exploration: exploration-map latent, self pose (4), `M` neighbour poses (4 each)
//!
//! A pose block is `(x / L, y / L, vx / v_max, vy / v_max)`: positions land in
//! `[0, 1]`, velocities in `[-1, 1]`.

use serde::{Deserialize, Serialize};

use crate::agent::{AgentState, KinematicLimits};
use crate::comms::{MapCodec, NeighborRecord};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::grid::{crop_window, dilate};

pub const NAV_OBS_SCHEMA: &str = "nav-obs-v1";
pub const EXP_OBS_SCHEMA: &str = "exp-obs-v1";

/// Dilation applied to the obstacle crop before encoding.
pub const NAV_CROP_DILATION: f64 = 2.0;

/// Half-width of the navigation crop for a given sensing radius.
pub fn nav_crop_radius(sensor_radius: f64) -> usize {
    (0.6 * sensor_radius).round() as usize
}

pub fn nav_crop_side(sensor_radius: f64) -> usize {
    2 * nav_crop_radius(sensor_radius) + 1
}

pub fn pose_block(position: Vec2, velocity: Vec2, side: usize, max_vel: f64) -> [f32; 4] {
    let l = side as f64;
    [
        (position.x / l) as f32,
        (position.y / l) as f32,
        (velocity.x / max_vel) as f32,
        (velocity.y / max_vel) as f32,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavObservation {
    pub latent: Vec<f32>,
    pub pose: [f32; 4],
    pub target: [f32; 2],
    pub neighbors: Vec<[f32; 4]>,
}

impl NavObservation {
    pub fn len(&self) -> usize {
        self.latent.len() + 6 + 4 * self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_vec(&self) -> Vec<f32> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.latent);
        v.extend_from_slice(&self.pose);
        v.extend_from_slice(&self.target);
        for n in &self.neighbors {
            v.extend_from_slice(n);
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpObservation {
    pub latent: Vec<f32>,
    pub pose: [f32; 4],
    pub neighbors: Vec<[f32; 4]>,
}

impl ExpObservation {
    pub fn len(&self) -> usize {
        self.latent.len() + 4 + 4 * self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_vec(&self) -> Vec<f32> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.latent);
        v.extend_from_slice(&self.pose);
        for n in &self.neighbors {
            v.extend_from_slice(n);
        }
        v
    }
}

fn neighbor_blocks(neighbors: &[NeighborRecord], side: usize, max_vel: f64) -> Vec<[f32; 4]> {
    neighbors
        .iter()
        .map(|n| pose_block(n.position, n.velocity, side, max_vel))
        .collect()
}

/// `codec` must be sized for the crop, see [`nav_crop_side`].
pub fn build_nav_observation(
    agent: &AgentState,
    neighbors: &[NeighborRecord],
    codec: &dyn MapCodec,
    limits: &KinematicLimits,
    sensor_radius: f64,
) -> Result<NavObservation> {
    let side = agent.side();
    let radius = nav_crop_radius(sensor_radius);
    let crop_side = 2 * radius + 1;
    if codec.side() != crop_side {
        return Err(Error::DimensionMismatch {
            expected_w: crop_side,
            expected_h: crop_side,
            got_w: codec.side(),
            got_h: codec.side(),
        });
    }
    let crop = crop_window(&agent.fused_obstacles, agent.cell(), radius, 1u8);
    let latent = codec.encode(&dilate(&crop, NAV_CROP_DILATION))?;
    let l = side as f64;
    Ok(NavObservation {
        latent,
        pose: pose_block(agent.position, agent.velocity, side, limits.max_vel),
        target: [(agent.target.x / l) as f32, (agent.target.y / l) as f32],
        neighbors: neighbor_blocks(neighbors, side, limits.max_vel),
    })
}

/// `codec` must be sized for the full map.
pub fn build_exp_observation(
    agent: &AgentState,
    neighbors: &[NeighborRecord],
    codec: &dyn MapCodec,
    limits: &KinematicLimits,
) -> Result<ExpObservation> {
    let side = agent.side();
    Ok(ExpObservation {
        latent: codec.encode(&agent.fused_explored)?,
        pose: pose_block(agent.position, agent.velocity, side, limits.max_vel),
        neighbors: neighbor_blocks(neighbors, side, limits.max_vel),
    })
}
