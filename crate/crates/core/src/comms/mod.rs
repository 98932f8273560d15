//! Neighbour selection, message construction and channel noise.

mod codec;
mod wire;

pub use codec::{CodecKind, DownsampleCodec, IdentityCodec, MapCodec};
pub use wire::{read_message, read_record, write_message, write_record, MessageRecord};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::agent::AgentState;
use crate::error::Result;
use crate::geom::Vec2;

/// One of the exactly-`M` communicating neighbours. `id == None` marks a
/// virtual neighbour used to pad the list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborRecord {
    pub id: Option<usize>,
    pub position: Vec2,
    pub velocity: Vec2,
    pub target: Vec2,
}

impl NeighborRecord {
    pub fn is_virtual(&self) -> bool {
        self.id.is_none()
    }

    pub fn virtual_at(position: Vec2) -> Self {
        Self {
            id: None,
            position,
            velocity: Vec2::ZERO,
            target: position,
        }
    }

    fn from_agent(a: &AgentState) -> Self {
        Self {
            id: Some(a.id),
            position: a.position,
            velocity: a.velocity,
            target: a.target,
        }
    }
}

/// Corner of the quadrant diagonally opposite the agent's. Positions on a
/// midline count as the lower half.
pub fn virtual_position(position: Vec2, side: usize) -> Vec2 {
    let half = side as f64 / 2.0;
    let far = side.saturating_sub(1) as f64;
    let x = if position.x <= half { far } else { 0.0 };
    let y = if position.y <= half { far } else { 0.0 };
    Vec2::new(x, y)
}

/// Picks exactly `max_neighbors` records: the nearest real agents within
/// `radius` (ties by lower id), padded with virtual ones.
pub fn select_neighbors(
    agent: &AgentState,
    all: &[AgentState],
    max_neighbors: usize,
    radius: f64,
) -> Vec<NeighborRecord> {
    let mut near: Vec<(f64, &AgentState)> = all
        .iter()
        .filter(|o| o.id != agent.id)
        .map(|o| (o.position.distance(agent.position), o))
        .filter(|(d, _)| *d <= radius)
        .collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id)));

    let pad = NeighborRecord::virtual_at(virtual_position(agent.position, agent.side()));
    near.iter()
        .take(max_neighbors)
        .map(|(_, o)| NeighborRecord::from_agent(o))
        .chain(std::iter::repeat(pad))
        .take(max_neighbors)
        .collect()
}

/// What a neighbour hands over during a communication event.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub sender: usize,
    pub position: Vec2,
    pub velocity: Vec2,
    pub target: Vec2,
    pub enc_obstacles: Vec<f32>,
    pub enc_explored: Vec<f32>,
}

/// Encodes the sender's self maps. Fused maps are never transmitted.
pub fn make_message(agent: &AgentState, codec: &dyn MapCodec) -> Result<Message> {
    Ok(Message {
        sender: agent.id,
        position: agent.position,
        velocity: agent.velocity,
        target: agent.target,
        enc_obstacles: codec.encode(&agent.self_obstacles)?,
        enc_explored: codec.encode(&agent.self_explored)?,
    })
}

/// Adds independent `N(0, sigma²)` draws element-wise.
pub fn inject_noise<R: Rng + ?Sized>(latent: &[f32], sigma: f64, rng: &mut R) -> Vec<f32> {
    if sigma <= 0.0 {
        return latent.to_vec();
    }
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    latent.iter().map(|&v| (v as f64 + normal.sample(rng)) as f32).collect()
}

impl Message {
    /// Copy of the message with channel noise applied to both latents.
    pub fn with_noise<R: Rng + ?Sized>(&self, sigma: f64, rng: &mut R) -> Message {
        if sigma <= 0.0 {
            return self.clone();
        }
        Message {
            enc_obstacles: inject_noise(&self.enc_obstacles, sigma, rng),
            enc_explored: inject_noise(&self.enc_explored, sigma, rng),
            ..self.clone()
        }
    }
}
