//! Shared fixtures for the criterion benches.

use cartoswarm_core::fusion::NeighborMaps;
use cartoswarm_core::BinaryGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Self maps, fused maps and decoded neighbour maps for one fusion event.
pub struct FusionInstance {
    pub self_explored: BinaryGrid,
    pub self_obstacles: BinaryGrid,
    pub fused_explored: BinaryGrid,
    pub fused_obstacles: BinaryGrid,
    pub neighbors: Vec<NeighborMaps>,
}

fn bits(rng: &mut ChaCha8Rng, side: usize, p: f64) -> BinaryGrid {
    BinaryGrid::from_fn(side, side, |_, _| u8::from(rng.random_bool(p)))
}

pub fn fusion_instance(side: usize, neighbors: usize, seed: u64) -> FusionInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let self_explored = bits(&mut rng, side, 0.5);
    let self_obstacles = bits(&mut rng, side, 0.2).and(&self_explored).unwrap();
    let neighbors = (0..neighbors)
        .map(|_| {
            let e = bits(&mut rng, side, 0.5);
            let o = bits(&mut rng, side, 0.2).and(&e).unwrap();
            NeighborMaps::from_self_maps(&e, &o)
        })
        .collect();
    FusionInstance {
        fused_explored: self_explored.clone(),
        fused_obstacles: self_obstacles.clone(),
        self_explored,
        self_obstacles,
        neighbors,
    }
}
