//! Trust-weighted consensus fusion of self and neighbour maps.
//!
//! For each cell let `n` be the number of real neighbours whose decoded
//! exploration map marks the cell explored. With `E`/`O` the agent's own
//! self maps and `O_k` the neighbours' decoded obstacle beliefs:
//!
//! | self explored | n   | intermediate obstacle                         |
//! |---------------|-----|-----------------------------------------------|
//! | no            | 0   | 0                                             |
//! | yes           | 0   | `O`                                           |
//! | no            | > 0 | mean of `O_k` over exploring neighbours       |
//! | yes           | > 0 | `W/(W+n)·O + 1/(W+n)·Σ O_k`, `W = (n-1)β + 1` |
//!
//! The intermediate exploration map is the OR of all exploration maps. Both
//! are thresholded, then merged into the persistent fused maps: explored
//! cells accumulate, and obstacle state is overwritten only where this event
//! saw the cell.

use serde::{Deserialize, Serialize};

use crate::agent::AgentState;
use crate::error::{Error, Result};
use crate::grid::{BinaryGrid, Grid, RealGrid};

/// How decoded neighbour obstacle maps enter the per-cell rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeighborBelief {
    /// Decoded obstacle values are used as real-valued beliefs in `[0, 1]`.
    #[default]
    Soft,
    /// Decoded obstacle values are thresholded to `{0, 1}` first.
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionParams {
    pub beta: f64,
    pub binarize_threshold: f64,
    #[serde(default)]
    pub neighbor_belief: NeighborBelief,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            beta: 0.8,
            binarize_threshold: 0.5,
            neighbor_belief: NeighborBelief::Soft,
        }
    }
}

impl FusionParams {
    pub fn with_beta(beta: f64) -> Self {
        Self {
            beta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::config(format!("beta {} outside [0, 1]", self.beta)));
        }
        if !(0.0..=1.0).contains(&self.binarize_threshold) {
            return Err(Error::config(format!(
                "binarize threshold {} outside [0, 1]",
                self.binarize_threshold
            )));
        }
        Ok(())
    }
}

/// Self-to-neighbour weight ratio `(n - 1)·β + 1`.
pub fn trust_weight(n: u32, beta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::NoExploringNeighbors);
    }
    Ok((n - 1) as f64 * beta + 1.0)
}

/// A neighbour's maps after decoding. `explored` is already binarized.
#[derive(Debug, Clone)]
pub struct NeighborMaps {
    pub explored: BinaryGrid,
    pub obstacles: RealGrid,
}

impl NeighborMaps {
    /// Thresholds the decoded exploration map; the obstacle map is kept
    /// real-valued or thresholded according to `params`.
    pub fn from_decoded(explored: &RealGrid, obstacles: &RealGrid, params: &FusionParams) -> Result<Self> {
        explored.check_shape(obstacles)?;
        let t = params.binarize_threshold as f32;
        let obstacles = match params.neighbor_belief {
            NeighborBelief::Soft => obstacles.map(|v| v.clamp(0.0, 1.0)),
            NeighborBelief::Hard => obstacles.map(|v| if v >= t { 1.0 } else { 0.0 }),
        };
        Ok(Self {
            explored: explored.map(|v| u8::from(v >= t)),
            obstacles,
        })
    }

    /// Exact copy of self maps, as a lossless noiseless channel would deliver them.
    pub fn from_self_maps(explored: &BinaryGrid, obstacles: &BinaryGrid) -> Self {
        Self {
            explored: explored.clone(),
            obstacles: obstacles.to_real(),
        }
    }
}

fn check_neighbors(reference: &BinaryGrid, neighbors: &[NeighborMaps]) -> Result<()> {
    for nb in neighbors {
        reference.check_shape(&nb.explored)?;
        reference.check_shape(&nb.obstacles)?;
    }
    Ok(())
}

/// OR of the self exploration map and every neighbour's.
pub fn intermediate_exploration(self_explored: &BinaryGrid, neighbors: &[NeighborMaps]) -> Result<BinaryGrid> {
    check_neighbors(self_explored, neighbors)?;
    let mut out = self_explored.clone();
    for nb in neighbors {
        out.or_assign(&nb.explored)?;
    }
    Ok(out)
}

/// Per-cell obstacle consensus for one communication event.
pub fn intermediate_obstacle(
    self_explored: &BinaryGrid,
    self_obstacles: &BinaryGrid,
    neighbors: &[NeighborMaps],
    params: &FusionParams,
) -> Result<Grid<f64>> {
    self_explored.check_shape(self_obstacles)?;
    check_neighbors(self_explored, neighbors)?;
    let cells = self_explored.len();

    let mut count = vec![0u32; cells];
    let mut sum = vec![0f64; cells];
    for nb in neighbors {
        for (i, (&e, &o)) in nb.explored.cells().iter().zip(nb.obstacles.cells()).enumerate() {
            if e != 0 {
                count[i] += 1;
                sum[i] += o as f64;
            }
        }
    }

    let beta = params.beta;
    let values = self_explored
        .cells()
        .iter()
        .zip(self_obstacles.cells())
        .zip(count.iter().zip(&sum))
        .map(|((&e, &o), (&n, &s))| match (e != 0, n) {
            (false, 0) => 0.0,
            (true, 0) => o as f64,
            (false, n) => s / n as f64,
            (true, n) => {
                let w = (n - 1) as f64 * beta + 1.0;
                (w * o as f64 + s) / (w + n as f64)
            }
        })
        .collect();
    Grid::from_vec(self_explored.width(), self_explored.height(), values)
}

/// Merges thresholded intermediate maps into the persistent fused maps.
pub fn temporal_fuse(
    fused_explored: &mut BinaryGrid,
    fused_obstacles: &mut BinaryGrid,
    explored_now: &BinaryGrid,
    obstacles_now: &BinaryGrid,
) -> Result<()> {
    fused_explored.check_shape(explored_now)?;
    fused_obstacles.check_shape(obstacles_now)?;
    fused_explored.check_shape(fused_obstacles)?;
    for (fe, &e) in fused_explored.cells_mut().iter_mut().zip(explored_now.cells()) {
        *fe |= e;
    }
    for ((fo, &e), &o) in fused_obstacles
        .cells_mut()
        .iter_mut()
        .zip(explored_now.cells())
        .zip(obstacles_now.cells())
    {
        *fo = (o & e) | (*fo & (1 - e));
    }
    Ok(())
}

/// One full fusion event on the agent's fused maps. Self maps are read only.
pub fn fuse_event(agent: &mut AgentState, neighbors: &[NeighborMaps], params: &FusionParams) -> Result<()> {
    let AgentState {
        self_explored,
        self_obstacles,
        fused_explored,
        fused_obstacles,
        ..
    } = agent;
    fuse_maps(
        self_explored,
        self_obstacles,
        fused_explored,
        fused_obstacles,
        neighbors,
        params,
    )
}

pub fn fuse_maps(
    self_explored: &BinaryGrid,
    self_obstacles: &BinaryGrid,
    fused_explored: &mut BinaryGrid,
    fused_obstacles: &mut BinaryGrid,
    neighbors: &[NeighborMaps],
    params: &FusionParams,
) -> Result<()> {
    if neighbors.is_empty() {
        // Cases 1 and 2 only: the event sees exactly the self-explored cells.
        self_explored.check_shape(self_obstacles)?;
        fused_explored.check_shape(self_explored)?;
        fused_obstacles.check_shape(self_explored)?;
        let fe = fused_explored.cells_mut();
        let fo = fused_obstacles.cells_mut();
        for i in 0..fe.len() {
            let e = self_explored.cells()[i];
            fe[i] |= e;
            fo[i] = (self_obstacles.cells()[i] & e) | (fo[i] & (1 - e));
        }
        return Ok(());
    }
    let explored_now = intermediate_exploration(self_explored, neighbors)?;
    let obstacle_belief = intermediate_obstacle(self_explored, self_obstacles, neighbors, params)?;
    let t = params.binarize_threshold;
    let obstacles_now = obstacle_belief.map(|v| u8::from(v >= t));
    temporal_fuse(fused_explored, fused_obstacles, &explored_now, &obstacles_now)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;

    fn one(v: u8) -> BinaryGrid {
        BinaryGrid::square(1, v)
    }

    fn nb(e: u8, o: f32) -> NeighborMaps {
        NeighborMaps {
            explored: one(e),
            obstacles: RealGrid::square(1, o),
        }
    }

    #[test]
    fn trust_weight_values() {
        for b in [0.0, 0.3, 1.0] {
            assert_eq!(trust_weight(1, b).unwrap(), 1.0);
        }
        assert_eq!(trust_weight(3, 1.0).unwrap(), 3.0);
        assert!((trust_weight(2, 0.8).unwrap() - 1.8).abs() < 1e-15);
        assert!(matches!(trust_weight(0, 0.5), Err(Error::NoExploringNeighbors)));
    }

    #[test]
    fn case_examples() {
        let p = FusionParams::with_beta(0.5);
        // Case 2
        let o = intermediate_obstacle(&one(1), &one(1), &[nb(0, 0.0)], &p).unwrap();
        assert_eq!(o.get(0, 0), 1.0);
        // Case 3
        let o = intermediate_obstacle(&one(0), &one(0), &[nb(1, 1.0), nb(1, 0.0)], &p).unwrap();
        assert_eq!(o.get(0, 0), 0.5);
        // Case 4, n = 1: W = 1 for every beta
        for beta in [0.0, 0.37, 1.0] {
            let o = intermediate_obstacle(&one(1), &one(1), &[nb(1, 0.0)], &FusionParams::with_beta(beta)).unwrap();
            assert_eq!(o.get(0, 0), 0.5);
            assert!(o.get(0, 0) >= 0.5);
        }
        // Case 4, n = 2, beta = 1: W = 2, (0 + 2) / 4
        let o = intermediate_obstacle(
            &one(1),
            &one(0),
            &[nb(1, 1.0), nb(1, 1.0)],
            &FusionParams::with_beta(1.0),
        )
        .unwrap();
        assert_eq!(o.get(0, 0), 0.5);
    }

    #[test]
    fn exploration_is_or() {
        assert_eq!(intermediate_exploration(&one(0), &[]).unwrap(), one(0));
        assert_eq!(intermediate_exploration(&one(0), &[nb(1, 0.0)]).unwrap(), one(1));
        let a = [nb(1, 0.0), nb(0, 0.0)];
        let b = [nb(0, 0.0), nb(1, 0.0)];
        assert_eq!(
            intermediate_exploration(&one(0), &a).unwrap(),
            intermediate_exploration(&one(0), &b).unwrap()
        );
    }

    #[test]
    fn temporal_fuse_branches() {
        let fe0 = BinaryGrid::from_bits(2, 1, vec![1, 0]).unwrap();
        let fo0 = BinaryGrid::from_bits(2, 1, vec![1, 0]).unwrap();
        let (mut fe, mut fo) = (fe0.clone(), fo0.clone());
        temporal_fuse(
            &mut fe,
            &mut fo,
            &BinaryGrid::filled(2, 1, 0),
            &BinaryGrid::from_bits(2, 1, vec![0, 1]).unwrap(),
        )
        .unwrap();
        assert_eq!((fe.clone(), fo.clone()), (fe0.clone(), fo0.clone()));

        let now = BinaryGrid::from_bits(2, 1, vec![0, 1]).unwrap();
        let (mut fe, mut fo) = (fe0.clone(), fo0);
        temporal_fuse(
            &mut fe,
            &mut fo,
            &BinaryGrid::from_bits(2, 1, vec![1, 1]).unwrap(),
            &now,
        )
        .unwrap();
        assert_eq!(fo, now);
    }

    #[test]
    fn self_maps_are_untouched_and_zero_neighbours_degenerates() {
        let mut a = AgentState::new(0, Vec2::new(1.0, 1.0), 4);
        a.self_explored = BinaryGrid::from_fn(4, 4, |x, _| u8::from(x < 2));
        a.self_obstacles = BinaryGrid::from_fn(4, 4, |x, y| u8::from(x == 0 && y == 0));
        a.fused_obstacles.set(3, 3, 1);
        let (se, so) = (a.self_explored.clone(), a.self_obstacles.clone());
        fuse_event(&mut a, &[], &FusionParams::default()).unwrap();
        assert_eq!(
            (a.self_explored.clone(), a.self_obstacles.clone()),
            (se.clone(), so.clone())
        );
        assert_eq!(a.fused_explored, se);
        assert_eq!(a.fused_obstacles.get(0, 0), 1);
        assert_eq!(a.fused_obstacles.get(3, 3), 1);

        let peer = NeighborMaps::from_self_maps(&BinaryGrid::square(4, 1), &BinaryGrid::square(4, 0));
        fuse_event(&mut a, &[peer], &FusionParams::default()).unwrap();
        assert_eq!((a.self_explored.clone(), a.self_obstacles.clone()), (se, so));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut a = AgentState::new(0, Vec2::ZERO, 4);
        let bad = NeighborMaps::from_self_maps(&BinaryGrid::square(5, 0), &BinaryGrid::square(5, 0));
        assert!(fuse_event(&mut a, &[bad], &FusionParams::default()).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use proptest::test_runner::{Config, RngSeed};

        const SIDE: usize = 6;

        fn bits() -> impl Strategy<Value = BinaryGrid> {
            proptest::collection::vec(0u8..=1, SIDE * SIDE).prop_map(|c| BinaryGrid::from_bits(SIDE, SIDE, c).unwrap())
        }

        fn neighbor() -> impl Strategy<Value = NeighborMaps> {
            (bits(), proptest::collection::vec(0f32..=1.0, SIDE * SIDE)).prop_map(|(explored, o)| NeighborMaps {
                explored,
                obstacles: RealGrid::from_vec(SIDE, SIDE, o).unwrap(),
            })
        }

        // Literal per-cell transcription, one cell at a time.
        fn oracle(e: u8, o: u8, nbs: &[(u8, f32)], beta: f64) -> f64 {
            let exploring: Vec<f64> = nbs
                .iter()
                .filter(|(ek, _)| *ek == 1)
                .map(|(_, ok)| *ok as f64)
                .collect();
            let n = exploring.len();
            let sum: f64 = exploring.iter().sum();
            if e == 0 && n == 0 {
                0.0
            } else if n == 0 {
                o as f64
            } else if e == 0 {
                1.0 / n as f64 * sum
            } else {
                let w = trust_weight(n as u32, beta).unwrap();
                w / (w + n as f64) * o as f64 + 1.0 / (w + n as f64) * sum
            }
        }

        fn cfg() -> Config {
            Config {
                cases: 256,
                rng_seed: RngSeed::Fixed(0xF05E),
                failure_persistence: None,
                ..Config::default()
            }
        }

        proptest! {
            #![proptest_config(cfg())]

            #[test]
            fn matches_oracle(e in bits(), o in bits(), nbs in proptest::collection::vec(neighbor(), 0..5), beta in 0f64..=1.0) {
                let p = FusionParams::with_beta(beta);
                let fast = intermediate_obstacle(&e, &o, &nbs, &p).unwrap();
                for i in 0..SIDE * SIDE {
                    let cells: Vec<(u8, f32)> = nbs.iter().map(|nb| (nb.explored.cells()[i], nb.obstacles.cells()[i])).collect();
                    let want = oracle(e.cells()[i], o.cells()[i], &cells, beta);
                    prop_assert!((fast.cells()[i] - want).abs() < 1e-12);
                }
            }

            #[test]
            fn coefficients_sum_to_one(n in 1u32..12, beta in 0f64..=1.0) {
                // all beliefs at 1 expose the coefficient sum directly
                let ones = BinaryGrid::filled(1, 1, 1);
                let nbs: Vec<NeighborMaps> = (0..n).map(|_| NeighborMaps::from_self_maps(&ones, &ones)).collect();
                let out = intermediate_obstacle(&ones, &ones, &nbs, &FusionParams::with_beta(beta)).unwrap();
                prop_assert_eq!(out.cells()[0], 1.0);
            }

            #[test]
            fn belief_stays_in_unit_interval(e in bits(), o in bits(), nbs in proptest::collection::vec(neighbor(), 0..5), beta in 0f64..=1.0) {
                let out = intermediate_obstacle(&e, &o, &nbs, &FusionParams::with_beta(beta)).unwrap();
                prop_assert!(out.cells().iter().all(|v| (0.0..=1.0 + 1e-12).contains(v)));
            }

            #[test]
            fn fusing_with_own_copy_is_idempotent(e in bits(), o in bits(), copies in 1usize..4, beta in 0f64..=1.0) {
                let o = o.and(&e).unwrap();
                let nbs = vec![NeighborMaps::from_self_maps(&e, &o); copies];
                let (mut fe, mut fo) = (BinaryGrid::square(SIDE, 0), BinaryGrid::square(SIDE, 0));
                fuse_maps(&e, &o, &mut fe, &mut fo, &nbs, &FusionParams::with_beta(beta)).unwrap();
                prop_assert_eq!(&fe, &e);
                prop_assert_eq!(&fo, &o);
            }

            #[test]
            fn hard_beliefs_make_mid_beta_inert_for_small_n(e in bits(), o in bits(), nbs in proptest::collection::vec(neighbor(), 1..4)) {
                // With {0,1} inputs and n <= 3 the thresholded outcome only
                // depends on whether beta is 0, 1 or strictly between.
                let hard: Vec<NeighborMaps> = nbs.iter().map(|nb| NeighborMaps {
                    explored: nb.explored.clone(),
                    obstacles: nb.obstacles.map(|v| if v >= 0.5 { 1.0 } else { 0.0 }),
                }).collect();
                let at = |b: f64| intermediate_obstacle(&e, &o, &hard, &FusionParams::with_beta(b)).unwrap().map(|v| u8::from(v >= 0.5));
                let reference = at(0.5);
                for b in [0.01, 0.2, 0.8, 0.99] {
                    prop_assert_eq!(at(b), reference.clone());
                }
            }
        }
    }
}
