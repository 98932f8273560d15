//! Episode orchestration.
//!
//! One step runs these phases, each against a snapshot taken when the
//! phase starts:
//!
//! 1. every agent senses the ground truth;
//! 2. neighbours are selected; agents due to communicate fuse noisy decoded
//!    neighbour messages, the others fuse their own maps only;
//! 3. waypoints are refreshed on the staggered macro schedule or on request;
//! 4. every agent computes an acceleration;
//! 5. all agents integrate simultaneously;
//! 6. agents that collided are rolled back to their pre-step pose with zero
//!    velocity, repeatedly, until no collision remains;
//! 7. coverage and counters are updated.

mod config;
mod observe;
mod sweep;

pub use config::{Profile, SimConfig};
pub use observe::{
    write_metadata, write_snapshot, EpisodeObserver, MessageLog, ObserverSet, RunMetadata, SnapshotWriter,
    TransitionRecorder,
};
pub use sweep::{aggregate, noise_sweep, run_batch, sweep, write_csv, NoisePlan, PolicyFactory, SweepPlan, SweepRow};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{clip_acceleration, obstacle_within, AgentState};
use crate::comms::{make_message, select_neighbors, MapCodec, Message, NeighborRecord};
use crate::error::{Error, Result};
use crate::fusion::{fuse_event, FusionParams, NeighborMaps};
use crate::geom::Vec2;
use crate::grid::{interior_mask, map_accuracy, BinaryGrid};
use crate::mapgen::{generate_map, MapGenConfig};
use crate::policy::{AgentView, Policy};
use crate::rng::{stream, stream_rng, SimRng};
use crate::sensing::sense;

pub const SPAWN_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationCause {
    Coverage,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub steps: u64,
    /// `steps · dt`, seconds.
    pub completion_time: f64,
    pub cause: TerminationCause,
    pub agent_distances: Vec<f64>,
    pub cumulative_distance: f64,
    /// Collective coverage after each step.
    pub coverage_curve: Vec<f64>,
    pub final_coverage: f64,
    /// `None` when nothing was explored.
    pub final_accuracy: Option<f64>,
    pub static_collisions: u64,
    pub agent_collisions: u64,
    /// Agents found on an obstacle cell after collision handling.
    pub obstacle_violations: u64,
}

/// Places `n` agents uniformly in the central clearing, at least
/// `min_separation` apart and clear of obstacles by half of it.
pub fn spawn_agents<R: Rng + ?Sized>(
    map: &BinaryGrid,
    n: usize,
    clearing_radius: f64,
    min_separation: f64,
    rng: &mut R,
) -> Result<Vec<AgentState>> {
    let side = map.width();
    let center = Vec2::new(side as f64 / 2.0, side as f64 / 2.0);
    let radius = (clearing_radius - 0.5 * min_separation - 1.0).max(0.0);
    let mut placed: Vec<Vec2> = Vec::with_capacity(n);
    let mut attempts = 0;
    while placed.len() < n {
        if attempts == SPAWN_ATTEMPTS {
            return Err(Error::Spawn {
                requested: n,
                placed: placed.len(),
                attempts,
            });
        }
        attempts += 1;
        let r = radius * rng.random::<f64>().sqrt();
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        let p = center + Vec2::new(r * theta.cos(), r * theta.sin());
        if obstacle_within(p, map, 0.5 * min_separation) {
            continue;
        }
        if placed.iter().all(|q| q.distance(p) >= min_separation) {
            placed.push(p);
        }
    }
    Ok(placed
        .into_iter()
        .enumerate()
        .map(|(id, p)| AgentState::new(id, p, side))
        .collect())
}

/// Termination rule on its own: coverage first, then the step cap.
pub fn termination(coverage: f64, steps: u64, config: &SimConfig) -> Option<TerminationCause> {
    if coverage >= config.coverage_target {
        Some(TerminationCause::Coverage)
    } else if steps >= config.max_steps {
        Some(TerminationCause::Timeout)
    } else {
        None
    }
}

/// Full simulator state for one episode.
pub struct World {
    config: SimConfig,
    fusion: FusionParams,
    ground: BinaryGrid,
    interior: BinaryGrid,
    codec: Box<dyn MapCodec>,
    agents: Vec<AgentState>,
    neighbors: Vec<Vec<NeighborRecord>>,
    actions: Vec<Vec2>,
    waypoint_picks: Vec<Option<Vec2>>,
    step: u64,
    noise_rng: SimRng,
    policy_rng: SimRng,
    coverage_curve: Vec<f64>,
    static_collisions: u64,
    agent_collisions: u64,
    obstacle_violations: u64,
}

impl World {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let mut map_config = MapGenConfig::new(config.size, config.difficulty, config.seed);
        map_config.crop_radius = config.clearing_radius();
        let ground = generate_map(&map_config)?.grid;
        Self::with_ground(config, ground)
    }

    /// Runs on a caller-supplied ground map instead of a generated one.
    pub fn with_ground(config: SimConfig, ground: BinaryGrid) -> Result<Self> {
        config.validate()?;
        if ground.width() != config.size || ground.height() != config.size {
            return Err(Error::DimensionMismatch {
                expected_w: config.size,
                expected_h: config.size,
                got_w: ground.width(),
                got_h: ground.height(),
            });
        }
        let mut spawn_rng = stream_rng(config.seed, stream::SPAWN, 0);
        let agents = spawn_agents(
            &ground,
            config.agents,
            config.clearing_radius(),
            2.0 * config.limits.col_rad,
            &mut spawn_rng,
        )?;
        let n = agents.len();
        Ok(Self {
            fusion: config.fusion(),
            codec: config.codec.build(config.size)?,
            interior: interior_mask(config.size, config.size),
            ground,
            agents,
            neighbors: vec![Vec::new(); n],
            actions: vec![Vec2::ZERO; n],
            waypoint_picks: vec![None; n],
            step: 0,
            noise_rng: stream_rng(config.seed, stream::CHANNEL_NOISE, 0),
            policy_rng: stream_rng(config.seed, stream::POLICY, 0),
            coverage_curve: Vec::new(),
            static_collisions: 0,
            agent_collisions: 0,
            obstacle_violations: 0,
            config,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn ground(&self) -> &BinaryGrid {
        &self.ground
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    /// Neighbour records selected during the last step.
    pub fn neighbors(&self) -> &[Vec<NeighborRecord>] {
        &self.neighbors
    }

    /// Clipped accelerations commanded during the last step.
    pub fn actions(&self) -> &[Vec2] {
        &self.actions
    }

    /// Waypoints picked during the last step, per agent.
    pub fn waypoint_picks(&self) -> &[Option<Vec2>] {
        &self.waypoint_picks
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.config.limits.dt
    }

    pub fn interior(&self) -> &BinaryGrid {
        &self.interior
    }

    /// OR of every agent's fused exploration map.
    pub fn collective_explored(&self) -> BinaryGrid {
        or_of(self.agents.iter().map(|a| &a.fused_explored), self.config.size)
    }

    /// OR of every agent's fused obstacle map.
    pub fn collective_obstacles(&self) -> BinaryGrid {
        or_of(self.agents.iter().map(|a| &a.fused_obstacles), self.config.size)
    }

    pub fn coverage(&self) -> f64 {
        self.coverage_curve
            .last()
            .copied()
            .unwrap_or_else(|| self.measure_coverage())
    }

    fn measure_coverage(&self) -> f64 {
        let total = self.interior.count_ones();
        if total == 0 {
            return 0.0;
        }
        let hit = (0..self.interior.len())
            .filter(|&i| self.interior.cells()[i] != 0 && self.agents.iter().any(|a| a.fused_explored.cells()[i] != 0))
            .count();
        hit as f64 / total as f64
    }

    /// Accuracy of the collective obstacle map over explored interior cells.
    pub fn accuracy(&self) -> Option<f64> {
        let explored = self.collective_explored().and(&self.interior).expect("same shape");
        map_accuracy(&self.ground, &self.collective_obstacles(), &explored).expect("same shape")
    }

    pub fn terminated(&self) -> Option<TerminationCause> {
        termination(self.coverage(), self.step, &self.config)
    }

    pub fn step(&mut self, policy: &mut dyn Policy, observer: &mut dyn EpisodeObserver) -> Result<()> {
        let n = self.agents.len();
        let cfg = &self.config;
        let limits = cfg.limits;

        for a in &mut self.agents {
            sense(a, &self.ground, cfg.sensor_radius, cfg.sensing);
        }

        self.neighbors = self
            .agents
            .iter()
            .map(|a| select_neighbors(a, &self.agents, cfg.max_neighbors, cfg.sensor_radius))
            .collect();
        let due = self.step.is_multiple_of(cfg.comm_freq);
        let mut outbox: Vec<Option<Message>> = vec![None; n];
        for i in 0..n {
            let mut maps = Vec::new();
            if due {
                for k in self.neighbors[i].iter().filter_map(|r| r.id) {
                    if outbox[k].is_none() {
                        outbox[k] = Some(make_message(&self.agents[k], self.codec.as_ref())?);
                    }
                    let msg = outbox[k]
                        .as_ref()
                        .expect("filled above")
                        .with_noise(cfg.sigma, &mut self.noise_rng);
                    observer.on_message(self.step, i, &msg)?;
                    let explored = self.codec.decode(&msg.enc_explored)?;
                    let obstacles = self.codec.decode(&msg.enc_obstacles)?;
                    maps.push(NeighborMaps::from_decoded(&explored, &obstacles, &self.fusion)?);
                }
                if !maps.is_empty() {
                    self.agents[i].last_comm_step = Some(self.step);
                }
            }
            fuse_event(&mut self.agents[i], &maps, &self.fusion)?;
        }

        let period = policy.macro_period().max(1);
        for i in 0..n {
            let view = AgentView {
                agent: &self.agents[i],
                neighbors: &self.neighbors[i],
                limits: &limits,
                step: self.step,
            };
            let offset = i as u64 * period / n as u64;
            let scheduled = self.step == 0 || (self.step + offset).is_multiple_of(period);
            self.waypoint_picks[i] = if scheduled || policy.wants_waypoint(&view) {
                Some(policy.select_waypoint(&view, &mut self.policy_rng))
            } else {
                None
            };
            if let Some(t) = self.waypoint_picks[i] {
                self.agents[i].target = t;
            }
        }

        for i in 0..n {
            let view = AgentView {
                agent: &self.agents[i],
                neighbors: &self.neighbors[i],
                limits: &limits,
                step: self.step,
            };
            self.actions[i] = clip_acceleration(policy.navigate(&view), limits.max_acc);
        }

        let before: Vec<(Vec2, f64)> = self.agents.iter().map(|a| (a.position, a.odometer)).collect();
        for (a, &acc) in self.agents.iter_mut().zip(&self.actions) {
            a.step_kinematics(acc, &limits);
        }
        self.resolve_collisions(&before);

        for a in &self.agents {
            let (x, y) = a.cell();
            if self.ground.get_signed(x, y) != Some(0) {
                self.obstacle_violations += 1;
            }
        }

        self.step += 1;
        let coverage = self.measure_coverage();
        self.coverage_curve.push(coverage);
        observer.on_step(self)
    }

    fn resolve_collisions(&mut self, before: &[(Vec2, f64)]) {
        let n = self.agents.len();
        let limits = self.config.limits;
        let mut rolled = vec![false; n];
        loop {
            let mut hit = vec![false; n];
            for (i, a) in self.agents.iter().enumerate() {
                if !rolled[i] && obstacle_within(a.position, &self.ground, limits.col_rad) {
                    hit[i] = true;
                    self.static_collisions += 1;
                }
            }
            for i in 0..n {
                for j in i + 1..n {
                    if rolled[i] && rolled[j] {
                        continue;
                    }
                    if self.agents[i].position.distance(self.agents[j].position) < 2.0 * limits.col_rad {
                        hit[i] |= !rolled[i];
                        hit[j] |= !rolled[j];
                        self.agent_collisions += 1;
                    }
                }
            }
            if !hit.iter().any(|&h| h) {
                break;
            }
            for i in (0..n).filter(|&i| hit[i]) {
                let a = &mut self.agents[i];
                a.position = before[i].0;
                a.odometer = before[i].1;
                a.velocity = Vec2::ZERO;
                rolled[i] = true;
            }
        }
    }

    pub fn metrics(&self) -> EpisodeMetrics {
        let agent_distances: Vec<f64> = self.agents.iter().map(|a| a.odometer).collect();
        EpisodeMetrics {
            steps: self.step,
            completion_time: self.time(),
            cause: self.terminated().unwrap_or(TerminationCause::Timeout),
            cumulative_distance: agent_distances.iter().sum(),
            agent_distances,
            coverage_curve: self.coverage_curve.clone(),
            final_coverage: self.coverage(),
            final_accuracy: self.accuracy(),
            static_collisions: self.static_collisions,
            agent_collisions: self.agent_collisions,
            obstacle_violations: self.obstacle_violations,
        }
    }
}

fn or_of<'a>(grids: impl Iterator<Item = &'a BinaryGrid>, side: usize) -> BinaryGrid {
    let mut out = BinaryGrid::square(side, 0);
    for g in grids {
        out.or_assign(g).expect("agent maps share the world size");
    }
    out
}

/// Runs to termination with the given policy.
pub fn run_episode(config: &SimConfig, policy: &mut dyn Policy) -> Result<EpisodeMetrics> {
    run_episode_observed(config, policy, &mut ())
}

pub fn run_episode_observed(
    config: &SimConfig,
    policy: &mut dyn Policy,
    observer: &mut dyn EpisodeObserver,
) -> Result<EpisodeMetrics> {
    let world = World::new(config.clone())?;
    run_world(world, policy, observer)
}

/// Drives an already constructed world to termination.
pub fn run_world(
    mut world: World,
    policy: &mut dyn Policy,
    observer: &mut dyn EpisodeObserver,
) -> Result<EpisodeMetrics> {
    observer.on_start(&world)?;
    while world.terminated().is_none() {
        world.step(policy, observer)?;
    }
    let metrics = world.metrics();
    observer.on_end(&world, &metrics)?;
    Ok(metrics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapgen::REFERENCE_SIZE;

    fn small(agents: usize) -> SimConfig {
        SimConfig {
            agents,
            ..SimConfig::desk()
        }
    }

    #[test]
    fn spawn_examples() {
        let map = generate_map(&MapGenConfig::new(REFERENCE_SIZE, 0.3, 5)).unwrap().grid;
        let mut rng = stream_rng(9, stream::SPAWN, 0);
        let one = spawn_agents(&map, 1, 60.0, 6.0, &mut rng).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0].position.distance(Vec2::new(256.0, 256.0)) <= 60.0);

        let many = spawn_agents(&map, 20, 60.0, 6.0, &mut rng).unwrap();
        for (i, a) in many.iter().enumerate() {
            assert!(a.position.distance(Vec2::new(256.0, 256.0)) <= 60.0);
            assert_eq!(a.velocity, Vec2::ZERO);
            for b in &many[i + 1..] {
                assert!(a.position.distance(b.position) >= 6.0);
            }
        }
        let a = spawn_agents(&map, 20, 60.0, 6.0, &mut stream_rng(11, stream::SPAWN, 0)).unwrap();
        let b = spawn_agents(&map, 20, 60.0, 6.0, &mut stream_rng(11, stream::SPAWN, 0)).unwrap();
        let pos = |v: &[AgentState]| v.iter().map(|a| a.position).collect::<Vec<_>>();
        assert_eq!(pos(&a), pos(&b));

        assert!(matches!(
            spawn_agents(&map, 500, 10.0, 6.0, &mut rng),
            Err(Error::Spawn { requested: 500, .. })
        ));
    }

    #[test]
    fn termination_examples() {
        let c = SimConfig::default();
        assert_eq!(termination(0.80, 10, &c), Some(TerminationCause::Coverage));
        assert_eq!(termination(0.6, 9000, &c), Some(TerminationCause::Timeout));
        assert_eq!(termination(0.79, 100, &c), None);
        assert!((9000.0 * c.limits.dt - 900.0).abs() < 1e-9);
    }

    #[test]
    fn one_step_advances_clock_and_every_agent_fuses() {
        let config = small(3);
        let mut world = World::new(config.clone()).unwrap();
        let mut policy = config.baseline_policy();
        world.step(&mut policy, &mut ()).unwrap();
        assert_eq!(world.steps(), 1);
        assert!((world.time() - 0.1).abs() < 1e-12);
        for a in world.agents() {
            assert!(a.self_explored.is_subset_of(&a.fused_explored));
            assert_eq!(world.neighbors()[a.id].len(), config.max_neighbors);
        }
    }

    #[test]
    fn short_episode_invariants() {
        let config = SimConfig {
            max_steps: 300,
            ..small(4)
        };
        let mut policy = config.baseline_policy();
        let m = run_episode(&config, &mut policy).unwrap();
        assert!(m.steps <= 300);
        assert!(m.coverage_curve.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(m.obstacle_violations, 0);
        assert!(m.agent_distances.iter().all(|d| *d >= 0.0));
        assert!((m.cumulative_distance - m.agent_distances.iter().sum::<f64>()).abs() < 1e-9);
        assert!((m.completion_time - m.steps as f64 * 0.1).abs() < 1e-9);
    }
}
