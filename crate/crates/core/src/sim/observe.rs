//! Hooks into a running episode: snapshots, message logs, transition logs
//! and run metadata.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{EpisodeMetrics, SimConfig, World};
use crate::comms::{select_neighbors, write_record, IdentityCodec, Message, MessageRecord};
use crate::error::Result;
use crate::geom::Vec2;
use crate::grid::write_pgm_gray;
use crate::policy::{
    build_nav_observation, nav_crop_side, navigation_reward, NavScene, NavSnapshot, Transition, EXP_OBS_SCHEMA,
    NAV_OBS_SCHEMA,
};
use crate::rng::RNG_ALGORITHM;

/// Callbacks invoked by the episode loop. All default to no-ops.
pub trait EpisodeObserver {
    fn on_start(&mut self, _world: &World) -> Result<()> {
        Ok(())
    }

    /// A message as received, after channel noise.
    fn on_message(&mut self, _step: u64, _receiver: usize, _message: &Message) -> Result<()> {
        Ok(())
    }

    fn on_step(&mut self, _world: &World) -> Result<()> {
        Ok(())
    }

    fn on_end(&mut self, _world: &World, _metrics: &EpisodeMetrics) -> Result<()> {
        Ok(())
    }
}

impl EpisodeObserver for () {}

#[derive(Default)]
pub struct ObserverSet {
    items: Vec<Box<dyn EpisodeObserver>>,
}

impl ObserverSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, observer: impl EpisodeObserver + 'static) {
        self.items.push(Box::new(observer));
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

impl EpisodeObserver for ObserverSet {
    fn on_start(&mut self, world: &World) -> Result<()> {
        self.items.iter_mut().try_for_each(|o| o.on_start(world))
    }

    fn on_message(&mut self, step: u64, receiver: usize, message: &Message) -> Result<()> {
        self.items
            .iter_mut()
            .try_for_each(|o| o.on_message(step, receiver, message))
    }

    fn on_step(&mut self, world: &World) -> Result<()> {
        self.items.iter_mut().try_for_each(|o| o.on_step(world))
    }

    fn on_end(&mut self, world: &World, metrics: &EpisodeMetrics) -> Result<()> {
        self.items.iter_mut().try_for_each(|o| o.on_end(world, metrics))
    }
}

/// Three-level PGM of the collective belief: known obstacle 0, unexplored
/// 128, explored free 255.
pub fn write_snapshot(world: &World, path: &Path) -> Result<()> {
    let explored = world.collective_explored();
    let obstacles = world.collective_obstacles();
    let pixels: Vec<u8> = explored
        .cells()
        .iter()
        .zip(obstacles.cells())
        .map(|(&e, &o)| match (e, o) {
            (0, _) => 128,
            (_, 0) => 255,
            _ => 0,
        })
        .collect();
    let out = BufWriter::new(File::create(path)?);
    write_pgm_gray(explored.width(), explored.height(), &pixels, out)
}

/// Writes `snapshot_<step>.pgm` every `interval` steps and at the end.
pub struct SnapshotWriter {
    dir: PathBuf,
    interval: u64,
}

impl SnapshotWriter {
    pub fn new(dir: impl Into<PathBuf>, interval: u64) -> Self {
        Self {
            dir: dir.into(),
            interval: interval.max(1),
        }
    }

    fn path(&self, step: u64) -> PathBuf {
        self.dir.join(format!("snapshot_{step:05}.pgm"))
    }
}

impl EpisodeObserver for SnapshotWriter {
    fn on_step(&mut self, world: &World) -> Result<()> {
        if world.steps().is_multiple_of(self.interval) {
            write_snapshot(world, &self.path(world.steps()))?;
        }
        Ok(())
    }

    fn on_end(&mut self, world: &World, _metrics: &EpisodeMetrics) -> Result<()> {
        write_snapshot(world, &self.path(world.steps()))?;
        write_snapshot(world, &self.dir.join("final.pgm"))
    }
}

/// Appends every received message as a framed record.
pub struct MessageLog<W: Write> {
    out: W,
}

impl<W: Write> MessageLog<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> EpisodeObserver for MessageLog<W> {
    fn on_message(&mut self, step: u64, receiver: usize, message: &Message) -> Result<()> {
        let record = MessageRecord {
            step,
            receiver,
            message: message.clone(),
        };
        write_record(&record, &mut self.out)
    }

    fn on_end(&mut self, _world: &World, _metrics: &EpisodeMetrics) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Logs one navigation transition per agent per step, with rewards scored
/// against the ground truth.
pub struct TransitionRecorder<W: Write> {
    out: W,
    codec: Option<IdentityCodec>,
    previous: Vec<(Vec<f32>, NavSnapshot, Vec2)>,
}

impl<W: Write> TransitionRecorder<W> {
    pub fn new(out: W) -> Self {
        Self {
            out,
            codec: None,
            previous: Vec::new(),
        }
    }

    fn observe(&self, world: &World) -> Result<Vec<(Vec<f32>, NavSnapshot, Vec2)>> {
        let codec = self.codec.as_ref().expect("set in on_start");
        let cfg = world.config();
        world
            .agents()
            .iter()
            .map(|a| {
                let neighbors = select_neighbors(a, world.agents(), cfg.max_neighbors, cfg.sensor_radius);
                let obs = build_nav_observation(a, &neighbors, codec, &cfg.limits, cfg.sensor_radius)?;
                Ok((
                    obs.to_vec(),
                    NavSnapshot {
                        position: a.position,
                        velocity: a.velocity,
                    },
                    a.target,
                ))
            })
            .collect()
    }
}

impl<W: Write> EpisodeObserver for TransitionRecorder<W> {
    fn on_start(&mut self, world: &World) -> Result<()> {
        self.codec = Some(IdentityCodec::new(nav_crop_side(world.config().sensor_radius)));
        self.previous = self.observe(world)?;
        Ok(())
    }

    fn on_step(&mut self, world: &World) -> Result<()> {
        let next = self.observe(world)?;
        let done = world.terminated().is_some();
        let params = world.config().rewards;
        let agents = world.agents();
        for (i, ((obs, prev, target), (next_obs, snap, _))) in self.previous.iter().zip(&next).enumerate() {
            let others: Vec<(Vec2, Vec2)> = agents
                .iter()
                .filter(|b| b.id != i)
                .map(|b| (b.position, b.velocity))
                .collect();
            let scene = NavScene {
                target: *target,
                obstacles: world.ground(),
                others: &others,
                limits: &world.config().limits,
            };
            let t = Transition {
                step: world.steps() - 1,
                agent: i,
                observation: obs.clone(),
                action: world.actions()[i],
                reward: navigation_reward(prev, snap, &scene, &params),
                done,
                next_observation: next_obs.clone(),
            };
            crate::policy::write_transition(&t, &mut self.out)?;
        }
        self.previous = next;
        Ok(())
    }

    fn on_end(&mut self, _world: &World, _metrics: &EpisodeMetrics) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata<'a> {
    pub crate_version: &'static str,
    pub rng_algorithm: &'static str,
    pub noise_algorithm: &'static str,
    pub nav_obs_schema: &'static str,
    pub exp_obs_schema: &'static str,
    pub policy: &'a str,
    pub seeds: Vec<u64>,
    pub config: &'a SimConfig,
}

impl<'a> RunMetadata<'a> {
    pub fn new(config: &'a SimConfig, policy: &'a str, seeds: Vec<u64>) -> Self {
        Self {
            crate_version: env!("CARGO_PKG_VERSION"),
            rng_algorithm: RNG_ALGORITHM,
            noise_algorithm: crate::mapgen::NOISE_ALGORITHM,
            nav_obs_schema: NAV_OBS_SCHEMA,
            exp_obs_schema: EXP_OBS_SCHEMA,
            policy,
            seeds,
            config,
        }
    }
}

pub fn write_metadata<W: Write>(meta: &RunMetadata, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, meta).map_err(|e| crate::error::Error::format("metadata", e.to_string()))
}
