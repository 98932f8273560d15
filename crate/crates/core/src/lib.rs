//! Multi-agent exploration of procedurally generated occupancy maps.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`] holds the raster type every other module trades in, plus the
//!   boolean algebra, morphology and scoring used on it, and PGM / float I/O.
//! * [`mapgen`] synthesises ground-truth maps from masked gradient-noise layers.
//! * [`agent`] and [`sensing`] model point robots with double-integrator
//!   kinematics and a perfect disk sensor.
//! * [`comms`] picks communicating neighbours, packs self maps through a
//!   [`comms::MapCodec`] and perturbs the latent vectors with channel noise.
//! * [`fusion`] merges self and neighbour beliefs with a trust-weighted
//!   consensus rule.
//! * [`policy`] provides observation builders, reward evaluators and the
//!   frontier / reactive baseline controllers.
//! * [`sim`] runs episodes and parameter sweeps on top of all of the above.

pub mod agent;
pub mod comms;
mod error;
pub mod fusion;
pub mod geom;
pub mod grid;
pub mod mapgen;
pub mod policy;
pub mod rng;
pub mod sensing;
pub mod sim;

pub use agent::{AgentState, KinematicLimits};
pub use comms::{CodecKind, MapCodec, Message, NeighborRecord};
pub use error::{Error, Result};
pub use fusion::FusionParams;
pub use geom::Vec2;
pub use grid::{BinaryGrid, Grid, GridStack, RealGrid};
pub use mapgen::{MapGenConfig, NoiseLayer};
pub use sim::{EpisodeMetrics, SimConfig, TerminationCause};
