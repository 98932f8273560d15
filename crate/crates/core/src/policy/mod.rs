//! Two-level decision making: waypoint selection every macro step and an
//! acceleration command every step.
//!
//! [`Policy`] is the plug-in point for controllers. [`BaselinePolicy`]
//! combines frontier waypoints with a path-following reactive controller.
//! Observation builders and reward evaluators are exposed separately for
//! external learners.

mod baseline;
mod frontier;
mod observation;
mod planner;
mod reactive;
mod record;
mod reward;

pub use baseline::{BaselineParams, BaselinePolicy, WaypointSchedule};
pub use frontier::{
    frontier_cells, frontier_clusters, frontier_waypoint, frontier_waypoint_with, nearest_frontier, random_free_cell,
    FrontierCluster, FrontierParams,
};
pub use observation::{
    build_exp_observation, build_nav_observation, nav_crop_radius, nav_crop_side, pose_block, ExpObservation,
    NavObservation, EXP_OBS_SCHEMA, NAV_CROP_DILATION, NAV_OBS_SCHEMA,
};
pub use planner::DistanceField;
pub use reactive::{reactive_navigate, ReactiveInput, ReactiveParams};
pub use record::{read_transition, write_transition, Transition};
pub use reward::{
    exploration_reward, navigation_reward, predicted_collision_penalty, ExpProgress, ExpReward, NavReward, NavScene,
    NavSnapshot, RewardParams,
};

use crate::agent::{AgentState, KinematicLimits};
use crate::comms::NeighborRecord;
use crate::geom::Vec2;
use crate::rng::SimRng;

/// What a policy sees of one agent at one step.
#[derive(Debug, Clone, Copy)]
pub struct AgentView<'a> {
    pub agent: &'a AgentState,
    /// Exactly `M` records, real or virtual, from this step's neighbour selection.
    pub neighbors: &'a [NeighborRecord],
    pub limits: &'a KinematicLimits,
    pub step: u64,
}

impl AgentView<'_> {
    /// Targets announced by real neighbours.
    pub fn neighbor_targets(&self) -> Vec<Vec2> {
        self.neighbors
            .iter()
            .filter(|n| !n.is_virtual())
            .map(|n| n.target)
            .collect()
    }
}

/// A policy instance drives every agent of one episode and may keep
/// per-agent memory keyed by agent id.
pub trait Policy: Send {
    fn name(&self) -> &str;

    /// Steps between scheduled waypoint refreshes.
    fn macro_period(&self) -> u64;

    /// Asks for an unscheduled waypoint refresh, e.g. on arrival.
    fn wants_waypoint(&mut self, _view: &AgentView) -> bool {
        false
    }

    fn select_waypoint(&mut self, view: &AgentView, rng: &mut SimRng) -> Vec2;

    /// Desired acceleration; the simulator clips it to `max_acc`.
    fn navigate(&mut self, view: &AgentView) -> Vec2;
}
