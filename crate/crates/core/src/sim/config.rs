use serde::{Deserialize, Serialize};

use crate::agent::KinematicLimits;
use crate::comms::CodecKind;
use crate::error::{Error, Result};
use crate::fusion::{FusionParams, NeighborBelief};
use crate::mapgen::{default_crop_radius, REFERENCE_SIZE};
use crate::policy::{BaselineParams, BaselinePolicy, RewardParams};
use crate::sensing::SensingMode;

/// Named starting points for a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// 512 px maps with the reference robot parameters.
    #[default]
    Full,
    /// 128 px maps with every pixel quantity scaled by a quarter.
    Desk,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Profile::Full),
            "desk" => Ok(Profile::Desk),
            _ => Err(Error::config(format!("unknown profile {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub agents: usize,
    /// Communicating neighbours per agent, `M`.
    pub max_neighbors: usize,
    pub size: usize,
    pub sensor_radius: f64,
    pub sensing: SensingMode,
    pub limits: KinematicLimits,
    pub difficulty: f64,
    /// Radius of the obstacle-free spawn clearing; `None` scales the
    /// reference 60 px to the map size.
    pub crop_radius: Option<f64>,
    pub beta: f64,
    pub binarize_threshold: f64,
    pub neighbor_belief: NeighborBelief,
    pub sigma: f64,
    pub codec: CodecKind,
    /// Steps between communication events.
    pub comm_freq: u64,
    pub macro_period: u64,
    pub coverage_target: f64,
    pub max_steps: u64,
    pub seed: u64,
    pub rewards: RewardParams,
    pub baseline: BaselineParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::full()
    }
}

impl SimConfig {
    pub fn full() -> Self {
        Self {
            agents: 10,
            max_neighbors: 3,
            size: REFERENCE_SIZE,
            sensor_radius: 30.0,
            sensing: SensingMode::Disk,
            limits: KinematicLimits::default(),
            difficulty: 0.1,
            crop_radius: None,
            beta: 0.8,
            binarize_threshold: 0.5,
            neighbor_belief: NeighborBelief::Soft,
            sigma: 0.0,
            codec: CodecKind::Identity,
            comm_freq: 1,
            macro_period: 50,
            coverage_target: 0.8,
            max_steps: 9000,
            seed: 0,
            rewards: RewardParams::default(),
            baseline: BaselineParams::scaled(1.0, KinematicLimits::default().col_rad),
        }
    }

    pub fn desk() -> Self {
        let factor = 128.0 / REFERENCE_SIZE as f64;
        let mut limits = KinematicLimits::default().scaled(factor);
        limits.col_rad = limits.col_rad.ceil();
        Self {
            size: 128,
            sensor_radius: 8.0,
            limits,
            rewards: RewardParams::default().scaled(factor),
            baseline: BaselineParams::scaled(factor, limits.col_rad),
            ..Self::full()
        }
    }

    pub fn profile(profile: Profile) -> Self {
        match profile {
            Profile::Full => Self::full(),
            Profile::Desk => Self::desk(),
        }
    }

    /// Parses TOML. An optional top-level `profile = "desk" | "full"` picks
    /// the base; every other key overrides it.
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| Error::config(format!("{e}")))?;
        let profile = match table.remove("profile") {
            None => Profile::Full,
            Some(toml::Value::String(s)) => s.parse()?,
            Some(v) => return Err(Error::config(format!("profile must be a string, got {v}"))),
        };
        let base = toml::Table::try_from(Self::profile(profile)).map_err(|e| Error::config(format!("{e}")))?;
        let merged = merge(base, table);
        let config: SimConfig = merged.try_into().map_err(|e| Error::config(format!("{e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("{e}")))
    }

    pub fn clearing_radius(&self) -> f64 {
        self.crop_radius.unwrap_or_else(|| default_crop_radius(self.size))
    }

    pub fn fusion(&self) -> FusionParams {
        FusionParams {
            beta: self.beta,
            binarize_threshold: self.binarize_threshold,
            neighbor_belief: self.neighbor_belief,
        }
    }

    /// Baseline controller with this configuration's macro period.
    pub fn baseline_policy(&self) -> BaselinePolicy {
        BaselinePolicy::new(BaselineParams {
            macro_period: self.macro_period,
            ..self.baseline
        })
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::config(msg));
        if self.agents == 0 {
            return fail("at least one agent is required".into());
        }
        if self.max_neighbors == 0 {
            return fail("max_neighbors must be at least 1".into());
        }
        if self.size < 8 {
            return fail(format!("map size {} is below 8", self.size));
        }
        if !(self.sensor_radius.is_finite() && self.sensor_radius > 0.0) {
            return fail(format!("sensor radius {} must be positive", self.sensor_radius));
        }
        if !self.limits.is_valid() {
            return fail(format!("kinematic limits {:?} must be positive", self.limits));
        }
        if !(0.0..=1.0).contains(&self.difficulty) {
            return fail(format!("difficulty {} outside [0, 1]", self.difficulty));
        }
        let c = self.clearing_radius();
        if !(c >= 0.0 && c < self.size as f64 / 2.0) {
            return fail(format!("clearing radius {c} must be below half the map size"));
        }
        self.fusion().validate()?;
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return fail(format!("sigma {} must be nonnegative", self.sigma));
        }
        if self.comm_freq == 0 || self.macro_period == 0 || self.max_steps == 0 {
            return fail("comm_freq, macro_period and max_steps must be at least 1".into());
        }
        if !(self.coverage_target > 0.0 && self.coverage_target <= 1.0) {
            return fail(format!("coverage target {} outside (0, 1]", self.coverage_target));
        }
        self.codec.build(self.size).map(|_| ())
    }
}

fn merge(mut base: toml::Table, overrides: toml::Table) -> toml::Table {
    for (k, v) in overrides {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => {
                let merged = merge(std::mem::take(b), o);
                *b = merged;
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
    base
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_defaults() {
        let c = SimConfig::default();
        assert_eq!((c.agents, c.max_neighbors, c.size), (10, 3, 512));
        assert_eq!(c.sensor_radius, 30.0);
        assert_eq!(
            c.limits,
            KinematicLimits {
                max_vel: 10.0,
                max_acc: 5.0,
                dt: 0.1,
                col_rad: 3.0
            }
        );
        assert_eq!((c.beta, c.comm_freq, c.macro_period, c.max_steps), (0.8, 1, 50, 9000));
        assert_eq!(c.coverage_target, 0.8);
        assert_eq!(c.clearing_radius(), 60.0);
        c.validate().unwrap();
    }

    #[test]
    fn desk_profile_scales_pixels() {
        let c = SimConfig::desk();
        assert_eq!((c.size, c.sensor_radius, c.clearing_radius()), (128, 8.0, 15.0));
        assert_eq!(c.limits.col_rad, 1.0);
        assert_eq!(c.limits.dt, 0.1);
        assert_eq!(c.rewards.near_waypoint_radius, 10.0);
        c.validate().unwrap();
    }

    #[test]
    fn toml_overrides_profile() {
        let c = SimConfig::from_toml(
            "profile = \"desk\"\nagents = 4\nbeta = 0.3\n[codec]\nkind = \"downsample\"\nfactor = 4\n[limits]\nmax_vel = 2.0\n",
        )
        .unwrap();
        assert_eq!(c.size, 128);
        assert_eq!(c.agents, 4);
        assert_eq!(c.codec, CodecKind::Downsample { factor: 4 });
        assert_eq!(c.limits.max_vel, 2.0);
        assert_eq!(c.limits.col_rad, 1.0);

        let back = SimConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);

        assert!(SimConfig::from_toml("agnets = 3").is_err());
        assert!(SimConfig::from_toml("beta = 1.5").is_err());
        assert!(SimConfig::from_toml("profile = \"huge\"").is_err());
        assert!(SimConfig::from_toml("[codec]\nkind = \"downsample\"\nfactor = 5\n").is_err());
    }
}
