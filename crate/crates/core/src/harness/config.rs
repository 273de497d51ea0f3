//! Declarative scenario description, loaded from JSON.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{BurstModel, RadioLinkModel};
use crate::control::ControllerParams;
use crate::geometry::{Point, Pose, Segment};
use crate::mac::frame::BROADCAST;
use crate::mac::{LoopSpec, ProtocolConstants};
use crate::plant::RobotParams;
use crate::sim::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    RemoteControl,
    LeaderFollower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    /// Stand-alone path controller (remote control).
    Controller,
    Robot,
    /// Robot that also hosts the path controller (platooning).
    Leader,
    Follower,
    Relay,
}

impl Role {
    pub fn is_robot(self) -> bool {
        matches!(self, Role::Robot | Role::Leader | Role::Follower)
    }

    pub fn hosts_controller(self) -> bool {
        matches!(self, Role::Controller | Role::Leader)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeConfig {
    pub id: NodeId,
    pub role: Role,
    #[serde(default)]
    pub robot: RobotParams,
    #[serde(default)]
    pub start: Pose,
    #[serde(default)]
    pub path: Vec<Point>,
    /// Relay nodes that overhear and re-flood this robot's traffic.
    #[serde(default)]
    pub relays: Vec<NodeId>,
}

/// Either one erasure probability for every channel or one per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerSpec {
    Uniform(f64),
    PerChannel(Vec<f64>),
}

impl PerSpec {
    pub fn expand(&self, channels: usize) -> Vec<f64> {
        match self {
            PerSpec::Uniform(p) => vec![*p; channels],
            PerSpec::PerChannel(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub from: NodeId,
    pub to: NodeId,
    pub per: PerSpec,
    #[serde(default)]
    pub burst: Option<BurstModel>,
    /// Also applies the same model to `to -> from`.
    #[serde(default)]
    pub symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ChannelConfig {
    /// Erasure probability for node pairs without an explicit link.
    pub default_per: Option<f64>,
    pub links: Vec<LinkConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleConfig {
    pub a: Point,
    pub b: Point,
    /// Absent means present from the start.
    #[serde(default)]
    pub appear_at_us: Option<u64>,
}

impl ObstacleConfig {
    pub fn segment(&self) -> Segment {
        Segment::new(self.a, self.b)
    }
}

/// Drops a wall across a robot's heading at a given time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleInjection {
    pub at_us: u64,
    pub robot: NodeId,
    pub distance_m: f64,
    #[serde(default = "default_half_width")]
    pub half_width_m: f64,
}

fn default_half_width() -> f64 {
    0.2
}

/// Suppresses every sync beacon at `node` for `cycles` cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeaconBlackout {
    pub node: NodeId,
    pub from_cycle: u64,
    pub cycles: u64,
}

impl BeaconBlackout {
    pub fn covers(&self, node: NodeId, cycle: u64) -> bool {
        node == self.node && cycle >= self.from_cycle && cycle < self.from_cycle + self.cycles
    }
}

fn default_max_time() -> f64 {
    120.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub kind: ScenarioKind,
    pub seed: u64,
    pub nodes: Vec<NodeConfig>,
    #[serde(default)]
    pub obstacles: Vec<ObstacleConfig>,
    #[serde(default)]
    pub injections: Vec<ObstacleInjection>,
    #[serde(default)]
    pub blackouts: Vec<BeaconBlackout>,
    #[serde(default)]
    pub protocol: ProtocolConstants,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub controller: ControllerParams,
    #[serde(default = "default_max_time")]
    pub max_time_s: f64,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeConfig> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn controller_node(&self) -> NodeId {
        self.nodes
            .iter()
            .find(|n| n.role.hosts_controller())
            .map(|n| n.id)
            .expect("validated config has a controller")
    }

    pub fn robots(&self) -> impl Iterator<Item = &NodeConfig> {
        self.nodes.iter().filter(|n| n.role.is_robot())
    }

    /// One control loop per robot reached over the air.
    pub fn loops(&self) -> Vec<LoopSpec> {
        let controller = self.controller_node();
        self.robots()
            .filter(|r| r.id != controller)
            .map(|r| LoopSpec {
                id: u16::from(r.id),
                controller,
                plant: r.id,
                relays: r.relays.clone(),
            })
            .collect()
    }

    pub fn max_time_us(&self) -> u64 {
        (self.max_time_s * 1e6).round() as u64
    }

    /// Link models for every ordered pair of nodes, explicit links first,
    /// then `default_per` for the rest.
    pub fn link_models(&self) -> Result<Vec<RadioLinkModel>, ConfigError> {
        let channels = self.protocol.hop_channels;
        let mut models: BTreeMap<(NodeId, NodeId), RadioLinkModel> = BTreeMap::new();
        for l in &self.channel.links {
            let per = l.per.expand(channels);
            let mut add = |from, to| {
                models.insert(
                    (from, to),
                    RadioLinkModel {
                        from,
                        to,
                        per_channel_per: per.clone(),
                        burst: l.burst,
                    },
                );
            };
            add(l.from, l.to);
            if l.symmetric {
                add(l.to, l.from);
            }
        }
        for a in &self.nodes {
            for b in &self.nodes {
                if a.id == b.id || models.contains_key(&(a.id, b.id)) {
                    continue;
                }
                match self.channel.default_per {
                    Some(p) => {
                        models.insert((a.id, b.id), RadioLinkModel::uniform(a.id, b.id, p, channels));
                    }
                    None => {
                        return invalid(format!(
                            "no link model for {} -> {} and no default_per",
                            a.id, b.id
                        ))
                    }
                }
            }
        }
        Ok(models.into_values().collect())
    }

    /// Sets every link (and the default) to one uniform erasure probability.
    pub fn with_uniform_per(mut self, per: f64) -> Self {
        self.channel.default_per = Some(per);
        for l in &mut self.channel.links {
            l.per = PerSpec::Uniform(per);
            l.burst = None;
        }
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut ids = BTreeSet::new();
        for n in &self.nodes {
            if n.id == BROADCAST {
                return invalid(format!("node id {BROADCAST} is reserved for broadcast"));
            }
            if !ids.insert(n.id) {
                return invalid(format!("duplicate node id {}", n.id));
            }
        }
        let known = |id: NodeId| ids.contains(&id);
        let count = |role: Role| self.nodes.iter().filter(|n| n.role == role).count();
        let hosts = self.nodes.iter().filter(|n| n.role.hosts_controller()).count();
        if hosts != 1 {
            return invalid(format!("exactly one controller is required, found {hosts}"));
        }
        match self.kind {
            ScenarioKind::RemoteControl => {
                if count(Role::Controller) != 1 || count(Role::Robot) == 0 {
                    return invalid("remote-control needs one controller and at least one robot");
                }
                if count(Role::Leader) + count(Role::Follower) > 0 {
                    return invalid("remote-control does not use leader/follower roles");
                }
            }
            ScenarioKind::LeaderFollower => {
                if count(Role::Leader) != 1 || count(Role::Follower) != 1 || count(Role::Robot) > 0 {
                    return invalid("leader-follower needs exactly one leader and one follower robot");
                }
            }
        }
        for n in &self.nodes {
            if n.role.is_robot() {
                n.robot
                    .validate()
                    .map_err(|e| ConfigError::Invalid(format!("robot {}: {e}", n.id)))?;
            }
            if matches!(n.role, Role::Robot | Role::Leader) && n.path.is_empty() {
                return invalid(format!("robot {} has no reference path", n.id));
            }
            for &r in &n.relays {
                match self.node(r) {
                    None => return invalid(format!("robot {} lists unknown relay {r}", n.id)),
                    Some(rc) if rc.role != Role::Relay => {
                        return invalid(format!("node {r} listed as relay has role {:?}", rc.role))
                    }
                    _ => {}
                }
            }
        }
        for l in &self.channel.links {
            if !known(l.from) || !known(l.to) {
                return invalid(format!("link {} -> {} references an unknown node", l.from, l.to));
            }
            if l.from == l.to {
                return invalid(format!("link {} -> {} is a self loop", l.from, l.to));
            }
            let per = l.per.expand(self.protocol.hop_channels);
            if per.len() != self.protocol.hop_channels {
                return invalid(format!(
                    "link {} -> {} needs {} per-channel values",
                    l.from, l.to, self.protocol.hop_channels
                ));
            }
            if per.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return invalid(format!("link {} -> {} has per outside [0, 1]", l.from, l.to));
            }
        }
        if let Some(p) = self.channel.default_per {
            if !(0.0..=1.0).contains(&p) {
                return invalid("default_per outside [0, 1]");
            }
        }
        for inj in &self.injections {
            if !self.node(inj.robot).is_some_and(|n| n.role.is_robot()) {
                return invalid(format!("injection targets unknown robot {}", inj.robot));
            }
        }
        for b in &self.blackouts {
            if !known(b.node) {
                return invalid(format!("blackout references unknown node {}", b.node));
            }
        }
        let p = &self.protocol;
        if p.hop_channels == 0 || p.hop_channels > 64 {
            return invalid("hop_channels must be in 1..=64");
        }
        let airtime = p.phy.airtime_us();
        if p.slot_duration_us < airtime {
            return invalid(format!(
                "slot_duration_us {} shorter than airtime {airtime}",
                p.slot_duration_us
            ));
        }
        if p.sync.max_waves == 0 || u64::from(p.sync.max_waves) * airtime > p.slot_duration_us {
            return invalid("sync waves must be >= 1 and fit in one slot");
        }
        if p.sync.desync_after == 0 || p.sync.jitter_us < 0.0 || p.sync.max_drift_ppm < 0.0 {
            return invalid("sync parameters out of range");
        }
        let c = &self.controller;
        if !(c.tolerance_m > 0.0 && c.v_nom_mms > 0.0 && c.kappa_max > 0.0 && c.k_slow > 0.0) {
            return invalid("controller tolerance, speed, kappa_max and k_slow must be positive");
        }
        if self.max_time_s.is_nan() || self.max_time_s <= 0.0 {
            return invalid("max_time_s must be positive");
        }
        self.link_models()?;
        Ok(())
    }
}
