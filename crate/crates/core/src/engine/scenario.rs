use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::guidance::{EvaderPolicy, InterceptConfig, LinkModel, SearchMode};
use crate::kinematics::{Pose, VehicleParams};
use crate::sensing::{Beacon, SensorRig};

fn default_dt() -> f64 {
    0.02
}

fn default_timeout() -> f64 {
    120.0
}

fn default_window() -> usize {
    1
}

/// A declarative experiment: two cars, their policies, and the clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_timeout")]
    pub timeout: f64,
    #[serde(default)]
    pub seed: u64,
    /// Half-extent of a square arena centred on the origin; 0 means unbounded.
    #[serde(default)]
    pub arena: f64,
    /// Overrides the sum of body radii as the capture distance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capture_radius: Option<f64>,
    pub leader: LeaderSpec,
    pub follower: FollowerSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeaderSpec {
    pub pose: Pose,
    #[serde(default)]
    pub vehicle: VehicleParams,
    pub policy: PolicySpec,
    #[serde(default)]
    pub beacon: Beacon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FollowerSpec {
    pub pose: Pose,
    #[serde(default)]
    pub vehicle: VehicleParams,
    pub policy: PolicySpec,
    #[serde(default)]
    pub rig: SensorRig,
}

/// Every registered policy and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    LightFollow {
        gain: f64,
        base_duty: f64,
        #[serde(default)]
        search: SearchMode,
    },
    TailChase {
        k_turn: f64,
        duty: f64,
    },
    DirectIntercept {
        duty: f64,
        k_turn: f64,
        #[serde(default = "default_window")]
        window: usize,
    },
    CommandGuided {
        duty: f64,
        k_turn: f64,
        #[serde(default = "default_window")]
        window: usize,
        latency_ticks: u64,
        drop_probability: f64,
    },
    Straight {
        duty: f64,
    },
    Zigzag {
        duty: f64,
        turn: f64,
        leg_time: f64,
    },
    Circle {
        duty: f64,
        turn: f64,
    },
    TurnAndRun {
        cruise_duty: f64,
        trigger_range: f64,
        run_duty: f64,
    },
    Human,
}

impl PolicySpec {
    pub const NAMES: [&'static str; 9] = [
        "light_follow",
        "tail_chase",
        "direct_intercept",
        "command_guided",
        "straight",
        "zigzag",
        "circle",
        "turn_and_run",
        "human",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::LightFollow { .. } => "light_follow",
            PolicySpec::TailChase { .. } => "tail_chase",
            PolicySpec::DirectIntercept { .. } => "direct_intercept",
            PolicySpec::CommandGuided { .. } => "command_guided",
            PolicySpec::Straight { .. } => "straight",
            PolicySpec::Zigzag { .. } => "zigzag",
            PolicySpec::Circle { .. } => "circle",
            PolicySpec::TurnAndRun { .. } => "turn_and_run",
            PolicySpec::Human => "human",
        }
    }

    /// Default parameters for a policy looked up by name.
    pub fn by_name(name: &str) -> Option<PolicySpec> {
        let intercept = InterceptConfig::default();
        Some(match name {
            "light_follow" => PolicySpec::default_follower(),
            "tail_chase" => PolicySpec::TailChase {
                k_turn: intercept.k_turn,
                duty: intercept.duty,
            },
            "direct_intercept" => PolicySpec::DirectIntercept {
                duty: intercept.duty,
                k_turn: intercept.k_turn,
                window: intercept.window,
            },
            "command_guided" => PolicySpec::CommandGuided {
                duty: intercept.duty,
                k_turn: intercept.k_turn,
                window: intercept.window,
                latency_ticks: 0,
                drop_probability: 0.0,
            },
            "straight" => PolicySpec::Straight { duty: 1.0 },
            "zigzag" => PolicySpec::default_zigzag(),
            "circle" => PolicySpec::Circle { duty: 0.5, turn: 0.25 },
            "turn_and_run" => PolicySpec::from(EvaderPolicy::turn_and_run()),
            "human" => PolicySpec::Human,
            _ => return None,
        })
    }

    /// The light-tracking follower as calibrated for the desk tests.
    pub fn default_follower() -> PolicySpec {
        PolicySpec::LightFollow {
            gain: 4.0,
            base_duty: 0.55,
            search: SearchMode::Stop,
        }
    }

    pub fn default_zigzag() -> PolicySpec {
        PolicySpec::Zigzag {
            duty: 0.4,
            turn: 0.1,
            leg_time: 1.6,
        }
    }

    pub fn evader(&self) -> Option<EvaderPolicy> {
        Some(match *self {
            PolicySpec::Straight { duty } => EvaderPolicy::Straight { duty },
            PolicySpec::Zigzag { duty, turn, leg_time } => EvaderPolicy::Zigzag { duty, turn, leg_time },
            PolicySpec::Circle { duty, turn } => EvaderPolicy::Circle { duty, turn },
            PolicySpec::TurnAndRun {
                cruise_duty,
                trigger_range,
                run_duty,
            } => EvaderPolicy::TurnAndRun {
                cruise_duty,
                trigger_range,
                run_duty,
            },
            _ => return None,
        })
    }

    pub fn link(&self) -> Option<LinkModel> {
        match *self {
            PolicySpec::CommandGuided {
                latency_ticks,
                drop_probability,
                ..
            } => Some(LinkModel {
                latency_ticks,
                drop_probability,
            }),
            _ => None,
        }
    }

    fn validate(&self, role: &str) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidScenario(format!("{role} policy {}: {what}", self.name())));
        let finite_all = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match *self {
            PolicySpec::LightFollow { gain, base_duty, .. } => {
                if !finite_all(&[gain, base_duty]) || !(0.0..=1.0).contains(&base_duty) {
                    return bad("base_duty must lie in [0, 1]");
                }
            }
            PolicySpec::TailChase { k_turn, duty } | PolicySpec::DirectIntercept { k_turn, duty, .. } => {
                if !finite_all(&[k_turn, duty]) || !(0.0..=1.0).contains(&duty) {
                    return bad("duty must lie in [0, 1]");
                }
            }
            PolicySpec::CommandGuided { k_turn, duty, .. } => {
                if !finite_all(&[k_turn, duty]) || !(0.0..=1.0).contains(&duty) {
                    return bad("duty must lie in [0, 1]");
                }
                if let Some(link) = self.link() {
                    link.validate()?;
                }
            }
            PolicySpec::Zigzag { duty, turn, leg_time } => {
                if !finite_all(&[duty, turn, leg_time]) || leg_time <= 0.0 {
                    return bad("leg_time must be positive");
                }
            }
            PolicySpec::Straight { duty } => {
                if !duty.is_finite() {
                    return bad("duty must be finite");
                }
            }
            PolicySpec::Circle { duty, turn } => {
                if !finite_all(&[duty, turn]) {
                    return bad("parameters must be finite");
                }
            }
            PolicySpec::TurnAndRun {
                cruise_duty,
                trigger_range,
                run_duty,
            } => {
                if !finite_all(&[cruise_duty, trigger_range, run_duty]) || trigger_range < 0.0 {
                    return bad("trigger_range must be >= 0");
                }
            }
            PolicySpec::Human => {}
        }
        Ok(())
    }
}

impl From<EvaderPolicy> for PolicySpec {
    fn from(p: EvaderPolicy) -> Self {
        match p {
            EvaderPolicy::Straight { duty } => PolicySpec::Straight { duty },
            EvaderPolicy::Zigzag { duty, turn, leg_time } => PolicySpec::Zigzag { duty, turn, leg_time },
            EvaderPolicy::Circle { duty, turn } => PolicySpec::Circle { duty, turn },
            EvaderPolicy::TurnAndRun {
                cruise_duty,
                trigger_range,
                run_duty,
            } => PolicySpec::TurnAndRun {
                cruise_duty,
                trigger_range,
                run_duty,
            },
        }
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Scenario> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| Error::InvalidScenario(e.message().to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Fails only for seeds above `i64::MAX`, which TOML integers cannot hold.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::InvalidScenario(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidScenario("dt must be positive".into()));
        }
        if !(self.timeout.is_finite() && self.timeout > self.dt) {
            return Err(Error::InvalidScenario("timeout must exceed dt".into()));
        }
        if !(self.arena.is_finite() && self.arena >= 0.0) {
            return Err(Error::InvalidScenario("arena must be >= 0".into()));
        }
        if let Some(r) = self.capture_radius {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::InvalidScenario("capture_radius must be >= 0".into()));
            }
        }
        for (role, pose) in [("leader", &self.leader.pose), ("follower", &self.follower.pose)] {
            if !pose.is_finite() {
                return Err(Error::InvalidScenario(format!("{role} pose must be finite")));
            }
        }
        self.leader.vehicle.validate()?;
        self.follower.vehicle.validate()?;
        self.leader.beacon.validate()?;
        self.follower.rig.validate()?;
        self.leader.policy.validate("leader")?;
        self.follower.policy.validate("follower")?;
        if matches!(self.leader.policy, PolicySpec::LightFollow { .. }) {
            return Err(Error::InvalidScenario("only the follower carries photocells".into()));
        }
        if matches!(self.follower.policy, PolicySpec::Human) {
            return Err(Error::InvalidScenario("only the leader can be human-driven".into()));
        }
        Ok(())
    }

    pub fn capture_distance(&self) -> f64 {
        self.capture_radius
            .unwrap_or(self.leader.vehicle.body_radius + self.follower.vehicle.body_radius)
    }

    /// Number of ticks before the episode times out.
    pub fn max_ticks(&self) -> u64 {
        (self.timeout / self.dt - 1e-9).ceil() as u64
    }

    /// SHA-256 of the canonical JSON encoding, hex.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("scenario serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Put the follower `distance` metres behind the leader on its axis, same heading.
    pub fn with_follower_behind(mut self, distance: f64) -> Scenario {
        let leader = self.leader.pose;
        let pos = leader.position - leader.forward() * distance;
        self.follower.pose = Pose {
            position: pos,
            heading: leader.heading,
        };
        self
    }
}
