//! Wire messages. Every frame is one JSON object carrying `v` and `type`.

use serde::{Deserialize, Serialize};

use pursuit_core::engine::{EpisodeResult, Outcome, TickRecord, World};
use pursuit_core::guidance::{DriveInput, ModeTag};
use pursuit_core::kinematics::{Pose, WheelCommand};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InboundMsg {
    Drive { drive: DriveInput },
    SetPolicy { policy_name: String },
    Reset,
    SelectScenario { scenario_name: String },
}

impl InboundMsg {
    /// Parse one text frame, checking the version and payload ranges.
    pub fn parse(text: &str) -> Result<InboundMsg, String> {
        let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| format!("not JSON: {e}"))?;
        let obj = value.as_object_mut().ok_or("frame must be a JSON object")?;
        match obj.remove("v").and_then(|v| v.as_u64()) {
            Some(v) if v == PROTOCOL_VERSION as u64 => {}
            Some(v) => return Err(format!("unsupported protocol version {v}")),
            None => return Err("missing numeric field `v`".into()),
        }
        let msg: InboundMsg = serde_json::from_value(value).map_err(|e| e.to_string())?;
        if let InboundMsg::Drive { drive } = &msg {
            for (name, x) in [("throttle", drive.throttle), ("steer", drive.steer)] {
                if !(-1.0..=1.0).contains(&x) {
                    return Err(format!("{name} must lie in [-1, 1]"));
                }
            }
        }
        Ok(msg)
    }

    pub fn to_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("inbound messages serialize");
        value
            .as_object_mut()
            .expect("tagged enum is an object")
            .insert("v".into(), PROTOCOL_VERSION.into());
        value.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Leader,
    Follower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleView {
    pub role: Role,
    pub pose: Pose,
    /// What the policy asked for.
    pub command: WheelCommand,
    /// What reached the wheels after handicaps.
    pub applied: WheelCommand,
    pub mode_tag: ModeTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorView {
    pub fused: f64,
    pub differentiable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OutboundMsg {
    State {
        v: u32,
        /// Increments on every reset or scenario change.
        episode: u64,
        /// Ticks elapsed in this episode; the poses are at `tick * dt`.
        tick: u64,
        time: f64,
        vehicles: Vec<VehicleView>,
        sensor: Option<SensorView>,
        separation: f64,
        events: Vec<Outcome>,
    },
    Event {
        v: u32,
        episode: u64,
        tick: u64,
        event: Outcome,
        result: EpisodeResult,
    },
    Catalog {
        v: u32,
        scenarios: Vec<String>,
        policies: Vec<String>,
        current_scenario: String,
        follower_policy: String,
    },
    Error {
        v: u32,
        message: String,
    },
}

impl OutboundMsg {
    pub fn error(message: impl Into<String>) -> OutboundMsg {
        OutboundMsg::Error {
            v: PROTOCOL_VERSION,
            message: message.into(),
        }
    }

    /// State after a tick, built from its record.
    pub fn from_record(episode: u64, rec: &TickRecord) -> OutboundMsg {
        let view = |role, pose, cmd: &pursuit_core::guidance::GuidanceCommand, applied| VehicleView {
            role,
            pose,
            command: cmd.wheel,
            applied,
            mode_tag: cmd.mode_tag,
        };
        OutboundMsg::State {
            v: PROTOCOL_VERSION,
            episode,
            tick: rec.tick + 1,
            time: rec.time,
            vehicles: vec![
                view(
                    Role::Leader,
                    rec.act.leader.pose,
                    &rec.decide.leader,
                    rec.act.leader.applied,
                ),
                view(
                    Role::Follower,
                    rec.act.follower.pose,
                    &rec.decide.follower,
                    rec.act.follower.applied,
                ),
            ],
            sensor: rec.sense.reading.map(|r| SensorView {
                fused: r.fused,
                differentiable: r.differentiable,
            }),
            separation: rec.separation,
            events: rec.event.into_iter().collect(),
        }
    }

    /// State of a world that has not stepped since its last record (e.g. on connect).
    pub fn snapshot(episode: u64, world: &World, last: Option<&TickRecord>) -> OutboundMsg {
        if let Some(rec) = last {
            return OutboundMsg::from_record(episode, rec);
        }
        let s = world.scenario();
        let idle = |role, pose: Pose, tag| VehicleView {
            role,
            pose,
            command: WheelCommand::STOP,
            applied: WheelCommand::STOP,
            mode_tag: tag,
        };
        OutboundMsg::State {
            v: PROTOCOL_VERSION,
            episode,
            tick: world.tick(),
            time: world.time(),
            vehicles: vec![
                idle(Role::Leader, world.leader().pose, mode_of(&s.leader.policy)),
                idle(Role::Follower, world.follower().pose, mode_of(&s.follower.policy)),
            ],
            sensor: None,
            separation: world.separation(),
            events: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("outbound messages serialize")
    }
}

fn mode_of(spec: &pursuit_core::engine::PolicySpec) -> ModeTag {
    use pursuit_core::engine::PolicySpec as P;
    match spec {
        P::LightFollow { .. } => ModeTag::LightFollow,
        P::TailChase { .. } => ModeTag::TailChase,
        P::DirectIntercept { .. } => ModeTag::DirectIntercept,
        P::CommandGuided { .. } => ModeTag::CommandGuided,
        P::Human => ModeTag::Human,
        _ => ModeTag::Scripted,
    }
}
