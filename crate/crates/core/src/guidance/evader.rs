//! Scripted leader behaviours and the human drive mixer.

use serde::{Deserialize, Serialize};

use super::{GuidanceCommand, ModeTag};
use crate::kinematics::{wrap_angle, Vec2, VehicleParams, VehicleState, WheelCommand};
use crate::sensing::DETECTION_RANGE;

/// Seconds without a drive message before the human-driven leader is stopped.
pub const DEADMAN_SECS: f64 = 0.5;

/// Heading error (rad) at which a turn-around counts as complete.
const TURN_DONE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvaderPolicy {
    Straight {
        duty: f64,
    },
    /// Alternating left and right turns of `leg_time` seconds, left first.
    Zigzag {
        duty: f64,
        turn: f64,
        leg_time: f64,
    },
    Circle {
        duty: f64,
        turn: f64,
    },
    /// Cruise until the pursuer closes within `trigger_range`, turn at the
    /// tightest allowed radius until pointing directly away from it, then
    /// flee straight at `run_duty`.
    TurnAndRun {
        cruise_duty: f64,
        trigger_range: f64,
        run_duty: f64,
    },
}

impl EvaderPolicy {
    pub fn turn_and_run() -> Self {
        EvaderPolicy::TurnAndRun {
            cruise_duty: 0.5,
            trigger_range: 2.0 * DETECTION_RANGE,
            run_duty: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnPhase {
    #[default]
    Cruise,
    Turn,
    Run,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvaderState {
    pub phase: TurnPhase,
    pub target_heading: f64,
}

/// Tightest turn the vehicle may make, outer wheel at full duty.
fn tightest_turn(left_turn: bool, params: &VehicleParams) -> WheelCommand {
    let r = params.min_turn_radius;
    let inner = if r > 0.0 {
        (2.0 * r - params.track_width) / (2.0 * r + params.track_width)
    } else {
        -1.0
    };
    if left_turn {
        WheelCommand::new(inner, 1.0)
    } else {
        WheelCommand::new(1.0, inner)
    }
}

pub fn evader(
    policy: &EvaderPolicy,
    state: &mut EvaderState,
    me: &VehicleState,
    pursuer: Vec2,
    tick: u64,
    dt: f64,
    params: &VehicleParams,
) -> GuidanceCommand {
    let wheel = match *policy {
        EvaderPolicy::Straight { duty } => WheelCommand::straight(duty),
        EvaderPolicy::Zigzag { duty, turn, leg_time } => {
            let leg_ticks = ((leg_time / dt).round() as u64).max(1);
            if (tick / leg_ticks).is_multiple_of(2) {
                WheelCommand::new(duty - turn, duty + turn)
            } else {
                WheelCommand::new(duty + turn, duty - turn)
            }
        }
        EvaderPolicy::Circle { duty, turn } => WheelCommand::new(duty - turn, duty + turn),
        EvaderPolicy::TurnAndRun {
            cruise_duty,
            trigger_range,
            run_duty,
        } => {
            let away = me.pose.position - pursuer;
            if state.phase == TurnPhase::Cruise && away.norm() <= trigger_range {
                state.target_heading = away.angle();
                state.phase = TurnPhase::Turn;
            }
            if state.phase == TurnPhase::Turn {
                let err = wrap_angle(state.target_heading - me.pose.heading);
                if err.abs() <= TURN_DONE {
                    state.phase = TurnPhase::Run;
                } else {
                    return GuidanceCommand::new(tightest_turn(err > 0.0, params), ModeTag::Scripted);
                }
            }
            match state.phase {
                TurnPhase::Run => WheelCommand::straight(run_duty),
                _ => WheelCommand::straight(cruise_duty),
            }
        }
    };
    GuidanceCommand::new(wheel, ModeTag::Scripted)
}

/// Throttle/steer pair from a human controller; steer positive turns left.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveInput {
    pub throttle: f64,
    pub steer: f64,
}

pub fn drive_mix(input: DriveInput) -> WheelCommand {
    let throttle = input.throttle.clamp(-1.0, 1.0);
    let steer = input.steer.clamp(-1.0, 1.0);
    WheelCommand::new(throttle - steer, throttle + steer)
}

/// Latest human command with a dead-man timeout.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HumanState {
    pub current: WheelCommand,
    pub last_input_tick: Option<u64>,
}

impl HumanState {
    pub fn update(&mut self, input: Option<DriveInput>, tick: u64, dt: f64) -> GuidanceCommand {
        if let Some(input) = input {
            self.current = drive_mix(input);
            self.last_input_tick = Some(tick);
        }
        let window = (DEADMAN_SECS / dt).round() as u64;
        let stale = match self.last_input_tick {
            Some(t) => tick - t > window,
            None => true,
        };
        if stale {
            self.current = WheelCommand::STOP;
        }
        GuidanceCommand::new(self.current, ModeTag::Human)
    }
}
