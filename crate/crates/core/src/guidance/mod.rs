//! Pursuit and evasion policies.
//!
//! Every policy maps its inputs (plus any explicit state it is handed) to a
//! [`GuidanceCommand`]. Handicaps are not applied here; the engine applies
//! them to whatever a policy asks for.

mod evader;
mod intercept;
mod link;

pub use evader::{drive_mix, evader, DriveInput, EvaderPolicy, EvaderState, HumanState, TurnPhase, DEADMAN_SECS};
pub use intercept::{
    direct_intercept, intercept_solve, DirectInterceptGuide, InterceptConfig, InterceptSolution, TrackReport,
    VelocityEstimator,
};
pub use link::{Channel, CommandGuidance, LinkActivity, LinkModel};

use serde::{Deserialize, Serialize};

use crate::kinematics::{relative_bearing, Pose, Vec2, VehicleParams, WheelCommand};
use crate::sensing::SensorReading;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ModeTag {
    LightFollow,
    TailChase,
    DirectIntercept,
    CommandGuided,
    Scripted,
    Human,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceCommand {
    pub wheel: WheelCommand,
    pub mode_tag: ModeTag,
    /// Set when direct intercept had no solution and chased the target instead.
    #[serde(default)]
    pub fallback: bool,
}

impl GuidanceCommand {
    pub fn new(wheel: WheelCommand, mode_tag: ModeTag) -> Self {
        Self {
            wheel: WheelCommand::new(wheel.left, wheel.right),
            mode_tag,
            fallback: false,
        }
    }

    pub fn stop(mode_tag: ModeTag) -> Self {
        Self::new(WheelCommand::STOP, mode_tag)
    }
}

/// What the follower does when neither cell sees the beacon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Keep driving straight at the base duty.
    Crawl,
    #[default]
    Stop,
}

/// Steer on the divider reading: turn toward the brighter cell, drive
/// straight when lit but balanced, search when blind.
pub fn light_follow(reading: &SensorReading, gain: f64, base_duty: f64, search: SearchMode) -> GuidanceCommand {
    if !reading.lit {
        let duty = match search {
            SearchMode::Crawl => base_duty,
            SearchMode::Stop => 0.0,
        };
        return GuidanceCommand::new(WheelCommand::straight(duty), ModeTag::LightFollow);
    }
    if !reading.differentiable {
        return GuidanceCommand::new(WheelCommand::straight(base_duty), ModeTag::LightFollow);
    }
    let s = reading.steer_signal();
    GuidanceCommand::new(
        WheelCommand::new(base_duty - gain * s, base_duty + gain * s),
        ModeTag::LightFollow,
    )
}

/// Largest yaw rate the drivetrain can produce (wheels at opposite full duty).
pub fn max_yaw_rate(params: &VehicleParams) -> f64 {
    2.0 * params.max_wheel_speed / params.track_width
}

/// Split a yaw-rate request into wheel duties about `duty`.
pub fn yaw_to_wheels(yaw_rate: f64, duty: f64, params: &VehicleParams) -> WheelCommand {
    let half_diff = yaw_rate * params.track_width / (2.0 * params.max_wheel_speed);
    WheelCommand::new(duty - half_diff, duty + half_diff)
}

/// Pure pursuit: yaw rate proportional to the bearing of the target's current position.
pub fn tail_chase(
    self_pose: &Pose,
    target_pos: Vec2,
    k_turn: f64,
    duty: f64,
    params: &VehicleParams,
) -> GuidanceCommand {
    let bearing = relative_bearing(self_pose, target_pos);
    let limit = max_yaw_rate(params);
    let yaw = (k_turn * bearing).clamp(-limit, limit);
    GuidanceCommand::new(yaw_to_wheels(yaw, duty, params), ModeTag::TailChase)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn reading(fused: f64, dead_band: f64) -> SensorReading {
        SensorReading {
            fused,
            e_left: 0.0,
            e_right: 0.0,
            differentiable: (fused - 0.5).abs() >= dead_band,
            lit: true,
        }
    }

    #[test]
    fn balanced_divider_goes_straight() {
        let c = light_follow(&reading(0.5, 0.0), 2.0, 0.6, SearchMode::Crawl);
        assert_eq!(c.wheel, WheelCommand::new(0.6, 0.6));
    }

    #[test]
    fn left_brighter_turns_left() {
        let c = light_follow(&reading(0.4, 0.02), 2.0, 0.6, SearchMode::Crawl);
        assert!((c.wheel.left - 0.4).abs() < 1e-12);
        assert!((c.wheel.right - 0.8).abs() < 1e-12);
    }

    #[test]
    fn balanced_but_lit_drives_straight() {
        let r = reading(0.51, 0.02);
        assert_eq!(
            light_follow(&r, 2.0, 0.6, SearchMode::Stop).wheel,
            WheelCommand::new(0.6, 0.6)
        );
    }

    #[test]
    fn blind_rig_searches() {
        let r = SensorReading {
            lit: false,
            ..reading(0.3, 0.02)
        };
        assert_eq!(
            light_follow(&r, 2.0, 0.6, SearchMode::Crawl).wheel,
            WheelCommand::new(0.6, 0.6)
        );
        assert_eq!(light_follow(&r, 2.0, 0.6, SearchMode::Stop).wheel, WheelCommand::STOP);
    }

    #[test]
    fn tail_chase_conventions() {
        let p = VehicleParams::default();
        let o = Pose::new(0.0, 0.0, 0.0);
        let ahead = tail_chase(&o, Vec2::new(1.0, 0.0), 4.0, 0.7, &p);
        assert_eq!(ahead.wheel.left, ahead.wheel.right);
        let left = tail_chase(&o, Vec2::from_polar(1.0, FRAC_PI_2), 4.0, 0.7, &p);
        assert!(left.wheel.right > left.wheel.left);
        let right = tail_chase(&o, Vec2::new(0.0, -1.0), 4.0, 0.7, &p);
        assert!(right.wheel.left > right.wheel.right);
    }

    #[test]
    fn tail_chase_saturates_near_25_degrees() {
        let p = VehicleParams::default();
        let o = Pose::new(0.0, 0.0, 0.0);
        let at = |deg: f64| tail_chase(&o, Vec2::from_polar(1.0, deg.to_radians()), 4.0, 0.7, &p).wheel;
        assert!(at(20.0).right < 1.0);
        assert_eq!(at(30.0).right, 1.0);
    }
}
