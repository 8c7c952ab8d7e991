//! Planar differential-drive model.
//!
//! Wheel commands are normalized duties in `[-1, 1]`; a duty of 1 drives the
//! wheel surface at `max_wheel_speed`. Poses are advanced with the exact arc
//! solution for constant wheel speeds, so results do not depend on how a
//! constant command is split across ticks.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this yaw increment per step the straight-line branch is used.
const STRAIGHT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(length: f64, angle: f64) -> Self {
        Self::new(length * angle.cos(), length * angle.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Rotate counterclockwise by `angle` radians.
    pub fn rotated(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub position: Vec2,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            position: Vec2::new(x, y),
            heading: wrap_angle(heading),
        }
    }

    pub fn forward(&self) -> Vec2 {
        Vec2::from_polar(1.0, self.heading)
    }

    /// Transform a body-frame offset into world coordinates.
    pub fn to_world(&self, body: Vec2) -> Vec2 {
        self.position + body.rotated(self.heading)
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.heading.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleParams {
    /// Distance between the driven wheels (m).
    pub track_width: f64,
    /// Collision radius of the body (m).
    pub body_radius: f64,
    /// Wheel surface speed at full duty (m/s).
    pub max_wheel_speed: f64,
    /// Software cap on |duty|, in `[0, 1]`.
    pub speed_cap_fraction: f64,
    /// Software floor on the turning radius (m); 0 leaves turning unconstrained.
    pub min_turn_radius: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            track_width: 0.10,
            body_radius: 0.06,
            max_wheel_speed: 0.30,
            speed_cap_fraction: 1.0,
            min_turn_radius: 0.0,
        }
    }
}

impl VehicleParams {
    /// The leader handicap used for the desk tests: half speed, 0.2 m turns.
    pub fn handicapped() -> Self {
        Self {
            speed_cap_fraction: 0.5,
            min_turn_radius: 0.2,
            ..Self::default()
        }
    }

    /// Top forward speed after the speed cap (m/s).
    pub fn top_speed(&self) -> f64 {
        self.speed_cap_fraction * self.max_wheel_speed
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.track_width,
            self.body_radius,
            self.max_wheel_speed,
            self.speed_cap_fraction,
            self.min_turn_radius,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidScenario("vehicle parameters must be finite".into()));
        }
        if self.track_width <= 0.0 || self.body_radius <= 0.0 || self.max_wheel_speed <= 0.0 {
            return Err(Error::InvalidScenario(
                "track_width, body_radius and max_wheel_speed must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.speed_cap_fraction) {
            return Err(Error::InvalidScenario("speed_cap_fraction must lie in [0, 1]".into()));
        }
        if self.min_turn_radius < 0.0 {
            return Err(Error::InvalidScenario("min_turn_radius must be >= 0".into()));
        }
        Ok(())
    }
}

/// Normalized left/right wheel duty.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WheelCommand {
    pub left: f64,
    pub right: f64,
}

impl WheelCommand {
    pub const STOP: WheelCommand = WheelCommand { left: 0.0, right: 0.0 };

    /// Build a command with both duties clamped into `[-1, 1]`.
    pub fn new(left: f64, right: f64) -> Self {
        Self {
            left: left.clamp(-1.0, 1.0),
            right: right.clamp(-1.0, 1.0),
        }
    }

    pub fn straight(duty: f64) -> Self {
        Self::new(duty, duty)
    }

    pub fn mean(&self) -> f64 {
        0.5 * (self.left + self.right)
    }

    pub fn is_finite(&self) -> bool {
        self.left.is_finite() && self.right.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleState {
    pub pose: Pose,
    /// Left and right wheel surface speeds (m/s).
    pub wheel_speeds: (f64, f64),
    pub tick: u64,
}

impl VehicleState {
    pub fn at(pose: Pose) -> Self {
        Self {
            pose,
            wheel_speeds: (0.0, 0.0),
            tick: 0,
        }
    }

    /// Body forward speed (m/s).
    pub fn speed(&self) -> f64 {
        0.5 * (self.wheel_speeds.0 + self.wheel_speeds.1)
    }

    pub fn velocity(&self) -> Vec2 {
        self.pose.forward() * self.speed()
    }
}

/// sin(x)/x, exact enough near zero.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Advance one vehicle by `dt` seconds under a constant, already-handicapped command.
pub fn step(state: &VehicleState, cmd: WheelCommand, params: &VehicleParams, dt: f64) -> Result<VehicleState> {
    if !state.pose.is_finite() || !cmd.is_finite() || !dt.is_finite() {
        return Err(Error::StateIntegrity(format!(
            "non-finite input: pose={:?} cmd={:?} dt={dt}",
            state.pose, cmd
        )));
    }
    if dt <= 0.0 {
        return Err(Error::StateIntegrity(format!("dt must be positive, got {dt}")));
    }
    let cmd = WheelCommand::new(cmd.left, cmd.right);
    let v_l = cmd.left * params.max_wheel_speed;
    let v_r = cmd.right * params.max_wheel_speed;
    let v = 0.5 * (v_l + v_r);
    let omega = (v_r - v_l) / params.track_width;
    let dtheta = omega * dt;
    let heading = state.pose.heading;

    // Chord of the arc: length v*dt*sinc(dtheta/2), direction heading + dtheta/2.
    let delta = if dtheta.abs() < STRAIGHT_EPS {
        Vec2::from_polar(v * dt, heading + 0.5 * dtheta)
    } else {
        let half = 0.5 * dtheta;
        Vec2::from_polar(v * dt * sinc(half), heading + half)
    };

    let next = VehicleState {
        pose: Pose {
            position: state.pose.position + delta,
            heading: wrap_angle(heading + dtheta),
        },
        wheel_speeds: (v_l, v_r),
        tick: state.tick + 1,
    };
    if !next.pose.is_finite() {
        return Err(Error::StateIntegrity(format!("integration produced {:?}", next.pose)));
    }
    Ok(next)
}

/// Enforce the software speed and turning-radius handicaps.
///
/// The speed cap scales both duties so the larger magnitude equals the cap,
/// which keeps the commanded curvature. The radius floor then shrinks the
/// wheel differential about the unchanged mean duty.
pub fn apply_handicap(cmd: WheelCommand, params: &VehicleParams) -> WheelCommand {
    let mut left = cmd.left.clamp(-1.0, 1.0);
    let mut right = cmd.right.clamp(-1.0, 1.0);

    let cap = params.speed_cap_fraction.clamp(0.0, 1.0);
    let peak = left.abs().max(right.abs());
    if peak > cap {
        if cap == 0.0 {
            return WheelCommand::STOP;
        }
        let k = cap / peak;
        if left.abs() >= right.abs() {
            left = cap.copysign(left);
            right *= k;
        } else {
            right = cap.copysign(right);
            left *= k;
        }
    }

    if params.min_turn_radius > 0.0 {
        // Implied radius is |mean| * track / |diff| (max_wheel_speed cancels).
        let mean = 0.5 * (left + right);
        let diff = right - left;
        let allowed = mean.abs() * params.track_width / params.min_turn_radius;
        if diff.abs() > allowed * (1.0 + 1e-12) {
            let d = allowed.copysign(diff);
            left = mean - 0.5 * d;
            right = mean + 0.5 * d;
        }
    }
    WheelCommand { left, right }
}

/// Implied turning radius of a command, `inf` when driving straight.
pub fn implied_radius(cmd: WheelCommand, params: &VehicleParams) -> f64 {
    let diff = cmd.right - cmd.left;
    if diff == 0.0 {
        return f64::INFINITY;
    }
    (cmd.mean() * params.track_width / diff).abs()
}

pub fn separation(a: &Pose, b: &Pose) -> f64 {
    (b.position - a.position).norm()
}

/// Bearing of `to` as seen from `from`, counterclockwise positive, in `(-pi, pi]`.
pub fn relative_bearing(from: &Pose, to: Vec2) -> f64 {
    wrap_angle((to - from.position).angle() - from.heading)
}
