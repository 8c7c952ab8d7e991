//! Collision-course geometry and the direct-intercept guidance law.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{tail_chase, GuidanceCommand, ModeTag};
use crate::error::{Error, Result};
use crate::kinematics::{wrap_angle, Pose, Vec2, VehicleParams, VehicleState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterceptSolution {
    pub feasible: bool,
    /// Time to intercept (s); 0 when infeasible.
    pub time: f64,
    /// Where target and shooter meet; the target's position when infeasible.
    pub point: Vec2,
}

/// Earliest time a shooter moving at `speed` can meet a constant-velocity target.
///
/// Solves `(|v|^2 - s^2) t^2 + 2 (r.v) t + |r|^2 = 0` for the smallest positive
/// root, with `r` the target offset and `v` its velocity.
pub fn intercept_solve(shooter_pos: Vec2, speed: f64, target_pos: Vec2, target_vel: Vec2) -> Result<InterceptSolution> {
    let r = target_pos - shooter_pos;
    if r.x == 0.0 && r.y == 0.0 {
        return Err(Error::Collocated);
    }
    let infeasible = InterceptSolution {
        feasible: false,
        time: 0.0,
        point: target_pos,
    };

    let a = target_vel.norm_squared() - speed * speed;
    let b = 2.0 * r.dot(target_vel);
    let c = r.norm_squared();
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 || !disc.is_finite() {
        return Ok(infeasible);
    }
    // Cancellation-free pair of roots.
    let q = -0.5 * (b + disc.sqrt().copysign(b));
    let candidates = [q / a, c / q];
    let time = candidates
        .into_iter()
        .filter(|t| t.is_finite() && *t > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !time.is_finite() {
        return Ok(infeasible);
    }
    Ok(InterceptSolution {
        feasible: true,
        time,
        point: target_pos + target_vel * time,
    })
}

/// Steer at the collision point, or chase the target when there is none.
pub fn direct_intercept(
    state: &VehicleState,
    target_pos: Vec2,
    target_vel: Vec2,
    duty: f64,
    k_turn: f64,
    params: &VehicleParams,
) -> GuidanceCommand {
    let speed = duty.min(params.speed_cap_fraction).max(0.0) * params.max_wheel_speed;
    let aim = match intercept_solve(state.pose.position, speed, target_pos, target_vel) {
        Ok(sol) if sol.feasible && speed > 0.0 => Some(sol.point),
        _ => None,
    };
    let mut cmd = tail_chase(&state.pose, aim.unwrap_or(target_pos), k_turn, duty, params);
    cmd.mode_tag = ModeTag::DirectIntercept;
    cmd.fallback = aim.is_none();
    cmd
}

/// What the pursuer's own tracker reports each tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackReport {
    /// Target bearing relative to the pursuer heading.
    pub bearing: f64,
    pub range: f64,
    /// Target velocity minus pursuer velocity (m/s).
    pub relative_velocity: Vec2,
    pub issued_tick: u64,
    /// Pursuer pose at issue time.
    pub missile: Pose,
}

impl TrackReport {
    pub fn observe(missile: &VehicleState, target: &VehicleState, tick: u64) -> Self {
        let offset = target.pose.position - missile.pose.position;
        Self {
            bearing: wrap_angle(offset.angle() - missile.pose.heading),
            range: offset.norm(),
            relative_velocity: target.velocity() - missile.velocity(),
            issued_tick: tick,
            missile: missile.pose,
        }
    }

    pub fn target_position(&self) -> Vec2 {
        self.missile.position + Vec2::from_polar(self.range, self.missile.heading + self.bearing)
    }
}

/// Finite-difference velocity over the last `window` observation intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityEstimator {
    window: usize,
    history: VecDeque<(u64, Vec2)>,
}

impl VelocityEstimator {
    pub fn new(window: usize) -> Self {
        Self {
            window: window.max(1),
            history: VecDeque::new(),
        }
    }

    pub fn push(&mut self, tick: u64, position: Vec2) {
        self.history.push_back((tick, position));
        while self.history.len() > self.window + 1 {
            self.history.pop_front();
        }
    }

    pub fn estimate(&self, dt: f64) -> Vec2 {
        match (self.history.front(), self.history.back()) {
            (Some(&(t0, p0)), Some(&(t1, p1))) if t1 > t0 => (p1 - p0) * (1.0 / ((t1 - t0) as f64 * dt)),
            _ => Vec2::ZERO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterceptConfig {
    pub duty: f64,
    pub k_turn: f64,
    /// Velocity estimator window (observation intervals).
    pub window: usize,
}

impl Default for InterceptConfig {
    fn default() -> Self {
        Self {
            duty: 0.7,
            k_turn: 4.0,
            window: 1,
        }
    }
}

/// Stateful direct-intercept guidance computer, fed with track reports.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectInterceptGuide {
    pub config: InterceptConfig,
    estimator: VelocityEstimator,
}

impl DirectInterceptGuide {
    pub fn new(config: InterceptConfig) -> Self {
        Self {
            config,
            estimator: VelocityEstimator::new(config.window),
        }
    }

    pub fn update(&mut self, report: &TrackReport, params: &VehicleParams, dt: f64) -> GuidanceCommand {
        let target = report.target_position();
        self.estimator.push(report.issued_tick, target);
        let velocity = self.estimator.estimate(dt);
        let shooter = VehicleState {
            pose: report.missile,
            wheel_speeds: (0.0, 0.0),
            tick: report.issued_tick,
        };
        direct_intercept(&shooter, target, velocity, self.config.duty, self.config.k_turn, params)
    }
}
