//! Beacon and two-photoresistor voltage divider.
//!
//! The follower carries two light-dependent resistors in series, one aimed
//! left and one aimed right. The microcontroller reads a single divider
//! fraction `R_l / (R_l + R_r)`: below 0.5 the left cell is brighter (lower
//! resistance), above 0.5 the right one is.
//!
//! Each cell follows the usual power law `R = r_ref * E^-gamma`, floored at
//! `r_ref / 100` and saturating at the dark resistance `r_dark`. Once both
//! cells sit at `r_dark` the divider reads exactly 0.5, which is what bounds
//! the range at which the follower can tell left from right.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{wrap_angle, Pose, Vec2};

/// Reference illuminance for `r_ref`.
pub const E_REF: f64 = 1.0;
/// Ten inches.
pub const DETECTION_RANGE: f64 = 0.254;
/// Closest approach between a cell and the beacon that still has a defined bearing.
pub const MIN_CELL_DISTANCE: f64 = 1e-6;

/// Fused fractions are snapped to this grid around 0.5 so that `0.5 + h`
/// and `0.5 - h` are both exactly representable.
const FUSE_GRID: f64 = 4503599627370496.0; // 2^52

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Beacon {
    pub intensity: f64,
    /// Mounting point in the leader's body frame.
    pub mount_offset: Vec2,
}

impl Default for Beacon {
    fn default() -> Self {
        Self {
            intensity: calibrated_intensity(&SensorRig::default(), DETECTION_RANGE),
            mount_offset: Vec2::ZERO,
        }
    }
}

impl Beacon {
    pub fn world_position(&self, leader: &Pose) -> Vec2 {
        leader.to_world(self.mount_offset)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.intensity.is_finite() && self.intensity > 0.0) || !self.mount_offset.is_finite() {
            return Err(Error::InvalidScenario("beacon intensity must be finite and > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotoCell {
    /// Boresight angle from the body x-axis (rad).
    pub mount_angle: f64,
    /// Half-angle of the acceptance cone (rad).
    pub half_angle: f64,
    /// Dark resistance (ohm).
    pub r_dark: f64,
    /// Resistance at `E_REF` (ohm).
    pub r_ref: f64,
    pub gamma: f64,
}

impl PhotoCell {
    pub fn aimed(mount_angle: f64) -> Self {
        Self {
            mount_angle,
            half_angle: PI / 3.0,
            r_dark: 100_000.0,
            r_ref: 10_000.0,
            gamma: 0.8,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.mount_angle.is_finite()
            && self.half_angle > 0.0
            && self.half_angle <= PI
            && self.r_ref > 0.0
            && self.r_dark >= self.r_ref
            && self.r_dark.is_finite()
            && self.gamma > 0.0
            && self.gamma.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidScenario(format!("invalid photocell {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorRig {
    pub left: PhotoCell,
    pub right: PhotoCell,
    pub ambient: f64,
    /// Standard deviation of the additive noise on the fused fraction.
    pub noise_sigma: f64,
    pub dead_band: f64,
}

impl Default for SensorRig {
    fn default() -> Self {
        Self {
            left: PhotoCell::aimed(PI / 6.0),
            right: PhotoCell::aimed(-PI / 6.0),
            ambient: 0.02,
            noise_sigma: 0.005,
            dead_band: 0.02,
        }
    }
}

impl SensorRig {
    pub fn noiseless() -> Self {
        Self {
            noise_sigma: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.left.validate()?;
        self.right.validate()?;
        if !(self.left.mount_angle > 0.0 && self.right.mount_angle < 0.0) {
            return Err(Error::InvalidScenario(
                "left cell must aim left and right cell right".into(),
            ));
        }
        if !(self.ambient >= 0.0 && self.ambient.is_finite()) {
            return Err(Error::InvalidScenario("ambient must be finite and >= 0".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidScenario("noise_sigma must be finite and >= 0".into()));
        }
        if !(0.0..0.5).contains(&self.dead_band) {
            return Err(Error::InvalidScenario("dead_band must lie in [0, 0.5)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorReading {
    /// Divider fraction in `[0, 1]`; below 0.5 means the left cell is brighter.
    pub fused: f64,
    pub e_left: f64,
    pub e_right: f64,
    pub differentiable: bool,
    /// At least one cell reads brighter than its dark clamp.
    pub lit: bool,
}

impl SensorReading {
    /// Positive when the beacon appears to the left.
    pub fn steer_signal(&self) -> f64 {
        0.5 - self.fused
    }
}

/// Illuminance on one cell from an omnidirectional beacon plus ambient light.
pub fn illuminance(
    beacon_world: Vec2,
    intensity: f64,
    cell_pose_world: &Pose,
    cell: &PhotoCell,
    ambient: f64,
) -> Result<f64> {
    let to_beacon = beacon_world - cell_pose_world.position;
    let distance = to_beacon.norm();
    if distance.is_nan() || distance < MIN_CELL_DISTANCE {
        return Err(Error::DegenerateGeometry { distance });
    }
    let off_axis = wrap_angle(to_beacon.angle() - cell_pose_world.heading).abs();
    if off_axis > cell.half_angle {
        return Ok(ambient);
    }
    Ok(ambient + intensity * off_axis.cos().max(0.0) / (distance * distance))
}

/// Cell resistance at illuminance `e`.
pub fn photoresistance(e: f64, cell: &PhotoCell) -> f64 {
    let r_min = cell.r_ref / 100.0;
    let r = cell.r_ref * (e.max(0.0) / E_REF).powf(-cell.gamma);
    r.clamp(r_min, cell.r_dark)
}

/// Noise-free divider fraction, snapped so mirror images fuse to exact complements.
pub fn divider_fraction(r_left: f64, r_right: f64) -> f64 {
    let half_imbalance = 0.5 * (r_left - r_right) / (r_left + r_right);
    0.5 + (half_imbalance * FUSE_GRID).round() / FUSE_GRID
}

/// Sample the rig. Draws exactly one standard normal from `rng`.
pub fn sense<R: Rng + ?Sized>(
    beacon_world: Vec2,
    intensity: f64,
    rig: &SensorRig,
    follower: &Pose,
    rng: &mut R,
) -> Result<SensorReading> {
    let cell_pose = |cell: &PhotoCell| Pose {
        position: follower.position,
        heading: wrap_angle(follower.heading + cell.mount_angle),
    };
    let e_left = illuminance(beacon_world, intensity, &cell_pose(&rig.left), &rig.left, rig.ambient)?;
    let e_right = illuminance(beacon_world, intensity, &cell_pose(&rig.right), &rig.right, rig.ambient)?;
    let r_left = photoresistance(e_left, &rig.left);
    let r_right = photoresistance(e_right, &rig.right);

    let z: f64 = rng.sample(StandardNormal);
    let fused = (divider_fraction(r_left, r_right) + rig.noise_sigma * z).clamp(0.0, 1.0);
    Ok(SensorReading {
        fused,
        e_left,
        e_right,
        differentiable: (fused - 0.5).abs() >= rig.dead_band,
        lit: r_left < rig.left.r_dark || r_right < rig.right.r_dark,
    })
}

/// Beacon intensity at which a noise-free rig just reaches its dead band
/// when the beacon sits `range` metres out on the left cell's boresight and
/// the right cell is dark.
pub fn calibrated_intensity(rig: &SensorRig, range: f64) -> f64 {
    let cell = &rig.left;
    let target = 0.5 - rig.dead_band;
    let r_left = rig.right.r_dark * target / (1.0 - target);
    let e_left = E_REF * (r_left / cell.r_ref).powf(-1.0 / cell.gamma);
    (e_left - rig.ambient) * range * range
}
