//! Deterministic two-car pursuit simulator: kinematics, light sensing,
//! guidance laws, the world loop and its logs.

pub mod engine;
pub mod error;
pub mod guidance;
pub mod kinematics;
pub mod presets;
pub mod sensing;
pub mod variety;

pub use error::{Error, Result};
