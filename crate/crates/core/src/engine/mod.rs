//! Fixed-timestep world loop, scenario files, episode logs and the sweep harness.

mod log;
mod scenario;
mod sweep;
mod world;

pub use log::{replay, write_episode, LogLine, LogWriter, ReplayReport, LOG_VERSION};
pub use scenario::{FollowerSpec, LeaderSpec, PolicySpec, Scenario};
pub use sweep::{sweep, SweepRow, SweepTable};
pub use world::{
    capture_check, run, ActStage, DecideStage, Domain, EpisodeResult, Motion, Outcome, SenseStage, TickRecord,
    TransmitStage, World,
};

/// Six significant digits, fixed notation where it stays readable.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0.00000".to_string();
    }
    let sci = format!("{x:.5e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-5..6).contains(&exp) {
        format!("{:.*}", (5 - exp) as usize, x)
    } else {
        sci
    }
}
