//! Track-via-missile command guidance over a late, lossy radio link.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DirectInterceptGuide, GuidanceCommand, InterceptConfig, ModeTag, TrackReport};
use crate::error::{Error, Result};
use crate::kinematics::VehicleParams;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkModel {
    /// One-way delay in ticks.
    pub latency_ticks: u64,
    /// Per-message loss probability; 1 models a dead link.
    pub drop_probability: f64,
}

impl LinkModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.drop_probability) {
            return Err(Error::InvalidScenario("drop_probability must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// One direction of the link. Messages are stamped with their delivery tick.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel<T> {
    model: LinkModel,
    in_flight: VecDeque<(u64, T)>,
}

impl<T> Channel<T> {
    pub fn new(model: LinkModel) -> Self {
        Self {
            model,
            in_flight: VecDeque::new(),
        }
    }

    /// Queue `msg`. Draws one uniform from `rng` only when the link can drop.
    pub fn send<R: Rng + ?Sized>(&mut self, now: u64, msg: T, rng: &mut R) -> bool {
        if self.model.drop_probability > 0.0 && rng.random::<f64>() < self.model.drop_probability {
            return false;
        }
        self.in_flight.push_back((now + self.model.latency_ticks, msg));
        true
    }

    /// Everything due at or before `now`, oldest first.
    pub fn deliver(&mut self, now: u64) -> Vec<T> {
        let mut out = Vec::new();
        while self.in_flight.front().is_some_and(|(due, _)| *due <= now) {
            if let Some((_, msg)) = self.in_flight.pop_front() {
                out.push(msg);
            }
        }
        out
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight.len()
    }
}

/// Missile-side link endpoints plus the ground guidance computer.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandGuidance {
    uplink: Channel<TrackReport>,
    downlink: Channel<GuidanceCommand>,
    ground: DirectInterceptGuide,
    held: GuidanceCommand,
}

/// What happened on the link during one tick.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinkActivity {
    pub reports_sent: u32,
    pub reports_received: u32,
    pub commands_sent: u32,
    pub commands_received: u32,
}

impl CommandGuidance {
    pub fn new(link: LinkModel, config: InterceptConfig) -> Self {
        Self {
            uplink: Channel::new(link),
            downlink: Channel::new(link),
            ground: DirectInterceptGuide::new(config),
            held: GuidanceCommand::stop(ModeTag::CommandGuided),
        }
    }

    /// Run one tick of the loop and return the command the missile applies.
    ///
    /// RNG order: one uplink draw, then one downlink draw per ground command,
    /// each only when the link can drop.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        report: TrackReport,
        now: u64,
        params: &VehicleParams,
        dt: f64,
        rng: &mut R,
    ) -> (GuidanceCommand, LinkActivity) {
        let mut activity = LinkActivity::default();
        if self.uplink.send(now, report, rng) {
            activity.reports_sent += 1;
        }
        for rep in self.uplink.deliver(now) {
            activity.reports_received += 1;
            let mut cmd = self.ground.update(&rep, params, dt);
            cmd.mode_tag = ModeTag::CommandGuided;
            if self.downlink.send(now, cmd, rng) {
                activity.commands_sent += 1;
            }
        }
        for cmd in self.downlink.deliver(now) {
            activity.commands_received += 1;
            self.held = cmd;
        }
        (self.held, activity)
    }

    pub fn held(&self) -> GuidanceCommand {
        self.held
    }
}
