//! One live engine session, independent of any network.

use pursuit_core::engine::{PolicySpec, Scenario, TickRecord, World};
use pursuit_core::presets;

use crate::protocol::{InboundMsg, OutboundMsg, PROTOCOL_VERSION};
use crate::ServiceError;

/// Messages produced by handling input or advancing time.
#[derive(Debug, Default, PartialEq)]
pub struct Outbox {
    /// For the client that sent the input only.
    pub reply: Vec<OutboundMsg>,
    /// For every connected client.
    pub broadcast: Vec<OutboundMsg>,
}

pub struct Session {
    scenario_name: String,
    scenario: Scenario,
    world: World,
    episode: u64,
    last: Option<TickRecord>,
    paused: bool,
}

impl Session {
    pub fn new(scenario_name: &str) -> Result<Session, ServiceError> {
        let scenario =
            presets::by_name(scenario_name).ok_or_else(|| ServiceError::UnknownScenario(scenario_name.to_string()))?;
        Session::with_scenario(scenario_name, scenario)
    }

    pub fn with_scenario(name: &str, scenario: Scenario) -> Result<Session, ServiceError> {
        if !matches!(scenario.leader.policy, PolicySpec::Human) {
            return Err(ServiceError::NotHumanDriven(name.to_string()));
        }
        let world = World::new(scenario.clone())?;
        Ok(Session {
            scenario_name: name.to_string(),
            scenario,
            world,
            episode: 0,
            last: None,
            paused: false,
        })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn episode(&self) -> u64 {
        self.episode
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn dt(&self) -> f64 {
        self.scenario.dt
    }

    pub fn catalog(&self) -> OutboundMsg {
        OutboundMsg::Catalog {
            v: PROTOCOL_VERSION,
            scenarios: presets::catalog()
                .into_iter()
                .filter(|(_, s)| matches!(s.leader.policy, PolicySpec::Human))
                .map(|(n, _)| n.to_string())
                .collect(),
            policies: PolicySpec::NAMES
                .iter()
                .filter(|n| **n != "human")
                .map(|n| n.to_string())
                .collect(),
            current_scenario: self.scenario_name.clone(),
            follower_policy: self.scenario.follower.policy.name().to_string(),
        }
    }

    pub fn snapshot(&self) -> OutboundMsg {
        OutboundMsg::snapshot(self.episode, &self.world, self.last.as_ref())
    }

    fn restart(&mut self) -> Result<(), ServiceError> {
        self.world = World::new(self.scenario.clone())?;
        self.episode += 1;
        self.last = None;
        self.paused = false;
        Ok(())
    }

    /// Apply one client frame. Malformed frames only produce an error reply.
    pub fn handle_text(&mut self, text: &str) -> Outbox {
        match InboundMsg::parse(text) {
            Ok(msg) => self.handle(msg),
            Err(e) => Outbox {
                reply: vec![OutboundMsg::error(e)],
                ..Outbox::default()
            },
        }
    }

    pub fn handle(&mut self, msg: InboundMsg) -> Outbox {
        let mut out = Outbox::default();
        let changes_catalog = matches!(msg, InboundMsg::SetPolicy { .. } | InboundMsg::SelectScenario { .. });
        let result = match msg {
            InboundMsg::Drive { drive } => {
                self.world.push_drive(drive);
                Ok(())
            }
            InboundMsg::Reset => self.restart(),
            InboundMsg::SetPolicy { policy_name } => self.set_follower_policy(&policy_name),
            InboundMsg::SelectScenario { scenario_name } => self.select(&scenario_name),
        };
        match result {
            Ok(()) if changes_catalog => out.broadcast.push(self.catalog()),
            Ok(()) => {}
            Err(e) => out.reply.push(OutboundMsg::error(e.to_string())),
        }
        out
    }

    fn set_follower_policy(&mut self, name: &str) -> Result<(), ServiceError> {
        let spec = PolicySpec::by_name(name).ok_or_else(|| ServiceError::UnknownPolicy(name.to_string()))?;
        let mut next = self.scenario.clone();
        next.follower.policy = spec;
        next.validate()?;
        self.scenario = next;
        self.restart()
    }

    fn select(&mut self, name: &str) -> Result<(), ServiceError> {
        let next = Session::new(name)?;
        self.scenario_name = next.scenario_name;
        self.scenario = next.scenario;
        self.restart()
    }

    /// Advance one tick unless paused. The state message is always produced;
    /// a finished episode adds an event and pauses until reset.
    pub fn tick(&mut self) -> Result<Outbox, ServiceError> {
        let mut out = Outbox::default();
        if self.paused {
            return Ok(out);
        }
        let rec = self.world.step()?;
        out.broadcast.push(OutboundMsg::from_record(self.episode, &rec));
        if let (Some(event), Some(result)) = (rec.event, self.world.result()) {
            out.broadcast.push(OutboundMsg::Event {
                v: PROTOCOL_VERSION,
                episode: self.episode,
                tick: rec.tick + 1,
                event,
                result,
            });
            self.paused = true;
        }
        self.last = Some(rec);
        Ok(out)
    }
}
