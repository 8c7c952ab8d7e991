use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scenario::{PolicySpec, Scenario};
use crate::error::{Error, Result};
use crate::guidance::{
    evader, light_follow, tail_chase, CommandGuidance, DirectInterceptGuide, DriveInput, EvaderPolicy, EvaderState,
    GuidanceCommand, HumanState, InterceptConfig, LinkActivity, ModeTag, SearchMode, TrackReport,
};
use crate::kinematics::{apply_handicap, separation, step, Pose, VehicleParams, VehicleState, WheelCommand};
use crate::sensing::{sense, SensorReading};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Capture,
    Timeout,
}

/// Inclusive: touching counts.
pub fn capture_check(leader: &Pose, follower: &Pose, radius: f64) -> bool {
    separation(leader, follower) <= radius
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Informational,
    Cognitive,
    Social,
    Physical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SenseStage {
    pub domain: Domain,
    /// The follower's photocell divider, if it carries a rig that can see the beacon.
    pub reading: Option<SensorReading>,
    pub leader_track: TrackReport,
    pub follower_track: TrackReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecideStage {
    pub domain: Domain,
    pub leader: GuidanceCommand,
    pub follower: GuidanceCommand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmitStage {
    pub domain: Domain,
    /// Drive input consumed this tick (last writer wins).
    pub human: Option<DriveInput>,
    pub leader_link: Option<LinkActivity>,
    pub follower_link: Option<LinkActivity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Motion {
    /// Command after handicaps.
    pub applied: WheelCommand,
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActStage {
    pub domain: Domain,
    pub leader: Motion,
    pub follower: Motion,
}

/// Everything that happened in one tick, stage by stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    /// Sim time at the end of the tick.
    pub time: f64,
    pub sense: SenseStage,
    pub decide: DecideStage,
    pub transmit: TransmitStage,
    pub act: ActStage,
    pub separation: f64,
    pub min_separation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event: Option<Outcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub outcome: Outcome,
    pub time_to_capture: Option<f64>,
    pub min_separation: f64,
    pub ticks: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_path: Option<String>,
}

impl EpisodeResult {
    pub fn summary(&self) -> String {
        match (self.outcome, self.time_to_capture) {
            (Outcome::Capture, Some(t)) => format!("CAPTURE t={}s", super::sig6(t)),
            _ => format!("TIMEOUT min_separation={}m", super::sig6(self.min_separation)),
        }
    }
}

#[derive(Debug, Clone)]
enum Brain {
    LightFollow {
        gain: f64,
        base_duty: f64,
        search: SearchMode,
    },
    TailChase {
        k_turn: f64,
        duty: f64,
    },
    Direct(DirectInterceptGuide),
    Command(CommandGuidance),
    Scripted(EvaderPolicy, EvaderState),
    Human(HumanState),
}

impl Brain {
    fn new(spec: &PolicySpec) -> Brain {
        match *spec {
            PolicySpec::LightFollow {
                gain,
                base_duty,
                search,
            } => Brain::LightFollow {
                gain,
                base_duty,
                search,
            },
            PolicySpec::TailChase { k_turn, duty } => Brain::TailChase { k_turn, duty },
            PolicySpec::DirectIntercept { duty, k_turn, window } => {
                Brain::Direct(DirectInterceptGuide::new(InterceptConfig { duty, k_turn, window }))
            }
            PolicySpec::CommandGuided {
                duty, k_turn, window, ..
            } => Brain::Command(CommandGuidance::new(
                spec.link().unwrap_or_default(),
                InterceptConfig { duty, k_turn, window },
            )),
            PolicySpec::Human => Brain::Human(HumanState::default()),
            _ => Brain::Scripted(
                spec.evader().expect("remaining specs are scripted"),
                EvaderState::default(),
            ),
        }
    }
}

#[derive(Debug, Clone)]
struct Agent {
    state: VehicleState,
    params: VehicleParams,
    brain: Brain,
}

/// The single-threaded simulation. Owns every piece of mutable state.
///
/// Per-tick RNG order: one normal draw for the follower's sensor noise, then
/// the leader's link draws, then the follower's link draws (links draw only
/// when they can drop).
#[derive(Debug, Clone)]
pub struct World {
    scenario: Scenario,
    rng: ChaCha8Rng,
    tick: u64,
    leader: Agent,
    follower: Agent,
    capture_radius: f64,
    max_ticks: u64,
    min_separation: f64,
    outcome: Option<Outcome>,
    human_queue: VecDeque<DriveInput>,
}

impl World {
    pub fn new(scenario: Scenario) -> Result<World> {
        scenario.validate()?;
        let leader = Agent {
            state: VehicleState::at(scenario.leader.pose),
            params: scenario.leader.vehicle,
            brain: Brain::new(&scenario.leader.policy),
        };
        let follower = Agent {
            state: VehicleState::at(scenario.follower.pose),
            params: scenario.follower.vehicle,
            brain: Brain::new(&scenario.follower.policy),
        };
        Ok(World {
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            tick: 0,
            capture_radius: scenario.capture_distance(),
            max_ticks: scenario.max_ticks(),
            min_separation: separation(&leader.state.pose, &follower.state.pose),
            outcome: None,
            human_queue: VecDeque::new(),
            leader,
            follower,
            scenario,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.scenario.dt
    }

    pub fn leader(&self) -> &VehicleState {
        &self.leader.state
    }

    pub fn follower(&self) -> &VehicleState {
        &self.follower.state
    }

    pub fn separation(&self) -> f64 {
        separation(&self.leader.state.pose, &self.follower.state.pose)
    }

    pub fn min_separation(&self) -> f64 {
        self.min_separation
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn is_finished(&self) -> bool {
        self.outcome.is_some()
    }

    /// Queue a human drive message; drained at the next TRANSMIT stage.
    pub fn push_drive(&mut self, input: DriveInput) {
        self.human_queue.push_back(input);
    }

    pub fn result(&self) -> Option<EpisodeResult> {
        let outcome = self.outcome?;
        Some(EpisodeResult {
            outcome,
            time_to_capture: (outcome == Outcome::Capture).then(|| self.time()),
            min_separation: self.min_separation,
            ticks: self.tick,
            log_path: None,
        })
    }

    fn fail(&self, source: Error) -> Error {
        Error::Policy {
            tick: self.tick,
            source: Box::new(source),
        }
    }

    /// Advance one tick. Stepping a finished world is an error.
    pub fn step(&mut self) -> Result<TickRecord> {
        if self.outcome.is_some() {
            return Err(Error::StateIntegrity("episode already finished".into()));
        }
        let tick = self.tick;
        let dt = self.scenario.dt;

        // SENSE
        let beacon = &self.scenario.leader.beacon;
        let reading = match self.follower.brain {
            Brain::LightFollow { .. } => Some(
                sense(
                    beacon.world_position(&self.leader.state.pose),
                    beacon.intensity,
                    &self.scenario.follower.rig,
                    &self.follower.state.pose,
                    &mut self.rng,
                )
                .map_err(|e| self.fail(e))?,
            ),
            _ => None,
        };
        let leader_track = TrackReport::observe(&self.leader.state, &self.follower.state, tick);
        let follower_track = TrackReport::observe(&self.follower.state, &self.leader.state, tick);

        // DECIDE
        let leader_plan = decide(&mut self.leader, &leader_track, reading.as_ref(), tick, dt);
        let follower_plan = decide(&mut self.follower, &follower_track, reading.as_ref(), tick, dt);

        // TRANSMIT
        let human = if matches!(self.leader.brain, Brain::Human(_)) {
            self.human_queue.drain(..).next_back()
        } else {
            self.human_queue.clear();
            None
        };
        let (leader_cmd, leader_link) = transmit(
            &mut self.leader,
            leader_plan,
            leader_track,
            human,
            tick,
            dt,
            &mut self.rng,
        );
        let (follower_cmd, follower_link) = transmit(
            &mut self.follower,
            follower_plan,
            follower_track,
            None,
            tick,
            dt,
            &mut self.rng,
        );

        // ACT
        let leader_applied = apply_handicap(leader_cmd.wheel, &self.leader.params);
        let follower_applied = apply_handicap(follower_cmd.wheel, &self.follower.params);
        let arena = self.scenario.arena;
        self.leader.state = integrate(&self.leader, leader_applied, dt, arena).map_err(|e| self.fail(e))?;
        self.follower.state = integrate(&self.follower, follower_applied, dt, arena).map_err(|e| self.fail(e))?;
        self.tick += 1;

        // EVENTS
        let sep = self.separation();
        self.min_separation = self.min_separation.min(sep);
        if capture_check(&self.leader.state.pose, &self.follower.state.pose, self.capture_radius) {
            self.outcome = Some(Outcome::Capture);
        } else if self.tick >= self.max_ticks {
            self.outcome = Some(Outcome::Timeout);
        }

        Ok(TickRecord {
            tick,
            time: self.time(),
            sense: SenseStage {
                domain: Domain::Informational,
                reading,
                leader_track,
                follower_track,
            },
            decide: DecideStage {
                domain: Domain::Cognitive,
                leader: leader_cmd,
                follower: follower_cmd,
            },
            transmit: TransmitStage {
                domain: Domain::Social,
                human,
                leader_link,
                follower_link,
            },
            act: ActStage {
                domain: Domain::Physical,
                leader: Motion {
                    applied: leader_applied,
                    pose: self.leader.state.pose,
                },
                follower: Motion {
                    applied: follower_applied,
                    pose: self.follower.state.pose,
                },
            },
            separation: sep,
            min_separation: self.min_separation,
            event: self.outcome,
        })
    }

    /// Step until the episode ends, handing each record to `sink`.
    pub fn run_with<F>(&mut self, mut sink: F) -> Result<EpisodeResult>
    where
        F: FnMut(&TickRecord) -> Result<()>,
    {
        while !self.is_finished() {
            let rec = self.step()?;
            sink(&rec)?;
        }
        Ok(self.result().expect("finished world has a result"))
    }
}

/// What each policy asks for before any link or human input is involved.
/// Link-guided and human agents only resolve their command at TRANSMIT.
fn decide(
    agent: &mut Agent,
    track: &TrackReport,
    reading: Option<&SensorReading>,
    tick: u64,
    dt: f64,
) -> Option<GuidanceCommand> {
    let other = track.target_position();
    match &mut agent.brain {
        Brain::LightFollow {
            gain,
            base_duty,
            search,
        } => reading.map(|r| light_follow(r, *gain, *base_duty, *search)),
        Brain::TailChase { k_turn, duty } => Some(tail_chase(&agent.state.pose, other, *k_turn, *duty, &agent.params)),
        Brain::Direct(guide) => Some(guide.update(track, &agent.params, dt)),
        Brain::Scripted(policy, state) => Some(evader(policy, state, &agent.state, other, tick, dt, &agent.params)),
        Brain::Command(_) | Brain::Human(_) => None,
    }
}

fn transmit(
    agent: &mut Agent,
    plan: Option<GuidanceCommand>,
    track: TrackReport,
    human: Option<DriveInput>,
    tick: u64,
    dt: f64,
    rng: &mut ChaCha8Rng,
) -> (GuidanceCommand, Option<LinkActivity>) {
    match &mut agent.brain {
        Brain::Command(cg) => {
            let (cmd, activity) = cg.step(track, tick, &agent.params, dt, rng);
            (cmd, Some(activity))
        }
        Brain::Human(h) => (h.update(human, tick, dt), None),
        _ => (plan.unwrap_or(GuidanceCommand::stop(ModeTag::LightFollow)), None),
    }
}

fn integrate(agent: &Agent, cmd: WheelCommand, dt: f64, arena: f64) -> Result<VehicleState> {
    let mut next = step(&agent.state, cmd, &agent.params, dt)?;
    if arena > 0.0 {
        let p = &mut next.pose.position;
        p.x = p.x.clamp(-arena, arena);
        p.y = p.y.clamp(-arena, arena);
    }
    Ok(next)
}

/// Run a scenario to completion without logging.
pub fn run(scenario: &Scenario) -> Result<EpisodeResult> {
    World::new(scenario.clone())?.run_with(|_| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn capture_boundary_is_inclusive_and_symmetric() {
        let a = Pose::new(0.0, 0.0, 0.0);
        let b = Pose::new(0.12, 0.0, 1.0);
        assert!(capture_check(&a, &b, 0.12));
        assert!(capture_check(&b, &a, 0.12));
        let c = Pose::new(0.12 + 1e-9, 0.0, 0.0);
        assert!(!capture_check(&a, &c, 0.12));
        assert!(!capture_check(&c, &a, 0.12));
        assert!(capture_check(&a, &Pose::new(0.10, 0.0, 0.0), 0.06 + 0.06));
    }

    #[test]
    fn records_are_contiguous_and_min_is_running() {
        let mut world = World::new(presets::stationary_leader(0.15)).unwrap();
        let mut prev_min = f64::INFINITY;
        let mut expect = 0;
        let mut true_min = world.separation();
        let result = world
            .run_with(|r| {
                assert_eq!(r.tick, expect);
                expect += 1;
                assert!(r.min_separation <= prev_min);
                prev_min = r.min_separation;
                true_min = true_min.min(r.separation);
                assert_eq!(r.min_separation, true_min);
                Ok(())
            })
            .unwrap();
        assert_eq!(result.ticks, expect);
        assert_eq!(result.min_separation, true_min);
    }

    #[test]
    fn stepping_after_the_end_fails() {
        let mut world = World::new(presets::stationary_leader(0.15)).unwrap();
        world.run_with(|_| Ok(())).unwrap();
        assert!(world.step().is_err());
    }

    #[test]
    fn arena_clamps_position_keeps_heading() {
        let mut s = presets::stationary_leader(0.15);
        s.arena = 0.2;
        s.leader.policy = PolicySpec::Straight { duty: 1.0 };
        s.timeout = 2.0;
        let mut world = World::new(s).unwrap();
        while !world.is_finished() {
            world.step().unwrap();
            assert!(world.leader().pose.position.x <= 0.2);
        }
        assert_eq!(world.leader().pose.heading, 0.0);
    }

    #[test]
    fn human_queue_last_writer_wins() {
        let mut s = presets::stationary_leader(0.5);
        s.leader.policy = PolicySpec::Human;
        let mut world = World::new(s).unwrap();
        world.push_drive(DriveInput {
            throttle: 1.0,
            steer: 0.0,
        });
        world.push_drive(DriveInput {
            throttle: 0.6,
            steer: 0.4,
        });
        let rec = world.step().unwrap();
        assert_eq!(
            rec.transmit.human,
            Some(DriveInput {
                throttle: 0.6,
                steer: 0.4
            })
        );
        let w = rec.decide.leader.wheel;
        assert!((w.left - 0.2).abs() < 1e-12 && w.right == 1.0);
        assert_eq!(rec.decide.leader.mode_tag, ModeTag::Human);
    }
}
