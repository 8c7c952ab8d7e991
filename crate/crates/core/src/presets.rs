//! Built-in scenarios. The files under `scenarios/` are these, serialized.

use crate::engine::{FollowerSpec, LeaderSpec, PolicySpec, Scenario};
use crate::guidance::{EvaderPolicy, SearchMode};
use crate::kinematics::{Pose, VehicleParams};
use crate::sensing::{Beacon, SensorRig};

fn base(leader_policy: PolicySpec, leader_vehicle: VehicleParams, distance: f64) -> Scenario {
    Scenario {
        name: String::new(),
        dt: 0.02,
        timeout: 120.0,
        seed: 1,
        arena: 0.0,
        capture_radius: None,
        leader: LeaderSpec {
            pose: Pose::new(0.0, 0.0, 0.0),
            vehicle: leader_vehicle,
            policy: leader_policy,
            beacon: Beacon::default(),
        },
        follower: FollowerSpec {
            pose: Pose::new(-distance, 0.0, 0.0),
            vehicle: VehicleParams::default(),
            policy: PolicySpec::default_follower(),
            rig: SensorRig::default(),
        },
    }
}

fn named(mut s: Scenario, name: &str) -> Scenario {
    s.name = name.to_string();
    s
}

/// Parked leader `distance` ahead of the light-following car.
pub fn stationary_leader(distance: f64) -> Scenario {
    named(
        base(PolicySpec::Straight { duty: 0.0 }, VehicleParams::default(), distance),
        "stationary_leader",
    )
}

/// Parked leader with a follower that keeps crawling when it sees nothing.
pub fn stationary_leader_crawl(distance: f64) -> Scenario {
    let mut s = stationary_leader(distance);
    if let PolicySpec::LightFollow { search, .. } = &mut s.follower.policy {
        *search = SearchMode::Crawl;
    }
    named(s, "stationary_leader_crawl")
}

/// Handicapped leader weaving ahead of the follower.
pub fn zigzag_sweep(distance: f64) -> Scenario {
    named(
        base(PolicySpec::default_zigzag(), VehicleParams::handicapped(), distance),
        "zigzag_sweep",
    )
}

/// Leader that turns around and runs once the follower gets close.
pub fn turn_and_run(vehicle: VehicleParams, distance: f64) -> Scenario {
    named(
        base(EvaderPolicy::turn_and_run().into(), vehicle, distance),
        "turn_and_run",
    )
}

/// Human-driven leader for the live service.
pub fn human_leader() -> Scenario {
    named(
        base(PolicySpec::Human, VehicleParams::handicapped(), 0.3),
        "human_leader",
    )
}

/// Pursuer with lead guidance against a leader crossing its path.
pub fn crossing(pursuer: PolicySpec) -> Scenario {
    let mut s = base(PolicySpec::Straight { duty: 0.5 }, VehicleParams::default(), 0.0);
    s.leader.pose = Pose::new(1.0, -0.5, std::f64::consts::FRAC_PI_2);
    s.follower.pose = Pose::new(0.0, 0.0, 0.0);
    s.follower.policy = pursuer;
    s.timeout = 30.0;
    named(s, "crossing")
}

/// Pursuer chasing a parked target 1 m away over a radio link.
pub fn command_guided_stationary(latency_ticks: u64) -> Scenario {
    let mut s = base(PolicySpec::Straight { duty: 0.0 }, VehicleParams::default(), 1.0);
    s.follower.policy = PolicySpec::CommandGuided {
        duty: 1.0,
        k_turn: 4.0,
        window: 1,
        latency_ticks,
        drop_probability: 0.0,
    };
    s.timeout = 30.0;
    named(s, "command_guided")
}

/// Every preset by file name.
pub fn catalog() -> Vec<(&'static str, Scenario)> {
    vec![
        ("stationary_leader", stationary_leader(0.15)),
        (
            "stationary_leader_far",
            named(stationary_leader(0.50), "stationary_leader_far"),
        ),
        ("zigzag_sweep", zigzag_sweep(0.15)),
        ("turn_and_run", turn_and_run(VehicleParams::default(), 0.15)),
        (
            "turn_and_run_handicapped",
            named(
                turn_and_run(VehicleParams::handicapped(), 0.15),
                "turn_and_run_handicapped",
            ),
        ),
        ("human_leader", human_leader()),
        (
            "crossing_intercept",
            named(
                crossing(PolicySpec::by_name("direct_intercept").expect("registered")),
                "crossing_intercept",
            ),
        ),
        ("command_guided", command_guided_stationary(10)),
    ]
}

pub fn by_name(name: &str) -> Option<Scenario> {
    catalog().into_iter().find(|(n, _)| *n == name).map(|(_, s)| s)
}
