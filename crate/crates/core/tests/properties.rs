use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pursuit_core::engine::{capture_check, Scenario};
use pursuit_core::guidance::{
    direct_intercept, evader, intercept_solve, light_follow, tail_chase, EvaderPolicy, EvaderState, SearchMode,
};
use pursuit_core::kinematics::{
    apply_handicap, implied_radius, step, Pose, Vec2, VehicleParams, VehicleState, WheelCommand,
};
use pursuit_core::presets;
use pursuit_core::sensing::{illuminance, sense, PhotoCell, SensorRig};
use pursuit_core::variety::{variety_audit, VarietyTable};

fn duty() -> impl Strategy<Value = f64> {
    -1.0..=1.0f64
}

fn params() -> impl Strategy<Value = VehicleParams> {
    (0.05..0.3f64, 0.1..1.0f64, 0.0..0.5f64, 0.1..=1.0f64).prop_map(|(track, mws, radius, cap)| VehicleParams {
        track_width: track,
        max_wheel_speed: mws,
        min_turn_radius: radius,
        speed_cap_fraction: cap,
        ..VehicleParams::default()
    })
}

fn beacon_at(rng_seed: u64, beacon: Vec2, rig: &SensorRig, intensity: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    sense(beacon, intensity, rig, &Pose::new(0.0, 0.0, 0.0), &mut rng)
        .unwrap()
        .fused
}

proptest! {
    #[test]
    fn two_half_steps_equal_one_step(l in duty(), r in duty(), h in -3.2..3.2f64, dt in 0.001..0.1f64) {
        let p = VehicleParams::default();
        let s0 = VehicleState::at(Pose::new(0.3, -0.2, h));
        let cmd = WheelCommand::new(l, r);
        let full = step(&s0, cmd, &p, dt).unwrap();
        let half = step(&step(&s0, cmd, &p, dt / 2.0).unwrap(), cmd, &p, dt / 2.0).unwrap();
        prop_assert!((full.pose.position - half.pose.position).norm() < 1e-12);
        prop_assert!((full.pose.heading - half.pose.heading).abs() < 1e-12
            || (full.pose.heading - half.pose.heading).abs() > 6.0);
    }

    #[test]
    fn handicap_is_idempotent_and_respected(l in duty(), r in duty(), p in params()) {
        let once = apply_handicap(WheelCommand::new(l, r), &p);
        let twice = apply_handicap(once, &p);
        prop_assert_eq!(once, twice);
        prop_assert!(once.left.abs() <= p.speed_cap_fraction * (1.0 + 1e-12));
        prop_assert!(once.right.abs() <= p.speed_cap_fraction * (1.0 + 1e-12));
        if p.min_turn_radius > 0.0 && once != WheelCommand::STOP {
            prop_assert!(implied_radius(once, &p) >= p.min_turn_radius * (1.0 - 1e-9));
        }
    }

    #[test]
    fn wheel_speeds_bounded(l in -5.0..5.0f64, r in -5.0..5.0f64, p in params()) {
        let s = step(&VehicleState::default(), apply_handicap(WheelCommand::new(l, r), &p), &p, 0.02).unwrap();
        prop_assert!(s.wheel_speeds.0.abs() <= p.max_wheel_speed);
        prop_assert!(s.wheel_speeds.1.abs() <= p.max_wheel_speed);
        prop_assert_eq!(s.tick, 1);
    }

    #[test]
    fn sensor_mirror_symmetry_is_exact(x in -0.3..0.3f64, y in 0.0..0.3f64, k in 0.1..10.0f64) {
        prop_assume!(x.hypot(y) > 1e-3);
        let rig = SensorRig::noiseless();
        let intensity = 0.00272 * k;
        let left = beacon_at(0, Vec2::new(x, y), &rig, intensity);
        let right = beacon_at(0, Vec2::new(x, -y), &rig, intensity);
        prop_assert_eq!(left, 1.0 - right);
    }

    #[test]
    fn sweeping_left_to_right_raises_fused(d in 0.03..0.15f64, a in -0.5..0.49f64, gap in 0.01..0.2f64) {
        let b = (a + gap).min(0.5);
        prop_assume!(b - a >= 0.01);
        let rig = SensorRig::noiseless();
        let i = 0.00272;
        let more_left = beacon_at(0, Vec2::from_polar(d, b), &rig, i);
        let more_right = beacon_at(0, Vec2::from_polar(d, a), &rig, i);
        prop_assert!(more_right > more_left, "{} vs {}", more_right, more_left);
    }

    #[test]
    fn fused_stays_in_unit_interval(x in -1.0..1.0f64, y in -1.0..1.0f64, h in -3.2..3.2f64, seed in any::<u64>()) {
        prop_assume!(x.hypot(y) > 1e-3);
        let rig = SensorRig { noise_sigma: 0.3, ..SensorRig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = sense(Vec2::new(x, y), 0.00272, &rig, &Pose::new(0.0, 0.0, h), &mut rng).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.fused));
    }

    #[test]
    fn inverse_square_quartering(d in 0.01..2.0f64, th in -1.0..1.0f64, i in 0.0001..1.0f64) {
        let cell = PhotoCell::aimed(0.0);
        let near = illuminance(Vec2::from_polar(d, th), i, &Pose::default(), &cell, 0.0).unwrap();
        let far = illuminance(Vec2::from_polar(d, th) * 2.0, i, &Pose::default(), &cell, 0.0).unwrap();
        prop_assert_eq!(far, near / 4.0);
    }

    #[test]
    fn common_light_scaling_keeps_steer_direction(d in 0.03..0.2f64, th in -0.5..0.5f64, k in 0.25..4.0f64) {
        let base = SensorRig::noiseless();
        let scaled = SensorRig { ambient: base.ambient * k, ..base };
        let s1 = 0.5 - beacon_at(0, Vec2::from_polar(d, th), &base, 0.00272);
        let s2 = 0.5 - beacon_at(0, Vec2::from_polar(d, th), &scaled, 0.00272 * k);
        prop_assert!(s1 * s2 >= 0.0, "{} {}", s1, s2);
    }

    #[test]
    fn intercept_round_trip(rx in -100.0..100.0f64, ry in -100.0..100.0f64,
                            vx in -10.0..10.0f64, vy in -10.0..10.0f64, s in 0.1..10.0f64) {
        prop_assume!(rx.hypot(ry) > 1e-6);
        let r = Vec2::new(rx, ry);
        let v = Vec2::new(vx, vy);
        let sol = intercept_solve(Vec2::ZERO, s, r, v).unwrap();
        if sol.feasible {
            prop_assert!(sol.time > 0.0);
            let miss = (r + v * sol.time).norm() - s * sol.time;
            prop_assert!(miss.abs() <= 1e-9 * (s * sol.time).max(1.0));
        }
    }

    #[test]
    fn capture_check_is_symmetric(ax in -1.0..1.0f64, ay in -1.0..1.0f64, bx in -1.0..1.0f64, by in -1.0..1.0f64, r in 0.0..1.0f64) {
        let a = Pose::new(ax, ay, 0.0);
        let b = Pose::new(bx, by, 1.0);
        prop_assert_eq!(capture_check(&a, &b, r), capture_check(&b, &a, r));
    }

    #[test]
    fn variety_audit_ignores_order(seed in any::<u64>(), nd in 1usize..6, nr in 1usize..6) {
        use rand::seq::SliceRandom;
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d: Vec<String> = (0..nd).map(|i| format!("d{i}")).collect();
        let r: Vec<String> = (0..nr).map(|i| format!("r{i}")).collect();
        let mut mapping = std::collections::BTreeMap::new();
        for k in &d {
            if rng.random::<f64>() < 0.8 {
                let vals: Vec<String> = r.iter().filter(|_| rng.random::<bool>()).cloned().collect();
                mapping.insert(k.clone(), vals);
            }
        }
        let table = VarietyTable { disturbances: d, responses: r, mapping };
        let mut shuffled = table.clone();
        shuffled.disturbances.shuffle(&mut rng);
        shuffled.responses.shuffle(&mut rng);
        for v in shuffled.mapping.values_mut() {
            v.shuffle(&mut rng);
        }
        prop_assert_eq!(variety_audit(&table).unwrap(), variety_audit(&shuffled).unwrap());
    }

    #[test]
    fn policies_are_pure(x in -1.0..1.0f64, y in -1.0..1.0f64, h in -3.0..3.0f64, fused in 0.0..1.0f64, tick in 0u64..1000) {
        let p = VehicleParams::default();
        let me = VehicleState::at(Pose::new(0.0, 0.0, h));
        let target = Vec2::new(x, y);
        prop_assume!(target.norm() > 1e-6);
        let reading = pursuit_core::sensing::SensorReading { fused, e_left: 0.1, e_right: 0.1, differentiable: true, lit: true };
        prop_assert_eq!(light_follow(&reading, 4.0, 0.5, SearchMode::Crawl), light_follow(&reading, 4.0, 0.5, SearchMode::Crawl));
        prop_assert_eq!(tail_chase(&me.pose, target, 4.0, 0.7, &p), tail_chase(&me.pose, target, 4.0, 0.7, &p));
        let v = Vec2::new(0.05, -0.02);
        prop_assert_eq!(direct_intercept(&me, target, v, 0.7, 4.0, &p), direct_intercept(&me, target, v, 0.7, 4.0, &p));
        for pol in [EvaderPolicy::Zigzag { duty: 0.4, turn: 0.1, leg_time: 1.6 }, EvaderPolicy::turn_and_run()] {
            let mut s1 = EvaderState::default();
            let mut s2 = EvaderState::default();
            let a = evader(&pol, &mut s1, &me, target, tick, 0.02, &p);
            let b = evader(&pol, &mut s2, &me, target, tick, 0.02, &p);
            prop_assert_eq!(a, b);
            prop_assert_eq!(s1, s2);
        }
    }

    #[test]
    fn scenario_toml_round_trip(seed in 0..=i64::MAX as u64, d in 0.05..1.0f64, dt in 0.001..0.1f64) {
        let mut s = presets::zigzag_sweep(d);
        s.seed = seed;
        s.dt = dt;
        let back = Scenario::from_toml(&s.to_toml().unwrap()).unwrap();
        prop_assert_eq!(back.hash(), s.hash());
    }
}
