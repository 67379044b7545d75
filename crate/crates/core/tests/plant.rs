//! Plant model properties, alone and in closed loop.

use lockctl_core::domain::{Action, ActionClass, Alphabet, PlantConfig, Value};
use lockctl_core::sim::plant::{HEARTBEAT, P};
use lockctl_core::sim::{Fault, FaultProfile, Motion, Plant, Session, Target};
use proptest::prelude::*;

fn actuators(config: &PlantConfig) -> Vec<Action> {
    Alphabet::new(config)
        .actions()
        .iter()
        .copied()
        .filter(|a| a.kind().class() == ActionClass::Actuator)
        .collect()
}

fn target_of(a: &Action) -> Target {
    match *a {
        Action::GateSensor(l, s, o, _) => Target::Gate(l, s, o),
        Action::PaddleSensor(l, s, o, _) => Target::Paddle(l, s, o),
        Action::BarrierSensor(_) => Target::Barrier,
        Action::WaterSensor(l, s, _) => Target::Water(l, s),
        _ => panic!("not a spontaneous sensor event: {a}"),
    }
}

fn reported(a: &Action) -> Value {
    match *a {
        Action::GateSensor(.., v) | Action::PaddleSensor(.., v) | Action::BarrierSensor(v) => Value::Position(v),
        Action::WaterSensor(.., v) => Value::Water(v),
        _ => unreachable!(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn healthy_sensors_report_the_truth(
        seed in 0u64..1000,
        script in prop::collection::vec((0usize..1000, 0u8..4), 0..60),
    ) {
        let config = PlantConfig::full();
        let outs = actuators(&config);
        let mut p = Plant::new(&config, FaultProfile::default(), seed).unwrap();
        for (pick, idle) in script {
            p.apply(&outs[pick % outs.len()]).unwrap();
            for _ in 0..=idle {
                let before = p.clone();
                for ev in p.tick() {
                    prop_assert_eq!(Some(reported(&ev)), p.true_reading(target_of(&ev)), "{}", ev);
                }
                // Still devices keep their place.
                for (a, b) in before.gates.iter().zip(&p.gates) {
                    if a.motion == Motion::Still {
                        prop_assert_eq!(a.position, b.position);
                    }
                    prop_assert!(b.position <= P);
                }
            }
        }
    }

    #[test]
    fn fault_toggles_restore_the_fault_set(picks in prop::collection::vec(0usize..10_000, 1..6)) {
        let config = PlantConfig::full();
        let mut p = Plant::new(&config, FaultProfile::default(), 0).unwrap();
        let targets = Target::all(&config);
        let faults: Vec<Fault> = picks
            .iter()
            .map(|&i| Fault { target: targets[i % targets.len()], kind: lockctl_core::sim::FaultKind::SensorFail })
            .collect();
        for &f in &faults {
            p.inject_fault(f, true).unwrap();
        }
        let mut distinct = faults.clone();
        distinct.sort();
        distinct.dedup();
        prop_assert_eq!(p.faults().collect::<Vec<_>>(), distinct.clone());
        for &f in &distinct {
            p.inject_fault(f, false).unwrap();
        }
        prop_assert_eq!(p.faults().count(), 0);
    }
}

#[test]
fn initial_plant() {
    let p = Plant::new(&PlantConfig::full(), FaultProfile::default(), 3).unwrap();
    assert_eq!(p.faults().count(), 0);
    assert_eq!(p.barrier.position, P);
    assert!(p.gates.iter().chain(&p.paddles).all(|d| d.position == 0));
    let s = p.summary();
    assert_eq!(s.devices.len(), 17);
    assert_eq!(s.lights.len(), 20);
    assert!(s.water.iter().all(|(_, d)| *d != 0));
}

#[test]
fn closed_loop_keeps_the_interlock() {
    // No faults: a gate and the opposite side of its lock are never open
    // together, whatever the operator does.
    for seed in 0..4 {
        let mut s = Session::new(&PlantConfig::full(), FaultProfile::default(), seed).unwrap();
        s.set_operator_rate(0.6);
        let mut gate_ticks = 0;
        for _ in 0..20_000 {
            s.tick().unwrap();
            gate_ticks += s.plant().gates.iter().any(|g| g.position > 0) as u32;
            if let Some(b) = s.plant().interlock_breach() {
                panic!("seed {seed} tick {}: {b}", s.tick_count());
            }
        }
        assert!(s.stats().commands > 10_000);
        assert!(
            gate_ticks > 100,
            "seed {seed}: gates hardly ever open ({gate_ticks} ticks)"
        );
    }
}

#[test]
fn heartbeat_repeats_every_reading() {
    let config = PlantConfig::reduced();
    let mut p = Plant::new(&config, FaultProfile::default(), 0).unwrap();
    for _ in 0..HEARTBEAT - 1 {
        assert!(p.tick().is_empty());
    }
    let beat = p.tick();
    // Two gates, two paddles, the barrier and two water sensors.
    assert_eq!(beat.len(), 7);
}

#[test]
fn random_faults_come_and_go() {
    let profile = FaultProfile {
        sensor_fail: 0.05,
        stuck_aspect: 0.05,
        motor_stall: 0.05,
        repair: 0.2,
    };
    let mut p = Plant::new(&PlantConfig::full(), profile, 11).unwrap();
    let mut max = 0;
    for _ in 0..2_000 {
        p.tick();
        max = max.max(p.faults().count());
    }
    assert!(max > 0);
    assert!(p.faults().count() < 40);
    let bad = FaultProfile {
        repair: 1.5,
        ..FaultProfile::default()
    };
    assert!(Plant::new(&PlantConfig::full(), bad, 0).is_err());
}
