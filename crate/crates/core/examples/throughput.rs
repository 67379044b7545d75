//! Times a long random walk and a long closed-loop run on the full plant.

use std::time::Instant;

use lockctl_core::checker::random_walk;
use lockctl_core::monitor::{select, TraceMonitor};
use lockctl_core::sim::{monitor_for, FaultProfile, Session};
use lockctl_core::{Alphabet, Controller, PlantConfig};

fn main() {
    let config = PlantConfig::full();
    let reqs = select("all").unwrap();
    let mut m = TraceMonitor::new(&reqs, &Alphabet::new(&config)).unwrap();
    let t = Instant::now();
    let mut seq = 0u64;
    random_walk(&Controller::new(&config), 1_000_000, 7, |_, label| {
        for &id in label {
            m.observe_id(id, seq);
            seq += 1;
        }
    });
    println!(
        "walk: {} actions {:?} violated={:?}",
        seq,
        t.elapsed(),
        m.violated_ids()
    );

    let profile = FaultProfile {
        sensor_fail: 0.002,
        stuck_aspect: 0.002,
        motor_stall: 0.002,
        repair: 0.01,
    };
    let mut s = Session::new(&config, profile, 7).unwrap();
    s.attach_monitor(monitor_for(&config, &reqs).unwrap());
    s.set_operator_rate(0.2);
    let t = Instant::now();
    for _ in 0..1_000_000 {
        s.tick().unwrap();
    }
    println!(
        "sim: {} {:?} violated={:?}",
        s.stats(),
        t.elapsed(),
        s.monitor().unwrap().violated_ids()
    );
}
