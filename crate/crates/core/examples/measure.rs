//! Explores the reduced plant and times every requirement on the graph.

use std::time::Instant;

use lockctl_core::checker::{verify, ExploreMode, Limits, StateGraph};
use lockctl_core::monitor::catalog;
use lockctl_core::{Controller, PlantConfig};

fn main() {
    let c = Controller::new(&PlantConfig::reduced());
    let g = StateGraph::explore(&c, ExploreMode::Exhaustive, &Limits::default(), false).unwrap();
    println!(
        "{} {:?} mem={}MB",
        g.stats().summary(),
        g.stats().wall_time,
        g.memory_estimate() >> 20
    );
    for r in catalog() {
        let t = Instant::now();
        let v = verify(&g, r).unwrap();
        println!("{} {:?}", v.report_line(), t.elapsed());
        if let Some(p) = &v.path {
            for a in p.iter().take(40) {
                println!("    {a}");
            }
        }
    }
}
