//! Burst obligations on the explored graph.
//!
//! Observation values are tracked alongside stable nodes. From each such
//! pair every burst is followed through the awaiting nodes; a burst that
//! returns to a stable node with items still outstanding is a violation.

use rustc_hash::FxHashMap;

use super::explore::StateGraph;
use super::safety::Counterexample;
use super::CheckerError;
use crate::monitor::obligation::{CompiledObligation, ObligationState};
use crate::monitor::predicate::{format_binding, Binding};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InevitabilityVerdict {
    /// Reachable (stable node, observation) pairs.
    pub product_states: usize,
    pub counterexample: Option<Counterexample>,
}

impl InevitabilityVerdict {
    pub fn holds(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Requires an exhaustive graph.
pub fn check_inevitability(
    g: &StateGraph,
    ob: &CompiledObligation,
    binding: &Binding,
) -> Result<InevitabilityVerdict, CheckerError> {
    if !g.is_exhaustive() {
        return Err(CheckerError::NotExhaustive);
    }
    Ok(check_inevitability_within(g, ob, binding))
}

struct Found {
    parent: u32,
    last_edge: usize,
}

/// Checks the explored part of a possibly partial graph.
pub fn check_inevitability_within(g: &StateGraph, ob: &CompiledObligation, binding: &Binding) -> InevitabilityVerdict {
    // Per label: whether it touches the obligation at all.
    let inert: Vec<bool> = (0..g.label_count() as u32)
        .map(|l| g.label(l).iter().all(|&id| ob.effects[id.index()].is_inert()))
        .collect();
    let mut index: FxHashMap<(u32, u64), u32> = FxHashMap::default();
    // (node, vals, parent product index, edge that closed the burst)
    let mut states: Vec<(u32, u64, u32, usize)> = Vec::new();
    index.insert((0, ob.initial), 0);
    states.push((0, ob.initial, u32::MAX, usize::MAX));
    let mut head = 0usize;
    let mut stack: Vec<(usize, ObligationState)> = Vec::new();
    let mut found: Option<Found> = None;
    'outer: while head < states.len() {
        let (node, vals, _, _) = states[head];
        let start = ObligationState {
            vals,
            pending: 0,
            trigger_seq: 0,
            violation: None,
        };
        stack.clear();
        stack.extend(g.edge_range(node).rev().map(|e| (e, start)));
        while let Some((e, st)) = stack.pop() {
            let lid = g.edge_label(e);
            let mut next = st;
            if !inert[lid as usize] {
                for &id in g.label(lid) {
                    next = ob.advance_id(&next, id, 0);
                }
            }
            debug_assert!(next.violation.is_none(), "reads and outputs are never stable inputs");
            let d = g.edge_dst(e);
            if g.is_stable(d) {
                if next.pending != 0 {
                    found = Some(Found {
                        parent: head as u32,
                        last_edge: e,
                    });
                    break 'outer;
                }
                let len = states.len() as u32;
                index.entry((d, next.vals)).or_insert_with(|| {
                    states.push((d, next.vals, head as u32, e));
                    len
                });
            } else {
                stack.extend(g.edge_range(d).rev().map(|e2| (e2, next)));
            }
        }
        head += 1;
    }
    let counterexample = found.map(|f| {
        let parents = g.bfs_parents();
        let mut edges = burst_edges(g, &parents, f.last_edge);
        let mut p = f.parent as usize;
        while states[p].2 != u32::MAX {
            let mut burst = burst_edges(g, &parents, states[p].3);
            burst.extend(edges);
            edges = burst;
            p = states[p].2 as usize;
        }
        let actions = g.path_actions(&edges);
        let mut st = ob.initial_state();
        for (i, a) in actions.iter().enumerate() {
            st = ob.advance(&st, a, g.alphabet(), i as u64);
        }
        let st = ob.finish(&st);
        Counterexample {
            witness: st.violation.expect("replayed counterexample violates"),
            actions,
            binding: format_binding(binding),
        }
    });
    InevitabilityVerdict {
        product_states: states.len(),
        counterexample,
    }
}

/// Edges of the burst ending with `last`, walking back through the unique
/// predecessors of awaiting nodes to the stable node it started from.
fn burst_edges(g: &StateGraph, parents: &[u64], last: usize) -> Vec<usize> {
    let mut edges = vec![last];
    let mut src = g.edge_source(last);
    while !g.is_stable(src) {
        let e = parents[src as usize] as usize;
        edges.push(e);
        src = g.edge_source(e);
    }
    edges.reverse();
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::{ExploreMode, Limits};
    use crate::controller::{Controller, Mutation};
    use crate::domain::{Action, Alphabet, PlantConfig};
    use crate::monitor::catalog::obligations;

    fn run(m: Option<Mutation>, id: &str, depth: u32) -> InevitabilityVerdict {
        let config = PlantConfig::reduced();
        let c = match m {
            Some(m) => Controller::with_mutation(&config, m),
            None => Controller::new(&config),
        };
        let g = StateGraph::explore(&c, ExploreMode::Bounded(depth), &Limits::default(), false).unwrap();
        let (b, spec) = obligations(id, &config).remove(0);
        check_inevitability_within(&g, &spec.compile(&Alphabet::new(&config)).unwrap(), &b)
    }

    #[test]
    fn stop_without_lights_is_found() {
        let v = run(Some(Mutation::SkipLightRedOnStop), "commandreq3", 3);
        let c = v.counterexample.unwrap();
        assert_eq!(
            c.actions[c.witness as usize],
            Action::BarrierCommand(crate::domain::ConsoleCommand::CommandStop)
        );
        assert_eq!(c.actions.len(), 2);
        assert!(run(None, "commandreq3", 3).holds());
    }

    #[test]
    fn awaiting_bursts_are_followed() {
        assert!(run(None, "commandreq2", 5).holds());
        assert!(run(None, "commandreq7", 6).holds());
    }
}
