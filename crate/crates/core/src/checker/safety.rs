//! Pattern monitors on the explored graph.
//!
//! Each edge label is folded into a transfer on the armed-binding mask:
//! `next = A | (x & !B)` and the label violates from `x` iff
//! `V0 | (x & VM) != 0`. A monotone worklist then computes the bindings that
//! may be armed at every node.

use super::explore::StateGraph;
use super::CheckerError;
use crate::domain::Action;
use crate::monitor::safety::MonitorAutomaton;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Transfer {
    a: u64,
    b: u64,
    v0: u64,
    vm: u64,
}

impl Transfer {
    fn next(&self, x: u64) -> u64 {
        self.a | (x & !self.b)
    }

    fn violates(&self, x: u64) -> u64 {
        self.v0 | (x & self.vm)
    }
}

fn transfers(g: &StateGraph, m: &MonitorAutomaton) -> Vec<Transfer> {
    (0..g.label_count() as u32)
        .map(|lid| {
            let mut t = Transfer::default();
            for &id in g.label(lid) {
                let [a, b, c] = m.masks(id);
                t.v0 |= t.a & c;
                t.vm |= !t.b & c;
                t.a = a | (t.a & !b);
                t.b |= b;
            }
            t
        })
        .collect()
}

/// A violating path from the initial state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub actions: Vec<Action>,
    /// Index in `actions` of the offending action.
    pub witness: u64,
    pub binding: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyVerdict {
    /// Bit i set: binding i is violated somewhere.
    pub violated: u64,
    /// Shortest violating path over all violated bindings.
    pub counterexample: Option<Counterexample>,
}

impl SafetyVerdict {
    pub fn holds(&self) -> bool {
        self.violated == 0
    }
}

/// Requires an exhaustive graph.
pub fn check_safety_product(g: &StateGraph, m: &MonitorAutomaton) -> Result<SafetyVerdict, CheckerError> {
    if !g.is_exhaustive() {
        return Err(CheckerError::NotExhaustive);
    }
    Ok(check_safety_within(g, m))
}

/// Checks the explored part of a possibly partial graph.
pub fn check_safety_within(g: &StateGraph, m: &MonitorAutomaton) -> SafetyVerdict {
    let ts = transfers(g, m);
    let n = g.node_count();
    let mut armed = vec![0u64; n];
    // Every node is visited once even when nothing is armed there: a single
    // label can arm and violate by itself.
    let mut queued = vec![true; n];
    let mut work: std::collections::VecDeque<u32> = (0..n as u32).collect();
    armed[0] = m.initial_mask();
    let mut violated = 0u64;
    while let Some(node) = work.pop_front() {
        queued[node as usize] = false;
        let x = armed[node as usize];
        for e in g.edge_range(node) {
            let t = &ts[g.edge_label(e) as usize];
            violated |= t.violates(x);
            let d = g.edge_dst(e) as usize;
            let next = t.next(x);
            if next & !armed[d] != 0 {
                armed[d] |= next;
                if !queued[d] {
                    queued[d] = true;
                    work.push_back(d as u32);
                }
            }
        }
    }
    let counterexample = (0..64)
        .filter(|i| violated & (1 << i) != 0)
        .filter_map(|i| shortest(g, m, &ts, i))
        .min_by_key(|c| c.actions.len());
    SafetyVerdict {
        violated,
        counterexample,
    }
}

/// Breadth-first search over (node, armed) for one binding.
fn shortest(g: &StateGraph, m: &MonitorAutomaton, ts: &[Transfer], bit: usize) -> Option<Counterexample> {
    let n = g.node_count();
    let mask = 1u64 << bit;
    // parent[2*node + armed] = (edge << 1) | parent_armed
    let mut parent = vec![u64::MAX; 2 * n];
    // The initial node is 0.
    let start = (m.initial_mask() & mask != 0) as usize;
    parent[start] = u64::MAX - 1;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        let (node, x) = ((s / 2) as u32, if s % 2 == 1 { mask } else { 0 });
        for e in g.edge_range(node) {
            let t = &ts[g.edge_label(e) as usize];
            if t.violates(x) & mask != 0 {
                let mut edges = vec![e];
                let mut cur = s;
                while parent[cur] != u64::MAX - 1 {
                    let p = parent[cur];
                    edges.push((p >> 1) as usize);
                    cur = 2 * g.edge_source((p >> 1) as usize) as usize + (p & 1) as usize;
                }
                edges.reverse();
                let actions = g.path_actions(&edges);
                let mut st = m.initial_state();
                for (i, a) in actions.iter().enumerate() {
                    st = m.advance(&st, a, i as u64);
                }
                let v = st.violation.expect("replayed counterexample violates");
                return Some(Counterexample {
                    actions,
                    witness: v.seq,
                    binding: m.binding_text(v.binding),
                });
            }
            let d = 2 * g.edge_dst(e) as usize + (t.next(x) & mask != 0) as usize;
            if parent[d] == u64::MAX {
                parent[d] = ((e as u64) << 1) | (s % 2) as u64;
                queue.push_back(d);
            }
        }
    }
    None
}
