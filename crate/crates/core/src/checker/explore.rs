//! Explicit-state exploration into a chain-compressed state graph.
//!
//! Only decision states are stored: stable states and states awaiting a light
//! read. An edge carries the input or read that leaves its source together
//! with every output emitted before the next decision state. Emitting states
//! have a unique predecessor, so their number is the total count of outputs
//! over all edges.

use std::time::{Duration, Instant};

use arrayvec::ArrayVec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use thiserror::Error;

use super::bound::state_bound;
use super::pack::{Packed, Packer};
use crate::controller::{Controller, ControllerParams, ControllerState, MAX_BURST};
use crate::domain::{Action, ActionId, Alphabet, PlantConfig};

/// Input or read followed by up to 16 outputs.
pub type Label = ArrayVec<ActionId, 17>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExploreMode {
    Exhaustive,
    /// All states within the given number of edges from the initial state.
    Bounded(u32),
    /// One seeded walk of the given number of edges.
    Random {
        steps: u64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Largest admissible number of stable states.
    pub stable_state_ceiling: u64,
    pub max_states: Option<u64>,
    pub memory_budget_mb: Option<u64>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            stable_state_ceiling: 4_194_304,
            max_states: None,
            memory_budget_mb: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GraphStats {
    pub stable_states: u64,
    pub awaiting_states: u64,
    pub emitting_states: u64,
    pub edges: u64,
    pub labels: u64,
    pub depth: u32,
    pub wall_time: Duration,
}

impl GraphStats {
    /// All controller states, including the implicit emitting ones.
    pub fn states(&self) -> u64 {
        self.stable_states + self.awaiting_states + self.emitting_states
    }

    /// One-line summary without the timing.
    pub fn summary(&self) -> String {
        format!(
            "states={} stable={} awaiting={} emitting={} edges={} labels={} depth={}",
            self.states(),
            self.stable_states,
            self.awaiting_states,
            self.emitting_states,
            self.edges,
            self.labels,
            self.depth
        )
    }
}

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("stable-state ceiling {ceiling} exceeded ({})", partial.summary())]
    CeilingExceeded { ceiling: u64, partial: GraphStats },
    #[error("combinatorial bound {bound} exceeds the stable-state ceiling {ceiling}")]
    BoundAboveCeiling { bound: u128, ceiling: u64 },
    #[error("state limit {limit} exceeded ({})", partial.summary())]
    StateLimit { limit: u64, partial: GraphStats },
    #[error("memory budget of {budget_mb} MiB exceeded ({})", partial.summary())]
    MemoryBudget { budget_mb: u64, partial: GraphStats },
}

/// Interned edge labels.
#[derive(Debug, Default, Clone)]
pub struct Labels {
    offsets: Vec<u32>,
    actions: Vec<ActionId>,
    index: FxHashMap<Label, u32>,
}

impl Labels {
    fn intern(&mut self, label: &Label) -> u32 {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        if self.offsets.is_empty() {
            self.offsets.push(0);
        }
        let id = (self.offsets.len() - 1) as u32;
        self.actions.extend_from_slice(label);
        self.offsets.push(self.actions.len() as u32);
        self.index.insert(label.clone(), id);
        id
    }

    pub fn get(&self, id: u32) -> &[ActionId] {
        let i = id as usize;
        &self.actions[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn len(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The explored graph. Node indices follow breadth-first discovery order.
#[derive(Debug)]
pub struct StateGraph {
    controller: Controller,
    packer: Packer,
    states: Vec<Packed>,
    index: FxHashMap<Packed, u32>,
    layer: Vec<u32>,
    offsets: Vec<u64>,
    dst: Vec<u32>,
    label: Vec<u32>,
    labels: Labels,
    stable_inputs: Vec<ActionId>,
    stable_count: u64,
    exhaustive: bool,
    stats: GraphStats,
}

struct Expander<'a> {
    controller: &'a Controller,
    packer: &'a Packer,
    stable_inputs: &'a [ActionId],
}

impl Expander<'_> {
    fn alphabet(&self) -> &Alphabet {
        self.packer.alphabet()
    }

    fn finish(&self, params: &ControllerParams, input: &Action, responses: &[u8], mut label: Label) -> (Packed, Label) {
        let (outputs, next) = self.controller.resolve(params, input, responses);
        for o in &outputs {
            label.push(self.alphabet().encode(o).expect("output in alphabet"));
        }
        let word = self
            .packer
            .pack_parts(self.packer.pack_params(&next), 0, ActionId(0), &[], 0);
        (word, label)
    }

    fn expand(&self, word: Packed, out: &mut Vec<(Packed, Label)>) {
        let pw = self.packer.params_of(word);
        let params = self.packer.unpack_params(pw);
        if self.packer.mode_of(word) == 0 {
            for &id in self.stable_inputs {
                let input = self.alphabet().get(id);
                let mut label = Label::new();
                label.push(id);
                if self.controller.plan(&params, &input).is_empty() {
                    out.push(self.finish(&params, &input, &[], label));
                } else {
                    out.push((self.packer.pack_parts(pw, 1, id, &[], 0), label));
                }
            }
        } else {
            let (input_id, responses) = self.packer.context_of(word);
            let input = self.alphabet().get(input_id);
            let plan = self.controller.plan(&params, &input);
            let slot = plan[responses.len()];
            for r in 0..slot.arity() {
                let read = slot.action(r);
                let mut label = Label::new();
                label.push(self.alphabet().encode(&read).expect("read in alphabet"));
                let mut next = responses.clone();
                next.push(r as u8);
                if next.len() < plan.len() {
                    out.push((self.packer.pack_parts(pw, 1, input_id, &next, 0), label));
                } else {
                    out.push(self.finish(&params, &input, &next, label));
                }
            }
        }
    }
}

const CHUNK: usize = 8192;

fn walk(
    controller: &Controller,
    packer: &Packer,
    stable_inputs: &[ActionId],
    steps: u64,
    seed: u64,
    mut visit: impl FnMut(Packed, &Label),
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let expander = Expander {
        controller,
        packer,
        stable_inputs,
    };
    let mut current = packer.pack(&controller.initial_state());
    let mut buf = Vec::new();
    for _ in 0..steps {
        buf.clear();
        expander.expand(current, &mut buf);
        let (word, label) = buf.swap_remove(rng.random_range(0..buf.len()));
        visit(word, &label);
        current = word;
    }
}

/// The walk of `ExploreMode::Random` without building a graph: hands every
/// edge label to `visit` as it goes.
pub fn random_walk(controller: &Controller, steps: u64, seed: u64, mut visit: impl FnMut(&Alphabet, &[ActionId])) {
    let packer = Packer::new(controller.config());
    let stable_inputs: Vec<ActionId> = controller
        .stable_inputs()
        .iter()
        .map(|a| packer.alphabet().encode(a).expect("input in alphabet"))
        .collect();
    walk(controller, &packer, &stable_inputs, steps, seed, |_, label| {
        visit(packer.alphabet(), label)
    });
}

impl StateGraph {
    /// Explores the controller's reachable states. `parallel` expands each
    /// frontier chunk on the rayon pool; the result is identical either way.
    pub fn explore(
        controller: &Controller,
        mode: ExploreMode,
        limits: &Limits,
        parallel: bool,
    ) -> Result<StateGraph, ExploreError> {
        let started = Instant::now();
        let config = controller.config().clone();
        if mode == ExploreMode::Exhaustive {
            let bound = state_bound(&config);
            if bound > limits.stable_state_ceiling as u128 {
                return Err(ExploreError::BoundAboveCeiling {
                    bound,
                    ceiling: limits.stable_state_ceiling,
                });
            }
        }
        let packer = Packer::new(&config);
        let stable_inputs: Vec<ActionId> = controller
            .stable_inputs()
            .iter()
            .map(|a| packer.alphabet().encode(a).expect("input in alphabet"))
            .collect();
        let mut g = StateGraph {
            controller: controller.clone(),
            packer,
            states: Vec::new(),
            index: FxHashMap::default(),
            layer: Vec::new(),
            offsets: vec![0],
            dst: Vec::new(),
            label: Vec::new(),
            labels: Labels::default(),
            stable_inputs,
            stable_count: 0,
            exhaustive: false,
            stats: GraphStats::default(),
        };
        let init = g.packer.pack(&controller.initial_state());
        g.insert(init, 0);
        match mode {
            ExploreMode::Exhaustive => g.breadth_first(None, limits, parallel)?,
            ExploreMode::Bounded(depth) => g.breadth_first(Some(depth), limits, parallel)?,
            ExploreMode::Random { steps, seed } => g.random_walk(steps, seed),
        }
        g.exhaustive = mode == ExploreMode::Exhaustive;
        g.stats = g.compute_stats(started.elapsed());
        if g.exhaustive {
            let bound = state_bound(&config) * (MAX_BURST as u128 + 1);
            assert!(
                (g.stats.states() as u128) <= bound,
                "reachable states exceed the combinatorial bound"
            );
        }
        Ok(g)
    }

    fn insert(&mut self, word: Packed, layer: u32) -> (u32, bool) {
        if let Some(&i) = self.index.get(&word) {
            return (i, false);
        }
        let i = self.states.len() as u32;
        self.states.push(word);
        self.layer.push(layer);
        if self.packer.mode_of(word) == 0 {
            self.stable_count += 1;
        }
        self.index.insert(word, i);
        (i, true)
    }

    fn check_limits(&self, limits: &Limits) -> Result<(), ExploreError> {
        if self.stable_count > limits.stable_state_ceiling {
            return Err(ExploreError::CeilingExceeded {
                ceiling: limits.stable_state_ceiling,
                partial: self.compute_stats(Duration::ZERO),
            });
        }
        if let Some(limit) = limits.max_states {
            if self.states.len() as u64 > limit {
                return Err(ExploreError::StateLimit {
                    limit,
                    partial: self.compute_stats(Duration::ZERO),
                });
            }
        }
        if let Some(budget_mb) = limits.memory_budget_mb {
            if self.memory_estimate() > budget_mb << 20 {
                return Err(ExploreError::MemoryBudget {
                    budget_mb,
                    partial: self.compute_stats(Duration::ZERO),
                });
            }
        }
        Ok(())
    }

    /// Rough resident size of the graph in bytes.
    pub fn memory_estimate(&self) -> u64 {
        let n = self.states.len() as u64;
        let e = self.dst.len() as u64;
        n * (16 + 4 + 8) + n * 32 + e * 8
    }

    fn breadth_first(&mut self, depth: Option<u32>, limits: &Limits, parallel: bool) -> Result<(), ExploreError> {
        let mut level_start = 0usize;
        let mut layer = 0u32;
        let mut buf = Vec::new();
        while level_start < self.states.len() {
            let level_end = self.states.len();
            if depth.is_some_and(|d| layer >= d) {
                break;
            }
            let mut chunk_start = level_start;
            while chunk_start < level_end {
                let chunk_end = (chunk_start + CHUNK).min(level_end);
                let words = &self.states[chunk_start..chunk_end];
                let expander = Expander {
                    controller: &self.controller,
                    packer: &self.packer,
                    stable_inputs: &self.stable_inputs,
                };
                let expanded: Vec<Vec<(Packed, Label)>> = if parallel {
                    words
                        .par_iter()
                        .map(|&w| {
                            let mut out = Vec::new();
                            expander.expand(w, &mut out);
                            out
                        })
                        .collect()
                } else {
                    words
                        .iter()
                        .map(|&w| {
                            buf.clear();
                            expander.expand(w, &mut buf);
                            std::mem::take(&mut buf)
                        })
                        .collect()
                };
                for succs in expanded {
                    for (word, label) in succs {
                        let (dst, _) = self.insert(word, layer + 1);
                        let lid = self.labels.intern(&label);
                        self.dst.push(dst);
                        self.label.push(lid);
                    }
                    self.offsets.push(self.dst.len() as u64);
                }
                chunk_start = chunk_end;
                self.check_limits(limits)?;
            }
            level_start = level_end;
            layer += 1;
        }
        // Unexpanded frontier nodes of a bounded run have no edges.
        while self.offsets.len() < self.states.len() + 1 {
            self.offsets.push(self.dst.len() as u64);
        }
        Ok(())
    }

    fn random_walk(&mut self, steps: u64, seed: u64) {
        let mut path = Vec::with_capacity(steps as usize);
        walk(
            &self.controller,
            &self.packer,
            &self.stable_inputs,
            steps,
            seed,
            |word, label| path.push((word, label.clone())),
        );
        let mut edges: FxHashSet<(u32, u32, u32)> = FxHashSet::default();
        let mut current = 0u32;
        for (step, (word, label)) in path.into_iter().enumerate() {
            let (dst, _) = self.insert(word, step as u32 + 1);
            let lid = self.labels.intern(&label);
            edges.insert((current, dst, lid));
            current = dst;
        }
        let mut edges: Vec<_> = edges.into_iter().collect();
        edges.sort_unstable();
        let mut it = edges.into_iter().peekable();
        for node in 0..self.states.len() as u32 {
            while let Some(&(src, dst, lid)) = it.peek() {
                if src != node {
                    break;
                }
                self.dst.push(dst);
                self.label.push(lid);
                it.next();
            }
            self.offsets.push(self.dst.len() as u64);
        }
    }

    fn compute_stats(&self, wall_time: Duration) -> GraphStats {
        let stable = self.stable_count;
        let emitting = self.label.iter().map(|&l| self.labels.get(l).len() as u64 - 1).sum();
        GraphStats {
            stable_states: stable,
            awaiting_states: self.states.len() as u64 - stable,
            emitting_states: emitting,
            edges: self.dst.len() as u64,
            labels: self.labels.len() as u64,
            depth: self.layer.iter().copied().max().unwrap_or(0),
            wall_time,
        }
    }

    pub fn stats(&self) -> &GraphStats {
        &self.stats
    }

    pub fn is_exhaustive(&self) -> bool {
        self.exhaustive
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn config(&self) -> &PlantConfig {
        self.controller.config()
    }

    pub fn alphabet(&self) -> &Alphabet {
        self.packer.alphabet()
    }

    pub fn packer(&self) -> &Packer {
        &self.packer
    }

    pub fn node_count(&self) -> usize {
        self.states.len()
    }

    pub fn word(&self, node: u32) -> Packed {
        self.states[node as usize]
    }

    pub fn node_of(&self, word: Packed) -> Option<u32> {
        self.index.get(&word).copied()
    }

    pub fn layer(&self, node: u32) -> u32 {
        self.layer[node as usize]
    }

    pub fn is_stable(&self, node: u32) -> bool {
        self.packer.mode_of(self.states[node as usize]) == 0
    }

    pub fn state(&self, node: u32) -> ControllerState {
        self.packer.unpack(self.states[node as usize])
    }

    pub fn params(&self, node: u32) -> ControllerParams {
        self.packer
            .unpack_params(self.packer.params_of(self.states[node as usize]))
    }

    /// Edge index range of `node`.
    pub fn edge_range(&self, node: u32) -> std::ops::Range<usize> {
        self.offsets[node as usize] as usize..self.offsets[node as usize + 1] as usize
    }

    pub fn edge_dst(&self, edge: usize) -> u32 {
        self.dst[edge]
    }

    pub fn edge_label(&self, edge: usize) -> u32 {
        self.label[edge]
    }

    pub fn label(&self, id: u32) -> &[ActionId] {
        self.labels.get(id)
    }

    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    /// Inputs of a stable node in edge order.
    pub fn stable_inputs(&self) -> &[ActionId] {
        &self.stable_inputs
    }

    /// Decoded actions of a sequence of edges.
    pub fn path_actions(&self, edges: &[usize]) -> Vec<Action> {
        edges
            .iter()
            .flat_map(|&e| self.label(self.label[e]).iter().map(|&id| self.alphabet().get(id)))
            .collect()
    }

    /// Source node of an edge.
    pub fn edge_source(&self, edge: usize) -> u32 {
        (self.offsets.partition_point(|&o| o <= edge as u64) - 1) as u32
    }

    /// Edge count of the whole graph.
    pub fn edge_count(&self) -> usize {
        self.dst.len()
    }

    /// Breadth-first tree from the initial node: the first edge, in index
    /// order, that discovers each node. `u64::MAX` at the root and at nodes
    /// that were never expanded into.
    pub fn bfs_parents(&self) -> Vec<u64> {
        let mut parent = vec![u64::MAX; self.states.len()];
        for node in 0..self.states.len() as u32 {
            for e in self.edge_range(node) {
                let d = self.dst[e] as usize;
                if d != 0 && parent[d] == u64::MAX {
                    parent[d] = e as u64;
                }
            }
        }
        parent
    }

    /// Edges of the breadth-first path from the initial node to `node`.
    pub fn path_to(&self, parents: &[u64], node: u32) -> Vec<usize> {
        let mut edges = Vec::new();
        let mut n = node;
        while n != 0 {
            let e = parents[n as usize];
            assert!(e != u64::MAX, "node {n} not reachable in the tree");
            edges.push(e as usize);
            n = self.edge_source(e as usize);
        }
        edges.reverse();
        edges
    }

    /// All stored states in index order, for comparing explorations.
    pub fn words(&self) -> &[Packed] {
        &self.states
    }
}

/// Exhaustive single-threaded exploration of the unmutated controller with
/// default limits.
pub fn explore_default(config: &PlantConfig) -> Result<StateGraph, ExploreError> {
    StateGraph::explore(
        &Controller::new(config),
        ExploreMode::Exhaustive,
        &Limits::default(),
        false,
    )
}
