use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::instance::Instance;
use crate::model::{Allocation, Bundle};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("agent {0} has a general constraint valuation; export the integer program instead")]
    NotStructured(usize),
}

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    rev: usize,
    cap: u32,
}

/// Dinic's algorithm on an adjacency-list residual graph.
struct Dinic {
    graph: Vec<Vec<Arc>>,
    level: Vec<i32>,
    next: Vec<usize>,
}

impl Dinic {
    fn new(nodes: usize) -> Self {
        Self { graph: vec![Vec::new(); nodes], level: vec![0; nodes], next: vec![0; nodes] }
    }

    /// Returns `(node, index)` of the forward arc.
    fn add_arc(&mut self, from: usize, to: usize, cap: u32) -> (usize, usize) {
        let fwd = self.graph[from].len();
        let bwd = self.graph[to].len() + usize::from(from == to);
        self.graph[from].push(Arc { to, rev: bwd, cap });
        self.graph[to].push(Arc { to: from, rev: fwd, cap: 0 });
        (from, fwd)
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for a in &self.graph[u] {
                if a.cap > 0 && self.level[a.to] < 0 {
                    self.level[a.to] = self.level[u] + 1;
                    queue.push_back(a.to);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, limit: u32) -> u32 {
        if u == t {
            return limit;
        }
        while self.next[u] < self.graph[u].len() {
            let k = self.next[u];
            let Arc { to, rev, cap } = self.graph[u][k];
            if cap > 0 && self.level[to] == self.level[u] + 1 {
                let pushed = self.dfs(to, t, limit.min(cap));
                if pushed > 0 {
                    self.graph[u][k].cap -= pushed;
                    self.graph[to][rev].cap += pushed;
                    return pushed;
                }
            }
            self.next[u] += 1;
        }
        0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> u64 {
        let mut total = 0u64;
        while self.bfs(s, t) {
            self.next.iter_mut().for_each(|n| *n = 0);
            loop {
                let f = self.dfs(s, t, u32::MAX);
                if f == 0 {
                    break;
                }
                total += f as u64;
            }
        }
        total
    }

    fn flow_on(&self, (node, idx): (usize, usize)) -> u32 {
        let a = &self.graph[node][idx];
        self.graph[a.to][a.rev].cap
    }
}

/// Utilitarian optimum for structured valuations as an integral max flow:
/// source -> agent (course cap), agent -> (agent, slot) (1),
/// (agent, slot) -> approved item in that slot (1), item -> sink (capacity).
pub fn max_usw_flow(instance: &Instance) -> Result<Allocation, FlowError> {
    let n = instance.num_agents();
    let m = instance.num_types();
    let vals = instance
        .valuations
        .iter()
        .enumerate()
        .map(|(i, v)| v.as_structured().ok_or(FlowError::NotStructured(i)))
        .collect::<Result<Vec<_>, _>>()?;

    let source = 0;
    let sink = 1;
    let item_node = |g: usize| 2 + g;
    let mut next_node = 2 + m;
    let mut dinic = Dinic::new(next_node);
    for (g, item) in instance.items.iter().enumerate() {
        dinic.add_arc(item_node(g), sink, item.capacity);
    }
    let mut seat_arcs = Vec::new();
    for (i, v) in vals.iter().enumerate() {
        if v.approved().is_empty() {
            continue;
        }
        let agent_node = next_node;
        next_node += 1;
        dinic.graph.push(Vec::new());
        dinic.add_arc(source, agent_node, v.course_max());
        let mut by_slot: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for &g in v.approved() {
            by_slot.entry(v.slot_of(g)).or_default().push(g);
        }
        for items in by_slot.values() {
            let slot_node = next_node;
            next_node += 1;
            dinic.graph.push(Vec::new());
            dinic.add_arc(agent_node, slot_node, 1);
            for &g in items {
                seat_arcs.push((i, g, dinic.add_arc(slot_node, item_node(g), 1)));
            }
        }
    }
    dinic.level.resize(next_node, 0);
    dinic.next.resize(next_node, 0);
    dinic.max_flow(source, sink);

    let mut bundles = vec![Bundle::empty(m); n];
    for (i, g, arc) in seat_arcs {
        if dinic.flow_on(arc) == 1 {
            bundles[i].add(g);
        }
    }
    Ok(Allocation::from_bundles(instance.capacities(), bundles).expect("flow respects item capacities"))
}
