//! Yankee Swap with item multiplicity.
//!
//! The exchange graph has one node per item type. An edge `g -> h` exists
//! while at least one agent holding a copy of `g` could trade it for a copy
//! of `h` without losing value; those agents are the responsible set
//! `R[g -> h]`. Each round the poorest playing agent looks for a shortest
//! path from a type it gains from to a type with an unassigned copy. Running
//! the path hands one seat down the chain; if there is no path the agent
//! leaves the game.
//!
//! The graph is maintained incrementally. After a path runs, only the agents
//! whose bundles changed are re-examined, and only against the types they
//! approve: a clean bundle can never trade into an unapproved type.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, PickOrder};
use crate::model::{AgentId, Allocation, ItemId};
use crate::valuation::Valuation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum YsError {
    #[error("no agents left playing")]
    EmptyGame,
    #[error("agent {0} is not playing")]
    NotPlaying(AgentId),
    #[error("stale transfer path: {0}")]
    StalePath(String),
}

/// Responsible agents, keyed by ordered pair of item types. Only nonempty sets are stored.
pub type Responsible = BTreeMap<(ItemId, ItemId), BTreeSet<AgentId>>;

/// Histogram of transfer path lengths, counted in nodes. Length 0 records an
/// agent leaving the game; length 1 a direct pick from the pool.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStats {
    pub histogram: BTreeMap<usize, u64>,
    pub iterations: u64,
}

impl PathStats {
    pub fn record(&mut self, len: usize) {
        *self.histogram.entry(len).or_default() += 1;
        self.iterations += 1;
    }

    pub fn max_length(&self) -> usize {
        self.histogram.keys().next_back().copied().unwrap_or(0)
    }

    /// Fraction of iterations whose path length is at most `len`.
    pub fn fraction_at_most(&self, len: usize) -> f64 {
        if self.iterations == 0 {
            return 1.0;
        }
        let hits: u64 = self.histogram.range(..=len).map(|(_, c)| c).sum();
        hits as f64 / self.iterations as f64
    }
}

/// What one iteration of the main loop did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Augmented { agent: AgentId, path: Vec<ItemId> },
    Removed { agent: AgentId },
}

#[derive(Debug, Clone)]
pub struct ExchangeState<'a> {
    valuations: &'a [Valuation],
    alloc: Allocation,
    responsible: Responsible,
    out_edges: Vec<BTreeSet<ItemId>>,
    in_edges: Vec<BTreeSet<ItemId>>,
    /// `(utility, priority rank, agent)` for every playing agent.
    playing: BTreeSet<(u32, usize, AgentId)>,
    utilities: Vec<u32>,
    rank: Vec<usize>,
}

impl<'a> ExchangeState<'a> {
    pub fn new(instance: &'a Instance, order: &PickOrder) -> Self {
        let n = instance.num_agents();
        let m = instance.num_types();
        assert_eq!(order.len(), n, "pick order must cover every agent");
        let rank: Vec<usize> = (0..n).map(|i| order.rank(i)).collect();
        let playing = (0..n).map(|i| (0, rank[i], i)).collect();
        Self {
            valuations: &instance.valuations,
            alloc: Allocation::new(&instance.items, n),
            responsible: Responsible::new(),
            out_edges: vec![BTreeSet::new(); m],
            in_edges: vec![BTreeSet::new(); m],
            playing,
            utilities: vec![0; n],
            rank,
        }
    }

    pub fn allocation(&self) -> &Allocation {
        &self.alloc
    }

    pub fn into_allocation(self) -> Allocation {
        self.alloc
    }

    pub fn responsible(&self) -> &Responsible {
        &self.responsible
    }

    pub fn utilities(&self) -> &[u32] {
        &self.utilities
    }

    pub fn has_edge(&self, g: ItemId, h: ItemId) -> bool {
        self.out_edges[g].contains(&h)
    }

    pub fn edges(&self) -> impl Iterator<Item = (ItemId, ItemId)> + '_ {
        self.out_edges.iter().enumerate().flat_map(|(g, hs)| hs.iter().map(move |&h| (g, h)))
    }

    pub fn is_playing(&self, i: AgentId) -> bool {
        self.playing.contains(&(self.utilities[i], self.rank[i], i))
    }

    pub fn num_playing(&self) -> usize {
        self.playing.len()
    }

    /// Playing agent of least utility; ties go to the higher-priority agent.
    pub fn select_poorest(&self) -> Result<AgentId, YsError> {
        self.playing.first().map(|&(_, _, i)| i).ok_or(YsError::EmptyGame)
    }

    /// Shortest path `(g_0, ..., g_p)` with `g_0` in `F_i(X)` and an
    /// unassigned copy of `g_p`. Among shortest paths the lexicographically
    /// smallest node sequence is returned.
    pub fn find_transfer_path(&self, i: AgentId) -> Option<Vec<ItemId>> {
        let sources = self.valuations[i].marginal_gain_set(self.alloc.bundle(i));
        if sources.is_empty() {
            return None;
        }
        let m = self.alloc.num_types();
        // Distance to the pool, by breadth-first search over reversed edges.
        let mut dist = vec![usize::MAX; m];
        let mut queue = VecDeque::new();
        for g in self.alloc.pool().support() {
            dist[g] = 0;
            queue.push_back(g);
        }
        while let Some(h) = queue.pop_front() {
            for &g in &self.in_edges[h] {
                if dist[g] == usize::MAX {
                    dist[g] = dist[h] + 1;
                    queue.push_back(g);
                }
            }
        }
        let start = sources.into_iter().filter(|&g| dist[g] != usize::MAX).min_by_key(|&g| (dist[g], g))?;
        let mut path = Vec::with_capacity(dist[start] + 1);
        let mut cur = start;
        path.push(cur);
        while dist[cur] > 0 {
            cur = *self.out_edges[cur]
                .iter()
                .find(|&&h| dist[h] == dist[cur] - 1)
                .expect("breadth-first distances are consistent");
            path.push(cur);
        }
        Some(path)
    }

    fn check_path(&self, i: AgentId, path: &[ItemId]) -> Result<(), YsError> {
        let stale = |msg: String| Err(YsError::StalePath(msg));
        let Some((&first, _)) = path.split_first() else {
            return stale("empty path".into());
        };
        let last = *path.last().expect("nonempty");
        if self.valuations[i].marginal(self.alloc.bundle(i), first) != 1 {
            return stale(format!("agent {i} gains nothing from item type {first}"));
        }
        if self.alloc.pool().count(last) == 0 {
            return stale(format!("no unassigned copy of item type {last}"));
        }
        let distinct: BTreeSet<_> = path.iter().collect();
        if distinct.len() != path.len() {
            return stale("path repeats an item type".into());
        }
        for w in path.windows(2) {
            if !self.responsible.contains_key(&(w[0], w[1])) {
                return stale(format!("no edge {} -> {}", w[0], w[1]));
            }
        }
        Ok(())
    }

    /// Runs a transfer path for agent `i`: `i` takes `g_0`, a responsible
    /// owner of each `g_k` trades it for `g_{k+1}`, and the last trader takes
    /// an unassigned copy of `g_p`.
    pub fn augment(&mut self, i: AgentId, path: &[ItemId]) -> Result<(), YsError> {
        if !self.is_playing(i) {
            return Err(YsError::NotPlaying(i));
        }
        self.check_path(i, path)?;

        // Phase 1: move the seats and drop responsibilities for lost types.
        let mut touched = vec![i];
        let mut receiver = i + 1;
        for w in path.windows(2) {
            let (g, g_next) = (w[0], w[1]);
            let j = *self.responsible[&(g, g_next)].first().expect("stored sets are nonempty");
            self.alloc.transfer(j + 1, receiver, g).map_err(|e| YsError::StalePath(e.to_string()))?;
            receiver = j + 1;
            touched.push(j);
            if self.alloc.bundle(j).count(g) == 0 {
                for &h in self.valuations[j].approved() {
                    self.unassign(g, h, j);
                }
            }
        }
        let last = *path.last().expect("checked nonempty");
        self.alloc.transfer(0, receiver, last).map_err(|e| YsError::StalePath(e.to_string()))?;

        // Phase 2: re-examine every touched agent against its approved types.
        touched.sort_unstable();
        touched.dedup();
        for &j in &touched {
            let bundle = self.alloc.bundle(j).clone();
            let val = &self.valuations[j];
            for h in bundle.support() {
                for &h2 in val.approved() {
                    if h2 == h {
                        continue;
                    }
                    if val.exchangeable(&bundle, h, h2) {
                        self.assign(h, h2, j);
                    } else {
                        self.unassign(h, h2, j);
                    }
                }
            }
        }

        let u = self.utilities[i];
        self.playing.remove(&(u, self.rank[i], i));
        self.utilities[i] = u + 1;
        self.playing.insert((u + 1, self.rank[i], i));

        if cfg!(debug_assertions) {
            for &j in &touched {
                debug_assert_eq!(
                    self.valuations[j].value(self.alloc.bundle(j)),
                    self.utilities[j],
                    "cached utility of agent {j} drifted"
                );
            }
        }
        Ok(())
    }

    fn assign(&mut self, g: ItemId, h: ItemId, j: AgentId) {
        let set = self.responsible.entry((g, h)).or_default();
        if set.insert(j) && set.len() == 1 {
            self.out_edges[g].insert(h);
            self.in_edges[h].insert(g);
        }
    }

    fn unassign(&mut self, g: ItemId, h: ItemId, j: AgentId) {
        if let Some(set) = self.responsible.get_mut(&(g, h)) {
            if set.remove(&j) && set.is_empty() {
                self.responsible.remove(&(g, h));
                self.out_edges[g].remove(&h);
                self.in_edges[h].remove(&g);
            }
        }
    }

    pub fn remove_agent(&mut self, i: AgentId) {
        self.playing.remove(&(self.utilities[i], self.rank[i], i));
    }

    /// One iteration of the main loop, or `None` once nobody is playing.
    pub fn step(&mut self) -> Option<Step> {
        let i = self.select_poorest().ok()?;
        match self.find_transfer_path(i) {
            Some(path) => {
                self.augment(i, &path).expect("freshly searched path is valid");
                Some(Step::Augmented { agent: i, path })
            }
            None => {
                self.remove_agent(i);
                Some(Step::Removed { agent: i })
            }
        }
    }

    /// Responsible sets computed from the allocation alone.
    pub fn rebuild_responsible(&self) -> Responsible {
        rebuild_responsible(&self.alloc, self.valuations)
    }

    /// Incremental graph, responsible sets and cached utilities all agree with a rebuild.
    pub fn is_consistent(&self) -> bool {
        let rebuilt = self.rebuild_responsible();
        if rebuilt != self.responsible {
            return false;
        }
        let edges: BTreeSet<(ItemId, ItemId)> = self.edges().collect();
        let keys: BTreeSet<(ItemId, ItemId)> = rebuilt.keys().copied().collect();
        let reverse: BTreeSet<(ItemId, ItemId)> =
            self.in_edges.iter().enumerate().flat_map(|(h, gs)| gs.iter().map(move |&g| (g, h))).collect();
        edges == keys
            && reverse == keys
            && (0..self.utilities.len()).all(|i| self.valuations[i].value(self.alloc.bundle(i)) == self.utilities[i])
    }
}

/// `R[g -> h]` for every held `g` and approved `h != g`, from scratch.
pub fn rebuild_responsible(alloc: &Allocation, valuations: &[Valuation]) -> Responsible {
    let mut r = Responsible::new();
    for (j, val) in valuations.iter().enumerate() {
        let bundle = alloc.bundle(j);
        for g in bundle.support() {
            for &h in val.approved() {
                if h != g && val.exchangeable(bundle, g, h) {
                    r.entry((g, h)).or_default().insert(j);
                }
            }
        }
    }
    r
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct YsOutcome {
    pub allocation: Allocation,
    pub stats: PathStats,
}

/// Runs Yankee Swap to completion. For binary submodular valuations the
/// result is clean, leximin, and maximizes utilitarian welfare.
pub fn run_yankee_swap(instance: &Instance, order: &PickOrder) -> YsOutcome {
    let mut state = ExchangeState::new(instance, order);
    let mut stats = PathStats::default();
    while let Some(step) = state.step() {
        match step {
            Step::Augmented { path, .. } => stats.record(path.len()),
            Step::Removed { .. } => stats.record(0),
        }
    }
    YsOutcome { allocation: state.into_allocation(), stats }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ItemType, Status};

    fn items(caps: &[u32]) -> Vec<ItemType> {
        caps.iter().enumerate().map(|(g, &q)| ItemType::anonymous(g, g as u32, q)).collect()
    }

    /// g (q=1), h (q=1); agent 0 approves both, agent 1 approves only g.
    fn steal_instance() -> Instance {
        Instance::from_approvals(items(&[1, 1]), &[vec![0, 1], vec![0]], &[1, 1])
    }

    #[test]
    fn poorest_prefers_higher_status_on_ties() {
        let inst = Instance::from_approvals_with_status(
            items(&[1]),
            &[vec![0], vec![0]],
            &[1, 1],
            &[Status::Ms, Status::Phd],
        );
        let order = PickOrder::from_seed(&inst.agents, 3);
        let state = ExchangeState::new(&inst, &order);
        assert_eq!(state.select_poorest(), Ok(1));
    }

    #[test]
    fn poorest_is_unique_minimum() {
        let inst = Instance::from_approvals(items(&[2, 2, 2]), &[vec![0, 1, 2], vec![0, 1, 2]], &[3, 3]);
        let order = PickOrder::identity(2);
        let mut state = ExchangeState::new(&inst, &order);
        state.augment(0, &[0]).unwrap();
        state.augment(0, &[1]).unwrap();
        state.augment(1, &[0]).unwrap();
        assert_eq!(state.utilities(), &[2, 1]);
        assert_eq!(state.select_poorest(), Ok(1));
        state.remove_agent(1);
        assert_eq!(state.select_poorest(), Ok(0));
        state.remove_agent(0);
        assert_eq!(state.select_poorest(), Err(YsError::EmptyGame));
    }

    #[test]
    fn direct_pick_and_unreachable() {
        let inst = Instance::from_approvals(items(&[1, 1]), &[vec![0], vec![]], &[1, 1]);
        let order = PickOrder::identity(2);
        let state = ExchangeState::new(&inst, &order);
        assert_eq!(state.find_transfer_path(0), Some(vec![0]));
        assert_eq!(state.find_transfer_path(1), None);
    }

    #[test]
    fn steal_path_moves_seats_down_the_chain() {
        let inst = steal_instance();
        let order = PickOrder::identity(2);
        let mut state = ExchangeState::new(&inst, &order);
        state.augment(0, &[0]).unwrap();
        assert_eq!(state.responsible().get(&(0, 1)), Some(&BTreeSet::from([0])));
        let path = state.find_transfer_path(1).unwrap();
        assert_eq!(path, vec![0, 1]);
        state.augment(1, &path).unwrap();
        assert_eq!(state.allocation().bundle(1).counts(), &[1, 0]);
        assert_eq!(state.allocation().bundle(0).counts(), &[0, 1]);
        assert_eq!(state.utilities(), &[1, 1]);
        assert!(state.allocation().is_valid());
        assert!(state.is_consistent());
    }

    #[test]
    fn length_one_path_only_touches_pool_and_agent() {
        let inst = Instance::from_approvals(items(&[2, 1]), &[vec![0], vec![0, 1]], &[1, 2]);
        let order = PickOrder::identity(2);
        let mut state = ExchangeState::new(&inst, &order);
        state.augment(1, &[1]).unwrap();
        let before = state.allocation().clone();
        state.augment(0, &[0]).unwrap();
        let after = state.allocation();
        assert_eq!(after.pool().count(0), before.pool().count(0) - 1);
        assert_eq!(after.bundle(0).count(0), 1);
        assert_eq!(after.bundle(1), before.bundle(1));
    }

    #[test]
    fn stale_paths_are_rejected() {
        let inst = steal_instance();
        let order = PickOrder::identity(2);
        let mut state = ExchangeState::new(&inst, &order);
        state.augment(0, &[0]).unwrap();
        assert!(matches!(state.augment(1, &[0]), Err(YsError::StalePath(_))));
        assert!(matches!(state.augment(1, &[1]), Err(YsError::StalePath(_))));
        assert!(matches!(state.augment(1, &[]), Err(YsError::StalePath(_))));
        state.remove_agent(1);
        assert_eq!(state.augment(1, &[0, 1]), Err(YsError::NotPlaying(1)));
    }

    #[test]
    fn single_agent_run() {
        let inst = Instance::from_approvals(items(&[1]), &[vec![0]], &[1]);
        let out = run_yankee_swap(&inst, &PickOrder::identity(1));
        assert_eq!(out.allocation.bundle(0).counts(), &[1]);
        assert_eq!(out.stats.histogram, BTreeMap::from([(0, 1), (1, 1)]));
        assert_eq!(out.stats.iterations, 2);
    }

    #[test]
    fn contested_seat_goes_to_first_in_order() {
        let inst = Instance::from_approvals(items(&[1]), &[vec![0], vec![0]], &[1, 1]);
        let order = PickOrder::from_order(vec![1, 0]);
        let out = run_yankee_swap(&inst, &order);
        assert_eq!(out.allocation.bundle(1).counts(), &[1]);
        assert_eq!(out.allocation.bundle(0).counts(), &[0]);
    }

    #[test]
    fn steal_instance_run() {
        let inst = steal_instance();
        let out = run_yankee_swap(&inst, &PickOrder::identity(2));
        let mut u: Vec<u32> = (0..2).map(|i| inst.valuations[i].value(out.allocation.bundle(i))).collect();
        u.sort_unstable();
        assert_eq!(u, vec![1, 1]);
        assert_eq!(out.stats.histogram.get(&2), Some(&1));
    }
}
