//! Allocation instances and the priority order shared by the sequential mechanisms.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Agent, AgentId, ItemId, ItemType, Status};
use crate::valuation::{StructuredValuation, Valuation};

/// Item types, agents and one valuation per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub items: Vec<ItemType>,
    pub agents: Vec<Agent>,
    pub valuations: Vec<Valuation>,
}

impl Instance {
    pub fn new(items: Vec<ItemType>, agents: Vec<Agent>, valuations: Vec<Valuation>) -> Self {
        assert_eq!(agents.len(), valuations.len(), "one valuation per agent");
        Self { items, agents, valuations }
    }

    /// Structured instance from explicit approval sets. Every agent is a
    /// Freshman with rating 2 on approved types and 1 elsewhere.
    pub fn from_approvals(items: Vec<ItemType>, approvals: &[Vec<ItemId>], course_max: &[u32]) -> Self {
        let statuses = vec![Status::Freshman; approvals.len()];
        Self::from_approvals_with_status(items, approvals, course_max, &statuses)
    }

    pub fn from_approvals_with_status(
        items: Vec<ItemType>,
        approvals: &[Vec<ItemId>],
        course_max: &[u32],
        statuses: &[Status],
    ) -> Self {
        let m = items.len();
        let slots: Vec<u32> = items.iter().map(|g| g.slot).collect();
        let mut agents = Vec::with_capacity(approvals.len());
        let mut valuations = Vec::with_capacity(approvals.len());
        for (i, approved) in approvals.iter().enumerate() {
            let mut ratings = vec![1u8; m];
            for &g in approved {
                ratings[g] = 2;
            }
            agents.push(Agent {
                id: i,
                student_id: format!("s{i}"),
                status: statuses[i],
                ratings,
                course_max: course_max[i],
            });
            valuations.push(StructuredValuation::new(&slots, approved.iter().copied(), course_max[i]).into());
        }
        Self { items, agents, valuations }
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn num_types(&self) -> usize {
        self.items.len()
    }

    pub fn capacities(&self) -> Vec<u32> {
        self.items.iter().map(|g| g.capacity).collect()
    }

    /// `q_total`
    pub fn total_capacity(&self) -> u64 {
        self.items.iter().map(|g| g.capacity as u64).sum()
    }

    pub fn is_structured(&self) -> bool {
        self.valuations.iter().all(|v| v.as_structured().is_some())
    }
}

/// Agents sorted by status priority, then by a seeded permutation within each status.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PickOrder {
    order: Vec<AgentId>,
    rank: Vec<usize>,
}

impl PickOrder {
    pub fn from_seed(agents: &[Agent], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<AgentId> = (0..agents.len()).collect();
        order.shuffle(&mut rng);
        // Stable sort keeps the shuffled order inside each status.
        order.sort_by_key(|&i| std::cmp::Reverse(agents[i].status));
        Self::from_order(order)
    }

    /// Panics unless `order` is a permutation of `0..n`.
    pub fn from_order(order: Vec<AgentId>) -> Self {
        let mut rank = vec![usize::MAX; order.len()];
        for (pos, &i) in order.iter().enumerate() {
            assert!(i < order.len() && rank[i] == usize::MAX, "pick order must be a permutation");
            rank[i] = pos;
        }
        Self { order, rank }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_order((0..n).collect())
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.order
    }

    /// Position of agent `i`; smaller means higher priority.
    pub fn rank(&self, i: AgentId) -> usize {
        self.rank[i]
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}
