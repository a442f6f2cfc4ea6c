use crate::instance::{Instance, PickOrder};
use crate::model::{Agent, Allocation, Bundle, ItemId};
use crate::valuation::{StructuredValuation, Valuation};

/// Higher rating first, then smaller item id.
fn preference_key(agent: &Agent, g: ItemId) -> (std::cmp::Reverse<u8>, ItemId) {
    (std::cmp::Reverse(agent.rating(g)), g)
}

/// Each agent in turn takes a maximum-value clean bundle from the remaining seats.
pub fn serial_dictatorship(instance: &Instance, order: &PickOrder) -> Allocation {
    let mut alloc = Allocation::new(&instance.items, instance.num_agents());
    for &i in order.agents() {
        let agent = &instance.agents[i];
        let picks = match &instance.valuations[i] {
            Valuation::Structured(v) => greedy_bundle(v, agent, alloc.pool()),
            v @ Valuation::Constraint(_) => exhaustive_bundle(v, agent, alloc.pool()),
        };
        for g in picks {
            alloc.transfer(0, i + 1, g).expect("picked seats are available");
        }
    }
    alloc
}

/// Greedy is optimal for the partition-matroid structure: one seat per
/// uncovered slot, best-rated first, until the course cap binds.
fn greedy_bundle(v: &StructuredValuation, agent: &Agent, pool: &Bundle) -> Vec<ItemId> {
    let mut candidates: Vec<ItemId> = v.approved().iter().copied().filter(|&g| pool.count(g) > 0).collect();
    candidates.sort_by_key(|&g| preference_key(agent, g));
    let mut slots = Vec::new();
    let mut picks = Vec::new();
    for g in candidates {
        if picks.len() as u32 >= v.course_max() {
            break;
        }
        let slot = v.slot_of(g);
        if !slots.contains(&slot) {
            slots.push(slot);
            picks.push(g);
        }
    }
    picks
}

/// Largest clean subset of the available approved types; ties go to the
/// higher total rating, then the lexicographically smaller id set.
fn exhaustive_bundle(v: &Valuation, agent: &Agent, pool: &Bundle) -> Vec<ItemId> {
    let m = pool.num_types();
    let candidates: Vec<ItemId> = v.approved().iter().copied().filter(|&g| pool.count(g) > 0).collect();
    assert!(candidates.len() <= 24, "exhaustive bundle search over {} types", candidates.len());
    let mut best: Option<(usize, u32, Vec<ItemId>)> = None;
    for mask in 0u32..(1 << candidates.len()) {
        let picks: Vec<ItemId> =
            candidates.iter().enumerate().filter(|(k, _)| mask & (1 << k) != 0).map(|(_, &g)| g).collect();
        let bundle = Bundle::from_items(m, &picks);
        if !v.is_clean(&bundle) {
            continue;
        }
        let rating: u32 = picks.iter().map(|&g| agent.rating(g) as u32).sum();
        let better = match &best {
            None => true,
            Some((size, r, ids)) => (picks.len(), rating) > (*size, *r) || ((picks.len(), rating) == (*size, *r) && picks < *ids),
        };
        if better {
            best = Some((picks.len(), rating, picks));
        }
    }
    best.map(|(_, _, picks)| picks).unwrap_or_default()
}

/// Agents take turns in a fixed order, each taking one remaining seat with
/// marginal gain 1. Stops after a full round without an assignment.
pub fn round_robin(instance: &Instance, order: &PickOrder) -> Allocation {
    let mut alloc = Allocation::new(&instance.items, instance.num_agents());
    loop {
        let mut assigned = false;
        for &i in order.agents() {
            let agent = &instance.agents[i];
            let val = &instance.valuations[i];
            let pick = val
                .approved()
                .iter()
                .copied()
                .filter(|&g| alloc.pool().count(g) > 0 && val.marginal(alloc.bundle(i), g) == 1)
                .min_by_key(|&g| preference_key(agent, g));
            if let Some(g) = pick {
                alloc.transfer(0, i + 1, g).expect("picked seat is available");
                assigned = true;
            }
        }
        if !assigned {
            return alloc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ItemType;
    use crate::valuation::ConstraintValuation;

    fn items(caps: &[u32], slots: &[u32]) -> Vec<ItemType> {
        caps.iter().zip(slots).enumerate().map(|(g, (&q, &s))| ItemType::anonymous(g, s, q)).collect()
    }

    fn utilities(inst: &Instance, alloc: &Allocation) -> Vec<u32> {
        (0..inst.num_agents()).map(|i| inst.valuations[i].value(alloc.bundle(i))).collect()
    }

    #[test]
    fn dictator_takes_everything_it_wants() {
        let inst = Instance::from_approvals(items(&[1, 1], &[0, 1]), &[vec![0, 1]], &[2]);
        let a = serial_dictatorship(&inst, &PickOrder::identity(1));
        assert_eq!(a.bundle(0).counts(), &[1, 1]);
    }

    #[test]
    fn first_in_order_wins_a_single_seat() {
        let inst = Instance::from_approvals(items(&[1], &[0]), &[vec![0], vec![0]], &[1, 1]);
        let a = serial_dictatorship(&inst, &PickOrder::identity(2));
        assert_eq!(utilities(&inst, &a), vec![1, 0]);
    }

    #[test]
    fn dictator_respects_slots_and_ratings() {
        let mut inst = Instance::from_approvals(items(&[1, 1, 1], &[0, 0, 1]), &[vec![0, 1, 2]], &[3]);
        inst.agents[0].ratings = vec![3, 7, 2];
        let a = serial_dictatorship(&inst, &PickOrder::identity(1));
        assert_eq!(a.bundle(0).counts(), &[0, 1, 1]);
    }

    #[test]
    fn generic_dictator_matches_structured() {
        let inst = Instance::from_approvals(items(&[1, 1, 2, 1], &[0, 0, 1, 2]), &[vec![0, 1, 2], vec![1, 2, 3]], &[2, 2]);
        let mut generic = inst.clone();
        generic.valuations = inst.valuations.iter().map(|v| Valuation::from(v.constraints().into_owned())).collect();
        let order = PickOrder::identity(2);
        let a = serial_dictatorship(&inst, &order);
        let b = serial_dictatorship(&generic, &order);
        assert_eq!(utilities(&inst, &a), utilities(&generic, &b));
    }

    #[test]
    fn generic_dictator_handles_non_partition_conflicts() {
        // A-B and B-C conflict; best clean bundle is {A, C}.
        let inst = Instance::new(
            items(&[1, 1, 1], &[0, 1, 2]),
            Instance::from_approvals(items(&[1, 1, 1], &[0, 1, 2]), &[vec![]], &[1]).agents,
            vec![ConstraintValuation::new(vec![vec![1, 1, 0], vec![0, 1, 1]], vec![1, 1]).into()],
        );
        let a = serial_dictatorship(&inst, &PickOrder::identity(1));
        assert_eq!(a.bundle(0).counts(), &[1, 0, 1]);
    }

    #[test]
    fn round_robin_shares_multi_copy_items() {
        let inst = Instance::from_approvals(items(&[2], &[0]), &[vec![0], vec![0]], &[1, 1]);
        let a = round_robin(&inst, &PickOrder::identity(2));
        assert_eq!(utilities(&inst, &a), vec![1, 1]);
    }

    #[test]
    fn round_robin_alternates_picks() {
        let inst = Instance::from_approvals(items(&[1, 1], &[0, 1]), &[vec![0, 1], vec![0, 1]], &[2, 2]);
        let a = round_robin(&inst, &PickOrder::identity(2));
        assert_eq!(a.bundle(0).counts(), &[1, 0]);
        assert_eq!(a.bundle(1).counts(), &[0, 1]);
        assert_eq!(utilities(&inst, &a), vec![1, 1]);
    }

    #[test]
    fn outputs_are_valid_and_clean() {
        let inst = Instance::from_approvals(
            items(&[2, 1, 3, 1], &[0, 0, 1, 2]),
            &[vec![0, 1, 2], vec![1, 2, 3], vec![0, 3], vec![2]],
            &[2, 3, 1, 1],
        );
        let order = PickOrder::identity(4);
        for a in [serial_dictatorship(&inst, &order), round_robin(&inst, &order)] {
            assert!(a.is_valid());
            for i in 0..4 {
                assert!(inst.valuations[i].is_clean(a.bundle(i)));
            }
        }
    }
}
