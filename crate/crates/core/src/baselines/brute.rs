//! Exhaustive search over clean allocations, for testing on tiny instances.

use thiserror::Error;

use crate::instance::Instance;
use crate::model::{Bundle, ItemId};

pub const DEFAULT_MAX_STATES: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BruteForceError {
    #[error("search space of {states} states exceeds the limit of {limit}")]
    InstanceTooLarge { states: u64, limit: u64 },
}

/// Clean 0/1 bundles of agent `i` over its approved types, paired with their value.
fn clean_options(instance: &Instance, i: usize) -> Vec<(Vec<ItemId>, u32)> {
    let m = instance.num_types();
    let val = &instance.valuations[i];
    let approved = val.approved();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << approved.len()) {
        let items: Vec<ItemId> =
            approved.iter().enumerate().filter(|(k, _)| mask & (1 << k) != 0).map(|(_, &g)| g).collect();
        if val.is_clean(&Bundle::from_items(m, &items)) {
            out.push((items.clone(), items.len() as u32));
        }
    }
    out
}

/// Calls `visit` with the utility vector of every valid clean allocation.
fn enumerate(instance: &Instance, max_states: u64, mut visit: impl FnMut(&[u32])) -> Result<(), BruteForceError> {
    let n = instance.num_agents();
    for i in 0..n {
        if instance.valuations[i].approved().len() > 20 {
            return Err(BruteForceError::InstanceTooLarge { states: u64::MAX, limit: max_states });
        }
    }
    let options: Vec<_> = (0..n).map(|i| clean_options(instance, i)).collect();
    let states = options.iter().try_fold(1u64, |acc, o| acc.checked_mul(o.len() as u64)).unwrap_or(u64::MAX);
    if states > max_states {
        return Err(BruteForceError::InstanceTooLarge { states, limit: max_states });
    }
    let mut remaining = instance.capacities();
    let mut utils = vec![0u32; n];
    fn rec(
        i: usize,
        options: &[Vec<(Vec<ItemId>, u32)>],
        remaining: &mut [u32],
        utils: &mut [u32],
        visit: &mut dyn FnMut(&[u32]),
    ) {
        if i == options.len() {
            visit(utils);
            return;
        }
        for (items, value) in &options[i] {
            if items.iter().all(|&g| remaining[g] > 0) {
                items.iter().for_each(|&g| remaining[g] -= 1);
                utils[i] = *value;
                rec(i + 1, options, remaining, utils, visit);
                items.iter().for_each(|&g| remaining[g] += 1);
            }
        }
    }
    rec(0, &options, &mut remaining, &mut utils, &mut visit);
    Ok(())
}

/// Lexicographic maximum of the ascending-sorted utility vectors.
pub fn brute_force_leximin(instance: &Instance, max_states: u64) -> Result<Vec<u32>, BruteForceError> {
    let mut best: Vec<u32> = Vec::new();
    let mut seen = false;
    enumerate(instance, max_states, |u| {
        let mut sorted = u.to_vec();
        sorted.sort_unstable();
        if !seen || sorted > best {
            best = sorted;
            seen = true;
        }
    })?;
    Ok(best)
}

pub fn brute_force_max_usw(instance: &Instance, max_states: u64) -> Result<u32, BruteForceError> {
    let mut best = 0;
    enumerate(instance, max_states, |u| best = best.max(u.iter().sum()))?;
    Ok(best)
}
