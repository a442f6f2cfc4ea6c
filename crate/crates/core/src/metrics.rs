//! Welfare and fairness measures of an allocation.
//!
//! Pair counters range over ordered pairs `(i, j)` with `i != j`.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Allocation, Bundle, ItemId};
use crate::valuation::{StructuredValuation, Valuation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub usw: u64,
    pub usw_pct: f64,
    pub nsw_norm: f64,
    pub zero_count: usize,
    pub envy: u64,
    pub ef1_violations: u64,
    pub efx_violations: u64,
    pub pmms_violations: u64,
    pub bundle_histogram: BTreeMap<u32, usize>,
    pub bundle_mean: f64,
    pub bundle_std: f64,
}

impl MetricsReport {
    pub fn compute(alloc: &Allocation, valuations: &[Valuation]) -> Self {
        let (usw, usw_pct) = usw(alloc, valuations);
        let (nsw_norm, zero_count) = nsw(alloc, valuations);
        let envy = envy_counts(alloc, valuations);
        let (bundle_histogram, bundle_mean, bundle_std) = bundle_sizes(alloc);
        Self {
            usw,
            usw_pct,
            nsw_norm,
            zero_count,
            envy: envy.envy,
            ef1_violations: envy.ef1,
            efx_violations: envy.efx,
            pmms_violations: pmms_violations(alloc, valuations),
            bundle_histogram,
            bundle_mean,
            bundle_std,
        }
    }
}

pub fn utilities(alloc: &Allocation, valuations: &[Valuation]) -> Vec<u32> {
    valuations.iter().enumerate().map(|(i, v)| v.value(alloc.bundle(i))).collect()
}

/// Sum of utilities and its share of all seats.
pub fn usw(alloc: &Allocation, valuations: &[Valuation]) -> (u64, f64) {
    let sum: u64 = utilities(alloc, valuations).iter().map(|&u| u as u64).sum();
    let total = alloc.total_capacity();
    let pct = if total == 0 { 0.0 } else { sum as f64 / total as f64 };
    (sum, pct)
}

/// Geometric mean over positive utilities (0 if none) and the number of zero utilities.
pub fn nsw(alloc: &Allocation, valuations: &[Valuation]) -> (f64, usize) {
    let u = utilities(alloc, valuations);
    let positive: Vec<f64> = u.iter().filter(|&&x| x > 0).map(|&x| x as f64).collect();
    let zeros = u.len() - positive.len();
    if positive.is_empty() {
        return (0.0, zeros);
    }
    let mean_log = positive.iter().map(|x| x.ln()).sum::<f64>() / positive.len() as f64;
    (mean_log.exp(), zeros)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EnvyCounts {
    pub envy: u64,
    pub ef1: u64,
    pub efx: u64,
}

/// `envy`: pairs with `v_i(X_i) < v_i(X_j)`. `ef1`: envy survives removing
/// any single item of `X_j`. `efx`: envy survives removing some item of `X_j`.
pub fn envy_counts(alloc: &Allocation, valuations: &[Valuation]) -> EnvyCounts {
    let own = utilities(alloc, valuations);
    let mut counts = EnvyCounts::default();
    for (i, val) in valuations.iter().enumerate() {
        for (j, other) in alloc.bundles().iter().enumerate() {
            if i == j || other.is_empty() {
                continue;
            }
            let envied = val.value(other);
            if own[i] >= envied {
                continue;
            }
            counts.envy += 1;
            // Removing one copy lowers a binary value by at most one.
            if own[i] + 1 >= envied {
                let mut survives_all = true;
                let mut survives_some = false;
                for g in other.support() {
                    let survives = own[i] < val.value(&other.without(g));
                    survives_all &= survives;
                    survives_some |= survives;
                }
                counts.ef1 += u64::from(survives_all);
                counts.efx += u64::from(survives_some);
            } else {
                counts.ef1 += 1;
                counts.efx += 1;
            }
        }
    }
    counts
}

/// Best two-way split value of `combined` for a structured valuation:
/// slots holding two or more approved copies can serve both halves, single
/// copies are shared out evenly.
fn structured_pmms(v: &StructuredValuation, combined: &Bundle) -> u32 {
    let mut per_slot: BTreeMap<u32, u32> = BTreeMap::new();
    for &g in v.approved() {
        // At most one copy per type counts toward each half.
        let c = combined.count(g).min(2);
        if c > 0 {
            *per_slot.entry(v.slot_of(g)).or_default() += c;
        }
    }
    let shared = per_slot.values().filter(|&&c| c >= 2).count() as u32;
    let single = per_slot.values().filter(|&&c| c == 1).count() as u32;
    (shared + single / 2).min(v.course_max())
}

/// `max_{T <= combined} min(v(T), v(combined - T))`, enumerating `T` over approved types only.
pub fn pmms_share_exhaustive(v: &Valuation, combined: &Bundle) -> u32 {
    let support: Vec<(ItemId, u32)> =
        v.approved().iter().filter(|&&g| combined.count(g) > 0).map(|&g| (g, combined.count(g))).collect();
    let base: Vec<u32> = {
        let mut b = combined.counts().to_vec();
        for &(g, _) in &support {
            b[g] = 0;
        }
        b
    };
    let mut best = 0;
    let mut t = base.clone();
    fn rec(
        v: &Valuation,
        combined: &Bundle,
        support: &[(ItemId, u32)],
        k: usize,
        t: &mut Vec<u32>,
        best: &mut u32,
    ) {
        if k == support.len() {
            let tb = Bundle::from_counts(t.clone());
            let rest = combined.difference(&tb);
            *best = (*best).max(v.value(&tb).min(v.value(&rest)));
            return;
        }
        let (g, c) = support[k];
        for take in 0..=c {
            t[g] = take;
            rec(v, combined, support, k + 1, t, best);
        }
        t[g] = 0;
    }
    rec(v, combined, &support, 0, &mut t, &mut best);
    best
}

pub fn pmms_share(v: &Valuation, combined: &Bundle) -> u32 {
    match v {
        Valuation::Structured(s) => structured_pmms(s, combined),
        Valuation::Constraint(_) => pmms_share_exhaustive(v, combined),
    }
}

/// Ordered pairs where agent `i` values its bundle below its pairwise maximin share with `j`.
pub fn pmms_violations(alloc: &Allocation, valuations: &[Valuation]) -> u64 {
    let own = utilities(alloc, valuations);
    let mut count = 0;
    for (i, val) in valuations.iter().enumerate() {
        let xi = alloc.bundle(i);
        for (j, xj) in alloc.bundles().iter().enumerate() {
            if i == j {
                continue;
            }
            // The share never exceeds the value of the union.
            let union = xi.sum(xj);
            if own[i] >= val.value(&union) {
                continue;
            }
            count += u64::from(own[i] < pmms_share(val, &union));
        }
    }
    count
}

/// Histogram of seats held per agent with the mean and population standard deviation.
pub fn bundle_sizes(alloc: &Allocation) -> (BTreeMap<u32, usize>, f64, f64) {
    let u: Vec<u32> = alloc.bundles().iter().map(Bundle::size).collect();
    let mut hist = BTreeMap::new();
    for &x in &u {
        *hist.entry(x).or_default() += 1;
    }
    if u.is_empty() {
        return (hist, 0.0, 0.0);
    }
    let n = u.len() as f64;
    let mean = u.iter().map(|&x| x as f64).sum::<f64>() / n;
    let var = u.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n;
    (hist, mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("utility vectors differ in length ({0} vs {1})")]
pub struct LengthMismatch(pub usize, pub usize);

/// Compares ascending-sorted utility vectors lexicographically.
pub fn leximin_compare(u: &[u32], w: &[u32]) -> Result<Ordering, LengthMismatch> {
    if u.len() != w.len() {
        return Err(LengthMismatch(u.len(), w.len()));
    }
    let mut a = u.to_vec();
    let mut b = w.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    Ok(a.cmp(&b))
}
