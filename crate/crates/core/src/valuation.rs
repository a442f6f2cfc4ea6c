//! Binary valuations defined by linear constraints.
//!
//! A bundle `T` is feasible for an agent when `Z T <= b`, and the value of a
//! bundle `S` is the size of its largest feasible sub-bundle. Course
//! preferences have a fixed shape (one seat per time slot, a course-load cap,
//! nothing unapproved, one seat per section); [`StructuredValuation`]
//! evaluates that shape directly as a partition-matroid rank, while
//! [`ConstraintValuation`] handles arbitrary `(Z, b)` by enumeration.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::model::{Bundle, ItemId};

/// Approved item types grouped by time slot, capped at `course_max`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredValuation {
    num_types: usize,
    course_max: u32,
    /// Approved `(slot, item)` pairs sorted by slot, then item.
    by_slot: Vec<(u32, ItemId)>,
    /// Approved item ids, ascending.
    approved: Vec<ItemId>,
    approved_mask: Vec<bool>,
    slot_of: Vec<u32>,
}

impl StructuredValuation {
    /// `slot_of` has one entry per item type; `approved` may be in any order.
    pub fn new(slot_of: &[u32], approved: impl IntoIterator<Item = ItemId>, course_max: u32) -> Self {
        let num_types = slot_of.len();
        let mut approved_mask = vec![false; num_types];
        for g in approved {
            approved_mask[g] = true;
        }
        let approved: Vec<ItemId> = (0..num_types).filter(|&g| approved_mask[g]).collect();
        let mut by_slot: Vec<(u32, ItemId)> = approved.iter().map(|&g| (slot_of[g], g)).collect();
        by_slot.sort_unstable();
        Self { num_types, course_max, by_slot, approved, approved_mask, slot_of: slot_of.to_vec() }
    }

    pub fn approved(&self) -> &[ItemId] {
        &self.approved
    }

    #[inline]
    pub fn is_approved(&self, g: ItemId) -> bool {
        self.approved_mask[g]
    }

    pub fn course_max(&self) -> u32 {
        self.course_max
    }

    pub fn slot_of(&self, g: ItemId) -> u32 {
        self.slot_of[g]
    }

    /// Rank of the bundle whose count for type `g` is `count(g)`.
    #[inline]
    fn rank_by(&self, count: impl Fn(ItemId) -> u32) -> u32 {
        let mut covered = 0u32;
        let mut last_slot = None;
        for &(slot, g) in &self.by_slot {
            if last_slot != Some(slot) && count(g) > 0 {
                covered += 1;
                if covered == self.course_max {
                    break;
                }
                last_slot = Some(slot);
            }
        }
        covered.min(self.course_max)
    }

    pub fn value(&self, s: &Bundle) -> u32 {
        self.rank_by(|g| s.count(g))
    }

    /// Value of `S - 1_g + 1_h` without materialising the bundle.
    pub fn value_swapped(&self, s: &Bundle, g: ItemId, h: ItemId) -> u32 {
        self.rank_by(|t| s.count(t) - u32::from(t == g) + u32::from(t == h))
    }

    pub fn value_added(&self, s: &Bundle, g: ItemId) -> u32 {
        self.rank_by(|t| s.count(t) + u32::from(t == g))
    }

    /// The equivalent explicit constraint system: one row per occupied slot,
    /// the course-load row, a zero row for each unapproved type and a unit
    /// row per type.
    pub fn to_constraints(&self) -> ConstraintValuation {
        let m = self.num_types;
        let mut rows = Vec::new();
        let mut limits = Vec::new();
        let mut i = 0;
        while i < self.by_slot.len() {
            let slot = self.by_slot[i].0;
            let mut row = vec![0i64; m];
            while i < self.by_slot.len() && self.by_slot[i].0 == slot {
                row[self.by_slot[i].1] = 1;
                i += 1;
            }
            rows.push(row);
            limits.push(1);
        }
        let mut cap = vec![0i64; m];
        for &g in &self.approved {
            cap[g] = 1;
        }
        rows.push(cap);
        limits.push(self.course_max as i64);
        for g in (0..m).filter(|&g| !self.approved_mask[g]) {
            let mut row = vec![0i64; m];
            row[g] = 1;
            rows.push(row);
            limits.push(0);
        }
        for g in 0..m {
            let mut row = vec![0i64; m];
            row[g] = 1;
            rows.push(row);
            limits.push(1);
        }
        ConstraintValuation::new(rows, limits)
    }
}

/// Arbitrary linear constraint system `Z T <= b` over nonnegative integer bundles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintValuation {
    rows: Vec<Vec<i64>>,
    limits: Vec<i64>,
    approved: Vec<ItemId>,
}

impl ConstraintValuation {
    /// Panics if row lengths disagree or `rows` and `limits` differ in length.
    pub fn new(rows: Vec<Vec<i64>>, limits: Vec<i64>) -> Self {
        assert_eq!(rows.len(), limits.len(), "one limit per constraint row");
        let m = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == m), "ragged constraint matrix");
        let mut v = Self { rows, limits, approved: Vec::new() };
        v.approved = (0..m).filter(|&g| v.is_feasible(&Bundle::from_items(m, &[g]))).collect();
        v
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn limits(&self) -> &[i64] {
        &self.limits
    }

    pub fn approved(&self) -> &[ItemId] {
        &self.approved
    }

    pub fn num_types(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn is_feasible(&self, t: &Bundle) -> bool {
        self.rows.iter().zip(&self.limits).all(|(row, &b)| {
            let lhs: i64 = row.iter().zip(t.counts()).map(|(&z, &c)| z * c as i64).sum();
            lhs <= b
        })
    }

    /// Largest feasible sub-bundle size, by enumerating sub-bundles of the
    /// approved part of `s`. Unapproved types are never part of a feasible
    /// bundle because feasibility is downward closed.
    pub fn value(&self, s: &Bundle) -> u32 {
        let m = s.num_types();
        let support: Vec<(ItemId, u32)> =
            self.approved.iter().filter(|&&g| s.count(g) > 0).map(|&g| (g, s.count(g))).collect();
        let mut t = Bundle::empty(m);
        let mut best = 0;
        self.search(&support, 0, &mut t, 0, &mut best);
        best
    }

    fn search(&self, support: &[(ItemId, u32)], k: usize, t: &mut Bundle, size: u32, best: &mut u32) {
        let remaining: u32 = support[k..].iter().map(|&(_, c)| c).sum();
        if size + remaining <= *best {
            return;
        }
        if k == support.len() {
            if self.is_feasible(t) {
                *best = size;
            }
            return;
        }
        let (g, c) = support[k];
        for take in (0..=c).rev() {
            for _ in 0..take {
                t.add(g);
            }
            self.search(support, k + 1, t, size + take, best);
            for _ in 0..take {
                t.remove(g);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Valuation {
    Structured(StructuredValuation),
    Constraint(ConstraintValuation),
}

impl From<StructuredValuation> for Valuation {
    fn from(v: StructuredValuation) -> Self {
        Valuation::Structured(v)
    }
}

impl From<ConstraintValuation> for Valuation {
    fn from(v: ConstraintValuation) -> Self {
        Valuation::Constraint(v)
    }
}

impl Valuation {
    pub fn value(&self, s: &Bundle) -> u32 {
        match self {
            Valuation::Structured(v) => v.value(s),
            Valuation::Constraint(v) => v.value(s),
        }
    }

    /// `D_i`: types whose singleton has value 1.
    pub fn approved(&self) -> &[ItemId] {
        match self {
            Valuation::Structured(v) => v.approved(),
            Valuation::Constraint(v) => v.approved(),
        }
    }

    pub fn as_structured(&self) -> Option<&StructuredValuation> {
        match self {
            Valuation::Structured(v) => Some(v),
            Valuation::Constraint(_) => None,
        }
    }

    pub fn constraints(&self) -> Cow<'_, ConstraintValuation> {
        match self {
            Valuation::Structured(v) => Cow::Owned(v.to_constraints()),
            Valuation::Constraint(v) => Cow::Borrowed(v),
        }
    }

    /// `v(S + 1_g) - v(S)`, always 0 or 1 for binary valuations.
    pub fn marginal(&self, s: &Bundle, g: ItemId) -> u32 {
        match self {
            Valuation::Structured(v) => v.value_added(s, g) - v.value(s),
            Valuation::Constraint(v) => v.value(&s.with(g)).saturating_sub(v.value(s)),
        }
    }

    /// `F_i(S)`: approved types with marginal gain 1, ascending.
    pub fn marginal_gain_set(&self, s: &Bundle) -> Vec<ItemId> {
        match self {
            Valuation::Structured(v) => {
                let base = v.value(s);
                if base >= v.course_max() {
                    return Vec::new();
                }
                v.approved().iter().copied().filter(|&g| v.value_added(s, g) > base).collect()
            }
            Valuation::Constraint(v) => {
                let base = v.value(s);
                v.approved().iter().copied().filter(|&g| v.value(&s.with(g)) > base).collect()
            }
        }
    }

    /// Whether the holder of `S` keeps its value when trading one `g` for one `h`.
    pub fn exchangeable(&self, s: &Bundle, g: ItemId, h: ItemId) -> bool {
        debug_assert!(s.count(g) >= 1, "exchange of an item type not held");
        if g == h {
            return true;
        }
        match self {
            Valuation::Structured(v) => v.value(s) == v.value_swapped(s, g, h),
            Valuation::Constraint(v) => v.value(s) == v.value(&s.swapped(g, h)),
        }
    }

    /// `v(S) == |S|`: every copy contributes.
    pub fn is_clean(&self, s: &Bundle) -> bool {
        self.value(s) == s.size()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const A: ItemId = 0;
    const B: ItemId = 1;
    const C: ItemId = 2;

    /// A and B share slot 0, C is in slot 1.
    fn triple(course_max: u32) -> StructuredValuation {
        StructuredValuation::new(&[0, 0, 1], [A, B, C], course_max)
    }

    /// Exhaustive oracle: max |T| over T <= S with Z T <= b.
    fn brute_value(v: &ConstraintValuation, s: &Bundle) -> u32 {
        let m = s.num_types();
        let mut best = 0;
        let mut t = vec![0u32; m];
        loop {
            let tb = Bundle::from_counts(t.clone());
            if v.is_feasible(&tb) {
                best = best.max(tb.size());
            }
            let mut k = 0;
            loop {
                if k == m {
                    return best;
                }
                if t[k] < s.count(k) {
                    t[k] += 1;
                    break;
                }
                t[k] = 0;
                k += 1;
            }
        }
    }

    #[test]
    fn value_examples() {
        let v = Valuation::from(triple(2));
        assert_eq!(v.value(&Bundle::empty(3)), 0);
        let all = Bundle::from_items(3, &[A, B, C]);
        assert_eq!(v.value(&all), 2);
        assert_eq!(brute_value(&triple(2).to_constraints(), &all), 2);

        let single = Valuation::from(StructuredValuation::new(&[0], [0], 6));
        assert_eq!(single.value(&Bundle::from_items(1, &[0])), 1);
    }

    #[test]
    fn marginal_examples() {
        let v = Valuation::from(StructuredValuation::new(&[0, 0, 1, 2], [A, B, C], 6));
        let empty = Bundle::empty(4);
        assert_eq!(v.marginal(&empty, A), 1);
        assert_eq!(v.marginal(&empty, 3), 0);
        let holds_a = Bundle::from_items(4, &[A]);
        assert_eq!(v.marginal(&holds_a, B), 0);
        assert_eq!(v.value(&holds_a.with(B)) - v.value(&holds_a), 0);
    }

    #[test]
    fn marginal_gain_set_examples() {
        let v = Valuation::from(triple(2));
        assert_eq!(v.marginal_gain_set(&Bundle::empty(3)), vec![A, B, C]);
        assert_eq!(v.marginal_gain_set(&Bundle::from_items(3, &[A])), vec![C]);
        assert!(v.marginal_gain_set(&Bundle::from_items(3, &[A, C])).is_empty());
    }

    #[test]
    fn exchangeable_examples() {
        let v = Valuation::from(StructuredValuation::new(&[0, 1, 2], [0, 1], 6));
        let s = Bundle::from_items(3, &[0]);
        assert!(v.exchangeable(&s, 0, 0));
        assert!(v.exchangeable(&s, 0, 1));
        assert!(!v.exchangeable(&s, 0, 2));
    }

    #[test]
    fn clean_examples() {
        let v = Valuation::from(StructuredValuation::new(&[0, 0, 1], [A, B], 6));
        assert!(v.is_clean(&Bundle::empty(3)));
        assert!(!v.is_clean(&Bundle::from_items(3, &[C])));
        assert!(!v.is_clean(&Bundle::from_items(3, &[A, B])));
    }

    #[test]
    fn generic_path_handles_non_submodular_conflicts() {
        // A-B and B-C conflict, A-C do not: not a partition of slots.
        let rows = vec![vec![1, 1, 0], vec![0, 1, 1]];
        let v = Valuation::from(ConstraintValuation::new(rows, vec![1, 1]));
        assert_eq!(v.approved(), &[A, B, C]);
        assert_eq!(v.marginal(&Bundle::from_items(3, &[B]), C), 0);
        assert_eq!(v.marginal(&Bundle::from_items(3, &[A, B]), C), 1);
    }

    #[test]
    fn structured_matches_constraint_system_exhaustively() {
        // Every approval set and course cap over a 5-type, 3-slot schedule, all bundles with counts <= 2.
        let slots = [0, 0, 1, 2, 2];
        let m = slots.len();
        for mask in 0u32..(1 << m) {
            let approved: Vec<ItemId> = (0..m).filter(|g| mask & (1 << g) != 0).collect();
            for cap in 1..=3 {
                let sv = StructuredValuation::new(&slots, approved.iter().copied(), cap);
                let cv = sv.to_constraints();
                assert_eq!(cv.approved(), sv.approved());
                for code in 0..3u32.pow(m as u32) {
                    let counts: Vec<u32> = (0..m).map(|k| (code / 3u32.pow(k as u32)) % 3).collect();
                    let s = Bundle::from_counts(counts);
                    assert_eq!(sv.value(&s), cv.value(&s));
                }
            }
        }
    }

    #[test]
    fn constraint_value_matches_brute_force() {
        let rows = vec![vec![1, 1, 0, 0], vec![0, 1, 1, 0], vec![1, 1, 1, 1]];
        let v = ConstraintValuation::new(rows, vec![1, 1, 3]);
        for code in 0..3u32.pow(4) {
            let counts: Vec<u32> = (0..4).map(|k| (code / 3u32.pow(k)) % 3).collect();
            let s = Bundle::from_counts(counts);
            assert_eq!(v.value(&s), brute_value(&v, &s));
        }
    }

    fn arb_structured(m: usize) -> impl Strategy<Value = StructuredValuation> {
        (prop::collection::vec(0u32..4, m), prop::collection::vec(any::<bool>(), m), 1u32..5).prop_map(
            move |(slots, mask, cap)| {
                StructuredValuation::new(&slots, (0..m).filter(|&g| mask[g]), cap)
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn binary_monotone_submodular(
            v in arb_structured(6),
            s in prop::collection::vec(0u32..2, 6),
            extra in prop::collection::vec(0u32..2, 6),
            g in 0usize..6,
        ) {
            let v = Valuation::from(v);
            let small = Bundle::from_counts(s);
            let large = small.sum(&Bundle::from_counts(extra));
            let ms = v.marginal(&small, g);
            let ml = v.marginal(&large, g);
            prop_assert!(ms <= 1 && ml <= 1);
            prop_assert!(ms >= ml);
            prop_assert!(v.value(&small) <= v.value(&large));
            prop_assert!(v.value(&large) <= v.as_structured().unwrap().course_max());
        }

        #[test]
        fn feasibility_is_downward_closed(
            v in arb_structured(5),
            s in prop::collection::vec(0u32..2, 5),
            drop in prop::collection::vec(any::<bool>(), 5),
        ) {
            let cv = v.to_constraints();
            let s = Bundle::from_counts(s);
            if cv.is_feasible(&s) {
                let t = Bundle::from_counts(s.counts().iter().zip(&drop).map(|(&c, &d)| if d { 0 } else { c }).collect());
                prop_assert!(cv.is_feasible(&t));
            }
        }

        #[test]
        fn marginal_gain_set_is_exactly_the_unit_marginals(
            v in arb_structured(6),
            s in prop::collection::vec(0u32..2, 6),
        ) {
            let v = Valuation::from(v);
            let s = Bundle::from_counts(s);
            let expected: Vec<ItemId> = (0..6).filter(|&g| v.marginal(&s, g) == 1).collect();
            let got = v.marginal_gain_set(&s);
            prop_assert!(got.iter().all(|g| v.approved().contains(g)));
            prop_assert_eq!(got, expected);
        }
    }
}
