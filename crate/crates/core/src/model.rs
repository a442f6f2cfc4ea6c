//! Item types with multiplicities, agents, bundles and allocations.
//!
//! Copies of an item type are interchangeable, so ownership is tracked as
//! per-type counts. An [`Allocation`] is an `(n + 1) x m` count matrix whose
//! row 0 is the unassigned pool; every column sums to the capacity of its
//! item type.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense index of an item type, assigned in schedule file order.
pub type ItemId = usize;

/// Dense index of an agent, `0..n`.
pub type AgentId = usize;

/// Hard upper bound on any agent's course load.
pub const MAX_COURSE_LOAD: u32 = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemType {
    pub id: ItemId,
    pub catalog: String,
    pub section: String,
    /// Time-slot group. Two item types conflict iff their slots are equal.
    pub slot: u32,
    /// Number of identical copies, always at least 1.
    pub capacity: u32,
}

impl ItemType {
    pub fn new(id: ItemId, catalog: impl Into<String>, section: impl Into<String>, slot: u32, capacity: u32) -> Self {
        assert!(capacity >= 1, "item type {id} must have positive capacity");
        Self { id, catalog: catalog.into(), section: section.into(), slot, capacity }
    }

    /// Shorthand used by tests and generators: catalog is the id, section "01".
    pub fn anonymous(id: ItemId, slot: u32, capacity: u32) -> Self {
        Self::new(id, format!("C{id}"), "01", slot, capacity)
    }

    pub fn key(&self) -> String {
        format!("{}_{}", self.catalog, self.section)
    }
}

/// Academic status. The derived order runs from lowest to highest priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Status {
    Freshman,
    Sophomore,
    Junior,
    Senior,
    Ms,
    Phd,
}

impl Status {
    /// Highest priority first: PhD, MS, Senior, Junior, Sophomore, Freshman.
    pub const PRIORITY: [Status; 6] =
        [Status::Phd, Status::Ms, Status::Senior, Status::Junior, Status::Sophomore, Status::Freshman];

    pub fn is_graduate(self) -> bool {
        matches!(self, Status::Ms | Status::Phd)
    }

    /// Department cap on the number of courses: 4 for graduate students, 6 otherwise.
    pub fn load_limit(self) -> u32 {
        if self.is_graduate() {
            4
        } else {
            MAX_COURSE_LOAD
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Freshman => "Freshman",
            Status::Sophomore => "Sophomore",
            Status::Junior => "Junior",
            Status::Senior => "Senior",
            Status::Ms => "MS",
            Status::Phd => "PhD",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown academic status `{0}`")]
pub struct UnknownStatus(pub String);

impl FromStr for Status {
    type Err = UnknownStatus;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "freshman" | "freshmen" => Ok(Status::Freshman),
            "sophomore" | "sophomores" => Ok(Status::Sophomore),
            "junior" | "juniors" => Ok(Status::Junior),
            "senior" | "seniors" => Ok(Status::Senior),
            "ms" | "masters" => Ok(Status::Ms),
            "phd" => Ok(Status::Phd),
            _ => Err(UnknownStatus(s.to_string())),
        }
    }
}

/// A student: status, a 1..=8 rating per item type and a course-load cap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agent {
    pub id: AgentId,
    pub student_id: String,
    pub status: Status,
    pub ratings: Vec<u8>,
    pub course_max: u32,
}

impl Agent {
    pub fn rating(&self, g: ItemId) -> u8 {
        self.ratings.get(g).copied().unwrap_or(1)
    }
}

/// Per-type count vector. `S <= T` is the componentwise order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bundle {
    counts: Vec<u32>,
}

impl Bundle {
    pub fn empty(m: usize) -> Self {
        Self { counts: vec![0; m] }
    }

    pub fn from_counts(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    /// Bundle holding one copy of each listed type.
    pub fn from_items(m: usize, items: &[ItemId]) -> Self {
        let mut b = Self::empty(m);
        for &g in items {
            b.counts[g] += 1;
        }
        b
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn num_types(&self) -> usize {
        self.counts.len()
    }

    #[inline]
    pub fn count(&self, g: ItemId) -> u32 {
        self.counts[g]
    }

    #[inline]
    pub fn contains(&self, g: ItemId) -> bool {
        self.counts[g] > 0
    }

    /// `|S|`, the total number of copies.
    pub fn size(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }

    /// Item types with a nonzero count, ascending.
    pub fn support(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(g, _)| g)
    }

    pub fn add(&mut self, g: ItemId) {
        self.counts[g] += 1;
    }

    /// Removes one copy of `g`. Panics if there is none.
    pub fn remove(&mut self, g: ItemId) {
        assert!(self.counts[g] > 0, "no copy of item type {g} to remove");
        self.counts[g] -= 1;
    }

    /// `S + 1_g`
    pub fn with(&self, g: ItemId) -> Self {
        let mut b = self.clone();
        b.add(g);
        b
    }

    /// `S - 1_g`
    pub fn without(&self, g: ItemId) -> Self {
        let mut b = self.clone();
        b.remove(g);
        b
    }

    /// `S - 1_g + 1_h`
    pub fn swapped(&self, g: ItemId, h: ItemId) -> Self {
        let mut b = self.without(g);
        b.add(h);
        b
    }

    pub fn sum(&self, other: &Bundle) -> Bundle {
        Bundle { counts: self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect() }
    }

    /// Componentwise difference. Panics unless `other <= self`.
    pub fn difference(&self, other: &Bundle) -> Bundle {
        Bundle {
            counts: self
                .counts
                .iter()
                .zip(&other.counts)
                .map(|(a, b)| a.checked_sub(*b).expect("difference of incomparable bundles"))
                .collect(),
        }
    }
}

impl PartialOrd for Bundle {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.counts.len() != other.counts.len() {
            return None;
        }
        let mut le = true;
        let mut ge = true;
        for (a, b) in self.counts.iter().zip(&other.counts) {
            le &= a <= b;
            ge &= a >= b;
        }
        match (le, ge) {
            (true, true) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Less),
            (false, true) => Some(Ordering::Greater),
            (false, false) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AllocError {
    #[error("row {row} holds no copy of item type {item}")]
    Underflow { row: usize, item: ItemId },
    #[error("agent row {row} already holds a seat of item type {item}")]
    SeatDuplication { row: usize, item: ItemId },
    #[error("transfer from row {0} to itself")]
    SelfTransfer(usize),
    #[error("row {row} out of range (allocation has {rows} rows)")]
    RowOutOfRange { row: usize, rows: usize },
}

/// Count matrix with row 0 the unassigned pool and row `i + 1` agent `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Allocation {
    capacities: Vec<u32>,
    rows: Vec<Bundle>,
}

impl Allocation {
    /// Every copy in the pool, every agent empty.
    pub fn new(items: &[ItemType], n: usize) -> Self {
        Self::with_capacities(items.iter().map(|g| g.capacity).collect(), n)
    }

    pub fn with_capacities(capacities: Vec<u32>, n: usize) -> Self {
        let m = capacities.len();
        let mut rows = Vec::with_capacity(n + 1);
        rows.push(Bundle::from_counts(capacities.clone()));
        rows.extend((0..n).map(|_| Bundle::empty(m)));
        Self { capacities, rows }
    }

    /// Builds an allocation from explicit agent bundles, filling the pool with the remainder.
    /// Returns `None` if any column exceeds its capacity.
    pub fn from_bundles(capacities: Vec<u32>, bundles: Vec<Bundle>) -> Option<Self> {
        let mut pool = capacities.clone();
        for b in &bundles {
            for (g, &c) in b.counts().iter().enumerate() {
                pool[g] = pool[g].checked_sub(c)?;
            }
        }
        let mut rows = Vec::with_capacity(bundles.len() + 1);
        rows.push(Bundle::from_counts(pool));
        rows.extend(bundles);
        Some(Self { capacities, rows })
    }

    pub fn num_agents(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn num_types(&self) -> usize {
        self.capacities.len()
    }

    pub fn capacities(&self) -> &[u32] {
        &self.capacities
    }

    pub fn total_capacity(&self) -> u64 {
        self.capacities.iter().map(|&q| q as u64).sum()
    }

    pub fn pool(&self) -> &Bundle {
        &self.rows[0]
    }

    /// Bundle of agent `i` (0-based agent id, not row index).
    pub fn bundle(&self, i: AgentId) -> &Bundle {
        &self.rows[i + 1]
    }

    pub fn bundles(&self) -> &[Bundle] {
        &self.rows[1..]
    }

    pub fn row(&self, r: usize) -> &Bundle {
        &self.rows[r]
    }

    /// Moves one copy of `g` from row `from` to row `to`. Agent rows (>= 1)
    /// may hold at most one seat of each type.
    pub fn transfer(&mut self, from: usize, to: usize, g: ItemId) -> Result<(), AllocError> {
        let rows = self.rows.len();
        for row in [from, to] {
            if row >= rows {
                return Err(AllocError::RowOutOfRange { row, rows });
            }
        }
        if from == to {
            return Err(AllocError::SelfTransfer(from));
        }
        if self.rows[from].count(g) == 0 {
            return Err(AllocError::Underflow { row: from, item: g });
        }
        if to >= 1 && self.rows[to].count(g) >= 1 {
            return Err(AllocError::SeatDuplication { row: to, item: g });
        }
        self.rows[from].remove(g);
        self.rows[to].add(g);
        Ok(())
    }

    /// Column sums equal capacities and agent rows are 0/1.
    pub fn is_valid(&self) -> bool {
        let conserved = (0..self.num_types())
            .all(|g| self.rows.iter().map(|r| r.count(g) as u64).sum::<u64>() == self.capacities[g] as u64);
        conserved && self.rows[1..].iter().all(|b| b.counts().iter().all(|&c| c <= 1))
    }
}
