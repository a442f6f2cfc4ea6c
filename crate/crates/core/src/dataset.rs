//! Department-level constants and a synthetic stand-in for the survey data.
//!
//! The generated department mirrors the published aggregates: 96 sections
//! across six course levels with 7,389 seats in total, and 700 respondents
//! split by status as in the survey. Individual courses, meeting slots and
//! ratings are random.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::seq::index::sample_weighted;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::Instance;
use crate::model::{Agent, ItemType, Status};

/// Enrolled students per status.
pub const POPULATION: [(Status, u32); 6] = [
    (Status::Freshman, 239),
    (Status::Sophomore, 327),
    (Status::Junior, 408),
    (Status::Senior, 573),
    (Status::Ms, 613),
    (Status::Phd, 148),
];

/// Effective survey respondents per status.
pub const RESPONDENTS: [(Status, u32); 6] = [
    (Status::Freshman, 125),
    (Status::Sophomore, 113),
    (Status::Junior, 126),
    (Status::Senior, 117),
    (Status::Ms, 172),
    (Status::Phd, 47),
];

pub const TOTAL_SEATS: u32 = 7389;
pub const NUM_SECTIONS: usize = 96;
pub const NUM_SLOTS: u32 = 20;

/// Sections and seats per course level (100 through 600).
const LEVELS: [(usize, u32); 6] = [(18, 1600), (18, 1500), (18, 1700), (16, 1100), (16, 1000), (10, 489)];

/// How strongly each status gravitates to each course level.
fn level_affinity(status: Status) -> [f64; 6] {
    match status {
        Status::Freshman => [0.70, 0.25, 0.05, 0.0, 0.0, 0.0],
        Status::Sophomore => [0.35, 0.45, 0.15, 0.05, 0.0, 0.0],
        Status::Junior => [0.10, 0.30, 0.45, 0.15, 0.0, 0.0],
        Status::Senior => [0.05, 0.10, 0.35, 0.40, 0.10, 0.0],
        Status::Ms => [0.0, 0.0, 0.10, 0.30, 0.40, 0.20],
        Status::Phd => [0.0, 0.0, 0.0, 0.20, 0.40, 0.40],
    }
}

/// Course-load preference frequencies, `(load, weight)`.
fn load_weights(status: Status) -> &'static [(u32, f64)] {
    if status.is_graduate() {
        &[(2, 0.2), (3, 0.5), (4, 0.3)]
    } else {
        &[(3, 0.10), (4, 0.35), (5, 0.40), (6, 0.15)]
    }
}

/// Chance that a rated course is picked ignoring level affinity.
const BREADTH: f64 = 0.15;

/// Splits `total` proportionally to `weights` with largest-remainder rounding.
pub fn largest_remainder(total: u64, weights: &[f64]) -> Vec<u64> {
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut out: Vec<u64> = exact.iter().map(|x| x.floor() as u64).collect();
    let mut rest = total - out.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    // Stable: equal remainders go to the earlier entry.
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    for &k in &order {
        if rest == 0 {
            break;
        }
        out[k] += 1;
        rest -= 1;
    }
    out
}

/// Per-status cohort sizes for `n` students in the department's proportions.
pub fn cohort_counts(n: usize) -> Vec<(Status, usize)> {
    let weights: Vec<f64> = POPULATION.iter().map(|&(_, p)| p as f64).collect();
    let counts = largest_remainder(n as u64, &weights);
    POPULATION.iter().zip(counts).map(|(&(s, _), c)| (s, c as usize)).collect()
}

pub fn population_of(status: Status) -> u32 {
    POPULATION.iter().find(|(s, _)| *s == status).map_or(0, |&(_, p)| p)
}

fn level_of(catalog: &str) -> usize {
    catalog.bytes().find(u8::is_ascii_digit).map_or(0, |d| (d - b'1') as usize).min(5)
}

/// 96 sections, catalog numbers `CS 1xx` to `CS 6xx`, seats summing to [`TOTAL_SEATS`].
pub fn generate_schedule(seed: u64) -> Vec<ItemType> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items = Vec::with_capacity(NUM_SECTIONS);
    for (level, &(sections, seats)) in LEVELS.iter().enumerate() {
        let weights: Vec<f64> = (0..sections).map(|_| rng.random_range(0.4..1.6)).collect();
        let caps = largest_remainder(seats as u64, &weights);
        let mut numbers: Vec<u32> = (0..100).collect();
        numbers.shuffle(&mut rng);
        numbers.truncate(sections);
        numbers.sort_unstable();
        for (k, num) in numbers.into_iter().enumerate() {
            let catalog = format!("CS {}{:02}", level + 1, num);
            let slot = rng.random_range(0..NUM_SLOTS);
            items.push(ItemType::new(items.len(), catalog, "01", slot, caps[k].max(1) as u32));
        }
    }
    items
}

/// 700 respondents with the survey's status split. Each rates 10 to 20
/// sections on the 2..=8 scale; everything else keeps the default 1.
pub fn generate_respondents(items: &[ItemType], seed: u64) -> Vec<Agent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels: Vec<usize> = items.iter().map(|g| level_of(&g.catalog)).collect();
    let mut agents = Vec::new();
    for &(status, count) in &RESPONDENTS {
        let affinity = level_affinity(status);
        let weights: Vec<f64> = items
            .iter()
            .zip(&levels)
            .map(|(g, &l)| g.capacity as f64 * ((1.0 - BREADTH) * affinity[l] + BREADTH / 6.0))
            .collect();
        let loads = load_weights(status);
        let load_dist = WeightedIndex::new(loads.iter().map(|&(_, w)| w)).expect("positive weights");
        for _ in 0..count {
            let rated = rng.random_range(10..=20).min(items.len());
            let picks = sample_weighted(&mut rng, items.len(), |g| weights[g], rated).expect("enough positive weights");
            let mut ratings = vec![1u8; items.len()];
            for g in picks {
                ratings[g] = rng.random_range(2..=8);
            }
            agents.push(Agent {
                id: agents.len(),
                student_id: format!("r{:04}", agents.len()),
                status,
                ratings,
                course_max: loads[load_dist.sample(&mut rng)].0,
            });
        }
    }
    agents
}

/// Shape of a random structured instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomShape {
    pub agents: usize,
    pub types: usize,
    pub max_capacity: u32,
    pub max_course_max: u32,
    pub slots: u32,
    /// Chance that an agent approves a given type.
    pub density: f64,
}

/// Structured instance with the given shape; slots, capacities, loads and
/// approvals are uniform draws.
pub fn random_instance<R: Rng + ?Sized>(shape: &RandomShape, rng: &mut R) -> Instance {
    let items: Vec<ItemType> = (0..shape.types)
        .map(|g| ItemType::anonymous(g, rng.random_range(0..shape.slots.max(1)), rng.random_range(1..=shape.max_capacity.max(1))))
        .collect();
    let approvals: Vec<Vec<usize>> =
        (0..shape.agents).map(|_| (0..shape.types).filter(|_| rng.random_bool(shape.density)).collect()).collect();
    let loads: Vec<u32> = (0..shape.agents).map(|_| rng.random_range(1..=shape.max_course_max.max(1))).collect();
    Instance::from_approvals(items, &approvals, &loads)
}
