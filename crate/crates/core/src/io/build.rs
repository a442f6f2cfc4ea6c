use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::InputError;
use crate::dataset::{cohort_counts, population_of, POPULATION};
use crate::instance::{Instance, PickOrder};
use crate::model::{Agent, ItemId, ItemType, Status};
use crate::synthgen::{Prior, StatusPopulation, DEFAULT_ELL};
use crate::valuation::StructuredValuation;

/// Approves every course rated at least the `k`-th highest rating, excluding
/// the default rating 1.
pub fn topk_approvals(ratings: &[u8], k: usize) -> Vec<ItemId> {
    if ratings.is_empty() {
        return Vec::new();
    }
    let mut sorted = ratings.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let threshold = sorted[k.clamp(1, sorted.len()) - 1].max(2);
    ratings.iter().enumerate().filter(|(_, &r)| r >= threshold).map(|(g, _)| g).collect()
}

/// `round(q * f)` with halves rounded up, never below one seat.
pub fn scale_capacity(q: u32, f: f64) -> u32 {
    ((q as f64 * f + 0.5).floor() as u32).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// Respondents as given, capacities multiplied by `scale`.
    Real,
    /// Capacities and respondents both shrunk to the lowest per-status response rate.
    Reduced,
    /// Respondents topped up with synthetic students to the full population.
    Full,
    /// Fixed capacities and a synthetic cohort of the given size in population proportions.
    Stress(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOptions {
    pub mode: Mode,
    pub k: usize,
    pub seed: u64,
    pub scale: f64,
    pub ell: usize,
    pub prior: Prior,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { mode: Mode::Real, k: 10, seed: 0, scale: 1.0, ell: DEFAULT_ELL, prior: Prior::default() }
    }
}

#[derive(Debug, Clone)]
pub struct Built {
    pub instance: Instance,
    pub order: PickOrder,
    pub synthetic: usize,
}

fn by_status(respondents: &[Agent], status: Status) -> Vec<&Agent> {
    respondents.iter().filter(|a| a.status == status).collect()
}

/// Keeps `count` of `pool` chosen at random, in their original order.
fn subsample<'a>(pool: &[&'a Agent], count: usize, rng: &mut ChaCha8Rng) -> Vec<&'a Agent> {
    if count >= pool.len() {
        return pool.to_vec();
    }
    let mut idx = sample(rng, pool.len(), count).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|k| pool[k]).collect()
}

fn lowest_response_rate(respondents: &[Agent]) -> f64 {
    POPULATION
        .iter()
        .map(|&(s, p)| by_status(respondents, s).len() as f64 / p as f64)
        .fold(f64::INFINITY, f64::min)
}

/// Per-status targets: respondents first, synthetic students for the shortfall.
fn fill_cohort(
    respondents: &[Agent],
    targets: &[(Status, usize)],
    allow_synthetic: bool,
    opts: &BuildOptions,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Agent>, usize), InputError> {
    let mut agents = Vec::new();
    let mut synthetic = 0;
    for &(status, target) in targets {
        let pool = by_status(respondents, status);
        if target > pool.len() && !allow_synthetic {
            return Err(InputError::InsufficientRespondents { status, needed: target, available: pool.len() });
        }
        agents.extend(subsample(&pool, target, rng).into_iter().cloned());
        let missing = target.saturating_sub(pool.len());
        if missing > 0 {
            let owned: Vec<Agent> = pool.into_iter().cloned().collect();
            let population = StatusPopulation::fit(status, &owned, opts.ell, &opts.prior, rng)?;
            let mut drawn = population.sample(missing, &format!("syn-{status}-"), rng);
            for a in &mut drawn {
                a.ratings.resize(m, 1);
            }
            agents.extend(drawn);
            synthetic += missing;
        }
    }
    Ok((agents, synthetic))
}

pub fn build_instance(schedule: &[ItemType], respondents: &[Agent], opts: &BuildOptions) -> Result<Built, InputError> {
    if opts.k == 0 {
        return Err(InputError::Config("k must be at least 1".into()));
    }
    if !(opts.scale > 0.0 && opts.scale <= 1.0) {
        return Err(InputError::Config(format!("scale {} is outside (0, 1]", opts.scale)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let m = schedule.len();
    let mut items = schedule.to_vec();
    let (mut agents, synthetic) = match opts.mode {
        Mode::Real => {
            for g in &mut items {
                g.capacity = scale_capacity(g.capacity, opts.scale);
            }
            (respondents.to_vec(), 0)
        }
        Mode::Reduced => {
            let rate = lowest_response_rate(respondents);
            if rate == 0.0 {
                let (status, _) = *POPULATION.iter().find(|&&(s, _)| by_status(respondents, s).is_empty()).unwrap();
                return Err(InputError::InsufficientRespondents { status, needed: 1, available: 0 });
            }
            for g in &mut items {
                g.capacity = scale_capacity(g.capacity, rate);
            }
            let targets: Vec<(Status, usize)> =
                POPULATION.iter().map(|&(s, _)| (s, scale_capacity(population_of(s), rate) as usize)).collect();
            fill_cohort(respondents, &targets, false, opts, m, &mut rng)?
        }
        Mode::Full => {
            let targets: Vec<(Status, usize)> = POPULATION.iter().map(|&(s, p)| (s, p as usize)).collect();
            fill_cohort(respondents, &targets, true, opts, m, &mut rng)?
        }
        Mode::Stress(n) => fill_cohort(respondents, &cohort_counts(n), true, opts, m, &mut rng)?,
    };

    let slots: Vec<u32> = items.iter().map(|g| g.slot).collect();
    let mut valuations = Vec::with_capacity(agents.len());
    for (i, a) in agents.iter_mut().enumerate() {
        a.id = i;
        valuations.push(StructuredValuation::new(&slots, topk_approvals(&a.ratings, opts.k), a.course_max).into());
    }
    let order = PickOrder::from_seed(&agents, opts.seed);
    Ok(Built { instance: Instance::new(items, agents, valuations), order, synthetic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_respondents, generate_schedule};

    #[test]
    fn topk_examples() {
        assert_eq!(topk_approvals(&[6, 3, 2, 3], 2), vec![0, 1, 3]);
        assert_eq!(topk_approvals(&[3, 1, 1, 1], 2), vec![0]);
        assert_eq!(topk_approvals(&[5, 5, 5, 5], 2), vec![0, 1, 2, 3]);
        assert!(topk_approvals(&[1, 1, 1], 1).is_empty());
        assert_eq!(topk_approvals(&[2, 4], 9), vec![0, 1]);
        assert!(topk_approvals(&[], 3).is_empty());
    }

    #[test]
    fn capacity_rounding() {
        assert_eq!(scale_capacity(10, 0.25), 3);
        assert_eq!(scale_capacity(10, 0.24), 2);
        assert_eq!(scale_capacity(1, 0.2042), 1);
        assert_eq!(scale_capacity(7, 1.0), 7);
    }

    fn department() -> (Vec<ItemType>, Vec<Agent>) {
        let items = generate_schedule(5);
        let agents = generate_respondents(&items, 6);
        (items, agents)
    }

    #[test]
    fn real_mode_is_identity_at_full_scale() {
        let (items, agents) = department();
        let built = build_instance(&items, &agents, &BuildOptions::default()).unwrap();
        assert_eq!(built.instance.items, items);
        assert_eq!(built.instance.agents, agents);
        assert_eq!(built.synthetic, 0);
    }

    #[test]
    fn reduced_mode_matches_lowest_response_rate() {
        let (items, agents) = department();
        let opts = BuildOptions { mode: Mode::Reduced, ..BuildOptions::default() };
        let built = build_instance(&items, &agents, &opts).unwrap();
        assert_eq!(built.instance.num_agents(), 471);
        let senior = built.instance.agents.iter().filter(|a| a.status == Status::Senior).count();
        assert_eq!(senior, 117);
        let rate = 117.0 / 573.0;
        for (g, orig) in built.instance.items.iter().zip(&items) {
            assert_eq!(g.capacity, scale_capacity(orig.capacity, rate));
        }
    }

    #[test]
    fn reduced_mode_needs_every_status() {
        let (items, agents) = department();
        let no_phd: Vec<Agent> = agents.into_iter().filter(|a| a.status != Status::Phd).collect();
        let opts = BuildOptions { mode: Mode::Reduced, ..BuildOptions::default() };
        assert!(matches!(
            build_instance(&items, &no_phd, &opts),
            Err(InputError::InsufficientRespondents { status: Status::Phd, .. })
        ));
    }

    #[test]
    fn stress_mode_keeps_proportions() {
        let (items, agents) = department();
        let opts = BuildOptions { mode: Mode::Stress(300), ell: 20, ..BuildOptions::default() };
        let built = build_instance(&items, &agents, &opts).unwrap();
        assert_eq!(built.instance.num_agents(), 300);
        for (s, c) in cohort_counts(300) {
            let got = built.instance.agents.iter().filter(|a| a.status == s).count();
            assert!(got.abs_diff(c) <= 1);
        }
        assert_eq!(built.instance.items, items);
        let ids: Vec<usize> = built.instance.agents.iter().map(|a| a.id).collect();
        assert_eq!(ids, (0..300).collect::<Vec<_>>());
    }

    #[test]
    fn rejects_bad_options() {
        let (items, agents) = department();
        assert!(build_instance(&items, &agents, &BuildOptions { k: 0, ..BuildOptions::default() }).is_err());
        assert!(build_instance(&items, &agents, &BuildOptions { scale: 0.0, ..BuildOptions::default() }).is_err());
    }
}
