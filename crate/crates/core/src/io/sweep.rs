use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use super::build::{build_instance, BuildOptions, Mode};
use super::report::Mechanism;
use super::InputError;
use crate::baselines::{round_robin, serial_dictatorship};
use crate::metrics::utilities;
use crate::model::{Agent, Allocation, ItemType};
use crate::yankee_swap::run_yankee_swap;
use crate::{Instance, PickOrder};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuntimeRow {
    pub cohort: usize,
    pub mechanism: String,
    pub seed: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StressRow {
    pub cohort: usize,
    pub mechanism: String,
    pub seed: u64,
    pub usw: u64,
    pub zero_count: usize,
}

fn allocate(mechanism: Mechanism, instance: &Instance, order: &PickOrder) -> Allocation {
    match mechanism {
        Mechanism::Sd => serial_dictatorship(instance, order),
        Mechanism::Rr => round_robin(instance, order),
        Mechanism::Ys => run_yankee_swap(instance, order).allocation,
        other => panic!("{other} is not part of the sweeps"),
    }
}

const SWEPT: [Mechanism; 3] = [Mechanism::Sd, Mechanism::Rr, Mechanism::Ys];

fn cohort_instance(
    schedule: &[ItemType],
    respondents: &[Agent],
    cohort: usize,
    base: &BuildOptions,
    seed: u64,
) -> Result<(Instance, PickOrder), InputError> {
    let opts = BuildOptions { mode: Mode::Stress(cohort), seed, ..base.clone() };
    let built = build_instance(schedule, respondents, &opts)?;
    Ok((built.instance, built.order))
}

/// Wall-clock time of SD, RR and YS per cohort size, real capacities.
pub fn runtime_sweep(
    schedule: &[ItemType],
    respondents: &[Agent],
    cohorts: &[usize],
    seeds: &[u64],
    base: &BuildOptions,
) -> Result<Vec<RuntimeRow>, InputError> {
    let mut rows = Vec::new();
    for &cohort in cohorts {
        for &seed in seeds {
            let (inst, order) = cohort_instance(schedule, respondents, cohort, base, seed)?;
            for mech in SWEPT {
                let start = Instant::now();
                allocate(mech, &inst, &order);
                let seconds = start.elapsed().as_secs_f64();
                rows.push(RuntimeRow { cohort, mechanism: mech.to_string(), seed, seconds });
            }
        }
    }
    Ok(rows)
}

/// Welfare and empty bundles per mechanism as the cohort grows past the seat count.
pub fn stress_sweep(
    schedule: &[ItemType],
    respondents: &[Agent],
    cohorts: &[usize],
    seeds: &[u64],
    base: &BuildOptions,
) -> Result<Vec<StressRow>, InputError> {
    let mut rows = Vec::new();
    for &cohort in cohorts {
        for &seed in seeds {
            let (inst, order) = cohort_instance(schedule, respondents, cohort, base, seed)?;
            for mech in SWEPT {
                let alloc = allocate(mech, &inst, &order);
                let utils = utilities(&alloc, &inst.valuations);
                rows.push(StressRow {
                    cohort,
                    mechanism: mech.to_string(),
                    seed,
                    usw: utils.iter().map(|&u| u as u64).sum(),
                    zero_count: utils.iter().filter(|&&u| u == 0).count(),
                });
            }
        }
    }
    Ok(rows)
}

fn write_rows<T: Serialize>(rows: &[T], writer: impl Write) -> Result<(), InputError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_runtime_csv(rows: &[RuntimeRow], writer: impl Write) -> Result<(), InputError> {
    write_rows(rows, writer)
}

pub fn write_stress_csv(rows: &[StressRow], writer: impl Write) -> Result<(), InputError> {
    write_rows(rows, writer)
}
