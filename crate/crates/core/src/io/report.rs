use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;
use thiserror::Error;

use super::build::{build_instance, BuildOptions, Mode};
use super::responses::{load_responses, ColumnMap};
use super::schedule::load_schedule;
use super::InputError;
use crate::baselines::{export_ilp, max_usw_flow, round_robin, serial_dictatorship};
use crate::instance::Instance;
use crate::metrics::MetricsReport;
use crate::model::Allocation;
use crate::synthgen::Prior;
use crate::yankee_swap::{run_yankee_swap, PathStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mechanism {
    Sd,
    Rr,
    Ys,
    UswFlow,
    ExportIlp,
}

impl Mechanism {
    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::Sd => "sd",
            Mechanism::Rr => "rr",
            Mechanism::Ys => "ys",
            Mechanism::UswFlow => "usw-flow",
            Mechanism::ExportIlp => "export-ilp",
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mechanism {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sd" => Ok(Mechanism::Sd),
            "rr" => Ok(Mechanism::Rr),
            "ys" => Ok(Mechanism::Ys),
            "usw-flow" => Ok(Mechanism::UswFlow),
            "export-ilp" => Ok(Mechanism::ExportIlp),
            _ => Err(format!("unknown mechanism `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mechanism: Mechanism,
    pub seed: u64,
    pub k: usize,
    pub scale: f64,
    pub mode: Mode,
    pub ell: usize,
    pub schedule: PathBuf,
    pub responses: PathBuf,
    pub mapping: Option<PathBuf>,
    pub out: PathBuf,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Input(InputError::Io(e))
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub metrics: Option<MetricsReport>,
    pub paths: Option<PathStats>,
    pub wall_clock_ms: f64,
    pub report_path: PathBuf,
}

fn fixed6<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return s.serialize_none();
    }
    let raw = RawValue::from_string(format!("{x:.6}")).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    mechanism: &'static str,
    mode: &'static str,
    cohort: Option<usize>,
    seed: u64,
    k: usize,
    #[serde(serialize_with = "fixed6")]
    scale: f64,
    ell: usize,
    schedule: String,
    responses: String,
    mapping: Option<&'a str>,
}

#[derive(Serialize)]
struct InstanceEcho {
    agents: usize,
    item_types: usize,
    seats: u64,
    synthetic: usize,
}

#[derive(Serialize)]
struct MetricsEcho<'a> {
    usw: u64,
    #[serde(serialize_with = "fixed6")]
    usw_pct: f64,
    #[serde(serialize_with = "fixed6")]
    nsw_norm: f64,
    zero_count: usize,
    envy: u64,
    ef1_violations: u64,
    efx_violations: u64,
    pmms_violations: u64,
    bundle_histogram: &'a BTreeMap<u32, usize>,
    #[serde(serialize_with = "fixed6")]
    bundle_mean: f64,
    #[serde(serialize_with = "fixed6")]
    bundle_std: f64,
}

impl<'a> From<&'a MetricsReport> for MetricsEcho<'a> {
    fn from(m: &'a MetricsReport) -> Self {
        Self {
            usw: m.usw,
            usw_pct: m.usw_pct,
            nsw_norm: m.nsw_norm,
            zero_count: m.zero_count,
            envy: m.envy,
            ef1_violations: m.ef1_violations,
            efx_violations: m.efx_violations,
            pmms_violations: m.pmms_violations,
            bundle_histogram: &m.bundle_histogram,
            bundle_mean: m.bundle_mean,
            bundle_std: m.bundle_std,
        }
    }
}

#[derive(Serialize)]
struct Report<'a> {
    config: ConfigEcho<'a>,
    instance: InstanceEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<MetricsEcho<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    path_histogram: Option<&'a BTreeMap<usize, u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lp_file: Option<String>,
    #[serde(serialize_with = "fixed6")]
    wall_clock_ms: f64,
}

fn mode_fields(mode: Mode) -> (&'static str, Option<usize>) {
    match mode {
        Mode::Real => ("real", None),
        Mode::Reduced => ("reduced", None),
        Mode::Full => ("full", None),
        Mode::Stress(n) => ("stress", Some(n)),
    }
}

/// One `student_id,catalog,section` row per held seat.
pub fn write_allocation(instance: &Instance, alloc: &Allocation, writer: impl Write) -> Result<(), InputError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["student_id", "catalog", "section"])?;
    for (i, agent) in instance.agents.iter().enumerate() {
        for g in alloc.bundle(i).support() {
            let item = &instance.items[g];
            for _ in 0..alloc.bundle(i).count(g) {
                w.write_record([agent.student_id.as_str(), &item.catalog, &item.section])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn check_invariants(instance: &Instance, alloc: &Allocation) -> Result<(), RunError> {
    if !alloc.is_valid() {
        return Err(RunError::Invariant("allocation breaks capacity or seat rules".into()));
    }
    for (i, v) in instance.valuations.iter().enumerate() {
        if !v.is_clean(alloc.bundle(i)) {
            return Err(RunError::Invariant(format!("bundle of {} is not clean", instance.agents[i].student_id)));
        }
    }
    Ok(())
}

/// Builds the instance, runs the mechanism, and writes `report.json` and
/// `allocation.csv` (or `model.lp`) into `config.out`.
pub fn run(config: &RunConfig) -> Result<RunSummary, RunError> {
    let schedule = load_schedule(&config.schedule)?;
    let mapping = config.mapping.as_deref().map(ColumnMap::load).transpose()?;
    let respondents = load_responses(&config.responses, &schedule, mapping.as_ref())?;
    let opts = BuildOptions {
        mode: config.mode,
        k: config.k,
        seed: config.seed,
        scale: config.scale,
        ell: config.ell,
        prior: Prior::default(),
    };
    let built = build_instance(&schedule, &respondents, &opts)?;
    let inst = &built.instance;
    fs::create_dir_all(&config.out).map_err(|source| InputError::File { path: config.out.clone(), source })?;

    let start = Instant::now();
    let mut paths = None;
    let mut lp_file = None;
    let alloc = match config.mechanism {
        Mechanism::Sd => Some(serial_dictatorship(inst, &built.order)),
        Mechanism::Rr => Some(round_robin(inst, &built.order)),
        Mechanism::Ys => {
            let outcome = run_yankee_swap(inst, &built.order);
            paths = Some(outcome.stats);
            Some(outcome.allocation)
        }
        Mechanism::UswFlow => Some(max_usw_flow(inst).map_err(|e| RunError::Invariant(e.to_string()))?),
        Mechanism::ExportIlp => {
            let path = config.out.join("model.lp");
            export_ilp(inst, &path)?;
            lp_file = Some(path.display().to_string());
            None
        }
    };
    let wall_clock_ms = start.elapsed().as_secs_f64() * 1e3;

    let metrics = match &alloc {
        Some(a) => {
            check_invariants(inst, a)?;
            let file = File::create(config.out.join("allocation.csv"))?;
            write_allocation(inst, a, BufWriter::new(file))?;
            Some(MetricsReport::compute(a, &inst.valuations))
        }
        None => None,
    };

    let (mode, cohort) = mode_fields(config.mode);
    let report = Report {
        config: ConfigEcho {
            mechanism: config.mechanism.as_str(),
            mode,
            cohort,
            seed: config.seed,
            k: config.k,
            scale: config.scale,
            ell: config.ell,
            schedule: config.schedule.display().to_string(),
            responses: config.responses.display().to_string(),
            mapping: config.mapping.as_deref().and_then(Path::to_str),
        },
        instance: InstanceEcho {
            agents: inst.num_agents(),
            item_types: inst.num_types(),
            seats: inst.total_capacity(),
            synthetic: built.synthetic,
        },
        metrics: metrics.as_ref().map(MetricsEcho::from),
        path_histogram: paths.as_ref().map(|p| &p.histogram),
        lp_file,
        wall_clock_ms,
    };
    let report_path = config.out.join("report.json");
    let mut out = BufWriter::new(File::create(&report_path)?);
    serde_json::to_writer_pretty(&mut out, &report).map_err(std::io::Error::from)?;
    writeln!(out)?;
    out.flush()?;
    Ok(RunSummary { metrics, paths, wall_clock_ms, report_path })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mechanism_names_round_trip() {
        for m in [Mechanism::Sd, Mechanism::Rr, Mechanism::Ys, Mechanism::UswFlow, Mechanism::ExportIlp] {
            assert_eq!(m.as_str().parse::<Mechanism>(), Ok(m));
        }
        assert!("leximin".parse::<Mechanism>().is_err());
    }

    #[test]
    fn floats_have_six_decimals() {
        #[derive(Serialize)]
        struct T {
            #[serde(serialize_with = "fixed6")]
            x: f64,
            #[serde(serialize_with = "fixed6")]
            y: f64,
        }
        assert_eq!(serde_json::to_string(&T { x: 0.5, y: f64::NAN }).unwrap(), r#"{"x":0.500000,"y":null}"#);
    }
}
