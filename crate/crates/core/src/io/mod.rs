//! CSV ingestion, instance construction and experiment runs.

mod build;
mod report;
mod responses;
mod schedule;
mod sweep;

use std::path::PathBuf;

use thiserror::Error;

use crate::model::Status;
use crate::synthgen::SynthError;

pub use build::{build_instance, scale_capacity, topk_approvals, BuildOptions, Built, Mode};
pub use report::{run, write_allocation, Mechanism, RunConfig, RunError, RunSummary};
pub use responses::{load_responses, read_responses, write_responses, ColumnMap};
pub use schedule::{load_schedule, read_schedule, resolve_slots, write_schedule};
pub use sweep::{runtime_sweep, stress_sweep, write_runtime_csv, write_stress_csv, RuntimeRow, StressRow};

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot open {path}")]
    File { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {msg}")]
    Malformed { line: u64, msg: String },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: duplicate course {key}")]
    DuplicateCourse { line: u64, key: String },
    #[error("line {line}: capacity must be positive")]
    ZeroCapacity { line: u64 },
    #[error("line {line}: unknown status `{value}`")]
    UnknownStatus { line: u64, value: String },
    #[error("line {line}: rating {value} in column {column} is outside 1..=8")]
    RatingOutOfRange { line: u64, column: String, value: String },
    #[error("column {0} names a course that is not on the schedule")]
    UnknownCourse(String),
    #[error("column mapping: {0}")]
    Mapping(String),
    #[error("need {needed} {status} respondents, have {available}")]
    InsufficientRespondents { status: Status, needed: usize, available: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

/// Line number of a csv record, counting the header as line 1.
fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}
