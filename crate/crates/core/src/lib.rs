//! Fair allocation of course seats under binary, constraint-encoded
//! preferences.
//!
//! Item types carry multiple identical copies. The crate provides Yankee Swap
//! with item multiplicity, Serial Dictatorship, Round Robin, the utilitarian
//! optimum via max flow, a justice-metric suite, and a generator of synthetic
//! student preferences fitted to survey responses.

pub mod baselines;
pub mod dataset;
pub mod instance;
pub mod io;
pub mod metrics;
pub mod model;
pub mod synthgen;
pub mod valuation;
pub mod yankee_swap;

pub use instance::{Instance, PickOrder};
pub use metrics::MetricsReport;
pub use model::{Agent, AgentId, AllocError, Allocation, Bundle, ItemId, ItemType, Status};
pub use valuation::{ConstraintValuation, StructuredValuation, Valuation};
pub use yankee_swap::{run_yankee_swap, ExchangeState, PathStats, YsOutcome};
