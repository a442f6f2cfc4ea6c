//! Comparison mechanisms: Serial Dictatorship, Round Robin, the utilitarian
//! optimum (by max flow, or exported as an integer program), and exhaustive
//! oracles used by the tests.

mod brute;
mod flow;
mod ilp;
mod sequential;

pub use brute::{brute_force_leximin, brute_force_max_usw, BruteForceError, DEFAULT_MAX_STATES};
pub use flow::{max_usw_flow, FlowError};
pub use ilp::{export_ilp, write_ilp};
pub use sequential::{round_robin, serial_dictatorship};
