//! Scenario-driven front end for `converse-core`: JSON scenarios in, JSON
//! reports (CSV for tail sweeps) out.
//!
//! Exit codes: 0 when every check holds, 1 when a check fails or an instance
//! is rejected, 2 on schema or usage errors.

pub mod error;
pub mod exec;
pub mod report;
pub mod runner;
pub mod scenario;

pub use error::{CliError, CliResult};
pub use report::{Report, Summary};
pub use runner::{run_scenario_file, run_suite, RunOptions, SuiteReport};
pub use scenario::Kind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
