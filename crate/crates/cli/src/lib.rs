//! Scenario-driven front end for the `supermode-core` solvers.
//!
//! A scenario is a JSON document naming a chain, a detuning scan and a list
//! of tasks. [`run::execute`] evaluates it into a [`run::Report`], which
//! [`output::write_report`] turns into CSV tables plus a metadata sidecar or
//! a single JSON document.

pub mod error;
pub mod output;
pub mod presets;
pub mod run;
pub mod scenario;

pub use error::CliError;
pub use presets::{preset, presets};
pub use run::{execute, Report};
pub use scenario::{parse_scenario, Format, Scenario, Task};
