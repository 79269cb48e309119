//! File formats and the JSON API shared by the command line and the HTTP service.

pub mod api;
pub mod emit;
pub mod scenario_file;

pub use scenario_file::{apply_override, parse_scenario, write_scenario, Diagnostic, DiagnosticKind, ParseErrors};
