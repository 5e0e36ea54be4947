//! Configuration, suite orchestration, and report emission for the
//! verification harness behind the command-line binary.

pub mod config;
pub mod report;
pub mod suites;

pub use config::{default_config, parse_config, RawConfig, RunConfig, DEFAULT_CONFIG};
pub use report::{any_failed, digest_hex, fnv1a, render_report, write_report, CheckReport};
pub use suites::{export_profiles, run_suite, Suite};
