//! Library side of the `affmax` experiment runner.

pub mod config;
pub mod run;

pub use config::{Config, ConfigError};
pub use run::{run, write_artifacts, Artifacts, Outcome, RunError};

/// Text catalog: one line per experiment id with the statement it checks.
pub fn catalog() -> String {
    let width = affine_maximal::verify::CATALOG.iter().map(|c| c.0.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (id, statement) in affine_maximal::verify::CATALOG {
        out.push_str(&format!("{id:<width$}  {statement}\n"));
    }
    out.push_str(&format!("{:<width$}  {}\n", "apply-operator", "apply one operator to a field on a configured grid"));
    out
}
