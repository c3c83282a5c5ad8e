//! Scenario catalogue, configuration, CSV persistence and the run driver.

mod config;
mod io;
mod run;
mod scenarios;

pub use config::{Overrides, ScenarioConfig, ScenarioKind};
pub use io::{
    format_float, read_front_csv, read_kinks_csv, read_scalar_csv, read_surface_csv, write_rows, FrontRow, KinkRow, Manifest, ScalarRow, SurfaceRow,
    FRONT_COLUMNS, KINK_COLUMNS, SCALAR_COLUMNS, SURFACE_COLUMNS,
};
pub use run::{run, RunSummary};
pub use scenarios::{build_initial, FrontSetup, InitialState, ScalarSetup, SurfaceSetup};

use std::path::PathBuf;

use thiserror::Error;

use crate::error::KclError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error in field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("{module}: {source}")]
    Solver {
        module: &'static str,
        #[source]
        source: KclError,
    },
    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema error: {0}")]
    Schema(String),
}

impl HarnessError {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Self::Config { field: field.to_string(), message: message.into() }
    }

    pub(crate) fn solver(module: &'static str) -> impl FnOnce(KclError) -> Self {
        move |source| Self::Solver { module, source }
    }
}
