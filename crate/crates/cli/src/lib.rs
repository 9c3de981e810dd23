//! File formats and the command-line front end for robust reconstruction.
//!
//! * [`ingest`]: `x,y,value` CSV with repeated observations per location,
//!   aggregated to sample means and standard deviations.
//! * [`anchors`]: choice of the three thin-plate-spline anchors.
//! * [`model`]: the TOML model file written by `fit`.
//! * [`output`]: round-trip number formatting and grid output.
//! * [`synth`]: seeded synthetic surveys.
//! * [`cli`]: argument parsing and the subcommands.

pub mod anchors;
pub mod cli;
pub mod error;
pub mod ingest;
pub mod model;
pub mod output;
pub mod synth;

pub use anchors::{select_anchors, AnchorStrategy};
pub use cli::run_cli;
pub use error::{CliError, Result};
pub use ingest::{ingest_csv, IngestError, ObservationSet};
pub use model::ModelFile;
