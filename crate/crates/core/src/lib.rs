//! Context-aware mobile video resolution toolkit.
//!
//! * [`video`]: YUV4MPEG2 ingestion and SI/TI complexity indices.
//! * [`dataset`]: viewing-study logs, participant metadata and BFI-10 scoring.
//! * [`stats`]: Kruskal-Wallis with eta-squared, Pearson, OLS and a
//!   random-intercept mixed model fitted by REML.
//! * [`predictor`]: CART random forest and mean baseline under
//!   leave-one-viewer-out cross-validation.
//! * [`energy`] and [`simulator`]: calibration-based playback energy and
//!   adaptive-policy replay.

pub mod dataset;
pub mod energy;
pub mod error;
pub mod json;
pub mod numeric;
pub mod predictor;
pub mod presets;
pub mod report;
pub mod simulator;
pub mod stats;
pub mod synth;
pub mod video;

pub use error::{Error, Result};
