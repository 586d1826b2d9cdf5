//! Streaming grayscale background subtraction.
//!
//! Per-pixel thresholds and update rates are initialized from the mean
//! temporal gradient of the first frames, adapted every frame from the
//! change dynamics of the sample distances, and the background samples are
//! maintained by a deterministic nearest/farthest replacement rule steered by
//! a short recent history.
//!
//! The usual entry point is [`pipeline::Engine`], which takes raw frames one at
//! a time and returns a foreground mask for each.

pub mod config;
pub mod detector;
pub mod error;
pub mod evaluator;
pub mod frame;
pub mod frame_io;
pub mod model;
pub mod params;
pub mod pipeline;
pub mod preprocess;
pub mod synth;
pub mod updater;

pub use error::{Error, ErrorClass, Result};
pub use frame::{Frame, GroundTruthFrame, MaskFrame};
pub use model::ModelState;
pub use params::Params;
pub use pipeline::Engine;
