//! Content-adaptive encoder preset selection for live adaptive streaming.
//!
//! For every segment of a live stream the pipeline
//!
//! 1. extracts three DCT-energy complexity features (texture energy `E`,
//!    temporal energy `h`, luminescence `L`) from the luma plane
//!    ([`complexity`]),
//! 2. predicts the encoding time of every encoder preset for every rung of
//!    the bitrate ladder with boosted regression trees ([`timing`]),
//! 3. picks the slowest preset that still finishes within the segment
//!    deadline `T = n / f` ([`selector`]),
//! 4. dispatches the rung encodes and records deadline compliance and CPU
//!    idle time ([`orchestrator`], [`harness`]),
//! 5. compares quality against a fastest-preset baseline with Bjøntegaard
//!    deltas ([`evaluation`]).
//!
//! ```
//! use caps::selector::{select_preset, target_time};
//! use caps::timing::PresetTimes;
//!
//! let deadline = target_time(120, 24.0).unwrap();
//! let times: PresetTimes = [(0, 1.2), (1, 2.0), (2, 3.9), (3, 6.4)].into_iter().collect();
//! let decision = select_preset(&times, deadline).unwrap();
//! assert_eq!(decision.preset, 2);
//! assert!(decision.deadline_met);
//! ```

pub mod commands;
pub mod complexity;
pub mod error;
pub mod evaluation;
pub mod harness;
pub mod ladder;
pub mod orchestrator;
pub mod selector;
pub mod synth;
pub mod timing;
pub mod video;

pub use error::{Error, Result};
