//! Encoding-time regression: one boosted tree ensemble per (width, preset).

mod dataset;
mod ensemble;
mod model_set;
mod tree;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use dataset::{read_training_csv, write_training_csv, TrainingRow, TRAINING_CSV_HEADER};
pub(crate) use ensemble::median as median_of;
pub use ensemble::{train_ensemble, Hyperparams, TreeEnsemble, MIN_PREDICTION};
pub use model_set::{
    load_model_set, predict_all_presets, serialize_model_set, train_model_set, ModelSet, MODEL_FORMAT_VERSION,
};
pub use tree::{Node, RegressionTree};

use crate::complexity::SegmentFeatures;
use crate::error::Result;
use crate::ladder::Representation;

pub const FEATURE_COUNT: usize = 5;

/// Predicted or measured seconds keyed by preset index.
pub type PresetTimes = BTreeMap<u8, f64>;

/// Model input `[E, h, L, ln(width), ln(bitrate_kbps)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub texture_energy: f64,
    pub temporal_energy: f64,
    pub luminescence: f64,
    pub log_width: f64,
    pub log_bitrate: f64,
}

impl FeatureVector {
    pub fn new(features: &SegmentFeatures, rung: &Representation) -> Self {
        Self::from_parts(
            features.texture_energy,
            features.temporal_energy,
            features.luminescence,
            f64::from(rung.width),
            rung.bitrate_kbps,
        )
    }

    pub fn from_parts(e: f64, h: f64, l: f64, width: f64, bitrate_kbps: f64) -> Self {
        FeatureVector {
            texture_energy: e,
            temporal_energy: h,
            luminescence: l,
            log_width: width.ln(),
            log_bitrate: bitrate_kbps.ln(),
        }
    }

    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        [
            self.texture_energy,
            self.temporal_energy,
            self.luminescence,
            self.log_width,
            self.log_bitrate,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Anything that can predict per-preset encoding times for one rung.
pub trait TimePredictor: Sync {
    fn preset_range(&self) -> (u8, u8);

    fn predict_times(&self, fv: &FeatureVector, rung: &Representation) -> Result<PresetTimes>;

    /// Fails when a rung cannot be served.
    fn check_rungs(&self, rungs: &[Representation]) -> Result<()>;
}

pub fn mean_absolute_error(truth: &[f64], predicted: &[f64]) -> f64 {
    truth.iter().zip(predicted).map(|(t, p)| (t - p).abs()).sum::<f64>() / truth.len() as f64
}

pub fn r_squared(truth: &[f64], predicted: &[f64]) -> f64 {
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
    let ss_res: f64 = truth.iter().zip(predicted).map(|(t, p)| (t - p).powi(2)).sum();
    1.0 - ss_res / ss_tot
}
