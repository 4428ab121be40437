use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ensemble::{train_ensemble, Hyperparams, TreeEnsemble};
use super::{FeatureVector, PresetTimes, TimePredictor, TrainingRow};
use crate::error::{Error, Result};
use crate::ladder::Representation;

pub const MODEL_FORMAT_VERSION: u32 = 1;
const FORMAT_TAG: &str = "caps-model-set";
const LOG_BASE: &str = "e";
const BITRATE_UNIT: &str = "kbps";
const FEATURE_ORDER: [&str; 5] = ["E", "h", "L", "ln_width", "ln_bitrate_kbps"];

/// Ensembles keyed by (width, preset).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    preset_min: u8,
    preset_max: u8,
    resolutions: Vec<u32>,
    models: BTreeMap<(u32, u8), TreeEnsemble>,
}

impl ModelSet {
    /// Checks that `models` holds exactly one ensemble per (width, preset).
    pub fn new(
        preset_range: (u8, u8),
        resolutions: Vec<u32>,
        models: BTreeMap<(u32, u8), TreeEnsemble>,
    ) -> Result<Self> {
        let (preset_min, preset_max) = preset_range;
        if preset_min > preset_max {
            return Err(Error::Config(format!("empty preset range {preset_min}..={preset_max}")));
        }
        let mut resolutions = resolutions;
        resolutions.sort_unstable();
        resolutions.dedup();
        if resolutions.is_empty() {
            return Err(Error::Config("model set without resolutions".into()));
        }
        let expected = (preset_max - preset_min + 1) as usize * resolutions.len();
        if models.len() != expected {
            return Err(Error::Config(format!(
                "{} ensembles, expected {expected}",
                models.len()
            )));
        }
        for &w in &resolutions {
            for p in preset_min..=preset_max {
                if !models.contains_key(&(w, p)) {
                    return Err(Error::Config(format!("missing ensemble for width {w} preset {p}")));
                }
            }
        }
        Ok(ModelSet {
            preset_min,
            preset_max,
            resolutions,
            models,
        })
    }

    pub fn resolutions(&self) -> &[u32] {
        &self.resolutions
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn get(&self, width: u32, preset: u8) -> Option<&TreeEnsemble> {
        self.models.get(&(width, preset))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(u32, u8), &TreeEnsemble)> {
        self.models.iter()
    }

    fn unknown(&self, width: u32) -> Error {
        Error::UnknownResolution {
            width,
            supported: self.resolutions.clone(),
        }
    }
}

/// Predicted seconds for every preset at resolution `width`.
pub fn predict_all_presets(models: &ModelSet, fv: &FeatureVector, width: u32) -> Result<PresetTimes> {
    if models.resolutions.binary_search(&width).is_err() {
        return Err(models.unknown(width));
    }
    Ok((models.preset_min..=models.preset_max)
        .map(|p| (p, models.models[&(width, p)].predict(fv)))
        .collect())
}

impl TimePredictor for ModelSet {
    fn preset_range(&self) -> (u8, u8) {
        (self.preset_min, self.preset_max)
    }

    fn predict_times(&self, fv: &FeatureVector, rung: &Representation) -> Result<PresetTimes> {
        predict_all_presets(self, fv, rung.width)
    }

    fn check_rungs(&self, rungs: &[Representation]) -> Result<()> {
        match rungs.iter().find(|r| self.resolutions.binary_search(&r.width).is_err()) {
            Some(r) => Err(self.unknown(r.width)),
            None => Ok(()),
        }
    }
}

/// Trains one ensemble per (width, preset) group found in `rows`. The preset
/// range spans the smallest to largest preset observed and every combination
/// with every observed width must have enough rows.
pub fn train_model_set(rows: &[TrainingRow], hp: &Hyperparams) -> Result<ModelSet> {
    hp.validate()?;
    if rows.is_empty() {
        return Err(Error::Dataset("no training rows".into()));
    }
    let mut groups: BTreeMap<(u32, u8), Vec<(FeatureVector, f64)>> = BTreeMap::new();
    for row in rows {
        row.validate()?;
        groups
            .entry((row.width, row.preset))
            .or_default()
            .push((row.feature_vector(), row.time_seconds));
    }
    let preset_min = rows.iter().map(|r| r.preset).min().unwrap_or(0);
    let preset_max = rows.iter().map(|r| r.preset).max().unwrap_or(0);
    let mut resolutions: Vec<u32> = rows.iter().map(|r| r.width).collect();
    resolutions.sort_unstable();
    resolutions.dedup();

    let keys: Vec<(u32, u8)> = resolutions
        .iter()
        .flat_map(|&w| (preset_min..=preset_max).map(move |p| (w, p)))
        .collect();
    let trained: Vec<((u32, u8), TreeEnsemble)> = keys
        .par_iter()
        .map(|&(width, preset)| {
            let group = groups.get(&(width, preset)).map(Vec::as_slice).unwrap_or(&[]);
            let model = train_ensemble(group, hp).map_err(|e| Error::Training {
                width,
                preset,
                reason: e.to_string(),
            })?;
            Ok(((width, preset), model))
        })
        .collect::<Result<_>>()?;

    ModelSet::new((preset_min, preset_max), resolutions, trained.into_iter().collect())
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    log_base: String,
    bitrate_unit: String,
    feature_order: Vec<String>,
    preset_range: [u8; 2],
    resolutions: Vec<u32>,
    models: Vec<ModelEntry>,
}

#[derive(Serialize, Deserialize)]
struct ModelEntry {
    width: u32,
    preset: u8,
    #[serde(flatten)]
    ensemble: TreeEnsemble,
}

/// Pretty-printed JSON document.
pub fn serialize_model_set(models: &ModelSet) -> Result<Vec<u8>> {
    let file = ModelFile {
        format: FORMAT_TAG.into(),
        version: MODEL_FORMAT_VERSION,
        log_base: LOG_BASE.into(),
        bitrate_unit: BITRATE_UNIT.into(),
        feature_order: FEATURE_ORDER.iter().map(|s| s.to_string()).collect(),
        preset_range: [models.preset_min, models.preset_max],
        resolutions: models.resolutions.clone(),
        models: models
            .models
            .iter()
            .map(|(&(width, preset), e)| ModelEntry {
                width,
                preset,
                ensemble: e.clone(),
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&file)?;
    out.push(b'\n');
    Ok(out)
}

pub fn load_model_set(bytes: &[u8]) -> Result<ModelSet> {
    let file: ModelFile = serde_json::from_slice(bytes).map_err(|e| Error::ModelLoad(e.to_string()))?;
    if file.format != FORMAT_TAG {
        return Err(Error::ModelLoad(format!(
            "not a model set file (format {:?})",
            file.format
        )));
    }
    if file.version != MODEL_FORMAT_VERSION {
        return Err(Error::ModelLoad(format!(
            "format version {} unsupported (expected {MODEL_FORMAT_VERSION})",
            file.version
        )));
    }
    if file.log_base != LOG_BASE || file.bitrate_unit != BITRATE_UNIT || file.feature_order != FEATURE_ORDER {
        return Err(Error::ModelLoad("feature conventions differ from this build".into()));
    }
    let mut models = BTreeMap::new();
    for entry in file.models {
        entry
            .ensemble
            .validate()
            .map_err(|e| Error::ModelLoad(format!("width {} preset {}: {e}", entry.width, entry.preset)))?;
        if models.insert((entry.width, entry.preset), entry.ensemble).is_some() {
            return Err(Error::ModelLoad(format!(
                "duplicate ensemble for width {} preset {}",
                entry.width, entry.preset
            )));
        }
    }
    ModelSet::new((file.preset_range[0], file.preset_range[1]), file.resolutions, models)
        .map_err(|e| Error::ModelLoad(e.to_string()))
}
