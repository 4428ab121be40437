//! Library side of the `caps` command-line tool; the binary only parses
//! arguments and calls into here.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::info;

use crate::complexity::{Analyzer, AnalyzerConfig, FEATURE_CSV_HEADER};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_runs, ingest_vmaf, EvaluationReport};
use crate::harness::{build_dataset, DatasetPlan, DatasetReport, DatasetSegment, EncoderBackend, SegmentSource};
use crate::orchestrator::{
    load_segments, prepare, run_baseline, run_prepared, write_run, PreparedSegment, RunConfig, RunMode, RunOptions,
    Segment, Summary,
};
use crate::selector::select_preset;
use crate::synth::SyntheticSegment;
use crate::timing::{
    load_model_set, mean_absolute_error, r_squared, read_training_csv, serialize_model_set, train_model_set,
    FeatureVector, Hyperparams, ModelSet, TimePredictor,
};
use crate::video::RawFormat;

/// Feature CSV for every `segment_frames`-frame segment of `input`.
pub fn analyze(
    input: &Path,
    raw: Option<RawFormat>,
    segment_frames: usize,
    cfg: AnalyzerConfig,
    out: &mut dyn Write,
) -> Result<usize> {
    let analyzer = Analyzer::new(cfg)?;
    let segments = load_segments(input, raw, segment_frames)?;
    writeln!(out, "{FEATURE_CSV_HEADER}")?;
    for seg in &segments {
        let f = analyzer.analyze(&seg.frames)?;
        writeln!(out, "{}", f.csv_line(&seg.id, seg.source.width, seg.source.height))?;
    }
    Ok(segments.len())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub models: ModelSet,
    /// Training-set `(width, preset, MAE, R²)` per ensemble.
    pub fit: Vec<(u32, u8, f64, f64)>,
}

pub fn train(data: &Path, output: &Path, hp: &Hyperparams) -> Result<TrainOutcome> {
    let rows = read_training_csv(fs::File::open(data).map_err(|e| Error::file(data, e))?)?;
    let models = train_model_set(&rows, hp)?;
    let mut fit = Vec::new();
    for (&(width, preset), model) in models.iter() {
        let group: Vec<_> = rows.iter().filter(|r| r.width == width && r.preset == preset).collect();
        let truth: Vec<f64> = group.iter().map(|r| r.time_seconds).collect();
        let pred: Vec<f64> = group.iter().map(|r| model.predict(&r.feature_vector())).collect();
        fit.push((
            width,
            preset,
            mean_absolute_error(&truth, &pred),
            r_squared(&truth, &pred),
        ));
    }
    fs::write(output, serialize_model_set(&models)?).map_err(|e| Error::file(output, e))?;
    Ok(TrainOutcome { models, fit })
}

pub fn load_models(path: &Path) -> Result<ModelSet> {
    load_model_set(&fs::read(path).map_err(|e| Error::file(path, e))?)
}

/// Segments from the configured input file, or generated ones.
pub fn run_segments(cfg: &RunConfig) -> Result<Vec<Segment>> {
    if let Some(input) = &cfg.input {
        return load_segments(
            &input.path,
            input.raw.map(Into::into),
            cfg.ladder.segment_frames as usize,
        );
    }
    let syn = cfg
        .synthetic
        .ok_or_else(|| Error::Config("run configuration has neither [input] nor [synthetic]".into()))?;
    if !cfg.backend.is_mock() {
        return Err(Error::Config("synthetic segments need the mock backend".into()));
    }
    Ok((0..syn.segments)
        .map(|i| {
            let spec = SyntheticSegment::random(
                syn.seed + i as u64,
                syn.width,
                syn.height,
                cfg.ladder.segment_frames as usize,
            );
            Segment {
                id: format!("syn{i:04}"),
                frames: Arc::new(spec.render()),
                source: SegmentSource::synthetic(spec.frames, spec.width, spec.height, cfg.ladder.framerate),
            }
        })
        .collect())
}

pub fn prepare_all(cfg: &RunConfig) -> Result<Vec<PreparedSegment>> {
    let analyzer = Analyzer::new(cfg.analyzer)?;
    run_segments(cfg)?.into_iter().map(|s| prepare(s, &analyzer)).collect()
}

/// The configured model file; without one, a mock backend predicts its own
/// times exactly.
pub fn predictor(cfg: &RunConfig) -> Result<Box<dyn TimePredictor>> {
    match (&cfg.model, &cfg.backend) {
        (Some(path), _) => Ok(Box::new(load_models(path)?)),
        (None, EncoderBackend::Mock(m)) => {
            let mut m = m.clone();
            m.threads = cfg.ladder.threads;
            Ok(Box::new(m))
        }
        (None, _) => Err(Error::Config("a model file is required with a real encoder".into())),
    }
}

/// Prints `segment_id,rung,width,bitrate_kbps,preset,predicted_time,deadline_met,margin`.
pub fn predict(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let predictor = predictor(cfg)?;
    predictor.check_rungs(&cfg.ladder.rungs)?;
    let deadline = cfg.ladder.deadline()?;
    writeln!(
        out,
        "segment_id,rung,width,bitrate_kbps,preset,predicted_time,deadline_met,margin"
    )?;
    for seg in prepare_all(cfg)? {
        for (i, rung) in cfg.ladder.rungs.iter().enumerate() {
            let times = predictor.predict_times(&FeatureVector::new(&seg.features, rung), rung)?;
            let d = select_preset(&times, deadline)?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                seg.segment.id,
                i + 1,
                rung.width,
                rung.bitrate_kbps,
                d.preset,
                d.predicted_time,
                d.deadline_met,
                d.margin
            )?;
        }
    }
    Ok(())
}

/// Runs every segment in `mode` and writes the run directory.
pub fn encode(cfg: &RunConfig, mode: RunMode) -> Result<Summary> {
    cfg.validate()?;
    let options = RunOptions::from_config(cfg);
    let segments = prepare_all(cfg)?;
    let predictor = match mode {
        RunMode::Caps => {
            let p = predictor(cfg)?;
            p.check_rungs(&cfg.ladder.rungs)?;
            Some(p)
        }
        RunMode::Baseline => None,
    };
    let mut reports = Vec::with_capacity(segments.len());
    for seg in &segments {
        let report = match &predictor {
            Some(p) => run_prepared(seg, &cfg.ladder, p.as_ref(), &cfg.backend, &options)?,
            None => run_baseline(seg, &cfg.ladder, &cfg.backend, &options)?,
        };
        info!(
            "{}: idle {:.3}s, {} violations, {} failures",
            report.segment_id,
            report.total_idle(),
            report.violations,
            report.failures
        );
        reports.push(report);
    }
    write_run(&cfg.output_dir, &reports)
}

pub fn evaluate(
    baseline: &Path,
    caps: &Path,
    vmaf_baseline: Option<&Path>,
    vmaf_caps: Option<&Path>,
    out: &Path,
) -> Result<EvaluationReport> {
    let vb = vmaf_baseline.map(ingest_vmaf).transpose()?;
    let vc = vmaf_caps.map(ingest_vmaf).transpose()?;
    evaluate_runs(baseline, caps, vb.as_ref(), vc.as_ref(), out)
}

/// Training data for every segment × rung × preset of the run configuration.
pub fn dataset(cfg: &RunConfig, out: &Path, jobs: usize, repetitions: usize) -> Result<DatasetReport> {
    cfg.validate()?;
    let segments: Vec<DatasetSegment> = prepare_all(cfg)?
        .into_iter()
        .map(|p| DatasetSegment {
            id: p.segment.id.clone(),
            features: p.features,
            source: p.segment.source,
        })
        .collect();
    let plan = DatasetPlan {
        rungs: cfg.ladder.rungs.clone(),
        presets: cfg.ladder.preset_range,
        threads: cfg.ladder.threads,
        deadline_seconds: cfg.ladder.deadline()?,
        jobs,
        repetitions,
        work_dir: cfg.output_dir.join("dataset-work"),
    };
    build_dataset(&segments, &plan, &cfg.backend, out)
}

/// `dir/name`, creating `dir`.
pub fn output_file(dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    Ok(dir.join(name))
}
