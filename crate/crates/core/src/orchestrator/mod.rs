//! Per-segment live pipeline: analyse once, predict and select a preset for
//! every rung, dispatch the rung encodes and account for deadlines.

mod config;
mod report;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Instant;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

pub use config::{InputConfig, LadderConfig, RawInput, RunConfig, SyntheticInput};
pub use report::{
    read_decisions, summarize, write_run, DecisionRecord, RungSummary, Summary, DECISIONS_CSV, SEGMENTS_CSV,
    SUMMARY_CSV, SUMMARY_TXT,
};

use crate::complexity::{Analyzer, LumaFrame, SegmentFeatures};
use crate::error::{Error, Result};
use crate::harness::{run_job, EncodeJob, EncodeResult, EncoderBackend, SegmentSource};
pub use crate::ladder::Representation;
use crate::selector::{select_preset, PresetDecision};
use crate::timing::{FeatureVector, PresetTimes, TimePredictor};
use crate::video::{self, RawFormat};

/// A segment's frames and where they came from.
#[derive(Debug, Clone)]
pub struct Segment {
    pub id: String,
    pub frames: Arc<Vec<LumaFrame>>,
    pub source: SegmentSource,
}

/// A segment with its complexity features already extracted.
#[derive(Debug, Clone)]
pub struct PreparedSegment {
    pub segment: Segment,
    pub features: SegmentFeatures,
    pub analysis_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Caps,
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RungReport {
    /// 1-based rung number.
    pub rung: usize,
    pub representation: Representation,
    pub preset: u8,
    pub predicted: Option<PresetTimes>,
    pub decision: Option<PresetDecision>,
    pub result: EncodeResult,
    /// `max(0, T − measured)` for successful encodes, zero otherwise.
    pub idle_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub segment_id: String,
    pub mode: RunMode,
    pub features: SegmentFeatures,
    pub source_width: usize,
    pub source_height: usize,
    pub deadline_seconds: f64,
    /// Feature extraction plus inference time.
    pub analysis_seconds: f64,
    pub latency_over_budget: bool,
    pub rungs: Vec<RungReport>,
    /// Rungs whose measured time exceeded the deadline.
    pub violations: usize,
    pub failures: usize,
}

impl SegmentReport {
    pub fn total_idle(&self) -> f64 {
        self.rungs.iter().map(|r| r.idle_time).sum()
    }
}

/// Execution knobs shared by CAPS and baseline runs.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub slots: usize,
    pub output_dir: PathBuf,
    pub latency_budget: Option<f64>,
}

impl RunOptions {
    pub fn from_config(cfg: &RunConfig) -> Self {
        RunOptions {
            slots: cfg.effective_slots(),
            output_dir: cfg.output_dir.clone(),
            latency_budget: cfg.latency_budget,
        }
    }
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            slots: 1,
            output_dir: PathBuf::from("caps-run"),
            latency_budget: None,
        }
    }
}

/// Reads `path` into consecutive segments of `segment_frames` frames; a short
/// trailing segment is kept.
pub fn load_segments(path: &Path, raw: Option<RawFormat>, segment_frames: usize) -> Result<Vec<Segment>> {
    if segment_frames == 0 {
        return Err(Error::Input("segment length must be positive".into()));
    }
    let mut reader = video::open(path, raw)?;
    let info = reader.info();
    let mut segments = Vec::new();
    let mut seek = 0;
    loop {
        let frames = reader.read_frames(segment_frames)?;
        if frames.is_empty() {
            break;
        }
        let n = frames.len();
        segments.push(Segment {
            id: format!("seg{:04}", segments.len()),
            frames: Arc::new(frames),
            source: SegmentSource {
                path: Some(path.to_path_buf()),
                seek,
                frames: n,
                width: info.width,
                height: info.height,
                fps: info.framerate(),
                bit_depth: info.bit_depth,
            },
        });
        seek += n;
    }
    if segments.is_empty() {
        return Err(Error::Input(format!("{} holds no frames", path.display())));
    }
    Ok(segments)
}

pub fn prepare(segment: Segment, analyzer: &Analyzer) -> Result<PreparedSegment> {
    let start = Instant::now();
    let features = analyzer.analyze(&segment.frames)?;
    Ok(PreparedSegment {
        segment,
        features,
        analysis_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Full pipeline for one segment: analyse, then [`run_prepared`].
pub fn run_segment(
    segment: Segment,
    analyzer: &Analyzer,
    ladder: &LadderConfig,
    predictor: &dyn TimePredictor,
    backend: &EncoderBackend,
    options: &RunOptions,
) -> Result<SegmentReport> {
    run_prepared(&prepare(segment, analyzer)?, ladder, predictor, backend, options)
}

/// Predicts, selects and encodes every rung of an analysed segment.
pub fn run_prepared(
    seg: &PreparedSegment,
    ladder: &LadderConfig,
    predictor: &dyn TimePredictor,
    backend: &EncoderBackend,
    options: &RunOptions,
) -> Result<SegmentReport> {
    ladder.validate()?;
    predictor.check_rungs(&ladder.rungs)?;
    let (lo, hi) = predictor.preset_range();
    if lo > ladder.preset_range.0 || hi < ladder.preset_range.1 {
        return Err(Error::Config(format!(
            "models cover presets {lo}..={hi}, ladder needs {}..={}",
            ladder.preset_range.0, ladder.preset_range.1
        )));
    }
    let deadline = ladder.deadline()?;

    let start = Instant::now();
    let mut plans = Vec::with_capacity(ladder.rungs.len());
    for rung in &ladder.rungs {
        let fv = FeatureVector::new(&seg.features, rung);
        let mut times = predictor.predict_times(&fv, rung)?;
        times.retain(|p, _| (ladder.preset_range.0..=ladder.preset_range.1).contains(p));
        let decision = select_preset(&times, deadline)?;
        plans.push((decision.preset, Some(times), Some(decision)));
    }
    let analysis_seconds = seg.analysis_seconds + start.elapsed().as_secs_f64();
    dispatch(seg, ladder, backend, options, RunMode::Caps, plans, analysis_seconds)
}

/// Same pipeline with every rung fixed at the fastest preset.
pub fn run_baseline(
    seg: &PreparedSegment,
    ladder: &LadderConfig,
    backend: &EncoderBackend,
    options: &RunOptions,
) -> Result<SegmentReport> {
    ladder.validate()?;
    let plans = ladder
        .rungs
        .iter()
        .map(|_| (ladder.preset_range.0, None, None))
        .collect();
    dispatch(
        seg,
        ladder,
        backend,
        options,
        RunMode::Baseline,
        plans,
        seg.analysis_seconds,
    )
}

type RungPlan = (u8, Option<PresetTimes>, Option<PresetDecision>);

fn dispatch(
    seg: &PreparedSegment,
    ladder: &LadderConfig,
    backend: &EncoderBackend,
    options: &RunOptions,
    mode: RunMode,
    plans: Vec<RungPlan>,
    analysis_seconds: f64,
) -> Result<SegmentReport> {
    let deadline = ladder.deadline()?;
    let id = &seg.segment.id;
    let budget = options.latency_budget.unwrap_or(deadline);
    let latency_over_budget = analysis_seconds > budget;
    if latency_over_budget {
        warn!("{id}: analysis took {analysis_seconds:.3}s, budget {budget:.3}s");
    }
    let tag = match mode {
        RunMode::Caps => "caps",
        RunMode::Baseline => "baseline",
    };
    let jobs: Vec<EncodeJob> = ladder
        .rungs
        .iter()
        .zip(&plans)
        .enumerate()
        .map(|(i, (rung, plan))| EncodeJob {
            segment_id: id.clone(),
            source: seg.segment.source.clone(),
            features: seg.features,
            representation: *rung,
            preset: plan.0,
            threads: ladder.threads,
            output: options
                .output_dir
                .join("encodes")
                .join(id)
                .join(format!("{tag}_r{:02}.hevc", i + 1)),
            deadline_seconds: deadline,
            reference: Some(Arc::clone(&seg.segment.frames)),
        })
        .collect();

    let results = run_jobs(&jobs, backend, options.slots)?;

    let mut rungs = Vec::with_capacity(jobs.len());
    for (i, ((job, plan), result)) in jobs.iter().zip(plans).zip(results).enumerate() {
        let idle_time = if result.is_success() {
            (deadline - result.wall_time).max(0.0)
        } else {
            0.0
        };
        debug!(
            "{id} rung {} preset {} took {:.3}s",
            i + 1,
            job.preset,
            result.wall_time
        );
        rungs.push(RungReport {
            rung: i + 1,
            representation: job.representation,
            preset: job.preset,
            predicted: plan.1,
            decision: plan.2,
            result,
            idle_time,
        });
    }
    let violations = rungs.iter().filter(|r| r.result.wall_time > deadline).count();
    let failures = rungs.iter().filter(|r| !r.result.is_success()).count();
    Ok(SegmentReport {
        segment_id: id.clone(),
        mode,
        features: seg.features,
        source_width: seg.segment.source.width,
        source_height: seg.segment.source.height,
        deadline_seconds: deadline,
        analysis_seconds,
        latency_over_budget,
        rungs,
        violations,
        failures,
    })
}

/// Runs `jobs` on at most `slots` workers and returns results in job order.
fn run_jobs(jobs: &[EncodeJob], backend: &EncoderBackend, slots: usize) -> Result<Vec<EncodeResult>> {
    let slots = slots.clamp(1, jobs.len().max(1));
    if slots == 1 {
        return jobs.iter().map(|j| run_job(j, backend)).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<EncodeResult>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    thread::scope(|scope| {
        for _ in 0..slots {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let r = run_job(&jobs[i], backend);
                results.lock().expect("results lock")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}
