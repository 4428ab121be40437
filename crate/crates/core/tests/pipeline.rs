use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use caps::complexity::{Analyzer, AnalyzerConfig, LumaFrame};
use caps::harness::{EncoderBackend, MockEncoder, SegmentSource};
use caps::ladder::Representation;
use caps::orchestrator::{
    prepare, read_decisions, run_baseline, run_prepared, run_segment, write_run, LadderConfig, PreparedSegment,
    RunOptions, Segment,
};
use caps::selector::select_preset;
use caps::synth::SyntheticSegment;
use caps::timing::{FeatureVector, ModelSet, PresetTimes, TimePredictor, TreeEnsemble};
use caps::Error;

fn segment(id: &str, frames: Vec<LumaFrame>) -> Segment {
    let (w, h, n) = (frames[0].width(), frames[0].height(), frames.len());
    Segment {
        id: id.into(),
        frames: Arc::new(frames),
        source: SegmentSource::synthetic(n, w, h, 24.0),
    }
}

fn prepared(seed: u64) -> PreparedSegment {
    let spec = SyntheticSegment::random(seed, 96, 64, 6);
    prepare(
        segment(&format!("s{seed}"), spec.render()),
        &Analyzer::new(AnalyzerConfig::default()).unwrap(),
    )
    .unwrap()
}

fn mock(ladder: &LadderConfig) -> MockEncoder {
    MockEncoder {
        threads: ladder.threads,
        ..MockEncoder::default()
    }
}

/// Records every feature vector it is asked about.
struct Recorder {
    inner: MockEncoder,
    seen: Mutex<Vec<FeatureVector>>,
}

impl TimePredictor for Recorder {
    fn preset_range(&self) -> (u8, u8) {
        self.inner.preset_range()
    }

    fn predict_times(&self, fv: &FeatureVector, rung: &Representation) -> caps::Result<PresetTimes> {
        self.seen.lock().unwrap().push(*fv);
        self.inner.predict_times(fv, rung)
    }

    fn check_rungs(&self, rungs: &[Representation]) -> caps::Result<()> {
        self.inner.check_rungs(rungs)
    }
}

#[test]
fn tuned_low_rung_lands_on_slow_preset() {
    let ladder = LadderConfig::default();
    let seg = prepared(1);
    let mut m = mock(&ladder);
    let t6 = m.job_time(&seg.features, &ladder.rungs[0], 6, ladder.threads);
    m.time_scale *= 4.5 / t6;
    let times = m
        .predict_times(&FeatureVector::new(&seg.features, &ladder.rungs[0]), &ladder.rungs[0])
        .unwrap();
    assert!(times[&6] <= 5.0 && times[&7] > 5.0);

    let report = run_prepared(
        &seg,
        &ladder,
        &m,
        &EncoderBackend::Mock(m.clone()),
        &RunOptions::default(),
    )
    .unwrap();
    let first = &report.rungs[0];
    assert_eq!(first.preset, 6);
    assert!(first.decision.unwrap().deadline_met);
}

#[test]
fn blank_segment_falls_back_on_the_top_rung() {
    let ladder = LadderConfig::default();
    let m = mock(&ladder);
    let recorder = Recorder {
        inner: m.clone(),
        seen: Mutex::new(Vec::new()),
    };
    let blank = segment("blank", vec![LumaFrame::filled(64, 64, 0); 4]);
    let report = run_segment(
        blank,
        &Analyzer::new(AnalyzerConfig::default()).unwrap(),
        &ladder,
        &recorder,
        &EncoderBackend::Mock(m),
        &RunOptions::default(),
    )
    .unwrap();

    assert_eq!(
        (
            report.features.texture_energy,
            report.features.temporal_energy,
            report.features.luminescence
        ),
        (0.0, 0.0, 0.0)
    );
    let top = report.rungs.last().unwrap();
    assert_eq!(top.preset, 0);
    assert!(!top.decision.unwrap().deadline_met);
    assert!(top.result.wall_time > report.deadline_seconds);
    assert_eq!(top.idle_time, 0.0);

    let seen = recorder.seen.into_inner().unwrap();
    assert_eq!(seen.len(), ladder.rungs.len());
    for (fv, rung) in seen.iter().zip(&ladder.rungs) {
        let a = fv.to_array();
        assert_eq!(&a[..3], &[0.0, 0.0, 0.0]);
        assert_eq!(a[3], f64::from(rung.width).ln());
        assert_eq!(a[4], rung.bitrate_kbps.ln());
    }
}

#[test]
fn decisions_follow_predictions_and_beat_baseline_idle() {
    let ladder = LadderConfig::default();
    let m = mock(&ladder);
    let backend = EncoderBackend::Mock(m.clone());
    let deadline = ladder.deadline().unwrap();
    for seed in 0..8 {
        let seg = prepared(seed);
        let caps = run_prepared(&seg, &ladder, &m, &backend, &RunOptions::default()).unwrap();
        let base = run_baseline(&seg, &ladder, &backend, &RunOptions::default()).unwrap();
        for r in &caps.rungs {
            let d = r.decision.unwrap();
            assert_eq!(select_preset(r.predicted.as_ref().unwrap(), deadline).unwrap(), d);
            assert_eq!(r.preset, d.preset);
            assert_eq!(r.result.wall_time, d.predicted_time);
            if d.deadline_met {
                assert!(r.result.wall_time <= deadline);
            }
        }
        assert!(base.rungs.iter().all(|r| r.preset == 0 && r.decision.is_none()));
        assert!(caps.total_idle() <= base.total_idle());
    }
}

#[test]
fn concurrent_and_serial_dispatch_agree() {
    let ladder = LadderConfig::default();
    let m = mock(&ladder);
    let backend = EncoderBackend::Mock(m.clone());
    let seg = prepared(3);
    let serial = run_prepared(
        &seg,
        &ladder,
        &m,
        &backend,
        &RunOptions {
            slots: 1,
            ..RunOptions::default()
        },
    )
    .unwrap();
    let wide = run_prepared(
        &seg,
        &ladder,
        &m,
        &backend,
        &RunOptions {
            slots: 12,
            ..RunOptions::default()
        },
    )
    .unwrap();
    assert_eq!(serial.rungs, wide.rungs);
}

#[test]
fn missing_width_is_rejected_before_encoding() {
    let ladder = LadderConfig::default();
    let mut models = BTreeMap::new();
    for p in 0..=8u8 {
        models.insert((720, p), TreeEnsemble::constant(1.0));
    }
    let set = ModelSet::new((0, 8), vec![720], models).unwrap();
    let out = tempfile::tempdir().unwrap();
    let options = RunOptions {
        output_dir: out.path().to_path_buf(),
        ..RunOptions::default()
    };
    let err = run_prepared(
        &prepared(0),
        &ladder,
        &set,
        &EncoderBackend::Mock(mock(&ladder)),
        &options,
    )
    .unwrap_err();
    assert!(
        matches!(err, Error::UnknownResolution { .. } | Error::Config(_)),
        "{err}"
    );
    assert_eq!(std::fs::read_dir(out.path()).unwrap().count(), 0);
}

#[test]
fn run_directory_round_trips() {
    let ladder = LadderConfig::default();
    let m = mock(&ladder);
    let reports: Vec<_> = (0..3)
        .map(|s| {
            run_prepared(
                &prepared(s),
                &ladder,
                &m,
                &EncoderBackend::Mock(m.clone()),
                &RunOptions::default(),
            )
            .unwrap()
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let summary = write_run(dir.path(), &reports).unwrap();
    for name in ["segments.csv", "decisions.csv", "summary.txt", "summary.csv"] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
    let records = read_decisions(dir.path()).unwrap();
    assert_eq!(records.len(), 3 * ladder.rungs.len());
    assert_eq!(summary.rungs.len(), ladder.rungs.len());
    assert!(records.iter().all(|r| r.succeeded()));
}
