//! Full live pipeline on generated content: CAPS against the fastest-preset
//! baseline, followed by the quality comparison.

use std::sync::Arc;

use caps::complexity::{Analyzer, AnalyzerConfig};
use caps::evaluation::evaluate_runs;
use caps::harness::{EncoderBackend, MockEncoder, SegmentSource};
use caps::orchestrator::{prepare, run_baseline, run_prepared, write_run, LadderConfig, RunOptions, Segment};
use caps::synth::SyntheticSegment;

fn main() -> caps::Result<()> {
    let out = std::env::temp_dir().join("caps-mock-ladder");
    let ladder = LadderConfig::default();
    let mock = MockEncoder {
        threads: ladder.threads,
        ..MockEncoder::default()
    };
    let backend = EncoderBackend::Mock(mock.clone());
    let analyzer = Analyzer::new(AnalyzerConfig::default())?;
    let options = RunOptions {
        slots: ladder.rungs.len(),
        ..RunOptions::default()
    };

    let mut caps_reports = Vec::new();
    let mut base_reports = Vec::new();
    for seed in 0..10 {
        let spec = SyntheticSegment::random(seed, 192, 108, 24);
        let segment = Segment {
            id: format!("syn{seed:02}"),
            frames: Arc::new(spec.render()),
            source: SegmentSource::synthetic(spec.frames, spec.width, spec.height, ladder.framerate),
        };
        let prepared = prepare(segment, &analyzer)?;
        // The mock knows its own times exactly, so it doubles as a perfect predictor.
        caps_reports.push(run_prepared(&prepared, &ladder, &mock, &backend, &options)?);
        base_reports.push(run_baseline(&prepared, &ladder, &backend, &options)?);
    }

    println!("CAPS\n{}", write_run(&out.join("caps"), &caps_reports)?);
    println!("baseline\n{}", write_run(&out.join("baseline"), &base_reports)?);
    let report = evaluate_runs(
        &out.join("baseline"),
        &out.join("caps"),
        None,
        None,
        &out.join("evaluation"),
    )?;
    print!("{report}");
    println!("reports under {}", out.display());
    Ok(())
}
