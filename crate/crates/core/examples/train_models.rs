//! Generates timing data with the mock encoder, trains one model per
//! (width, preset), checks it on held-out segments and writes it to disk.

use caps::complexity::{Analyzer, AnalyzerConfig};
use caps::harness::{build_dataset, DatasetPlan, DatasetSegment, EncoderBackend, SegmentSource};
use caps::ladder::hls_ladder;
use caps::synth::SyntheticSegment;
use caps::timing::{
    load_model_set, mean_absolute_error, predict_all_presets, r_squared, serialize_model_set, train_model_set,
    FeatureVector, Hyperparams,
};

fn segments(seeds: std::ops::Range<u64>) -> caps::Result<Vec<DatasetSegment>> {
    let analyzer = Analyzer::new(AnalyzerConfig::default())?;
    seeds
        .map(|seed| {
            let spec = SyntheticSegment::random(seed, 128, 72, 12);
            Ok(DatasetSegment {
                id: format!("syn{seed}"),
                features: analyzer.analyze(&spec.render())?,
                source: SegmentSource::synthetic(spec.frames, spec.width, spec.height, 24.0),
            })
        })
        .collect()
}

fn main() -> caps::Result<()> {
    let dir = std::env::temp_dir().join("caps-train-example");
    std::fs::create_dir_all(&dir)?;
    let backend = EncoderBackend::default();
    let plan = DatasetPlan {
        rungs: hls_ladder(),
        presets: (0, 8),
        threads: 8,
        deadline_seconds: 5.0,
        jobs: 4,
        repetitions: 1,
        work_dir: dir.join("work"),
    };

    let train_csv = dir.join("train.csv");
    let _ = std::fs::remove_file(&train_csv);
    let _ = std::fs::remove_file(dir.join("train.csv.progress"));
    let train = build_dataset(&segments(0..30)?, &plan, &backend, &train_csv)?;
    println!("training rows: {}", train.rows.len());

    let hp = Hyperparams {
        min_samples_leaf: 2,
        ..Hyperparams::default()
    };
    let models = train_model_set(&train.rows, &hp)?;
    println!("models: {} over widths {:?}", models.len(), models.resolutions());

    let test_csv = dir.join("test.csv");
    let _ = std::fs::remove_file(&test_csv);
    let _ = std::fs::remove_file(dir.join("test.csv.progress"));
    let test = build_dataset(&segments(1000..1010)?, &plan, &backend, &test_csv)?;
    let mut truth = Vec::new();
    let mut predicted = Vec::new();
    for row in &test.rows {
        let times = predict_all_presets(&models, &row.feature_vector(), row.width)?;
        truth.push(row.time_seconds);
        predicted.push(times[&row.preset]);
    }
    println!(
        "held-out MAE {:.4}s, R² {:.4}",
        mean_absolute_error(&truth, &predicted),
        r_squared(&truth, &predicted)
    );

    let path = dir.join("models.json");
    std::fs::write(&path, serialize_model_set(&models)?)?;
    let reloaded = load_model_set(&std::fs::read(&path)?)?;
    let probe = FeatureVector::from_parts(10.0, 0.5, 0.05, 720.0, 2400.0);
    assert_eq!(
        predict_all_presets(&models, &probe, 720)?,
        predict_all_presets(&reloaded, &probe, 720)?
    );
    println!("wrote {}", path.display());
    Ok(())
}
