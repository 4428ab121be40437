//! Complexity features of a video file, or of a few generated segments.
//!
//! ```text
//! cargo run --example extract_features -- clip.y4m
//! cargo run --example extract_features
//! ```

use caps::complexity::{Analyzer, AnalyzerConfig};
use caps::orchestrator::load_segments;
use caps::synth::SyntheticSegment;

fn main() -> caps::Result<()> {
    let analyzer = Analyzer::new(AnalyzerConfig::default())?;
    let segments: Vec<(String, Vec<_>)> = match std::env::args_os().nth(1) {
        Some(path) => load_segments(path.as_ref(), None, 120)?
            .into_iter()
            .map(|s| (s.id, s.frames.to_vec()))
            .collect(),
        None => (0..4)
            .map(|seed| {
                (
                    format!("synthetic{seed}"),
                    SyntheticSegment::random(seed, 256, 144, 24).render(),
                )
            })
            .collect(),
    };

    println!("{:<12} {:>10} {:>10} {:>10}", "segment", "E", "h", "L");
    for (id, frames) in &segments {
        let f = analyzer.analyze(frames)?;
        println!(
            "{id:<12} {:>10.4} {:>10.4} {:>10.6}",
            f.texture_energy, f.temporal_energy, f.luminescence
        );
    }
    Ok(())
}
