//! Encodes one segment of a Y4M clip at every preset with a real encoder and
//! prints the measured times.
//!
//! ```text
//! cargo run --release --example real_encoder -- clip.y4m 720 2400
//! ```
//!
//! Uses `ffmpeg` with libx265 when it is on the PATH. A bare `x265` binary is
//! the fallback, in which case the clip is encoded at its own size.

use std::sync::Arc;

use caps::complexity::{Analyzer, AnalyzerConfig};
use caps::harness::{run_job, CommandBackend, EncodeJob, EncoderBackend, FFMPEG_X265_TEMPLATE, X265_TEMPLATE};
use caps::ladder::Representation;
use caps::orchestrator::load_segments;

fn on_path(tool: &str) -> bool {
    std::env::var_os("PATH").is_some_and(|p| std::env::split_paths(&p).any(|d| d.join(tool).is_file()))
}

fn main() -> caps::Result<()> {
    let mut args = std::env::args().skip(1);
    let Some(input) = args.next() else {
        eprintln!("usage: real_encoder <clip.y4m> [width] [kbps]");
        return Ok(());
    };
    let width: u32 = args.next().and_then(|a| a.parse().ok()).unwrap_or(720);
    let kbps: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(2400.0);

    let template = if on_path("ffmpeg") {
        FFMPEG_X265_TEMPLATE
    } else if on_path("x265") {
        X265_TEMPLATE
    } else {
        eprintln!("neither x265 nor ffmpeg found on PATH");
        return Ok(());
    };
    let backend = EncoderBackend::Command(CommandBackend::new(template));

    let segment = load_segments(input.as_ref(), None, 48)?.remove(0);
    let features = Analyzer::new(AnalyzerConfig::default())?.analyze(&segment.frames)?;
    let reference = Some(Arc::clone(&segment.frames));
    let out_dir = std::env::temp_dir().join("caps-real-encoder");
    std::fs::create_dir_all(&out_dir)?;

    for preset in 0..=8u8 {
        let job = EncodeJob {
            segment_id: segment.id.clone(),
            source: segment.source.clone(),
            features,
            representation: Representation::new(width, kbps)?,
            preset,
            threads: 8,
            output: out_dir.join(format!("p{preset}.hevc")),
            deadline_seconds: segment.source.duration_seconds(),
            reference: reference.clone(),
        };
        let r = run_job(&job, &backend)?;
        println!(
            "preset {preset}: {:>7.3}s {:<7} psnr {}",
            r.wall_time,
            r.status.label(),
            r.psnr.map_or("n/a".into(), |p| format!("{p:.2}"))
        );
    }
    Ok(())
}
