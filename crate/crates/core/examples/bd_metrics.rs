//! Bjøntegaard quality delta between two rate-distortion curves.

use caps::evaluation::{bd_quality, RdCurve, RdPoint};

fn curve(points: &[(f64, f64)]) -> caps::Result<RdCurve> {
    RdCurve::from_unsorted(
        points
            .iter()
            .map(|&(bitrate_kbps, quality)| RdPoint { bitrate_kbps, quality })
            .collect(),
    )
}

fn main() -> caps::Result<()> {
    let ultrafast = curve(&[
        (145.0, 31.2),
        (600.0, 36.0),
        (2400.0, 40.1),
        (8100.0, 43.5),
        (16800.0, 45.2),
    ])?;
    let adaptive = curve(&[
        (145.0, 32.4),
        (600.0, 37.1),
        (2400.0, 40.9),
        (8100.0, 43.9),
        (16800.0, 45.3),
    ])?;

    println!(
        "BD-PSNR adaptive vs ultrafast: {:+.3} dB",
        bd_quality(&ultrafast, &adaptive)?
    );
    println!(
        "and the other way round:       {:+.3} dB",
        bd_quality(&adaptive, &ultrafast)?
    );
    println!(
        "a curve against itself:        {:+.3} dB",
        bd_quality(&adaptive, &adaptive)?
    );
    Ok(())
}
