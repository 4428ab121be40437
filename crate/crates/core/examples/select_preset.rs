//! Picking the slowest preset that still meets a live deadline.

use caps::selector::{select_preset, target_time};
use caps::timing::PresetTimes;

fn main() -> caps::Result<()> {
    // 120-frame segments that must be encoded at 24 fps: five seconds each.
    let deadline = target_time(120, 24.0)?;

    let cases: [(&str, [f64; 9]); 3] = [
        ("low rung", [0.4, 0.6, 0.9, 1.3, 1.9, 2.8, 4.1, 6.0, 8.8]),
        ("mid rung", [1.1, 1.6, 2.4, 3.6, 5.3, 7.8, 11.5, 16.9, 24.8]),
        ("4K rung", [6.2, 9.1, 13.4, 19.7, 29.0, 42.6, 62.6, 92.0, 135.3]),
    ];
    for (name, times) in cases {
        let times: PresetTimes = times.into_iter().enumerate().map(|(p, t)| (p as u8, t)).collect();
        let d = select_preset(&times, deadline)?;
        println!(
            "{name:<9} preset {} predicted {:.2}s of {deadline:.0}s, deadline met: {}, margin {:+.2}s",
            d.preset, d.predicted_time, d.deadline_met, d.margin
        );
    }
    Ok(())
}
