use std::path::Path;
use std::process::{Command, Output};

use caps::synth::SyntheticSegment;
use caps::video::write_y4m;

fn caps(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_caps"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "caps {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn analyze_prints_one_row_per_segment() {
    let dir = tempfile::tempdir().unwrap();
    let frames = SyntheticSegment::random(2, 96, 64, 10).render();
    write_y4m(&dir.path().join("clip.y4m"), &frames, (24, 1), 8).unwrap();
    let out = caps(
        dir.path(),
        &["analyze", "clip.y4m", "--segment-frames", "4", "--block-size", "16"],
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "segment_id,E,h,L,frames,width,height");
    assert_eq!(lines.len(), 1 + 3);
    assert!(lines[3].starts_with("seg0002,") && lines[3].ends_with(",2,96,64"));
}

#[test]
fn mock_workflow_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let config = "output_dir = \"caps\"\n[synthetic]\nsegments = 4\nwidth = 64\nheight = 64\n";
    std::fs::write(p.join("caps.toml"), config).unwrap();
    std::fs::write(p.join("base.toml"), config.replace("\"caps\"", "\"base\"")).unwrap();
    std::fs::write(
        p.join("model.toml"),
        format!("model = \"models.json\"\n{}", config.replace("\"caps\"", "\"model\"")),
    )
    .unwrap();

    caps(
        p,
        &["--config", "caps.toml", "dataset", "-o", "train.csv", "--jobs", "2"],
    );
    let rows = std::fs::read_to_string(p.join("train.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 4 * 12 * 9);

    let out = caps(
        p,
        &[
            "--threads",
            "2",
            "train",
            "train.csv",
            "--trees",
            "30",
            "--min-samples-leaf",
            "1",
        ],
    );
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1 + 63);

    let out = caps(p, &["--config", "model.toml", "predict"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1 + 4 * 12);

    caps(p, &["--config", "caps.toml", "encode-ladder"]);
    caps(p, &["--config", "base.toml", "--mock", "encode-baseline"]);
    caps(p, &["--config", "model.toml", "encode-ladder"]);
    for run in ["caps", "base", "model"] {
        for f in ["segments.csv", "decisions.csv", "summary.txt"] {
            assert!(p.join(run).join(f).is_file(), "{run}/{f}");
        }
    }
    let out = caps(p, &["evaluate", "base", "caps", "-o", "eval"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("mean BD-PSNR"));
    assert!(p.join("eval/bd_report.csv").is_file());
}

#[test]
fn bad_config_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[ladder]\nframerate = -1.0\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_caps"))
        .current_dir(dir.path())
        .args(["--config", "bad.toml", "encode-ladder"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}
