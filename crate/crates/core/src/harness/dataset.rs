use std::collections::{HashSet, VecDeque};
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{mpsc, Mutex};
use std::thread;

use log::{info, warn};

use super::{run_job, EncodeJob, EncodeResult, EncoderBackend, JobStatus, SegmentSource};
use crate::complexity::SegmentFeatures;
use crate::error::{Error, Result};
use crate::ladder::Representation;
use crate::timing::{read_training_csv, TrainingRow, TRAINING_CSV_HEADER};

#[derive(Debug, Clone)]
pub struct DatasetSegment {
    pub id: String,
    pub features: SegmentFeatures,
    pub source: SegmentSource,
}

#[derive(Debug, Clone)]
pub struct DatasetPlan {
    pub rungs: Vec<Representation>,
    pub presets: (u8, u8),
    pub threads: u32,
    pub deadline_seconds: f64,
    /// Concurrent encodes; 1 keeps timings free of cross-job interference.
    pub jobs: usize,
    /// Encodes per combination; the median time is recorded.
    pub repetitions: usize,
    /// Scratch directory for encoder output.
    pub work_dir: PathBuf,
}

#[derive(Debug, Clone, Default)]
pub struct DatasetReport {
    /// Every row in the dataset file, including rows from earlier runs.
    pub rows: Vec<TrainingRow>,
    /// Jobs run by this call.
    pub attempted: usize,
    /// Combinations skipped because an earlier run already recorded them.
    pub resumed: usize,
    /// One entry per failed combination run by this call.
    pub failures: Vec<String>,
}

#[derive(Clone)]
struct Task {
    key: String,
    segment: usize,
    rung: Representation,
    preset: u8,
}

fn task_key(id: &str, rung: &Representation, preset: u8) -> String {
    format!("{id}|{}|{}|{preset}", rung.width, rung.bitrate_kbps)
}

fn progress_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".progress");
    out.with_file_name(name)
}

/// Encodes every (segment, rung, preset) combination and appends one row per
/// successful encode to `out`. A sidecar `<out>.progress` file records each
/// finished combination, so an interrupted run resumes where it stopped.
pub fn build_dataset(
    segments: &[DatasetSegment],
    plan: &DatasetPlan,
    backend: &EncoderBackend,
    out: &Path,
) -> Result<DatasetReport> {
    if plan.presets.0 > plan.presets.1 {
        return Err(Error::Config("empty preset range".into()));
    }
    plan.rungs.iter().try_for_each(Representation::validate)?;
    let done = recover(out)?;

    let mut tasks = Vec::new();
    let mut resumed = 0;
    for (si, seg) in segments.iter().enumerate() {
        for rung in &plan.rungs {
            for preset in plan.presets.0..=plan.presets.1 {
                let key = task_key(&seg.id, rung, preset);
                if done.contains(&key) {
                    resumed += 1;
                } else {
                    tasks.push(Task {
                        key,
                        segment: si,
                        rung: *rung,
                        preset,
                    });
                }
            }
        }
    }
    info!("dataset: {} jobs pending, {resumed} already recorded", tasks.len());

    let fresh = !out.exists();
    let data_file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(out)
        .map_err(|e| Error::file(out, e))?;
    let progress = progress_path(out);
    let progress_file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&progress)
        .map_err(|e| Error::file(&progress, e))?;
    let mut writer = RowWriter {
        data: BufWriter::new(data_file),
        progress: BufWriter::new(progress_file),
    };
    if fresh {
        writeln!(writer.data, "{TRAINING_CSV_HEADER}")?;
        writer.data.flush()?;
    }
    if !backend.is_mock() {
        fs::create_dir_all(&plan.work_dir).map_err(|e| Error::file(&plan.work_dir, e))?;
    }

    let mut report = DatasetReport {
        resumed,
        attempted: tasks.len(),
        ..Default::default()
    };
    let run = |task: &Task| -> (Task, Result<EncodeResult>) {
        let seg = &segments[task.segment];
        let result = run_repeated(seg, task, plan, backend);
        (task.clone(), result)
    };

    if plan.jobs <= 1 {
        for task in &tasks {
            let (task, result) = run(task);
            writer.record(&segments[task.segment], &task, result, &mut report)?;
        }
    } else {
        let queue = Mutex::new(tasks.into_iter().collect::<VecDeque<_>>());
        let (tx, rx) = mpsc::channel();
        thread::scope(|scope| -> Result<()> {
            for _ in 0..plan.jobs {
                let tx = tx.clone();
                let queue = &queue;
                let run = &run;
                scope.spawn(move || loop {
                    let next = queue.lock().expect("queue lock").pop_front();
                    let Some(task) = next else { break };
                    if tx.send(run(&task)).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
            for (task, result) in rx {
                writer.record(&segments[task.segment], &task, result, &mut report)?;
            }
            Ok(())
        })?;
    }

    report.rows = read_training_csv(File::open(out).map_err(|e| Error::file(out, e))?)?;
    if report.rows.is_empty() {
        return Err(Error::Dataset("no successful encodes".into()));
    }
    Ok(report)
}

fn run_repeated(
    seg: &DatasetSegment,
    task: &Task,
    plan: &DatasetPlan,
    backend: &EncoderBackend,
) -> Result<EncodeResult> {
    let output = plan.work_dir.join(format!(
        "{}_{}_{}_{}.bin",
        seg.id, task.rung.width, task.rung.bitrate_kbps, task.preset
    ));
    let job = EncodeJob {
        segment_id: seg.id.clone(),
        source: seg.source.clone(),
        features: seg.features,
        representation: task.rung,
        preset: task.preset,
        threads: plan.threads,
        output: output.clone(),
        deadline_seconds: plan.deadline_seconds,
        reference: None,
    };
    let mut times = Vec::new();
    let mut last = None;
    for _ in 0..plan.repetitions.max(1) {
        let r = run_job(&job, backend)?;
        if !r.is_success() {
            return Ok(r);
        }
        times.push(r.wall_time);
        last = Some(r);
    }
    if !backend.is_mock() {
        let _ = fs::remove_file(&output);
    }
    let mut result = last.expect("at least one repetition");
    result.wall_time = crate::timing::median_of(&mut times);
    Ok(result)
}

struct RowWriter {
    data: BufWriter<File>,
    progress: BufWriter<File>,
}

impl RowWriter {
    fn record(
        &mut self,
        seg: &DatasetSegment,
        task: &Task,
        result: Result<EncodeResult>,
        report: &mut DatasetReport,
    ) -> Result<()> {
        let failure = match result {
            Ok(r) if r.is_success() && r.wall_time > 0.0 => {
                let f = &seg.features;
                writeln!(
                    self.data,
                    "{},{},{},{},{},{},{}",
                    f.texture_energy,
                    f.temporal_energy,
                    f.luminescence,
                    task.rung.width,
                    task.rung.bitrate_kbps,
                    task.preset,
                    r.wall_time
                )?;
                self.data.flush()?;
                writeln!(self.progress, "{},ok", task.key)?;
                self.progress.flush()?;
                return Ok(());
            }
            Ok(r) => match r.status {
                JobStatus::Failed(reason) => reason,
                JobStatus::TimedOut => "timed out".into(),
                JobStatus::Success => format!("nonpositive time {}", r.wall_time),
            },
            Err(e) => e.to_string(),
        };
        warn!("dataset job {} failed: {failure}", task.key);
        report.failures.push(format!("{}: {failure}", task.key));
        writeln!(self.progress, "{},failed", task.key)?;
        self.progress.flush()?;
        Ok(())
    }
}

/// Reads finished keys and truncates the dataset to rows confirmed by the
/// progress log, discarding anything written after the last confirmation.
fn recover(out: &Path) -> Result<HashSet<String>> {
    let progress = progress_path(out);
    if !out.exists() {
        if progress.exists() {
            fs::remove_file(&progress).map_err(|e| Error::file(&progress, e))?;
        }
        return Ok(HashSet::new());
    }
    let log = if progress.exists() {
        fs::read_to_string(&progress).map_err(|e| Error::file(&progress, e))?
    } else {
        String::new()
    };
    // only newline-terminated entries count
    let complete = match log.rfind('\n') {
        Some(i) => &log[..=i],
        None => "",
    };
    let mut done = HashSet::new();
    let mut ok_rows = 0;
    for line in complete.lines() {
        let (key, status) = line
            .rsplit_once(',')
            .ok_or_else(|| Error::Dataset(format!("corrupt progress entry {line:?}")))?;
        if status == "ok" {
            ok_rows += 1;
        }
        done.insert(key.to_string());
    }
    fs::write(&progress, complete).map_err(|e| Error::file(&progress, e))?;

    let data = fs::read_to_string(out).map_err(|e| Error::file(out, e))?;
    let mut lines = data.split_inclusive('\n');
    let header = lines.next().unwrap_or("");
    if header.trim_end() != TRAINING_CSV_HEADER {
        return Err(Error::Dataset(format!(
            "{} does not start with the dataset header",
            out.display()
        )));
    }
    let rows: Vec<&str> = lines.filter(|l| l.ends_with('\n')).collect();
    if rows.len() < ok_rows {
        return Err(Error::Dataset(format!(
            "{} has {} rows but the progress log confirms {ok_rows}",
            out.display(),
            rows.len()
        )));
    }
    let kept: String = std::iter::once(header).chain(rows[..ok_rows].iter().copied()).collect();
    if kept.len() != data.len() {
        fs::write(out, kept).map_err(|e| Error::file(out, e))?;
    }
    Ok(done)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::MockEncoder;
    use crate::ladder::hls_ladder;

    fn segments(n: usize) -> Vec<DatasetSegment> {
        (0..n)
            .map(|i| DatasetSegment {
                id: format!("seg{i}"),
                features: SegmentFeatures {
                    texture_energy: 5.0 + i as f64,
                    temporal_energy: 1.0 + 0.5 * i as f64,
                    luminescence: 0.3,
                    frame_count: 120,
                    blocks_per_frame: 8,
                    clamped_dc_blocks: 0,
                },
                source: SegmentSource::synthetic(120, 256, 128, 24.0),
            })
            .collect()
    }

    fn plan(dir: &Path, jobs: usize) -> DatasetPlan {
        DatasetPlan {
            rungs: hls_ladder()[..3].to_vec(),
            presets: (0, 2),
            threads: 8,
            deadline_seconds: 5.0,
            jobs,
            repetitions: 1,
            work_dir: dir.join("work"),
        }
    }

    #[test]
    fn one_row_per_combination() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("data.csv");
        let report = build_dataset(&segments(2), &plan(dir.path(), 1), &EncoderBackend::default(), &out).unwrap();
        assert_eq!(report.rows.len(), 2 * 3 * 3);
        assert!(report.failures.is_empty());
    }

    #[test]
    fn parallel_build_gives_same_rows() {
        let dir = tempfile::tempdir().unwrap();
        let serial = build_dataset(
            &segments(3),
            &plan(dir.path(), 1),
            &EncoderBackend::default(),
            &dir.path().join("a.csv"),
        )
        .unwrap();
        let parallel = build_dataset(
            &segments(3),
            &plan(dir.path(), 4),
            &EncoderBackend::default(),
            &dir.path().join("b.csv"),
        )
        .unwrap();
        let key = |r: &TrainingRow| format!("{r:?}");
        let mut a: Vec<_> = serial.rows.iter().map(key).collect();
        let mut b: Vec<_> = parallel.rows.iter().map(key).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn resume_after_interruption() {
        let dir = tempfile::tempdir().unwrap();
        let segs = segments(3);
        let full_path = dir.path().join("full.csv");
        let full = build_dataset(&segs, &plan(dir.path(), 1), &EncoderBackend::default(), &full_path).unwrap();

        // Interrupted run: first segment done, plus a row whose progress entry
        // never made it to disk and a torn progress line.
        let out = dir.path().join("part.csv");
        build_dataset(&segs[..1], &plan(dir.path(), 1), &EncoderBackend::default(), &out).unwrap();
        let mut f = OpenOptions::new().append(true).open(&out).unwrap();
        writeln!(f, "9,9,9,360,145,0,1.0").unwrap();
        let mut p = OpenOptions::new().append(true).open(progress_path(&out)).unwrap();
        write!(p, "seg1|360|145|0,o").unwrap();

        let resumed = build_dataset(&segs, &plan(dir.path(), 1), &EncoderBackend::default(), &out).unwrap();
        assert_eq!(resumed.resumed, 9);
        assert_eq!(resumed.attempted, 18);
        assert_eq!(resumed.rows, full.rows);
        assert_eq!(
            fs::read_to_string(&out).unwrap(),
            fs::read_to_string(&full_path).unwrap()
        );
    }

    #[test]
    fn failures_are_logged_once_and_omitted() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("data.csv");
        let mock = MockEncoder {
            time_scale: -1.0,
            ..MockEncoder::default()
        };
        let err = build_dataset(&segments(1), &plan(dir.path(), 1), &EncoderBackend::Mock(mock), &out).unwrap_err();
        assert!(matches!(err, Error::Dataset(_)));
        let log = fs::read_to_string(progress_path(&out)).unwrap();
        assert_eq!(log.lines().filter(|l| l.ends_with(",failed")).count(), 9);

        // a second pass does not retry or re-log them
        let again = build_dataset(&segments(1), &plan(dir.path(), 1), &EncoderBackend::default(), &out);
        assert!(again.is_err());
        let log = fs::read_to_string(progress_path(&out)).unwrap();
        assert_eq!(log.lines().count(), 9);
    }
}
