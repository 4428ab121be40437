use std::fs;
use std::io::Read;
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{EncodeJob, EncodeResult, JobStatus};
use crate::error::{Error, Result};
use crate::evaluation::{psnr, DEFAULT_PSNR_CEILING};
use crate::video;

/// Standalone x265; it cannot rescale, so the input must already be at the
/// rung resolution.
pub const X265_TEMPLATE: &str = "x265 --input {input} --seek {seek} --frames {frames} --preset {preset} \
--bitrate {bitrate_kbps} --pools {threads} --psnr --output {output}";

/// ffmpeg + libx265 with per-rung scaling.
pub const FFMPEG_X265_TEMPLATE: &str = "ffmpeg -nostdin -y -loglevel info -i {input} \
-vf trim=start_frame={seek}:end_frame={end},setpts=PTS-STARTPTS,scale={width}:{height} \
-c:v libx265 -preset {preset_name} -b:v {bitrate_kbps}k -x265-params pools={threads}:psnr=1 -f hevc {output}";

const PRESET_NAMES: [&str; 10] = [
    "ultrafast",
    "superfast",
    "veryfast",
    "faster",
    "fast",
    "medium",
    "slow",
    "slower",
    "veryslow",
    "placebo",
];

/// Runs an external encoder built from a whitespace-separated template.
///
/// Placeholders: `{input} {width} {height} {bitrate_kbps} {preset}
/// {preset_name} {threads} {output} {seek} {frames} {end} {fps} {recon}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CommandBackend {
    pub template: String,
    /// Abort after this multiple of the segment deadline.
    pub timeout_factor: f64,
}

impl Default for CommandBackend {
    fn default() -> Self {
        CommandBackend {
            template: FFMPEG_X265_TEMPLATE.into(),
            timeout_factor: 10.0,
        }
    }
}

impl CommandBackend {
    pub fn new(template: impl Into<String>) -> Self {
        CommandBackend {
            template: template.into(),
            ..Default::default()
        }
    }

    /// The program and arguments for `job`.
    pub fn render(&self, job: &EncodeJob) -> Result<Vec<String>> {
        let input = job
            .source
            .path
            .as_ref()
            .ok_or_else(|| Error::Config("real encoder needs a segment file".into()))?;
        let src = &job.source;
        let height = scaled_height(src.width, src.height, job.representation.width);
        let recon = recon_path(&job.output);
        let preset_name = PRESET_NAMES.get(job.preset as usize).copied().unwrap_or("placebo");
        let subs: [(&str, String); 13] = [
            ("{input}", input.display().to_string()),
            ("{width}", job.representation.width.to_string()),
            ("{height}", height.to_string()),
            ("{bitrate_kbps}", format_kbps(job.representation.bitrate_kbps)),
            ("{preset}", job.preset.to_string()),
            ("{preset_name}", preset_name.to_string()),
            ("{threads}", job.threads.to_string()),
            ("{output}", job.output.display().to_string()),
            ("{seek}", src.seek.to_string()),
            ("{frames}", src.frames.to_string()),
            ("{end}", (src.seek + src.frames).to_string()),
            ("{fps}", src.fps.to_string()),
            ("{recon}", recon.display().to_string()),
        ];
        let args: Vec<String> = self
            .template
            .split_whitespace()
            .map(|tok| subs.iter().fold(tok.to_string(), |acc, (k, v)| acc.replace(k, v)))
            .collect();
        if args.is_empty() {
            return Err(Error::Config("empty encoder command template".into()));
        }
        Ok(args)
    }

    pub(super) fn run(&self, job: &EncodeJob) -> Result<EncodeResult> {
        let args = self.render(job)?;
        if let Some(dir) = job.output.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
        }
        let timeout = Duration::from_secs_f64((self.timeout_factor * job.deadline_seconds).max(0.001));
        let start = Instant::now();
        let child = Command::new(&args[0])
            .args(&args[1..])
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn();
        let mut child = match child {
            Ok(c) => c,
            Err(e) => {
                return Ok(EncodeResult::failed(
                    0.0,
                    JobStatus::Failed(format!("spawn {}: {e}", args[0])),
                    String::new(),
                ))
            }
        };
        let stdout = drain(child.stdout.take());
        let stderr = drain(child.stderr.take());
        let outcome = wait_with_timeout(&mut child, timeout);
        let wall_time = start.elapsed().as_secs_f64();
        let mut diagnostics = stderr.join().unwrap_or_default();
        diagnostics.push_str(&stdout.join().unwrap_or_default());

        let (exit_ok, cpu_time) = match outcome {
            Exit::TimedOut => return Ok(EncodeResult::failed(wall_time, JobStatus::TimedOut, diagnostics)),
            Exit::Error(e) => return Ok(EncodeResult::failed(wall_time, JobStatus::Failed(e), diagnostics)),
            Exit::Done { success, cpu_time } => (success, cpu_time),
        };
        if !exit_ok {
            return Ok(EncodeResult::failed(
                wall_time,
                JobStatus::Failed("encoder exited with failure status".into()),
                diagnostics,
            ));
        }
        let output_bytes = fs::metadata(&job.output).map(|m| m.len()).unwrap_or(0);
        if output_bytes == 0 {
            return Ok(EncodeResult::failed(
                wall_time,
                JobStatus::Failed("encoder produced no output".into()),
                diagnostics,
            ));
        }
        let duration = job.source.duration_seconds();
        let achieved_kbps = (duration > 0.0).then(|| output_bytes as f64 * 8.0 / 1000.0 / duration);
        let psnr = recon_psnr(job).or_else(|| parse_global_psnr(&diagnostics));
        Ok(EncodeResult {
            wall_time,
            cpu_time,
            status: JobStatus::Success,
            output_bytes,
            achieved_kbps,
            psnr,
            diagnostics,
        })
    }
}

fn format_kbps(kbps: f64) -> String {
    if kbps.fract() == 0.0 {
        format!("{}", kbps as u64)
    } else {
        format!("{kbps}")
    }
}

/// Height for `width` keeping the source aspect, rounded to even.
pub(crate) fn scaled_height(src_w: usize, src_h: usize, width: u32) -> usize {
    let h = src_h as f64 * f64::from(width) / src_w.max(1) as f64;
    ((h / 2.0).round() as usize * 2).max(2)
}

fn recon_path(output: &Path) -> std::path::PathBuf {
    output.with_extension("recon.y4m")
}

/// PSNR of the reconstruction against the source when the template asked the
/// encoder to write one at source resolution.
fn recon_psnr(job: &EncodeJob) -> Option<f64> {
    let reference = job.reference.as_ref()?;
    let path = recon_path(&job.output);
    let mut reader = video::open(&path, None).ok()?;
    let frames = reader.read_frames(reference.len()).ok()?;
    psnr(reference, &frames, job.source.bit_depth, DEFAULT_PSNR_CEILING)
        .ok()
        .map(|r| r.psnr)
}

/// `Global PSNR: 38.123` as printed by x265.
pub(crate) fn parse_global_psnr(log: &str) -> Option<f64> {
    let idx = log.rfind("Global PSNR:")?;
    log[idx + "Global PSNR:".len()..]
        .split_whitespace()
        .next()?
        .trim_end_matches(',')
        .parse()
        .ok()
}

fn drain<R: Read + Send + 'static>(pipe: Option<R>) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut p) = pipe {
            let _ = p.read_to_end(&mut buf);
        }
        String::from_utf8_lossy(&buf).into_owned()
    })
}

enum Exit {
    Done { success: bool, cpu_time: Option<f64> },
    TimedOut,
    Error(String),
}

#[cfg(unix)]
fn wait_with_timeout(child: &mut Child, timeout: Duration) -> Exit {
    let pid = child.id() as libc::pid_t;
    let start = Instant::now();
    loop {
        let mut status: libc::c_int = 0;
        // SAFETY: zeroed rusage is a valid out-parameter for wait4.
        let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
        // SAFETY: pid is our own un-reaped child; both pointers are valid.
        let r = unsafe { libc::wait4(pid, &mut status, libc::WNOHANG, &mut usage) };
        if r == pid {
            let tv = |t: libc::timeval| t.tv_sec as f64 + t.tv_usec as f64 * 1e-6;
            let cpu = tv(usage.ru_utime) + tv(usage.ru_stime);
            let success = libc::WIFEXITED(status) && libc::WEXITSTATUS(status) == 0;
            return Exit::Done {
                success,
                cpu_time: Some(cpu),
            };
        }
        if r < 0 {
            return Exit::Error(std::io::Error::last_os_error().to_string());
        }
        if start.elapsed() >= timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Exit::TimedOut;
        }
        thread::sleep(Duration::from_millis(2));
    }
}

#[cfg(not(unix))]
fn wait_with_timeout(child: &mut Child, timeout: Duration) -> Exit {
    let start = Instant::now();
    loop {
        match child.try_wait() {
            Ok(Some(status)) => {
                return Exit::Done {
                    success: status.success(),
                    cpu_time: None,
                }
            }
            Ok(None) => {}
            Err(e) => return Exit::Error(e.to_string()),
        }
        if start.elapsed() >= timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Exit::TimedOut;
        }
        thread::sleep(Duration::from_millis(2));
    }
}
