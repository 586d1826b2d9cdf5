//! Frame-by-frame orchestration and the `run` / `bench` drivers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use crate::detector::{detect_frame_with, Parallelism};
use crate::error::{Error, Result};
use crate::frame::{Frame, MaskFrame};
use crate::frame_io::{read_frame_sequence, write_mask, DEFAULT_FRAME_PATTERN};
use crate::model::{Initializer, ModelState};
use crate::params::Params;
use crate::preprocess::{median_filter, MedianFilterSpec};
use crate::updater::{update_frame, UpdateStats};

/// Accumulated time per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub filter: Duration,
    pub init: Duration,
    pub detect: Duration,
    pub update: Duration,
    /// Filter + detect + update time of post-warm-up frames only.
    pub steady: Duration,
}

impl PhaseTimings {
    pub fn total(&self) -> Duration {
        self.filter + self.init + self.detect + self.update
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutput {
    pub mask: MaskFrame,
    /// True for the `f_n + n` initialization frames, whose masks are all background.
    pub warmup: bool,
    pub update: Option<UpdateStats>,
}

/// Streaming segmenter: feed raw frames in order, get one mask per frame.
pub struct Engine {
    params: Params,
    width: usize,
    height: usize,
    filter: MedianFilterSpec,
    parallelism: Parallelism,
    init: Option<Box<Initializer>>,
    state: Option<Box<ModelState>>,
    frames_seen: usize,
    timings: PhaseTimings,
}

impl Engine {
    pub fn new(params: Params, width: usize, height: usize) -> Result<Self> {
        params.validate()?;
        let filter = MedianFilterSpec::new(params.median_window).expect("validated window");
        Ok(Self {
            init: Some(Box::new(Initializer::new(params.clone(), width, height)?)),
            state: None,
            params,
            width,
            height,
            filter,
            parallelism: Parallelism::default(),
            frames_seen: 0,
            timings: PhaseTimings::default(),
        })
    }

    pub fn with_parallelism(mut self, parallelism: Parallelism) -> Self {
        self.parallelism = parallelism;
        self
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frames_seen(&self) -> usize {
        self.frames_seen
    }

    pub fn is_warm(&self) -> bool {
        self.state.is_some()
    }

    /// Model state once initialization has finished.
    pub fn state(&self) -> Option<&ModelState> {
        self.state.as_deref()
    }

    pub fn timings(&self) -> &PhaseTimings {
        &self.timings
    }

    /// Median-filter `raw`, then process it.
    pub fn push(&mut self, raw: &Frame) -> Result<FrameOutput> {
        raw.same_dims(self.width, self.height)?;
        let t = Instant::now();
        let filtered = median_filter(raw, self.filter);
        let spent = t.elapsed();
        self.timings.filter += spent;
        let out = self.push_filtered(&filtered)?;
        if !out.warmup {
            self.timings.steady += spent;
        }
        Ok(out)
    }

    /// Process a frame that has already been median filtered.
    pub fn push_filtered(&mut self, frame: &Frame) -> Result<FrameOutput> {
        frame.same_dims(self.width, self.height)?;
        self.frames_seen += 1;
        if let Some(state) = self.state.as_mut() {
            let t = Instant::now();
            let detection = detect_frame_with(frame, state, &self.params, self.parallelism)?;
            let t_detect = t.elapsed();
            let t = Instant::now();
            let stats = update_frame(frame, &detection.mask, state)?;
            let t_update = t.elapsed();
            self.timings.detect += t_detect;
            self.timings.update += t_update;
            self.timings.steady += t_detect + t_update;
            return Ok(FrameOutput {
                mask: detection.mask,
                warmup: false,
                update: Some(stats),
            });
        }

        let t = Instant::now();
        let init = self.init.as_mut().expect("initializer present until warm");
        init.push(frame)?;
        if init.is_complete() {
            let init = self.init.take().expect("initializer present");
            self.state = Some(Box::new(init.finish()?));
        }
        self.timings.init += t.elapsed();
        Ok(FrameOutput {
            mask: MaskFrame::background(self.width, self.height)?,
            warmup: true,
            update: None,
        })
    }
}

pub fn mask_file_name(k: usize) -> String {
    format!("bin{:06}.pgm", k + 1)
}

/// Outcome of [`run`]. [`RunReport::to_text`] is fully determined by the
/// inputs; timings are reported separately.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub frames: usize,
    pub warmup_frames: usize,
    pub foreground_pixels: u64,
    pub processing: Duration,
    pub total: Duration,
    pub params: Params,
}

impl RunReport {
    pub fn detection_frames(&self) -> usize {
        self.frames - self.warmup_frames
    }

    pub fn fps_processing(&self) -> f64 {
        self.frames as f64 / self.processing.as_secs_f64().max(f64::MIN_POSITIVE)
    }

    pub fn fps_total(&self) -> f64 {
        self.frames as f64 / self.total.as_secs_f64().max(f64::MIN_POSITIVE)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "frames = {}", self.frames);
        let _ = writeln!(s, "warmup_frames = {}", self.warmup_frames);
        let _ = writeln!(s, "detection_frames = {}", self.detection_frames());
        let _ = writeln!(s, "foreground_pixels = {}", self.foreground_pixels);
        s.push_str(&self.params.to_config_string());
        s
    }

    pub fn timing_text(&self) -> String {
        format!(
            "processing_seconds = {:.6}\nfps_processing = {:.3}\ntotal_seconds = {:.6}\nfps_total = {:.3}\n",
            self.processing.as_secs_f64(),
            self.fps_processing(),
            self.total.as_secs_f64(),
            self.fps_total()
        )
    }
}

pub const REPORT_FILE: &str = "report.txt";

/// Segment every frame in `input`, writing `bin%06d.pgm` masks and
/// `report.txt` to `output`. Decoding runs on a separate thread one frame
/// ahead of processing.
pub fn run(params: &Params, input: &Path, output: &Path) -> Result<RunReport> {
    let started = Instant::now();
    params.validate()?;
    let seq = read_frame_sequence(input, DEFAULT_FRAME_PATTERN)?;
    if seq.len() < params.min_sequence_len() {
        return Err(Error::TooFewFrames {
            required: params.min_sequence_len(),
            found: seq.len(),
        });
    }
    std::fs::create_dir_all(output).map_err(|e| Error::io(output, e))?;
    let mut engine = Engine::new(params.clone(), seq.width(), seq.height())?;

    let paths: Vec<PathBuf> = seq.paths().to_vec();
    let (tx, rx) = mpsc::sync_channel::<Result<Frame>>(2);
    let reader = {
        let seq = seq.clone();
        std::thread::spawn(move || {
            for f in seq.frames() {
                if tx.send(f).is_err() {
                    break;
                }
            }
        })
    };

    let mut foreground_pixels = 0u64;
    let mut result = Ok(());
    for (k, frame) in rx.iter().enumerate() {
        let step = frame.and_then(|f| engine.push(&f)).and_then(|out| {
            foreground_pixels += out.mask.foreground_count() as u64;
            write_mask(&out.mask, &output.join(mask_file_name(k)))
        });
        if let Err(e) = step {
            result = Err(e);
            break;
        }
    }
    drop(rx);
    reader.join().expect("reader thread panicked");
    result?;
    debug_assert_eq!(engine.frames_seen(), paths.len());

    let report = RunReport {
        frames: engine.frames_seen(),
        warmup_frames: params.warmup_frames(),
        foreground_pixels,
        processing: engine.timings().total(),
        total: started.elapsed(),
        params: params.clone(),
    };
    let report_path = output.join(REPORT_FILE);
    std::fs::write(&report_path, report.to_text()).map_err(|e| Error::io(&report_path, e))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSample {
    pub timings: PhaseTimings,
    /// All frames over all processing time.
    pub fps: f64,
    /// Post-warm-up frames over their filter + detect + update time.
    pub steady_fps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub warmup_frames: usize,
    pub samples: Vec<BenchSample>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

impl BenchReport {
    pub fn median_fps(&self) -> f64 {
        median(self.samples.iter().map(|s| s.fps).collect())
    }

    pub fn median_steady_fps(&self) -> f64 {
        median(self.samples.iter().map(|s| s.steady_fps).collect())
    }

    pub fn to_table(&self) -> String {
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "resolution = {}x{}  frames = {}  warmup = {}",
            self.width, self.height, self.frames, self.warmup_frames
        );
        let _ = writeln!(
            s,
            "{:>6} {:>10} {:>12} {:>11} {:>11} {:>11} {:>11}",
            "rep", "fps", "steady_fps", "filter_ms", "init_ms", "detect_ms", "update_ms"
        );
        for (i, b) in self.samples.iter().enumerate() {
            let _ = writeln!(
                s,
                "{:>6} {:>10.2} {:>12.2} {:>11.2} {:>11.2} {:>11.2} {:>11.2}",
                i + 1,
                b.fps,
                b.steady_fps,
                ms(b.timings.filter),
                ms(b.timings.init),
                ms(b.timings.detect),
                ms(b.timings.update)
            );
        }
        let _ = writeln!(
            s,
            "{:>6} {:>10.2} {:>12.2}",
            "median",
            self.median_fps(),
            self.median_steady_fps()
        );
        s
    }
}

/// Time the full pipeline over in-memory frames, `reps` times from scratch.
pub fn bench_frames(params: &Params, frames: &[Frame], reps: usize) -> Result<BenchReport> {
    params.validate()?;
    if frames.len() < params.min_sequence_len() {
        return Err(Error::TooFewFrames {
            required: params.min_sequence_len(),
            found: frames.len(),
        });
    }
    let (w, h) = (frames[0].width(), frames[0].height());
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps.max(1) {
        let mut engine = Engine::new(params.clone(), w, h)?;
        for f in frames {
            engine.push(f)?;
        }
        let timings = *engine.timings();
        let steady_frames = frames.len() - params.warmup_frames();
        samples.push(BenchSample {
            fps: frames.len() as f64 / timings.total().as_secs_f64().max(f64::MIN_POSITIVE),
            steady_fps: steady_frames as f64 / timings.steady.as_secs_f64().max(f64::MIN_POSITIVE),
            timings,
        });
    }
    Ok(BenchReport {
        width: w,
        height: h,
        frames: frames.len(),
        warmup_frames: params.warmup_frames(),
        samples,
    })
}

/// Load `input` into memory once, then [`bench_frames`].
pub fn bench(params: &Params, input: &Path, reps: usize) -> Result<BenchReport> {
    let frames = read_frame_sequence(input, DEFAULT_FRAME_PATTERN)?.load_all()?;
    bench_frames(params, &frames, reps)
}
