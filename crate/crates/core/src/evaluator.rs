//! Scoring masks against ground truth.
//!
//! Ground-truth value 255 is a positive, 0 and 50 (shadow) are negatives,
//! 85 (outside the region of interest) and 170 (unknown) are not scored.

use std::io::Write;
use std::ops::AddAssign;
use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::{gt, GroundTruthFrame, MaskFrame, FOREGROUND};
use crate::frame_io::{list_files, read_ground_truth, read_mask, DEFAULT_FRAME_PATTERN};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.tn += o.tn;
        self.fn_ += o.fn_;
    }
}

pub fn accumulate(mask: &MaskFrame, truth: &GroundTruthFrame, counts: &mut ConfusionCounts) -> Result<()> {
    if (mask.width(), mask.height()) != (truth.width(), truth.height()) {
        return Err(Error::DimensionMismatch {
            expected_width: truth.width(),
            expected_height: truth.height(),
            width: mask.width(),
            height: mask.height(),
        });
    }
    for (&m, &g) in mask.labels().iter().zip(truth.labels()) {
        let predicted = m == FOREGROUND;
        match g {
            gt::MOVING => {
                if predicted {
                    counts.tp += 1
                } else {
                    counts.fn_ += 1
                }
            }
            gt::STATIC | gt::SHADOW => {
                if predicted {
                    counts.fp += 1
                } else {
                    counts.tn += 1
                }
            }
            _ => {}
        }
    }
    Ok(())
}

/// Which ratios were 0/0 and reported as 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Degenerate {
    pub pr: bool,
    pub re: bool,
    pub fm: bool,
    pub sp: bool,
}

impl Degenerate {
    pub fn any(&self) -> bool {
        self.pr || self.re || self.fm || self.sp
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub pr: f64,
    pub re: f64,
    pub fm: f64,
    pub sp: f64,
    /// Percentage of wrong classifications, in [0, 100].
    pub pwc: f64,
    pub degenerate: Degenerate,
}

fn ratio(num: f64, den: f64, flag: &mut bool) -> f64 {
    if den == 0.0 {
        *flag = true;
        0.0
    } else {
        num / den
    }
}

pub fn compute_metrics(c: &ConfusionCounts) -> Result<Metrics> {
    let total = c.total();
    if total == 0 {
        return Err(Error::NothingScored);
    }
    let (tp, fp, tn, fn_) = (c.tp as f64, c.fp as f64, c.tn as f64, c.fn_ as f64);
    let mut d = Degenerate::default();
    let pr = ratio(tp, tp + fp, &mut d.pr);
    let re = ratio(tp, tp + fn_, &mut d.re);
    let fm = ratio(2.0 * pr * re, pr + re, &mut d.fm);
    let sp = ratio(tn, tn + fp, &mut d.sp);
    let pwc = 100.0 * (fp + fn_) / total as f64;
    Ok(Metrics {
        pr,
        re,
        fm,
        sp,
        pwc,
        degenerate: d,
    })
}

/// Unweighted mean of per-sequence metrics.
pub fn aggregate(rows: &[Metrics]) -> Option<Metrics> {
    if rows.is_empty() {
        return None;
    }
    let n = rows.len() as f64;
    let mean = |f: fn(&Metrics) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let mut degenerate = Degenerate::default();
    for r in rows {
        degenerate.pr |= r.degenerate.pr;
        degenerate.re |= r.degenerate.re;
        degenerate.fm |= r.degenerate.fm;
        degenerate.sp |= r.degenerate.sp;
    }
    Some(Metrics {
        pr: mean(|m| m.pr),
        re: mean(|m| m.re),
        fm: mean(|m| m.fm),
        sp: mean(|m| m.sp),
        pwc: mean(|m| m.pwc),
        degenerate,
    })
}

/// Which frames of a sequence are scored. Frame numbers are 1-based.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalOptions {
    /// Leading frames to exclude (typically the warm-up count).
    pub skip: usize,
    /// Last frame to score, inclusive; `None` scores to the end.
    pub last: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceReport {
    pub frames_scored: usize,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

/// Pair masks and ground truth by sorted filename and score the selected frames.
pub fn evaluate_sequence(mask_dir: &Path, gt_dir: &Path, opts: EvalOptions) -> Result<SequenceReport> {
    let masks = list_files(mask_dir, DEFAULT_FRAME_PATTERN)?;
    let truths = list_files(gt_dir, DEFAULT_FRAME_PATTERN)?;
    if masks.len() != truths.len() {
        return Err(Error::FrameCountMismatch {
            masks: masks.len(),
            ground_truth: truths.len(),
        });
    }
    let last = opts.last.unwrap_or(masks.len()).min(masks.len());
    let mut counts = ConfusionCounts::default();
    let mut frames_scored = 0;
    for (m, g) in masks.iter().zip(&truths).take(last).skip(opts.skip) {
        let mask = read_mask(m)?;
        let truth = read_ground_truth(g)?;
        accumulate(&mask, &truth, &mut counts).map_err(|e| match e {
            Error::DimensionMismatch {
                expected_width,
                expected_height,
                width,
                height,
            } => Error::FrameDimensions {
                path: m.clone(),
                expected_width,
                expected_height,
                width,
                height,
            },
            other => other,
        })?;
        frames_scored += 1;
    }
    let metrics = compute_metrics(&counts)?;
    Ok(SequenceReport {
        frames_scored,
        counts,
        metrics,
    })
}

pub const CSV_HEADER: &str = "sequence,pr,re,fm,sp,pwc";
pub const AVERAGE_ROW: &str = "__avg__";

pub fn csv_row(name: &str, m: &Metrics) -> String {
    format!(
        "{name},{:.4},{:.4},{:.4},{:.4},{:.4}",
        m.pr, m.re, m.fm, m.sp, m.pwc
    )
}

/// Header, one row per sequence, then the unweighted average row.
pub fn write_csv<W: Write>(out: &mut W, rows: &[(String, Metrics)]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for (name, m) in rows {
        writeln!(out, "{}", csv_row(name, m))?;
    }
    let metrics: Vec<Metrics> = rows.iter().map(|(_, m)| *m).collect();
    if let Some(avg) = aggregate(&metrics) {
        writeln!(out, "{}", csv_row(AVERAGE_ROW, &avg))?;
    }
    Ok(())
}
