//! Foreground detection against the background samples.
//!
//! For each pixel the absolute distances to the `n` samples are sorted; the
//! change dynamics score is
//!
//! ```text
//! cd = mean(db) * (median(lower half) + median(upper half)) / (2 * 255^2)
//! ```
//!
//! and lies in `[0, 1]`. Pixels with `cd > xi` get their threshold raised by
//! `gamma` and their update rate forced to the minimum; elsewhere the rate is
//! `1 / cd` clamped into the rate bounds. A pixel is background when at
//! least `min_matches` samples are strictly closer than the threshold.

use rayon::prelude::*;

use crate::error::Result;
use crate::frame::{Frame, MaskFrame, BACKGROUND, FOREGROUND};
use crate::model::ModelState;
use crate::params::{Params, RateBounds, INTENSITY_RANGE};

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceVector {
    /// `|I - s_i|` in sample order.
    pub db: Vec<u8>,
    /// `db` sorted ascending.
    pub fs: Vec<u8>,
    /// Mean of `db`.
    pub mp: f64,
}

impl DistanceVector {
    pub fn len(&self) -> usize {
        self.db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.db.is_empty()
    }
}

pub fn pixel_distances(intensity: u8, samples: &[u8]) -> DistanceVector {
    let db: Vec<u8> = samples.iter().map(|&s| intensity.abs_diff(s)).collect();
    let mut fs = db.clone();
    fs.sort_unstable();
    let mp = mean_u8(&db);
    DistanceVector { db, fs, mp }
}

#[inline]
fn mean_u8(v: &[u8]) -> f64 {
    v.iter().map(|&d| d as u32).sum::<u32>() as f64 / v.len() as f64
}

/// Median of an ascending slice; mean of the middle pair for even lengths.
#[inline]
fn sorted_median(sorted: &[u8]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0
    }
}

#[inline]
fn cd_from_sorted(sorted: &[u8], mp: f64) -> f64 {
    let half = sorted.len() / 2;
    let spread = sorted_median(&sorted[..half]) + sorted_median(&sorted[half..]);
    mp * spread / (2.0 * INTENSITY_RANGE * INTENSITY_RANGE)
}

pub fn change_dynamics(dv: &DistanceVector) -> f64 {
    assert!(
        !dv.fs.is_empty() && dv.fs.len().is_multiple_of(2),
        "change dynamics need an even, non-zero sample count"
    );
    cd_from_sorted(&dv.fs, dv.mp)
}

/// The threshold is always derived from `r0`; it never accumulates.
#[inline]
pub fn adapt_threshold(r0: f64, cd: f64, gamma: f64, xi: f64) -> f64 {
    if cd > xi {
        r0 + gamma
    } else {
        r0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    /// [`FOREGROUND`] or [`BACKGROUND`].
    pub label: u8,
    /// Number of samples with distance strictly below the threshold.
    pub matches: usize,
}

#[inline]
pub fn classify_pixel(db: &[u8], r: f64, min_matches: usize) -> Classification {
    let matches = db.iter().filter(|&&d| (d as f64) < r).count();
    let label = if matches < min_matches {
        FOREGROUND
    } else {
        BACKGROUND
    };
    Classification { label, matches }
}

/// `cd = 0` maps to the upper bound, the limit of `1 / cd`.
#[inline]
pub fn adapt_update_rate(cd: f64, xi: f64, bounds: RateBounds) -> f64 {
    if cd > xi {
        bounds.low
    } else if cd <= 0.0 {
        bounds.high
    } else {
        bounds.clamp(1.0 / cd)
    }
}

/// Output of [`detect_frame`].
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub mask: MaskFrame,
    /// Change dynamics of every pixel, row-major.
    pub change_dynamics: Vec<f64>,
}

/// How the detection phase is scheduled. Both give bit-identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    /// Split rows across the rayon thread pool.
    #[default]
    Rows,
}

struct Kernel {
    gamma: f64,
    xi: f64,
    min_matches: usize,
    bounds: RateBounds,
    samples: usize,
}

impl Kernel {
    fn new(params: &Params) -> Self {
        Self {
            gamma: params.gamma,
            xi: params.xi,
            min_matches: params.min_matches,
            bounds: params.t_bounds(),
            samples: params.samples,
        }
    }

    /// Processes a contiguous run of pixels. `scratch` holds `samples` bytes.
    #[allow(clippy::too_many_arguments)]
    fn run(
        &self,
        pixels: &[u8],
        bm: &[u8],
        r0: &[f64],
        labels: &mut [u8],
        cd_out: &mut [f64],
        r_out: &mut [f64],
        t_out: &mut [f64],
        scratch: &mut [u8],
    ) {
        let n = self.samples;
        for (p, &intensity) in pixels.iter().enumerate() {
            let samples = &bm[p * n..(p + 1) * n];
            let mut sum = 0u32;
            for (d, &s) in scratch.iter_mut().zip(samples) {
                *d = intensity.abs_diff(s);
                sum += *d as u32;
            }
            let mp = sum as f64 / n as f64;
            let r = {
                scratch.sort_unstable();
                let cd = cd_from_sorted(scratch, mp);
                cd_out[p] = cd;
                t_out[p] = adapt_update_rate(cd, self.xi, self.bounds);
                adapt_threshold(r0[p], cd, self.gamma, self.xi)
            };
            r_out[p] = r;
            // the count of distances below r does not depend on their order
            labels[p] = classify_pixel(scratch, r, self.min_matches).label;
        }
    }
}

/// Classify every pixel of a filtered frame and refresh the threshold and
/// update-rate planes. Samples and history are not touched.
pub fn detect_frame(frame: &Frame, state: &mut ModelState, params: &Params) -> Result<Detection> {
    detect_frame_with(frame, state, params, Parallelism::default())
}

pub fn detect_frame_with(
    frame: &Frame,
    state: &mut ModelState,
    params: &Params,
    parallelism: Parallelism,
) -> Result<Detection> {
    frame.same_dims(state.width(), state.height())?;
    assert_eq!(params.samples, state.sample_count(), "params do not match state");
    let kernel = Kernel::new(params);
    let (w, h) = (frame.width(), frame.height());
    let n = params.samples;
    let mut labels = vec![0u8; w * h];
    let mut cd = vec![0f64; w * h];
    let bm = &state.bm;
    let r0 = &state.planes.r0;

    match parallelism {
        Parallelism::Sequential => {
            let mut scratch = vec![0u8; n];
            kernel.run(
                frame.data(),
                bm,
                r0,
                &mut labels,
                &mut cd,
                &mut state.r,
                &mut state.t,
                &mut scratch,
            );
        }
        Parallelism::Rows => {
            let chunk = w * (64 * 1024 / (w * n.max(1))).clamp(1, h);
            labels
                .par_chunks_mut(chunk)
                .zip(cd.par_chunks_mut(chunk))
                .zip(state.r.par_chunks_mut(chunk))
                .zip(state.t.par_chunks_mut(chunk))
                .enumerate()
                .for_each_init(
                    || vec![0u8; n],
                    |scratch, (i, (((labels, cd), r), t))| {
                        let start = i * chunk;
                        let end = start + labels.len();
                        kernel.run(
                            &frame.data()[start..end],
                            &bm[start * n..end * n],
                            &r0[start..end],
                            labels,
                            cd,
                            r,
                            t,
                            scratch,
                        );
                    },
                );
        }
    }

    Ok(Detection {
        mask: MaskFrame::from_labels_unchecked(w, h, labels),
        change_dynamics: cd,
    })
}
