//! Per-pixel model state and its initialization from the leading frames.
//!
//! The first `f_n` frames estimate the mean temporal gradient (mTG), which
//! seeds the initial threshold `r0 = mtg + alpha` and update rate
//! `t0 = beta / (1 + mtg)^2`. The next `n` frames are copied verbatim into the
//! background samples, and the last five initialization frames seed the recent
//! history.
//!
//! Samples and history are stored pixel-interleaved: pixel `p` owns
//! `bm[p * n .. (p + 1) * n]` and `rhm[p * 5 .. (p + 1) * 5]`, the latter
//! ordered oldest first.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::params::{Params, RateBounds, RECENT_HISTORY_LEN};
use crate::updater::UpdateRng;

/// Add `|curr - prev|` into `acc` for every pixel.
pub fn accumulate_mtg(prev: &Frame, curr: &Frame, acc: &mut [f64]) -> Result<()> {
    curr.same_dims(prev.width(), prev.height())?;
    if acc.len() != curr.len() {
        return Err(Error::BufferLength {
            width: curr.width(),
            height: curr.height(),
            len: acc.len(),
        });
    }
    for ((a, &p), &c) in acc.iter_mut().zip(prev.data()).zip(curr.data()) {
        *a += p.abs_diff(c) as f64;
    }
    Ok(())
}

/// Divide the accumulated gradients of `init_frames` frames by the number of
/// frame differences.
pub fn finalize_mtg(acc: &[f64], init_frames: usize) -> Result<Vec<f64>> {
    if init_frames < 2 {
        return Err(Error::InvalidParam {
            name: "f_n",
            message: format!("mean temporal gradient needs at least 2 frames, got {init_frames}"),
        });
    }
    let d = (init_frames - 1) as f64;
    Ok(acc.iter().map(|&a| a / d).collect())
}

pub fn init_threshold_plane(mtg: &[f64], alpha: f64) -> Vec<f64> {
    mtg.iter().map(|&m| m + alpha).collect()
}

pub fn init_update_rate_plane(mtg: &[f64], beta: f64, bounds: RateBounds) -> Vec<f64> {
    mtg.iter()
        .map(|&m| bounds.clamp(beta / ((1.0 + m) * (1.0 + m))))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamPlanes {
    pub mtg: Vec<f64>,
    pub r0: Vec<f64>,
    pub t0: Vec<f64>,
}

impl ParamPlanes {
    pub fn from_mtg(mtg: Vec<f64>, params: &Params) -> Self {
        let r0 = init_threshold_plane(&mtg, params.alpha);
        let t0 = init_update_rate_plane(&mtg, params.beta, params.t_bounds());
        Self { mtg, r0, t0 }
    }
}

/// All mutable per-pixel state of the segmenter.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    width: usize,
    height: usize,
    samples: usize,
    pub(crate) bm: Vec<u8>,
    pub(crate) rhm: Vec<u8>,
    pub(crate) planes: ParamPlanes,
    pub(crate) r: Vec<f64>,
    pub(crate) t: Vec<f64>,
    /// Number of frames consumed so far, i.e. the 1-based index of the last frame.
    pub(crate) frame_index: usize,
    pub(crate) rng: UpdateRng,
}

impl ModelState {
    /// A state with zeroed samples and history, thresholds at `r0` and rates
    /// at `t0`.
    pub fn new(width: usize, height: usize, params: &Params, planes: ParamPlanes) -> Result<Self> {
        let pixels = width * height;
        for plane in [&planes.mtg, &planes.r0, &planes.t0] {
            if plane.len() != pixels {
                return Err(Error::BufferLength {
                    width,
                    height,
                    len: plane.len(),
                });
            }
        }
        Ok(Self {
            width,
            height,
            samples: params.samples,
            bm: vec![0; pixels * params.samples],
            rhm: vec![0; pixels * RECENT_HISTORY_LEN],
            r: planes.r0.clone(),
            t: planes.t0.clone(),
            planes,
            frame_index: 0,
            rng: UpdateRng::new(params.seed),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn sample_count(&self) -> usize {
        self.samples
    }

    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    pub fn planes(&self) -> &ParamPlanes {
        &self.planes
    }

    /// Current distance thresholds.
    pub fn thresholds(&self) -> &[f64] {
        &self.r
    }

    /// Current update rates.
    pub fn update_rates(&self) -> &[f64] {
        &self.t
    }

    pub fn rng(&self) -> &UpdateRng {
        &self.rng
    }

    #[inline]
    pub fn samples_at(&self, pixel: usize) -> &[u8] {
        &self.bm[pixel * self.samples..(pixel + 1) * self.samples]
    }

    #[inline]
    pub fn history_at(&self, pixel: usize) -> &[u8] {
        &self.rhm[pixel * RECENT_HISTORY_LEN..(pixel + 1) * RECENT_HISTORY_LEN]
    }

    /// Sample `i` of every pixel, as a row-major plane.
    pub fn sample_plane(&self, i: usize) -> Vec<u8> {
        assert!(i < self.samples);
        self.bm.iter().skip(i).step_by(self.samples).copied().collect()
    }

    /// History slot `j` (0 = oldest) of every pixel.
    pub fn history_plane(&self, j: usize) -> Vec<u8> {
        assert!(j < RECENT_HISTORY_LEN);
        self.rhm.iter().skip(j).step_by(RECENT_HISTORY_LEN).copied().collect()
    }

    fn set_sample_plane(&mut self, i: usize, frame: &Frame) {
        for (p, &v) in frame.data().iter().enumerate() {
            self.bm[p * self.samples + i] = v;
        }
    }

    /// Overwrite sample or history content directly; for building fixtures.
    pub fn samples_at_mut(&mut self, pixel: usize) -> &mut [u8] {
        &mut self.bm[pixel * self.samples..(pixel + 1) * self.samples]
    }

    pub fn history_at_mut(&mut self, pixel: usize) -> &mut [u8] {
        &mut self.rhm[pixel * RECENT_HISTORY_LEN..(pixel + 1) * RECENT_HISTORY_LEN]
    }
}

/// Copy `frames` into the background samples, frame `i` into sample `i`.
pub fn fill_background_model(frames: &[&Frame], state: &mut ModelState) -> Result<()> {
    if frames.len() != state.samples {
        return Err(Error::InsufficientInitFrames {
            required: state.samples,
            found: frames.len(),
        });
    }
    for (i, f) in frames.iter().enumerate() {
        f.same_dims(state.width, state.height)?;
        state.set_sample_plane(i, f);
    }
    Ok(())
}

/// Seed the recent history from the last initialization frames, oldest first.
pub fn init_recent_history(frames: &[&Frame], state: &mut ModelState) -> Result<()> {
    if frames.len() != RECENT_HISTORY_LEN {
        return Err(Error::InsufficientInitFrames {
            required: RECENT_HISTORY_LEN,
            found: frames.len(),
        });
    }
    for (j, f) in frames.iter().enumerate() {
        f.same_dims(state.width, state.height)?;
        for (p, &v) in f.data().iter().enumerate() {
            state.rhm[p * RECENT_HISTORY_LEN + j] = v;
        }
    }
    Ok(())
}

/// Streams the warm-up frames into a [`ModelState`]. Only the previous frame and
/// the last five frames are kept resident besides the state itself.
#[derive(Debug)]
pub struct Initializer {
    params: Params,
    width: usize,
    height: usize,
    seen: usize,
    prev: Option<Frame>,
    acc: Vec<f64>,
    state: Option<ModelState>,
    recent: VecDeque<Frame>,
}

impl Initializer {
    pub fn new(params: Params, width: usize, height: usize) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            acc: vec![0.0; width * height],
            params,
            width,
            height,
            seen: 0,
            prev: None,
            state: None,
            recent: VecDeque::with_capacity(RECENT_HISTORY_LEN + 1),
        })
    }

    pub fn frames_seen(&self) -> usize {
        self.seen
    }

    pub fn is_complete(&self) -> bool {
        self.seen == self.params.warmup_frames()
    }

    /// Feed the next (already filtered) frame.
    pub fn push(&mut self, frame: &Frame) -> Result<()> {
        assert!(!self.is_complete(), "initializer already complete");
        frame.same_dims(self.width, self.height)?;
        self.seen += 1;
        let k = self.seen;
        let f_n = self.params.init_frames;

        if k <= f_n {
            if let Some(prev) = &self.prev {
                accumulate_mtg(prev, frame, &mut self.acc)?;
            }
            self.prev = if k < f_n { Some(frame.clone()) } else { None };
            if k == f_n {
                let mtg = finalize_mtg(&self.acc, f_n)?;
                self.acc = Vec::new();
                let planes = ParamPlanes::from_mtg(mtg, &self.params);
                self.state = Some(ModelState::new(self.width, self.height, &self.params, planes)?);
            }
        } else {
            let state = self.state.as_mut().expect("state exists after f_n frames");
            state.set_sample_plane(k - f_n - 1, frame);
        }

        if self.recent.len() == RECENT_HISTORY_LEN {
            self.recent.pop_front();
        }
        self.recent.push_back(frame.clone());

        if self.is_complete() {
            let recent: Vec<&Frame> = self.recent.iter().collect();
            let state = self.state.as_mut().expect("state exists");
            init_recent_history(&recent, state)?;
            state.frame_index = k;
            self.recent.clear();
        }
        Ok(())
    }

    pub fn finish(self) -> Result<ModelState> {
        if !self.is_complete() {
            return Err(Error::InsufficientInitFrames {
                required: self.params.warmup_frames(),
                found: self.seen,
            });
        }
        Ok(self.state.expect("complete initializer has a state"))
    }
}
