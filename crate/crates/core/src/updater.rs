//! Background model maintenance.
//!
//! Pixels are visited in raster order. A background pixel fires its update
//! gate with probability `1 / t`. When it fires, one of its own samples is
//! overwritten with the current intensity: the sample nearest the intensity
//! when the recent-history mean is at or above the intensity, the farthest
//! one otherwise. The same rule is then applied to one randomly chosen
//! 8-neighbor, using the neighbor's samples and history. Background pixels
//! push their intensity into their recent history whether or not the gate
//! fired; foreground pixels leave the model alone.
//!
//! # Random stream
//!
//! The generator is xoshiro256++ seeded with `seed_from_u64` (SplitMix64
//! expansion of the 64-bit seed). A unit draw is `(next_u64() >> 11) * 2^-53`.
//! Each gate check consumes one draw. Each diffusion consumes one draw `u`
//! and picks `floor(u * k)` from the `k` in-bounds neighbors listed in the
//! order (-1,-1) (0,-1) (1,-1) (-1,0) (1,0) (-1,1) (0,1) (1,1) as (dx, dy);
//! a pixel with no neighbors consumes nothing.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::Result;
use crate::frame::{Frame, MaskFrame, BACKGROUND};
use crate::model::ModelState;
use crate::params::RECENT_HISTORY_LEN;

/// Replayable random stream driving update gates and neighbor selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateRng {
    inner: Xoshiro256PlusPlus,
}

impl UpdateRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn next_unit(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..k`. `k` must be positive.
    pub fn next_index(&mut self, k: usize) -> usize {
        debug_assert!(k > 0);
        ((self.next_unit() * k as f64) as usize).min(k - 1)
    }
}

/// `mean(history) - intensity`.
pub fn recent_distance(history: &[u8], intensity: u8) -> f64 {
    let mean = history.iter().map(|&v| v as f64).sum::<f64>() / history.len() as f64;
    mean - intensity as f64
}

/// True with probability `1 / t`. Always consumes one draw.
pub fn update_gate(t: f64, rng: &mut UpdateRng) -> bool {
    rng.next_unit() < 1.0 / t
}

/// Lowest index of the smallest (`farthest = false`) or largest distance.
fn select_index(distances: impl Iterator<Item = u8>, farthest: bool) -> usize {
    let mut best = 0;
    let mut best_d: Option<u8> = None;
    for (i, d) in distances.enumerate() {
        let better = match best_d {
            None => true,
            Some(b) => {
                if farthest {
                    d > b
                } else {
                    d < b
                }
            }
        };
        if better {
            best = i;
            best_d = Some(d);
        }
    }
    best
}

/// Overwrite one sample with `intensity`: the one at minimum distance `db`
/// when `rdist >= 0`, at maximum distance when `rdist < 0`. Returns the index
/// overwritten.
pub fn deterministic_replace(samples: &mut [u8], db: &[u8], rdist: f64, intensity: u8) -> usize {
    assert_eq!(samples.len(), db.len());
    let i = select_index(db.iter().copied(), rdist < 0.0);
    samples[i] = intensity;
    i
}

fn replace_against(samples: &mut [u8], history: &[u8], intensity: u8) -> usize {
    let rdist = recent_distance(history, intensity);
    let i = select_index(samples.iter().map(|&s| intensity.abs_diff(s)), rdist < 0.0);
    samples[i] = intensity;
    i
}

/// FIFO push for background pixels; foreground leaves the history unchanged.
pub fn update_recent_history(history: &mut [u8], intensity: u8, label: u8) {
    if label == BACKGROUND {
        history.rotate_left(1);
        *history.last_mut().expect("non-empty history") = intensity;
    }
}

const NEIGHBOR_OFFSETS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// In-bounds 8-neighbors of `(x, y)` in draw order.
pub fn neighbors(width: usize, height: usize, x: usize, y: usize) -> impl Iterator<Item = (usize, usize)> {
    NEIGHBOR_OFFSETS.iter().filter_map(move |&(dx, dy)| {
        let nx = x as isize + dx;
        let ny = y as isize + dy;
        (nx >= 0 && ny >= 0 && (nx as usize) < width && (ny as usize) < height)
            .then_some((nx as usize, ny as usize))
    })
}

/// Propagate `intensity` observed at `(x, y)` into one random neighbor's
/// samples. Returns the neighbor and the sample index written, or `None` for a
/// pixel without neighbors.
pub fn spatial_diffusion(state: &mut ModelState, x: usize, y: usize, intensity: u8) -> Option<((usize, usize), usize)> {
    let (w, h) = (state.width(), state.height());
    let mut candidates = [(0usize, 0usize); 8];
    let mut k = 0;
    for n in neighbors(w, h, x, y) {
        candidates[k] = n;
        k += 1;
    }
    if k == 0 {
        return None;
    }
    let (nx, ny) = candidates[state.rng.next_index(k)];
    let np = ny * w + nx;
    let n = state.sample_count();
    let (bm, rhm) = (&mut state.bm, &state.rhm);
    let history = &rhm[np * RECENT_HISTORY_LEN..(np + 1) * RECENT_HISTORY_LEN];
    let i = replace_against(&mut bm[np * n..(np + 1) * n], history, intensity);
    Some(((nx, ny), i))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateStats {
    pub gates_checked: usize,
    pub gates_fired: usize,
    pub diffusions: usize,
}

/// Run the maintenance phase for a frame already passed through detection.
/// Advances the state's frame index.
pub fn update_frame(frame: &Frame, mask: &MaskFrame, state: &mut ModelState) -> Result<UpdateStats> {
    let (w, h) = (state.width(), state.height());
    frame.same_dims(w, h)?;
    if (mask.width(), mask.height()) != (w, h) {
        return Err(crate::error::Error::DimensionMismatch {
            expected_width: w,
            expected_height: h,
            width: mask.width(),
            height: mask.height(),
        });
    }
    let n = state.sample_count();
    let mut stats = UpdateStats::default();
    let data = frame.data();
    let labels = mask.labels();
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            if labels[p] != BACKGROUND {
                continue;
            }
            let intensity = data[p];
            stats.gates_checked += 1;
            if update_gate(state.t[p], &mut state.rng) {
                stats.gates_fired += 1;
                let (bm, rhm) = (&mut state.bm, &state.rhm);
                replace_against(
                    &mut bm[p * n..(p + 1) * n],
                    &rhm[p * RECENT_HISTORY_LEN..(p + 1) * RECENT_HISTORY_LEN],
                    intensity,
                );
                if spatial_diffusion(state, x, y, intensity).is_some() {
                    stats.diffusions += 1;
                }
            }
            update_recent_history(state.history_at_mut(p), intensity, BACKGROUND);
        }
    }
    state.frame_index += 1;
    Ok(stats)
}
