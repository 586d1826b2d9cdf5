//! Tunable constants of the segmenter.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::{self, parse_value, Entry};
use crate::error::{Error, Result};

/// Dynamic range of 8-bit intensities, used to normalize change dynamics.
pub const INTENSITY_RANGE: f64 = 255.0;

/// Length of the per-pixel recent history.
pub const RECENT_HISTORY_LEN: usize = 5;

/// Closed interval an update rate is clamped into.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBounds {
    pub low: f64,
    pub high: f64,
}

impl RateBounds {
    pub fn clamp(&self, t: f64) -> f64 {
        t.clamp(self.low, self.high)
    }

    pub fn contains(&self, t: f64) -> bool {
        (self.low..=self.high).contains(&t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// Number of leading frames used to estimate the mean temporal gradient.
    pub init_frames: usize,
    /// Offset added to the mean temporal gradient to form the initial threshold.
    pub alpha: f64,
    /// Scale of the initial update rate.
    pub beta: f64,
    /// Background samples per pixel. Must be even.
    pub samples: usize,
    /// Threshold boost applied where change dynamics exceed `xi`.
    pub gamma: f64,
    /// Change-dynamics level separating dynamic from stable pixels.
    pub xi: f64,
    /// Matching samples required to call a pixel background.
    pub min_matches: usize,
    pub t_min: f64,
    pub t_max: f64,
    /// Side of the square median window applied to every input frame.
    pub median_window: usize,
    pub seed: u64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            init_frames: 300,
            alpha: 10.0,
            beta: 50.0,
            samples: 30,
            gamma: 10.0,
            xi: 0.1,
            min_matches: 2,
            t_min: 2.0,
            t_max: 300.0,
            median_window: 7,
            seed: 0,
        }
    }
}

impl Params {
    pub const KEYS: [&'static str; 11] = [
        "f_n",
        "alpha",
        "beta",
        "n",
        "gamma",
        "xi",
        "min_matches",
        "median_window",
        "t_min",
        "t_max",
        "seed",
    ];

    pub fn rhm_len(&self) -> usize {
        RECENT_HISTORY_LEN
    }

    /// Number of frames consumed before detection starts.
    pub fn warmup_frames(&self) -> usize {
        self.init_frames + self.samples
    }

    /// Smallest sequence that yields at least one detection frame.
    pub fn min_sequence_len(&self) -> usize {
        self.warmup_frames() + 1
    }

    pub fn t_bounds(&self) -> RateBounds {
        RateBounds {
            low: self.t_min,
            high: self.t_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(name: &'static str, message: impl Into<String>) -> Result<()> {
            Err(Error::InvalidParam {
                name,
                message: message.into(),
            })
        }
        if self.init_frames < 2 {
            return bad("f_n", format!("must be at least 2, got {}", self.init_frames));
        }
        if self.samples == 0 || !self.samples.is_multiple_of(2) {
            return bad("n", format!("must be a positive even integer, got {}", self.samples));
        }
        if self.warmup_frames() < RECENT_HISTORY_LEN {
            return bad(
                "n",
                format!("f_n + n must cover the {RECENT_HISTORY_LEN}-frame recent history"),
            );
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad("alpha", format!("must be a non-negative number, got {}", self.alpha));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return bad("beta", format!("must be positive, got {}", self.beta));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad("gamma", format!("must be a non-negative number, got {}", self.gamma));
        }
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return bad("xi", format!("must lie in (0, 1), got {}", self.xi));
        }
        if self.min_matches == 0 || self.min_matches > self.samples {
            return bad(
                "min_matches",
                format!("must lie in [1, n = {}], got {}", self.samples, self.min_matches),
            );
        }
        if !(self.t_min.is_finite() && self.t_min >= 1.0) {
            return bad("t_min", format!("must be at least 1, got {}", self.t_min));
        }
        if !(self.t_max.is_finite() && self.t_max >= self.t_min) {
            return bad("t_max", format!("must be finite and >= t_min, got {}", self.t_max));
        }
        if self.median_window == 0 || self.median_window.is_multiple_of(2) {
            return bad(
                "median_window",
                format!("must be a positive odd integer, got {}", self.median_window),
            );
        }
        Ok(())
    }

    /// Apply `key = value` entries over the defaults. Keys not present keep
    /// their default value; unknown keys are errors.
    pub fn from_entries(entries: &[Entry]) -> Result<Self> {
        let mut p = Params::default();
        for e in entries {
            match e.key.as_str() {
                "f_n" => p.init_frames = parse_value(e)?,
                "alpha" => p.alpha = parse_value(e)?,
                "beta" => p.beta = parse_value(e)?,
                "n" => p.samples = parse_value(e)?,
                "gamma" => p.gamma = parse_value(e)?,
                "xi" => p.xi = parse_value(e)?,
                "min_matches" => p.min_matches = parse_value(e)?,
                "median_window" => p.median_window = parse_value(e)?,
                "t_min" => p.t_min = parse_value(e)?,
                "t_max" => p.t_max = parse_value(e)?,
                "seed" => p.seed = parse_value(e)?,
                _ => {
                    return Err(Error::UnknownKey {
                        line: e.line,
                        key: e.key.clone(),
                    })
                }
            }
        }
        p.validate()?;
        Ok(p)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_entries(&config::parse_entries(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_entries(&config::read_entries(path)?)
    }

    /// Every resolved parameter as `key = value` lines, in [`Params::KEYS`] order.
    /// Parsing the output yields the same parameters.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "f_n = {}", self.init_frames);
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "beta = {}", self.beta);
        let _ = writeln!(s, "n = {}", self.samples);
        let _ = writeln!(s, "gamma = {}", self.gamma);
        let _ = writeln!(s, "xi = {}", self.xi);
        let _ = writeln!(s, "min_matches = {}", self.min_matches);
        let _ = writeln!(s, "median_window = {}", self.median_window);
        let _ = writeln!(s, "t_min = {}", self.t_min);
        let _ = writeln!(s, "t_max = {}", self.t_max);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }
}
