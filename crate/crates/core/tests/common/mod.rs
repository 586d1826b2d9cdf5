#![allow(dead_code)]

use std::path::Path;

use sha2::{Digest, Sha256};

use candid::synth::{BackgroundKind, MovingRect, Region, SceneSpec};
use candid::{Engine, Frame, GroundTruthFrame, MaskFrame, Params};

pub fn params(f_n: usize, n: usize) -> Params {
    Params {
        init_frames: f_n,
        samples: n,
        ..Params::default()
    }
}

/// 64x64 noisy background at 120 with a 12x12 square at 250 travelling
/// horizontally at 1 px/frame and bouncing off the borders.
pub fn moving_square_scene(length: usize, start: usize) -> SceneSpec {
    let mut spec = SceneSpec::new(64, 64, length, BackgroundKind::Noise { value: 120, sigma: 2.0 });
    spec.seed = 7;
    spec.min_contrast = 50.0;
    spec.objects.push(MovingRect {
        intensity: 250,
        width: 12,
        height: 12,
        x: 0,
        y: 26,
        dx: 1,
        dy: 0,
        start,
        bounce: true,
    });
    spec
}

pub const STRIPE_X: usize = 36;
pub const STRIPE_WIDTH: usize = 16;

/// The moving-square scene with a full-height stripe flickering 30/215 every
/// other frame.
pub fn stripe_scene(length: usize, start: usize) -> SceneSpec {
    let mut spec = moving_square_scene(length, start);
    spec.regions.push(Region {
        x: STRIPE_X,
        y: 0,
        width: STRIPE_WIDTH,
        height: 64,
        kind: BackgroundKind::Oscillating { low: 30, high: 215, period: 2 },
    });
    spec
}

pub fn render(spec: &SceneSpec) -> (Vec<Frame>, Vec<GroundTruthFrame>) {
    spec.render().unwrap().unzip()
}

/// Push every frame through a fresh engine and collect the masks.
pub fn segment(params: &Params, frames: &[Frame]) -> Vec<MaskFrame> {
    let (w, h) = (frames[0].width(), frames[0].height());
    let mut engine = Engine::new(params.clone(), w, h).unwrap();
    frames.iter().map(|f| engine.push(f).unwrap().mask).collect()
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Tally {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Tally {
    pub fn fm(&self) -> f64 {
        let (tp, fp, fn_) = (self.tp as f64, self.fp as f64, self.fn_ as f64);
        2.0 * tp / (2.0 * tp + fp + fn_)
    }

    pub fn pwc(&self) -> f64 {
        let total = (self.tp + self.fp + self.tn + self.fn_) as f64;
        100.0 * (self.fp + self.fn_) as f64 / total
    }
}

/// Plain confusion count: 255 is positive; 0 and 50 negative; 85 and 170
/// ignored. `region` restricts scoring to columns `[x0, x1)`.
pub fn tally(masks: &[MaskFrame], truth: &[GroundTruthFrame], skip: usize, region: Option<(usize, usize)>) -> Tally {
    let mut t = Tally::default();
    for (m, g) in masks.iter().zip(truth).skip(skip) {
        let w = m.width();
        for (i, (&label, &gt)) in m.labels().iter().zip(g.labels()).enumerate() {
            if let Some((x0, x1)) = region {
                let x = i % w;
                if x < x0 || x >= x1 {
                    continue;
                }
            }
            let fg = label != 0;
            match (gt, fg) {
                (255, true) => t.tp += 1,
                (255, false) => t.fn_ += 1,
                (0 | 50, true) => t.fp += 1,
                (0 | 50, false) => t.tn += 1,
                _ => {}
            }
        }
    }
    t
}

/// Gather-and-sort median with replicated borders.
pub fn reference_median(frame: &Frame, window: usize) -> Frame {
    let (w, h) = (frame.width(), frame.height());
    let r = (window / 2) as i64;
    Frame::from_fn(w, h, |x, y| {
        let mut v = Vec::with_capacity(window * window);
        for dy in -r..=r {
            for dx in -r..=r {
                let xx = (x as i64 + dx).clamp(0, w as i64 - 1) as usize;
                let yy = (y as i64 + dy).clamp(0, h as i64 - 1) as usize;
                v.push(frame.get(xx, yy));
            }
        }
        v.sort_unstable();
        v[v.len() / 2]
    })
    .unwrap()
}

fn median_of_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Per-pixel outputs computed directly from the definitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelRef {
    pub cd: f64,
    pub r: f64,
    pub t: f64,
    pub foreground: bool,
}

pub fn reference_pixel(intensity: u8, samples: &[u8], r0: f64, p: &Params) -> PixelRef {
    let db: Vec<f64> = samples.iter().map(|&s| (intensity as f64 - s as f64).abs()).collect();
    let mut fs = db.clone();
    fs.sort_by(f64::total_cmp);
    let mp = db.iter().sum::<f64>() / db.len() as f64;
    let half = fs.len() / 2;
    let cd = mp * (median_of_sorted(&fs[..half]) + median_of_sorted(&fs[half..])) / (2.0 * 255.0 * 255.0);
    let r = if cd > p.xi { r0 + p.gamma } else { r0 };
    let t = if cd > p.xi {
        p.t_min
    } else if cd == 0.0 {
        p.t_max
    } else {
        (1.0 / cd).clamp(p.t_min, p.t_max)
    };
    let matches = db.iter().filter(|&&d| d < r).count();
    PixelRef {
        cd,
        r,
        t,
        foreground: matches < p.min_matches,
    }
}

/// SHA-256 over every file in `dir` (sorted by name), name and contents.
pub fn hash_tree(dir: &Path) -> String {
    let mut names: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let mut hasher = Sha256::new();
    for name in names {
        hasher.update(name.to_string_lossy().as_bytes());
        hasher.update([0]);
        hasher.update(std::fs::read(dir.join(&name)).unwrap());
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
