//! Deterministic synthetic sequences with exact ground truth.
//!
//! A scene is a base background, optional rectangular regions with their own
//! background kind, and flat-intensity rectangles moving along straight
//! (optionally bouncing) integer paths. Frame `k` is 0-based here; files are
//! numbered from 1 (`in000001.pgm`, `gt000001.pgm`).
//!
//! Scene files use the `key = value` config syntax with a `scene.` prefix:
//!
//! ```text
//! scene.width = 64
//! scene.height = 64
//! scene.length = 300
//! scene.seed = 7
//! scene.background = noise        # constant | noise | oscillating
//! scene.value = 120
//! scene.sigma = 2
//! scene.region.stripe.x = 8       # regions override the base background
//! scene.region.stripe.width = 12
//! scene.region.stripe.background = oscillating
//! scene.region.stripe.low = 30
//! scene.region.stripe.high = 215
//! scene.region.stripe.period = 2
//! scene.object.car.intensity = 250
//! scene.object.car.width = 12
//! scene.object.car.height = 12
//! scene.object.car.dx = 1
//! scene.object.car.bounce = true
//! ```

use std::path::Path;

use rand_core::SeedableRng;
use rand_distr::{Distribution, Normal};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::config::{self, parse_value, Entry};
use crate::error::{Error, Result};
use crate::frame::{gt, Frame, GroundTruthFrame};
use crate::frame_io::write_pgm;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BackgroundKind {
    Constant(u8),
    /// Gaussian noise around `value`, rounded and clamped to 8 bits.
    Noise { value: u8, sigma: f64 },
    /// `low` for the first half of each period, `high` for the rest.
    Oscillating { low: u8, high: u8, period: usize },
}

impl BackgroundKind {
    pub fn mean(&self) -> f64 {
        match *self {
            BackgroundKind::Constant(v) | BackgroundKind::Noise { value: v, .. } => v as f64,
            BackgroundKind::Oscillating { low, high, period } => {
                let lows = period.div_ceil(2);
                (low as f64 * lows as f64 + high as f64 * (period - lows) as f64) / period as f64
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            BackgroundKind::Noise { sigma, .. } if !(sigma.is_finite() && sigma >= 0.0) => {
                Err(Error::InvalidScene(format!("sigma must be non-negative, got {sigma}")))
            }
            BackgroundKind::Oscillating { period: 0, .. } => {
                Err(Error::InvalidScene("oscillation period must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
    pub kind: BackgroundKind,
}

impl Region {
    fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.width && y >= self.y && y < self.y + self.height
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovingRect {
    pub intensity: u8,
    pub width: usize,
    pub height: usize,
    /// Position (top-left) at `start`.
    pub x: i64,
    pub y: i64,
    /// Pixels per frame.
    pub dx: i64,
    pub dy: i64,
    /// First 0-based frame the object is visible in.
    pub start: usize,
    /// Reflect off the frame edges instead of travelling straight.
    pub bounce: bool,
}

impl MovingRect {
    /// Top-left corner at 0-based frame `k`, or `None` before `start`.
    pub fn position(&self, k: usize, frame_w: usize, frame_h: usize) -> Option<(i64, i64)> {
        if k < self.start {
            return None;
        }
        let t = (k - self.start) as i64;
        let (x, y) = (self.x + self.dx * t, self.y + self.dy * t);
        if !self.bounce {
            return Some((x, y));
        }
        let reflect = |p: i64, span: i64| {
            if span <= 0 {
                return 0;
            }
            let m = p.rem_euclid(2 * span);
            if m > span {
                2 * span - m
            } else {
                m
            }
        };
        Some((
            reflect(x, frame_w as i64 - self.width as i64),
            reflect(y, frame_h as i64 - self.height as i64),
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub length: usize,
    pub background: BackgroundKind,
    /// Later regions take precedence over earlier ones.
    pub regions: Vec<Region>,
    pub objects: Vec<MovingRect>,
    pub seed: u64,
    /// Smallest allowed |object intensity - background mean| for every
    /// background the object overlaps.
    pub min_contrast: f64,
}

impl SceneSpec {
    pub fn new(width: usize, height: usize, length: usize, background: BackgroundKind) -> Self {
        Self {
            width,
            height,
            length,
            background,
            regions: Vec::new(),
            objects: Vec::new(),
            seed: 0,
            min_contrast: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.length == 0 {
            return Err(Error::InvalidScene(format!(
                "dimensions and length must be positive, got {}x{} x {}",
                self.width, self.height, self.length
            )));
        }
        self.background.validate()?;
        for r in &self.regions {
            r.kind.validate()?;
            if r.width == 0 || r.height == 0 || r.x + r.width > self.width || r.y + r.height > self.height {
                return Err(Error::InvalidScene(format!("region {r:?} is empty or out of bounds")));
            }
        }
        for (i, o) in self.objects.iter().enumerate() {
            if o.width == 0 || o.height == 0 || o.width > self.width || o.height > self.height {
                return Err(Error::InvalidScene(format!("object {i} does not fit the frame")));
            }
            let mut backgrounds = vec![self.background.mean()];
            for k in 0..self.length {
                let Some((x, y)) = o.position(k, self.width, self.height) else {
                    continue;
                };
                if x < 0
                    || y < 0
                    || x as usize + o.width > self.width
                    || y as usize + o.height > self.height
                {
                    return Err(Error::InvalidScene(format!(
                        "object {i} leaves the frame at frame {} (position {x},{y})",
                        k + 1
                    )));
                }
                let (x, y) = (x as usize, y as usize);
                for r in &self.regions {
                    let overlaps = x < r.x + r.width && r.x < x + o.width && y < r.y + r.height && r.y < y + o.height;
                    if overlaps {
                        backgrounds.push(r.kind.mean());
                    }
                }
            }
            for b in backgrounds {
                let contrast = (o.intensity as f64 - b).abs();
                if contrast < self.min_contrast {
                    return Err(Error::InvalidScene(format!(
                        "object {i} contrast {contrast} against background mean {b} is below {}",
                        self.min_contrast
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_entries(&config::parse_entries(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_entries(&config::read_entries(path)?)
    }

    pub fn from_entries(entries: &[Entry]) -> Result<Self> {
        let mut top: Vec<(&str, &Entry)> = Vec::new();
        let mut regions: Vec<(String, Vec<(&str, &Entry)>)> = Vec::new();
        let mut objects: Vec<(String, Vec<(&str, &Entry)>)> = Vec::new();
        for e in entries {
            let Some(rest) = e.key.strip_prefix("scene.") else {
                return Err(Error::UnknownKey {
                    line: e.line,
                    key: e.key.clone(),
                });
            };
            let grouped = rest
                .strip_prefix("region.")
                .map(|r| (&mut regions, r))
                .or_else(|| rest.strip_prefix("object.").map(|r| (&mut objects, r)));
            match grouped {
                Some((groups, r)) => {
                    let Some((name, field)) = r.rsplit_once('.') else {
                        return Err(Error::UnknownKey {
                            line: e.line,
                            key: e.key.clone(),
                        });
                    };
                    match groups.iter_mut().find(|(n, _)| n == name) {
                        Some((_, fields)) => fields.push((field, e)),
                        None => groups.push((name.to_string(), vec![(field, e)])),
                    }
                }
                None => top.push((rest, e)),
            }
        }

        fn get<'e>(fields: &[(&str, &'e Entry)], name: &str) -> Option<&'e Entry> {
            fields.iter().find(|(f, _)| *f == name).map(|(_, e)| *e)
        }
        fn required<'e>(fields: &[(&str, &'e Entry)], name: &str, what: &str) -> Result<&'e Entry> {
            get(fields, name).ok_or_else(|| Error::InvalidScene(format!("{what} is missing `{name}`")))
        }
        let num = |fields: &[(&str, &Entry)], name: &str| -> Result<Option<f64>> {
            get(fields, name).map(parse_value::<f64>).transpose()
        };

        let top_fields = ["width", "height", "length", "seed", "min_contrast", "background", "value", "sigma", "low", "high", "period"];
        let region_fields = ["x", "y", "width", "height", "background", "value", "sigma", "low", "high", "period"];
        let object_fields = ["intensity", "width", "height", "x", "y", "dx", "dy", "start", "bounce"];
        let check_fields = |fields: &[(&str, &Entry)], allowed: &[&str]| -> Result<()> {
            for (f, e) in fields {
                if !allowed.contains(f) {
                    return Err(Error::UnknownKey {
                        line: e.line,
                        key: e.key.clone(),
                    });
                }
            }
            Ok(())
        };
        check_fields(&top, &top_fields)?;

        let background_of = |fields: &[(&str, &Entry)], what: &str| -> Result<BackgroundKind> {
            let kind = get(fields, "background").map(|e| e.value.as_str()).unwrap_or("constant");
            let byte = |name: &str| -> Result<u8> { parse_value(required(fields, name, what)?) };
            match kind {
                "constant" => Ok(BackgroundKind::Constant(byte("value")?)),
                "noise" => Ok(BackgroundKind::Noise {
                    value: byte("value")?,
                    sigma: parse_value(required(fields, "sigma", what)?)?,
                }),
                "oscillating" => Ok(BackgroundKind::Oscillating {
                    low: byte("low")?,
                    high: byte("high")?,
                    period: parse_value(required(fields, "period", what)?)?,
                }),
                other => Err(Error::InvalidScene(format!("{what}: unknown background kind `{other}`"))),
            }
        };

        let dim = |name: &str| -> Result<usize> { parse_value(required(&top, name, "scene")?) };
        let mut spec = SceneSpec::new(dim("width")?, dim("height")?, dim("length")?, background_of(&top, "scene")?);
        if let Some(e) = get(&top, "seed") {
            spec.seed = parse_value(e)?;
        }
        spec.min_contrast = num(&top, "min_contrast")?.unwrap_or(0.0);

        for (name, fields) in &regions {
            check_fields(fields, &region_fields)?;
            let what = format!("region `{name}`");
            let field = |f: &str, default: usize| -> Result<usize> {
                get(fields, f).map(parse_value::<usize>).transpose().map(|v| v.unwrap_or(default))
            };
            let x = field("x", 0)?;
            let y = field("y", 0)?;
            spec.regions.push(Region {
                x,
                y,
                width: field("width", spec.width.saturating_sub(x))?,
                height: field("height", spec.height.saturating_sub(y))?,
                kind: background_of(fields, &what)?,
            });
        }
        for (name, fields) in &objects {
            check_fields(fields, &object_fields)?;
            let what = format!("object `{name}`");
            let int = |f: &str| -> Result<i64> {
                get(fields, f).map(parse_value::<i64>).transpose().map(|v| v.unwrap_or(0))
            };
            spec.objects.push(MovingRect {
                intensity: parse_value(required(fields, "intensity", &what)?)?,
                width: parse_value(required(fields, "width", &what)?)?,
                height: parse_value(required(fields, "height", &what)?)?,
                x: int("x")?,
                y: int("y")?,
                dx: int("dx")?,
                dy: int("dy")?,
                start: get(fields, "start").map(parse_value::<usize>).transpose()?.unwrap_or(0),
                bounce: get(fields, "bounce").map(parse_value::<bool>).transpose()?.unwrap_or(false),
            });
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Background kind at a pixel.
    pub fn kind_at(&self, x: usize, y: usize) -> BackgroundKind {
        self.regions
            .iter()
            .rev()
            .find(|r| r.contains(x, y))
            .map(|r| r.kind)
            .unwrap_or(self.background)
    }

    /// Frames in order. Validates the spec first.
    pub fn render(&self) -> Result<Renderer<'_>> {
        self.validate()?;
        let kinds = (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| (x, y)))
            .map(|(x, y)| self.kind_at(x, y))
            .collect();
        Ok(Renderer {
            spec: self,
            kinds,
            rng: Xoshiro256PlusPlus::seed_from_u64(self.seed),
            next: 0,
            clamped: 0,
            noise_samples: 0,
        })
    }

    /// Ground truth of 0-based frame `k`; a pure function of the spec.
    pub fn ground_truth(&self, k: usize) -> GroundTruthFrame {
        let mut labels = vec![gt::STATIC; self.width * self.height];
        for o in &self.objects {
            self.paint(o, k, &mut labels, gt::MOVING);
        }
        GroundTruthFrame::new(self.width, self.height, labels).expect("legal labels")
    }

    fn paint(&self, o: &MovingRect, k: usize, buf: &mut [u8], value: u8) {
        let Some((x, y)) = o.position(k, self.width, self.height) else {
            return;
        };
        let (x, y) = (x as usize, y as usize);
        for yy in y..y + o.height {
            buf[yy * self.width + x..yy * self.width + x + o.width].fill(value);
        }
    }
}

pub struct Renderer<'a> {
    spec: &'a SceneSpec,
    kinds: Vec<BackgroundKind>,
    rng: Xoshiro256PlusPlus,
    next: usize,
    clamped: u64,
    noise_samples: u64,
}

impl Renderer<'_> {
    /// (noise samples drawn, samples that hit 0 or 255 and were clamped)
    pub fn clamp_stats(&self) -> (u64, u64) {
        (self.noise_samples, self.clamped)
    }
}

impl Iterator for Renderer<'_> {
    type Item = (Frame, GroundTruthFrame);

    fn next(&mut self) -> Option<Self::Item> {
        let spec = self.spec;
        if self.next >= spec.length {
            return None;
        }
        let k = self.next;
        self.next += 1;
        let mut data = Vec::with_capacity(spec.width * spec.height);
        for kind in &self.kinds {
            let v = match *kind {
                BackgroundKind::Constant(v) => v,
                BackgroundKind::Noise { value, sigma } => {
                    self.noise_samples += 1;
                    let z: f64 = Normal::new(0.0, sigma.max(0.0))
                        .expect("validated sigma")
                        .sample(&mut self.rng);
                    let raw = (value as f64 + z).round();
                    if !(0.0..=255.0).contains(&raw) {
                        self.clamped += 1;
                    }
                    raw.clamp(0.0, 255.0) as u8
                }
                BackgroundKind::Oscillating { low, high, period } => {
                    if (k % period) * 2 < period {
                        low
                    } else {
                        high
                    }
                }
            };
            data.push(v);
        }
        for o in &spec.objects {
            spec.paint(o, k, &mut data, o.intensity);
        }
        let frame = Frame::new(spec.width, spec.height, data).expect("scene dims");
        Some((frame, spec.ground_truth(k)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthReport {
    pub frames: usize,
    pub noise_samples: u64,
    pub clamped: u64,
}

pub fn frame_file_name(k: usize) -> String {
    format!("in{:06}.pgm", k + 1)
}

pub fn gt_file_name(k: usize) -> String {
    format!("gt{:06}.pgm", k + 1)
}

/// Write `in%06d.pgm` frames to `frames_dir` and `gt%06d.pgm` to `gt_dir`.
pub fn generate(spec: &SceneSpec, frames_dir: &Path, gt_dir: &Path) -> Result<SynthReport> {
    for d in [frames_dir, gt_dir] {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    let mut renderer = spec.render()?;
    let mut k = 0;
    for (frame, truth) in renderer.by_ref() {
        write_pgm(&frames_dir.join(frame_file_name(k)), spec.width, spec.height, frame.data())?;
        write_pgm(&gt_dir.join(gt_file_name(k)), spec.width, spec.height, truth.labels())?;
        k += 1;
    }
    let (noise_samples, clamped) = renderer.clamp_stats();
    Ok(SynthReport {
        frames: k,
        noise_samples,
        clamped,
    })
}
