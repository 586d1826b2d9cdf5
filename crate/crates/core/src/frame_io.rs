//! Frame sequences, masks and ground truth on disk.
//!
//! Binary PGM (`P5`) is the native format and binary PPM (`P6`) is accepted
//! for color input. With the `codecs` feature, PNG and JPEG files decode
//! through the `image` crate. Color is reduced to Rec.601 luma.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::frame::{Frame, GroundTruthFrame, MaskFrame};

/// Rec.601 luma, rounded half up. Exact in integer arithmetic.
#[inline]
pub fn luma601(r: u8, g: u8, b: u8) -> u8 {
    ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
}

/// A decoded single-channel 8-bit image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

struct PnmHeader {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: usize,
    data_offset: usize,
}

fn parse_pnm_header(bytes: &[u8]) -> std::result::Result<PnmHeader, String> {
    if bytes.len() < 2 {
        return Err("file too short".into());
    }
    let magic = [bytes[0], bytes[1]];
    if magic != *b"P5" && magic != *b"P6" {
        return Err(format!(
            "unsupported magic {:?}, expected P5 or P6",
            String::from_utf8_lossy(&magic)
        ));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err("truncated header".into()),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(format!("expected a number at byte {start}"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|e| format!("bad header number: {e}"))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err("missing whitespace after maxval".into()),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(format!("zero dimension {width}x{height}"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(format!("maxval {maxval} unsupported (8-bit only)"));
    }
    Ok(PnmHeader {
        magic,
        width,
        height,
        maxval,
        data_offset: pos,
    })
}

/// Decode a binary PGM or PPM from memory.
pub fn decode_pnm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let h = parse_pnm_header(bytes)?;
    let channels = if h.magic == *b"P6" { 3 } else { 1 };
    let need = h.width * h.height * channels;
    let raw = bytes
        .get(h.data_offset..h.data_offset + need)
        .ok_or_else(|| format!("expected {need} bytes of pixel data"))?;
    let scale = |v: u8| -> u8 {
        if h.maxval == 255 {
            v
        } else {
            (((v as usize).min(h.maxval) * 255 + h.maxval / 2) / h.maxval) as u8
        }
    };
    let data = if channels == 1 {
        raw.iter().map(|&v| scale(v)).collect()
    } else {
        raw.chunks_exact(3)
            .map(|px| luma601(scale(px[0]), scale(px[1]), scale(px[2])))
            .collect()
    };
    Ok(GrayImage {
        width: h.width,
        height: h.height,
        data,
    })
}

fn is_pnm(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()),
        Some(ref e) if e == "pgm" || e == "ppm" || e == "pnm"
    )
}

/// Decode any supported image file to 8-bit grayscale.
pub fn read_gray(path: &Path) -> Result<GrayImage> {
    let decode_err = |message: String| Error::Decode {
        path: path.to_path_buf(),
        message,
    };
    if is_pnm(path) {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        return decode_pnm(&bytes).map_err(decode_err);
    }
    read_with_codecs(path)
}

#[cfg(feature = "codecs")]
fn read_with_codecs(path: &Path) -> Result<GrayImage> {
    let decode_err = |message: String| Error::Decode {
        path: path.to_path_buf(),
        message,
    };
    let img = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| decode_err(e.to_string()))?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let data = match img {
        image::DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| luma601(p[0], p[1], p[2]))
            .collect(),
    };
    Ok(GrayImage {
        width,
        height,
        data,
    })
}

#[cfg(not(feature = "codecs"))]
fn read_with_codecs(path: &Path) -> Result<GrayImage> {
    Err(Error::Decode {
        path: path.to_path_buf(),
        message: "only PGM/PPM supported (built without the `codecs` feature)".into(),
    })
}

/// Width and height without decoding pixel data where the format allows it.
fn read_dims(path: &Path) -> Result<(usize, usize)> {
    if is_pnm(path) {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let h = parse_pnm_header(&bytes).map_err(|message| Error::Decode {
            path: path.to_path_buf(),
            message,
        })?;
        return Ok((h.width, h.height));
    }
    dims_with_codecs(path)
}

#[cfg(feature = "codecs")]
fn dims_with_codecs(path: &Path) -> Result<(usize, usize)> {
    image::image_dimensions(path)
        .map(|(w, h)| (w as usize, h as usize))
        .map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

#[cfg(not(feature = "codecs"))]
fn dims_with_codecs(path: &Path) -> Result<(usize, usize)> {
    read_with_codecs(path).map(|g| (g.width, g.height))
}

pub fn read_frame(path: &Path) -> Result<Frame> {
    let g = read_gray(path)?;
    Frame::new(g.width, g.height, g.data)
}

/// Sorted list of regular files in `dir` whose names match `pattern`.
pub fn list_files(dir: &Path, pattern: &str) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::MissingDirectory(dir.to_path_buf()));
    }
    let matcher = glob::Pattern::new(pattern).map_err(|e| Error::BadPattern {
        pattern: pattern.to_string(),
        message: e.to_string(),
    })?;
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if matcher.matches(name) {
            files.push(path);
        }
    }
    if files.is_empty() {
        return Err(Error::NoFrames {
            dir: dir.to_path_buf(),
            pattern: pattern.to_string(),
        });
    }
    files.sort();
    Ok(files)
}

/// Pattern used when none is given: any image file the reader understands.
pub const DEFAULT_FRAME_PATTERN: &str = "*.[pPjJ][gGpPnN][mMgG]*";

/// An ordered, dimension-checked list of frame files. Frames decode lazily,
/// in filename order.
#[derive(Debug, Clone)]
pub struct FrameSequence {
    paths: Vec<PathBuf>,
    width: usize,
    height: usize,
}

pub fn read_frame_sequence(dir: &Path, pattern: &str) -> Result<FrameSequence> {
    let paths = list_files(dir, pattern)?;
    let (width, height) = read_dims(&paths[0])?;
    for p in &paths[1..] {
        let (w, h) = read_dims(p)?;
        if (w, h) != (width, height) {
            return Err(Error::FrameDimensions {
                path: p.clone(),
                expected_width: width,
                expected_height: height,
                width: w,
                height: h,
            });
        }
    }
    Ok(FrameSequence {
        paths,
        width,
        height,
    })
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// (height, width)
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.paths
    }

    pub fn frames(&self) -> impl Iterator<Item = Result<Frame>> + '_ {
        self.paths.iter().map(move |p| {
            let f = read_frame(p)?;
            if (f.width(), f.height()) != (self.width, self.height) {
                return Err(Error::FrameDimensions {
                    path: p.clone(),
                    expected_width: self.width,
                    expected_height: self.height,
                    width: f.width(),
                    height: f.height(),
                });
            }
            Ok(f)
        })
    }

    pub fn load_all(&self) -> Result<Vec<Frame>> {
        self.frames().collect()
    }
}

/// Write raw 8-bit gray bytes as a binary PGM.
pub fn write_pgm(path: &Path, width: usize, height: usize, data: &[u8]) -> Result<()> {
    assert_eq!(data.len(), width * height);
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write!(w, "P5\n{width} {height}\n255\n")
        .and_then(|_| w.write_all(data))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_frame(frame: &Frame, path: &Path) -> Result<()> {
    write_pgm(path, frame.width(), frame.height(), frame.data())
}

/// Foreground is written as 255, background as 0.
pub fn write_mask(mask: &MaskFrame, path: &Path) -> Result<()> {
    write_pgm(path, mask.width(), mask.height(), &mask.to_bytes())
}

/// Read a mask written by [`write_mask`] (or any 0/255 image).
pub fn read_mask(path: &Path) -> Result<MaskFrame> {
    let g = read_gray(path)?;
    let mut labels = Vec::with_capacity(g.data.len());
    for (index, &v) in g.data.iter().enumerate() {
        match v {
            0 => labels.push(0),
            255 => labels.push(1),
            value => {
                return Err(Error::Decode {
                    path: path.to_path_buf(),
                    message: format!("mask value {value} at pixel index {index} is neither 0 nor 255"),
                })
            }
        }
    }
    MaskFrame::new(g.width, g.height, labels)
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruthFrame> {
    let g = read_gray(path)?;
    GroundTruthFrame::new(g.width, g.height, g.data).map_err(|(index, value)| Error::IllegalLabel {
        path: path.to_path_buf(),
        value,
        index,
    })
}
