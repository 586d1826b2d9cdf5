//! Row-major 8-bit image planes.

use crate::error::{Error, Result};

/// A single grayscale frame. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn same_dims(&self, width: usize, height: usize) -> Result<()> {
        if self.width == width && self.height == height {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected_width: width,
                expected_height: height,
                width: self.width,
                height: self.height,
            })
        }
    }
}

pub const BACKGROUND: u8 = 0;
pub const FOREGROUND: u8 = 1;

/// Binary segmentation result: 0 = background, 1 = foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskFrame {
    width: usize,
    height: usize,
    labels: Vec<u8>,
}

impl MaskFrame {
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        check_dims(width, height, labels.len())?;
        if let Some((index, &value)) = labels.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(Error::IllegalMaskValue { value, index });
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn background(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![BACKGROUND; width * height])
    }

    pub(crate) fn from_labels_unchecked(width: usize, height: usize, labels: Vec<u8>) -> Self {
        debug_assert_eq!(labels.len(), width * height);
        debug_assert!(labels.iter().all(|&v| v <= 1));
        Self {
            width,
            height,
            labels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn foreground_count(&self) -> usize {
        self.labels.iter().filter(|&&v| v == FOREGROUND).count()
    }

    /// Labels scaled to 0/255 bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.labels.iter().map(|&v| v * 255).collect()
    }
}

/// Ground-truth label values.
pub mod gt {
    pub const STATIC: u8 = 0;
    pub const SHADOW: u8 = 50;
    pub const OUTSIDE_ROI: u8 = 85;
    pub const UNKNOWN: u8 = 170;
    pub const MOVING: u8 = 255;

    pub fn is_legal(v: u8) -> bool {
        matches!(v, STATIC | SHADOW | OUTSIDE_ROI | UNKNOWN | MOVING)
    }
}

/// Ground-truth frame with values restricted to {0, 50, 85, 170, 255}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthFrame {
    width: usize,
    height: usize,
    labels: Vec<u8>,
}

impl GroundTruthFrame {
    /// Returns the offending `(index, value)` if any label is illegal.
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> std::result::Result<Self, (usize, u8)> {
        if let Some((i, &v)) = labels.iter().enumerate().find(|(_, &v)| !gt::is_legal(v)) {
            return Err((i, v));
        }
        assert_eq!(labels.len(), width * height, "ground-truth buffer length");
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::EmptyFrame { width, height });
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::BufferLength { width, height, len });
    }
    Ok(())
}
