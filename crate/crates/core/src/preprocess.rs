//! Square median filter with edge replication.

use rayon::prelude::*;

use crate::frame::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MedianFilterSpec {
    /// Odd window side. 1 is the identity.
    pub window: usize,
}

impl MedianFilterSpec {
    pub fn new(window: usize) -> Option<Self> {
        (window % 2 == 1).then_some(Self { window })
    }
}

impl Default for MedianFilterSpec {
    fn default() -> Self {
        Self { window: 7 }
    }
}

/// Median of each `window`×`window` neighborhood, computed with a sliding
/// 256-bin histogram per row. Out-of-frame samples replicate the nearest edge.
pub fn median_filter(frame: &Frame, spec: MedianFilterSpec) -> Frame {
    assert!(spec.window % 2 == 1, "median window must be odd");
    if spec.window == 1 {
        return frame.clone();
    }
    let (w, h) = (frame.width(), frame.height());
    let mut out = vec![0u8; w * h];
    out.par_chunks_mut(w)
        .enumerate()
        .for_each(|(y, row)| filter_row(frame, spec.window / 2, y, row));
    Frame::new(w, h, out).expect("dimensions preserved")
}

fn filter_row(frame: &Frame, radius: usize, y: usize, out: &mut [u8]) {
    let (w, h) = (frame.width() as isize, frame.height() as isize);
    let r = radius as isize;
    let clamp_x = |x: isize| x.clamp(0, w - 1) as usize;
    let rows: Vec<&[u8]> = (y as isize - r..=y as isize + r)
        .map(|yy| frame.row(yy.clamp(0, h - 1) as usize))
        .collect();
    let side = 2 * radius + 1;
    let rank = (side * side / 2) as u32;

    let mut hist = [0u32; 256];
    for dx in -r..=r {
        let cx = clamp_x(dx);
        for row in &rows {
            hist[row[cx] as usize] += 1;
        }
    }
    // `below` counts window values strictly less than `med`.
    let mut med = 0usize;
    let mut below = 0u32;
    while below + hist[med] <= rank {
        below += hist[med];
        med += 1;
    }
    out[0] = med as u8;

    for x in 1..w {
        let gone = clamp_x(x - 1 - r);
        let added = clamp_x(x + r);
        if gone != added {
            for row in &rows {
                let v = row[gone] as usize;
                hist[v] -= 1;
                if v < med {
                    below -= 1;
                }
                let v = row[added] as usize;
                hist[v] += 1;
                if v < med {
                    below += 1;
                }
            }
            while below > rank {
                med -= 1;
                below -= hist[med];
            }
            while below + hist[med] <= rank {
                below += hist[med];
                med += 1;
            }
        }
        out[x as usize] = med as u8;
    }
}
