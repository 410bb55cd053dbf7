//! Reversible integer 5/3 lifting wavelet with symmetric extension.

use crate::error::{Error, Result};
use crate::frame::{BitDepth, Frame};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubbandKind {
    LL,
    /// Horizontal high-pass, vertical low-pass.
    HL,
    /// Horizontal low-pass, vertical high-pass.
    LH,
    HH,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subband {
    pub kind: SubbandKind,
    /// Decomposition level, 1 = finest.
    pub level: u8,
    pub width: usize,
    pub height: usize,
    pub data: Vec<i32>,
}

/// All subbands of a decomposition ordered coarse-to-fine:
/// `LL_L, HL_L, LH_L, HH_L, HL_{L-1}, …, HH_1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubbandGrid {
    pub width: usize,
    pub height: usize,
    pub levels: u8,
    pub bands: Vec<Subband>,
}

impl SubbandGrid {
    pub fn coefficient_count(&self) -> usize {
        self.bands.iter().map(|b| b.data.len()).sum()
    }
}

/// Checks that every level still has at least two samples per axis.
pub fn check_levels(width: usize, height: usize, levels: u8) -> Result<()> {
    let need = 1usize.checked_shl(levels as u32).unwrap_or(usize::MAX);
    if levels == 0 || width < need || height < need {
        return Err(Error::FrameTooSmall {
            width,
            height,
            levels,
        });
    }
    Ok(())
}

/// Dimensions of the low-pass image after each level, starting with the input.
pub(crate) fn level_dims(width: usize, height: usize, levels: u8) -> Vec<(usize, usize)> {
    let mut dims = vec![(width, height)];
    for _ in 0..levels {
        let (w, h) = *dims.last().unwrap();
        dims.push((w.div_ceil(2), h.div_ceil(2)));
    }
    dims
}

/// One forward lifting pass over `x` (len >= 2) into `[lows | highs]`.
fn lift_forward(x: &[i32], out: &mut [i32]) {
    let n = x.len();
    let nl = n.div_ceil(2);
    let nh = n / 2;
    let at = |i: usize| if i < n { x[i] } else { x[2 * (n - 1) - i] };
    let (lows, highs) = out.split_at_mut(nl);
    for (i, d) in highs.iter_mut().enumerate().take(nh) {
        *d = x[2 * i + 1] - ((x[2 * i] + at(2 * i + 2)) >> 1);
    }
    for (i, s) in lows.iter_mut().enumerate() {
        let left = if i == 0 { highs[0] } else { highs[i - 1] };
        let right = if i < nh { highs[i] } else { highs[nh - 1] };
        *s = x[2 * i] + ((left + right + 2) >> 2);
    }
}

fn lift_inverse(coeffs: &[i32], x: &mut [i32]) {
    let n = x.len();
    let nl = n.div_ceil(2);
    let nh = n / 2;
    let (lows, highs) = coeffs.split_at(nl);
    for i in 0..nl {
        let left = if i == 0 { highs[0] } else { highs[i - 1] };
        let right = if i < nh { highs[i] } else { highs[nh - 1] };
        x[2 * i] = lows[i] - ((left + right + 2) >> 2);
    }
    for i in 0..nh {
        let next = if 2 * i + 2 < n { x[2 * i + 2] } else { x[2 * i] };
        x[2 * i + 1] = highs[i] + ((x[2 * i] + next) >> 1);
    }
}

/// Real-valued 5/3 synthesis of one line (no rounding).
fn synthesize_line(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len();
    let nl = n.div_ceil(2);
    let nh = n / 2;
    let (lows, highs) = coeffs.split_at(nl);
    let mut x = vec![0.0; n];
    for i in 0..nl {
        let left = if i == 0 { highs[0] } else { highs[i - 1] };
        let right = if i < nh { highs[i] } else { highs[nh - 1] };
        x[2 * i] = lows[i] - (left + right) / 4.0;
    }
    for i in 0..nh {
        let next = if 2 * i + 2 < n { x[2 * i + 2] } else { x[2 * i] };
        x[2 * i + 1] = highs[i] + (x[2 * i] + next) / 2.0;
    }
    x
}

/// L2 norm of the 1-D synthesis response to a unit coefficient in the low-
/// or high-pass band of `level`.
fn synthesis_norm_1d(level: u8, high: bool) -> f64 {
    let n = 1usize << (level as usize + 6);
    let len = n >> (level - 1);
    let mut line = vec![0.0; len];
    let half = len / 2;
    line[if high { half + half / 2 } else { half / 2 }] = 1.0;
    let mut x = synthesize_line(&line);
    while x.len() < n {
        let mut next = x.clone();
        next.resize(2 * x.len(), 0.0);
        x = synthesize_line(&next);
    }
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Synthesis gain of each subband (coarse-to-fine band order): the pixel-
/// domain L2 norm produced by a unit coefficient.
pub fn band_gains(levels: u8) -> Vec<f64> {
    let mut out = Vec::with_capacity(1 + 3 * levels as usize);
    let low = synthesis_norm_1d(levels, false);
    out.push(low * low);
    for level in (1..=levels).rev() {
        let (l, h) = (synthesis_norm_1d(level, false), synthesis_norm_1d(level, true));
        out.extend([h * l, l * h, h * h]);
    }
    out
}

/// Transforms the top-left `w`x`h` region of a `stride`-wide buffer in place,
/// leaving the Mallat quadrant layout.
fn forward_level(buf: &mut [i32], stride: usize, w: usize, h: usize) {
    let mut line = vec![0; w.max(h)];
    let mut tmp = vec![0; w.max(h)];
    for y in 0..h {
        let row = &mut buf[y * stride..y * stride + w];
        line[..w].copy_from_slice(row);
        lift_forward(&line[..w], &mut tmp[..w]);
        row.copy_from_slice(&tmp[..w]);
    }
    for x in 0..w {
        for y in 0..h {
            line[y] = buf[y * stride + x];
        }
        lift_forward(&line[..h], &mut tmp[..h]);
        for y in 0..h {
            buf[y * stride + x] = tmp[y];
        }
    }
}

fn inverse_level(buf: &mut [i32], stride: usize, w: usize, h: usize) {
    let mut line = vec![0; w.max(h)];
    let mut tmp = vec![0; w.max(h)];
    for x in 0..w {
        for y in 0..h {
            line[y] = buf[y * stride + x];
        }
        lift_inverse(&line[..h], &mut tmp[..h]);
        for y in 0..h {
            buf[y * stride + x] = tmp[y];
        }
    }
    for y in 0..h {
        let row = &mut buf[y * stride..y * stride + w];
        line[..w].copy_from_slice(row);
        lift_inverse(&line[..w], &mut tmp[..w]);
        row.copy_from_slice(&tmp[..w]);
    }
}

/// Layout of each subband inside the Mallat buffer: `(kind, level, x0, y0, w, h)`.
pub(crate) fn band_layout(width: usize, height: usize, levels: u8) -> Vec<(SubbandKind, u8, usize, usize, usize, usize)> {
    let dims = level_dims(width, height, levels);
    let mut out = Vec::new();
    let (lw, lh) = dims[levels as usize];
    out.push((SubbandKind::LL, levels, 0, 0, lw, lh));
    for level in (1..=levels).rev() {
        let (w, h) = dims[level as usize - 1];
        let (nlw, nlh) = (w.div_ceil(2), h.div_ceil(2));
        let (nhw, nhh) = (w / 2, h / 2);
        out.push((SubbandKind::HL, level, nlw, 0, nhw, nlh));
        out.push((SubbandKind::LH, level, 0, nlh, nlw, nhh));
        out.push((SubbandKind::HH, level, nlw, nlh, nhw, nhh));
    }
    out
}

pub fn dwt_forward_samples(samples: &[i32], width: usize, height: usize, levels: u8) -> Result<SubbandGrid> {
    check_levels(width, height, levels)?;
    let mut buf = samples.to_vec();
    for (w, h) in level_dims(width, height, levels).into_iter().take(levels as usize) {
        forward_level(&mut buf, width, w, h);
    }
    let bands = band_layout(width, height, levels)
        .into_iter()
        .map(|(kind, level, x0, y0, w, h)| {
            let mut data = Vec::with_capacity(w * h);
            for y in y0..y0 + h {
                data.extend_from_slice(&buf[y * width + x0..y * width + x0 + w]);
            }
            Subband {
                kind,
                level,
                width: w,
                height: h,
                data,
            }
        })
        .collect();
    Ok(SubbandGrid {
        width,
        height,
        levels,
        bands,
    })
}

pub fn dwt_inverse_samples(grid: &SubbandGrid) -> Vec<i32> {
    let (width, height, levels) = (grid.width, grid.height, grid.levels);
    let mut buf = vec![0i32; width * height];
    for ((_, _, x0, y0, w, h), band) in band_layout(width, height, levels).into_iter().zip(&grid.bands) {
        debug_assert_eq!((w, h), (band.width, band.height));
        for y in 0..h {
            buf[(y0 + y) * width + x0..(y0 + y) * width + x0 + w]
                .copy_from_slice(&band.data[y * w..(y + 1) * w]);
        }
    }
    let dims = level_dims(width, height, levels);
    for level in (0..levels as usize).rev() {
        let (w, h) = dims[level];
        inverse_level(&mut buf, width, w, h);
    }
    buf
}

pub fn dwt_forward(frame: &Frame, levels: u8) -> Result<SubbandGrid> {
    let samples: Vec<i32> = frame.pixels().iter().map(|&v| v as i32).collect();
    dwt_forward_samples(&samples, frame.width(), frame.height(), levels)
}

/// Inverse transform, clamping samples to the depth's range.
pub fn dwt_inverse(grid: &SubbandGrid, depth: BitDepth) -> Frame {
    let max = depth.max_value() as i32;
    let pixels = dwt_inverse_samples(grid)
        .into_iter()
        .map(|v| v.clamp(0, max) as u16)
        .collect();
    Frame::from_parts(grid.width, grid.height, depth, pixels)
}
