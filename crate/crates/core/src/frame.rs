//! Frames, sequences and real-valued image planes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Bits per sample of a grayscale frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(BitDepth::Eight),
            16 => Ok(BitDepth::Sixteen),
            other => Err(Error::UnsupportedDepth(other)),
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    pub fn max_value(self) -> u16 {
        match self {
            BitDepth::Eight => u8::MAX as u16,
            BitDepth::Sixteen => u16::MAX,
        }
    }

    pub fn bytes_per_sample(self) -> usize {
        match self {
            BitDepth::Eight => 1,
            BitDepth::Sixteen => 2,
        }
    }
}

/// A single grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    width: usize,
    height: usize,
    depth: BitDepth,
    pixels: Vec<u16>,
}

impl Frame {
    pub fn new(width: usize, height: usize, depth: BitDepth, pixels: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param("dimensions", "width and height must be positive"));
        }
        if pixels.len() != width * height {
            return Err(Error::param(
                "pixels",
                format!("expected {} samples, got {}", width * height, pixels.len()),
            ));
        }
        let max = depth.max_value();
        if let Some(v) = pixels.iter().find(|&&v| v > max) {
            return Err(Error::param(
                "pixels",
                format!("sample {v} exceeds {}-bit range", depth.bits()),
            ));
        }
        Ok(Self {
            width,
            height,
            depth,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, depth: BitDepth, value: u16) -> Self {
        Self::new(width, height, depth, vec![value.min(depth.max_value()); width * height])
            .expect("valid constant frame")
    }

    /// Builds a frame without re-validating; callers guarantee the invariants.
    pub(crate) fn from_parts(width: usize, height: usize, depth: BitDepth, pixels: Vec<u16>) -> Self {
        debug_assert_eq!(pixels.len(), width * height);
        Self {
            width,
            height,
            depth,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn depth(&self) -> BitDepth {
        self.depth
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u16> {
        self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.pixels[y * self.width + x]
    }

    /// Raw storage size: what the frame occupies uncompressed.
    pub fn raw_bytes(&self) -> usize {
        self.width * self.height * self.depth.bytes_per_sample()
    }

    pub fn ensure_same_dims(&self, other: &Frame) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: other.dims(),
            });
        }
        Ok(())
    }

    /// Intensities mapped to `[0, 1]` by the depth's maximum value.
    pub fn to_plane<T: Real>(&self) -> Plane<T> {
        let scale = T::one() / T::from_u16(self.depth.max_value()).unwrap();
        Plane {
            width: self.width,
            height: self.height,
            data: self
                .pixels
                .iter()
                .map(|&v| T::from_u16(v).unwrap() * scale)
                .collect(),
        }
    }

    /// Inverse of [`Frame::to_plane`], rounding and clamping to the depth's range.
    pub fn from_plane<T: Real>(plane: &Plane<T>, depth: BitDepth) -> Frame {
        let max = T::from_u16(depth.max_value()).unwrap();
        let pixels = plane
            .data
            .iter()
            .map(|&v| {
                let s = (v * max).round().max(T::zero()).min(max);
                s.to_u16().unwrap_or(0)
            })
            .collect();
        Frame::from_parts(plane.width, plane.height, depth, pixels)
    }
}

/// Temporally ordered frames sharing dimensions and depth.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    frames: Vec<Frame>,
    frame_interval: f64,
}

impl Sequence {
    pub fn new(frames: Vec<Frame>, frame_interval: f64) -> Result<Self> {
        let first = frames.first().ok_or(Error::EmptySequence)?;
        for f in &frames[1..] {
            first.ensure_same_dims(f)?;
            if f.depth() != first.depth() {
                return Err(Error::UnsupportedFormat(format!(
                    "mixed bit depths {} and {}",
                    first.depth().bits(),
                    f.depth().bits()
                )));
            }
        }
        Ok(Self {
            frames,
            frame_interval,
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame_interval(&self) -> f64 {
        self.frame_interval
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    pub fn depth(&self) -> BitDepth {
        self.frames[0].depth()
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }
}

/// Real-valued single-channel image used by the continuous stages.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Real> Plane<T> {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![T::zero(); width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    /// Sample with edge replication for out-of-range coordinates.
    #[inline]
    pub fn at_clamped(&self, x: isize, y: isize) -> T {
        let xi = x.clamp(0, self.width as isize - 1) as usize;
        let yi = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yi * self.width + xi]
    }

    /// Bilinear interpolation with edge replication.
    pub fn sample_bilinear(&self, x: T, y: T) -> T {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let xi = x0.to_isize().unwrap_or(0);
        let yi = y0.to_isize().unwrap_or(0);
        let one = T::one();
        let a = self.at_clamped(xi, yi);
        let b = self.at_clamped(xi + 1, yi);
        let c = self.at_clamped(xi, yi + 1);
        let d = self.at_clamped(xi + 1, yi + 1);
        (a * (one - fx) + b * fx) * (one - fy) + (c * (one - fx) + d * fx) * fy
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> Plane<U> {
        Plane {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .map(|&v| U::from_f64(v.to_f64().unwrap()).unwrap())
                .collect(),
        }
    }
}
