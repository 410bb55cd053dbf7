//! Scaling-based RoI wavelet codec.

pub mod arith;
pub mod bitplane;
pub mod container;
pub mod dwt;
pub mod roi_map;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::mask::RoiMask;

pub use bitplane::{BandPlanes, EmbeddedStream};
pub use container::{Header, RoiBitstream, HEADER_LEN};
pub use dwt::{dwt_forward, dwt_inverse, Subband, SubbandGrid, SubbandKind};
pub use roi_map::map_mask_to_subbands;

use bitplane::BandShape;

/// Allowance for fixed container overhead beyond the rate budget.
pub const HEADER_ALLOWANCE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodecParams {
    /// Bit shift applied to RoI coefficient magnitudes, 1..=10.
    pub scaling_factor: u8,
    /// Raw bytes / compressed bytes.
    pub compression_rate: f64,
    pub dwt_levels: u8,
    pub lossless: bool,
}

impl Default for CodecParams {
    fn default() -> Self {
        Self {
            scaling_factor: 5,
            compression_rate: 40.0,
            dwt_levels: 5,
            lossless: false,
        }
    }
}

impl CodecParams {
    pub fn validate(&self) -> Result<()> {
        if !(1..=10).contains(&self.scaling_factor) {
            return Err(Error::param("scaling_factor", "must be in 1..=10"));
        }
        if !(self.compression_rate > 1.0) || !self.compression_rate.is_finite() {
            return Err(Error::param("compression_rate", "must be a finite number > 1"));
        }
        if self.compression_rate * 100.0 > u32::MAX as f64 {
            return Err(Error::param("compression_rate", "too large"));
        }
        if self.dwt_levels == 0 {
            return Err(Error::param("dwt_levels", "must be at least 1"));
        }
        Ok(())
    }

    /// Total file budget in bytes for a frame of `raw_bytes`, `None` when lossless.
    pub fn budget(&self, raw_bytes: usize) -> Option<usize> {
        (!self.lossless).then(|| (raw_bytes as f64 / self.compression_rate).floor() as usize)
    }
}

fn dc_offset(frame_depth: crate::frame::BitDepth) -> i32 {
    1 << (frame_depth.bits() - 1)
}

fn shapes_of(width: usize, height: usize, levels: u8) -> Vec<BandShape> {
    dwt::band_layout(width, height, levels)
        .into_iter()
        .map(|(_, _, _, _, w, h)| BandShape { width: w, height: h })
        .collect()
}

/// Encodes `frame` with RoI priority given by `mask`.
pub fn encode(frame: &Frame, mask: &RoiMask, params: &CodecParams) -> Result<RoiBitstream> {
    params.validate()?;
    mask.ensure_dims(frame.dims())?;
    let (width, height) = frame.dims();
    let levels = params.dwt_levels;
    let offset = dc_offset(frame.depth());
    let samples: Vec<i32> = frame.pixels().iter().map(|&v| v as i32 - offset).collect();
    let grid = dwt::dwt_forward_samples(&samples, width, height, levels)?;
    let flags = map_mask_to_subbands(mask, levels);

    let stream_budget = match params.budget(frame.raw_bytes()) {
        None => None,
        Some(total) => {
            let fixed = HEADER_LEN
                + container::encode_mask(mask).len()
                + container::payload_prefix_len(grid.bands.len());
            let minimum = fixed + bitplane::MIN_STREAM_BYTES;
            if total < minimum {
                return Err(Error::InfeasibleRate {
                    budget: total,
                    minimum,
                });
            }
            Some(total - fixed)
        }
    };
    let shifts = bitplane::weight_shifts(&dwt::band_gains(levels));
    let stream = bitplane::encode_bands(&grid.bands, &flags, &shifts, params.scaling_factor, stream_budget);
    Ok(RoiBitstream {
        header: Header {
            width: width as u32,
            height: height as u32,
            depth: frame.depth(),
            levels,
            scaling: params.scaling_factor,
            rate_centi: if params.lossless {
                0
            } else {
                (params.compression_rate * 100.0).round() as u32
            },
        },
        mask: mask.clone(),
        stream,
    })
}

/// Decodes a container into the reconstructed frame and its carried mask.
pub fn decode(bitstream: &RoiBitstream) -> Result<(Frame, RoiMask)> {
    let h = &bitstream.header;
    let (width, height) = (h.width as usize, h.height as usize);
    dwt::check_levels(width, height, h.levels)?;
    bitstream.mask.ensure_dims((width, height))?;
    let shapes = shapes_of(width, height, h.levels);
    if bitstream.stream.planes.len() != shapes.len() {
        return Err(Error::CorruptStream("subband count does not match the levels".into()));
    }
    let flags = map_mask_to_subbands(&bitstream.mask, h.levels);
    let shifts = bitplane::weight_shifts(&dwt::band_gains(h.levels));
    let coeffs = bitplane::decode_bands(&shapes, &flags, &shifts, h.scaling, &bitstream.stream)?;
    let bands = dwt::band_layout(width, height, h.levels)
        .into_iter()
        .zip(coeffs)
        .map(|((kind, level, _, _, w, hh), data)| Subband {
            kind,
            level,
            width: w,
            height: hh,
            data,
        })
        .collect();
    let grid = SubbandGrid {
        width,
        height,
        levels: h.levels,
        bands,
    };
    let offset = dc_offset(h.depth);
    let max = h.depth.max_value() as i32;
    let pixels = dwt::dwt_inverse_samples(&grid)
        .into_iter()
        .map(|v| (v + offset).clamp(0, max) as u16)
        .collect();
    Ok((Frame::from_parts(width, height, h.depth, pixels), bitstream.mask.clone()))
}

pub fn encode_bytes(frame: &Frame, mask: &RoiMask, params: &CodecParams) -> Result<Vec<u8>> {
    Ok(encode(frame, mask, params)?.to_bytes())
}

pub fn decode_bytes(data: &[u8]) -> Result<(Frame, RoiMask)> {
    decode(&RoiBitstream::parse(data)?)
}
