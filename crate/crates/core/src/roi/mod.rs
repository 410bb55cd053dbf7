//! Flow fields to clean binary region-of-interest masks.

mod ensemble;
mod morph;
mod saliency;
mod threshold;

pub use ensemble::temporal_ensemble;
pub use morph::{dilate, erode, label_components, morph_cleanup, remove_small_components};
pub use saliency::{
    fuse, gradient_magnitude, saliency, saliency_terms, GradientSource, Normalization, Normalizer,
    SaliencyMap, SaliencyTerms, NORM_HIGH_PERCENTILE, NORM_LOW_PERCENTILE,
};
pub use threshold::threshold_mask;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::filters::gaussian_blur;
use crate::flow::compute_flow;
use crate::frame::{Frame, Sequence};
use crate::mask::RoiMask;
use crate::preprocess::{apply_shift, denoise, estimate_shift, Shift};

pub const DEFAULT_SALIENCY_SIGMA: f64 = 12.0;

/// Weight of the motion term in the saliency map.
pub const FLOW_WEIGHT: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiParams {
    pub roi_threshold: f64,
    pub flow_weight: f64,
    pub adjacent_factor: usize,
    pub min_area: usize,
    pub open_radius: usize,
    pub close_radius: usize,
    pub gradient: GradientSource,
    pub normalization: Normalization,
    /// Gaussian sigma applied to the fused map before thresholding; 0 disables.
    pub saliency_sigma: f64,
}

impl Default for RoiParams {
    fn default() -> Self {
        Self {
            roi_threshold: 0.2,
            flow_weight: FLOW_WEIGHT,
            adjacent_factor: 0,
            min_area: 20,
            open_radius: 1,
            close_radius: 1,
            gradient: GradientSource::Image,
            normalization: Normalization::Frame,
            saliency_sigma: DEFAULT_SALIENCY_SIGMA,
        }
    }
}

impl RoiParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.roi_threshold > 0.0 && self.roi_threshold < 1.0) {
            return Err(Error::param("roi_threshold", "must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.flow_weight) {
            return Err(Error::param("flow_weight", "must lie in [0, 1]"));
        }
        if !(self.saliency_sigma >= 0.0 && self.saliency_sigma.is_finite()) {
            return Err(Error::param("saliency_sigma", "must be a finite number >= 0"));
        }
        Ok(())
    }
}

/// Wall time spent per stage, summed over frames.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub denoise: f64,
    pub flow: f64,
    pub roi: f64,
    pub encode: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.denoise + self.flow + self.roi + self.encode
    }
}

#[derive(Debug, Clone)]
pub struct RoiExtraction {
    /// Final per-frame masks, after temporal ensembling.
    pub masks: Vec<RoiMask>,
    /// Per-frame masks before ensembling.
    pub raw_masks: Vec<RoiMask>,
    /// Registration of each frame's predecessor onto it; index 0 is zero.
    pub shifts: Vec<Shift>,
    pub timings: StageTimings,
}

struct PairAnalysis {
    shift: Shift,
    terms: SaliencyTerms<f32>,
    flow_secs: f64,
}

fn analyze_pair(prev: &Frame, cur: &Frame, config: &PipelineConfig) -> Result<PairAnalysis> {
    let start = Instant::now();
    let side = cur.width().min(cur.height());
    let max_shift = config.max_shift.min(side.saturating_sub(1) / 4);
    let shift = if max_shift > 0 {
        estimate_shift(cur, prev, max_shift)?.or_zero()
    } else {
        Shift::ZERO
    };
    let aligned_prev = apply_shift(prev, shift);
    let cur_plane = cur.to_plane::<f32>();
    // anchored on the current frame so motion marks where content is now
    let flow = compute_flow(&cur_plane, &aligned_prev.to_plane::<f32>(), &config.flow)?;
    let flow_secs = start.elapsed().as_secs_f64();
    let terms = saliency_terms(&flow, &cur_plane, config.roi.gradient)?;
    Ok(PairAnalysis {
        shift,
        terms,
        flow_secs,
    })
}

fn mask_from_terms(
    terms: &SaliencyTerms<f32>,
    motion_norm: &Normalizer<f32>,
    gradient_norm: &Normalizer<f32>,
    roi: &RoiParams,
) -> RoiMask {
    let (w, h) = (terms.motion.width, terms.motion.height);
    // no motion contrast at all: nothing in this frame is moving
    if motion_norm.is_degenerate() {
        return RoiMask::empty(w, h);
    }
    let mut map = fuse(terms, motion_norm, gradient_norm, roi.flow_weight as f32);
    if roi.saliency_sigma > 0.0 {
        map = gaussian_blur(&map, roi.saliency_sigma);
    }
    let raw = threshold_mask(&map, roi.roi_threshold);
    morph_cleanup(&raw, roi.open_radius, roi.close_radius, roi.min_area)
}

/// Per-frame RoI masks for the whole sequence.
pub fn extract_roi(sequence: &Sequence, config: &PipelineConfig) -> Result<Vec<RoiMask>> {
    Ok(extract_roi_detailed(sequence, config)?.masks)
}

/// As [`extract_roi`], also returning pre-ensemble masks, shifts and timings.
pub fn extract_roi_detailed(sequence: &Sequence, config: &PipelineConfig) -> Result<RoiExtraction> {
    config.validate()?;
    let n = sequence.len();
    if n < 2 {
        return Err(Error::SequenceTooShort { needed: 2, got: n });
    }
    let frames = sequence.frames();

    let t0 = Instant::now();
    let cleaned: Vec<Frame> = frames.par_iter().map(|f| denoise(f, &config.denoise)).collect();
    let denoise_secs = t0.elapsed().as_secs_f64();

    let pairs: Vec<PairAnalysis> = (1..n)
        .into_par_iter()
        .map(|t| analyze_pair(&cleaned[t - 1], &cleaned[t], config).map_err(|e| e.at_frame(t)))
        .collect::<Result<_>>()?;
    let flow_secs: f64 = pairs.iter().map(|p| p.flow_secs).sum();

    let t1 = Instant::now();
    let roi = &config.roi;
    let mut raw_masks: Vec<RoiMask> = match roi.normalization {
        Normalization::Frame => pairs
            .par_iter()
            .map(|p| {
                let mn = Normalizer::fit(&p.terms.motion.data);
                let gn = Normalizer::fit(&p.terms.gradient.data);
                mask_from_terms(&p.terms, &mn, &gn, roi)
            })
            .collect(),
        Normalization::Sequence => {
            let mn = Normalizer::fit_many(pairs.iter().map(|p| &p.terms.motion));
            let gn = Normalizer::fit_many(pairs.iter().map(|p| &p.terms.gradient));
            pairs
                .par_iter()
                .map(|p| mask_from_terms(&p.terms, &mn, &gn, roi))
                .collect()
        }
    };
    // frame 0 has no predecessor and borrows frame 1's mask
    raw_masks.insert(0, raw_masks[0].clone());
    let masks: Vec<RoiMask> = (0..n)
        .into_par_iter()
        .map(|t| temporal_ensemble(&raw_masks, t, roi.adjacent_factor))
        .collect();
    let roi_secs = t1.elapsed().as_secs_f64();

    let mut shifts = vec![Shift::ZERO];
    shifts.extend(pairs.iter().map(|p| p.shift));
    Ok(RoiExtraction {
        masks,
        raw_masks,
        shifts,
        timings: StageTimings {
            denoise: denoise_secs,
            flow: flow_secs,
            roi: roi_secs,
            encode: 0.0,
        },
    })
}

