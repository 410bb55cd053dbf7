//! Reconstruction quality, mask coverage and rate curves.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::codec::{self, CodecParams};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::mask::RoiMask;
use crate::synth::GroundTruth;

/// Writes infinite decibel values as the string `"inf"`.
pub fn serialize_db<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() && *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

pub fn serialize_opt_db<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => serialize_db(v, s),
        None => s.serialize_none(),
    }
}

/// Exact sum of squared differences and the number of pixels summed.
pub fn squared_error(reference: &Frame, test: &Frame, region: Option<&RoiMask>) -> Result<(u64, usize)> {
    reference.ensure_same_dims(test)?;
    if let Some(m) = region {
        m.ensure_dims(reference.dims())?;
    }
    let mut sse = 0u64;
    let mut n = 0usize;
    for (i, (&a, &b)) in reference.pixels().iter().zip(test.pixels()).enumerate() {
        if region.is_none_or(|m| m.bits()[i]) {
            let d = a.abs_diff(b) as u64;
            sse += d * d;
            n += 1;
        }
    }
    Ok((sse, n))
}

fn psnr_from(sse: u64, n: usize, max: f64) -> f64 {
    if sse == 0 {
        return f64::INFINITY;
    }
    let mse = sse as f64 / n as f64;
    10.0 * (max * max / mse).log10()
}

/// PSNR in dB over `region` (whole frame when `None`); infinite for identical pixels.
pub fn psnr(reference: &Frame, test: &Frame, region: Option<&RoiMask>) -> Result<f64> {
    if reference.depth() != test.depth() {
        return Err(Error::param("psnr", "frames differ in bit depth"));
    }
    let (sse, n) = squared_error(reference, test, region)?;
    if n == 0 {
        return Err(Error::EmptyRegion);
    }
    Ok(psnr_from(sse, n, reference.depth().max_value() as f64))
}

/// PSNR over the global frame, the region and its complement. Region and
/// background are `None` when empty.
pub fn psnr_split(reference: &Frame, test: &Frame, region: &RoiMask) -> Result<(f64, Option<f64>, Option<f64>)> {
    let global = psnr(reference, test, None)?;
    let max = reference.depth().max_value() as f64;
    let (sr, nr) = squared_error(reference, test, Some(region))?;
    let (sb, nb) = squared_error(reference, test, Some(&region.complement()))?;
    let opt = |s, n| (n > 0).then(|| psnr_from(s, n, max));
    Ok((global, opt(sr, nr), opt(sb, nb)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityRow {
    pub frame: usize,
    #[serde(serialize_with = "serialize_db")]
    pub psnr_global: f64,
    #[serde(serialize_with = "serialize_opt_db")]
    pub psnr_roi: Option<f64>,
    #[serde(serialize_with = "serialize_opt_db")]
    pub psnr_background: Option<f64>,
    /// Raw bytes / compressed bytes; `None` when the compressed size is unknown.
    pub achieved_ratio: Option<f64>,
    pub mask_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    #[serde(serialize_with = "serialize_db")]
    pub mean: f64,
    #[serde(serialize_with = "serialize_db")]
    pub min: f64,
}

impl Aggregate {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        Some(Self {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityReport {
    /// Which mask defines the RoI region: `truth` or `pipeline`.
    pub region_source: String,
    pub rows: Vec<QualityRow>,
    pub psnr_global: Option<Aggregate>,
    pub psnr_roi: Option<Aggregate>,
    pub psnr_background: Option<Aggregate>,
    pub achieved_ratio: Option<Aggregate>,
    pub mask_fraction: Option<Aggregate>,
}

/// Per-frame quality of `decoded` against `raw`. `regions` defines the RoI
/// for region PSNR; `sizes` are compressed byte counts when known.
pub fn quality_report(
    raw: &[Frame],
    decoded: &[Frame],
    regions: &[RoiMask],
    region_source: &str,
    sizes: Option<&[usize]>,
) -> Result<QualityReport> {
    if raw.len() != decoded.len() || raw.len() != regions.len() {
        return Err(Error::FrameCountMismatch {
            masks: regions.len().min(decoded.len()),
            truth: raw.len(),
        });
    }
    let rows: Vec<QualityRow> = (0..raw.len())
        .into_par_iter()
        .map(|t| {
            let (g, r, b) = psnr_split(&raw[t], &decoded[t], &regions[t]).map_err(|e| e.at_frame(t))?;
            Ok(QualityRow {
                frame: t,
                psnr_global: g,
                psnr_roi: r,
                psnr_background: b,
                achieved_ratio: sizes.map(|s| raw[t].raw_bytes() as f64 / s[t] as f64),
                mask_fraction: regions[t].fraction(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(QualityReport {
        region_source: region_source.to_string(),
        psnr_global: Aggregate::of(rows.iter().map(|r| r.psnr_global)),
        psnr_roi: Aggregate::of(rows.iter().filter_map(|r| r.psnr_roi)),
        psnr_background: Aggregate::of(rows.iter().filter_map(|r| r.psnr_background)),
        achieved_ratio: Aggregate::of(rows.iter().filter_map(|r| r.achieved_ratio)),
        mask_fraction: Aggregate::of(rows.iter().map(|r| r.mask_fraction)),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissedCell {
    pub frame: usize,
    pub cell: usize,
    pub contrast: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub cells_total: usize,
    pub cells_covered: usize,
    pub coverage_rate: f64,
    /// Cell instances with contrast above twice the noise sigma.
    pub high_contrast_total: usize,
    pub high_contrast_covered: usize,
    pub high_contrast_rate: f64,
    /// Mean per-frame IoU of the masks against the truth masks.
    pub mean_iou: f64,
    pub missed_cell_log: Vec<MissedCell>,
}

fn rate(covered: usize, total: usize) -> f64 {
    if total == 0 {
        1.0
    } else {
        covered as f64 / total as f64
    }
}

/// A cell counts as covered in a frame when any of its pixels is in the mask.
pub fn coverage(masks: &[RoiMask], truth: &GroundTruth) -> Result<CoverageReport> {
    if masks.len() != truth.n_frames() {
        return Err(Error::FrameCountMismatch {
            masks: masks.len(),
            truth: truth.n_frames(),
        });
    }
    let (w, h) = (truth.width, truth.height);
    for m in masks {
        m.ensure_dims((w, h))?;
    }
    let strong = 2.0 * truth.noise_sigma;
    let mut total = 0;
    let mut covered = 0;
    let mut hc_total = 0;
    let mut hc_covered = 0;
    let mut missed = Vec::new();
    for (t, mask) in masks.iter().enumerate() {
        for cell in &truth.cells {
            let hit = cell
                .footprint(t, w, h)
                .into_iter()
                .any(|(x, y)| mask.get(x, y));
            total += 1;
            covered += hit as usize;
            if cell.contrast > strong {
                hc_total += 1;
                hc_covered += hit as usize;
            }
            if !hit {
                missed.push(MissedCell {
                    frame: t,
                    cell: cell.id,
                    contrast: cell.contrast,
                });
            }
        }
    }
    let ious: Vec<f64> = masks
        .iter()
        .zip(&truth.masks)
        .map(|(m, g)| {
            let (mut inter, mut union) = (0usize, 0usize);
            for (&a, &b) in m.bits().iter().zip(g.bits()) {
                inter += (a && b) as usize;
                union += (a || b) as usize;
            }
            if union == 0 {
                1.0
            } else {
                inter as f64 / union as f64
            }
        })
        .collect();
    Ok(CoverageReport {
        cells_total: total,
        cells_covered: covered,
        coverage_rate: rate(covered, total),
        high_contrast_total: hc_total,
        high_contrast_covered: hc_covered,
        high_contrast_rate: rate(hc_covered, hc_total),
        mean_iou: ious.iter().sum::<f64>() / ious.len().max(1) as f64,
        missed_cell_log: missed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    /// `flowroi` or `uniform`.
    pub method: String,
    pub rate: f64,
    #[serde(serialize_with = "serialize_db")]
    pub psnr_global: f64,
    #[serde(serialize_with = "serialize_opt_db")]
    pub psnr_roi: Option<f64>,
    #[serde(serialize_with = "serialize_opt_db")]
    pub psnr_background: Option<f64>,
    pub achieved_ratio: f64,
}

/// Encodes every frame with `masks` and decodes it, returning the decoded
/// frames and compressed sizes.
pub fn round_trip(frames: &[Frame], masks: &[RoiMask], params: &CodecParams) -> Result<(Vec<Frame>, Vec<usize>)> {
    let out: Vec<(Frame, usize)> = frames
        .par_iter()
        .zip(masks)
        .enumerate()
        .map(|(t, (f, m))| {
            let bytes = codec::encode_bytes(f, m, params).map_err(|e| e.at_frame(t))?;
            let (d, _) = codec::decode_bytes(&bytes).map_err(|e| e.at_frame(t))?;
            Ok((d, bytes.len()))
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().unzip())
}

/// Mean quality over frames at one rate.
pub fn rate_point(
    method: &str,
    frames: &[Frame],
    masks: &[RoiMask],
    regions: &[RoiMask],
    params: &CodecParams,
) -> Result<RateRow> {
    let (decoded, sizes) = round_trip(frames, masks, params)?;
    let report = quality_report(frames, &decoded, regions, "", Some(&sizes))?;
    Ok(RateRow {
        method: method.to_string(),
        rate: params.compression_rate,
        psnr_global: report.psnr_global.map_or(f64::NAN, |a| a.mean),
        psnr_roi: report.psnr_roi.map(|a| a.mean),
        psnr_background: report.psnr_background.map(|a| a.mean),
        achieved_ratio: report.achieved_ratio.map_or(f64::NAN, |a| a.mean),
    })
}

/// FlowRoI and uniform (empty-mask) rows for each rate, masks held fixed.
/// Region PSNR uses `regions`, typically the ground-truth cell masks.
pub fn rate_curve(
    frames: &[Frame],
    masks: &[RoiMask],
    regions: &[RoiMask],
    params: &CodecParams,
    rates: &[f64],
) -> Result<Vec<RateRow>> {
    if rates.iter().any(|&r| !(r > 1.0)) {
        return Err(Error::param("rates", "every rate must exceed 1"));
    }
    if rates.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::param("rates", "must be ascending"));
    }
    let empty: Vec<RoiMask> = frames.iter().map(|f| RoiMask::empty(f.width(), f.height())).collect();
    let mut rows = Vec::with_capacity(2 * rates.len());
    for &r in rates {
        let p = CodecParams {
            compression_rate: r,
            lossless: false,
            ..*params
        };
        rows.push(rate_point("flowroi", frames, masks, regions, &p)?);
        rows.push(rate_point("uniform", frames, &empty, regions, &p)?);
    }
    Ok(rows)
}

/// Processor model string from the host, or the architecture name.
pub fn host_cpu() -> String {
    std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().to_string())
        })
        .unwrap_or_else(|| std::env::consts::ARCH.to_string())
}
