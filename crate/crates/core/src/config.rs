//! Resolved pipeline configuration and its flat `key=value` form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::codec::CodecParams;
use crate::error::{Error, Result};
use crate::flow::FlowParams;
use crate::preprocess::DenoiseParams;
use crate::roi::{GradientSource, Normalization, RoiParams};

pub const DEFAULT_MAX_SHIFT: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub denoise: DenoiseParams,
    /// Registration search bound in pixels.
    pub max_shift: usize,
    pub flow: FlowParams,
    pub roi: RoiParams,
    pub codec: CodecParams,
    /// Worker threads, 0 = one per core.
    pub workers: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            denoise: DenoiseParams::default(),
            max_shift: DEFAULT_MAX_SHIFT,
            flow: FlowParams::default(),
            roi: RoiParams::default(),
            codec: CodecParams::default(),
            workers: 0,
            seed: 0,
        }
    }
}

/// Every key accepted by [`PipelineConfig::set`], in canonical spelling.
pub const CONFIG_KEYS: &[&str] = &[
    "denoise",
    "median-radius",
    "bilateral-sigma-spatial",
    "bilateral-sigma-range",
    "bilateral-radius",
    "max-shift",
    "flow-levels",
    "flow-scale",
    "flow-window",
    "flow-iters",
    "poly-n",
    "poly-sigma",
    "roi-threshold",
    "adjacent-factor",
    "min-area",
    "open-radius",
    "close-radius",
    "saliency-gradient",
    "saliency-normalization",
    "saliency-sigma",
    "scaling-factor",
    "compression-rate",
    "dwt-levels",
    "lossless",
    "workers",
    "seed",
];

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

fn parse_bool(key: &'static str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(Error::param(key, format!("expected on|off, got `{v}`"))),
    }
}

fn num<T: std::str::FromStr>(key: &'static str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::param(key, format!("cannot parse `{v}`")))
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.denoise.validate()?;
        self.flow.validate()?;
        self.roi.validate()?;
        self.codec.validate()?;
        if self.max_shift == 0 {
            return Err(Error::param("max_shift", "must be at least 1"));
        }
        Ok(())
    }

    /// Applies one setting. Keys match the CLI flag names; underscores are
    /// accepted in place of dashes.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let v = value.trim();
        match key.as_str() {
            "denoise" => self.denoise.enabled = parse_bool("denoise", v)?,
            "median-radius" => self.denoise.median_radius = num("median_radius", v)?,
            "bilateral-sigma-spatial" => {
                self.denoise.bilateral_sigma_spatial = num("bilateral_sigma_spatial", v)?
            }
            "bilateral-sigma-range" => {
                self.denoise.bilateral_sigma_range = num("bilateral_sigma_range", v)?
            }
            "bilateral-radius" => self.denoise.bilateral_radius = num("bilateral_radius", v)?,
            "max-shift" => self.max_shift = num("max_shift", v)?,
            "flow-levels" => self.flow.pyramid_levels = num("pyramid_levels", v)?,
            "flow-scale" => self.flow.pyramid_scale = num("pyramid_scale", v)?,
            "flow-window" => self.flow.window_size = num("window_size", v)?,
            "flow-iters" => self.flow.iterations = num("iterations", v)?,
            "poly-n" => self.flow.poly_n = num("poly_n", v)?,
            "poly-sigma" => self.flow.poly_sigma = num("poly_sigma", v)?,
            "roi-threshold" => self.roi.roi_threshold = num("roi_threshold", v)?,
            "adjacent-factor" => self.roi.adjacent_factor = num("adjacent_factor", v)?,
            "min-area" => self.roi.min_area = num("min_area", v)?,
            "open-radius" => self.roi.open_radius = num("open_radius", v)?,
            "close-radius" => self.roi.close_radius = num("close_radius", v)?,
            "saliency-gradient" => {
                self.roi.gradient = match v {
                    "image" => GradientSource::Image,
                    "flow" => GradientSource::Flow,
                    _ => return Err(Error::param("saliency_gradient", format!("expected image|flow, got `{v}`"))),
                }
            }
            "saliency-normalization" => {
                self.roi.normalization = match v {
                    "frame" => Normalization::Frame,
                    "sequence" => Normalization::Sequence,
                    _ => {
                        return Err(Error::param(
                            "saliency_normalization",
                            format!("expected frame|sequence, got `{v}`"),
                        ))
                    }
                }
            }
            "saliency-sigma" => self.roi.saliency_sigma = num("saliency_sigma", v)?,
            "scaling-factor" => self.codec.scaling_factor = num("scaling_factor", v)?,
            "compression-rate" => self.codec.compression_rate = num("compression_rate", v)?,
            "dwt-levels" => self.codec.dwt_levels = num("dwt_levels", v)?,
            "lossless" => self.codec.lossless = parse_bool("lossless", v)?,
            "workers" => self.workers = num("workers", v)?,
            "seed" => self.seed = num("seed", v)?,
            other => return Err(Error::param("config", format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies the settings of a flat `key=value` text; `#` starts a comment line.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::param("config", format!("expected key=value, got `{line}`")))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_kv(text)?;
        Ok(c)
    }

    pub fn kv_pairs(&self) -> BTreeMap<&'static str, String> {
        let gradient = match self.roi.gradient {
            GradientSource::Image => "image",
            GradientSource::Flow => "flow",
        };
        let normalization = match self.roi.normalization {
            Normalization::Frame => "frame",
            Normalization::Sequence => "sequence",
        };
        BTreeMap::from([
            ("denoise", on_off(self.denoise.enabled).to_string()),
            ("median-radius", self.denoise.median_radius.to_string()),
            ("bilateral-sigma-spatial", self.denoise.bilateral_sigma_spatial.to_string()),
            ("bilateral-sigma-range", self.denoise.bilateral_sigma_range.to_string()),
            ("bilateral-radius", self.denoise.bilateral_radius.to_string()),
            ("max-shift", self.max_shift.to_string()),
            ("flow-levels", self.flow.pyramid_levels.to_string()),
            ("flow-scale", self.flow.pyramid_scale.to_string()),
            ("flow-window", self.flow.window_size.to_string()),
            ("flow-iters", self.flow.iterations.to_string()),
            ("poly-n", self.flow.poly_n.to_string()),
            ("poly-sigma", self.flow.poly_sigma.to_string()),
            ("roi-threshold", self.roi.roi_threshold.to_string()),
            ("adjacent-factor", self.roi.adjacent_factor.to_string()),
            ("min-area", self.roi.min_area.to_string()),
            ("open-radius", self.roi.open_radius.to_string()),
            ("close-radius", self.roi.close_radius.to_string()),
            ("saliency-gradient", gradient.to_string()),
            ("saliency-normalization", normalization.to_string()),
            ("saliency-sigma", self.roi.saliency_sigma.to_string()),
            ("scaling-factor", self.codec.scaling_factor.to_string()),
            ("compression-rate", self.codec.compression_rate.to_string()),
            ("dwt-levels", self.codec.dwt_levels.to_string()),
            ("lossless", on_off(self.codec.lossless).to_string()),
            ("workers", self.workers.to_string()),
            ("seed", self.seed.to_string()),
        ])
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.kv_pairs() {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }
}
