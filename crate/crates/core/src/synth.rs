//! Synthetic cell-migration sequences with ground truth.
//!
//! Cells are Gaussian-profile blobs following persistent random walks over a
//! static background (illumination gradient plus a fixed texture) with fresh
//! white noise in every frame. A fraction
//! of cells is rendered at very low contrast so that the hard "missed cell"
//! regime is represented in every benchmark.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::gaussian_blur;
use crate::frame::{BitDepth, Frame, Plane, Sequence};
use crate::mask::RoiMask;

/// Generator settings. Intensities are expressed in 8-bit gray levels and
/// scaled to the output depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_cells: usize,
    pub cell_radius_range: (f64, f64),
    pub contrast_range: (f64, f64),
    /// Pixels per frame.
    pub speed_range: (f64, f64),
    pub noise_sigma: f64,
    pub n_frames: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub depth: BitDepth,
    pub low_contrast_fraction: f64,
    pub background_level: f64,
    pub gradient_amplitude: f64,
    /// Standard deviation of the static background texture.
    pub texture_amplitude: f64,
    /// Seconds between frames; informational.
    pub frame_interval: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_cells: 20,
            cell_radius_range: (8.0, 14.0),
            contrast_range: (25.0, 60.0),
            speed_range: (1.5, 3.5),
            noise_sigma: 4.0,
            n_frames: 50,
            width: 512,
            height: 512,
            seed: 7,
            depth: BitDepth::Eight,
            low_contrast_fraction: 0.05,
            background_level: 60.0,
            gradient_amplitude: 30.0,
            texture_amplitude: 6.0,
            frame_interval: 8.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub frame: usize,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTrack {
    pub id: usize,
    pub radius: f64,
    /// Peak contrast in 8-bit gray levels.
    pub contrast: f64,
    pub low_contrast: bool,
    pub points: Vec<TrackPoint>,
}

impl CellTrack {
    /// Pixels within the cell's radius at `frame`.
    pub fn footprint(&self, frame: usize, width: usize, height: usize) -> Vec<(usize, usize)> {
        let p = &self.points[frame];
        disk_pixels(p.x, p.y, p.radius, width, height)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub width: usize,
    pub height: usize,
    pub masks: Vec<RoiMask>,
    pub cells: Vec<CellTrack>,
    pub noise_sigma: f64,
}

impl GroundTruth {
    pub fn n_frames(&self) -> usize {
        self.masks.len()
    }
}

pub(crate) fn disk_pixels(cx: f64, cy: f64, r: f64, width: usize, height: usize) -> Vec<(usize, usize)> {
    let x0 = (cx - r).floor().max(0.0) as usize;
    let x1 = ((cx + r).ceil() as usize).min(width - 1);
    let y0 = (cy - r).floor().max(0.0) as usize;
    let y1 = ((cy + r).ceil() as usize).min(height - 1);
    let mut out = Vec::new();
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            if dx * dx + dy * dy <= r * r {
                out.push((x, y));
            }
        }
    }
    out
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let positive_range = |name: &'static str, (lo, hi): (f64, f64)| {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::param(name, format!("need 0 < min <= max, got ({lo}, {hi})")));
            }
            Ok(())
        };
        positive_range("cell_radius_range", self.cell_radius_range)?;
        positive_range("contrast_range", self.contrast_range)?;
        positive_range("speed_range", self.speed_range)?;
        if self.width == 0 || self.height == 0 || self.n_frames == 0 {
            return Err(Error::param("dimensions", "width, height and n_frames must be positive"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::param("noise_sigma", "must be non-negative"));
        }
        if !(self.texture_amplitude >= 0.0) {
            return Err(Error::param("texture_amplitude", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.low_contrast_fraction) {
            return Err(Error::param("low_contrast_fraction", "must lie in [0, 1]"));
        }
        let half = self.width.min(self.height) as f64 / 2.0;
        if self.cell_radius_range.1 >= half {
            return Err(Error::param(
                "cell_radius_range",
                format!("radius {} exceeds image half-size {half}", self.cell_radius_range.1),
            ));
        }
        Ok(())
    }

    /// Flat `key=value` form, one entry per line.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.kv_pairs() {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    fn kv_pairs(&self) -> BTreeMap<&'static str, String> {
        let range = |(a, b): (f64, f64)| format!("{a},{b}");
        BTreeMap::from([
            ("cells", self.n_cells.to_string()),
            ("radius", range(self.cell_radius_range)),
            ("contrast", range(self.contrast_range)),
            ("speed", range(self.speed_range)),
            ("noise_sigma", self.noise_sigma.to_string()),
            ("frames", self.n_frames.to_string()),
            ("width", self.width.to_string()),
            ("height", self.height.to_string()),
            ("seed", self.seed.to_string()),
            ("depth", self.depth.bits().to_string()),
            ("low_contrast_fraction", self.low_contrast_fraction.to_string()),
            ("background", self.background_level.to_string()),
            ("gradient", self.gradient_amplitude.to_string()),
            ("texture", self.texture_amplitude.to_string()),
            ("frame_interval", self.frame_interval.to_string()),
        ])
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &'static str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::param(key, format!("cannot parse `{v}`")))
        }
        fn range(key: &'static str, v: &str) -> Result<(f64, f64)> {
            let (a, b) = v
                .split_once(',')
                .ok_or_else(|| Error::param(key, format!("expected `min,max`, got `{v}`")))?;
            Ok((num(key, a)?, num(key, b)?))
        }
        match key.trim() {
            "cells" => self.n_cells = num("cells", value)?,
            "radius" => self.cell_radius_range = range("radius", value)?,
            "contrast" => self.contrast_range = range("contrast", value)?,
            "speed" => self.speed_range = range("speed", value)?,
            "noise_sigma" => self.noise_sigma = num("noise_sigma", value)?,
            "frames" => self.n_frames = num("frames", value)?,
            "width" => self.width = num("width", value)?,
            "height" => self.height = num("height", value)?,
            "seed" => self.seed = num("seed", value)?,
            "depth" => self.depth = BitDepth::from_bits(num("depth", value)?)?,
            "low_contrast_fraction" => {
                self.low_contrast_fraction = num("low_contrast_fraction", value)?
            }
            "background" => self.background_level = num("background", value)?,
            "gradient" => self.gradient_amplitude = num("gradient", value)?,
            "texture" => self.texture_amplitude = num("texture", value)?,
            "frame_interval" => self.frame_interval = num("frame_interval", value)?,
            other => return Err(Error::param("synthetic", format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut spec = SyntheticSpec::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::param("synthetic", format!("expected key=value, got `{line}`")))?;
            spec.set(k, v)?;
        }
        Ok(spec)
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Renders the sequence and its ground truth. Pure in `spec`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Sequence, GroundTruth)> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let turn = Normal::new(0.0, 0.5).expect("valid sigma");

    let n_low = (spec.low_contrast_fraction * spec.n_cells as f64).round() as usize;
    let mut cells = Vec::with_capacity(spec.n_cells);
    for id in 0..spec.n_cells {
        let radius = uniform(&mut rng, spec.cell_radius_range);
        let low_contrast = id >= spec.n_cells - n_low;
        let contrast = if low_contrast {
            // peak at most 1.5x the noise level
            let s = spec.noise_sigma.max(1.0);
            uniform(&mut rng, (0.75 * s, 1.5 * s))
        } else {
            uniform(&mut rng, spec.contrast_range)
        };
        let speed = uniform(&mut rng, spec.speed_range);
        let (lo_x, hi_x) = (radius, w as f64 - 1.0 - radius);
        let (lo_y, hi_y) = (radius, h as f64 - 1.0 - radius);
        let mut x = uniform(&mut rng, (lo_x, hi_x));
        let mut y = uniform(&mut rng, (lo_y, hi_y));
        let mut heading = rng.random_range(0.0..std::f64::consts::TAU);
        let mut points = Vec::with_capacity(spec.n_frames);
        for frame in 0..spec.n_frames {
            points.push(TrackPoint { frame, x, y, radius });
            heading += turn.sample(&mut rng);
            x += speed * heading.cos();
            y += speed * heading.sin();
            if x < lo_x || x > hi_x {
                x = reflect(x, lo_x, hi_x);
                heading = std::f64::consts::PI - heading;
            }
            if y < lo_y || y > hi_y {
                y = reflect(y, lo_y, hi_y);
                heading = -heading;
            }
        }
        cells.push(CellTrack {
            id,
            radius,
            contrast,
            low_contrast,
            points,
        });
    }

    let scale = spec.depth.max_value() as f64 / 255.0;
    let max = spec.depth.max_value() as f64;
    let noise = Normal::new(0.0, spec.noise_sigma.max(0.0)).expect("valid sigma");
    // illumination without texture; cells sit `contrast` above it
    let cell_base: Vec<f64> = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            spec.background_level + spec.gradient_amplitude * 0.5 * (x / w as f64 + y / h as f64)
        })
        .collect();
    let background: Vec<f64> = {
        let texture = (spec.texture_amplitude > 0.0).then(|| {
            let t = textured_plane(w, h, spec.seed ^ 0x7e57_u64.rotate_left(32));
            let n = t.data.len() as f64;
            let mean = t.data.iter().sum::<f64>() / n;
            let sd = (t.data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            t.map(|v| (v - mean) / sd)
        });
        (0..w * h)
            .map(|i| {
                let tex = texture.as_ref().map_or(0.0, |t| t.data[i]);
                cell_base[i] + spec.texture_amplitude * tex
            })
            .collect()
    };
    let mut frames = Vec::with_capacity(spec.n_frames);
    let mut masks = Vec::with_capacity(spec.n_frames);
    for t in 0..spec.n_frames {
        let mut frame_rng = ChaCha8Rng::seed_from_u64(spec.seed);
        frame_rng.set_stream(t as u64 + 1);
        let mut acc = background.clone();
        let mut mask = RoiMask::empty(w, h);
        for cell in &cells {
            let p = cell.points[t];
            let sigma = p.radius / 2.0;
            // render out to 1.5 radii so the profile tail is not clipped
            for (x, y) in disk_pixels(p.x, p.y, 1.5 * p.radius, w, h) {
                let (dx, dy) = (x as f64 - p.x, y as f64 - p.y);
                // the cell covers the background in proportion to its profile
                let a = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
                let v = &mut acc[y * w + x];
                *v = (1.0 - a) * *v + a * (cell_base[y * w + x] + cell.contrast);
            }
            for (x, y) in cell.footprint(t, w, h) {
                mask.set(x, y, true);
            }
        }
        let pixels = acc
            .into_iter()
            .map(|v| {
                let n = if spec.noise_sigma > 0.0 {
                    noise.sample(&mut frame_rng)
                } else {
                    0.0
                };
                ((v + n) * scale).round().clamp(0.0, max) as u16
            })
            .collect();
        frames.push(Frame::from_parts(w, h, spec.depth, pixels));
        masks.push(mask);
    }

    let truth = GroundTruth {
        width: w,
        height: h,
        masks,
        cells,
        noise_sigma: spec.noise_sigma,
    };
    Ok((Sequence::new(frames, spec.frame_interval)?, truth))
}

fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
    let r = if v < lo { 2.0 * lo - v } else { 2.0 * hi - v };
    r.clamp(lo, hi)
}

/// Smooth random texture in `[0, 1]`, mixing two spatial scales.
pub fn textured_plane(width: usize, height: usize, seed: u64) -> Plane<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let white = Plane::from_fn(width, height, |_, _| rng.random::<f64>());
    let fine = gaussian_blur(&white, 1.5);
    let coarse = gaussian_blur(&white, 5.0);
    let mixed: Vec<f64> = fine
        .data
        .iter()
        .zip(&coarse.data)
        .map(|(&a, &b)| a + 2.0 * b)
        .collect();
    let lo = mixed.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = mixed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Plane {
        width,
        height,
        data: mixed.into_iter().map(|v| (v - lo) / (hi - lo)).collect(),
    }
}

/// A window of `texture` starting at `(x0, y0)`, quantized to `depth`.
pub fn crop_frame(texture: &Plane<f64>, x0: usize, y0: usize, width: usize, height: usize, depth: BitDepth) -> Frame {
    let window = Plane::from_fn(width, height, |x, y| texture.at(x0 + x, y0 + y));
    Frame::from_plane(&window, depth)
}
