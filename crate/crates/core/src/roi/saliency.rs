use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::frame::Plane;
use crate::scalar::Real;

/// Lower and upper percentiles used for robust normalization.
pub const NORM_LOW_PERCENTILE: f64 = 0.01;
pub const NORM_HIGH_PERCENTILE: f64 = 0.99;

/// Source of the spatial-gradient term of the saliency map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientSource {
    /// Intensity gradient of the current frame.
    #[default]
    Image,
    /// Spatial gradient of the flow field.
    Flow,
}

/// Scope over which saliency terms are normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    Frame,
    Sequence,
}

/// Motion-saliency scores in `[0, 1]`.
pub type SaliencyMap<T> = Plane<T>;

/// Percentile-clamp mapping to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Normalizer<T> {
    /// Fits the 1st/99th percentiles of `values`. When those coincide the
    /// maximum takes the place of the upper percentile, so a small active
    /// region on a flat background still normalizes to a nonzero map.
    pub fn fit(values: &[T]) -> Self {
        if values.is_empty() {
            return Self {
                lo: T::zero(),
                hi: T::zero(),
            };
        }
        let mut sorted = values.to_vec();
        let rank = |q: f64| ((q * (sorted.len() - 1) as f64).round() as usize).min(sorted.len() - 1);
        let (lo_i, hi_i) = (rank(NORM_LOW_PERCENTILE), rank(NORM_HIGH_PERCENTILE));
        let lo = *sorted.select_nth_unstable_by(lo_i, |a, b| a.partial_cmp(b).unwrap()).1;
        let mut hi = *sorted.select_nth_unstable_by(hi_i, |a, b| a.partial_cmp(b).unwrap()).1;
        if hi <= lo {
            hi = values.iter().copied().fold(lo, T::max);
        }
        Self { lo, hi }
    }

    pub fn fit_many<'a>(planes: impl IntoIterator<Item = &'a Plane<T>>) -> Self {
        let all: Vec<T> = planes.into_iter().flat_map(|p| p.data.iter().copied()).collect();
        Self::fit(&all)
    }

    /// Constant inputs carry no contrast and normalize to all zeros.
    pub fn is_degenerate(&self) -> bool {
        !(self.hi > self.lo)
    }

    pub fn apply(&self, v: T) -> T {
        if self.is_degenerate() {
            return T::zero();
        }
        ((v - self.lo) / (self.hi - self.lo)).max(T::zero()).min(T::one())
    }

    pub fn apply_plane(&self, p: &Plane<T>) -> Plane<T> {
        p.map(|v| self.apply(v))
    }
}

/// Central-difference gradient magnitude with edge replication.
pub fn gradient_magnitude<T: Real>(p: &Plane<T>) -> Plane<T> {
    let half = T::lit(0.5);
    Plane::from_fn(p.width, p.height, |x, y| {
        let (xi, yi) = (x as isize, y as isize);
        let gx = (p.at_clamped(xi + 1, yi) - p.at_clamped(xi - 1, yi)) * half;
        let gy = (p.at_clamped(xi, yi + 1) - p.at_clamped(xi, yi - 1)) * half;
        (gx * gx + gy * gy).sqrt()
    })
}

fn flow_gradient_magnitude<T: Real>(flow: &FlowField<T>) -> Plane<T> {
    let u = Plane {
        width: flow.width,
        height: flow.height,
        data: flow.vectors.iter().map(|v| v[0]).collect(),
    };
    let v = Plane {
        width: flow.width,
        height: flow.height,
        data: flow.vectors.iter().map(|v| v[1]).collect(),
    };
    let (gu, gv) = (gradient_magnitude(&u), gradient_magnitude(&v));
    Plane {
        width: flow.width,
        height: flow.height,
        data: gu
            .data
            .iter()
            .zip(&gv.data)
            .map(|(&a, &b)| (a * a + b * b).sqrt())
            .collect(),
    }
}

/// Unnormalized saliency terms: flow magnitude and spatial-gradient magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyTerms<T> {
    pub motion: Plane<T>,
    pub gradient: Plane<T>,
}

pub fn saliency_terms<T: Real>(
    flow: &FlowField<T>,
    frame: &Plane<T>,
    source: GradientSource,
) -> Result<SaliencyTerms<T>> {
    if (flow.width, flow.height) != (frame.width, frame.height) {
        return Err(Error::DimensionMismatch {
            expected: (frame.width, frame.height),
            got: (flow.width, flow.height),
        });
    }
    let gradient = match source {
        GradientSource::Image => gradient_magnitude(frame),
        GradientSource::Flow => flow_gradient_magnitude(flow),
    };
    Ok(SaliencyTerms {
        motion: flow.magnitude(),
        gradient,
    })
}

/// `w·N(motion) + (1 − w)·N(gradient)` with the given normalizers.
pub fn fuse<T: Real>(
    terms: &SaliencyTerms<T>,
    motion_norm: &Normalizer<T>,
    gradient_norm: &Normalizer<T>,
    flow_weight: T,
) -> SaliencyMap<T> {
    let rest = T::one() - flow_weight;
    Plane {
        width: terms.motion.width,
        height: terms.motion.height,
        data: terms
            .motion
            .data
            .iter()
            .zip(&terms.gradient.data)
            .map(|(&m, &g)| flow_weight * motion_norm.apply(m) + rest * gradient_norm.apply(g))
            .collect(),
    }
}

/// Per-frame motion saliency from a flow field and the frame it is anchored on.
pub fn saliency<T: Real>(flow: &FlowField<T>, frame: &Plane<T>, flow_weight: T) -> Result<SaliencyMap<T>> {
    let terms = saliency_terms(flow, frame, GradientSource::Image)?;
    let mn = Normalizer::fit(&terms.motion.data);
    let gn = Normalizer::fit(&terms.gradient.data);
    Ok(fuse(&terms, &mn, &gn, flow_weight))
}
