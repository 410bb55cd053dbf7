//! Dense two-frame optical flow by polynomial expansion (Farnebäck), run
//! coarse-to-fine over a Gaussian pyramid.

mod poly;

pub use poly::{polynomial_expansion, PolyCoeffs, Quadratic};

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{box_mean, gaussian_blur};
use crate::frame::Plane;
use crate::scalar::Real;

/// Smallest pyramid level side, in pixels.
pub const MIN_LEVEL_SIZE: usize = 32;
const PYRAMID_SIGMA: f64 = 1.0;
const SINGULAR_RATIO: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub pyramid_levels: usize,
    pub pyramid_scale: f64,
    pub window_size: usize,
    pub iterations: usize,
    pub poly_n: usize,
    pub poly_sigma: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            pyramid_levels: 3,
            pyramid_scale: 0.5,
            window_size: 15,
            iterations: 3,
            poly_n: 5,
            poly_sigma: 1.1,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        if self.window_size < 3 || self.window_size % 2 == 0 {
            return Err(Error::param("window_size", "must be odd and >= 3"));
        }
        if self.poly_n < 3 || self.poly_n % 2 == 0 {
            return Err(Error::param("poly_n", "must be odd and >= 3"));
        }
        if self.pyramid_levels < 1 {
            return Err(Error::param("pyramid_levels", "must be >= 1"));
        }
        if !(self.pyramid_scale > 0.0 && self.pyramid_scale < 1.0) {
            return Err(Error::param("pyramid_scale", "must lie in (0, 1)"));
        }
        if !(self.poly_sigma > 0.0) {
            return Err(Error::param("poly_sigma", "must be > 0"));
        }
        Ok(())
    }

    /// Pixels this close to the border are computed but not trusted.
    pub fn border_margin(&self) -> usize {
        self.poly_n
    }
}

/// Per-pixel displacement `(u, v)` in pixels, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField<T> {
    pub width: usize,
    pub height: usize,
    pub vectors: Vec<[T; 2]>,
}

impl<T: Real> FlowField<T> {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            vectors: vec![[T::zero(); 2]; width * height],
        }
    }

    pub fn at(&self, x: usize, y: usize) -> [T; 2] {
        self.vectors[y * self.width + x]
    }

    pub fn magnitude(&self) -> Plane<T> {
        Plane {
            width: self.width,
            height: self.height,
            data: self
                .vectors
                .iter()
                .map(|[u, v]| (*u * *u + *v * *v).sqrt())
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.vectors.iter().all(|[u, v]| u.is_finite() && v.is_finite())
    }

    /// Mean endpoint error against a constant displacement, ignoring `margin` border pixels.
    pub fn mean_endpoint_error(&self, truth: [T; 2], margin: usize) -> T {
        let mut sum = T::zero();
        let mut n = 0usize;
        for y in margin..self.height.saturating_sub(margin) {
            for x in margin..self.width.saturating_sub(margin) {
                let [u, v] = self.at(x, y);
                let (du, dv) = (u - truth[0], v - truth[1]);
                sum += (du * du + dv * dv).sqrt();
                n += 1;
            }
        }
        sum / T::from_usize_lossy(n.max(1))
    }

    /// Serializes as `FLO1`: magic, little-endian u32 width and height, then
    /// row-major `(u, v)` pairs as little-endian f32.
    pub fn write_flo(&self, mut out: impl Write) -> std::io::Result<()> {
        out.write_all(b"FLO1")?;
        out.write_all(&(self.width as u32).to_le_bytes())?;
        out.write_all(&(self.height as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.vectors.len() * 8);
        for [u, v] in &self.vectors {
            buf.extend_from_slice(&u.to_f32().unwrap_or(0.0).to_le_bytes());
            buf.extend_from_slice(&v.to_f32().unwrap_or(0.0).to_le_bytes());
        }
        out.write_all(&buf)
    }

    pub fn read_flo(mut input: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        input
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io("<flow>", e))?;
        if bytes.len() < 12 || &bytes[..4] != b"FLO1" {
            return Err(Error::CorruptStream("missing FLO1 magic".into()));
        }
        let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let need = 12 + width * height * 8;
        if bytes.len() < need {
            return Err(Error::TruncatedStream {
                expected: need,
                found: bytes.len(),
            });
        }
        let vectors = bytes[12..need]
            .chunks_exact(8)
            .map(|c| {
                let u = f32::from_le_bytes(c[..4].try_into().unwrap());
                let v = f32::from_le_bytes(c[4..].try_into().unwrap());
                [T::from_f32(u).unwrap(), T::from_f32(v).unwrap()]
            })
            .collect();
        Ok(Self {
            width,
            height,
            vectors,
        })
    }
}

/// One refinement of `prior` from the local polynomial models of both frames.
///
/// The next frame's coefficients are sampled at positions displaced by the
/// prior; the per-pixel systems `AᵀA δ = AᵀΔb` are averaged over a
/// `window_size` box and solved for the increment `δ`. Pixels whose averaged
/// system is near-singular keep the prior unchanged.
pub fn flow_step<T: Real>(
    prev: &PolyCoeffs<T>,
    next: &PolyCoeffs<T>,
    prior: &FlowField<T>,
    window_size: usize,
) -> FlowField<T> {
    let (w, h) = (prev.width, prev.height);
    let half = T::lit(0.5);
    // g11, g12, g22, h1, h2
    let mut terms: [Plane<T>; 5] = std::array::from_fn(|_| Plane::zeros(w, h));
    let per_pixel: Vec<[T; 5]> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let [u0, v0] = prior.vectors[i];
            let q1 = &prev.data[i];
            let (a2, b2) = next.sample(T::from_usize_lossy(x) + u0, T::from_usize_lossy(y) + v0);
            let a11 = (q1.a[0] + a2[0]) * half;
            let a12 = (q1.a[1] + a2[1]) * half;
            let a22 = (q1.a[2] + a2[2]) * half;
            let db1 = -(b2[0] - q1.b[0]) * half;
            let db2 = -(b2[1] - q1.b[1]) * half;
            [
                a11 * a11 + a12 * a12,
                a11 * a12 + a12 * a22,
                a12 * a12 + a22 * a22,
                a11 * db1 + a12 * db2,
                a12 * db1 + a22 * db2,
            ]
        })
        .collect();
    for (k, plane) in terms.iter_mut().enumerate() {
        for (dst, src) in plane.data.iter_mut().zip(&per_pixel) {
            *dst = src[k];
        }
    }
    drop(per_pixel);
    let avg: Vec<Plane<T>> = terms.iter().map(|p| box_mean(p, window_size)).collect();

    let ratio = T::lit(SINGULAR_RATIO);
    let vectors = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (g11, g12, g22) = (avg[0].data[i], avg[1].data[i], avg[2].data[i]);
            let (h1, h2) = (avg[3].data[i], avg[4].data[i]);
            let det = g11 * g22 - g12 * g12;
            let tr = (g11 + g22) * half;
            let [u0, v0] = prior.vectors[i];
            if !(tr > T::zero()) || !(det > ratio * tr * tr) {
                return [u0, v0];
            }
            let du = (g22 * h1 - g12 * h2) / det;
            let dv = (g11 * h2 - g12 * h1) / det;
            if du.is_finite() && dv.is_finite() {
                [u0 + du, v0 + dv]
            } else {
                [u0, v0]
            }
        })
        .collect();
    FlowField {
        width: w,
        height: h,
        vectors,
    }
}

fn resize<T: Real>(src: &Plane<T>, width: usize, height: usize) -> Plane<T> {
    let sx = T::from_usize_lossy(src.width) / T::from_usize_lossy(width);
    let sy = T::from_usize_lossy(src.height) / T::from_usize_lossy(height);
    let half = T::lit(0.5);
    Plane::from_fn(width, height, |x, y| {
        let fx = (T::from_usize_lossy(x) + half) * sx - half;
        let fy = (T::from_usize_lossy(y) + half) * sy - half;
        src.sample_bilinear(fx, fy)
    })
}

/// Level sizes from full resolution down, stopping at the minimum side.
fn level_sizes(width: usize, height: usize, params: &FlowParams) -> Vec<(usize, usize)> {
    let mut sizes = vec![(width, height)];
    while sizes.len() < params.pyramid_levels {
        let (w, h) = *sizes.last().unwrap();
        let nw = (w as f64 * params.pyramid_scale).floor() as usize;
        let nh = (h as f64 * params.pyramid_scale).floor() as usize;
        if nw.min(nh) < MIN_LEVEL_SIZE {
            break;
        }
        sizes.push((nw, nh));
    }
    sizes
}

fn pyramid<T: Real>(base: &Plane<T>, sizes: &[(usize, usize)]) -> Vec<Plane<T>> {
    let mut levels = vec![base.clone()];
    for &(w, h) in &sizes[1..] {
        let blurred = gaussian_blur(levels.last().unwrap(), PYRAMID_SIGMA);
        levels.push(resize(&blurred, w, h));
    }
    levels
}

fn upsample_flow<T: Real>(flow: &FlowField<T>, width: usize, height: usize) -> FlowField<T> {
    let su = T::from_usize_lossy(width) / T::from_usize_lossy(flow.width);
    let sv = T::from_usize_lossy(height) / T::from_usize_lossy(flow.height);
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
    let (u, v) = (resize(&u, width, height), resize(&v, width, height));
    FlowField {
        width,
        height,
        vectors: u
            .data
            .iter()
            .zip(&v.data)
            .map(|(&a, &b)| [a * su, b * sv])
            .collect(),
    }
}

/// Flow from `prev` to `next` on normalized planes: `prev(x) ≈ next(x + d(x))`.
pub fn compute_flow<T: Real>(prev: &Plane<T>, next: &Plane<T>, params: &FlowParams) -> Result<FlowField<T>> {
    params.validate()?;
    if (prev.width, prev.height) != (next.width, next.height) {
        return Err(Error::DimensionMismatch {
            expected: (prev.width, prev.height),
            got: (next.width, next.height),
        });
    }
    let sizes = level_sizes(prev.width, prev.height, params);
    let pa = pyramid(prev, &sizes);
    let pb = pyramid(next, &sizes);
    let mut flow: Option<FlowField<T>> = None;
    for level in (0..sizes.len()).rev() {
        let (w, h) = sizes[level];
        let mut current = match flow.take() {
            Some(f) => upsample_flow(&f, w, h),
            None => FlowField::zeros(w, h),
        };
        let ca = polynomial_expansion(&pa[level], params.poly_n, params.poly_sigma);
        let cb = polynomial_expansion(&pb[level], params.poly_n, params.poly_sigma);
        for _ in 0..params.iterations {
            current = flow_step(&ca, &cb, &current, params.window_size);
        }
        flow = Some(current);
    }
    Ok(flow.expect("at least one level"))
}
