//! Separable correlation helpers with edge replication.

use rayon::prelude::*;

use crate::frame::Plane;
use crate::scalar::Real;

/// Normalized 1D Gaussian kernel of half-width `radius`.
pub fn gaussian_kernel<T: Real>(sigma: f64, radius: usize) -> Vec<T> {
    let raw: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let x = i as f64 - radius as f64;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| T::lit(v / sum)).collect()
}

/// Correlates every row with `kernel` (centered), replicating edges.
pub fn correlate_rows<T: Real>(src: &Plane<T>, kernel: &[T]) -> Plane<T> {
    let (w, h) = (src.width, src.height);
    let r = (kernel.len() / 2) as isize;
    let mut out = Plane::zeros(w, h);
    out.data
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(y, row)| {
            let line = &src.data[y * w..(y + 1) * w];
            for (x, o) in row.iter_mut().enumerate() {
                let mut acc = T::zero();
                for (k, &kv) in kernel.iter().enumerate() {
                    let xi = (x as isize + k as isize - r).clamp(0, w as isize - 1) as usize;
                    acc += kv * line[xi];
                }
                *o = acc;
            }
        });
    out
}

/// Correlates every column with `kernel` (centered), replicating edges.
pub fn correlate_cols<T: Real>(src: &Plane<T>, kernel: &[T]) -> Plane<T> {
    let (w, h) = (src.width, src.height);
    let r = (kernel.len() / 2) as isize;
    let mut out = Plane::zeros(w, h);
    out.data
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(y, row)| {
            for (k, &kv) in kernel.iter().enumerate() {
                let yi = (y as isize + k as isize - r).clamp(0, h as isize - 1) as usize;
                let line = &src.data[yi * w..(yi + 1) * w];
                for (o, &v) in row.iter_mut().zip(line) {
                    *o += kv * v;
                }
            }
        });
    out
}

pub fn gaussian_blur<T: Real>(src: &Plane<T>, sigma: f64) -> Plane<T> {
    let radius = (3.0 * sigma).ceil().max(1.0) as usize;
    let k = gaussian_kernel::<T>(sigma, radius);
    correlate_cols(&correlate_rows(src, &k), &k)
}

/// Mean over a `size`x`size` window (size odd), replicating edges.
pub fn box_mean<T: Real>(src: &Plane<T>, size: usize) -> Plane<T> {
    let k = vec![T::one() / T::from_usize_lossy(size); size];
    correlate_cols(&correlate_rows(src, &k), &k)
}
