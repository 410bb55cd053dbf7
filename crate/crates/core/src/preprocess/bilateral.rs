use rayon::prelude::*;

use crate::frame::Frame;

/// Edge-preserving bilateral filter. The range kernel is evaluated on
/// intensities normalized by the depth's maximum value.
pub fn bilateral(frame: &Frame, radius: usize, sigma_spatial: f64, sigma_range: f64) -> Frame {
    let (w, h) = frame.dims();
    let max = frame.depth().max_value() as usize;
    let src = frame.pixels();
    let r = radius as isize;
    let side = 2 * radius + 1;

    let spatial: Vec<f32> = (0..side * side)
        .map(|i| {
            let dx = (i % side) as f64 - radius as f64;
            let dy = (i / side) as f64 - radius as f64;
            (-(dx * dx + dy * dy) / (2.0 * sigma_spatial * sigma_spatial)).exp() as f32
        })
        .collect();
    // range weight indexed by absolute intensity difference
    let range: Vec<f32> = (0..=max)
        .map(|d| {
            let dn = d as f64 / max as f64;
            (-(dn * dn) / (2.0 * sigma_range * sigma_range)).exp() as f32
        })
        .collect();

    let mut out = vec![0u16; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let center = src[y * w + x];
            let mut num = 0.0f32;
            let mut den = 0.0f32;
            let mut k = 0;
            for dy in -r..=r {
                let yy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                let line = &src[yy * w..(yy + 1) * w];
                for dx in -r..=r {
                    let xx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                    let v = line[xx];
                    let wt = spatial[k] * range[v.abs_diff(center) as usize];
                    num += wt * v as f32;
                    den += wt;
                    k += 1;
                }
            }
            *o = (num / den).round().clamp(0.0, max as f32) as u16;
        }
    });
    Frame::from_parts(w, h, frame.depth(), out)
}
