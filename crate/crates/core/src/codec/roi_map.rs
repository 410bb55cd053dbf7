//! Propagation of a pixel mask to the wavelet subbands.

use crate::mask::RoiMask;

use super::dwt::{level_dims, SubbandKind};

/// Half-length of the 5/3 synthesis filters; every subband mask is dilated by it.
pub const SYNTHESIS_HALF_LENGTH: usize = 2;

fn downsample_any(bits: &[bool], w: usize, h: usize) -> Vec<bool> {
    let (nw, nh) = (w.div_ceil(2), h.div_ceil(2));
    let mut out = vec![false; nw * nh];
    for y in 0..h {
        for x in 0..w {
            if bits[y * w + x] {
                out[(y / 2) * nw + x / 2] = true;
            }
        }
    }
    out
}

fn dilate_square(bits: &[bool], w: usize, h: usize, r: usize) -> Vec<bool> {
    let m = RoiMask::new(w, h, bits.to_vec()).expect("sized");
    crate::roi::dilate(&m, r).bits().to_vec()
}

/// Per-subband RoI flags, in the coarse-to-fine band order of
/// [`SubbandGrid`](super::dwt::SubbandGrid).
///
/// At each level the previous level's (undilated) mask is reduced 2:1 with
/// an any-of-four rule and then dilated by the synthesis half-length, so
/// every coefficient whose reconstruction footprint reaches an RoI pixel is
/// flagged.
pub fn map_mask_to_subbands(mask: &RoiMask, levels: u8) -> Vec<Vec<bool>> {
    let (width, height) = mask.dims();
    let dims = level_dims(width, height, levels);
    let mut reduced = vec![mask.bits().to_vec()];
    for l in 0..levels as usize {
        let (w, h) = dims[l];
        let next = downsample_any(reduced.last().unwrap(), w, h);
        reduced.push(next);
    }
    let dilated: Vec<Vec<bool>> = (0..=levels as usize)
        .map(|l| {
            let (w, h) = dims[l];
            dilate_square(&reduced[l], w, h, SYNTHESIS_HALF_LENGTH)
        })
        .collect();

    let crop = |l: usize, bw: usize, bh: usize| -> Vec<bool> {
        let (w, _) = dims[l];
        let src = &dilated[l];
        let mut out = Vec::with_capacity(bw * bh);
        for y in 0..bh {
            out.extend_from_slice(&src[y * w..y * w + bw]);
        }
        out
    };

    let mut bands = Vec::with_capacity(1 + 3 * levels as usize);
    let (lw, lh) = dims[levels as usize];
    bands.push(crop(levels as usize, lw, lh));
    for level in (1..=levels as usize).rev() {
        let (w, h) = dims[level - 1];
        for kind in [SubbandKind::HL, SubbandKind::LH, SubbandKind::HH] {
            let (bw, bh) = match kind {
                SubbandKind::HL => (w / 2, h.div_ceil(2)),
                SubbandKind::LH => (w.div_ceil(2), h / 2),
                _ => (w / 2, h / 2),
            };
            bands.push(crop(level, bw, bh));
        }
    }
    bands
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::dwt::{dwt_forward_samples, dwt_inverse_samples};

    #[test]
    fn empty_and_full_masks_propagate() {
        for levels in 1..=3 {
            let e = map_mask_to_subbands(&RoiMask::empty(37, 20), levels);
            assert!(e.iter().all(|b| b.iter().all(|&v| !v)));
            let f = map_mask_to_subbands(&RoiMask::full(37, 20), levels);
            assert!(f.iter().all(|b| b.iter().all(|&v| v)));
            assert_eq!(e.iter().map(Vec::len).sum::<usize>(), 37 * 20);
        }
    }

    #[test]
    fn single_pixel_marks_dilated_neighborhood() {
        let mut m = RoiMask::empty(32, 32);
        m.set(13, 9, true);
        let bands = map_mask_to_subbands(&m, 1);
        // LL at level 1 is 16x16; (13, 9) reduces to (6, 4)
        let ll = &bands[0];
        for y in 0..16 {
            for x in 0..16 {
                let inside = (4..=8).contains(&x) && (2..=6).contains(&y);
                assert_eq!(ll[y * 16 + x], inside, "({x}, {y})");
            }
        }
    }

    /// Brute force: a coefficient whose impulse response reaches an RoI pixel must be flagged.
    #[test]
    fn flags_cover_every_contributing_coefficient() {
        let (w, h) = (24usize, 20usize);
        for levels in 1..=3u8 {
            for &(px, py) in &[(0usize, 0usize), (11, 7), (23, 19), (6, 13)] {
                let mut m = RoiMask::empty(w, h);
                m.set(px, py, true);
                let flags = map_mask_to_subbands(&m, levels);
                let template = dwt_forward_samples(&vec![0; w * h], w, h, levels).unwrap();
                for (b, band) in template.bands.iter().enumerate() {
                    for i in 0..band.data.len() {
                        let mut g = template.clone();
                        g.bands[b].data[i] = 64;
                        let rec = dwt_inverse_samples(&g);
                        if rec[py * w + px] != 0 {
                            assert!(flags[b][i], "levels {levels}, band {b}, coeff {i}");
                        }
                    }
                }
            }
        }
    }

    /// Keeping only flagged coefficients reconstructs the RoI pixel exactly.
    #[test]
    fn roi_only_decoding_is_exact_at_roi() {
        let (w, h) = (32usize, 32usize);
        let samples: Vec<i32> = (0..w * h).map(|i| ((i * 7919) % 251) as i32).collect();
        for levels in 1..=3u8 {
            let mut m = RoiMask::empty(w, h);
            m.set(17, 12, true);
            let flags = map_mask_to_subbands(&m, levels);
            let mut g = dwt_forward_samples(&samples, w, h, levels).unwrap();
            for (band, f) in g.bands.iter_mut().zip(&flags) {
                for (c, &keep) in band.data.iter_mut().zip(f) {
                    if !keep {
                        *c = 0;
                    }
                }
            }
            let rec = dwt_inverse_samples(&g);
            assert_eq!(rec[12 * w + 17], samples[12 * w + 17]);
            // errors only show up well away from the RoI pixel
            for y in 0..h {
                for x in 0..w {
                    if rec[y * w + x] != samples[y * w + x] {
                        let d = (x as isize - 17).abs().max((y as isize - 12).abs());
                        assert!(d >= 2, "error at distance {d}");
                    }
                }
            }
        }
    }
}
