use std::collections::VecDeque;

use crate::mask::RoiMask;

/// Counts foreground pixels in a `(2r+1)`-wide window along rows or columns,
/// clipped to the image.
fn window_pass(mask: &[bool], w: usize, h: usize, r: usize, horizontal: bool, erode: bool) -> Vec<bool> {
    let mut out = vec![false; w * h];
    let (outer, inner) = if horizontal { (h, w) } else { (w, h) };
    let idx = |o: usize, i: usize| if horizontal { o * w + i } else { i * w + o };
    let mut prefix = vec![0usize; inner + 1];
    for o in 0..outer {
        for i in 0..inner {
            prefix[i + 1] = prefix[i] + mask[idx(o, i)] as usize;
        }
        for i in 0..inner {
            let lo = i.saturating_sub(r);
            let hi = (i + r).min(inner - 1);
            let count = prefix[hi + 1] - prefix[lo];
            out[idx(o, i)] = if erode { count == hi - lo + 1 } else { count > 0 };
        }
    }
    out
}

fn square_op(mask: &RoiMask, radius: usize, erode: bool) -> RoiMask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = mask.dims();
    let rows = window_pass(mask.bits(), w, h, radius, true, erode);
    let both = window_pass(&rows, w, h, radius, false, erode);
    RoiMask::new(w, h, both).expect("same dims")
}

/// Square-element erosion; pixels outside the image are ignored.
pub fn erode(mask: &RoiMask, radius: usize) -> RoiMask {
    square_op(mask, radius, true)
}

pub fn dilate(mask: &RoiMask, radius: usize) -> RoiMask {
    square_op(mask, radius, false)
}

/// 8-connected component labels (0 = background) and per-label areas
/// (index 0 unused).
pub fn label_components(mask: &RoiMask) -> (Vec<u32>, Vec<usize>) {
    let (w, h) = mask.dims();
    let bits = mask.bits();
    let mut labels = vec![0u32; w * h];
    let mut areas = vec![0usize];
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        let label = areas.len() as u32;
        let mut area = 0;
        labels[start] = label;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            area += 1;
            let (x, y) = ((p % w) as isize, (p / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let q = ny as usize * w + nx as usize;
                    if bits[q] && labels[q] == 0 {
                        labels[q] = label;
                        queue.push_back(q);
                    }
                }
            }
        }
        areas.push(area);
    }
    (labels, areas)
}

pub fn remove_small_components(mask: &RoiMask, min_area: usize) -> RoiMask {
    let (labels, areas) = label_components(mask);
    let bits = labels
        .iter()
        .map(|&l| l != 0 && areas[l as usize] >= min_area)
        .collect();
    RoiMask::new(mask.width(), mask.height(), bits).expect("same dims")
}

/// Opening, then closing, then removal of components smaller than `min_area`.
pub fn morph_cleanup(mask: &RoiMask, open_radius: usize, close_radius: usize, min_area: usize) -> RoiMask {
    let opened = dilate(&erode(mask, open_radius), open_radius);
    let closed = erode(&dilate(&opened, close_radius), close_radius);
    remove_small_components(&closed, min_area)
}
