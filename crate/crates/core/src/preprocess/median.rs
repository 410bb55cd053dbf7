use rayon::prelude::*;

use crate::frame::Frame;

/// Square-window median with edge replication.
pub fn median(frame: &Frame, radius: usize) -> Frame {
    let (w, h) = frame.dims();
    let src = frame.pixels();
    let r = radius as isize;
    let side = 2 * radius + 1;
    let mid = side * side / 2;
    let mut out = vec![0u16; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let mut window = Vec::with_capacity(side * side);
        for (x, o) in row.iter_mut().enumerate() {
            window.clear();
            for dy in -r..=r {
                let yy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                let line = &src[yy * w..(yy + 1) * w];
                for dx in -r..=r {
                    let xx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                    window.push(line[xx]);
                }
            }
            *o = *window.select_nth_unstable(mid).1;
        }
    });
    Frame::from_parts(w, h, frame.depth(), out)
}
