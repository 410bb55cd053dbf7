use crate::frame::Plane;
use crate::mask::RoiMask;
use crate::scalar::Real;

/// Selects the top `roi_threshold` fraction of the map.
///
/// Exactly `round(roi_threshold · n)` pixels are marked: every pixel above
/// the boundary value, then pixels equal to it in row-major order until the
/// count is met.
pub fn threshold_mask<T: Real>(map: &Plane<T>, roi_threshold: f64) -> RoiMask {
    let n = map.data.len();
    let k = ((roi_threshold * n as f64).round() as usize).min(n);
    let mut mask = RoiMask::empty(map.width, map.height);
    if k == 0 {
        return mask;
    }
    let mut sorted = map.data.clone();
    let (_, &mut boundary, _) =
        sorted.select_nth_unstable_by(k - 1, |a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let above = map.data.iter().filter(|&&v| v > boundary).count();
    let mut ties_left = k - above;
    for (bit, &v) in mask.bits_mut().iter_mut().zip(&map.data) {
        if v > boundary {
            *bit = true;
        } else if v == boundary && ties_left > 0 {
            *bit = true;
            ties_left -= 1;
        }
    }
    mask
}
