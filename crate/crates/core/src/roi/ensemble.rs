use crate::mask::RoiMask;

/// Union of the masks within `k` frames of `center`, clipped to the sequence.
pub fn temporal_ensemble(masks: &[RoiMask], center: usize, k: usize) -> RoiMask {
    let lo = center.saturating_sub(k);
    let hi = (center + k).min(masks.len() - 1);
    let mut out = masks[center].clone();
    for m in &masks[lo..=hi] {
        out.union_with(m);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(x: usize) -> RoiMask {
        RoiMask::from_fn(12, 4, |px, py| px == x && py == 1)
    }

    #[test]
    fn k_zero_is_identity() {
        let masks = vec![dot(1), dot(5), dot(9)];
        assert_eq!(temporal_ensemble(&masks, 1, 0), masks[1]);
    }

    #[test]
    fn union_of_neighbors_and_clipping() {
        let masks = vec![dot(1), dot(5), dot(9)];
        let u = temporal_ensemble(&masks, 1, 1);
        assert!(u.get(1, 1) && u.get(5, 1) && u.get(9, 1));
        let edge = temporal_ensemble(&masks, 0, 1);
        assert_eq!(edge.count(), 2);
    }

    #[test]
    fn monotone_in_k() {
        let masks: Vec<RoiMask> = (0..6).map(|i| dot(i * 2)).collect();
        for c in 0..6 {
            for k in 0..4 {
                assert!(temporal_ensemble(&masks, c, k).is_subset_of(&temporal_ensemble(&masks, c, k + 1)));
            }
        }
    }
}
