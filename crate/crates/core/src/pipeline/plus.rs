//! Second layer: the Plus-filter.
//!
//! The radius-3 ring is split into recent and old pixels by the longest
//! newest arc (see [`newest_arc`]) of at most [`MAX_ARC`] pixels. Walking
//! clockwise from the newest pixel, ring positions 2, 6, 10 and 14 are
//! sampled. The event is a corner candidate when exactly one or exactly three
//! samples are recent. A straight edge puts half the ring in the recent arc
//! and always splits the samples two against two.

use crate::event::{circle_timestamps, newest_arc, Event, Micros, SaeMap, CIRCLE3};

/// 1-based ring positions sampled relative to the newest pixel.
pub const GAMMA: [usize; 4] = [2, 6, 10, 14];

/// Longest arc accepted as the recent part of the ring.
pub const MAX_ARC: usize = 7;

/// Events closer than this to the sensor edge are rejected.
pub const BORDER: u32 = 4;

/// Ring pixels in the recent arc, or `None` when no arc qualifies.
pub fn recent_mask(ring: &[Micros; 16]) -> Option<[bool; 16]> {
    let (order, lengths) = newest_arc(ring);
    let len = (1..=MAX_ARC).rev().find(|&l| lengths & (1 << l) != 0)?;
    let mut recent = [false; 16];
    for &i in &order[..len] {
        recent[i] = true;
    }
    Some(recent)
}

pub fn plus_decision(ring: &[Micros; 16]) -> bool {
    let Some(recent) = recent_mask(ring) else {
        return false;
    };
    let start = newest_arc(ring).0[0];
    let hits = GAMMA
        .iter()
        .filter(|&&p| recent[(start + p - 1) % 16])
        .count();
    hits == 1 || hits == 3
}

/// `esae` must be the enhanced surface matching `e.pol`, already holding `e`.
pub fn plus_filter(esae: &SaeMap, e: &Event) -> bool {
    if esae.geometry().border_distance(e.u, e.v) < BORDER {
        return false;
    }
    let ring = circle_timestamps(esae, (e.u, e.v), &CIRCLE3);
    plus_decision(&ring)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{Polarity, SensorGeometry, NEVER};
    use proptest::prelude::*;

    /// Brute force: the longest contiguous run of at most `MAX_ARC` pixels
    /// that holds a newest pixel and is strictly newer than the rest.
    fn oracle_decision(ring: &[Micros; 16]) -> bool {
        let max = *ring.iter().max().unwrap();
        let start = (0..16).find(|&i| ring[i] == max).unwrap();
        for len in (1..=MAX_ARC).rev() {
            for s in 0..16 {
                let inside: Vec<usize> = (0..len).map(|k| (s + k) % 16).collect();
                let min_in = inside.iter().map(|&i| ring[i]).min().unwrap();
                let max_out = (0..16)
                    .filter(|i| !inside.contains(i))
                    .map(|i| ring[i])
                    .max()
                    .unwrap();
                if min_in > max_out && inside.contains(&start) {
                    let hits = GAMMA
                        .iter()
                        .filter(|&&p| inside.contains(&((start + p - 1) % 16)))
                        .count();
                    return hits == 1 || hits == 3;
                }
            }
        }
        false
    }

    fn rotate(ring: &[Micros; 16], k: usize) -> [Micros; 16] {
        std::array::from_fn(|i| ring[(i + 16 - k) % 16])
    }

    #[test]
    fn unset_ring_is_rejected() {
        assert!(!plus_decision(&[NEVER; 16]));
        assert_eq!(recent_mask(&[NEVER; 16]), None);
    }

    #[test]
    fn four_pixel_corner_arc_in_every_rotation() {
        let mut base = [NEVER; 16];
        for (i, t) in [100, 110, 120, 130].into_iter().enumerate() {
            base[i] = t;
        }
        for k in 0..16 {
            let ring = rotate(&base, k);
            assert!(oracle_decision(&ring), "oracle rotation {k}");
            assert!(plus_decision(&ring), "rotation {k}");
        }
        // newest in the middle of the arc
        let mut mid = [1; 16];
        mid[5] = 120;
        mid[6] = 130;
        mid[7] = 125;
        mid[8] = 110;
        assert_eq!(recent_mask(&mid).unwrap().iter().filter(|&&r| r).count(), 4);
        for k in 0..16 {
            assert!(plus_decision(&rotate(&mid, k)));
        }
    }

    #[test]
    fn equal_wide_arc_has_no_qualifying_split() {
        // 12 equally recent pixels: no arc of at most MAX_ARC is strictly newer
        let mut ring = [0; 16];
        for t in ring.iter_mut().take(12) {
            *t = 1000;
        }
        for k in 0..16 {
            let r = rotate(&ring, k);
            assert!(!oracle_decision(&r));
            assert!(!plus_decision(&r), "rotation {k}");
        }
    }

    #[test]
    fn straight_edges_past_the_centre_are_rejected() {
        // edge through (or just past) the centre, moving along its normal;
        // pixels behind it fired earlier the further back they are
        for deg in (0..360).step_by(5) {
            let (ny, nx) = (deg as f64).to_radians().sin_cos();
            for offset in [-0.75, -0.5, -0.25, -0.1] {
                let ring = CIRCLE3.map(|(du, dv)| {
                    let d = du as f64 * nx + dv as f64 * ny + offset;
                    if d <= 0.0 {
                        1000 + (100.0 * d).round() as i64
                    } else {
                        NEVER
                    }
                });
                assert!(!oracle_decision(&ring), "{deg} {offset}");
                assert!(!plus_decision(&ring), "{deg} {offset}");
            }
        }
    }

    #[test]
    fn border_events_rejected() {
        let g = SensorGeometry::default();
        let mut m = SaeMap::new(g);
        for (i, &(du, dv)) in CIRCLE3.iter().enumerate().take(4) {
            m.set(3 + du as i64, 3 + dv as i64, 10 + i as i64).ok();
        }
        assert!(!plus_filter(&m, &Event::new(3, 3, Polarity::Pos, 100)));
        let mut m = SaeMap::new(g);
        for (i, &(du, dv)) in CIRCLE3.iter().enumerate().take(4) {
            m.set(50 + du as i64, 50 + dv as i64, 10 + i as i64)
                .unwrap();
        }
        assert!(plus_filter(&m, &Event::new(50, 50, Polarity::Pos, 100)));
    }

    proptest! {
        #[test]
        fn matches_oracle(ring in prop::array::uniform16(0i64..6)) {
            prop_assert_eq!(plus_decision(&ring), oracle_decision(&ring));
        }

        #[test]
        fn matches_oracle_distinct(perm in Just((0i64..16).collect::<Vec<_>>()).prop_shuffle()) {
            let ring: [Micros; 16] = std::array::from_fn(|i| perm[i]);
            prop_assert_eq!(plus_decision(&ring), oracle_decision(&ring));
        }

        #[test]
        fn depends_only_on_order(
            ring in prop::array::uniform16(0i64..1000),
            scale in 1i64..50,
            shift in -10_000i64..10_000,
        ) {
            // strictly increasing map, including a non-linear term
            let remapped: [Micros; 16] = ring.map(|t| scale * t + t * t + shift);
            prop_assert_eq!(plus_decision(&ring), plus_decision(&remapped));
        }
    }
}
