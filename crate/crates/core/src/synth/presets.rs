//! Named, seeded scenes covering slow/fast motion over low/high texture.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{regular_polygon, MotionSegment, Scene, SceneError, Shape, DEFAULT_CONTRAST};

pub const PRESET_NAMES: [&str; 4] = [
    "low-texture-slow",
    "low-texture-fast",
    "high-texture-slow",
    "high-texture-fast",
];

const DIAMOND: [(f64, f64); 4] = [
    (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    (-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    (-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    (FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
];

/// Closed diamond-shaped path of side `side` pixels at `speed`, repeated to
/// cover `duration`. Returns the segments and the start offset that centres
/// the path on the shape's nominal position.
fn diamond_path(
    side: f64,
    speed: f64,
    duration: f64,
    first: usize,
    spin: f64,
) -> (Vec<MotionSegment>, (f64, f64)) {
    let leg = side / speed;
    let legs = (duration / leg).ceil() as usize;
    let segs = (0..legs)
        .map(|i| {
            let d = DIAMOND[(first + i) % 4];
            MotionSegment {
                duration: leg,
                velocity: (d.0 * speed, d.1 * speed),
                // alternate the spin so orientation oscillates
                angular_velocity: if i % 2 == 0 { spin } else { -spin },
            }
        })
        .collect();
    // the path's vertices relative to its start, averaged
    let mut p = (0.0, 0.0);
    let mut sum = (0.0, 0.0);
    for k in 0..4 {
        sum = (sum.0 + p.0, sum.1 + p.1);
        let d = DIAMOND[(first + k) % 4];
        p = (p.0 + d.0 * side, p.1 + d.1 * side);
    }
    (segs, (-sum.0 / 4.0, -sum.1 / 4.0))
}

fn contrast(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let m = rng.gen_range(lo..hi);
    if rng.gen_bool(0.5) {
        m
    } else {
        -m
    }
}

fn low_texture(rng: &mut ChaCha8Rng, speed: f64, duration: f64, dt: f64) -> Scene {
    let side = rng.gen_range(64.0..76.0);
    let h = side / 2.0;
    let angle = rng.gen_range(-0.3..0.3);
    let (motion, offset) = diamond_path(30.0, speed, duration, rng.gen_range(0..4), 0.0);
    let center = (
        120.0 + rng.gen_range(-4.0..4.0),
        90.0 + rng.gen_range(-4.0..4.0),
    );
    Scene {
        shapes: vec![Shape {
            vertices: vec![(-h, -h), (h, -h), (h, h), (-h, h)],
            center: (center.0 + offset.0, center.1 + offset.1),
            angle,
            log_contrast: contrast(rng, 1.2, 1.6),
            motion,
        }],
        background: 1.0,
        duration,
        contrast_threshold: DEFAULT_CONTRAST,
        dt,
        noise_rate: 0.0,
        seed: rng.gen(),
    }
}

fn high_texture(rng: &mut ChaCha8Rng, speed: f64, spin: f64, duration: f64, dt: f64) -> Scene {
    let mut shapes = Vec::with_capacity(12);
    for row in 0..3 {
        for col in 0..4 {
            let n = rng.gen_range(3..=6);
            let r = rng.gen_range(12.0..17.0);
            let first = rng.gen_range(0..4);
            let s = if spin > 0.0 {
                spin * rng.gen_range(0.5..1.0)
            } else {
                0.0
            };
            let (motion, offset) = diamond_path(10.0, speed, duration, first, s);
            let center = (30.0 + 60.0 * col as f64, 30.0 + 60.0 * row as f64);
            shapes.push(Shape {
                vertices: regular_polygon(n, r, rng.gen_range(0.0..2.0 * PI / n as f64)),
                center: (center.0 + offset.0, center.1 + offset.1),
                angle: 0.0,
                log_contrast: contrast(rng, 0.9, 1.6),
                motion,
            });
        }
    }
    Scene {
        shapes,
        background: 1.0,
        duration,
        contrast_threshold: DEFAULT_CONTRAST,
        dt,
        noise_rate: 0.0,
        seed: rng.gen(),
    }
}

/// Builds a preset by name; the same seed always yields the same scene.
pub fn preset(name: &str, seed: u64) -> Result<Scene, SceneError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scene = match name {
        "low-texture-slow" => low_texture(&mut rng, 20.0, 36.0, 0.001),
        "low-texture-fast" => low_texture(&mut rng, 400.0, 1.5, 0.000_1),
        "high-texture-slow" => high_texture(&mut rng, 20.0, 0.0, 8.0, 0.001),
        "high-texture-fast" => high_texture(&mut rng, 400.0, 4.0, 0.6, 0.000_1),
        other => return Err(SceneError::UnknownPreset(other.to_string())),
    };
    Ok(scene)
}
