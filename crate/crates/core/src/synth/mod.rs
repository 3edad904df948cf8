//! Synthetic event-camera scenes: moving convex polygons over a uniform
//! background, rendered into DVS events with exact vertex trajectories.
//!
//! Intensities live in the log domain relative to the background: a shape's
//! `log_contrast` is `ln(I_shape / I_background)`. Pixel values composite
//! shapes in painter's order weighted by their area coverage.

mod presets;
mod raster;
mod render;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use presets::{preset, PRESET_NAMES};
pub use raster::{pixel_coverage, ConvexPolygon};
pub use render::{
    add_noise, pixel_value, render_events, verify_events, GroundTruthTrack, Rendered, TrackSample,
    Violation,
};

/// Default contrast threshold, log-intensity units.
pub const DEFAULT_CONTRAST: f64 = 0.25;

/// Maximum polygon vertex count.
pub const MAX_VERTICES: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("shape {0}: needs between 3 and {MAX_VERTICES} vertices")]
    VertexCount(usize),
    #[error("shape {0}: polygon is not strictly convex")]
    NotConvex(usize),
    #[error("shape {0}: non-finite value")]
    NonFinite(usize),
    #[error("shape {shape}: motion segment {segment} has negative or non-finite duration")]
    BadSegment { shape: usize, segment: usize },
    #[error("background intensity must be positive")]
    Background,
    #[error("contrast threshold must be positive")]
    Contrast,
    #[error("sampling step must be at least one microsecond")]
    Step,
    #[error("duration must be finite and non-negative")]
    Duration,
    #[error("noise rate must be finite and non-negative")]
    Noise,
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
}

/// Piece of a rigid trajectory with constant velocities.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionSegment {
    pub duration: f64,
    /// Pixels per second.
    pub velocity: (f64, f64),
    /// Radians per second, clockwise on screen (v grows downwards).
    #[serde(default)]
    pub angular_velocity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    /// Vertices relative to `center`, in pixels.
    pub vertices: Vec<(f64, f64)>,
    /// Position of the shape's origin at time zero, continuous sensor
    /// coordinates (pixel `u` spans `[u, u + 1)`).
    pub center: (f64, f64),
    #[serde(default)]
    pub angle: f64,
    pub log_contrast: f64,
    /// Applied in order; the shape rests once they run out.
    #[serde(default)]
    pub motion: Vec<MotionSegment>,
}

impl Shape {
    /// Position and orientation at `t` seconds.
    pub fn pose(&self, t: f64) -> ((f64, f64), f64) {
        let (mut x, mut y) = self.center;
        let mut angle = self.angle;
        let mut left = t;
        for seg in &self.motion {
            if left <= 0.0 {
                break;
            }
            let d = left.min(seg.duration);
            x += seg.velocity.0 * d;
            y += seg.velocity.1 * d;
            angle += seg.angular_velocity * d;
            left -= d;
        }
        ((x, y), angle)
    }

    /// Vertices in sensor coordinates at `t` seconds.
    pub fn world_vertices(&self, t: f64) -> Vec<(f64, f64)> {
        let ((x, y), a) = self.pose(t);
        let (s, c) = a.sin_cos();
        self.vertices
            .iter()
            .map(|&(px, py)| (x + c * px - s * py, y + s * px + c * py))
            .collect()
    }

    /// Same shape with its contrast inverted; every rendered event flips
    /// polarity and nothing else changes.
    pub fn flipped(&self) -> Shape {
        Shape {
            log_contrast: -self.log_contrast,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub shapes: Vec<Shape>,
    /// Background intensity (positive, arbitrary units). Only contrasts
    /// relative to it produce events.
    #[serde(default = "default_background")]
    pub background: f64,
    /// Seconds.
    pub duration: f64,
    #[serde(default = "default_contrast")]
    pub contrast_threshold: f64,
    /// Sampling step in seconds; rounded to whole microseconds.
    pub dt: f64,
    /// Salt-and-pepper noise, events per pixel per second.
    #[serde(default)]
    pub noise_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_background() -> f64 {
    1.0
}

fn default_contrast() -> f64 {
    DEFAULT_CONTRAST
}

impl Scene {
    pub fn validate(&self) -> Result<(), SceneError> {
        if !(self.background > 0.0 && self.background.is_finite()) {
            return Err(SceneError::Background);
        }
        if !(self.contrast_threshold > 0.0 && self.contrast_threshold.is_finite()) {
            return Err(SceneError::Contrast);
        }
        if !(self.dt.is_finite() && self.dt_micros() >= 1) {
            return Err(SceneError::Step);
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(SceneError::Duration);
        }
        if !(self.noise_rate >= 0.0 && self.noise_rate.is_finite()) {
            return Err(SceneError::Noise);
        }
        for (i, s) in self.shapes.iter().enumerate() {
            if !(3..=MAX_VERTICES).contains(&s.vertices.len()) {
                return Err(SceneError::VertexCount(i));
            }
            let finite = s
                .vertices
                .iter()
                .all(|p| p.0.is_finite() && p.1.is_finite())
                && s.center.0.is_finite()
                && s.center.1.is_finite()
                && s.angle.is_finite()
                && s.log_contrast.is_finite();
            if !finite {
                return Err(SceneError::NonFinite(i));
            }
            for (j, m) in s.motion.iter().enumerate() {
                let ok = m.duration >= 0.0
                    && m.duration.is_finite()
                    && m.velocity.0.is_finite()
                    && m.velocity.1.is_finite()
                    && m.angular_velocity.is_finite();
                if !ok {
                    return Err(SceneError::BadSegment {
                        shape: i,
                        segment: j,
                    });
                }
            }
            if ConvexPolygon::new(&s.vertices).is_none() {
                return Err(SceneError::NotConvex(i));
            }
        }
        Ok(())
    }

    pub fn dt_micros(&self) -> i64 {
        (self.dt * 1e6).round() as i64
    }

    pub fn steps(&self) -> usize {
        let dt = self.dt_micros().max(1);
        ((self.duration * 1e6).round() as i64 / dt).max(0) as usize
    }

    pub fn flipped(&self) -> Scene {
        Scene {
            shapes: self.shapes.iter().map(Shape::flipped).collect(),
            ..self.clone()
        }
    }
}

/// Regular polygon with `n` vertices and circumradius `r`, first vertex at `phase`.
pub fn regular_polygon(n: usize, r: f64, phase: f64) -> Vec<(f64, f64)> {
    (0..n)
        .map(|k| {
            let a = phase + std::f64::consts::TAU * k as f64 / n as f64;
            (r * a.cos(), r * a.sin())
        })
        .collect()
}
