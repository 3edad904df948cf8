//! Reduction percentage and cylinder accuracy.

use serde::Serialize;
use thiserror::Error;

use crate::detector::DetectorKind;
use crate::event::Event;
use crate::synth::GroundTruthTrack;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("reduction undefined for an empty stream")]
    EmptyStream,
    #[error("{detected} corners out of {total} events")]
    TooManyCorners { detected: u64, total: u64 },
    #[error("cylinder radii must satisfy 0 <= inner < outer")]
    Radii,
}

/// Percentage of the input stream removed by the detector.
pub fn reduction_percentage(total: u64, detected: u64) -> Result<f64, EvalError> {
    if total == 0 {
        return Err(EvalError::EmptyStream);
    }
    if detected > total {
        return Err(EvalError::TooManyCorners { detected, total });
    }
    Ok(100.0 * (1.0 - detected as f64 / total as f64))
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DetectionRecord {
    pub event: Event,
    pub detector: DetectorKind,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct CylinderParams {
    pub inner_radius: f64,
    pub outer_radius: f64,
}

impl Default for CylinderParams {
    fn default() -> Self {
        CylinderParams {
            inner_radius: 3.0,
            outer_radius: 5.0,
        }
    }
}

impl CylinderParams {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.inner_radius >= 0.0 && self.inner_radius < self.outer_radius {
            Ok(())
        } else {
            Err(EvalError::Radii)
        }
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize)]
pub struct CylinderResult {
    /// Within the inner radius of the nearest track.
    pub tec: u64,
    /// Between the inner and outer radius.
    pub fec: u64,
    /// Beyond the outer radius; excluded from the accuracy.
    pub far: u64,
    /// No track spans the corner's timestamp.
    pub untracked: u64,
}

impl CylinderResult {
    /// `TEC / (TEC + FEC)`, `None` when no corner fell inside a cylinder.
    pub fn accuracy(&self) -> Option<f64> {
        let n = self.tec + self.fec;
        (n > 0).then(|| self.tec as f64 / n as f64)
    }
}

/// Distance from `(u, v)` to the nearest track position at `ts`.
pub fn nearest_track_distance(
    tracks: &[GroundTruthTrack],
    ts: crate::event::Micros,
    u: f64,
    v: f64,
) -> Option<f64> {
    tracks
        .iter()
        .filter_map(|t| t.position_at(ts))
        .map(|(x, y)| (x - u).hypot(y - v))
        .min_by(f64::total_cmp)
}

pub fn cylinder_accuracy(
    corners: &[Event],
    tracks: &[GroundTruthTrack],
    p: &CylinderParams,
) -> Result<CylinderResult, EvalError> {
    p.validate()?;
    let mut r = CylinderResult::default();
    for e in corners {
        match nearest_track_distance(tracks, e.ts, e.u as f64, e.v as f64) {
            None => r.untracked += 1,
            Some(d) if d <= p.inner_radius => r.tec += 1,
            Some(d) if d <= p.outer_radius => r.fec += 1,
            Some(_) => r.far += 1,
        }
    }
    Ok(r)
}
