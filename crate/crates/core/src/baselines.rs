//! Reference detectors: eFAST, Arc* and eHarris.

use crate::control::ThroughputSignal;
use crate::detector::{Detector, DetectorKind, Verdict};
use crate::event::{
    circle_timestamps, extract_binary_patch, newest_arc, secs_to_micros, Event, Micros, SaeFamily,
    SaeMap, SaeWrite, SensorGeometry, CIRCLE3, CIRCLE4,
};
use crate::scoring::{harris_score, HarrisParams};

fn mask_range(lo: u32, hi: u32) -> u32 {
    (lo..=hi).fold(0, |m, l| m | (1 << l))
}

const FAST_INNER: u32 = (1 << 7) - (1 << 3); // lengths 3..=6
const FAST_OUTER: u32 = (1 << 9) - (1 << 4); // lengths 4..=8

/// eFAST test on the positive-or-negative surface of `e`.
pub fn efast_decision(inner: &[Micros; 16], outer: &[Micros; 20]) -> bool {
    newest_arc(inner).1 & FAST_INNER != 0 && newest_arc(outer).1 & FAST_OUTER != 0
}

/// Arc* test: a newest arc in the eFAST range, or one whose complement is.
pub fn arcstar_decision(inner: &[Micros; 16], outer: &[Micros; 20]) -> bool {
    let inner_ok = mask_range(3, 6) | mask_range(10, 13);
    let outer_ok = mask_range(4, 8) | mask_range(12, 16);
    newest_arc(inner).1 & inner_ok != 0 && newest_arc(outer).1 & outer_ok != 0
}

fn rings(map: &SaeMap, e: &Event) -> Option<([Micros; 16], [Micros; 20])> {
    if map.geometry().border_distance(e.u, e.v) < 4 {
        return None;
    }
    Some((
        circle_timestamps(map, (e.u, e.v), &CIRCLE3),
        circle_timestamps(map, (e.u, e.v), &CIRCLE4),
    ))
}

/// eFAST on unfiltered per-polarity surfaces.
#[derive(Clone, Debug)]
pub struct EFast {
    sae: SaeFamily,
}

impl EFast {
    pub fn new(geometry: SensorGeometry) -> Self {
        EFast {
            sae: SaeFamily::new(geometry),
        }
    }
}

impl Detector for EFast {
    fn kind(&self) -> DetectorKind {
        DetectorKind::EFast
    }

    fn process(&mut self, e: &Event, _signal: ThroughputSignal) -> Verdict {
        let map = self.sae.enhanced_mut(e.pol);
        if map.update(e).ok() != Some(SaeWrite::Stored) {
            return Verdict::stopped_at(0);
        }
        let corner = rings(map, e).is_some_and(|(i, o)| efast_decision(&i, &o));
        Verdict::all_layers(corner)
    }
}

/// Fixed-threshold same-polarity timestamp filter used ahead of Arc*.
/// Returns whether the event passed; the enhanced surface of its polarity
/// is written only on pass.
pub fn fixed_timestamp_filter(sae: &mut SaeFamily, e: &Event, threshold: Micros) -> bool {
    let (u, v) = (e.u as i64, e.v as i64);
    let old_pol = sae.global.pol_at(u, v);
    let old_ts = sae.global.ts_at(u, v);
    if sae.global.update(e).ok() != Some(SaeWrite::Stored) {
        return false;
    }
    let pass = old_pol != Some(e.pol) || e.ts > old_ts + threshold;
    if pass {
        let _ = sae.enhanced_mut(e.pol).update(e);
    }
    pass
}

#[derive(Clone, Debug)]
pub struct ArcStar {
    sae: SaeFamily,
    filter_ts: Micros,
}

impl ArcStar {
    pub fn new(geometry: SensorGeometry, filter_ts: f64) -> Self {
        ArcStar {
            sae: SaeFamily::new(geometry),
            filter_ts: secs_to_micros(filter_ts),
        }
    }
}

impl Detector for ArcStar {
    fn kind(&self) -> DetectorKind {
        DetectorKind::ArcStar
    }

    fn process(&mut self, e: &Event, _signal: ThroughputSignal) -> Verdict {
        if !fixed_timestamp_filter(&mut self.sae, e, self.filter_ts) {
            return Verdict::stopped_at(0);
        }
        let map = self.sae.enhanced(e.pol);
        let corner = rings(map, e).is_some_and(|(i, o)| arcstar_decision(&i, &o));
        Verdict::all_layers(corner)
    }
}

/// Full Harris on the global surface for every event.
#[derive(Clone, Debug)]
pub struct EHarris {
    sae: SaeMap,
    params: HarrisParams,
    n_recent: usize,
}

impl EHarris {
    pub fn new(geometry: SensorGeometry, params: HarrisParams, n_recent: usize) -> Self {
        EHarris {
            sae: SaeMap::new(geometry),
            params,
            n_recent,
        }
    }
}

impl Detector for EHarris {
    fn kind(&self) -> DetectorKind {
        DetectorKind::EHarris
    }

    fn process(&mut self, e: &Event, _signal: ThroughputSignal) -> Verdict {
        if self.sae.update(e).ok() != Some(SaeWrite::Stored) {
            return Verdict::stopped_at(0);
        }
        let corner = match extract_binary_patch(&self.sae, (e.u, e.v), self.n_recent) {
            Ok(patch) => harris_score(&patch, &self.params).is_corner,
            Err(_) => false,
        };
        Verdict::all_layers(corner)
    }
}
