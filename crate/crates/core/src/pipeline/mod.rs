//! The TLF-Harris pipeline: timestamp filter, Plus-filter and lifetime filter
//! in sequence, followed by the LC-Harris corner selector.

pub mod lifetime;
pub mod plus;
pub mod timestamp;

use crate::config::PipelineConfig;
use crate::control::ThroughputSignal;
use crate::detector::{Detector, DetectorKind, Verdict};
use crate::event::{extract_binary_patch, BinaryPatch, Event, Micros, SaeFamily, SensorGeometry};
use crate::flow::FlowGrid;
use crate::scoring::lc_harris_score;

pub use lifetime::{CornerSae, LifetimeDecision, LifetimeEntry, LifetimeFilter};
pub use plus::plus_filter;
pub use timestamp::{DecisionKind, TimestampDecision, TimestampFilter};

/// One same-polarity decision of the timestamp filter, kept for inspection.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ThresholdTrace {
    pub ts: Micros,
    pub cell: usize,
    pub flow: f64,
    pub threshold: Micros,
    pub fast_motion: bool,
}

#[derive(Clone, Debug)]
pub struct TlfHarris {
    cfg: PipelineConfig,
    pub sae: SaeFamily,
    pub flow: FlowGrid,
    pub timestamp: TimestampFilter,
    pub lifetime: LifetimeFilter,
    trace: Option<Vec<ThresholdTrace>>,
}

impl TlfHarris {
    pub fn new(geometry: SensorGeometry, cfg: PipelineConfig) -> Self {
        TlfHarris {
            sae: SaeFamily::new(geometry),
            flow: FlowGrid::new(geometry, PipelineConfig::micros(cfg.flow_window)),
            timestamp: TimestampFilter::new(&cfg),
            lifetime: LifetimeFilter::new(
                geometry,
                cfg.lifetime_radius,
                PipelineConfig::micros(cfg.max_lifetime),
            ),
            cfg,
            trace: None,
        }
    }

    /// Records every same-polarity timestamp decision from now on.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn trace(&self) -> &[ThresholdTrace] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    /// Runs the three filter layers. `Ok` carries the stored lifetime of a
    /// candidate, `Err` the number of layers passed before rejection.
    fn screen(&mut self, e: &Event, signal: ThroughputSignal) -> Result<Micros, u8> {
        let d = self
            .timestamp
            .filter(&mut self.sae, &mut self.flow, e, signal);
        if let (
            Some(trace),
            DecisionKind::Compared {
                flow,
                threshold,
                fast_motion,
            },
        ) = (self.trace.as_mut(), d.kind)
        {
            trace.push(ThresholdTrace {
                ts: e.ts,
                cell: self.flow.batch_of(e),
                flow,
                threshold,
                fast_motion,
            });
        }
        if !d.pass {
            return Err(0);
        }
        let esae = self.sae.enhanced(e.pol);
        if !plus_filter(esae, e) {
            return Err(1);
        }
        match self.lifetime.filter(esae, e) {
            LifetimeDecision::Discard { .. } => Err(2),
            LifetimeDecision::Pass { lifetime, .. } => Ok(lifetime),
        }
    }
}

impl Detector for TlfHarris {
    fn kind(&self) -> DetectorKind {
        DetectorKind::TlfHarris
    }

    fn process(&mut self, e: &Event, signal: ThroughputSignal) -> Verdict {
        let lifetime = match self.screen(e, signal) {
            Ok(l) => l,
            Err(layers) => return Verdict::stopped_at(layers),
        };
        let corner =
            match extract_binary_patch(self.sae.enhanced(e.pol), (e.u, e.v), self.cfg.n_recent) {
                Ok(patch) => lc_harris_score(&patch, self.cfg.lc_threshold).is_corner,
                Err(_) => false,
            };
        Verdict {
            layers_passed: 3,
            corner,
            lifetime: Some(lifetime),
        }
    }

    fn ts_threshold(&self) -> Option<Micros> {
        Some(self.timestamp.threshold())
    }
}

/// Binary patches of every event that clears the three filter layers with no
/// throughput pressure, in stream order.
pub fn candidate_patches(
    geometry: SensorGeometry,
    cfg: PipelineConfig,
    events: &[Event],
) -> Vec<BinaryPatch> {
    let mut det = TlfHarris::new(geometry, cfg);
    let mut out = Vec::new();
    for e in events {
        if det.screen(e, ThroughputSignal::IDLE).is_ok() {
            if let Ok(p) = extract_binary_patch(det.sae.enhanced(e.pol), (e.u, e.v), cfg.n_recent) {
                out.push(p);
            }
        }
    }
    out
}
