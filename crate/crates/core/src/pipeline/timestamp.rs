//! First layer: the dynamic timestamp filter.

use crate::config::PipelineConfig;
use crate::control::{PerformanceState, ThroughputSignal};
use crate::event::{Event, Micros, SaeFamily, SaeWrite};
use crate::flow::FlowGrid;

/// What the timestamp filter did with one event.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct TimestampDecision {
    pub pass: bool,
    pub kind: DecisionKind,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum DecisionKind {
    /// Older than the stored timestamp at its pixel.
    Stale,
    /// Polarity differs from the last event at the pixel (or first event there).
    PolarityChange,
    /// Same polarity: compared against `threshold`.
    Compared {
        flow: f64,
        threshold: Micros,
        fast_motion: bool,
    },
}

#[derive(Clone, Debug)]
pub struct TimestampFilter {
    threshold: Micros,
    min: Micros,
    max: Micros,
    step: Micros,
    fast_motion: Micros,
    theta_flow: f64,
    last_generation: u64,
}

impl TimestampFilter {
    pub fn new(cfg: &PipelineConfig) -> Self {
        TimestampFilter {
            threshold: PipelineConfig::micros(cfg.ts_threshold_init),
            min: PipelineConfig::micros(cfg.ts_threshold_min),
            max: PipelineConfig::micros(cfg.ts_threshold_max),
            step: PipelineConfig::micros(cfg.k_step),
            fast_motion: PipelineConfig::micros(cfg.fast_motion_ts),
            theta_flow: cfg.theta_flow,
            last_generation: 0,
        }
    }

    /// Controller-maintained threshold (excludes the per-event fast-motion override).
    pub fn threshold(&self) -> Micros {
        self.threshold
    }

    pub fn set_threshold(&mut self, t: Micros) {
        self.threshold = t.clamp(self.min, self.max);
    }

    /// Applies one controller update; at most one adjustment per generation.
    fn adjust(&mut self, signal: ThroughputSignal) {
        if signal.generation == self.last_generation {
            return;
        }
        self.last_generation = signal.generation;
        let next = match signal.state {
            PerformanceState::Under => self.threshold + self.step,
            PerformanceState::Over => self.threshold - self.step,
            PerformanceState::At => self.threshold,
        };
        self.threshold = next.clamp(self.min, self.max);
    }

    /// Runs the filter on `e`. The global SAE is refreshed for every in-order
    /// event; the polarity's enhanced SAE only when the event passes.
    pub fn filter(
        &mut self,
        sae: &mut SaeFamily,
        flow: &mut FlowGrid,
        e: &Event,
        signal: ThroughputSignal,
    ) -> TimestampDecision {
        let (u, v) = (e.u as i64, e.v as i64);
        let old_pol = sae.global.pol_at(u, v);
        let old_ts = sae.global.ts_at(u, v);

        if sae.global.update(e).ok() != Some(SaeWrite::Stored) {
            return TimestampDecision {
                pass: false,
                kind: DecisionKind::Stale,
            };
        }

        if old_pol != Some(e.pol) {
            let _ = sae.enhanced_mut(e.pol).update(e);
            return TimestampDecision {
                pass: true,
                kind: DecisionKind::PolarityChange,
            };
        }

        let flow_mag = flow.update_flow(sae.enhanced(e.pol), e);
        let fast_motion = flow_mag > self.theta_flow;
        let threshold = if fast_motion {
            self.fast_motion
        } else {
            self.adjust(signal);
            self.threshold
        };

        let pass = e.ts > old_ts + threshold;
        if pass {
            let _ = sae.enhanced_mut(e.pol).update(e);
        }
        TimestampDecision {
            pass,
            kind: DecisionKind::Compared {
                flow: flow_mag,
                threshold,
                fast_motion,
            },
        }
    }
}
