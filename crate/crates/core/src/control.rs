//! Throughput measurement and the feedback signal read by the timestamp filter.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

pub const DEFAULT_MESSAGE_SIZE: usize = 10_000;
/// 30 messages/s of 10k events.
pub const DEFAULT_EXPECTED_THROUGHPUT: f64 = 300_000.0;
const EMA_ALPHA: f64 = 0.5;
pub const HYSTERESIS: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("wall time must be positive, got {0}")]
    NonPositiveWallTime(f64),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PerformanceState {
    Under,
    At,
    Over,
}

impl PerformanceState {
    fn code(self) -> u64 {
        match self {
            PerformanceState::Under => 0,
            PerformanceState::At => 1,
            PerformanceState::Over => 2,
        }
    }

    fn from_code(code: u64) -> Self {
        match code {
            0 => PerformanceState::Under,
            2 => PerformanceState::Over,
            _ => PerformanceState::At,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ThroughputMonitor {
    pub message_size: usize,
    pub expected: f64,
    estimate: Option<f64>,
    history: Vec<f64>,
}

impl ThroughputMonitor {
    pub fn new(expected: f64) -> Self {
        ThroughputMonitor {
            message_size: DEFAULT_MESSAGE_SIZE,
            expected,
            estimate: None,
            history: Vec::new(),
        }
    }

    pub fn with_message_size(mut self, size: usize) -> Self {
        self.message_size = size.max(1);
        self
    }

    /// Folds one message into the estimate and returns it (events/second).
    pub fn record_message(
        &mut self,
        events_processed: usize,
        wall_time: f64,
    ) -> Result<f64, ControlError> {
        if wall_time.is_nan() || wall_time <= 0.0 {
            return Err(ControlError::NonPositiveWallTime(wall_time));
        }
        let sample = events_processed as f64 / wall_time;
        let est = match self.estimate {
            None => sample,
            Some(prev) => EMA_ALPHA * sample + (1.0 - EMA_ALPHA) * prev,
        };
        self.estimate = Some(est);
        self.history.push(est);
        Ok(est)
    }

    pub fn estimate(&self) -> Option<f64> {
        self.estimate
    }

    /// Estimate after each recorded message.
    pub fn history(&self) -> &[f64] {
        &self.history
    }

    pub fn performance_state(&self) -> PerformanceState {
        match self.estimate {
            None => PerformanceState::At,
            Some(est) if est < self.expected * (1.0 - HYSTERESIS) => PerformanceState::Under,
            Some(est) if est > self.expected * (1.0 + HYSTERESIS) => PerformanceState::Over,
            Some(_) => PerformanceState::At,
        }
    }
}

/// Snapshot of the controller output as seen by the filter.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct ThroughputSignal {
    pub state: PerformanceState,
    /// Bumped on every monitor update; lets the filter adjust once per message.
    pub generation: u64,
}

impl ThroughputSignal {
    pub const IDLE: ThroughputSignal = ThroughputSignal {
        state: PerformanceState::At,
        generation: 0,
    };
}

/// Single-word handoff of [`ThroughputSignal`] between a timing thread and
/// the filter: readers see either the old or the new value, never a mix.
#[derive(Clone, Debug, Default)]
pub struct SignalHandle(Arc<AtomicU64>);

impl SignalHandle {
    pub fn new() -> Self {
        SignalHandle(Arc::new(AtomicU64::new(PerformanceState::At.code())))
    }

    pub fn publish(&self, state: PerformanceState) {
        let cur = self.0.load(Ordering::Acquire);
        let generation = (cur >> 2) + 1;
        self.0
            .store((generation << 2) | state.code(), Ordering::Release);
    }

    pub fn read(&self) -> ThroughputSignal {
        let word = self.0.load(Ordering::Acquire);
        ThroughputSignal {
            state: PerformanceState::from_code(word & 0b11),
            generation: word >> 2,
        }
    }
}

/// Source of elapsed time for throughput measurement.
pub trait Clock {
    /// Seconds since the clock was created.
    fn now(&self) -> f64;
    /// Accounts for `secs` of work: a virtual clock advances, a wall clock
    /// burns CPU for that long.
    fn spend(&mut self, secs: f64);
}

#[derive(Debug)]
pub struct WallClock {
    start: Instant,
}

impl WallClock {
    pub fn new() -> Self {
        WallClock {
            start: Instant::now(),
        }
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn spend(&mut self, secs: f64) {
        if secs <= 0.0 {
            return;
        }
        let until = self.now() + secs;
        while self.now() < until {
            std::hint::spin_loop();
        }
    }
}

/// Deterministic clock driven only by `spend`.
#[derive(Debug, Default, Clone)]
pub struct VirtualClock {
    t: f64,
}

impl VirtualClock {
    pub fn new() -> Self {
        VirtualClock { t: 0.0 }
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> f64 {
        self.t
    }

    fn spend(&mut self, secs: f64) {
        self.t += secs.max(0.0);
    }
}
