//! Common detector interface and the message-granular stream runner that
//! closes the throughput loop.

use std::fmt;

use serde::Serialize;

use crate::baselines::{ArcStar, EFast, EHarris};
use crate::config::Settings;
use crate::control::{Clock, PerformanceState, SignalHandle, ThroughputMonitor, ThroughputSignal};
use crate::event::{Event, Micros, SensorGeometry};
use crate::pipeline::TlfHarris;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum DetectorKind {
    TlfHarris,
    EFast,
    ArcStar,
    EHarris,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 4] = [
        DetectorKind::TlfHarris,
        DetectorKind::EFast,
        DetectorKind::ArcStar,
        DetectorKind::EHarris,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::TlfHarris => "tlf-harris",
            DetectorKind::EFast => "e-fast",
            DetectorKind::ArcStar => "arc-star",
            DetectorKind::EHarris => "e-harris",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome for one event.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    /// Filter layers passed (0..=3). Detectors without a layer count it as passed.
    pub layers_passed: u8,
    pub corner: bool,
    /// Lifetime stored for the event by the third layer, if any.
    pub lifetime: Option<Micros>,
}

impl Verdict {
    pub fn stopped_at(layers_passed: u8) -> Self {
        Verdict {
            layers_passed,
            corner: false,
            lifetime: None,
        }
    }

    pub fn all_layers(corner: bool) -> Self {
        Verdict {
            layers_passed: 3,
            corner,
            lifetime: None,
        }
    }
}

pub trait Detector {
    fn kind(&self) -> DetectorKind;
    fn process(&mut self, e: &Event, signal: ThroughputSignal) -> Verdict;
    /// Current dynamic timestamp threshold, for detectors that have one.
    fn ts_threshold(&self) -> Option<Micros> {
        None
    }
}

pub fn build_detector(
    kind: DetectorKind,
    geometry: SensorGeometry,
    settings: &Settings,
) -> Box<dyn Detector + Send> {
    match kind {
        DetectorKind::TlfHarris => Box::new(TlfHarris::new(geometry, settings.pipeline)),
        DetectorKind::EFast => Box::new(EFast::new(geometry)),
        DetectorKind::ArcStar => Box::new(ArcStar::new(geometry, settings.arc_filter_ts)),
        DetectorKind::EHarris => Box::new(EHarris::new(
            geometry,
            settings.harris,
            settings.pipeline.n_recent,
        )),
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StageCounters {
    pub events_in: u64,
    pub passed_l1: u64,
    pub passed_l2: u64,
    pub passed_l3: u64,
    pub corners: u64,
}

impl StageCounters {
    pub fn record(&mut self, v: &Verdict) {
        self.events_in += 1;
        self.passed_l1 += (v.layers_passed >= 1) as u64;
        self.passed_l2 += (v.layers_passed >= 2) as u64;
        self.passed_l3 += (v.layers_passed >= 3) as u64;
        self.corners += v.corner as u64;
    }

    pub fn is_monotone(&self) -> bool {
        self.events_in >= self.passed_l1
            && self.passed_l1 >= self.passed_l2
            && self.passed_l2 >= self.passed_l3
            && self.passed_l3 >= self.corners
    }

    pub fn passed_per_layer(&self) -> [u64; 3] {
        [self.passed_l1, self.passed_l2, self.passed_l3]
    }
}

/// Simulated processing cost, charged to the run's clock.
#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct CostModel {
    /// Seconds charged for every incoming event.
    pub per_event: f64,
    /// Extra seconds for every event that passes the first layer.
    pub per_pass: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct MessageStat {
    pub events: usize,
    pub wall_time: f64,
    /// Raw events/second of this message.
    pub throughput: f64,
    /// Monitor estimate after this message.
    pub estimate: f64,
    pub state: PerformanceState,
    /// Dynamic threshold in effect at the end of the message, seconds.
    pub ts_threshold: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub corners: Vec<Event>,
    /// Lifetime stored for each corner (TLF-Harris only).
    pub corner_lifetimes: Vec<Option<Micros>>,
    pub counters: StageCounters,
    pub messages: Vec<MessageStat>,
    pub elapsed: f64,
}

impl RunReport {
    pub fn mean_throughput(&self) -> Option<f64> {
        (self.elapsed > 0.0).then(|| self.counters.events_in as f64 / self.elapsed)
    }

    pub fn threshold_trace(&self) -> Vec<f64> {
        self.messages
            .iter()
            .filter_map(|m| m.ts_threshold)
            .collect()
    }
}

/// Feeds events through a detector, measuring throughput per message and
/// publishing the controller state back to the detector.
pub struct StreamRunner<'d> {
    detector: &'d mut (dyn Detector + Send),
    monitor: ThroughputMonitor,
    handle: SignalHandle,
    report: RunReport,
    in_message: usize,
    message_start: Option<f64>,
    run_start: Option<f64>,
    last_now: f64,
}

impl<'d> StreamRunner<'d> {
    pub fn new(detector: &'d mut (dyn Detector + Send), monitor: ThroughputMonitor) -> Self {
        StreamRunner {
            detector,
            monitor,
            handle: SignalHandle::new(),
            report: RunReport::default(),
            in_message: 0,
            message_start: None,
            run_start: None,
            last_now: 0.0,
        }
    }

    pub fn handle(&self) -> SignalHandle {
        self.handle.clone()
    }

    pub fn feed<'e>(
        &mut self,
        events: impl IntoIterator<Item = &'e Event>,
        clock: &mut dyn Clock,
        cost: CostModel,
    ) {
        for e in events {
            let now = clock.now();
            self.run_start.get_or_insert(now);
            self.message_start.get_or_insert(now);

            let v = self.detector.process(e, self.handle.read());
            self.report.counters.record(&v);
            if v.corner {
                self.report.corners.push(*e);
                self.report.corner_lifetimes.push(v.lifetime);
            }
            if v.layers_passed >= 1 {
                clock.spend(cost.per_pass);
            }
            clock.spend(cost.per_event);

            self.in_message += 1;
            if self.in_message == self.monitor.message_size {
                let now = clock.now();
                self.close_message(now);
            }
        }
        self.last_now = clock.now();
    }

    fn close_message(&mut self, now: f64) {
        let start = self.message_start.take().unwrap_or(now);
        let wall = now - start;
        let events = std::mem::take(&mut self.in_message);
        if let Ok(estimate) = self.monitor.record_message(events, wall) {
            let state = self.monitor.performance_state();
            self.handle.publish(state);
            self.report.messages.push(MessageStat {
                events,
                wall_time: wall,
                throughput: events as f64 / wall,
                estimate,
                state,
                ts_threshold: self
                    .detector
                    .ts_threshold()
                    .map(crate::event::micros_to_secs),
            });
        }
        self.message_start = Some(now);
    }

    pub fn finish(mut self) -> RunReport {
        self.report.elapsed = self.last_now - self.run_start.unwrap_or(self.last_now);
        assert!(
            self.report.counters.is_monotone(),
            "stage counters not monotone: {:?}",
            self.report.counters
        );
        self.report
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub message_size: usize,
    pub expected_throughput: f64,
    pub cost: CostModel,
}

impl RunOptions {
    pub fn new(settings: &Settings) -> Self {
        RunOptions {
            message_size: crate::control::DEFAULT_MESSAGE_SIZE,
            expected_throughput: settings.pipeline.expected_throughput,
            cost: CostModel::default(),
        }
    }
}

/// Runs a whole stream in one go.
pub fn run_stream(
    detector: &mut (dyn Detector + Send),
    events: &[Event],
    clock: &mut dyn Clock,
    opts: &RunOptions,
) -> RunReport {
    let monitor =
        ThroughputMonitor::new(opts.expected_throughput).with_message_size(opts.message_size);
    let mut runner = StreamRunner::new(detector, monitor);
    runner.feed(events, clock, opts.cost);
    runner.finish()
}
