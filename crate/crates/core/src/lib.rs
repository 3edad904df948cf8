//! Event-camera corner detection with three-layer filtering, throughput
//! feedback and a synthetic evaluation toolkit.

pub mod baselines;
pub mod config;
pub mod control;
pub mod detector;
pub mod eval;
pub mod event;
pub mod flow;
pub mod io;
pub mod pipeline;
pub mod report;
pub mod scoring;
pub mod synth;

pub use detector::{
    build_detector, run_stream, Detector, DetectorKind, RunOptions, RunReport, Verdict,
};
pub use event::{Event, Micros, Polarity, SensorGeometry};
