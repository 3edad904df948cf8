//! Metrics reports: `key=value` lines for people and scripts, JSON for tools.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::detector::{DetectorKind, RunReport};
use crate::eval::{reduction_percentage, CylinderResult};
use crate::event::BinaryPatch;
use crate::scoring::{harris_score, lc_harris_score, HarrisParams};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectorMetrics {
    pub detector: String,
    pub events_in: u64,
    /// Unknown when only a corner file was given.
    pub passed_per_layer: Option<[u64; 3]>,
    pub corners: u64,
    /// `None` for an empty stream.
    pub reduction_pct: Option<f64>,
    pub cylinder: Option<CylinderResult>,
    pub accuracy: Option<f64>,
    pub mean_throughput: Option<f64>,
    /// Dynamic threshold after each message, seconds (TLF-Harris only).
    pub threshold_trace: Vec<f64>,
}

impl DetectorMetrics {
    pub fn from_run(kind: DetectorKind, run: &RunReport) -> Self {
        let c = &run.counters;
        DetectorMetrics {
            detector: kind.name().to_string(),
            events_in: c.events_in,
            passed_per_layer: Some(c.passed_per_layer()),
            corners: c.corners,
            reduction_pct: reduction_percentage(c.events_in, c.corners).ok(),
            cylinder: None,
            accuracy: None,
            mean_throughput: run.mean_throughput(),
            threshold_trace: run.threshold_trace(),
        }
    }

    pub fn with_cylinder(mut self, r: CylinderResult) -> Self {
        self.accuracy = r.accuracy();
        self.cylinder = Some(r);
        self
    }
}

/// Mean per-patch time of the two corner scores on the same patches.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct ScoreTiming {
    pub patches: usize,
    pub harris_ns: f64,
    pub lc_harris_ns: f64,
    pub savings_pct: f64,
}

/// Times both scores over `patches`, `rounds` times each, interleaving the
/// rounds so drift in machine load hits both alike.
pub fn time_scores(patches: &[BinaryPatch], params: &HarrisParams, rounds: usize) -> ScoreTiming {
    let (mut harris, mut lc) = (0.0, 0.0);
    let mut sink = 0.0;
    for _ in 0..rounds.max(1) {
        let t = Instant::now();
        for p in patches {
            sink += std::hint::black_box(harris_score(std::hint::black_box(p), params)).score;
        }
        harris += t.elapsed().as_secs_f64();
        let t = Instant::now();
        for p in patches {
            sink += std::hint::black_box(lc_harris_score(std::hint::black_box(p), 0.0)).score;
        }
        lc += t.elapsed().as_secs_f64();
    }
    std::hint::black_box(sink);
    let n = (patches.len() * rounds.max(1)).max(1) as f64;
    let (harris_ns, lc_harris_ns) = (harris / n * 1e9, lc / n * 1e9);
    ScoreTiming {
        patches: patches.len(),
        harris_ns,
        lc_harris_ns,
        savings_pct: if harris_ns > 0.0 {
            100.0 * (1.0 - lc_harris_ns / harris_ns)
        } else {
            0.0
        },
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MetricsReport {
    pub detectors: Vec<DetectorMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score_timing: Option<ScoreTiming>,
}

fn opt<T: std::fmt::Display>(x: Option<T>) -> String {
    x.map_or_else(|| "null".to_string(), |x| x.to_string())
}

impl MetricsReport {
    /// One `detector.key=value` line per field.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for d in &self.detectors {
            let n = &d.detector;
            let _ = writeln!(s, "{n}.events_in={}", d.events_in);
            if let Some([l1, l2, l3]) = d.passed_per_layer {
                let _ = writeln!(s, "{n}.passed_per_layer={l1},{l2},{l3}");
            }
            let _ = writeln!(s, "{n}.corners={}", d.corners);
            let _ = writeln!(s, "{n}.reduction_pct={}", opt(d.reduction_pct));
            if let Some(c) = d.cylinder {
                let _ = writeln!(s, "{n}.tec={}", c.tec);
                let _ = writeln!(s, "{n}.fec={}", c.fec);
                let _ = writeln!(s, "{n}.far={}", c.far);
                let _ = writeln!(s, "{n}.untracked={}", c.untracked);
                let _ = writeln!(s, "{n}.accuracy={}", opt(d.accuracy));
            }
            let _ = writeln!(s, "{n}.mean_throughput={}", opt(d.mean_throughput));
            if !d.threshold_trace.is_empty() {
                let trace: Vec<String> = d.threshold_trace.iter().map(f64::to_string).collect();
                let _ = writeln!(s, "{n}.threshold_trace={}", trace.join(","));
            }
        }
        if let Some(t) = self.score_timing {
            let _ = writeln!(s, "score.patches={}", t.patches);
            let _ = writeln!(s, "score.harris_ns={:.1}", t.harris_ns);
            let _ = writeln!(s, "score.lc_harris_ns={:.1}", t.lc_harris_ns);
            let _ = writeln!(s, "score.savings_pct={:.1}", t.savings_pct);
        }
        s
    }

    /// Aligned summary rows: reduction and cylinder counts per detector.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<12} {:>10} {:>9} {:>8} {:>8} {:>8} {:>9}\n",
            "detector", "events", "corners", "red[%]", "TEC", "FEC", "accuracy"
        );
        for d in &self.detectors {
            let c = d.cylinder.unwrap_or_default();
            let _ = writeln!(
                s,
                "{:<12} {:>10} {:>9} {:>8} {:>8} {:>8} {:>9}",
                d.detector,
                d.events_in,
                d.corners,
                d.reduction_pct.map_or("-".into(), |r| format!("{r:.2}")),
                c.tec,
                c.fec,
                d.accuracy.map_or("-".into(), |a| format!("{a:.3}")),
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
