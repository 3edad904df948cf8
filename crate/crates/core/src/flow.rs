//! Per-batch optical-flow magnitude used by the timestamp filter's fast-motion
//! override.
//!
//! The sensor is split into 20x20 cells. Each event refreshes its cell with a
//! local plane fit `t = a*u + b*v + c` over the recently fired pixels of its
//! 5x5 neighbourhood; the normal-flow speed is `1 / |(a, b)|`.

use crate::event::{micros_to_secs, Event, Micros, SaeMap, SensorGeometry, NEVER};

pub const CELL_SIZE: u32 = 20;
const FIT_RADIUS: i64 = 2;
const MIN_SUPPORT: usize = 5;
const EMA_ALPHA: f64 = 0.3;
/// Smallest time gradient (s/px) treated as motion.
const MIN_GRADIENT: f64 = 1e-6;

#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct FlowCell {
    /// Pixels per second; zero until the first successful fit.
    pub magnitude: f64,
    pub last_refresh: Option<Micros>,
}

#[derive(Clone, Debug)]
pub struct FlowGrid {
    cells_per_row: usize,
    cells: Vec<FlowCell>,
    /// Only pixels fired within this long before the event support the fit.
    window: Micros,
    /// Fits rejected because the support was collinear.
    pub degenerate_fits: u64,
}

impl FlowGrid {
    pub fn new(geometry: SensorGeometry, window: Micros) -> Self {
        let cells_per_row = geometry.width.div_ceil(CELL_SIZE) as usize;
        let rows = geometry.height.div_ceil(CELL_SIZE) as usize;
        FlowGrid {
            cells_per_row,
            cells: vec![FlowCell::default(); cells_per_row * rows],
            window,
            degenerate_fits: 0,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cells_per_row(&self) -> usize {
        self.cells_per_row
    }

    pub fn batch_of(&self, e: &Event) -> usize {
        (e.u as u32 / CELL_SIZE) as usize + (e.v as u32 / CELL_SIZE) as usize * self.cells_per_row
    }

    pub fn cell(&self, index: usize) -> &FlowCell {
        &self.cells[index]
    }

    pub fn magnitude_for(&self, e: &Event) -> f64 {
        self.cells[self.batch_of(e)].magnitude
    }

    /// Refreshes the cell holding `e` from `sae` and returns its magnitude, or
    /// zero when the event has too little support for a fit.
    pub fn update_flow(&mut self, sae: &SaeMap, e: &Event) -> f64 {
        let Some(sample) = self.fit(sae, e) else {
            return 0.0;
        };
        let idx = self.batch_of(e);
        let cell = &mut self.cells[idx];
        cell.magnitude = match cell.last_refresh {
            None => sample,
            Some(_) => EMA_ALPHA * sample + (1.0 - EMA_ALPHA) * cell.magnitude,
        };
        cell.last_refresh = Some(e.ts);
        cell.magnitude
    }

    /// Single-event flow estimate, without touching the grid state.
    fn fit(&mut self, sae: &SaeMap, e: &Event) -> Option<f64> {
        let (cu, cv) = (e.u as i64, e.v as i64);
        // normal equations for [a, b, c] with coordinates relative to the event
        let mut s = [[0.0f64; 3]; 3];
        let mut r = [0.0f64; 3];
        let mut n = 0usize;
        let mut add = |du: f64, dv: f64, dt: f64| {
            let x = [du, dv, 1.0];
            for i in 0..3 {
                for j in 0..3 {
                    s[i][j] += x[i] * x[j];
                }
                r[i] += x[i] * dt;
            }
        };
        // the event itself anchors the fit
        add(0.0, 0.0, 0.0);
        n += 1;
        for dv in -FIT_RADIUS..=FIT_RADIUS {
            for du in -FIT_RADIUS..=FIT_RADIUS {
                if du == 0 && dv == 0 {
                    continue;
                }
                let ts = sae.ts_at(cu + du, cv + dv);
                if ts == NEVER || ts > e.ts || e.ts - ts > self.window {
                    continue;
                }
                add(du as f64, dv as f64, micros_to_secs(ts - e.ts));
                n += 1;
            }
        }
        if n < MIN_SUPPORT {
            return None;
        }
        let Some([a, b, _]) = solve3(s, r) else {
            self.degenerate_fits += 1;
            return Some(0.0);
        };
        let grad = (a * a + b * b).sqrt();
        Some(if grad > MIN_GRADIENT { 1.0 / grad } else { 0.0 })
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Cramer's rule; `None` when the system is (near) singular.
fn solve3(m: [[f64; 3]; 3], r: [f64; 3]) -> Option<[f64; 3]> {
    let det = det3(&m);
    let scale = m.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if det.abs() <= 1e-9 * scale.powi(3) {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = r[i];
        }
        *slot = det3(&mk) / det;
    }
    Some(out)
}
