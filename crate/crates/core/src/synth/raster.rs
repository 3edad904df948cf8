//! Exact area coverage of a unit pixel by a convex polygon.

use arrayvec::ArrayVec;

use super::MAX_VERTICES;

const HALF_DIAGONAL: f64 = std::f64::consts::FRAC_1_SQRT_2;

type Clip = ArrayVec<(f64, f64), { MAX_VERTICES + 4 }>;

/// Convex polygon stored as half-planes `nx * x + ny * y <= c` with unit normals.
#[derive(Clone, Debug)]
pub struct ConvexPolygon {
    planes: ArrayVec<(f64, f64, f64), MAX_VERTICES>,
    pub min: (f64, f64),
    pub max: (f64, f64),
}

impl ConvexPolygon {
    /// `None` for fewer than three vertices, more than the maximum, or a
    /// polygon that is not strictly convex.
    pub fn new(vertices: &[(f64, f64)]) -> Option<Self> {
        let n = vertices.len();
        if !(3..=MAX_VERTICES).contains(&n) {
            return None;
        }
        let area2: f64 = (0..n)
            .map(|i| {
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                a.0 * b.1 - b.0 * a.1
            })
            .sum();
        if area2.abs() < 1e-9 {
            return None;
        }
        let orient = area2.signum();
        let mut planes = ArrayVec::new();
        for i in 0..n {
            let (a, b, c) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            let turn = (b.0 - a.0) * (c.1 - b.1) - (b.1 - a.1) * (c.0 - b.0);
            if turn * orient <= 0.0 {
                return None;
            }
            let (ex, ey) = (b.0 - a.0, b.1 - a.1);
            let len = ex.hypot(ey);
            // outward normal for either winding
            let (nx, ny) = (orient * ey / len, -orient * ex / len);
            planes.push((nx, ny, nx * a.0 + ny * a.1));
        }
        let min = vertices
            .iter()
            .fold((f64::INFINITY, f64::INFINITY), |m, p| {
                (m.0.min(p.0), m.1.min(p.1))
            });
        let max = vertices
            .iter()
            .fold((f64::NEG_INFINITY, f64::NEG_INFINITY), |m, p| {
                (m.0.max(p.0), m.1.max(p.1))
            });
        Some(ConvexPolygon { planes, min, max })
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.planes.iter().all(|&(nx, ny, c)| nx * x + ny * y <= c)
    }
}

/// Fraction of pixel `[u, u+1) x [v, v+1)` covered by `poly`.
pub fn pixel_coverage(poly: &ConvexPolygon, u: i64, v: i64) -> f64 {
    let (cx, cy) = (u as f64 + 0.5, v as f64 + 0.5);
    let mut inside = true;
    for &(nx, ny, c) in &poly.planes {
        let d = c - (nx * cx + ny * cy);
        if d <= -HALF_DIAGONAL {
            return 0.0;
        }
        if d < HALF_DIAGONAL {
            inside = false;
        }
    }
    if inside {
        return 1.0;
    }

    let (x0, y0, x1, y1) = (u as f64, v as f64, u as f64 + 1.0, v as f64 + 1.0);
    let mut cur: Clip = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
        .into_iter()
        .collect();
    for &(nx, ny, c) in &poly.planes {
        let mut next = Clip::new();
        for i in 0..cur.len() {
            let p = cur[i];
            let q = cur[(i + 1) % cur.len()];
            let dp = c - (nx * p.0 + ny * p.1);
            let dq = c - (nx * q.0 + ny * q.1);
            if dp >= 0.0 {
                next.push(p);
            }
            if (dp >= 0.0) != (dq >= 0.0) {
                let t = dp / (dp - dq);
                next.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
            }
        }
        cur = next;
        if cur.len() < 3 {
            return 0.0;
        }
    }
    let n = cur.len();
    let area2: f64 = (0..n)
        .map(|i| {
            let (a, b) = (cur[i], cur[(i + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum();
    (area2.abs() / 2.0).clamp(0.0, 1.0)
}
