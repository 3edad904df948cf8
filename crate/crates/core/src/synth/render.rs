use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::raster::{pixel_coverage, ConvexPolygon};
use super::{Scene, SceneError};
use crate::event::{Event, Micros, Polarity, SensorGeometry};

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct TrackSample {
    pub ts: Micros,
    /// Pixel-index coordinates: the centre of pixel `u` is at `u`.
    pub u: f64,
    pub v: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthTrack {
    pub id: u32,
    pub samples: Vec<TrackSample>,
}

impl GroundTruthTrack {
    pub fn span(&self) -> Option<(Micros, Micros)> {
        Some((self.samples.first()?.ts, self.samples.last()?.ts))
    }

    /// Linear interpolation between the samples bracketing `ts`; `None`
    /// outside the track's span.
    pub fn position_at(&self, ts: Micros) -> Option<(f64, f64)> {
        let s = &self.samples;
        let (first, last) = self.span()?;
        if ts < first || ts > last {
            return None;
        }
        let i = s.partition_point(|x| x.ts < ts);
        if s[i].ts == ts {
            return Some((s[i].u, s[i].v));
        }
        let (a, b) = (&s[i - 1], &s[i]);
        let f = (ts - a.ts) as f64 / (b.ts - a.ts) as f64;
        Some((a.u + f * (b.u - a.u), a.v + f * (b.v - a.v)))
    }
}

#[derive(Clone, Debug, Default)]
pub struct Rendered {
    pub events: Vec<Event>,
    pub tracks: Vec<GroundTruthTrack>,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Violation {
    /// The event's step does not take the pixel across its reference level.
    NoCrossing {
        index: usize,
    },
    /// The level was already crossed at the previous sample.
    CrossedEarlier {
        index: usize,
    },
    OutOfRange {
        index: usize,
    },
}

type Rect = Option<(i64, i64, i64, i64)>;

fn bbox(poly: &ConvexPolygon, g: SensorGeometry) -> Rect {
    let u0 = (poly.min.0.floor() as i64).max(0);
    let v0 = (poly.min.1.floor() as i64).max(0);
    let u1 = (poly.max.0.floor() as i64).min(g.width as i64 - 1);
    let v1 = (poly.max.1.floor() as i64).min(g.height as i64 - 1);
    (u0 <= u1 && v0 <= v1).then_some((u0, v0, u1, v1))
}

fn union(a: Rect, b: Rect) -> Rect {
    match (a, b) {
        (None, r) | (r, None) => r,
        (Some(a), Some(b)) => Some((a.0.min(b.0), a.1.min(b.1), a.2.max(b.2), a.3.max(b.3))),
    }
}

struct Layer {
    poly: ConvexPolygon,
    contrast: f64,
    rect: Rect,
}

fn layers_at(scene: &Scene, g: SensorGeometry, t: Micros) -> Vec<Layer> {
    let secs = t as f64 * 1e-6;
    scene
        .shapes
        .iter()
        .filter_map(|s| {
            let poly = ConvexPolygon::new(&s.world_vertices(secs))?;
            let rect = bbox(&poly, g);
            Some(Layer {
                poly,
                contrast: s.log_contrast,
                rect,
            })
        })
        .collect()
}

#[inline]
fn composite(acc: f64, c: f64, contrast: f64) -> f64 {
    acc * (1.0 - c) + contrast * c
}

/// Log intensity relative to the background at pixel `(u, v)` and time `t`.
pub fn pixel_value(scene: &Scene, g: SensorGeometry, u: i64, v: i64, t: Micros) -> f64 {
    layers_at(scene, g, t).iter().fold(0.0, |acc, l| {
        let c = pixel_coverage(&l.poly, u, v);
        if c > 0.0 {
            composite(acc, c, l.contrast)
        } else {
            acc
        }
    })
}

fn paint(buf: &mut [f64], g: SensorGeometry, rect: Rect, layers: &[Layer]) {
    let Some((u0, v0, u1, v1)) = rect else { return };
    let w = g.width as i64;
    for v in v0..=v1 {
        buf[(v * w + u0) as usize..=(v * w + u1) as usize].fill(0.0);
    }
    for l in layers {
        let Some((a0, b0, a1, b1)) = l.rect else {
            continue;
        };
        for v in b0.max(v0)..=b1.min(v1) {
            for u in a0.max(u0)..=a1.min(u1) {
                let c = pixel_coverage(&l.poly, u, v);
                if c > 0.0 {
                    let p = &mut buf[(v * w + u) as usize];
                    *p = composite(*p, c, l.contrast);
                }
            }
        }
    }
}

/// Emits the events for one pixel over one step `(t0, t0 + dt]` in which its
/// value moves from `r0` to `r1`. The reference resets to each crossed level.
#[inline]
#[allow(clippy::too_many_arguments)]
fn emit(
    out: &mut Vec<Event>,
    reference: &mut f64,
    r0: f64,
    r1: f64,
    c: f64,
    t0: Micros,
    dt: Micros,
    u: u16,
    v: u16,
) {
    loop {
        let (level, pol) = if r1 - *reference >= c {
            (*reference + c, Polarity::Pos)
        } else if *reference - r1 >= c {
            (*reference - c, Polarity::Neg)
        } else {
            return;
        };
        let f = (level - r0) / (r1 - r0);
        let ts = (t0 as f64 + f * dt as f64).ceil() as Micros;
        out.push(Event::new(u, v, pol, ts.clamp(t0 + 1, t0 + dt)));
        *reference = level;
    }
}

fn track_sample(x: f64, y: f64, t: Micros) -> TrackSample {
    TrackSample {
        ts: t,
        u: x - 0.5,
        v: y - 0.5,
    }
}

/// Renders `scene` into an ordered event stream plus one track per polygon
/// vertex, sampled at every step.
pub fn render_events(scene: &Scene, g: SensorGeometry) -> Result<Rendered, SceneError> {
    scene.validate()?;
    let dt = scene.dt_micros();
    let steps = scene.steps();
    let c = scene.contrast_threshold;
    let w = g.width as i64;

    let mut tracks: Vec<GroundTruthTrack> = Vec::new();
    for s in &scene.shapes {
        for _ in &s.vertices {
            tracks.push(GroundTruthTrack {
                id: tracks.len() as u32,
                samples: Vec::with_capacity(steps + 1),
            });
        }
    }
    let record = |tracks: &mut Vec<GroundTruthTrack>, t: Micros| {
        let secs = t as f64 * 1e-6;
        let mut id = 0;
        for s in &scene.shapes {
            for (x, y) in s.world_vertices(secs) {
                tracks[id].samples.push(track_sample(x, y, t));
                id += 1;
            }
        }
    };

    let mut cur = vec![0.0; g.pixel_count()];
    let mut next = vec![0.0; g.pixel_count()];
    let layers = layers_at(scene, g, 0);
    let mut prev_rect = layers.iter().fold(None, |r, l| union(r, l.rect));
    paint(&mut cur, g, prev_rect, &layers);
    let mut reference = cur.clone();
    record(&mut tracks, 0);

    let mut events = Vec::new();
    for k in 1..=steps as Micros {
        let t = k * dt;
        let layers = layers_at(scene, g, t);
        let now_rect = layers.iter().fold(None, |r, l| union(r, l.rect));
        let rect = union(prev_rect, now_rect);
        paint(&mut next, g, rect, &layers);
        if let Some((u0, v0, u1, v1)) = rect {
            for v in v0..=v1 {
                for u in u0..=u1 {
                    let i = (v * w + u) as usize;
                    let (r0, r1) = (cur[i], next[i]);
                    if r0 != r1 {
                        emit(
                            &mut events,
                            &mut reference[i],
                            r0,
                            r1,
                            c,
                            t - dt,
                            dt,
                            u as u16,
                            v as u16,
                        );
                        cur[i] = r1;
                    }
                }
            }
        }
        prev_rect = now_rect;
        record(&mut tracks, t);
    }

    if scene.noise_rate > 0.0 {
        add_noise(
            &mut events,
            g,
            scene.noise_rate,
            steps as Micros * dt,
            scene.seed,
        );
    }
    events.sort_by_key(|e| (e.ts, e.v as u32 * g.width + e.u as u32));
    Ok(Rendered { events, tracks })
}

/// Adds uniformly scattered events of random polarity at `rate` events per
/// pixel per second over `[1, duration]` microseconds. The stream is left
/// unsorted.
pub fn add_noise(
    events: &mut Vec<Event>,
    g: SensorGeometry,
    rate: f64,
    duration: Micros,
    seed: u64,
) {
    if duration <= 0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x006e_6f69_7365);
    let n = (rate * g.pixel_count() as f64 * duration as f64 * 1e-6).round() as usize;
    events.reserve(n);
    for _ in 0..n {
        let pol = if rng.gen_bool(0.5) {
            Polarity::Pos
        } else {
            Polarity::Neg
        };
        events.push(Event::new(
            rng.gen_range(0..g.width) as u16,
            rng.gen_range(0..g.height) as u16,
            pol,
            rng.gen_range(1..=duration),
        ));
    }
}

/// Re-checks a noise-free stream against the scene. Each event must fall in
/// a step whose end value lies at least `C` beyond the pixel's reference
/// level, counting the reference as its value at time zero plus `C` times
/// the signed sum of the earlier events at that pixel.
pub fn verify_events(scene: &Scene, g: SensorGeometry, events: &[Event]) -> Vec<Violation> {
    let dt = scene.dt_micros();
    let end = scene.steps() as Micros * dt;
    let c = scene.contrast_threshold;
    let tol = 1e-9;
    let mut reference: Vec<Option<f64>> = vec![None; g.pixel_count()];
    let mut out = Vec::new();
    for (index, e) in events.iter().enumerate() {
        if e.ts < 1 || e.ts > end || !g.contains(e.u as i64, e.v as i64) {
            out.push(Violation::OutOfRange { index });
            continue;
        }
        let (u, v) = (e.u as i64, e.v as i64);
        let slot = &mut reference[(v * g.width as i64 + u) as usize];
        let r = *slot.get_or_insert_with(|| pixel_value(scene, g, u, v, 0));
        let k = (e.ts + dt - 1) / dt;
        let s = e.pol.sign() as f64;
        let after = pixel_value(scene, g, u, v, k * dt);
        let before = pixel_value(scene, g, u, v, (k - 1) * dt);
        if s * (after - r) < c - tol {
            out.push(Violation::NoCrossing { index });
        } else if s * (before - r) >= c + tol {
            out.push(Violation::CrossedEarlier { index });
        }
        *slot = Some(r + s * c);
    }
    out
}
