//! Third layer: the lifetime filter over the corner SAE (C-SAE).

use crate::event::{Event, Micros, SaeMap, SensorGeometry, NEVER};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct LifetimeEntry {
    pub position: (u16, u16),
    pub ts: Micros,
    /// Time for the edge to shift by one pixel.
    pub lifetime: Micros,
}

impl LifetimeEntry {
    pub fn expires_at(&self) -> Micros {
        self.ts + self.lifetime
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum LifetimeDecision {
    Discard { blocker: LifetimeEntry },
    Pass { lifetime: Micros, expired: usize },
}

/// Stored corner candidates, one slot per pixel.
#[derive(Clone, Debug)]
pub struct CornerSae {
    geometry: SensorGeometry,
    slots: Vec<Option<(Micros, Micros)>>,
    len: usize,
}

impl CornerSae {
    pub fn new(geometry: SensorGeometry) -> Self {
        CornerSae {
            geometry,
            slots: vec![None; geometry.pixel_count()],
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn idx(&self, u: i64, v: i64) -> usize {
        v as usize * self.geometry.width as usize + u as usize
    }

    pub fn get(&self, u: u16, v: u16) -> Option<LifetimeEntry> {
        self.slots[self.idx(u as i64, v as i64)].map(|(ts, lifetime)| LifetimeEntry {
            position: (u, v),
            ts,
            lifetime,
        })
    }

    pub fn insert(&mut self, entry: LifetimeEntry) {
        let i = self.idx(entry.position.0 as i64, entry.position.1 as i64);
        if self.slots[i].is_none() {
            self.len += 1;
        }
        self.slots[i] = Some((entry.ts, entry.lifetime));
    }

    pub fn remove(&mut self, u: u16, v: u16) -> Option<LifetimeEntry> {
        let entry = self.get(u, v);
        let i = self.idx(u as i64, v as i64);
        if self.slots[i].take().is_some() {
            self.len -= 1;
        }
        entry
    }

    /// Entries within Manhattan distance `radius` of `center`, nearest first,
    /// most recent first among equals.
    pub fn neighbours(&self, center: (u16, u16), radius: u32) -> Vec<(u32, LifetimeEntry)> {
        let (cu, cv) = (center.0 as i64, center.1 as i64);
        let r = radius as i64;
        let mut out = Vec::new();
        for dv in -r..=r {
            let span = r - dv.abs();
            for du in -span..=span {
                let (u, v) = (cu + du, cv + dv);
                if !self.geometry.contains(u, v) {
                    continue;
                }
                if let Some((ts, lifetime)) = self.slots[self.idx(u, v)] {
                    let d = (du.abs() + dv.abs()) as u32;
                    out.push((
                        d,
                        LifetimeEntry {
                            position: (u as u16, v as u16),
                            ts,
                            lifetime,
                        },
                    ));
                }
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.ts.cmp(&a.1.ts)));
        out
    }
}

/// Largest non-negative `e.ts - esae(p + dp)` over the 8-connected neighbours,
/// capped at `max_lifetime`; zero when no neighbour has fired.
pub fn lifetime_of(esae: &SaeMap, e: &Event, max_lifetime: Micros) -> Micros {
    let (u, v) = (e.u as i64, e.v as i64);
    let mut best = 0;
    for dv in -1..=1 {
        for du in -1..=1 {
            if du == 0 && dv == 0 {
                continue;
            }
            let ts = esae.ts_at(u + du, v + dv);
            if ts == NEVER || ts > e.ts {
                continue;
            }
            best = best.max(e.ts - ts);
        }
    }
    best.min(max_lifetime)
}

#[derive(Clone, Debug)]
pub struct LifetimeFilter {
    pub csae: CornerSae,
    radius: u32,
    max_lifetime: Micros,
}

impl LifetimeFilter {
    pub fn new(geometry: SensorGeometry, radius: u32, max_lifetime: Micros) -> Self {
        LifetimeFilter {
            csae: CornerSae::new(geometry),
            radius,
            max_lifetime,
        }
    }

    /// A candidate is discarded while any stored neighbour is still alive;
    /// otherwise the expired neighbours are cleared and the candidate stored
    /// with its own lifetime.
    pub fn filter(&mut self, esae: &SaeMap, e: &Event) -> LifetimeDecision {
        let neighbours = self.csae.neighbours((e.u, e.v), self.radius);
        if let Some(&(_, blocker)) = neighbours.iter().find(|(_, n)| e.ts <= n.expires_at()) {
            return LifetimeDecision::Discard { blocker };
        }
        for (_, n) in &neighbours {
            self.csae.remove(n.position.0, n.position.1);
        }
        let lifetime = lifetime_of(esae, e, self.max_lifetime);
        self.csae.insert(LifetimeEntry {
            position: (e.u, e.v),
            ts: e.ts,
            lifetime,
        });
        LifetimeDecision::Pass {
            lifetime,
            expired: neighbours.len(),
        }
    }
}
