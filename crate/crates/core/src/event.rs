//! Events, sensor geometry and the Surface of Active Events (SAE) maps.
//!
//! Timestamps are kept as integer microseconds. An SAE pixel that never fired
//! holds [`NEVER`], which orders below every real timestamp.

use std::fmt;

use thiserror::Error;

/// Timestamp in integer microseconds.
pub type Micros = i64;

/// Sentinel for a pixel that has never fired.
pub const NEVER: Micros = i64::MIN;

pub const MICROS_PER_SEC: f64 = 1_000_000.0;

/// Converts seconds to the nearest microsecond.
pub fn secs_to_micros(secs: f64) -> Micros {
    (secs * MICROS_PER_SEC).round() as Micros
}

pub fn micros_to_secs(us: Micros) -> f64 {
    us as f64 / MICROS_PER_SEC
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("pixel ({u}, {v}) outside {width}x{height} sensor")]
    OutOfBounds {
        u: i64,
        v: i64,
        width: u32,
        height: u32,
    },
    #[error("sensor {width}x{height} is smaller than the 9x9 patch")]
    TooSmall { width: u32, height: u32 },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Neg,
    Pos,
}

impl Polarity {
    pub fn sign(self) -> i8 {
        match self {
            Polarity::Pos => 1,
            Polarity::Neg => -1,
        }
    }

    pub fn from_sign(sign: i8) -> Option<Self> {
        match sign {
            1 => Some(Polarity::Pos),
            -1 => Some(Polarity::Neg),
            _ => None,
        }
    }

    /// Maps the file convention `0 -> Neg`, `1 -> Pos`.
    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Polarity::Neg),
            1 => Some(Polarity::Pos),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Polarity::Pos => 1,
            Polarity::Neg => 0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarity::Pos => Polarity::Neg,
            Polarity::Neg => Polarity::Pos,
        }
    }
}

/// One asynchronous brightness-change sample.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    pub u: u16,
    pub v: u16,
    pub pol: Polarity,
    pub ts: Micros,
}

impl Event {
    pub fn new(u: u16, v: u16, pol: Polarity, ts: Micros) -> Self {
        Event { u, v, pol, ts }
    }

    pub fn ts_secs(&self) -> f64 {
        micros_to_secs(self.ts)
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {:+}, {}us)",
            self.u,
            self.v,
            self.pol.sign(),
            self.ts
        )
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct SensorGeometry {
    pub width: u32,
    pub height: u32,
}

impl Default for SensorGeometry {
    /// DAVIS-240 resolution.
    fn default() -> Self {
        SensorGeometry {
            width: 240,
            height: 180,
        }
    }
}

impl SensorGeometry {
    pub fn new(width: u32, height: u32) -> Result<Self, GeometryError> {
        if width < 9 || height < 9 {
            return Err(GeometryError::TooSmall { width, height });
        }
        Ok(SensorGeometry { width, height })
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    pub fn contains(&self, u: i64, v: i64) -> bool {
        u >= 0 && v >= 0 && u < self.width as i64 && v < self.height as i64
    }

    pub fn check(&self, u: i64, v: i64) -> Result<(), GeometryError> {
        if self.contains(u, v) {
            Ok(())
        } else {
            Err(GeometryError::OutOfBounds {
                u,
                v,
                width: self.width,
                height: self.height,
            })
        }
    }

    /// Distance from `(u, v)` to the nearest sensor edge, in pixels.
    pub fn border_distance(&self, u: u16, v: u16) -> u32 {
        let u = u as u32;
        let v = v as u32;
        u.min(v)
            .min(self.width.saturating_sub(1 + u))
            .min(self.height.saturating_sub(1 + v))
    }

    #[inline]
    fn index(&self, u: i64, v: i64) -> usize {
        v as usize * self.width as usize + u as usize
    }
}

/// Result of writing an event into an [`SaeMap`].
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SaeWrite {
    Stored,
    /// Timestamp older than the stored one; the map was left untouched.
    Stale,
}

/// Dense per-pixel latest-timestamp surface.
#[derive(Clone, Debug)]
pub struct SaeMap {
    geometry: SensorGeometry,
    ts: Vec<Micros>,
    pol: Option<Vec<Option<Polarity>>>,
}

impl SaeMap {
    pub fn new(geometry: SensorGeometry) -> Self {
        SaeMap {
            geometry,
            ts: vec![NEVER; geometry.pixel_count()],
            pol: None,
        }
    }

    /// A map that also remembers the polarity of the latest event (the global SAE).
    pub fn with_polarity(geometry: SensorGeometry) -> Self {
        SaeMap {
            pol: Some(vec![None; geometry.pixel_count()]),
            ..SaeMap::new(geometry)
        }
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    /// Latest timestamp at `(u, v)`; [`NEVER`] if unset or outside the sensor.
    #[inline]
    pub fn ts_at(&self, u: i64, v: i64) -> Micros {
        if self.geometry.contains(u, v) {
            self.ts[self.geometry.index(u, v)]
        } else {
            NEVER
        }
    }

    /// Polarity of the latest event; `None` if unset or the map tracks no polarity.
    pub fn pol_at(&self, u: i64, v: i64) -> Option<Polarity> {
        if !self.geometry.contains(u, v) {
            return None;
        }
        let idx = self.geometry.index(u, v);
        self.pol.as_ref().and_then(|p| p[idx])
    }

    pub fn is_fired(&self, u: i64, v: i64) -> bool {
        self.ts_at(u, v) != NEVER
    }

    /// Writes `e` into the map. Events older than the stored timestamp are
    /// rejected with [`SaeWrite::Stale`] so the surface stays monotone.
    pub fn update(&mut self, e: &Event) -> Result<SaeWrite, GeometryError> {
        let (u, v) = (e.u as i64, e.v as i64);
        self.geometry.check(u, v)?;
        let idx = self.geometry.index(u, v);
        if e.ts < self.ts[idx] {
            return Ok(SaeWrite::Stale);
        }
        self.ts[idx] = e.ts;
        if let Some(pol) = self.pol.as_mut() {
            pol[idx] = Some(e.pol);
        }
        Ok(SaeWrite::Stored)
    }

    /// Writes a raw timestamp, bypassing the monotonicity check. Used to
    /// build surfaces directly in tests and tools.
    pub fn set(&mut self, u: i64, v: i64, ts: Micros) -> Result<(), GeometryError> {
        self.geometry.check(u, v)?;
        let idx = self.geometry.index(u, v);
        self.ts[idx] = ts;
        Ok(())
    }

    pub fn clear(&mut self) {
        self.ts.fill(NEVER);
        if let Some(pol) = self.pol.as_mut() {
            pol.fill(None);
        }
    }
}

/// The four surfaces used by the pipeline, minus the local-binary patch which
/// is built on demand.
#[derive(Clone, Debug)]
pub struct SaeFamily {
    /// Every incoming event, with polarity.
    pub global: SaeMap,
    pub enhanced_pos: SaeMap,
    pub enhanced_neg: SaeMap,
}

impl SaeFamily {
    pub fn new(geometry: SensorGeometry) -> Self {
        SaeFamily {
            global: SaeMap::with_polarity(geometry),
            enhanced_pos: SaeMap::new(geometry),
            enhanced_neg: SaeMap::new(geometry),
        }
    }

    pub fn enhanced(&self, pol: Polarity) -> &SaeMap {
        match pol {
            Polarity::Pos => &self.enhanced_pos,
            Polarity::Neg => &self.enhanced_neg,
        }
    }

    pub fn enhanced_mut(&mut self, pol: Polarity) -> &mut SaeMap {
        match pol {
            Polarity::Pos => &mut self.enhanced_pos,
            Polarity::Neg => &mut self.enhanced_neg,
        }
    }
}

pub const PATCH_SIZE: usize = 9;
pub const PATCH_RADIUS: i64 = 4;

/// 9x9 recency mask centred on an event (the local-binary SAE).
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct BinaryPatch {
    pub bits: [[bool; PATCH_SIZE]; PATCH_SIZE],
    pub center: (u16, u16),
}

impl BinaryPatch {
    pub fn empty(center: (u16, u16)) -> Self {
        BinaryPatch {
            bits: [[false; PATCH_SIZE]; PATCH_SIZE],
            center,
        }
    }

    /// Builds a patch from rows of `0`/`1` characters; other characters are ignored.
    pub fn from_rows(rows: [&str; PATCH_SIZE]) -> Self {
        let mut patch = BinaryPatch::empty((0, 0));
        for (r, row) in rows.iter().enumerate() {
            for (c, ch) in row.chars().filter(|c| *c == '0' || *c == '1').enumerate() {
                patch.bits[r][c] = ch == '1';
            }
        }
        patch
    }

    /// Row-major bit access: `row` is the v offset + 4, `col` the u offset + 4.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row][col]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().flatten().filter(|b| **b).count()
    }
}

/// Marks the `n` most recent fired pixels in the 9x9 window around `center`.
///
/// The centre pixel is taken first when it has fired (it holds the event being
/// processed). Remaining slots go to the largest timestamps; ties are broken
/// by row-major order. Pixels outside the sensor count as unset.
pub fn extract_binary_patch(
    map: &SaeMap,
    center: (u16, u16),
    n: usize,
) -> Result<BinaryPatch, GeometryError> {
    let (cu, cv) = (center.0 as i64, center.1 as i64);
    map.geometry().check(cu, cv)?;

    let mut patch = BinaryPatch::empty(center);
    let mut remaining = n;
    let center_ts = map.ts_at(cu, cv);
    if remaining > 0 && center_ts != NEVER {
        patch.bits[PATCH_RADIUS as usize][PATCH_RADIUS as usize] = true;
        remaining -= 1;
    }

    let mut fired: arrayvec::ArrayVec<(Micros, u8), 81> = arrayvec::ArrayVec::new();
    for row in 0..PATCH_SIZE as i64 {
        for col in 0..PATCH_SIZE as i64 {
            if row == PATCH_RADIUS && col == PATCH_RADIUS {
                continue;
            }
            let ts = map.ts_at(cu + col - PATCH_RADIUS, cv + row - PATCH_RADIUS);
            if ts != NEVER {
                fired.push((ts, (row * PATCH_SIZE as i64 + col) as u8));
            }
        }
    }

    if remaining < fired.len() {
        // newest first, then row-major
        fired.select_nth_unstable_by(remaining, |a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        fired.truncate(remaining);
    }
    for &(_, idx) in &fired {
        patch.bits[idx as usize / PATCH_SIZE][idx as usize % PATCH_SIZE] = true;
    }
    Ok(patch)
}

/// Radius-3 Bresenham ring, clockwise from 12 o'clock, as `(du, dv)`.
pub const CIRCLE3: [(i8, i8); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

/// Radius-4 ring, clockwise from 12 o'clock.
pub const CIRCLE4: [(i8, i8); 20] = [
    (0, -4),
    (1, -4),
    (2, -3),
    (3, -2),
    (4, -1),
    (4, 0),
    (4, 1),
    (3, 2),
    (2, 3),
    (1, 4),
    (0, 4),
    (-1, 4),
    (-2, 3),
    (-3, 2),
    (-4, 1),
    (-4, 0),
    (-4, -1),
    (-3, -2),
    (-2, -3),
    (-1, -4),
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unsupported circle radius {0}; expected 3 or 4")]
pub struct RadiusError(pub u8);

pub fn circle_offsets(radius: u8) -> Result<&'static [(i8, i8)], RadiusError> {
    match radius {
        3 => Ok(&CIRCLE3),
        4 => Ok(&CIRCLE4),
        r => Err(RadiusError(r)),
    }
}

/// Fills `out` with the timestamps on a ring around `center`; pixels outside
/// the sensor read as [`NEVER`].
#[inline]
pub fn circle_timestamps<const N: usize>(
    map: &SaeMap,
    center: (u16, u16),
    ring: &[(i8, i8); N],
) -> [Micros; N] {
    let (cu, cv) = (center.0 as i64, center.1 as i64);
    let mut out = [NEVER; N];
    for (slot, &(du, dv)) in out.iter_mut().zip(ring.iter()) {
        *slot = map.ts_at(cu + du as i64, cv + dv as i64);
    }
    out
}

/// Greedy growth of the newest arc on a ring.
///
/// `order[0]` is the newest pixel (first one clockwise from 12 o'clock on
/// ties); each later entry is the newer of the two pixels adjacent to the arc
/// built so far, clockwise on ties. Bit `L` of the mask is set when the first
/// `L` pixels of `order` are all strictly newer than every other ring pixel
/// (`1 <= L < N`).
pub fn newest_arc<const N: usize>(ring: &[Micros; N]) -> ([usize; N], u32) {
    let mut start = 0;
    for i in 1..N {
        if ring[i] > ring[start] {
            start = i;
        }
    }
    let mut order = [start; N];
    let (mut back, mut fwd) = (0, 0);
    let mut arc_min = ring[start];
    let mut mask = 0u32;
    for (len, slot) in order.iter_mut().enumerate().skip(1) {
        // the rest is the contiguous run after the arc's clockwise end
        let rest_max = (0..N - len)
            .map(|k| ring[(start + fwd + 1 + k) % N])
            .max()
            .unwrap();
        if arc_min > rest_max {
            mask |= 1 << len;
        }
        let cw = (start + fwd + 1) % N;
        let ccw = (start + N - back - 1) % N;
        let next = if ring[cw] >= ring[ccw] {
            fwd += 1;
            cw
        } else {
            back += 1;
            ccw
        };
        arc_min = arc_min.min(ring[next]);
        *slot = next;
    }
    (order, mask)
}

/// Ring offset and the timestamp found there.
pub type RingSample = ((i8, i8), Micros);

/// The ring pixels around `center` with their timestamps.
pub fn extract_circle(
    map: &SaeMap,
    center: (u16, u16),
    radius: u8,
) -> Result<Vec<RingSample>, RadiusError> {
    let ring = circle_offsets(radius)?;
    let (cu, cv) = (center.0 as i64, center.1 as i64);
    Ok(ring
        .iter()
        .map(|&(du, dv)| ((du, dv), map.ts_at(cu + du as i64, cv + dv as i64)))
        .collect())
}
