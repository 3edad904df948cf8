//! Corner scores on 9x9 binary patches.
//!
//! Gradients are 3x3 Sobel responses over the 7x7 interior of the patch. The
//! full Harris score assembles the Gaussian-weighted structure tensor; the
//! low-complexity score multiplies the summed absolute gradients.

use std::sync::OnceLock;

use crate::event::{BinaryPatch, PATCH_SIZE};

pub const GRAD_SIZE: usize = PATCH_SIZE - 2;

pub type GradientField = [[i32; GRAD_SIZE]; GRAD_SIZE];

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct HarrisParams {
    pub k: f64,
    pub gaussian_sigma: f64,
    pub score_threshold: f64,
}

impl Default for HarrisParams {
    fn default() -> Self {
        HarrisParams {
            k: 0.04,
            gaussian_sigma: 1.0,
            score_threshold: DEFAULT_HARRIS_THRESHOLD,
        }
    }
}

/// Default full-Harris threshold (calibrated on the synthetic presets).
pub const DEFAULT_HARRIS_THRESHOLD: f64 = 8.0;
/// Default LC-Harris threshold (calibrated against the full-Harris rate).
pub const DEFAULT_LC_THRESHOLD: f64 = 2500.0;

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ScoreResult {
    pub score: f64,
    pub is_corner: bool,
}

impl ScoreResult {
    fn new(score: f64, threshold: f64) -> Self {
        ScoreResult {
            score,
            is_corner: score > threshold,
        }
    }
}

fn as_ints(patch: &BinaryPatch) -> [[i32; PATCH_SIZE]; PATCH_SIZE] {
    patch.bits.map(|row| row.map(i32::from))
}

/// Sobel gradients `(Ix, Iy)` at each interior pixel. `Ix` grows to the right
/// (increasing u), `Iy` downwards (increasing v). The kernels are applied in
/// separable form: a central difference along one axis, `[1 2 1]` smoothing
/// along the other.
#[inline]
pub fn gradients(patch: &BinaryPatch) -> (GradientField, GradientField) {
    let b = as_ints(patch);
    let mut ix = [[0i32; GRAD_SIZE]; GRAD_SIZE];
    let mut iy = [[0i32; GRAD_SIZE]; GRAD_SIZE];
    // per row: horizontal difference and horizontal smoothing
    let mut diff = [[0i32; GRAD_SIZE]; PATCH_SIZE];
    let mut smooth = [[0i32; GRAD_SIZE]; PATCH_SIZE];
    for r in 0..PATCH_SIZE {
        for c in 0..GRAD_SIZE {
            diff[r][c] = b[r][c + 2] - b[r][c];
            smooth[r][c] = b[r][c] + 2 * b[r][c + 1] + b[r][c + 2];
        }
    }
    for r in 0..GRAD_SIZE {
        for c in 0..GRAD_SIZE {
            ix[r][c] = diff[r][c] + 2 * diff[r + 1][c] + diff[r + 2][c];
            iy[r][c] = smooth[r + 2][c] - smooth[r][c];
        }
    }
    (ix, iy)
}

/// Normalised 7x7 Gaussian window.
pub fn gaussian_window(sigma: f64) -> [[f64; GRAD_SIZE]; GRAD_SIZE] {
    let mut w = [[0.0; GRAD_SIZE]; GRAD_SIZE];
    let half = (GRAD_SIZE / 2) as f64;
    let mut sum = 0.0;
    for (r, row) in w.iter_mut().enumerate() {
        for (c, x) in row.iter_mut().enumerate() {
            let (dr, dc) = (r as f64 - half, c as f64 - half);
            *x = (-(dr * dr + dc * dc) / (2.0 * sigma * sigma)).exp();
            sum += *x;
        }
    }
    w.iter_mut().flatten().for_each(|x| *x /= sum);
    w
}

fn default_window() -> &'static [[f64; GRAD_SIZE]; GRAD_SIZE] {
    static W: OnceLock<[[f64; GRAD_SIZE]; GRAD_SIZE]> = OnceLock::new();
    W.get_or_init(|| gaussian_window(1.0))
}

/// Full Harris response `det(M) - k * trace(M)^2`.
pub fn harris_score(patch: &BinaryPatch, p: &HarrisParams) -> ScoreResult {
    let owned;
    let w = if p.gaussian_sigma == 1.0 {
        default_window()
    } else {
        owned = gaussian_window(p.gaussian_sigma);
        &owned
    };
    let (ix, iy) = gradients(patch);
    let (mut a, mut b, mut d) = (0.0, 0.0, 0.0);
    for r in 0..GRAD_SIZE {
        for c in 0..GRAD_SIZE {
            let (gx, gy) = (ix[r][c] as f64, iy[r][c] as f64);
            let g = w[r][c];
            a += g * gx * gx;
            b += g * gx * gy;
            d += g * gy * gy;
        }
    }
    let trace = a + d;
    ScoreResult::new((a * d - b * b) - p.k * trace * trace, p.score_threshold)
}

/// Low-complexity score `sum|Ix| * sum|Iy|`. Same Sobel responses as
/// [`gradients`], accumulated on the fly.
pub fn lc_harris_score(patch: &BinaryPatch, threshold: f64) -> ScoreResult {
    let b = as_ints(patch);
    let mut diff = [[0i32; GRAD_SIZE]; PATCH_SIZE];
    let mut smooth = [[0i32; GRAD_SIZE]; PATCH_SIZE];
    for r in 0..PATCH_SIZE {
        for c in 0..GRAD_SIZE {
            diff[r][c] = b[r][c + 2] - b[r][c];
            smooth[r][c] = b[r][c] + 2 * b[r][c + 1] + b[r][c + 2];
        }
    }
    let (mut sx, mut sy) = (0i32, 0i32);
    for r in 0..GRAD_SIZE {
        for c in 0..GRAD_SIZE {
            sx += (diff[r][c] + 2 * diff[r + 1][c] + diff[r + 2][c]).abs();
            sy += (smooth[r + 2][c] - smooth[r][c]).abs();
        }
    }
    ScoreResult::new(sx as f64 * sy as f64, threshold)
}

/// Outcome of matching the LC-Harris threshold to the full-Harris rate.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Calibration {
    pub threshold: f64,
    pub patches: usize,
    pub harris_corners: usize,
    pub lc_corners: usize,
}

impl Calibration {
    /// Relative difference between the two corner counts.
    pub fn rate_mismatch(&self) -> f64 {
        if self.harris_corners == 0 {
            return if self.lc_corners == 0 {
                0.0
            } else {
                f64::INFINITY
            };
        }
        (self.lc_corners as f64 - self.harris_corners as f64).abs() / self.harris_corners as f64
    }
}

/// Picks the LC-Harris threshold whose corner count on `patches` is closest
/// to the full-Harris count (the higher threshold on ties).
pub fn calibrate_lc_threshold(patches: &[BinaryPatch], harris: &HarrisParams) -> Calibration {
    let target = patches
        .iter()
        .filter(|p| harris_score(p, harris).is_corner)
        .count();
    let mut lc: Vec<f64> = patches
        .iter()
        .map(|p| lc_harris_score(p, 0.0).score)
        .collect();
    lc.sort_unstable_by(|a, b| b.total_cmp(a));
    let Some(&lowest) = lc.last() else {
        return Calibration {
            threshold: DEFAULT_LC_THRESHOLD,
            patches: 0,
            harris_corners: 0,
            lc_corners: 0,
        };
    };
    // threshold lc[i] lets through exactly the i scores above it
    let (threshold, passing) = (0..lc.len())
        .filter(|&i| i == 0 || lc[i] != lc[i - 1])
        .map(|i| (lc[i], i))
        .chain(std::iter::once((lowest - 1.0, lc.len())))
        .min_by_key(|&(_, n)| n.abs_diff(target))
        .unwrap();
    Calibration {
        threshold,
        patches: patches.len(),
        harris_corners: target,
        lc_corners: passing,
    }
}
