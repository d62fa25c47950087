//! Sampled check of the Leray–Hopf inequality on an outlet slab
//! `{a < x < b, 0 < y < h}` for a carrier of the form `U = (U₁(y), 0)`.
//!
//! Test fields are `η = (∂_y χ, −∂_x χ)` with `χ` constant on each wall, so `η`
//! is divergence-free and vanishes on the walls. The ratio
//! `(|∫(η·∇)U·η| + |∫(η·∇)η·U|) / ∫|∇η|²` is evaluated by midpoint quadrature on
//! a mesh graded towards the walls and the cut-off break points; the first term
//! is integrated by parts in `y` so only `U₁` is needed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// A test stream function with its derivatives
/// `[χ_x, χ_y, χ_xx, χ_xy, χ_yy]`.
pub trait TestStream: Sync {
    fn derivatives(&self, x: f64, y: f64) -> [f64; 5];
}

/// `χ = c·S(y/h) + (y(h−y))² Σ α_kl cos(kπ(x−a)/(b−a)) ỹ^l`, `ỹ = 2y/h − 1`,
/// with `S(s) = 3s² − 2s³`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomStream {
    pub h: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: Vec<Vec<f64>>,
    pub scale: f64,
}

pub const MODES_X: usize = 5;
pub const MODES_Y: usize = 5;

impl RandomStream {
    pub fn draw(h: f64, a: f64, b: f64, rng: &mut impl Rng) -> RandomStream {
        let alpha = (0..MODES_X)
            .map(|k| {
                (0..MODES_Y).map(|l| (2.0 * rng.random::<f64>() - 1.0) / ((1 + k + l) * (1 + k + l)) as f64).collect()
            })
            .collect();
        let c = 2.0 * rng.random::<f64>() - 1.0;
        RandomStream { h, a, b, c, alpha, scale: 1.0 }
    }

    pub fn scaled(&self, s: f64) -> RandomStream {
        RandomStream { scale: self.scale * s, ..self.clone() }
    }
}

impl TestStream for RandomStream {
    fn derivatives(&self, x: f64, y: f64) -> [f64; 5] {
        let h = self.h;
        let w = std::f64::consts::PI / (self.b - self.a);
        let th = (x - self.a) * w;
        let yt = 2.0 * y / h - 1.0;
        let dy = 2.0 / h;
        let (mut p, mut px, mut pxx, mut py, mut pxy, mut pyy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (k, row) in self.alpha.iter().enumerate() {
            let kw = k as f64 * w;
            let (s, c) = (k as f64 * th).sin_cos();
            let (ck, ck1, ck2) = (c, -kw * s, -kw * kw * c);
            // m_l = ỹ^l and its y-derivatives.
            let (mut m, mut m1, mut m2) = (0.0, 0.0, 0.0);
            let mut pw = [1.0; MODES_Y + 1];
            for l in 1..=MODES_Y {
                pw[l] = pw[l - 1] * yt;
            }
            for (l, &al) in row.iter().enumerate() {
                let lf = l as f64;
                m += al * pw[l];
                if l >= 1 {
                    m1 += al * lf * pw[l - 1] * dy;
                }
                if l >= 2 {
                    m2 += al * lf * (lf - 1.0) * pw[l - 2] * dy * dy;
                }
            }
            p += ck * m;
            px += ck1 * m;
            pxx += ck2 * m;
            py += ck * m1;
            pxy += ck1 * m1;
            pyy += ck * m2;
        }
        let g = y * (h - y);
        let q = g * g;
        let q1 = 2.0 * g * (h - 2.0 * y);
        let q2 = 2.0 * ((h - 2.0 * y) * (h - 2.0 * y) - 2.0 * g);
        let s = y / h;
        let s1 = (6.0 * s - 6.0 * s * s) / h;
        let s2 = (6.0 - 12.0 * s) / (h * h);
        let k = self.scale;
        [
            k * q * px,
            k * (self.c * s1 + q1 * p + q * py),
            k * q * pxx,
            k * (q1 * px + q * pxy),
            k * (self.c * s2 + q2 * p + 2.0 * q1 * py + q * pyy),
        ]
    }
}

/// Midpoint nodes and weights on `[0, h]`. Panels are split at the break points
/// (distances from either wall) and grow geometrically away from the walls,
/// so that layers far thinner than `h` are still resolved.
pub fn graded_nodes(h: f64, breaks: &[f64], per_panel: usize) -> Vec<(f64, f64)> {
    let half = 0.5 * h;
    let mut pts: Vec<f64> = vec![0.0, half];
    let mut finest = half;
    for &b in breaks {
        if b > 0.0 && b < half {
            pts.push(b);
            finest = finest.min(b);
        }
    }
    let mut g = half;
    let floor = finest / 4096.0;
    while g > floor {
        g /= 1.5;
        pts.push(g);
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * half);
    let mut out = Vec::new();
    for w in pts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let dy = (hi - lo) / per_panel as f64;
        for k in 0..per_panel {
            let y = lo + (k as f64 + 0.5) * dy;
            out.push((y, dy));
            out.push((h - y, dy));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioSample {
    pub ratio: f64,
    pub hardy: f64,
    pub trilinear_1: f64,
    pub trilinear_2: f64,
    pub dirichlet: f64,
}

/// Quadrature of the trilinear terms for one test stream.
pub fn sample_ratio(
    chi: &dyn TestStream,
    u1: &dyn Fn(f64) -> f64,
    h: f64,
    a: f64,
    b: f64,
    ynodes: &[(f64, f64)],
    nx: usize,
) -> RatioSample {
    let dx = (b - a) / nx as f64;
    let (mut t1, mut t2, mut dn, mut hardy) = (0.0, 0.0, 0.0, 0.0);
    let uy: Vec<f64> = ynodes.iter().map(|&(y, _)| u1(y)).collect();
    for ix in 0..nx {
        let x = a + (ix as f64 + 0.5) * dx;
        for (k, &(y, wy)) in ynodes.iter().enumerate() {
            let [cx, cy, cxx, cxy, cyy] = chi.derivatives(x, y);
            let (e1, e2) = (cy, -cx);
            let (e1x, e1y, e2x, e2y) = (cxy, cyy, -cxx, -cxy);
            let w = wy * dx;
            let u = uy[k];
            // ∫ η₂ U₁' η₁ = −∫ U₁ ∂_y(η₁ η₂)
            t1 -= u * (e1y * e2 + e1 * e2y) * w;
            t2 += u * (e1 * e1x + e2 * e1y) * w;
            dn += (e1x * e1x + e1y * e1y + e2x * e2x + e2y * e2y) * w;
            let d = y.min(h - y);
            hardy += (e1 * e1 + e2 * e2) / (d * d) * w;
        }
    }
    let num = t1.abs() + t2.abs();
    let ratio = if num == 0.0 { 0.0 } else { num / dn };
    RatioSample {
        ratio,
        hardy: if dn > 0.0 { (hardy / dn).sqrt() } else { 0.0 },
        trilinear_1: t1,
        trilinear_2: t2,
        dirichlet: dn,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlabCertificate {
    pub max_ratio: f64,
    pub max_hardy: f64,
    /// Largest relative change of the ratio when the test field is tripled.
    pub scaling_defect: f64,
    pub samples: usize,
}

/// Per-sample seed, so results do not depend on the number of workers.
pub fn sample_seed(seed: u64, outlet: usize, k: usize) -> u64 {
    let mut z =
        seed ^ (outlet as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (k as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[allow(clippy::too_many_arguments)]
pub fn certify_profile(
    u1: &(dyn Fn(f64) -> f64 + Sync),
    h: f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    n_samples: usize,
    seed: u64,
    outlet: usize,
) -> SlabCertificate {
    let ynodes = graded_nodes(h, breaks, 12);
    let nx = 48;
    let per: Vec<(f64, f64, f64)> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(seed, outlet, k));
            let chi = RandomStream::draw(h, a, b, &mut rng);
            let s1 = sample_ratio(&chi, u1, h, a, b, &ynodes, nx);
            let s3 = sample_ratio(&chi.scaled(3.0), u1, h, a, b, &ynodes, nx);
            let defect = (s1.ratio - s3.ratio).abs() / s1.ratio.max(f64::MIN_POSITIVE);
            (s1.ratio, s1.hardy, if s1.ratio == 0.0 { 0.0 } else { defect })
        })
        .collect();
    SlabCertificate {
        max_ratio: per.iter().map(|p| p.0).fold(0.0, f64::max),
        max_hardy: per.iter().map(|p| p.1).fold(0.0, f64::max),
        scaling_defect: per.iter().map(|p| p.2).fold(0.0, f64::max),
        samples: n_samples,
    }
}
