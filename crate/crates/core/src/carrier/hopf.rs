//! Wall-distance cut-off and the outlet fields it produces.

use crate::error::{Error, Result};
use crate::exact::CouettePoiseuille;

/// Cut-off `ψ(δ)`: 1 up to `a_thr`, 0 from `b_thr`, and a ramp that is linear in
/// `ln δ` between them, with the two corners rounded so that `ψ` is C¹.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfCutoff {
    pub eps: f64,
    pub a_thr: f64,
    pub b_thr: f64,
    /// `ln(b_thr / a_thr)`.
    log_width: f64,
    /// Fraction of the ramp (in log variable) used for each rounded corner.
    band: f64,
}

impl HopfCutoff {
    pub fn new(eps: f64) -> Result<HopfCutoff> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::BadEpsilon(eps));
        }
        let a_thr = 0.5 * (-2.0 / eps).exp();
        let b_thr = (-1.0 / eps).exp() + a_thr;
        // ln(b/a) = ln(2 e^{1/ε} + 1), computed without overflow.
        let log_width = 1.0 / eps + (2.0 + (-1.0 / eps).exp()).ln();
        // The rounded ramp has peak slope 1/(1 − band) in the log variable; keep
        // it inside the ε/δ bound.
        let headroom = 1.0 - 1.0 / (eps * log_width);
        let band = f64::min(0.05, 0.5 * headroom);
        Ok(HopfCutoff { eps, a_thr, b_thr, log_width, band })
    }

    pub fn log_width(&self) -> f64 {
        self.log_width
    }

    /// Ramp profile in `s ∈ [0, 1]` (0 at `b_thr`, 1 at `a_thr`) and its slope.
    fn ramp(&self, s: f64) -> (f64, f64) {
        let e = self.band;
        let k = 1.0 / (1.0 - e);
        if s <= 0.0 {
            (0.0, 0.0)
        } else if s >= 1.0 {
            (1.0, 0.0)
        } else if s < e {
            (0.5 * k * s * s / e, k * s / e)
        } else if s > 1.0 - e {
            let r = 1.0 - s;
            (1.0 - 0.5 * k * r * r / e, k * r / e)
        } else {
            (0.5 * k * e + k * (s - e), k)
        }
    }

    pub fn psi(&self, delta: f64) -> f64 {
        if delta <= self.a_thr {
            1.0
        } else if delta >= self.b_thr {
            0.0
        } else {
            self.ramp((self.b_thr / delta).ln() / self.log_width).0
        }
    }

    /// `dψ/dδ`.
    pub fn dpsi(&self, delta: f64) -> f64 {
        if delta <= self.a_thr || delta >= self.b_thr {
            0.0
        } else {
            let (_, g) = self.ramp((self.b_thr / delta).ln() / self.log_width);
            -g / (delta * self.log_width)
        }
    }

    /// Break points of the ramp in `δ`, ascending.
    pub fn breakpoints(&self) -> [f64; 4] {
        let at = |s: f64| self.b_thr * (-s * self.log_width).exp();
        [self.a_thr, at(1.0 - self.band), at(self.band), self.b_thr]
    }
}

pub fn hopf_psi(eps: f64, delta: f64) -> Result<f64> {
    if delta < 0.0 {
        return Err(Error::OutOfRange(format!("distance {delta}")));
    }
    Ok(HopfCutoff::new(eps)?.psi(delta))
}

/// Outlet field `V = (d/dy (ψΨ), 0)` with `δ = min(y, h − y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutletCarrier {
    pub cp: CouettePoiseuille,
    pub cutoff: HopfCutoff,
}

impl OutletCarrier {
    pub fn new(cp: CouettePoiseuille, eps: f64) -> Result<Self> {
        Ok(OutletCarrier { cp, cutoff: HopfCutoff::new(eps)? })
    }

    fn dist(&self, y: f64) -> (f64, f64) {
        if y <= 0.5 * self.cp.h {
            (y.max(0.0), 1.0)
        } else {
            ((self.cp.h - y).max(0.0), -1.0)
        }
    }

    /// Stream function `ψ(δ(y)) Ψ(y)`; equals 0 at `y = 0` and `F` at `y = h`.
    pub fn stream(&self, y: f64) -> f64 {
        let (d, _) = self.dist(y);
        self.cutoff.psi(d) * self.cp.stream().eval(y)
    }

    pub fn velocity(&self, y: f64) -> f64 {
        let (d, s) = self.dist(y);
        let st = self.cp.stream();
        self.cutoff.dpsi(d) * s * st.eval(y) + self.cutoff.psi(d) * st.derivative(y)
    }
}

/// Point values `(u, v)` of the outlet field at the given heights.
pub fn outlet_carrier(cp: &CouettePoiseuille, eps: f64, ys: &[f64]) -> Result<Vec<(f64, f64)>> {
    let oc = OutletCarrier::new(*cp, eps)?;
    ys.iter()
        .map(|&y| {
            if !(-1e-12..=cp.h + 1e-12).contains(&y) {
                return Err(Error::OutOfRange(format!("height {y}")));
            }
            Ok((oc.velocity(y), 0.0))
        })
        .collect()
}

/// Quintic blend: 1 for `x ≤ 0.5`, 0 for `x ≥ 1.5`.
pub fn zeta(x: f64) -> f64 {
    let s = (x - 0.5).clamp(0.0, 1.0);
    1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::cp_from_data;

    #[test]
    fn thresholds() {
        assert_eq!(hopf_psi(1.0, 0.05).unwrap(), 1.0);
        assert_eq!(hopf_psi(0.5, 0.2).unwrap(), 0.0);
        let v = hopf_psi(1.0, 0.2).unwrap();
        assert!(v > 0.0 && v < 1.0);
        assert!(matches!(hopf_psi(0.0, 0.1), Err(Error::BadEpsilon(_))));
        assert!(matches!(hopf_psi(1.5, 0.1), Err(Error::BadEpsilon(_))));
    }

    #[test]
    fn ramp_is_continuous_at_joints() {
        for eps in [1.0, 0.5, 0.125, 0.03125] {
            let c = HopfCutoff::new(eps).unwrap();
            for b in c.breakpoints() {
                let (l, r) = (c.psi(b * (1.0 - 1e-9)), c.psi(b * (1.0 + 1e-9)));
                assert!((l - r).abs() < 1e-6, "eps {eps} at {b}: {l} vs {r}");
            }
        }
    }

    #[test]
    fn derivative_matches_differences() {
        let c = HopfCutoff::new(0.5).unwrap();
        for k in 1..50 {
            let d = c.a_thr + (c.b_thr - c.a_thr) * k as f64 / 50.0;
            let h = 1e-7 * d;
            let fd = (c.psi(d + h) - c.psi(d - h)) / (2.0 * h);
            assert!((fd - c.dpsi(d)).abs() < 1e-5 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn outlet_field_traces_and_flux() {
        let cp = cp_from_data(1.0, 0.3, -0.1, 0.4).unwrap();
        let oc = OutletCarrier::new(cp, 0.5).unwrap();
        assert!((oc.velocity(0.0) - 0.3).abs() < 1e-15);
        assert!((oc.velocity(1.0) + 0.1).abs() < 1e-14);
        assert_eq!(oc.velocity(0.5), 0.0);
        assert!((oc.stream(1.0) - 0.4).abs() < 1e-14);
        assert_eq!(oc.stream(0.0), 0.0);
    }

    #[test]
    fn blend_limits() {
        assert_eq!(zeta(0.2), 1.0);
        assert_eq!(zeta(1.7), 0.0);
        assert!((zeta(1.0) - 0.5).abs() < 1e-15);
    }
}
