//! Couette–Poiseuille flows in a straight channel of width `h`.
//!
//! In local coordinates the profile is `CP(y) = A y² + B y + b0`, driven by the
//! wall speeds `b0` (at `y = 0`), `b1` (at `y = h`) and the flux `F`. The
//! pressure is `Π(x) = 2 A x`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CouettePoiseuille {
    pub h: f64,
    pub b0: f64,
    pub b1: f64,
    pub flux: f64,
    pub a: f64,
    pub b: f64,
}

/// Stream function with `Ψ(0) = 0` and `Ψ' = CP`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamProfile {
    pub cubic: f64,
    pub quadratic: f64,
    pub linear: f64,
}

impl StreamProfile {
    pub fn eval(&self, y: f64) -> f64 {
        ((self.cubic * y + self.quadratic) * y + self.linear) * y
    }

    pub fn derivative(&self, y: f64) -> f64 {
        (3.0 * self.cubic * y + 2.0 * self.quadratic) * y + self.linear
    }
}

pub fn cp_from_data(h: f64, b0: f64, b1: f64, flux: f64) -> Result<CouettePoiseuille> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::NonpositiveWidth(h));
    }
    let a = (3.0 * (b0 + b1) * h - 6.0 * flux) / (h * h * h);
    let b = (-(4.0 * b0 + 2.0 * b1) * h + 6.0 * flux) / (h * h);
    Ok(CouettePoiseuille { h, b0, b1, flux, a, b })
}

impl CouettePoiseuille {
    pub fn zero(h: f64) -> Self {
        CouettePoiseuille { h, b0: 0.0, b1: 0.0, flux: 0.0, a: 0.0, b: 0.0 }
    }

    pub fn velocity(&self, y: f64) -> f64 {
        (self.a * y + self.b) * y + self.b0
    }

    pub fn derivative(&self, y: f64) -> f64 {
        2.0 * self.a * y + self.b
    }

    pub fn pressure_slope(&self) -> f64 {
        2.0 * self.a
    }

    pub fn stream(&self) -> StreamProfile {
        StreamProfile { cubic: self.a / 3.0, quadratic: self.b / 2.0, linear: self.b0 }
    }

    /// Mean of the profile over `[y0, y1]`, taken from stream differences so that
    /// adjacent cell averages add up to the flux without rounding drift.
    pub fn cell_average(&self, y0: f64, y1: f64) -> f64 {
        let s = self.stream();
        (s.eval(y1) - s.eval(y0)) / (y1 - y0)
    }

    /// Closed-form flux `A h³/3 + B h²/2 + b0 h`.
    pub fn closed_flux(&self) -> f64 {
        let h = self.h;
        self.a * h * h * h / 3.0 + self.b * h * h / 2.0 + self.b0 * h
    }
}

pub fn cp_eval(cp: &CouettePoiseuille, y: f64) -> (f64, f64) {
    (cp.velocity(y), 0.0)
}

pub fn cp_pressure(cp: &CouettePoiseuille, x: f64) -> f64 {
    cp.pressure_slope() * x
}

pub fn cp_flux(cp: &CouettePoiseuille) -> f64 {
    cp.closed_flux()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualNorms {
    pub momentum: f64,
    pub continuity: f64,
    pub momentum_max: f64,
    pub continuity_max: f64,
}

/// Discrete Navier–Stokes residual of the sampled profile on a straight channel
/// grid whose height equals `cp.h`.
pub fn cp_discrete_residual(cp: &CouettePoiseuille, grid: &crate::grid::MacGrid) -> Result<ResidualNorms> {
    let height = grid.ny as f64 * grid.delta;
    if (height - cp.h).abs() > 1e-12 * cp.h || grid.n_fluid_cells() != grid.nx * grid.ny {
        return Err(Error::GridMismatch(format!(
            "expected a full {}-high channel, grid is {} x {} at {}",
            cp.h, grid.nx, grid.ny, grid.delta
        )));
    }
    let (field, bc) = crate::field::channel_cp_state(grid, cp);
    let zero = crate::field::FaceForce::zero(grid);
    Ok(crate::solver::residual::ns_residual(grid, &field, &bc, &zero))
}
