//! Physical units and the uniform grids every other module samples on.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    pub hbar: f64,
}

impl PhysicsParams {
    pub fn new(hbar: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidParameter(format!("hbar must be > 0, got {hbar}")));
        }
        Ok(Self { hbar })
    }
}

impl Default for PhysicsParams {
    fn default() -> Self {
        Self { hbar: 1.0 }
    }
}

/// Uniform energy grid on `[0, eps_max)` sampled at cell midpoints
/// `eps_j = (j + 1/2) * step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyGrid {
    pub eps_max: f64,
    pub n: usize,
}

impl EnergyGrid {
    pub fn new(eps_max: f64, n: usize) -> Result<Self> {
        if !(eps_max.is_finite() && eps_max > 0.0) {
            return Err(Error::InvalidParameter(format!("eps_max must be > 0, got {eps_max}")));
        }
        if n < 2 {
            return Err(Error::InvalidParameter(format!("energy grid needs n >= 2, got {n}")));
        }
        Ok(Self { eps_max, n })
    }

    #[inline]
    pub fn step(&self) -> f64 {
        self.eps_max / self.n as f64
    }

    #[inline]
    pub fn point(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.step()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.point(j))
    }

    /// Same spacing, `extra` more cells on top.
    pub fn extended(&self, extra: usize) -> Self {
        Self { eps_max: self.step() * (self.n + extra) as f64, n: self.n + extra }
    }

    /// Number of cells `q` with `q * step == lambda` (to 1e-9 relative), if any.
    pub fn commensurate_cells(&self, lambda: f64) -> Option<usize> {
        let q = lambda / self.step();
        let r = q.round();
        ((q - r).abs() <= 1e-9 * q.max(1.0)).then_some(r as usize)
    }

    /// Period of the time representation of any state on this grid: `2 pi hbar / step`.
    pub fn time_period(&self, params: &PhysicsParams) -> f64 {
        2.0 * PI * params.hbar / self.step()
    }
}

/// Uniform time grid with nodes `tau_i = tau_min + i * step`, `i = 0..m`,
/// `step = (tau_max - tau_min) / m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub tau_min: f64,
    pub tau_max: f64,
    pub m: usize,
}

impl TimeGrid {
    pub fn new(tau_min: f64, tau_max: f64, m: usize) -> Result<Self> {
        if !(tau_min.is_finite() && tau_max.is_finite() && tau_min < tau_max) {
            return Err(Error::InvalidParameter(format!(
                "time grid needs tau_min < tau_max, got [{tau_min}, {tau_max})"
            )));
        }
        if m < 2 {
            return Err(Error::InvalidParameter(format!("time grid needs m >= 2, got {m}")));
        }
        Ok(Self { tau_min, tau_max, m })
    }

    /// One full period `[-P/2, P/2)` of the time representation of `egrid`.
    ///
    /// On such a grid the energy/time transforms are exact discrete Fourier
    /// pairs, so whole-line quantities (norms, masses, distances) carry no
    /// truncation tail.
    pub fn full_period(egrid: &EnergyGrid, params: &PhysicsParams, m: usize) -> Result<Self> {
        let p = egrid.time_period(params);
        Self::new(-0.5 * p, 0.5 * p, m)
    }

    #[inline]
    pub fn step(&self) -> f64 {
        (self.tau_max - self.tau_min) / self.m as f64
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        self.tau_min + i as f64 * self.step()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.m).map(move |i| self.point(i))
    }

    pub fn span(&self) -> f64 {
        self.tau_max - self.tau_min
    }

    pub fn is_full_period(&self, egrid: &EnergyGrid, params: &PhysicsParams) -> bool {
        let p = egrid.time_period(params);
        (self.span() - p).abs() <= 1e-12 * p
    }

    /// Index of the node nearest to `tau`, if `tau` lies inside the grid span.
    pub fn nearest(&self, tau: f64) -> Option<usize> {
        if tau < self.tau_min || tau >= self.tau_max {
            return None;
        }
        let i = ((tau - self.tau_min) / self.step()).round() as usize;
        Some(i.min(self.m - 1))
    }

    pub fn commensurate_steps(&self, t: f64) -> Option<i64> {
        let q = t / self.step();
        let r = q.round();
        ((q - r).abs() <= 1e-9 * q.abs().max(1.0)).then_some(r as i64)
    }
}
