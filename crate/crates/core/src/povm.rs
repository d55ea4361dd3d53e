//! The ideal (demolition) unsharp time measurement: outcome density
//! `|h(tau)|^2`, interval probabilities, the maximum-likelihood point
//! estimate, and the sweep showing that no finite-width covariant clock
//! reproduces the ideal density.
//!
//! Nothing here returns a post-measurement state: the ideal measurement has
//! none. Posterior states exist only for the clock model in [`crate::clock`].

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::clock::{realized_density, ClockKind, ClockSpec};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::representation::{energy_to_time, EnergyState};
use crate::spectral::{autocorrelation, TrigSeries};

/// Nonnegative density sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    /// `sum_i p_i d_tau`; the deficit from 1 is mass outside the grid window.
    pub mass: f64,
}

impl DensityProfile {
    /// Round-off negatives from spectral evaluation are clamped to zero.
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Self {
        let values: Vec<f64> = values.into_iter().map(|v| v.max(0.0)).collect();
        let mass = values.iter().sum::<f64>() * grid.step();
        Self { grid, values, mass }
    }

    pub fn tail_loss(&self) -> f64 {
        1.0 - self.mass
    }

    /// Probability of `interval`, each node standing for the cell
    /// `[tau_i - d/2, tau_i + d/2)`; partial cells count by overlap length.
    pub fn probability(&self, interval: &Interval) -> IntervalProbability {
        let d = self.grid.step();
        let lo_edge = self.grid.tau_min - 0.5 * d;
        let hi_edge = self.grid.tau_max - 0.5 * d;
        let lo = interval.lo.max(lo_edge);
        let hi = interval.hi.min(hi_edge);
        let clipped = interval.lo < lo_edge || interval.hi > hi_edge;
        if hi <= lo {
            return IntervalProbability { probability: 0.0, clipped };
        }
        let first = (((lo - lo_edge) / d).floor() as usize).min(self.grid.m - 1);
        let last = (((hi - lo_edge) / d).ceil() as usize).min(self.grid.m);
        let probability = (first..last)
            .map(|i| {
                let a = lo_edge + i as f64 * d;
                let overlap = (hi.min(a + d) - lo.max(a)).max(0.0);
                self.values[i] * overlap
            })
            .sum();
        IntervalProbability { probability, clipped }
    }

    pub fn max_abs_diff(&self, other: &[f64]) -> f64 {
        self.values.iter().zip(other).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!("interval needs lo < hi, got ({lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalProbability {
    pub probability: f64,
    /// The interval reached past the grid and was cut to it.
    pub clipped: bool,
}

/// `p(tau) = |h(tau)|^2` through the direct time transform.
pub fn ideal_time_density(state: &EnergyState, tgrid: &TimeGrid) -> DensityProfile {
    let h = energy_to_time(state, tgrid);
    DensityProfile::new(*tgrid, h.values.iter().map(|v| v.norm_sqr()).collect())
}

/// `|h|^2` as a trigonometric series in `tau`, built from the energy
/// autocorrelation of the state. Evaluates anywhere, not just on a grid.
pub fn ideal_density_series(state: &EnergyState) -> TrigSeries {
    let dx = state.grid.step();
    let c = dx * dx / (2.0 * std::f64::consts::PI * state.params.hbar);
    let coeffs = autocorrelation(&state.amps).into_iter().map(|r| r.conj() * c).collect();
    TrigSeries { coeffs, spacing: dx / state.params.hbar }
}

pub fn povm_probability(state: &EnergyState, interval: &Interval, tgrid: &TimeGrid) -> IntervalProbability {
    ideal_time_density(state, tgrid).probability(interval)
}

/// Grid maximum refined by a three-point parabola; the first of tied maxima wins.
pub fn ml_estimate(density: &DensityProfile) -> Result<f64> {
    let v = &density.values;
    let (imax, &pmax) = v.iter().enumerate().fold((0, &v[0]), |best, cur| if *cur.1 > *best.1 { cur } else { best });
    if !(pmax > 0.0) {
        return Err(Error::ZeroMass);
    }
    let t0 = density.grid.point(imax);
    if imax == 0 || imax + 1 == v.len() {
        return Ok(t0);
    }
    let (a, b, c) = (v[imax - 1], v[imax], v[imax + 1]);
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 {
        return Ok(t0);
    }
    let offset = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
    Ok(t0 + offset * density.grid.step())
}

/// Total-variation distance `1/2 sum |p - q| d_tau` on a shared grid.
pub fn tv_distance(p: &DensityProfile, q: &DensityProfile) -> Result<f64> {
    if p.grid != q.grid {
        return Err(Error::GridMismatch("densities on different time grids".into()));
    }
    Ok(0.5 * p.values.iter().zip(&q.values).map(|(a, b)| (a - b).abs()).sum::<f64>() * p.grid.step())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NogoRow {
    pub lambda: f64,
    pub tv_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NogoTable {
    pub rows: Vec<NogoRow>,
}

impl NogoTable {
    pub fn all_positive(&self) -> bool {
        self.rows.iter().all(|r| r.tv_distance > 0.0)
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].tv_distance < w[0].tv_distance)
    }

    pub fn last(&self) -> Option<&NogoRow> {
        self.rows.last()
    }
}

/// Distance between the ideal density and the density realized by the
/// exponential clock of each width, widths sorted descending.
pub fn nogo_sweep(state: &EnergyState, widths: &[f64], tgrid: &TimeGrid) -> Result<NogoTable> {
    if widths.is_empty() {
        return Err(Error::InvalidParameter("no-go sweep needs at least one width".into()));
    }
    if widths.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
        return Err(Error::InvalidParameter("no-go widths must be > 0".into()));
    }
    if widths.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidParameter("no-go widths must be sorted descending".into()));
    }
    let ideal = DensityProfile::new(*tgrid, ideal_density_series(state).eval_grid(tgrid));
    let rows = widths
        .iter()
        .map(|&lambda| {
            let clock = ClockSpec::new(ClockKind::ExponentialA { lambda }, state.params)?;
            let real = realized_density(state, &clock, tgrid)?;
            Ok(NogoRow { lambda, tv_distance: tv_distance(&real, &ideal)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NogoTable { rows })
}

/// The (unnormalized) ideal outcome vector `chi(tau) = (2 pi hbar)^(-1/2) |i tau/hbar)`
/// paired with `state`, i.e. `h(tau)`; exposed for symmetry with the clock API.
pub fn ideal_amplitude(state: &EnergyState, tau: f64) -> C64 {
    crate::representation::time_amplitude_at(state, tau)
}
