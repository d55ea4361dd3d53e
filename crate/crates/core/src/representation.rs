//! Positive-energy states, their time representation `h(tau)` and the
//! Laplace (coherent-amplitude) transform `eta(s)`.

use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::grid::{EnergyGrid, PhysicsParams, TimeGrid};
use crate::io::read_complex_table;
use crate::spectral::{exp_sum_at, exp_sum_grid, exp_sum_lattice, Sign};

/// Captured-mass fraction below which a built-in profile counts as empty.
pub const SUPPORT_FLOOR: f64 = 1e-12;

/// Profile of a state before discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StateSpec {
    /// Flat amplitude on `[a, b)`.
    Indicator { a: f64, b: f64 },
    /// `|psi|^2` Gaussian with mean `mu`, standard deviation `sigma`, truncated at 0.
    Gauss { mu: f64, sigma: f64 },
    /// `psi(eps) ~ exp(-beta eps)`.
    Exp { beta: f64 },
    /// CSV `eps,re,im`, linearly interpolated onto the grid.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyState {
    pub grid: EnergyGrid,
    pub params: PhysicsParams,
    pub amps: Vec<C64>,
}

/// A normalized state together with what normalization did to it.
#[derive(Debug, Clone)]
pub struct PreparedState {
    pub state: EnergyState,
    /// Factor the raw samples were multiplied by.
    pub scale: f64,
    /// Profile mass lying beyond `eps_max` (relative to the whole profile).
    pub tail_mass: f64,
}

pub fn make_energy_state(spec: &StateSpec, grid: EnergyGrid, params: PhysicsParams) -> Result<EnergyState> {
    prepare_energy_state(spec, grid, params).map(|p| p.state)
}

pub fn prepare_energy_state(spec: &StateSpec, grid: EnergyGrid, params: PhysicsParams) -> Result<PreparedState> {
    let emax = grid.eps_max;
    let (raw, tail_mass): (Vec<C64>, f64) = match spec {
        &StateSpec::Indicator { a, b } => {
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::NonFinite("indicator bounds".into()));
            }
            if b <= a {
                return Err(Error::InvalidParameter(format!("indicator needs a < b, got ({a}, {b})")));
            }
            if a < 0.0 {
                return Err(Error::InvalidParameter(format!("indicator needs a >= 0, got {a}")));
            }
            let amps =
                grid.points().map(|e| if e >= a && e < b { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).collect();
            let tail = ((b - emax.max(a)).max(0.0)) / (b - a);
            (amps, tail)
        }
        &StateSpec::Gauss { mu, sigma } => {
            if !(sigma.is_finite() && sigma > 0.0 && mu.is_finite()) {
                return Err(Error::InvalidParameter(format!("gauss needs sigma > 0, got {sigma}")));
            }
            let amps =
                grid.points().map(|e| C64::new((-(e - mu).powi(2) / (4.0 * sigma * sigma)).exp(), 0.0)).collect();
            // Fractions of the untruncated Gaussian mass.
            let captured = normal_cdf((emax - mu) / sigma) - normal_cdf(-mu / sigma);
            if captured < SUPPORT_FLOOR {
                return Err(Error::EmptySupport(format!(
                    "gauss(mu={mu}, sigma={sigma}) has mass {captured:e} on [0, {emax}), below floor {SUPPORT_FLOOR:e}"
                )));
            }
            let above = 1.0 - normal_cdf((emax - mu) / sigma);
            let positive = 1.0 - normal_cdf(-mu / sigma);
            (amps, above / positive)
        }
        &StateSpec::Exp { beta } => {
            if !(beta.is_finite() && beta > 0.0) {
                return Err(Error::InvalidParameter(format!("exp needs beta > 0, got {beta}")));
            }
            let amps = grid.points().map(|e| C64::new((-beta * e).exp(), 0.0)).collect();
            (amps, (-2.0 * beta * emax).exp())
        }
        StateSpec::File(path) => {
            let table = read_complex_table(path, "eps")?;
            let amps = grid.points().map(|e| table.interpolate(e)).collect();
            let total = table.mass_between(f64::NEG_INFINITY, f64::INFINITY);
            let above = table.mass_between(emax, f64::INFINITY);
            (amps, if total > 0.0 { above / total } else { 0.0 })
        }
    };
    let dx = grid.step();
    let norm2: f64 = raw.iter().map(|a| a.norm_sqr()).sum::<f64>() * dx;
    if !norm2.is_finite() {
        return Err(Error::NonFinite("state amplitudes".into()));
    }
    if norm2 <= 0.0 {
        return Err(Error::EmptySupport(format!("{spec:?} vanishes on [0, {emax})")));
    }
    let scale = norm2.sqrt().recip();
    let amps = raw.into_iter().map(|a| a * scale).collect();
    Ok(PreparedState { state: EnergyState { grid, params, amps }, scale, tail_mass })
}

/// Standard normal CDF via the complementary error function.
pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

impl EnergyState {
    pub fn new(grid: EnergyGrid, params: PhysicsParams, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != grid.n {
            return Err(Error::GridMismatch(format!("{} amplitudes for {} grid points", amps.len(), grid.n)));
        }
        if amps.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::NonFinite("state amplitudes".into()));
        }
        Ok(Self { grid, params, amps })
    }

    pub fn zero(grid: EnergyGrid, params: PhysicsParams) -> Self {
        Self { grid, params, amps: vec![C64::new(0.0, 0.0); grid.n] }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.step()
    }

    /// Rescale to unit norm; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n2 = self.norm_sqr();
        (n2 > 0.0).then(|| {
            let s = n2.sqrt().recip();
            Self { amps: self.amps.iter().map(|a| a * s).collect(), ..self.clone() }
        })
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self { amps: self.amps.iter().map(|a| a * c).collect(), ..self.clone() }
    }

    /// `a * self + b * other` on a shared grid.
    pub fn combine(&self, a: C64, other: &Self, b: C64) -> Result<Self> {
        check_compatible(self, other)?;
        Ok(Self { amps: self.amps.iter().zip(&other.amps).map(|(x, y)| a * x + b * y).collect(), ..self.clone() })
    }

    /// Mass strictly above energy `lambda`.
    pub fn mass_above(&self, lambda: f64) -> f64 {
        let dx = self.grid.step();
        self.grid.points().zip(&self.amps).filter(|(e, _)| *e > lambda).map(|(_, a)| a.norm_sqr()).sum::<f64>() * dx
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.amps.iter().zip(&other.amps).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    /// The same state on `grid.extended(extra)`, zero above the old top.
    pub fn padded(&self, extra: usize) -> Self {
        let mut amps = self.amps.clone();
        amps.resize(self.grid.n + extra, C64::new(0.0, 0.0));
        Self { grid: self.grid.extended(extra), params: self.params, amps }
    }
}

fn check_compatible(a: &EnergyState, b: &EnergyState) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", a.grid, b.grid)));
    }
    if a.params != b.params {
        return Err(Error::GridMismatch(format!("hbar {} vs {}", a.params.hbar, b.params.hbar)));
    }
    Ok(())
}

/// `<a|b> = sum_j conj(a_j) b_j d_eps`.
pub fn inner_product(a: &EnergyState, b: &EnergyState) -> Result<C64> {
    check_compatible(a, b)?;
    let s: C64 = a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum();
    Ok(s * a.grid.step())
}

/// Free evolution `exp(-i H t / hbar)`.
pub fn evolve(state: &EnergyState, t: f64) -> EnergyState {
    let hbar = state.params.hbar;
    let amps = state.grid.points().zip(&state.amps).map(|(e, a)| a * C64::from_polar(1.0, -e * t / hbar)).collect();
    EnergyState { amps, ..state.clone() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeAmplitude {
    pub grid: TimeGrid,
    pub params: PhysicsParams,
    pub values: Vec<C64>,
}

impl TimeAmplitude {
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.step()
    }
}

#[inline]
fn time_prefactor(params: &PhysicsParams) -> f64 {
    (2.0 * PI * params.hbar).sqrt().recip()
}

/// `h(tau) = (2 pi hbar)^(-1/2) sum_j exp(i eps_j tau / hbar) psi_j d_eps`.
pub fn energy_to_time(state: &EnergyState, tgrid: &TimeGrid) -> TimeAmplitude {
    let c = time_prefactor(&state.params) * state.grid.step();
    let spacing = state.grid.step() / state.params.hbar;
    let values = exp_sum_grid(&state.amps, 0.5, spacing, Sign::Plus, tgrid).into_iter().map(|v| v * c).collect();
    TimeAmplitude { grid: *tgrid, params: state.params, values }
}

/// `h(tau)` at a single time.
pub fn time_amplitude_at(state: &EnergyState, tau: f64) -> C64 {
    let c = time_prefactor(&state.params) * state.grid.step();
    exp_sum_at(&state.amps, 0.5, state.grid.step() / state.params.hbar, Sign::Plus, tau) * c
}

/// Result of mapping a time-domain amplitude back onto positive energies.
#[derive(Debug, Clone)]
pub struct Projected {
    pub state: EnergyState,
    /// Mass the positive-energy projection discarded (energies in `(-eps_max, 0)`).
    pub negative_mass: f64,
}

/// `psi(eps) = (2 pi hbar)^(-1/2) sum_i exp(-i eps tau_i / hbar) h(tau_i) d_tau`,
/// evaluated on the midpoints of `egrid`. Exact inverse of [`energy_to_time`]
/// when `h` lives on a full-period grid of `egrid`.
pub fn time_to_energy(h: &TimeAmplitude, egrid: EnergyGrid) -> Projected {
    let c = time_prefactor(&h.params) * h.grid.step();
    let spacing = egrid.step() / h.params.hbar;
    let pos = exp_sum_lattice(&h.values, &h.grid, 0.5, spacing, Sign::Minus, egrid.n);
    // Mirror lattice -(j + 1/2) d_eps for the discarded part.
    let neg = exp_sum_lattice(&h.values, &h.grid, 0.5, spacing, Sign::Plus, egrid.n);
    let negative_mass = neg.iter().map(|v| (v * c).norm_sqr()).sum::<f64>() * egrid.step();
    Projected {
        state: EnergyState { grid: egrid, params: h.params, amps: pos.into_iter().map(|v| v * c).collect() },
        negative_mass,
    }
}

/// Label `s = k + i tau / hbar` of a coherent vector `|s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentLabel {
    pub k: f64,
    pub tau: f64,
}

impl CoherentLabel {
    pub fn new(k: f64, tau: f64) -> Result<Self> {
        if !(k.is_finite() && k >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("coherent label needs k >= 0, got k={k}")));
        }
        Ok(Self { k, tau })
    }

    pub fn s(&self, params: &PhysicsParams) -> C64 {
        C64::new(self.k, self.tau / params.hbar)
    }

    /// Label of an arbitrary complex `s` with `Re s >= 0`.
    pub fn from_s(s: C64, params: &PhysicsParams) -> Result<Self> {
        Self::new(s.re, s.im * params.hbar)
    }
}

/// `eta(s) = (s|psi = sum_j exp(-eps_j conj(s)) psi_j d_eps`.
pub fn laplace_amplitude(state: &EnergyState, s: &CoherentLabel) -> C64 {
    let sc = s.s(&state.params).conj();
    let dx = state.grid.step();
    state.grid.points().zip(&state.amps).map(|(e, a)| (-e * sc).exp() * a).sum::<C64>() * dx
}
