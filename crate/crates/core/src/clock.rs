//! Clock-interaction measurement: a pointer with momentum wavefunction `f(x)`
//! on `x <= 0` couples to the system through `P0 exp(i tau_op x_op / hbar)`.
//! Reading the pointer at `tau` leaves the system in `G(tau) psi`, with
//! `G(tau) = P0 phi(tau - tau_op)`.
//!
//! Two discretizations of the clock are used:
//!
//! * the *lattice clock* carries the clock energies `u = -x` on the integer
//!   multiples `j * d_eps` of the system grid spacing, amplitudes
//!   `c_j = conj f(-(j + 1/2) d_eps)` renormalized to unit norm. Energy
//!   differences of the system grid stay on the grid, so `G(tau)` maps the
//!   grid to itself exactly. Instrument normalization and time covariance
//!   then hold to round-off. All operator-level results (reduced states,
//!   posteriors, outcome densities, samples) use this path;
//! * the *continuum kernel* uses the closed-form pointer autocorrelation
//!   `R_f(delta) = int conj f(x) f(x + delta) dx` and serves realized
//!   densities that must not inherit the lattice's `O(d_eps^2)` pointer error.
//!
//! The lattice pointer amplitude differs from the continuum one by the
//! half-cell factor `exp(-i tau d_eps / 2 hbar)` times `1 + O(d_eps^2)`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{EnergyGrid, PhysicsParams, TimeGrid};
use crate::io::{read_complex_table, ComplexTable};
use crate::povm::DensityProfile;
use crate::representation::{
    energy_to_time, evolve, inner_product, time_to_energy, CoherentLabel, EnergyState, TimeAmplitude,
};
use crate::shift::ResidualReport;
use crate::spectral::{
    autocorrelation, circular_convolution, exp_sum_at, exp_sum_grid, linear_convolution, Sign, TrigSeries,
};

/// Likelihood below which an outcome counts as impossible.
pub const POSTERIOR_FLOOR: f64 = 1e-12;
/// Midpoint nodes for numeric pointer transforms.
pub const DEFAULT_QUADRATURE_POINTS: usize = 1 << 19;
/// Case (a) momentum cutoff `x_max = CUTOFF_DECAYS / lambda`.
pub const CUTOFF_DECAYS: f64 = 25.0;
pub const COVARIANCE_TOL: f64 = 1e-8;
pub const LEFT_EIGEN_TOL: f64 = 1e-6;

const MIN_LATTICE_CELLS: usize = 4;
const MAX_LATTICE_CELLS: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq)]
pub enum ClockKind {
    /// `f(x) = (2 lambda)^(1/2) exp(lambda x)`, `x <= 0`.
    ExponentialA { lambda: f64 },
    /// `f(x) = N exp(lambda x)` on `[-e, 0]`; `lambda = 0` is the flat profile.
    TruncatedExponentialB { lambda: f64, e: f64 },
    /// Linear interpolation of samples on `x <= 0`.
    Tabulated(ComplexTable),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClockSpec {
    kind: ClockKind,
    params: PhysicsParams,
    /// Normalization applied to tabulated samples.
    scale: f64,
}

impl ClockSpec {
    pub fn new(kind: ClockKind, params: PhysicsParams) -> Result<Self> {
        let scale = match &kind {
            &ClockKind::ExponentialA { lambda } => {
                if !(lambda.is_finite() && lambda > 0.0) {
                    return Err(Error::InvalidParameter(format!("case (a) clock needs lambda > 0, got {lambda}")));
                }
                1.0
            }
            &ClockKind::TruncatedExponentialB { lambda, e } => {
                if !(lambda.is_finite() && lambda >= 0.0) {
                    return Err(Error::InvalidParameter(format!("case (b) clock needs lambda >= 0, got {lambda}")));
                }
                if !(e.is_finite() && e > 0.0) {
                    return Err(Error::InvalidParameter(format!("case (b) clock needs E > 0, got {e}")));
                }
                1.0
            }
            ClockKind::Tabulated(t) => {
                if t.x[t.x.len() - 1] > 0.0 {
                    return Err(Error::InvalidParameter("tabulated clock must live on x <= 0".into()));
                }
                let mass = t.mass_between(f64::NEG_INFINITY, 0.0);
                if !(mass > 0.0) {
                    return Err(Error::ZeroMass);
                }
                mass.sqrt().recip()
            }
        };
        Ok(Self { kind, params, scale })
    }

    pub fn exponential(lambda: f64, params: PhysicsParams) -> Result<Self> {
        Self::new(ClockKind::ExponentialA { lambda }, params)
    }

    pub fn truncated(lambda: f64, e: f64, params: PhysicsParams) -> Result<Self> {
        Self::new(ClockKind::TruncatedExponentialB { lambda, e }, params)
    }

    /// Read a `x,re,im` table.
    pub fn from_file(path: &Path, params: PhysicsParams) -> Result<Self> {
        Self::new(ClockKind::Tabulated(read_complex_table(path, "x")?), params)
    }

    pub fn kind(&self) -> &ClockKind {
        &self.kind
    }

    pub fn params(&self) -> PhysicsParams {
        self.params
    }

    /// Momentum support `[-x_max, 0]`.
    pub fn x_max(&self) -> f64 {
        match &self.kind {
            ClockKind::ExponentialA { lambda } => CUTOFF_DECAYS / lambda,
            ClockKind::TruncatedExponentialB { e, .. } => *e,
            ClockKind::Tabulated(t) => -t.x[0],
        }
    }

    /// The normalized momentum wavefunction `f(x)`.
    pub fn f(&self, x: f64) -> C64 {
        if x > 0.0 {
            return C64::new(0.0, 0.0);
        }
        match &self.kind {
            &ClockKind::ExponentialA { lambda } => C64::new((2.0 * lambda).sqrt() * (lambda * x).exp(), 0.0),
            &ClockKind::TruncatedExponentialB { lambda, e } => {
                if x < -e {
                    C64::new(0.0, 0.0)
                } else {
                    C64::new(b_norm(lambda, e) * (lambda * x).exp(), 0.0)
                }
            }
            ClockKind::Tabulated(t) => t.interpolate(x) * self.scale,
        }
    }

    /// Pointer scale `hbar * lambda` of the case (a) clock.
    pub fn lorentz_scale(&self) -> Option<f64> {
        match self.kind {
            ClockKind::ExponentialA { lambda } => Some(self.params.hbar * lambda),
            _ => None,
        }
    }

    /// Closed-form envelope `(2 pi hbar)^(-1/2) int_0^inf conj f(-u) exp(-u w) du`.
    fn envelope_exact(&self, w: C64) -> Option<C64> {
        let pre = prefactor(&self.params);
        match self.kind {
            ClockKind::ExponentialA { lambda } => Some(pre * (2.0 * lambda).sqrt() / (w + lambda)),
            ClockKind::TruncatedExponentialB { lambda, e } => {
                Some(pre * b_norm(lambda, e) * segment_laplace(w + lambda, e))
            }
            ClockKind::Tabulated(_) => None,
        }
    }

    /// Closed-form pointer amplitude `phi(tau)`, where one exists.
    pub fn pointer_amplitude_exact(&self, tau: f64) -> Option<C64> {
        let hbar = self.params.hbar;
        match self.kind {
            ClockKind::ExponentialA { lambda } => {
                let hl = hbar * lambda;
                Some(C64::new((hl / PI).sqrt(), 0.0) / C64::new(hl, tau))
            }
            _ => self.envelope_exact(C64::new(0.0, tau / hbar)),
        }
    }

    /// Closed-form pointer density `|phi(tau)|^2`, written out independently
    /// of [`Self::pointer_amplitude_exact`].
    pub fn pointer_density_exact(&self, tau: f64) -> Option<f64> {
        let hbar = self.params.hbar;
        match self.kind {
            ClockKind::ExponentialA { lambda } => {
                let hl = hbar * lambda;
                Some(hl / (PI * (tau * tau + hl * hl)))
            }
            ClockKind::TruncatedExponentialB { lambda, e } if lambda == 0.0 => {
                let half = 0.5 * tau * e / hbar;
                if half == 0.0 {
                    return Some(e / (2.0 * PI * hbar));
                }
                // 1 - cos(2a) = 2 sin^2 a keeps small tau accurate.
                let s = half.sin();
                Some(hbar * 2.0 * s * s / (PI * e * tau * tau))
            }
            ClockKind::TruncatedExponentialB { lambda, e } => {
                let hl = hbar * lambda;
                let q = (-lambda * e).exp();
                let s = (0.5 * tau * e / hbar).sin();
                let num = (1.0 - q) * (1.0 - q) + 4.0 * q * s * s;
                Some(hl * num / (PI * (-(-2.0 * lambda * e).exp_m1()) * (tau * tau + hl * hl)))
            }
            ClockKind::Tabulated(_) => None,
        }
    }

    /// Pointer autocorrelation `R_f(delta) = int conj f(x) f(x + delta) dx`
    /// for `delta >= 0`, in closed form.
    pub fn autocorrelation_exact(&self, delta: f64) -> Option<f64> {
        match self.kind {
            ClockKind::ExponentialA { lambda } => Some((-lambda * delta).exp()),
            ClockKind::TruncatedExponentialB { lambda, e } => Some(if delta >= e {
                0.0
            } else if lambda == 0.0 {
                (e - delta) / e
            } else {
                (-lambda * delta).exp() * (-2.0 * lambda * (e - delta)).exp_m1() / (-2.0 * lambda * e).exp_m1()
            }),
            ClockKind::Tabulated(_) => None,
        }
    }

    /// Standard deviation of `|f(x)|^2`; sets the width scale `hbar / spread`
    /// of the pointer density.
    pub fn momentum_spread(&self) -> f64 {
        let nodes = 1 << 16;
        let dx = self.x_max() / nodes as f64;
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for j in 0..nodes {
            let x = -(j as f64 + 0.5) * dx;
            let w = self.f(x).norm_sqr() * dx;
            m0 += w;
            m1 += w * x;
            m2 += w * x * x;
        }
        let mean = m1 / m0;
        (m2 / m0 - mean * mean).max(0.0).sqrt()
    }

    fn quadrature(&self, re_w: f64, nodes: usize) -> Quadrature {
        let du = self.x_max() / nodes as f64;
        let coeffs = (0..nodes)
            .into_par_iter()
            .map(|j| {
                let u = (j as f64 + 0.5) * du;
                self.f(-u).conj() * (-u * re_w).exp() * du
            })
            .collect();
        Quadrature { coeffs, du, pre: prefactor(&self.params) }
    }

    /// Lattice clock on the spacing of `egrid`.
    pub fn lattice(&self, egrid: &EnergyGrid) -> Result<LatticeClock> {
        let d = egrid.step();
        let cells = (self.x_max() / d * (1.0 - 1e-12)).ceil() as usize;
        if cells < MIN_LATTICE_CELLS {
            return Err(Error::ClockUnresolved(format!(
                "clock support {} spans only {cells} cells of width {d}",
                self.x_max()
            )));
        }
        if cells > MAX_LATTICE_CELLS {
            return Err(Error::ClockUnresolved(format!(
                "clock support {} needs {cells} cells of width {d}",
                self.x_max()
            )));
        }
        let mut coeffs: Vec<C64> = (0..cells).map(|j| self.f(-(j as f64 + 0.5) * d).conj()).collect();
        let raw_mass = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * d;
        if !(raw_mass > 0.0) {
            return Err(Error::ZeroMass);
        }
        let s = raw_mass.sqrt().recip();
        coeffs.iter_mut().for_each(|c| *c *= s);
        Ok(LatticeClock { spacing: d, params: self.params, coeffs, raw_mass })
    }
}

fn prefactor(params: &PhysicsParams) -> f64 {
    (2.0 * PI * params.hbar).sqrt().recip()
}

fn b_norm(lambda: f64, e: f64) -> f64 {
    if lambda == 0.0 {
        e.sqrt().recip()
    } else {
        (2.0 * lambda / -(-2.0 * lambda * e).exp_m1()).sqrt()
    }
}

/// `int_0^e exp(-z u) du`.
fn segment_laplace(z: C64, e: f64) -> C64 {
    let w = z * e;
    if w.norm() < 1e-4 {
        e * (1.0 - w / 2.0 + w * w / 6.0 - w * w * w / 24.0)
    } else {
        (1.0 - (-w).exp()) / z
    }
}

/// Midpoint rule on `[0, x_max]` with the real part of the exponent folded in.
struct Quadrature {
    coeffs: Vec<C64>,
    du: f64,
    pre: f64,
}

impl Quadrature {
    /// `pre * sum_j a_j exp(-i u_j omega)`.
    fn eval(&self, omega: f64) -> C64 {
        self.pre * exp_sum_at(&self.coeffs, 0.5, self.du, Sign::Minus, omega)
    }
}

/// Clock amplitudes on the integer energy lattice `u_j = j * d_eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeClock {
    pub spacing: f64,
    pub params: PhysicsParams,
    pub coeffs: Vec<C64>,
    /// `sum |f(x_j)|^2 d_eps` before renormalization.
    pub raw_mass: f64,
}

impl LatticeClock {
    pub fn cells(&self) -> usize {
        self.coeffs.len()
    }

    /// `(2 pi hbar)^(-1/2) d_eps sum_j c_j exp(-u_j w)`; at `w = conj(s) + i tau/hbar`
    /// this is the left eigenvalue of `G(tau)` on `(s|` for this lattice.
    pub fn envelope(&self, w: C64) -> C64 {
        let q: C64 = self.coeffs.iter().enumerate().map(|(j, c)| c * (-(j as f64) * self.spacing * w).exp()).sum();
        q * prefactor(&self.params) * self.spacing
    }

    /// Lattice pointer amplitude `phi_d(tau)`.
    pub fn amplitude(&self, tau: f64) -> C64 {
        prefactor(&self.params)
            * self.spacing
            * exp_sum_at(&self.coeffs, 0.0, self.spacing / self.params.hbar, Sign::Minus, tau)
    }

    pub fn amplitude_grid(&self, tgrid: &TimeGrid) -> Vec<C64> {
        let c = prefactor(&self.params) * self.spacing;
        exp_sum_grid(&self.coeffs, 0.0, self.spacing / self.params.hbar, Sign::Minus, tgrid)
            .into_iter()
            .map(|v| v * c)
            .collect()
    }

    /// `|phi_d|^2` as a trigonometric series.
    pub fn density_series(&self) -> TrigSeries {
        let c = self.spacing * self.spacing / (2.0 * PI * self.params.hbar);
        TrigSeries {
            coeffs: autocorrelation(&self.coeffs).into_iter().map(|r| r * c).collect(),
            spacing: self.spacing / self.params.hbar,
        }
    }

    fn check(&self, state: &EnergyState) -> Result<()> {
        if (state.grid.step() - self.spacing).abs() > 1e-12 * self.spacing || state.params != self.params {
            return Err(Error::GridMismatch("clock lattice built for a different grid".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointerSource {
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointerWavefunction {
    pub grid: TimeGrid,
    pub values: Vec<C64>,
    pub source: PointerSource,
}

impl PointerWavefunction {
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.step()
    }

    pub fn density(&self) -> DensityProfile {
        DensityProfile::new(self.grid, self.values.iter().map(|v| v.norm_sqr()).collect())
    }
}

/// `phi(tau) = (2 pi hbar)^(-1/2) int conj f(x) exp(i tau x / hbar) dx`, closed
/// form where available.
pub fn pointer_wavefunction(spec: &ClockSpec, tgrid: &TimeGrid) -> PointerWavefunction {
    if spec.pointer_amplitude_exact(0.0).is_some() {
        let values = tgrid.points().map(|t| spec.pointer_amplitude_exact(t).unwrap()).collect();
        PointerWavefunction { grid: *tgrid, values, source: PointerSource::Analytic }
    } else {
        pointer_wavefunction_numeric(spec, tgrid, DEFAULT_QUADRATURE_POINTS)
    }
}

/// Midpoint quadrature of the pointer transform with `nodes` points on
/// `[-x_max, 0]`, whatever the clock kind.
pub fn pointer_wavefunction_numeric(spec: &ClockSpec, tgrid: &TimeGrid, nodes: usize) -> PointerWavefunction {
    let q = spec.quadrature(0.0, nodes);
    let hbar = spec.params.hbar;
    let values = (0..tgrid.m).into_par_iter().map(|i| q.eval(tgrid.point(i) / hbar)).collect();
    PointerWavefunction { grid: *tgrid, values, source: PointerSource::Numeric }
}

/// `G(tau) psi` on the grid extended by the clock support, plus the mass the
/// positive-energy projection removed.
#[derive(Debug, Clone)]
pub struct ReducedState {
    pub state: EnergyState,
    pub negative_mass: f64,
}

/// Modulate `h` by `phi(tau - tau')` in the time representation, then project
/// back onto positive energies.
pub fn apply_measurement_operator(state: &EnergyState, spec: &ClockSpec, tau: f64) -> Result<ReducedState> {
    let lat = spec.lattice(&state.grid)?;
    apply_lattice(state, &lat, tau)
}

pub fn apply_lattice(state: &EnergyState, lat: &LatticeClock, tau: f64) -> Result<ReducedState> {
    lat.check(state)?;
    if !tau.is_finite() {
        return Err(Error::NonFinite("outcome tau".into()));
    }
    let ext = state.grid.extended(lat.cells() - 1);
    let m = (2 * ext.n).next_power_of_two();
    let tg = TimeGrid::full_period(&state.grid, &state.params, m)?;
    let h = energy_to_time(state, &tg);
    let hbar = state.params.hbar;
    let a: Vec<C64> = lat
        .coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| c * C64::from_polar(1.0, -tau * j as f64 * lat.spacing / hbar))
        .collect();
    let c = prefactor(&state.params) * lat.spacing;
    let phi = exp_sum_grid(&a, 0.0, lat.spacing / hbar, Sign::Plus, &tg);
    let values = phi.iter().zip(&h.values).map(|(p, v)| p * c * v).collect();
    let projected = time_to_energy(&TimeAmplitude { grid: tg, params: state.params, values }, ext);
    Ok(ReducedState { state: projected.state, negative_mass: projected.negative_mass })
}

/// `G(tau) psi` as the energy convolution
/// `(2 pi hbar)^(-1/2) d_eps sum_j c_j exp(-i tau u_j / hbar) psi_{q-j}`,
/// evaluated directly. Cost `O(n * cells)`.
pub fn reduce_by_energy_convolution(state: &EnergyState, spec: &ClockSpec, tau: f64) -> Result<EnergyState> {
    let lat = spec.lattice(&state.grid)?;
    lat.check(state)?;
    let ext = state.grid.extended(lat.cells() - 1);
    let c = prefactor(&state.params) * lat.spacing;
    let a: Vec<C64> = lat
        .coeffs
        .iter()
        .enumerate()
        .map(|(j, cj)| cj * C64::from_polar(c, -tau * j as f64 * lat.spacing / state.params.hbar))
        .collect();
    let n = state.grid.n;
    let amps = (0..ext.n)
        .into_par_iter()
        .map(|q| {
            let lo = q.saturating_sub(n - 1);
            let hi = q.min(a.len() - 1);
            (lo..=hi).map(|j| a[j] * state.amps[q - j]).sum()
        })
        .collect();
    EnergyState::new(ext, state.params, amps)
}

/// Density series `b_d = w * conj(r_psi(d)) * kernel(d)` for `d < len`.
fn series_with_kernel(state: &EnergyState, weight: f64, len: usize, kernel: impl Fn(usize) -> C64) -> TrigSeries {
    let r = autocorrelation(&state.amps);
    TrigSeries {
        coeffs: r.iter().take(len).enumerate().map(|(d, v)| v.conj() * kernel(d) * weight).collect(),
        spacing: state.grid.step() / state.params.hbar,
    }
}

/// `p(tau) = ||G(tau) psi||^2` as a trigonometric series: exact for the lattice clock.
pub fn outcome_series(state: &EnergyState, lat: &LatticeClock) -> Result<TrigSeries> {
    lat.check(state)?;
    let d = lat.spacing;
    let rc = autocorrelation(&lat.coeffs);
    let len = rc.len().min(state.grid.n);
    Ok(series_with_kernel(state, d * d * d / (2.0 * PI * state.params.hbar), len, |k| rc[k]))
}

pub fn outcome_density(state: &EnergyState, spec: &ClockSpec, tgrid: &TimeGrid) -> Result<DensityProfile> {
    let series = outcome_series(state, &spec.lattice(&state.grid)?)?;
    Ok(DensityProfile::new(*tgrid, series.eval_grid(tgrid)))
}

/// `|phi|^2 * |h|^2` with the continuum pointer autocorrelation.
pub fn realized_series(state: &EnergyState, spec: &ClockSpec) -> Result<TrigSeries> {
    let d = state.grid.step();
    let w = d * d / (2.0 * PI * state.params.hbar);
    if spec.autocorrelation_exact(0.0).is_some() {
        Ok(series_with_kernel(state, w, state.grid.n, |k| {
            C64::new(spec.autocorrelation_exact(k as f64 * d).unwrap(), 0.0)
        }))
    } else {
        let lat = spec.lattice(&state.grid)?;
        let scale = lat.raw_mass * d;
        let rc = autocorrelation(&lat.coeffs);
        Ok(series_with_kernel(state, w, state.grid.n, |k| rc.get(k).map_or(C64::new(0.0, 0.0), |r| r * scale)))
    }
}

pub fn realized_density(state: &EnergyState, spec: &ClockSpec, tgrid: &TimeGrid) -> Result<DensityProfile> {
    Ok(DensityProfile::new(*tgrid, realized_series(state, spec)?.eval_grid(tgrid)))
}

#[derive(Debug, Clone)]
pub struct ConvolutionCheck {
    pub grid: TimeGrid,
    /// Largest relative deviation over nodes with `p > floor`.
    pub max_rel_err: f64,
    pub floor: f64,
    pub nodes_compared: usize,
}

/// Compare the outcome density with the time-domain circular convolution of
/// `|phi|^2` and `|h|^2` over one full period.
pub fn convolution_check(state: &EnergyState, spec: &ClockSpec, floor: f64) -> Result<ConvolutionCheck> {
    let lat = spec.lattice(&state.grid)?;
    let m = (2 * state.grid.n.max(lat.cells())).next_power_of_two();
    let tg = TimeGrid::full_period(&state.grid, &state.params, m)?;
    let lag = TimeGrid::new(0.0, tg.span(), m)?;
    let a: Vec<f64> = lat.amplitude_grid(&lag).iter().map(|v| v.norm_sqr()).collect();
    let b: Vec<f64> = energy_to_time(state, &tg).values.iter().map(|v| v.norm_sqr()).collect();
    let dt = tg.step();
    let conv: Vec<f64> = circular_convolution(&a, &b).into_iter().map(|v| v * dt).collect();
    let p = outcome_series(state, &lat)?.eval_grid(&tg);
    let (mut worst, mut count) = (0.0f64, 0usize);
    for (x, y) in p.iter().zip(&conv) {
        if *x > floor {
            worst = worst.max((x - y).abs() / x);
            count += 1;
        }
    }
    Ok(ConvolutionCheck { grid: tg, max_rel_err: worst, floor, nodes_compared: count })
}

#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    pub tau: f64,
    /// Normalized `G(tau) psi`, on the grid extended by the clock support.
    pub posterior: EnergyState,
    pub likelihood: f64,
    pub negative_mass: f64,
}

impl MeasurementOutcome {
    /// `|<prior|posterior>|` with the prior zero-padded to the posterior grid.
    pub fn fidelity(&self, prior: &EnergyState) -> Result<f64> {
        let extra = self
            .posterior
            .grid
            .n
            .checked_sub(prior.grid.n)
            .ok_or_else(|| Error::GridMismatch("prior grid larger than posterior grid".into()))?;
        Ok(inner_product(&prior.padded(extra), &self.posterior)?.norm())
    }
}

pub fn posterior_state(state: &EnergyState, spec: &ClockSpec, tau: f64) -> Result<MeasurementOutcome> {
    posterior_lattice(state, &spec.lattice(&state.grid)?, tau)
}

pub fn posterior_lattice(state: &EnergyState, lat: &LatticeClock, tau: f64) -> Result<MeasurementOutcome> {
    let reduced = apply_lattice(state, lat, tau)?;
    let likelihood = reduced.state.norm_sqr();
    if !(likelihood > POSTERIOR_FLOOR) {
        return Err(Error::ImpossibleOutcome { tau, likelihood });
    }
    Ok(MeasurementOutcome {
        tau,
        posterior: reduced.state.normalized().expect("positive norm"),
        likelihood,
        negative_mass: reduced.negative_mass,
    })
}

/// `g_s(tau)`: closed form for the built-in clocks, quadrature otherwise.
pub fn left_eigen_envelope(spec: &ClockSpec, s: &CoherentLabel, tau: f64) -> C64 {
    let w = eigen_exponent(spec, s, tau);
    spec.envelope_exact(w).unwrap_or_else(|| left_eigen_envelope_quadrature(spec, s, tau, DEFAULT_QUADRATURE_POINTS))
}

/// `g_s(tau)` by midpoint quadrature regardless of clock kind.
pub fn left_eigen_envelope_quadrature(spec: &ClockSpec, s: &CoherentLabel, tau: f64, nodes: usize) -> C64 {
    let w = eigen_exponent(spec, s, tau);
    spec.quadrature(w.re, nodes).eval(w.im)
}

fn eigen_exponent(spec: &ClockSpec, s: &CoherentLabel, tau: f64) -> C64 {
    s.s(&spec.params).conj() + C64::new(0.0, tau / spec.params.hbar)
}

#[derive(Debug, Clone)]
pub struct LeftEigenCheck {
    pub label: CoherentLabel,
    pub tau: f64,
    /// `1 - |<s|G^dag s>| / (||s|| ||G^dag s||)`.
    pub colinearity_defect: f64,
    /// `||G^dag |s) - conj(g_grid) |s)|| / |||s)||` with the lattice eigenvalue.
    pub grid_residual: f64,
    pub envelope_grid: C64,
    pub envelope: C64,
    /// `|g_grid exp(-w d_eps/2) sqrt(raw_mass) - g_s|`: the lattice eigenvalue
    /// with the half-cell shift removed, against the continuum value.
    pub continuum_err: f64,
}

/// Apply `G(tau)^dag` to `|s)` tabulated on the extended grid and test that
/// the result is `conj(g) |s)` on the original grid.
pub fn left_eigen_check(spec: &ClockSpec, egrid: &EnergyGrid, s: &CoherentLabel, tau: f64) -> Result<LeftEigenCheck> {
    let lat = spec.lattice(egrid)?;
    let params = spec.params;
    let hbar = params.hbar;
    let sv = s.s(&params);
    let j = lat.cells();
    let ext = egrid.extended(j - 1);
    let chi: Vec<C64> = ext.points().map(|e| (-e * sv).exp()).collect();
    let c = prefactor(&params) * lat.spacing;
    // [G^dag chi]_l = c sum_j conj(c_j) exp(i tau u_j / hbar) chi_{l+j}
    let rev: Vec<C64> = (0..j)
        .map(|k| {
            let jj = j - 1 - k;
            lat.coeffs[jj].conj() * C64::from_polar(c, tau * jj as f64 * lat.spacing / hbar)
        })
        .collect();
    let conv = linear_convolution(&rev, &chi);
    let out = &conv[j - 1..j - 1 + egrid.n];
    let base = &chi[..egrid.n];
    let dot: C64 = base.iter().zip(out).map(|(a, b)| a.conj() * b).sum();
    let na = base.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let nb = out.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let colinearity_defect = (1.0 - dot.norm() / (na * nb)).max(0.0);

    let w = eigen_exponent(spec, s, tau);
    let envelope_grid = lat.envelope(w);
    let resid = base.iter().zip(out).map(|(a, b)| (b - envelope_grid.conj() * a).norm_sqr()).sum::<f64>().sqrt();
    let envelope = left_eigen_envelope(spec, s, tau);
    let shifted = envelope_grid * (-w * lat.spacing * 0.5).exp() * lat.raw_mass.sqrt();
    Ok(LeftEigenCheck {
        label: *s,
        tau,
        colinearity_defect,
        grid_residual: resid / na,
        envelope_grid,
        envelope,
        continuum_err: (shifted - envelope).norm(),
    })
}

#[derive(Debug, Clone)]
pub struct CovarianceReport {
    pub t: f64,
    /// Max over the grid of `|p_{U(t) psi}(tau) - p_psi(tau - t)|`.
    pub density: ResidualReport,
    /// Smallest `|<posterior(U(t) psi, tau), U(t) posterior(psi, tau - t)>|` over the probes, against 1.
    pub posterior: ResidualReport,
    /// Largest `|arg|` of those overlaps: the realized phase `theta(t)`.
    pub theta: f64,
    pub probes: Vec<f64>,
    pub pass: bool,
}

/// Time-shift covariance of the outcome law and of the posteriors.
pub fn covariance_check(state: &EnergyState, spec: &ClockSpec, t: f64, tgrid: &TimeGrid) -> Result<CovarianceReport> {
    let lat = spec.lattice(&state.grid)?;
    let moved = evolve(state, t);
    let p_t = outcome_series(&moved, &lat)?.eval_grid(tgrid);
    let shifted = TimeGrid { tau_min: tgrid.tau_min - t, tau_max: tgrid.tau_max - t, m: tgrid.m };
    let p_0 = outcome_series(state, &lat)?.eval_grid(&shifted);
    let dres = p_t.iter().zip(&p_0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let m = tgrid.m;
    let candidates = [tgrid.point(m / 2), tgrid.point(m / 2 - m / 16), tgrid.point(m / 2 + m / 16)];
    let (mut worst, mut theta, mut probes) = (f64::INFINITY, 0.0f64, Vec::new());
    for &tau in &candidates {
        let a = match posterior_lattice(&moved, &lat, tau) {
            Ok(a) => a,
            Err(Error::ImpossibleOutcome { .. }) => continue,
            Err(e) => return Err(e),
        };
        let b = evolve(&posterior_lattice(state, &lat, tau - t)?.posterior, t);
        let ov = inner_product(&a.posterior, &b)?;
        worst = worst.min(ov.norm());
        theta = theta.max(ov.arg().abs());
        probes.push(tau);
    }
    if probes.is_empty() {
        return Err(Error::ImpossibleOutcome { tau: candidates[0], likelihood: 0.0 });
    }
    let density = ResidualReport::new(C64::new(dres, 0.0), C64::new(0.0, 0.0), COVARIANCE_TOL);
    let posterior = ResidualReport::new(C64::new(worst, 0.0), C64::new(1.0, 0.0), COVARIANCE_TOL);
    let pass = density.pass && posterior.pass;
    Ok(CovarianceReport { t, density, posterior, theta, probes, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessMetrics {
    pub fwhm: f64,
    pub peak_height: f64,
    pub peak_tau: f64,
    pub window: f64,
    /// Pointer mass in `[-window, window]`.
    pub mass_within: f64,
    /// Lorentzian scale `hbar * lambda` (case (a) only).
    pub sharpness_scale: Option<f64>,
    /// Height `1 / (hbar * lambda)` as quoted for case (a).
    pub claimed_peak_height: Option<f64>,
    /// `peak_height / claimed_peak_height`.
    pub peak_ratio: Option<f64>,
}

/// Width, height and central mass of the pointer density `|phi|^2`. The grid
/// locates the peak and brackets the half-maximum crossings; both are then
/// refined on the density itself.
pub fn sharpness_metrics(spec: &ClockSpec, tgrid: &TimeGrid, window: f64) -> Result<SharpnessMetrics> {
    let hbar = spec.params.hbar;
    let numeric = spec.pointer_density_exact(0.0).is_none().then(|| spec.quadrature(0.0, DEFAULT_QUADRATURE_POINTS));
    let density = |t: f64| match &numeric {
        None => spec.pointer_density_exact(t).unwrap(),
        Some(q) => q.eval(t / hbar).norm_sqr(),
    };
    let vals: Vec<f64> = (0..tgrid.m).into_par_iter().map(|i| density(tgrid.point(i))).collect();
    let imax = vals.iter().enumerate().fold(0, |b, (i, v)| if *v > vals[b] { i } else { b });
    let dt = tgrid.step();
    let t0 = tgrid.point(imax);
    let peak_tau = golden_max(&density, t0 - dt, t0 + dt);
    let (peak_tau, peak_height) =
        if density(peak_tau) >= vals[imax] { (peak_tau, density(peak_tau)) } else { (t0, vals[imax]) };
    let half = 0.5 * peak_height;
    let right = (imax + 1..tgrid.m).find(|&i| vals[i] < half);
    let left = (0..imax).rev().find(|&i| vals[i] < half);
    let (Some(r), Some(l)) = (right, left) else {
        return Err(Error::ClockUnresolved("half maximum lies outside the time grid".into()));
    };
    let g = |t: f64| density(t) - half;
    let hi = bisect(&g, tgrid.point(r - 1).max(peak_tau), tgrid.point(r));
    let lo = bisect(&g, tgrid.point(l + 1).min(peak_tau), tgrid.point(l));
    let mass_within = adaptive_simpson(&density, -window, window, 1e-12);
    let sharpness_scale = spec.lorentz_scale();
    let claimed = sharpness_scale.map(|s| 1.0 / s);
    Ok(SharpnessMetrics {
        fwhm: hi - lo,
        peak_height,
        peak_tau,
        window,
        mass_within,
        sharpness_scale,
        claimed_peak_height: claimed,
        peak_ratio: claimed.map(|c| peak_height / c),
    })
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Root of `g` between `inside` (`g >= 0`) and `outside` (`g < 0`).
fn bisect(g: &impl Fn(f64) -> f64, mut inside: f64, mut outside: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if g(mid) >= 0.0 {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    0.5 * (inside + outside)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    // Start from a fixed split so narrow peaks are not stepped over.
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let (x0, x1) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
            let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
            rec(f, x0, x1, f0, fm, f1, whole, tol / pieces as f64, 40)
        })
        .sum()
}
