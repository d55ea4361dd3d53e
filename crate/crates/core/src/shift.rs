//! Energy co-shifts `V_lambda`, their adjoints, the tail projectors
//! `P_lambda = V_lambda^dag V_lambda`, and the coherent family `|s)` of
//! common right eigenvectors of the co-shifts.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{EnergyGrid, PhysicsParams, TimeGrid};
use crate::representation::{CoherentLabel, EnergyState};
use crate::spectral::{exp_sum_grid, Sign};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftAmount {
    pub lambda: f64,
}

impl ShiftAmount {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!("shift needs lambda >= 0, got {lambda}")));
        }
        Ok(Self { lambda })
    }

    pub fn cells(grid: &EnergyGrid, q: usize) -> Self {
        Self { lambda: q as f64 * grid.step() }
    }

    /// Shifts off the grid lattice fall back to linear interpolation.
    pub fn is_interpolated(&self, grid: &EnergyGrid) -> bool {
        grid.commensurate_cells(self.lambda).is_none()
    }
}

/// Linear interpolation of grid samples at energy `e`; zero above the grid,
/// held constant on `[0, eps_0)`.
fn sample(state: &EnergyState, e: f64) -> C64 {
    let g = &state.grid;
    let x = e / g.step() - 0.5;
    if x < 0.0 {
        return if e >= 0.0 { state.amps[0] } else { C64::new(0.0, 0.0) };
    }
    let j = x.floor() as usize;
    if j + 1 >= g.n {
        return if j + 1 == g.n && x == j as f64 { state.amps[j] } else { C64::new(0.0, 0.0) };
    }
    let t = x - j as f64;
    state.amps[j] * (1.0 - t) + state.amps[j + 1] * t
}

/// `[V_lambda psi](eps) = psi(eps + lambda)`; unnormalized.
pub fn coshift(state: &EnergyState, lambda: ShiftAmount) -> EnergyState {
    let g = state.grid;
    let amps = match g.commensurate_cells(lambda.lambda) {
        Some(q) => (0..g.n).map(|j| state.amps.get(j + q).copied().unwrap_or_default()).collect(),
        None => g.points().map(|e| sample(state, e + lambda.lambda)).collect(),
    };
    EnergyState { amps, ..state.clone() }
}

/// `[V_lambda^dag psi](eps) = psi(eps - lambda)` for `eps > lambda`, else 0.
/// Content pushed past `eps_max` is lost; see [`coshift_adjoint_overflow`].
pub fn coshift_adjoint(state: &EnergyState, lambda: ShiftAmount) -> EnergyState {
    let g = state.grid;
    let amps = match g.commensurate_cells(lambda.lambda) {
        Some(q) => (0..g.n).map(|j| if j >= q { state.amps[j - q] } else { C64::default() }).collect(),
        None => g
            .points()
            .map(|e| if e > lambda.lambda { sample(state, e - lambda.lambda) } else { C64::default() })
            .collect(),
    };
    EnergyState { amps, ..state.clone() }
}

/// Mass that `coshift_adjoint` pushes beyond the top of the grid.
pub fn coshift_adjoint_overflow(state: &EnergyState, lambda: ShiftAmount) -> f64 {
    state.mass_above(state.grid.eps_max - lambda.lambda)
}

/// `[P_lambda psi](eps) = psi(eps)` for `eps > lambda`, else 0.
pub fn tail_projector(state: &EnergyState, lambda: ShiftAmount) -> EnergyState {
    let amps = state
        .grid
        .points()
        .zip(&state.amps)
        .map(|(e, &a)| if e > lambda.lambda { a } else { C64::default() })
        .collect();
    EnergyState { amps, ..state.clone() }
}

/// Unnormalized amplitude table `exp(-eps_j s)` of `|s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentVector {
    pub label: CoherentLabel,
    pub grid: EnergyGrid,
    pub params: PhysicsParams,
    pub amps: Vec<C64>,
}

pub fn coherent_vector(label: CoherentLabel, grid: EnergyGrid, params: PhysicsParams) -> CoherentVector {
    let s = label.s(&params);
    let amps = grid.points().map(|e| (-e * s).exp()).collect();
    CoherentVector { label, grid, params, amps }
}

impl CoherentVector {
    /// `(s|s)` by midpoint quadrature.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.step()
    }

    /// `(self|other)` by midpoint quadrature.
    pub fn overlap(&self, other: &CoherentVector) -> Result<C64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("coherent vectors on different grids".into()));
        }
        let s: C64 = self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.grid.step())
    }

    /// The table as an (unnormalized) energy state.
    pub fn as_state(&self) -> EnergyState {
        EnergyState { grid: self.grid, params: self.params, amps: self.amps.clone() }
    }

    /// Unit-norm version using the analytic `(s|s) = 1/(2k)`; needs `k > 0`.
    pub fn normalized_state(&self) -> Result<EnergyState> {
        if self.label.k <= 0.0 {
            return Err(Error::InvalidParameter("|s) is normalizable only for k > 0".into()));
        }
        let c = (2.0 * self.label.k).sqrt();
        Ok(EnergyState { grid: self.grid, params: self.params, amps: self.amps.iter().map(|a| a * c).collect() })
    }
}

/// `(a|b) = 1 / (conj(s_a) + s_b)`.
pub fn coherent_overlap(a: &CoherentLabel, b: &CoherentLabel, params: &PhysicsParams) -> Result<C64> {
    if a.k + b.k <= 0.0 {
        return Err(Error::InvalidParameter(format!("overlap of |s) needs k_a + k_b > 0, got {} + {}", a.k, b.k)));
    }
    Ok((a.s(params).conj() + b.s(params)).inv())
}

/// Residual report for an identity `lhs = rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub lhs_re: f64,
    pub lhs_im: f64,
    pub rhs_re: f64,
    pub rhs_im: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub pass: bool,
    pub tol: f64,
}

impl ResidualReport {
    /// `pass` compares the absolute error to `tol`.
    pub fn new(lhs: C64, rhs: C64, tol: f64) -> Self {
        let abs_err = (lhs - rhs).norm();
        let rel_err = if rhs.norm() > 0.0 { abs_err / rhs.norm() } else { abs_err };
        Self {
            lhs_re: lhs.re,
            lhs_im: lhs.im,
            rhs_re: rhs.re,
            rhs_im: rhs.im,
            abs_err,
            rel_err,
            pass: abs_err <= tol,
            tol,
        }
    }

    pub fn lhs(&self) -> C64 {
        C64::new(self.lhs_re, self.lhs_im)
    }

    pub fn rhs(&self) -> C64 {
        C64::new(self.rhs_re, self.rhs_im)
    }
}

pub const COMPLETENESS_TOL: f64 = 1e-3;

/// Weighted resolution of the identity by the coherent family on the line
/// `Re s = k`:
/// `(1/2 pi hbar) sum_i conj(eta_1) eta_2 d_tau` against
/// `sum_j exp(-2 k eps_j) conj(psi_1) psi_2 d_eps`.
pub fn completeness_check(psi1: &EnergyState, psi2: &EnergyState, k: f64, tgrid: &TimeGrid) -> Result<ResidualReport> {
    if psi1.grid != psi2.grid || psi1.params != psi2.params {
        return Err(Error::GridMismatch("completeness check needs states on one grid".into()));
    }
    if !(k.is_finite() && k >= 0.0) {
        return Err(Error::InvalidParameter(format!("completeness check needs k >= 0, got {k}")));
    }
    let g = psi1.grid;
    let hbar = psi1.params.hbar;
    let dx = g.step();
    let eta = |psi: &EnergyState| {
        let damped: Vec<C64> = g.points().zip(&psi.amps).map(|(e, a)| a * (-k * e).exp() * dx).collect();
        exp_sum_grid(&damped, 0.5, dx / hbar, Sign::Plus, tgrid)
    };
    let (e1, e2) = (eta(psi1), eta(psi2));
    let lhs: C64 = e1.iter().zip(&e2).map(|(a, b)| a.conj() * b).sum::<C64>() * tgrid.step() / (2.0 * PI * hbar);
    let rhs: C64 = g
        .points()
        .zip(psi1.amps.iter().zip(&psi2.amps))
        .map(|(e, (a, b))| (-2.0 * k * e).exp() * a.conj() * b)
        .sum::<C64>()
        * dx;
    Ok(ResidualReport::new(lhs, rhs, COMPLETENESS_TOL))
}
