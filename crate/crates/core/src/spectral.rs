//! Exponential sums between an energy lattice and a time grid.
//!
//! Every transform in the crate reduces to
//! `out_i = sum_k a_k exp(+/- i (offset + k) spacing tau_i)`.
//! The direct path is the reference; on full-period grids the same sums are
//! evaluated by FFT and agree with it to ~1e-12.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::grid::TimeGrid;

/// Phase recomputation interval for the rotation recurrence.
const RESYNC: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    #[inline]
    fn f(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[inline]
fn cis(theta: f64) -> C64 {
    let (s, c) = theta.sin_cos();
    C64::new(c, s)
}

/// `sum_k a[k] * exp(sign * i * (offset + k) * spacing * tau)` for a single `tau`.
pub fn exp_sum_at(a: &[C64], offset: f64, spacing: f64, sign: Sign, tau: f64) -> C64 {
    let theta = sign.f() * spacing * tau;
    let step = cis(theta);
    let mut acc = C64::new(0.0, 0.0);
    for (block, chunk) in a.chunks(RESYNC).enumerate() {
        let k0 = (block * RESYNC) as f64;
        let mut ph = cis(theta * (offset + k0));
        for &ak in chunk {
            acc += ak * ph;
            ph *= step;
        }
    }
    acc
}

/// Whether `grid` spans exactly one period `2 pi / spacing`.
pub fn is_full_period(grid: &TimeGrid, spacing: f64) -> bool {
    let p = 2.0 * PI / spacing;
    (grid.span() - p).abs() <= 1e-12 * p
}

/// Evaluate the energy-to-time sum on every node of `grid`.
pub fn exp_sum_grid(a: &[C64], offset: f64, spacing: f64, sign: Sign, grid: &TimeGrid) -> Vec<C64> {
    if is_full_period(grid, spacing) {
        exp_sum_grid_fft(a, offset, spacing, sign, grid)
    } else {
        exp_sum_grid_direct(a, offset, spacing, sign, grid)
    }
}

pub fn exp_sum_grid_direct(a: &[C64], offset: f64, spacing: f64, sign: Sign, grid: &TimeGrid) -> Vec<C64> {
    (0..grid.m).into_par_iter().map(|i| exp_sum_at(a, offset, spacing, sign, grid.point(i))).collect()
}

fn exp_sum_grid_fft(a: &[C64], offset: f64, spacing: f64, sign: Sign, grid: &TimeGrid) -> Vec<C64> {
    let m = grid.m;
    let s = sign.f();
    let mut buf = vec![C64::new(0.0, 0.0); m];
    for (k, &ak) in a.iter().enumerate() {
        buf[k % m] += ak * cis(s * (offset + k as f64) * spacing * grid.tau_min);
    }
    let mut planner = FftPlanner::new();
    let fft = match sign {
        Sign::Plus => planner.plan_fft_inverse(m),
        Sign::Minus => planner.plan_fft_forward(m),
    };
    fft.process(&mut buf);
    for (i, v) in buf.iter_mut().enumerate() {
        *v *= cis(s * offset * 2.0 * PI * i as f64 / m as f64);
    }
    buf
}

/// Time-to-energy sum: `out_k = sum_i h[i] * exp(sign * i * (offset + k) * spacing * tau_i)`
/// for `k = 0..count`.
pub fn exp_sum_lattice(h: &[C64], grid: &TimeGrid, offset: f64, spacing: f64, sign: Sign, count: usize) -> Vec<C64> {
    assert_eq!(h.len(), grid.m);
    if is_full_period(grid, spacing) {
        let m = grid.m;
        let s = sign.f();
        let mut buf: Vec<C64> =
            h.iter().enumerate().map(|(i, &v)| v * cis(s * offset * 2.0 * PI * i as f64 / m as f64)).collect();
        let mut planner = FftPlanner::new();
        let fft = match sign {
            Sign::Plus => planner.plan_fft_inverse(m),
            Sign::Minus => planner.plan_fft_forward(m),
        };
        fft.process(&mut buf);
        (0..count).map(|k| buf[k % m] * cis(s * (offset + k as f64) * spacing * grid.tau_min)).collect()
    } else {
        let dt = grid.step();
        (0..count)
            .into_par_iter()
            .map(|k| {
                let omega = s_f(sign) * (offset + k as f64) * spacing;
                let step = cis(omega * dt);
                let mut acc = C64::new(0.0, 0.0);
                for (block, chunk) in h.chunks(RESYNC).enumerate() {
                    let mut ph = cis(omega * grid.point(block * RESYNC));
                    for &hv in chunk {
                        acc += hv * ph;
                        ph *= step;
                    }
                }
                acc
            })
            .collect()
    }
}

#[inline]
fn s_f(sign: Sign) -> f64 {
    sign.f()
}

/// Real trigonometric series `p(tau) = sum_{|d| < D} b_d exp(-i d spacing tau)`
/// with Hermitian coefficients `b_{-d} = conj(b_d)`, given `b_0..b_{D-1}`.
///
/// Densities of the form `|h|^2` and their convolutions are all of this shape.
#[derive(Debug, Clone)]
pub struct TrigSeries {
    pub coeffs: Vec<C64>,
    pub spacing: f64,
}

impl TrigSeries {
    pub fn eval(&self, tau: f64) -> f64 {
        let s = exp_sum_at(&self.coeffs[1..], 1.0, self.spacing, Sign::Minus, tau);
        self.coeffs[0].re + 2.0 * s.re
    }

    pub fn eval_grid(&self, grid: &TimeGrid) -> Vec<f64> {
        if self.coeffs.len() < 2 {
            return vec![self.coeffs.first().map_or(0.0, |c| c.re); grid.m];
        }
        let s = exp_sum_grid(&self.coeffs[1..], 1.0, self.spacing, Sign::Minus, grid);
        s.into_iter().map(|v| self.coeffs[0].re + 2.0 * v.re).collect()
    }

    /// Exact integral over one full period.
    pub fn period_integral(&self) -> f64 {
        self.coeffs[0].re * 2.0 * PI / self.spacing
    }
}

/// Autocorrelation `r_d = sum_l conj(x_l) x_{l+d}` for `d = 0..x.len()`.
pub fn autocorrelation(x: &[C64]) -> Vec<C64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let len = (2 * n).next_power_of_two();
    let mut buf = vec![C64::new(0.0, 0.0); len];
    buf[..n].copy_from_slice(x);
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for v in buf.iter_mut() {
        *v = C64::new(v.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    // |X|^2 transforms back to sum_l x_{l+d} conj(x_l) at index d.
    let scale = 1.0 / len as f64;
    buf[..n].iter().map(|v| v * scale).collect()
}

/// Linear convolution `out_k = sum_j a_j b_{k-j}`, length `a.len() + b.len() - 1`.
pub fn linear_convolution(a: &[C64], b: &[C64]) -> Vec<C64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out = a.len() + b.len() - 1;
    let len = out.next_power_of_two();
    let mut fa = vec![C64::new(0.0, 0.0); len];
    let mut fb = fa.clone();
    fa[..a.len()].copy_from_slice(a);
    fb[..b.len()].copy_from_slice(b);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    planner.plan_fft_inverse(len).process(&mut fa);
    let scale = 1.0 / len as f64;
    fa.truncate(out);
    fa.iter_mut().for_each(|v| *v *= scale);
    fa
}

/// Circular convolution of two real sequences of equal length.
pub fn circular_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), b.len());
    let m = a.len();
    let mut fa: Vec<C64> = a.iter().map(|&v| C64::new(v, 0.0)).collect();
    let mut fb: Vec<C64> = b.iter().map(|&v| C64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(m);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    planner.plan_fft_inverse(m).process(&mut fa);
    fa.into_iter().map(|v| v.re / m as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[C64], offset: f64, spacing: f64, s: f64, tau: f64) -> C64 {
        a.iter().enumerate().map(|(k, &ak)| ak * cis(s * (offset + k as f64) * spacing * tau)).sum()
    }

    fn test_coeffs(n: usize) -> Vec<C64> {
        (0..n).map(|k| C64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()) / (1.0 + k as f64)).collect()
    }

    #[test]
    fn linear_convolution_matches_naive() {
        let a = test_coeffs(7);
        let b = test_coeffs(19);
        let c = linear_convolution(&a, &b);
        assert_eq!(c.len(), 25);
        for k in 0..25 {
            let want: C64 = (0..7).filter(|&j| k >= j && k - j < 19).map(|j| a[j] * b[k - j]).sum();
            assert!((c[k] - want).norm() < 1e-13);
        }
    }

    #[test]
    fn recurrence_matches_naive() {
        let a = test_coeffs(1000);
        for &tau in &[-3.7, 0.0, 12.25, 80.0] {
            let d = exp_sum_at(&a, 0.5, 0.01, Sign::Plus, tau);
            let r = naive(&a, 0.5, 0.01, 1.0, tau);
            assert!((d - r).norm() < 1e-12, "{tau}: {d} vs {r}");
        }
    }

    #[test]
    fn fft_path_matches_direct_on_full_period() {
        let a = test_coeffs(300);
        let spacing = 0.05;
        let p = 2.0 * PI / spacing;
        for &m in &[256usize, 512, 1024] {
            let g = TimeGrid::new(-p / 2.0, p / 2.0, m).unwrap();
            for sign in [Sign::Plus, Sign::Minus] {
                let f = exp_sum_grid_fft(&a, 0.5, spacing, sign, &g);
                let d = exp_sum_grid_direct(&a, 0.5, spacing, sign, &g);
                let err = f.iter().zip(&d).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
                assert!(err < 1e-10, "m={m} err={err}");
            }
        }
    }

    #[test]
    fn lattice_sum_fft_matches_direct() {
        let spacing = 0.05;
        let p = 2.0 * PI / spacing;
        let g = TimeGrid::new(-p / 2.0, p / 2.0, 512).unwrap();
        let h = test_coeffs(512);
        let fast = exp_sum_lattice(&h, &g, 0.5, spacing, Sign::Minus, 200);
        let slow: Vec<C64> = (0..200)
            .map(|k| h.iter().enumerate().map(|(i, &v)| v * cis(-(0.5 + k as f64) * spacing * g.point(i))).sum())
            .collect();
        let err = fast.iter().zip(&slow).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn autocorrelation_matches_naive() {
        let x = test_coeffs(37);
        let r = autocorrelation(&x);
        for d in 0..37 {
            let want: C64 = (0..37 - d).map(|l| x[l].conj() * x[l + d]).sum();
            assert!((r[d] - want).norm() < 1e-12);
        }
    }
}
