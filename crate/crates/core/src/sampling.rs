//! Seeded outcome sampling by inverse CDF on a density grid.
//!
//! Draw `k` uses the ChaCha stream of `seed` positioned at word `2k`, so every
//! sample is a pure function of `(seed, k)` and any chunking of the index
//! range reproduces the serial sequence.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::clock::{outcome_density, ClockSpec};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::povm::DensityProfile;
use crate::representation::EnergyState;

const CHUNK: usize = 4096;

/// Cumulative trapezoid of a density, normalized to end at 1.
#[derive(Debug, Clone)]
pub struct GridCdf {
    pub nodes: Vec<f64>,
    pub cdf: Vec<f64>,
}

impl GridCdf {
    pub fn new(density: &DensityProfile) -> Result<Self> {
        let v = &density.values;
        let dt = density.grid.step();
        let mut cdf = Vec::with_capacity(v.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in v.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * dt;
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::ZeroMass);
        }
        cdf.iter_mut().for_each(|c| *c /= acc);
        Ok(Self { nodes: density.grid.points().collect(), cdf })
    }

    /// Piecewise-linear CDF.
    pub fn eval(&self, tau: f64) -> f64 {
        let x = &self.nodes;
        if tau <= x[0] {
            return 0.0;
        }
        if tau >= x[x.len() - 1] {
            return 1.0;
        }
        let k = x.partition_point(|&v| v <= tau);
        let t = (tau - x[k - 1]) / (x[k] - x[k - 1]);
        self.cdf[k - 1] + t * (self.cdf[k] - self.cdf[k - 1])
    }

    /// Inverse of [`Self::eval`]; flat stretches resolve to their left end.
    pub fn inverse(&self, u: f64) -> f64 {
        let c = &self.cdf;
        let k = c.partition_point(|&v| v < u).clamp(1, c.len() - 1);
        let (c0, c1) = (c[k - 1], c[k]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.nodes[k - 1] + t * (self.nodes[k] - self.nodes[k - 1])
    }
}

fn draws(seed: u64, start: usize, len: usize) -> impl Iterator<Item = f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(2 * start as u128);
    (0..len).map(move |_| rng.gen::<f64>())
}

/// `n` draws from `density`; identical for any thread count.
pub fn sample_from_density(density: &DensityProfile, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    let cdf = GridCdf::new(density)?;
    let chunks: Vec<Vec<f64>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let len = CHUNK.min(n - start);
            draws(seed, start, len).map(|u| cdf.inverse(u)).collect()
        })
        .collect();
    Ok(chunks.concat())
}

/// Serial reference for [`sample_from_density`].
pub fn sample_from_density_serial(density: &DensityProfile, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    let cdf = GridCdf::new(density)?;
    Ok(draws(seed, 0, n).map(|u| cdf.inverse(u)).collect())
}

/// Draws from the clock outcome law of `state` on `tgrid`.
pub fn sample_outcomes(
    state: &EnergyState,
    spec: &ClockSpec,
    tgrid: &TimeGrid,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    sample_from_density(&outcome_density(state, spec, tgrid)?, n, seed)
}

/// Kolmogorov-Smirnov statistic `sup |F_n - F|`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn median(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len() / 2;
    Some(if s.len() % 2 == 1 { s[k] } else { 0.5 * (s[k - 1] + s[k]) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tent() -> DensityProfile {
        let g = TimeGrid::new(-1.0, 1.0, 200).unwrap();
        let v = g.points().map(|t| 1.0 - t.abs()).collect();
        DensityProfile::new(g, v)
    }

    #[test]
    fn inverse_inverts() {
        let c = GridCdf::new(&tent()).unwrap();
        for &u in &[0.01, 0.3, 0.5, 0.77, 0.999] {
            assert!((c.eval(c.inverse(u)) - u).abs() < 1e-12);
        }
    }

    #[test]
    fn parallel_equals_serial_and_is_seeded() {
        let d = tent();
        let a = sample_from_density(&d, 10_001, 7).unwrap();
        let b = sample_from_density_serial(&d, 10_001, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_from_density(&d, 10_001, 8).unwrap());
        let c = GridCdf::new(&d).unwrap();
        assert!(ks_statistic(&a, |x| c.eval(x)) < 1.95 / (10_001f64).sqrt());
    }

    #[test]
    fn rejects_empty_requests() {
        let d = tent();
        assert!(sample_from_density(&d, 0, 1).is_err());
        let z = DensityProfile::new(d.grid, vec![0.0; 200]);
        assert!(matches!(sample_from_density(&z, 5, 1), Err(Error::ZeroMass)));
    }

    #[test]
    fn median_of_small_sets() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
