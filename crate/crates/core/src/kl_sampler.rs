//! Karhunen-Loève path sampling from computed or asymptotic eigenpairs.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::EigenPair;
use crate::numerics::linalg::SymMatrix;
use crate::spectra::AsymptoticEigenpair;

/// Anything with an eigenvalue and a pointwise evaluable eigenfunction.
pub trait Mode {
    fn eigenvalue(&self) -> f64;
    fn value_at(&self, t: f64) -> f64;
}

impl Mode for AsymptoticEigenpair {
    fn eigenvalue(&self) -> f64 {
        self.lam
    }
    fn value_at(&self, t: f64) -> f64 {
        self.phi(t)
    }
}

/// Linear interpolation between cell midpoints, extended linearly to the ends.
impl Mode for EigenPair {
    fn eigenvalue(&self) -> f64 {
        self.lam
    }
    fn value_at(&self, t: f64) -> f64 {
        let x = &self.midpoints;
        let y = &self.phi;
        match x.len() {
            0 => 0.0,
            1 => y[0],
            n => {
                let k = x.partition_point(|&m| m < t).clamp(1, n - 1);
                let (x0, x1) = (x[k - 1], x[k]);
                y[k - 1] + (y[k] - y[k - 1]) * (t - x0) / (x1 - x0)
            }
        }
    }
}

/// The `n`-th standard normal of the sample keyed by `seed`. Each term has its
/// own ChaCha stream, so adding terms never changes the earlier ones.
pub fn kl_normal(seed: u64, n: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n);
    rng.sample(StandardNormal)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: u64,
    pub n_terms: usize,
}

impl PathSample {
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "# seed={} n_terms={}", self.seed, self.n_terms)?;
        writeln!(out, "t,value")?;
        for (t, v) in self.grid.iter().zip(&self.values) {
            writeln!(out, "{t},{v:.15e}")?;
        }
        Ok(())
    }
}

/// Precomputed `√λ_n φ_n(t_i)` for repeated sampling on one grid.
#[derive(Debug, Clone)]
pub struct KlBasis {
    grid: Vec<f64>,
    n_terms: usize,
    // Row n holds √λ_n φ_n on the grid.
    table: Vec<Vec<f64>>,
}

impl KlBasis {
    pub fn new<M: Mode>(pairs: &[M], n_terms: usize, grid: &[f64]) -> Result<Self> {
        if n_terms > pairs.len() {
            return Err(Error::Precondition(format!(
                "requested {n_terms} terms but only {} eigenpairs are available",
                pairs.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("sample grid must be strictly increasing".into()));
        }
        let table = pairs[..n_terms]
            .iter()
            .map(|p| {
                let a = p.eigenvalue().max(0.0).sqrt();
                grid.iter().map(|&t| a * p.value_at(t)).collect()
            })
            .collect();
        Ok(Self { grid: grid.to_vec(), n_terms, table })
    }

    pub fn sample(&self, seed: u64) -> PathSample {
        let mut values = vec![0.0; self.grid.len()];
        for (n, row) in self.table.iter().enumerate() {
            let z = kl_normal(seed, n as u64);
            for (v, r) in values.iter_mut().zip(row) {
                *v += z * r;
            }
        }
        PathSample {
            grid: self.grid.clone(),
            values,
            seed,
            n_terms: self.n_terms,
        }
    }

    pub fn sample_many(&self, seeds: impl IntoParallelIterator<Item = u64>) -> Vec<PathSample> {
        seeds.into_par_iter().map(|s| self.sample(s)).collect()
    }

    /// Truncated covariance `Σ_{n ≤ N} λ_n φ_n(s) φ_n(t)` on the grid.
    pub fn truncated_covariance(&self) -> SymMatrix {
        let m = self.grid.len();
        SymMatrix::from_lower_fn(m, |i, j| self.table.iter().map(|r| r[i] * r[j]).sum())
    }
}

/// `X_t = Σ_{n ≤ n_terms} √λ_n Z_n φ_n(t)` on `grid`.
pub fn kl_sample<M: Mode>(pairs: &[M], n_terms: usize, grid: &[f64], seed: u64) -> Result<PathSample> {
    Ok(KlBasis::new(pairs, n_terms, grid)?.sample(seed))
}

/// Unbiased sample covariance across paths at the common grid points.
pub fn empirical_cov(paths: &[PathSample]) -> Result<SymMatrix> {
    if paths.len() < 2 {
        return Err(Error::Precondition("sample covariance needs at least two paths".into()));
    }
    let grid = &paths[0].grid;
    if paths.iter().any(|p| &p.grid != grid || p.values.len() != grid.len()) {
        return Err(Error::Precondition("paths do not share a common grid".into()));
    }
    let m = grid.len();
    let k = paths.len() as f64;
    let mean: Vec<f64> = (0..m)
        .map(|i| paths.iter().map(|p| p.values[i]).sum::<f64>() / k)
        .collect();
    Ok(SymMatrix::from_lower_fn(m, |i, j| {
        paths
            .iter()
            .map(|p| (p.values[i] - mean[i]) * (p.values[j] - mean[j]))
            .sum::<f64>()
            / (k - 1.0)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::brownian_eigenpair;

    struct Flat;
    impl Mode for Flat {
        fn eigenvalue(&self) -> f64 {
            1.0
        }
        fn value_at(&self, _: f64) -> f64 {
            1.0
        }
    }

    #[test]
    fn single_flat_mode_gives_constant_path() {
        let p = kl_sample(&[Flat], 1, &[0.0, 0.5, 1.0], 9).unwrap();
        assert!(p.values.iter().all(|&v| v == p.values[0]));
        assert_eq!(p.values[0], kl_normal(9, 0));
    }

    #[test]
    fn deterministic_and_refining() {
        let pairs: Vec<_> = (1..=50).map(|n| brownian_eigenpair(n).unwrap()).collect();
        let grid = [0.25, 0.5, 1.0];
        let a = kl_sample(&pairs, 40, &grid, 3).unwrap();
        assert_eq!(a, kl_sample(&pairs, 40, &grid, 3).unwrap());
        assert!(kl_sample(&pairs, 51, &grid, 3).is_err());
        // Adding a term only adds its own contribution.
        let b = kl_sample(&pairs, 41, &grid, 3).unwrap();
        let extra = pairs[40].lam.sqrt() * kl_normal(3, 40);
        for i in 0..3 {
            assert!((b.values[i] - a.values[i] - extra * pairs[40].phi(grid[i])).abs() < 1e-14);
        }
    }

    #[test]
    fn empirical_cov_edge_cases() {
        let p = kl_sample(&[Flat], 1, &[0.0, 1.0], 1).unwrap();
        assert!(empirical_cov(std::slice::from_ref(&p)).is_err());
        let c = empirical_cov(&[p.clone(), p.clone()]).unwrap();
        assert!(c.as_slice().iter().all(|&v| v == 0.0));
        let mut q = p.clone();
        q.grid = vec![0.0, 2.0];
        assert!(empirical_cov(&[p, q]).is_err());
    }

    #[test]
    fn oracle_pair_interpolation() {
        let pair = EigenPair {
            index: 1,
            lam: 1.0,
            nu: None,
            horizon: 1.0,
            midpoints: vec![0.25, 0.75],
            phi: vec![1.0, 3.0],
            lam_extrapolated: None,
            error_estimate: None,
        };
        assert_eq!(pair.value_at(0.5), 2.0);
        assert_eq!(pair.value_at(0.0), 0.0);
        assert_eq!(pair.value_at(1.0), 4.0);
    }
}
