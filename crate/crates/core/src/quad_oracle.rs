//! Piecewise-constant Galerkin discretization of covariance operators on
//! `[0, 1]` and the dense solves built on it. This is the brute-force ground
//! truth the asymptotic formulas are checked against.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{EigenPair, HurstParam, KernelKind, KernelSpec};
use crate::numerics::linalg::{sym_eigen_full, sym_eigen_top, Cholesky, SymMatrix};

/// Default upper bound on the number of cells (a dense matrix of this size
/// takes 512 MiB).
pub const DEFAULT_MAX_CELLS: usize = 8192;

/// A partition `0 = x_0 < x_1 < ... < x_n = 1` (or of `[0, T]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    nodes: Vec<f64>,
}

impl Partition {
    pub fn uniform(n: usize, horizon: f64) -> Self {
        Self {
            nodes: (0..=n).map(|i| horizon * i as f64 / n as f64).collect(),
        }
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] != 0.0 || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition(
                "partition nodes must start at 0 and increase strictly".into(),
            ));
        }
        Ok(Self { nodes })
    }

    /// Geometric cells of ratio `growth` from size `h_min` at both ends,
    /// uniform cells of width at most `h_max` in between.
    pub fn graded_both_ends(horizon: f64, h_min: f64, growth: f64, h_max: f64) -> Result<Self> {
        if !(h_min > 0.0 && growth > 1.0 && h_max >= h_min && 2.0 * h_max <= horizon) {
            return Err(Error::Precondition("invalid graded partition parameters".into()));
        }
        let mut edge = vec![0.0];
        let mut w = h_min;
        while w < h_max && *edge.last().unwrap() + w < 0.5 * horizon {
            edge.push(edge.last().unwrap() + w);
            w *= growth;
        }
        let left_end = *edge.last().unwrap();
        let middle = horizon - 2.0 * left_end;
        let m = (middle / h_max).ceil().max(1.0) as usize;
        let mut nodes = edge.clone();
        for k in 1..=m {
            nodes.push(left_end + middle * k as f64 / m as f64);
        }
        for &e in edge.iter().rev().skip(1) {
            nodes.push(horizon - e);
        }
        *nodes.last_mut().unwrap() = horizon;
        Self::from_nodes(nodes)
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn is_uniform(&self) -> bool {
        let w = self.widths();
        w.iter().all(|x| (x - w[0]).abs() <= 1e-12 * w[0])
    }
}

/// Discretized operator `M_ij = ∬_{cell_i × cell_j} K / sqrt(w_i w_j)`; on a
/// uniform grid of `[0, 1]` this is `n ∬ K`.
#[derive(Debug, Clone)]
pub struct GalerkinMatrix {
    pub kernel: KernelSpec,
    pub partition: Partition,
    pub entries: SymMatrix,
}

impl GalerkinMatrix {
    pub fn n(&self) -> usize {
        self.partition.cells()
    }

    /// Uniform cell width, or `None` for graded partitions.
    pub fn cell_width(&self) -> Option<f64> {
        self.partition
            .is_uniform()
            .then(|| self.partition.horizon() / self.n() as f64)
    }

    /// Writes the matrix as CSV with a `#` metadata header line.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(
            out,
            "# kernel={:?} h={} sigma={} eps={} n={} horizon={}",
            self.kernel.kind,
            self.kernel.h.h(),
            self.kernel.sigma,
            self.kernel.eps,
            self.n(),
            self.partition.horizon()
        )?;
        for i in 0..self.n() {
            let row: Vec<String> = self.entries.row(i).iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AssemblyOptions {
    pub max_cells: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { max_cells: DEFAULT_MAX_CELLS }
    }
}

/// Galerkin matrix on a uniform grid of `[0, 1]` with `n` cells.
pub fn assemble_galerkin(kernel: &KernelSpec, n: usize, opts: AssemblyOptions) -> Result<GalerkinMatrix> {
    if n > opts.max_cells {
        return Err(Error::TooLarge { n, cap: opts.max_cells });
    }
    if n < 2 {
        return Err(Error::Precondition(format!("need at least 2 cells, got {n}")));
    }
    assemble_on(kernel, Partition::uniform(n, 1.0), opts)
}

/// Galerkin matrix on an arbitrary partition.
pub fn assemble_on(kernel: &KernelSpec, partition: Partition, opts: AssemblyOptions) -> Result<GalerkinMatrix> {
    let n = partition.cells();
    if n > opts.max_cells {
        return Err(Error::TooLarge { n, cap: opts.max_cells });
    }
    let x = partition.nodes().to_vec();
    let w = partition.widths();
    let mut data = vec![0.0; n * n];
    let uniform_frac_noise = kernel.kind == KernelKind::FracNoise && partition.is_uniform();
    if uniform_frac_noise {
        // Toeplitz: one column determines everything.
        let col: Vec<f64> = (0..n)
            .map(|k| kernel.cell_integral(x[k], x[k + 1], x[0], x[1]) / w[0])
            .collect();
        data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, r) in row.iter_mut().enumerate() {
                *r = col[i.abs_diff(j)];
            }
        });
    } else {
        data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for j in 0..=i {
                row[j] = kernel.cell_integral(x[i], x[i + 1], x[j], x[j + 1]) / (w[i] * w[j]).sqrt();
            }
        });
        for i in 0..n {
            for j in 0..i {
                data[j * n + i] = data[i * n + j];
            }
        }
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite Galerkin entry".into()));
    }
    Ok(GalerkinMatrix {
        kernel: *kernel,
        partition,
        entries: SymMatrix::from_row_major(n, data)?,
    })
}

/// Frequency `ν` with `λ = κ(H) ν^{-2H-1}` for covariance kernels.
fn frequency_of(kernel: &KernelSpec, lam: f64) -> Option<f64> {
    let h = match kernel.kind {
        KernelKind::FbmCovariance => kernel.h,
        KernelKind::BrownianCovariance => HurstParam::new(0.5).ok()?,
        _ => return None,
    };
    let s2 = kernel.sigma * kernel.sigma;
    (lam > 0.0).then(|| (s2 * h.kappa() / lam).powf(1.0 / (2.0 * h.h() + 1.0)))
}

fn to_eigenpair(m: &GalerkinMatrix, index: usize, lam: f64, v: Vec<f64>) -> EigenPair {
    let w = m.partition.widths();
    let mut phi: Vec<f64> = v.iter().zip(&w).map(|(x, w)| x / w.sqrt()).collect();
    let scale = phi.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    if let Some(first) = phi.iter().find(|p| p.abs() > 1e-8 * scale) {
        if *first < 0.0 {
            phi.iter_mut().for_each(|p| *p = -*p);
        }
    }
    EigenPair {
        index,
        lam,
        nu: frequency_of(&m.kernel, lam),
        horizon: m.partition.horizon(),
        midpoints: m.partition.midpoints(),
        phi,
        lam_extrapolated: None,
        error_estimate: None,
    }
}

fn check_residuals(m: &GalerkinMatrix, values: &[f64], vectors: &[Vec<f64>]) -> Result<()> {
    let norm = m.entries.norm_inf().max(f64::MIN_POSITIVE);
    for (k, (lam, v)) in values.iter().zip(vectors).enumerate() {
        let r = m.entries.matvec(v);
        let res = r
            .iter()
            .zip(v)
            .map(|(a, b)| (a - lam * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if res > 1e-10 * norm {
            return Err(Error::Numerical(format!(
                "eigenpair {} has residual {res:e} relative to norm {norm:e}",
                k + 1
            )));
        }
    }
    Ok(())
}

/// Full spectrum, descending, with eigenfunction samples of unit `L2` norm.
pub fn sym_eigen(m: &GalerkinMatrix) -> Result<Vec<EigenPair>> {
    if m.entries.asymmetry() > 1e-12 {
        return Err(Error::Precondition("matrix is not symmetric".into()));
    }
    let eig = sym_eigen_full(&m.entries)?;
    check_residuals(m, &eig.values, &eig.vectors)?;
    Ok(eig
        .values
        .into_iter()
        .zip(eig.vectors)
        .enumerate()
        .map(|(k, (lam, v))| to_eigenpair(m, k + 1, lam, v))
        .collect())
}

/// Leading `count` eigenpairs, descending.
pub fn top_eigen(m: &GalerkinMatrix, count: usize) -> Result<Vec<EigenPair>> {
    let eig = sym_eigen_top(m.entries.clone(), count)?;
    check_residuals(m, &eig.values, &eig.vectors)?;
    Ok(eig
        .values
        .into_iter()
        .zip(eig.vectors)
        .enumerate()
        .map(|(k, (lam, v))| to_eigenpair(m, k + 1, lam, v))
        .collect())
}

/// Leading `count` eigenvalues only, descending.
pub fn top_eigenvalues(kernel: &KernelSpec, n: usize, count: usize, opts: AssemblyOptions) -> Result<Vec<f64>> {
    top_values(assemble_galerkin(kernel, n, opts)?, count)
}

/// Leading `count` eigenvalues of an assembled matrix, descending.
pub fn top_values(m: GalerkinMatrix, count: usize) -> Result<Vec<f64>> {
    let fac = crate::numerics::linalg::TridiagonalFactor::new(m.entries);
    let mut vals = crate::numerics::linalg::tridiagonal_ql(&fac.tri, None)?;
    vals.sort_by(|a, b| b.total_cmp(a));
    vals.truncate(count);
    Ok(vals)
}

/// First `count` eigenpairs of the continuous operator from an `n`-cell grid,
/// each carrying the Richardson estimate from the `n/2` grid
/// (`λ_n + (λ_n - λ_{n/2})/3`, for an `O(n^{-2})` error).
pub fn oracle_eigenpairs(kernel: &KernelSpec, n: usize, count: usize, opts: AssemblyOptions) -> Result<Vec<EigenPair>> {
    check_oracle_count(n, count)?;
    let fine = assemble_galerkin(kernel, n, opts)?;
    let coarse = assemble_galerkin(kernel, n / 2, opts)?;
    oracle_from_matrices(&fine, coarse, count)
}

/// [`oracle_eigenpairs`] on matrices assembled elsewhere (e.g. cached); the
/// coarse grid must have half the cells of the fine one.
pub fn oracle_from_matrices(fine: &GalerkinMatrix, coarse: GalerkinMatrix, count: usize) -> Result<Vec<EigenPair>> {
    check_oracle_count(fine.n(), count)?;
    if coarse.n() != fine.n() / 2 {
        return Err(Error::Precondition(format!(
            "coarse grid has {} cells, expected {}",
            coarse.n(),
            fine.n() / 2
        )));
    }
    let mut pairs = top_eigen(fine, count)?;
    let coarse = top_values(coarse, count)?;
    for (p, lc) in pairs.iter_mut().zip(coarse) {
        let corr = (p.lam - lc) / 3.0;
        p.lam_extrapolated = Some(p.lam + corr);
        p.error_estimate = Some(corr.abs());
    }
    Ok(pairs)
}

fn check_oracle_count(n: usize, count: usize) -> Result<()> {
    if count == 0 || count > n / 10 {
        return Err(Error::Precondition(format!(
            "count = {count} must lie in 1..={} (only resolved modes are returned)",
            n / 10
        )));
    }
    Ok(())
}

/// Discrete solution of `∫_0^1 c_H |x - y|^{2H-2} u(y) dy = 1`.
#[derive(Debug, Clone)]
pub struct FirstKindSolution {
    pub midpoints: Vec<f64>,
    pub u: Vec<f64>,
    /// Least-squares `a_H` in `u ≈ a_H (x(1-x))^{1/2-H}` over the middle 60%.
    pub a_h: f64,
    /// Log-log slope of `u` near `x = 0`.
    pub edge_exponent: f64,
    /// `max |K u - 1|` over interior cells.
    pub residual_interior: f64,
    pub condition_estimate: f64,
}

/// Cells with a condition estimate above this are refused.
pub const FIRST_KIND_CONDITION_CAP: f64 = 1e12;

pub fn solve_first_kind(h: HurstParam, n: usize) -> Result<FirstKindSolution> {
    let kernel = KernelSpec::frac_noise(h)?;
    let m = assemble_galerkin(&kernel, n, AssemblyOptions::default())?;
    let chol = Cholesky::new(&m.entries)?;
    let cond = chol.condition_estimate();
    if cond > FIRST_KIND_CONDITION_CAP {
        return Err(Error::IllConditioned { condition: cond });
    }
    let ones = vec![1.0; n];
    let u = chol.solve(&ones);
    let x = m.partition.midpoints();
    let r = m.entries.matvec(&u);
    let lo = n / 10;
    let residual_interior = r[lo..n - lo].iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);

    let expo = 0.5 - h.h();
    let (mut num, mut den) = (0.0, 0.0);
    for i in (n / 5)..(n - n / 5) {
        let g = (x[i] * (1.0 - x[i])).powf(expo);
        num += g * u[i];
        den += g * g;
    }
    let a_h = num / den;

    // Slope of log u against log x on cells a few widths away from the edge.
    let (mut sx, mut sy, mut sxx, mut sxy, mut cnt) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        if x[i] < 10.0 / n as f64 || x[i] > 0.02 {
            continue;
        }
        let (lx, ly) = (x[i].ln(), u[i].ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        cnt += 1.0;
    }
    if cnt < 3.0 {
        return Err(Error::Precondition(format!(
            "grid of {n} cells is too coarse to fit the edge exponent"
        )));
    }
    let edge_exponent = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    Ok(FirstKindSolution {
        midpoints: x,
        u,
        a_h,
        edge_exponent,
        residual_interior,
        condition_estimate: cond,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn brownian_two_cells() {
        let m = assemble_galerkin(&KernelSpec::brownian(), 2, AssemblyOptions::default()).unwrap();
        // n ∬ min(s,t) with n = 2: 2·(1/24) on the diagonal, 2·(1/16) off it
        assert!((m.entries.get(0, 0) - 1.0 / 12.0).abs() < 1e-15);
        assert!((m.entries.get(0, 1) - 0.125).abs() < 1e-15);
        let eig = sym_eigen(&m).unwrap();
        assert!(eig.iter().all(|p| p.lam > 0.0));
    }

    #[test]
    fn cap_and_count_errors() {
        let k = KernelSpec::brownian();
        assert!(matches!(
            assemble_galerkin(&k, 1, AssemblyOptions { max_cells: 0 }),
            Err(Error::TooLarge { .. })
        ));
        assert!(oracle_eigenpairs(&k, 100, 11, AssemblyOptions::default()).is_err());
    }

    #[test]
    fn brownian_leading_eigenvalues() {
        let pairs = oracle_eigenpairs(&KernelSpec::brownian(), 400, 5, AssemblyOptions::default()).unwrap();
        for p in &pairs {
            let exact = 1.0 / ((p.index as f64 - 0.5) * PI).powi(2);
            assert!((p.lam - exact).abs() < 1e-3 * exact);
            assert!((p.lam_extrapolated.unwrap() - exact).abs() < 1e-6 * exact);
            assert!((p.l2_norm() - 1.0).abs() < 1e-10);
            assert!(p.phi[0] > 0.0);
        }
    }

    #[test]
    fn frac_noise_matrix_is_psd_toeplitz() {
        let k = KernelSpec::frac_noise(HurstParam::new(0.75).unwrap()).unwrap();
        let m = assemble_galerkin(&k, 100, AssemblyOptions::default()).unwrap();
        assert!(m.entries.asymmetry() < 1e-12);
        let eig = sym_eigen(&m).unwrap();
        assert!(eig.last().unwrap().lam > -1e-9 * m.entries.trace());
        // Same entries as the general-partition path.
        let g = assemble_on(&k, Partition::uniform(100, 1.0), AssemblyOptions::default()).unwrap();
        assert_eq!(g.partition, m.partition);
        assert!((g.entries.get(37, 3) - m.entries.get(37, 3)).abs() < 1e-13);
    }

    #[test]
    fn graded_partition_is_valid() {
        let p = Partition::graded_both_ends(1.0, 1e-6, 1.2, 0.01).unwrap();
        let w = p.widths();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((w[0] - 1e-6).abs() < 1e-18);
        assert!((w[w.len() - 1] - 1e-6).abs() < 1e-12);
    }
}
