//! Dense symmetric linear algebra used by the Galerkin oracle.
//!
//! Eigenvalues come from Householder reduction to tridiagonal form followed
//! by implicit QL iteration. Eigenvectors are obtained either by accumulating
//! the QL rotations (full spectrum) or by inverse iteration on the tridiagonal
//! matrix plus back-transformation (a handful of leading pairs of a large
//! matrix).

use crate::error::{Error, Result};

/// Dense symmetric matrix with full row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Builds the matrix from the lower triangle `f(i, j)`, `j <= i`, mirrored.
    pub fn from_lower_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    /// Wraps row-major data. Symmetry is not checked here; see [`Self::asymmetry`].
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Precondition(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn add_diagonal(&mut self, shift: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += shift;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    /// Leading `m x m` principal submatrix.
    pub fn principal(&self, m: usize) -> SymMatrix {
        assert!(m <= self.n);
        let mut out = SymMatrix::zeros(m);
        for i in 0..m {
            out.data[i * m..(i + 1) * m].copy_from_slice(&self.row(i)[..m]);
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst / scale
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler vectorize the reduction.
    let mut acc = [0.0_f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

#[inline]
fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Symmetric tridiagonal matrix; `off[i]` couples rows `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// Householder reduction `A = Q T Q^T`, with the reflectors kept in the
/// strictly lower part of the working matrix (LAPACK layout, implicit unit
/// leading entry).
#[derive(Debug, Clone)]
pub struct TridiagonalFactor {
    pub tri: Tridiagonal,
    n: usize,
    work: Vec<f64>,
    tau: Vec<f64>,
}

impl TridiagonalFactor {
    /// Reduces `a`. Only the lower triangle of `a` is read.
    pub fn new(a: SymMatrix) -> Self {
        let n = a.n;
        let mut w = a.data;
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        let mut tau = vec![0.0; n.saturating_sub(1)];
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];

        for k in 0..n.saturating_sub(1) {
            diag[k] = w[k * n + k];
            let m = n - k - 1;
            // Column k below the diagonal lives in rows k+1.. at offset k.
            let alpha = w[(k + 1) * n + k];
            let mut xnorm2 = 0.0;
            for i in k + 2..n {
                let x = w[i * n + k];
                xnorm2 += x * x;
            }
            if xnorm2 == 0.0 {
                off[k] = alpha;
                tau[k] = 0.0;
                continue;
            }
            let beta = -alpha.signum() * (alpha * alpha + xnorm2).sqrt();
            let t = (beta - alpha) / beta;
            let scale = 1.0 / (alpha - beta);
            v[0] = 1.0;
            for i in k + 2..n {
                w[i * n + k] *= scale;
                v[i - k - 1] = w[i * n + k];
            }
            w[(k + 1) * n + k] = beta;
            off[k] = beta;
            tau[k] = t;

            // p = t * A22 * v using only the lower triangle of A22.
            let vs = &v[..m];
            let ps = &mut p[..m];
            ps.iter_mut().for_each(|x| *x = 0.0);
            for i in 0..m {
                let row = &w[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + k + 1 + i];
                let vi = vs[i];
                let mut s = dot(row, &vs[..i]);
                axpy(&mut ps[..i], vi, row);
                s += w[(k + 1 + i) * n + k + 1 + i] * vi;
                ps[i] += s;
            }
            ps.iter_mut().for_each(|x| *x *= t);
            let gamma = -0.5 * t * dot(ps, vs);
            for i in 0..m {
                ps[i] += gamma * vs[i];
            }
            // A22 -= v p^T + p v^T (lower triangle).
            for i in 0..m {
                let vi = vs[i];
                let pi = ps[i];
                let row = &mut w[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + k + 2 + i];
                for (j, r) in row.iter_mut().enumerate() {
                    *r -= vi * ps[j] + pi * vs[j];
                }
            }
        }
        if n > 0 {
            diag[n - 1] = w[(n - 1) * n + n - 1];
        }
        Self {
            tri: Tridiagonal { diag, off },
            n,
            work: w,
            tau,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Maps a vector from the tridiagonal basis back to the original one, in place.
    pub fn apply_q(&self, x: &mut [f64]) {
        let n = self.n;
        for k in (0..n.saturating_sub(1)).rev() {
            let t = self.tau[k];
            if t == 0.0 {
                continue;
            }
            // v = [1, work[k+2.., k]]
            let mut s = x[k + 1];
            for i in k + 2..n {
                s += self.work[i * n + k] * x[i];
            }
            s *= t;
            x[k + 1] -= s;
            for i in k + 2..n {
                x[i] -= s * self.work[i * n + k];
            }
        }
    }
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL with Wilkinson
/// shifts. When `z` is given it must hold `n` rows of length `n`; the rotations
/// are applied to its rows so that on exit row `i` holds the `i`-th
/// eigenvector (provided `z` started as the identity).
pub fn tridiagonal_ql(tri: &Tridiagonal, mut z: Option<&mut [Vec<f64>]>) -> Result<Vec<f64>> {
    const MAX_ITER: usize = 60;
    let n = tri.diag.len();
    let mut d = tri.diag.clone();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&tri.off);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_ITER {
                return Err(Error::Convergence {
                    what: "tridiagonal QL",
                    iterations: MAX_ITER,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(rows) = z.as_deref_mut() {
                    let (lo, hi) = rows.split_at_mut(i + 1);
                    let zi = &mut lo[i];
                    let zi1 = &mut hi[0];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let f = *b;
                        *b = s * *a + c * f;
                        *a = c * *a - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

/// Eigenvector of a tridiagonal matrix for a (converged) eigenvalue by inverse
/// iteration. `previous` holds already computed vectors of nearby eigenvalues
/// to orthogonalize against.
pub fn tridiagonal_eigenvector(
    tri: &Tridiagonal,
    lambda: f64,
    previous: &[&[f64]],
) -> Result<Vec<f64>> {
    let n = tri.diag.len();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let scale = tri
        .diag
        .iter()
        .map(|v| v.abs())
        .chain(tri.off.iter().map(|v| v.abs()))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    // Perturb the shift slightly so the factorization is not exactly singular.
    let shift = lambda + scale * 4.0 * f64::EPSILON;

    // LU with partial pivoting of (T - shift I): rows have at most 3 nonzeros.
    let mut u0 = vec![0.0; n]; // diagonal of U
    let mut u1 = vec![0.0; n]; // first superdiagonal
    let mut u2 = vec![0.0; n]; // second superdiagonal (from pivoting)
    let mut mult = vec![0.0; n]; // multipliers
    let mut swapped = vec![false; n];
    let tiny = scale * f64::EPSILON;

    let mut a = tri.diag[0] - shift;
    let mut b = tri.off[0];
    for i in 0..n - 1 {
        let c = tri.off[i];
        let d = tri.diag[i + 1] - shift;
        let e = if i + 1 < n - 1 { tri.off[i + 1] } else { 0.0 };
        if c.abs() > a.abs() {
            // Swap rows i and i+1.
            swapped[i] = true;
            u0[i] = c;
            u1[i] = d;
            u2[i] = e;
            let m = if c != 0.0 { a / c } else { 0.0 };
            mult[i] = m;
            a = b - m * d;
            b = -m * e;
        } else {
            let piv = if a == 0.0 { tiny } else { a };
            u0[i] = piv;
            u1[i] = b;
            u2[i] = 0.0;
            let m = c / piv;
            mult[i] = m;
            a = d - m * b;
            b = e;
        }
    }
    u0[n - 1] = if a == 0.0 { tiny } else { a };

    let back_solve = |rhs: &mut [f64]| {
        // Apply L^{-1} (with the row interchanges) then U^{-1}.
        for i in 0..n - 1 {
            if swapped[i] {
                rhs.swap(i, i + 1);
            }
            rhs[i + 1] -= mult[i] * rhs[i];
        }
        let nn = n - 1;
        rhs[nn] /= u0[nn];
        if n >= 2 {
            rhs[nn - 1] = (rhs[nn - 1] - u1[nn - 1] * rhs[nn]) / u0[nn - 1];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            rhs[i] = (rhs[i] - u1[i] * rhs[i + 1] - u2[i] * rhs[i + 2]) / u0[i];
        }
    };

    // Deterministic, non-degenerate starting vector.
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_749_895).fract())
        .collect();
    for _ in 0..4 {
        // No row-swap bookkeeping is needed for U^{-1}: the forward pass above
        // applies the same interchanges to the right-hand side.
        back_solve(&mut x);
        for p in previous {
            let s = dot(p, &x);
            axpy(&mut x, -s, p);
        }
        let nrm = norm2(&x);
        if !nrm.is_finite() || nrm == 0.0 {
            return Err(Error::Numerical(
                "inverse iteration produced a degenerate vector".into(),
            ));
        }
        x.iter_mut().for_each(|v| *v /= nrm);
    }
    Ok(x)
}

/// Eigenvalues in descending order with eigenvectors as rows.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Full eigendecomposition of a symmetric matrix, eigenvalues descending.
pub fn sym_eigen_full(a: &SymMatrix) -> Result<SymEigen> {
    let n = a.n();
    let fac = TridiagonalFactor::new(a.clone());
    let mut z: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            r
        })
        .collect();
    let values = tridiagonal_ql(&fac.tri, Some(&mut z))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let mut vals = Vec::with_capacity(n);
    let mut vecs = Vec::with_capacity(n);
    for &i in &order {
        let mut v = std::mem::take(&mut z[i]);
        fac.apply_q(&mut v);
        vals.push(values[i]);
        vecs.push(v);
    }
    Ok(SymEigen {
        values: vals,
        vectors: vecs,
    })
}

/// The `count` largest eigenpairs of a symmetric matrix, eigenvalues descending.
pub fn sym_eigen_top(a: SymMatrix, count: usize) -> Result<SymEigen> {
    let n = a.n();
    let count = count.min(n);
    let fac = TridiagonalFactor::new(a);
    let mut values = tridiagonal_ql(&fac.tri, None)?;
    values.sort_by(|x, y| y.total_cmp(x));
    let spread = values
        .first()
        .zip(values.last())
        .map(|(a, b)| (a - b).abs())
        .unwrap_or(0.0)
        .max(values.first().map(|v| v.abs()).unwrap_or(0.0));

    let mut tri_vecs: Vec<Vec<f64>> = Vec::with_capacity(count);
    for k in 0..count {
        let lam = values[k];
        // Orthogonalize against vectors of eigenvalues that are numerically close.
        let close: Vec<&[f64]> = tri_vecs
            .iter()
            .zip(&values)
            .filter(|(_, &mu)| (mu - lam).abs() <= 1e-8 * spread)
            .map(|(v, _)| v.as_slice())
            .collect();
        tri_vecs.push(tridiagonal_eigenvector(&fac.tri, lam, &close)?);
    }
    let vectors = tri_vecs
        .into_iter()
        .map(|mut v| {
            fac.apply_q(&mut v);
            v
        })
        .collect();
    values.truncate(count);
    Ok(SymEigen { values, vectors })
}

/// Cholesky factor `L` (lower, row-major) of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn new(a: &SymMatrix) -> Result<Self> {
        let n = a.n();
        let mut l = a.data.clone();
        for i in 0..n {
            for j in 0..=i {
                let (ri, rj) = (i * n, j * n);
                let s = l[ri + j] - dot(&l[ri..ri + j], &l[rj..rj + j]);
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::Numerical(format!(
                            "matrix is not positive definite (pivot {s:e} at row {i})"
                        )));
                    }
                    l[ri + i] = s.sqrt();
                } else {
                    l[ri + j] = s / l[rj + j];
                }
            }
            for j in i + 1..n {
                l[i * n + j] = 0.0;
            }
        }
        Ok(Self { n, l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let s = dot(&self.l[i * n..i * n + i], &y[..i]);
            y[i] = (y[i] - s) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }

    /// Ratio of largest to smallest squared pivot, a cheap lower bound on the
    /// 2-norm condition number.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.n;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for i in 0..n {
            let p = self.l[i * n + i] * self.l[i * n + i];
            lo = lo.min(p);
            hi = hi.max(p);
        }
        hi / lo
    }
}

/// Solves every leading section `T_m x = b[..m]`, `m = 1..=N`, of a symmetric
/// positive definite Toeplitz matrix with first column `r` by the Levinson
/// recursion, calling `visit(m, x)` after each size. Total cost is `O(N^2)`.
pub fn levinson_sections(r: &[f64], b: &[f64], mut visit: impl FnMut(usize, &[f64])) -> Result<()> {
    let n = r.len();
    if b.len() != n || n == 0 {
        return Err(Error::Precondition(
            "Toeplitz column and right-hand side must have equal nonzero length".into(),
        ));
    }
    if r[0] <= 0.0 {
        return Err(Error::Numerical("Toeplitz diagonal must be positive".into()));
    }
    let mut f = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    let mut fnew = Vec::with_capacity(n);
    f.push(1.0 / r[0]);
    x.push(b[0] / r[0]);
    visit(1, &x);
    for m in 1..n {
        let ef: f64 = (0..m).map(|i| r[m - i] * f[i]).sum();
        let denom = 1.0 - ef * ef;
        if denom <= 0.0 {
            return Err(Error::Numerical(format!(
                "Toeplitz section {m} is not positive definite"
            )));
        }
        fnew.clear();
        for i in 0..=m {
            let fi = if i < m { f[i] } else { 0.0 };
            let bi = if i >= 1 { f[m - i] } else { 0.0 };
            fnew.push((fi - ef * bi) / denom);
        }
        std::mem::swap(&mut f, &mut fnew);
        let ex: f64 = (0..m).map(|i| r[m - i] * x[i]).sum();
        let c = b[m] - ex;
        x.push(0.0);
        for i in 0..=m {
            x[i] += c * f[m - i];
        }
        visit(m + 1, &x);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(n: usize) -> SymMatrix {
        SymMatrix::from_lower_fn(n, |i, j| {
            let (x, y) = (i as f64, j as f64);
            1.0 / (1.0 + (x - y).abs()) + if i == j { 0.1 * x } else { 0.0 }
        })
    }

    #[test]
    fn full_eigen_reconstructs_matrix() {
        let a = test_matrix(12);
        let eig = sym_eigen_full(&a).unwrap();
        for w in eig.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
        for (lam, v) in eig.values.iter().zip(&eig.vectors) {
            let av = a.matvec(v);
            let res: f64 = av
                .iter()
                .zip(v)
                .map(|(x, y)| (x - lam * y).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res < 1e-12 * a.norm_frobenius(), "residual {res}");
            assert!((norm2(v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn top_eigen_matches_full() {
        let a = test_matrix(40);
        let full = sym_eigen_full(&a).unwrap();
        let top = sym_eigen_top(a.clone(), 5).unwrap();
        for k in 0..5 {
            assert!((full.values[k] - top.values[k]).abs() < 1e-11);
            let d = dot(&full.vectors[k], &top.vectors[k]).abs();
            assert!((d - 1.0).abs() < 1e-10, "k={k} overlap {d}");
        }
    }

    #[test]
    fn diagonal_and_identity() {
        let e = sym_eigen_full(&SymMatrix::from_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
        let e = sym_eigen_full(&SymMatrix::identity(6)).unwrap();
        assert!(e.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn cholesky_solves() {
        let mut a = test_matrix(30);
        a.add_diagonal(1.0);
        let ch = Cholesky::new(&a).unwrap();
        let b: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let x = ch.solve(&b);
        let r = a.matvec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn levinson_matches_cholesky_on_every_section() {
        let col: Vec<f64> = (0..25).map(|k| 1.0 / (1.0 + k as f64).powf(0.7)).collect();
        let mut t = SymMatrix::from_lower_fn(25, |i, j| col[i - j]);
        t.add_diagonal(0.5);
        let mut r = col.clone();
        r[0] += 0.5;
        let b = vec![1.0; 25];
        levinson_sections(&r, &b, |m, x| {
            let sub = t.principal(m);
            let y = Cholesky::new(&sub).unwrap().solve(&b[..m]);
            for (xi, yi) in x.iter().zip(&y) {
                assert!((xi - yi).abs() < 1e-11);
            }
        })
        .unwrap();
    }
}
