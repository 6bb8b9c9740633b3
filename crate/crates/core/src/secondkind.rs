//! Second-kind equations `ε g + K g = f` with the fractional noise kernel,
//! the endpoint blow-up of their solutions, and the bracket of the mixed-fBm
//! fundamental martingale.

use std::io::Write;

use serde::Serialize;

use crate::error::{ensure_positive, Error, Result};
use crate::kernels::{EigenPair, HurstParam, KernelSpec};
use crate::kl_sampler::Mode;
use crate::numerics::linalg::{levinson_sections, Cholesky};
use crate::quad_oracle::{assemble_on, AssemblyOptions, Partition};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rhs {
    /// `f ≡ 1`.
    One,
    /// `f(s) = c_H |s - T|^{2H-2}`, the kernel slice at the right endpoint.
    KernelSlice,
}

#[derive(Debug, Clone)]
pub struct SecondKindProblem {
    pub h: HurstParam,
    pub eps: f64,
    pub horizon: f64,
    pub rhs: Rhs,
    pub n: usize,
    /// Overrides the uniform `n`-cell grid when set.
    pub partition: Option<Partition>,
}

impl SecondKindProblem {
    pub fn new(h: HurstParam, eps: f64, horizon: f64, n: usize) -> Result<Self> {
        let p = Self { h, eps, horizon, rhs: Rhs::One, n, partition: None };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        ensure_positive("eps", self.eps)?;
        ensure_positive("T", self.horizon)?;
        if !self.h.is_long_memory() {
            return Err(Error::Regime(format!(
                "second-kind equations need H > 1/2, got {}",
                self.h.h()
            )));
        }
        if self.partition.is_none() && self.n < 2 {
            return Err(Error::Precondition("need at least 2 cells".into()));
        }
        Ok(())
    }

    fn grid(&self) -> Partition {
        self.partition
            .clone()
            .unwrap_or_else(|| Partition::uniform(self.n, self.horizon))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SecondKindSolution {
    pub midpoints: Vec<f64>,
    pub widths: Vec<f64>,
    /// Cell averages of `g`.
    pub g: Vec<f64>,
    /// `‖(εI + K_n) g - f‖_∞` of the discrete system.
    pub residual: f64,
}

fn rhs_cell_averages(p: &SecondKindProblem, nodes: &[f64]) -> Vec<f64> {
    match p.rhs {
        Rhs::One => vec![1.0; nodes.len() - 1],
        Rhs::KernelSlice => {
            let (t, e) = (p.horizon, 2.0 * p.h.h() - 1.0);
            nodes
                .windows(2)
                .map(|w| p.h.c_h() * ((t - w[0]).powf(e) - (t - w[1]).powf(e)) / (e * (w[1] - w[0])))
                .collect()
        }
    }
}

/// Galerkin solve of `ε g + ∫_0^T c_H |s - r|^{2H-2} g(r) dr = f(s)`.
pub fn solve_second_kind(p: &SecondKindProblem) -> Result<SecondKindSolution> {
    p.validate()?;
    let part = p.grid();
    let kernel = KernelSpec::frac_noise(p.h)?;
    let m = assemble_on(&kernel, part.clone(), AssemblyOptions::default())?;
    let w = part.widths();
    let f = rhs_cell_averages(p, part.nodes());
    // Symmetric scaling v = √w g keeps the system symmetric positive definite.
    let b: Vec<f64> = f.iter().zip(&w).map(|(fi, wi)| fi * wi.sqrt()).collect();
    let mut a = m.entries;
    a.add_diagonal(p.eps);
    let v = Cholesky::new(&a)?.solve(&b);
    let av = a.matvec(&v);
    let residual = av
        .iter()
        .zip(&b)
        .zip(&w)
        .map(|((x, y), wi)| ((x - y) / wi.sqrt()).abs())
        .fold(0.0, f64::max);
    let g = v.iter().zip(&w).map(|(vi, wi)| vi / wi.sqrt()).collect();
    Ok(SecondKindSolution { midpoints: part.midpoints(), widths: w, g, residual })
}

/// Value at the right endpoint from the last three cell averages, fitting
/// `a + b d^p + c d^{2p}` with `d` the distance to the endpoint and `p = 2H - 1`.
/// Falls back to fewer terms on very short grids.
pub fn endpoint_extrapolation(values: &[f64], widths: &[f64], p: f64) -> f64 {
    let k = values.len().min(3);
    if k == 0 {
        return f64::NAN;
    }
    let exps = [0.0, p, 2.0 * p];
    let mut edges = vec![0.0];
    for i in 0..k {
        edges.push(edges[i] + widths[widths.len() - 1 - i]);
    }
    let avg = |q: f64, lo: f64, hi: f64| {
        if q == 0.0 {
            1.0
        } else {
            (hi.powf(q + 1.0) - lo.powf(q + 1.0)) / ((q + 1.0) * (hi - lo))
        }
    };
    let mut a = vec![vec![0.0; k + 1]; k];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = avg(exps[j], edges[i], edges[i + 1]);
        }
        a[i][k] = values[values.len() - 1 - i];
    }
    // Gaussian elimination with partial pivoting on a system of size <= 3.
    for c in 0..k {
        let piv = (c..k).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, piv);
        for r in c + 1..k {
            let f = a[r][c] / a[c][c];
            for j in c..=k {
                a[r][j] -= f * a[c][j];
            }
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|j| a[r][j] * x[j]).sum();
        x[r] = (a[r][k] - s) / a[r][r];
    }
    x[0]
}

/// Boundary-layer resolving partition of `[0, 1]` with about `n` cells:
/// geometric cells from well below the layer width `ε^{1/(2H-1)}`, uniform
/// cells of width `2/n` in the middle.
pub fn boundary_partition(h: HurstParam, eps: f64, n: usize) -> Result<Partition> {
    if n < 16 {
        return Err(Error::Precondition("boundary partition needs at least 16 cells".into()));
    }
    let layer = eps.powf(1.0 / (2.0 * h.h() - 1.0));
    let h_max = (2.0 / n as f64).min(0.25);
    let h_min = (1e-3 * layer).clamp(1e-12, 1e-3 * h_max);
    let per_end = (n / 4).max(4) as f64;
    let growth = (h_max / h_min).powf(1.0 / per_end).clamp(1.02, 1.3);
    Partition::graded_both_ends(1.0, h_min, growth, h_max)
}

/// `u_ε(1)` for `ε u + ∫_0^1 c_H |x - y|^{2H-2} u(y) dy = 1`, solved on a
/// partition graded toward both ends and extrapolated to `x = 1`.
pub fn u_eps_boundary(h: HurstParam, eps: f64, n: usize) -> Result<f64> {
    let part = boundary_partition(h, eps, n)?;
    let mut p = SecondKindProblem::new(h, eps, 1.0, part.cells())?;
    p.partition = Some(part);
    let sol = solve_second_kind(&p)?;
    let k = sol.g.len();
    let (last, prev) = (sol.g[k - 1], sol.g[k - 2]);
    if ((last - prev) / last).abs() > 0.2 {
        return Err(Error::Resolution(format!(
            "last two cells differ by {:.1}% at eps = {eps}",
            100.0 * ((last - prev) / last).abs()
        )));
    }
    Ok(endpoint_extrapolation(&sol.g, &sol.widths, 2.0 * h.h() - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HsSeriesValue {
    pub value: f64,
    /// `|S_N - S_{N/2}|`, the change over the second half of the terms.
    pub truncation_estimate: f64,
    pub terms: usize,
}

/// `⟨1, φ_n⟩` by midpoint quadrature.
pub fn unit_projection(pair: &EigenPair) -> f64 {
    let w = crate::kernels::midpoint_widths(&pair.midpoints, pair.horizon);
    pair.phi.iter().zip(&w).map(|(p, w)| p * w).sum()
}

/// `u_ε(1) = Σ_n ⟨1, φ_n⟩ φ_n(1)/(ε + λ_n)` from eigenpairs of the
/// fractional noise kernel.
///
/// Evaluated as `(1 - Σ_n ⟨1, φ_n⟩ φ_n(1) λ_n/(ε + λ_n))/ε`, which uses
/// `Σ_n ⟨1, φ_n⟩ φ_n = 1` to remove the slowly converging part.
pub fn hs_series_u_eps(h: HurstParam, eps: f64, pairs: &[EigenPair]) -> Result<HsSeriesValue> {
    ensure_positive("eps", eps)?;
    if !h.is_long_memory() {
        return Err(Error::Regime("the series needs the H > 1/2 kernel".into()));
    }
    if pairs.len() < 100 {
        return Err(Error::Precondition(format!(
            "series needs at least 100 eigenpairs, got {}",
            pairs.len()
        )));
    }
    let terms: Vec<f64> = pairs
        .iter()
        .map(|p| unit_projection(p) * p.value_at(1.0) * p.lam / (eps + p.lam))
        .collect();
    let full: f64 = terms.iter().sum();
    let half: f64 = terms[..terms.len() / 2].iter().sum();
    Ok(HsSeriesValue {
        value: (1.0 - full) / eps,
        truncation_estimate: (full - half).abs() / eps,
        terms: pairs.len(),
    })
}

/// `⟨M⟩_t` two ways for `ε g(·, t) + ∫_0^t c_H |· - r|^{2H-2} g(r, t) dr = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct BracketCurve {
    pub eps: f64,
    pub t: Vec<f64>,
    /// `∫_0^t g(s, t) ds`.
    pub variant_a: Vec<f64>,
    /// `ε ∫_0^t g(s, s)² ds`.
    pub variant_b: Vec<f64>,
    /// `d⟨M⟩/dt = ε g(t, t)²`.
    pub derivative: Vec<f64>,
}

/// Sweeps horizons on a uniform grid of width `1/cells_per_unit`. All
/// horizons share one Toeplitz matrix; the Levinson recursion solves every
/// leading section in `O(N^2)` total.
pub fn martingale_bracket(h: HurstParam, eps: f64, t_grid: &[f64], cells_per_unit: usize) -> Result<BracketCurve> {
    ensure_positive("eps", eps)?;
    if !h.is_long_memory() {
        return Err(Error::Regime("the reduced bracket equation needs H > 1/2".into()));
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[1] > w[0])) || t_grid[0] < 0.0 {
        return Err(Error::Precondition("t grid must be nonnegative and increasing".into()));
    }
    if cells_per_unit == 0 {
        return Err(Error::Precondition("cells_per_unit must be positive".into()));
    }
    let dx = 1.0 / cells_per_unit as f64;
    let mut targets = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let m = (t / dx).round();
        if (m * dx - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::Precondition(format!(
                "t = {t} is not a multiple of the cell width {dx}"
            )));
        }
        targets.push(m as usize);
    }
    let big_n = *targets.last().unwrap();
    let p = 2.0 * h.h() - 1.0;
    let kernel = KernelSpec::frac_noise(h)?;

    // First column of the Toeplitz matrix ∬K/dx on the grid, plus ε.
    let mut col: Vec<f64> = (0..big_n.max(1))
        .map(|k| kernel.cell_integral(k as f64 * dx, (k + 1) as f64 * dx, 0.0, dx) / dx)
        .collect();
    col[0] += eps;
    let rhs = vec![dx.sqrt(); big_n.max(1)];

    let mut a_of = vec![0.0; big_n + 1];
    let mut diag = vec![1.0 / eps; big_n + 1];
    let widths = vec![dx; 3];
    levinson_sections(&col, &rhs, |m, v| {
        let g_last: Vec<f64> = v[m.saturating_sub(3)..].iter().map(|x| x / dx.sqrt()).collect();
        a_of[m] = v.iter().sum::<f64>() * dx.sqrt();
        diag[m] = endpoint_extrapolation(&g_last, &widths[..g_last.len()], p);
    })?;

    // Variant B by the trapezoid rule over the section endpoints.
    let mut b_of = vec![0.0; big_n + 1];
    for m in 1..=big_n {
        b_of[m] = b_of[m - 1] + 0.5 * dx * eps * (diag[m - 1].powi(2) + diag[m].powi(2));
    }
    Ok(BracketCurve {
        eps,
        t: t_grid.to_vec(),
        variant_a: targets.iter().map(|&m| a_of[m]).collect(),
        variant_b: targets.iter().map(|&m| b_of[m]).collect(),
        derivative: targets.iter().map(|&m| eps * diag[m].powi(2)).collect(),
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Numerical check of the growth conditions on a bracket.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    /// `(1/t) max(dt/d⟨M⟩, d⟨M⟩/dt)` at the largest grid times.
    pub first_condition: Vec<(f64, f64)>,
    pub first_condition_decreasing: bool,
    /// `∫ (d/dt log d⟨M⟩/dt)^2 dt` over the covered range.
    pub log_derivative_integral: f64,
    /// Share of that integral from the last dyadic block `[t_max/2, t_max]`.
    pub tail_share: f64,
    pub passes: bool,
}

pub fn growth_conditions_check(curve: &BracketCurve) -> Result<GrowthReport> {
    let t = &curve.t;
    let d = &curve.derivative;
    let n = t.len();
    if n < 4 || t[n - 1] < 32.0 {
        return Err(Error::Precondition("growth check needs a curve reaching t >= 32".into()));
    }
    if d.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Precondition("bracket derivative must be positive".into()));
    }
    let first: Vec<(f64, f64)> = (n.saturating_sub(4)..n)
        .map(|i| (t[i], (1.0 / d[i]).max(d[i]) / t[i]))
        .collect();
    let first_dec = first.windows(2).all(|w| w[1].1 < w[0].1);

    // (log d)' by centred differences, squared and integrated by trapezoids.
    let ld: Vec<f64> = d.iter().map(|v| v.ln()).collect();
    let slope: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (ld[b] - ld[a]) / (t[b] - t[a])
        })
        .collect();
    let (mut total, mut tail) = (0.0, 0.0);
    let t_half = 0.5 * t[n - 1];
    for i in 1..n {
        let piece = 0.5 * (t[i] - t[i - 1]) * (slope[i].powi(2) + slope[i - 1].powi(2));
        total += piece;
        if t[i - 1] >= t_half {
            tail += piece;
        }
    }
    let tail_share = if total > 0.0 { tail / total } else { 0.0 };
    Ok(GrowthReport {
        passes: first_dec && tail_share < 0.1,
        first_condition: first,
        first_condition_decreasing: first_dec,
        log_derivative_integral: total,
        tail_share,
    })
}

pub fn write_bracket_csv(h: HurstParam, curve: &BracketCurve, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "H,eps,T,bracketA,bracketB,derivative")?;
    for i in 0..curve.t.len() {
        writeln!(
            out,
            "{},{},{},{:.12e},{:.12e},{:.12e}",
            h.h(),
            curve.eps,
            curve.t[i],
            curve.variant_a[i],
            curve.variant_b[i],
            curve.derivative[i]
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(x: f64) -> HurstParam {
        HurstParam::new(x).unwrap()
    }

    #[test]
    fn dominated_regime() {
        let p = SecondKindProblem::new(h(0.75), 1e8, 1.0, 50).unwrap();
        let s = solve_second_kind(&p).unwrap();
        assert!(s.g.iter().all(|g| (g * 1e8 - 1.0).abs() < 1e-6));
        assert!(s.residual < 1e-10);
    }

    #[test]
    fn symmetric_solution_and_bounds() {
        let p = SecondKindProblem::new(h(0.75), 1.0, 1.0, 200).unwrap();
        let s = solve_second_kind(&p).unwrap();
        let n = s.g.len();
        for i in 0..n {
            assert!((s.g[i] - s.g[n - 1 - i]).abs() < 1e-8);
            assert!(s.g[i] > 0.0 && s.g[i] < 1.0);
        }
    }

    #[test]
    fn rejects_bad_regime() {
        assert!(matches!(SecondKindProblem::new(h(0.4), 1.0, 1.0, 10), Err(Error::Regime(_))));
        assert!(SecondKindProblem::new(h(0.7), 0.0, 1.0, 10).is_err());
    }

    #[test]
    fn extrapolation_is_exact_for_the_model() {
        let p = 0.5;
        let widths = [0.1, 0.05, 0.02];
        // Cell averages of 2 + 3 d^p - d^{2p} over cells at distance [0,.02], [.02,.07], [.07,.17].
        let f = |lo: f64, hi: f64| {
            let i = |q: f64| (hi.powf(q + 1.0) - lo.powf(q + 1.0)) / ((q + 1.0) * (hi - lo));
            2.0 + 3.0 * i(p) - i(2.0 * p)
        };
        let vals = [f(0.07, 0.17), f(0.02, 0.07), f(0.0, 0.02)];
        assert!((endpoint_extrapolation(&vals, &widths, p) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bracket_linear_and_power_law_growth_reports() {
        let t: Vec<f64> = (1..=64).map(|k| k as f64 * 0.5).collect();
        let linear = BracketCurve {
            eps: 1.0,
            t: t.clone(),
            variant_a: t.clone(),
            variant_b: t.clone(),
            derivative: vec![1.0; t.len()],
        };
        let r = growth_conditions_check(&linear).unwrap();
        assert!(r.first_condition_decreasing && r.passes);
        assert_eq!(r.log_derivative_integral, 0.0);
        let hh = 0.75;
        let power = BracketCurve {
            eps: 1.0,
            t: t.clone(),
            variant_a: t.iter().map(|s| s.powf(2.0 - 2.0 * hh)).collect(),
            variant_b: vec![0.0; t.len()],
            derivative: t.iter().map(|s| (2.0 - 2.0 * hh) * s.powf(1.0 - 2.0 * hh)).collect(),
        };
        let r = growth_conditions_check(&power).unwrap();
        assert!(r.passes, "{r:?}");
        let short = BracketCurve { t: vec![1.0, 2.0, 3.0, 4.0], ..linear };
        assert!(growth_conditions_check(&short).is_err());
    }
}
