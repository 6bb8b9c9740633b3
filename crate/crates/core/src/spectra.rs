//! Closed-form eigenpairs of the Brownian and fBm covariance operators on
//! `[0, 1]`, and their comparison with the Galerkin oracle.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{EigenPair, HurstParam};

/// Asymptotic (or, for `H = 1/2`, exact) eigenpair of the fBm covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticEigenpair {
    pub h: f64,
    pub n: usize,
    pub nu: f64,
    pub lam: f64,
    /// Phase `η_H` of the interior approximation `√2 sin(ν t + η_H)`.
    pub eta_h: f64,
    /// Limit of `φ_n(1)` as `n → ∞`.
    pub boundary_value: f64,
    /// Scale `1/n` of the omitted correction terms.
    pub order_estimate: f64,
}

impl AsymptoticEigenpair {
    /// Interior approximation of the eigenfunction.
    pub fn phi(&self, t: f64) -> f64 {
        SQRT_2 * (self.nu * t + self.eta_h).sin()
    }
}

fn check_index(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Precondition("eigenpair indices start at 1".into()))
    } else {
        Ok(())
    }
}

/// Exact Brownian eigenpair `ν_n = (n - 1/2)π`, `λ_n = ν_n^{-2}`, `φ_n = √2 sin(ν_n t)`.
pub fn brownian_eigenpair(n: usize) -> Result<AsymptoticEigenpair> {
    check_index(n)?;
    let nu = (n as f64 - 0.5) * PI;
    Ok(AsymptoticEigenpair {
        h: 0.5,
        n,
        nu,
        lam: nu.powi(-2),
        eta_h: 0.0,
        boundary_value: SQRT_2 * nu.sin(),
        order_estimate: 0.0,
    })
}

/// `ν_n = (n - 1/2)π - ((H - 1/2)^2 / (H + 1/2)) π/2`.
pub fn fbm_nu(h: HurstParam, n: usize) -> Result<f64> {
    check_index(n)?;
    let x = h.h();
    Ok((n as f64 - 0.5) * PI - (x - 0.5).powi(2) / (x + 0.5) * 0.5 * PI)
}

/// `λ_n = sin(πH) Γ(2H + 1) ν_n^{-2H-1}`.
pub fn fbm_eigenvalue(h: HurstParam, n: usize) -> Result<f64> {
    let nu = fbm_nu(h, n)?;
    Ok(h.kappa() * nu.powf(-2.0 * h.h() - 1.0))
}

/// `η_H = ¼ (H - 1/2)(H - 3/2)/(H + 1/2)`: positive for `H < 1/2`, negative
/// for `H > 1/2`.
pub fn eta_h(h: HurstParam) -> f64 {
    let x = h.h();
    0.25 * (x - 0.5) * (x - 1.5) / (x + 0.5)
}

/// Interior leading term `√2 sin(ν_n t + η_H)`.
pub fn fbm_eigenfunction_leading(h: HurstParam, n: usize, t: f64) -> Result<f64> {
    Ok(SQRT_2 * (fbm_nu(h, n)? * t + eta_h(h)).sin())
}

/// `(-1)^n √(2H + 1)`.
pub fn fbm_boundary_value(h: HurstParam, n: usize) -> Result<f64> {
    check_index(n)?;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * (2.0 * h.h() + 1.0).sqrt())
}

pub fn fbm_eigenpair(h: HurstParam, n: usize) -> Result<AsymptoticEigenpair> {
    Ok(AsymptoticEigenpair {
        h: h.h(),
        n,
        nu: fbm_nu(h, n)?,
        lam: fbm_eigenvalue(h, n)?,
        eta_h: eta_h(h),
        boundary_value: fbm_boundary_value(h, n)?,
        order_estimate: 1.0 / n as f64,
    })
}

/// Index shift `k` matching oracle eigenvalue `n` with the asymptotic one
/// `n + k`, and the log-residual at the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub shift: i64,
    pub residual: f64,
}

/// Finds the enumeration shift over `-3..=3` minimizing
/// `Σ_{n=5..10} |log λ_n^{oracle} - log λ_{n+k}|`.
pub fn calibrate_enumeration(h: HurstParam, oracle: &[EigenPair]) -> Result<Calibration> {
    if oracle.len() < 10 {
        return Err(Error::Precondition(format!(
            "calibration needs at least 10 oracle eigenvalues, got {}",
            oracle.len()
        )));
    }
    if oracle.windows(2).any(|w| w[0].lam < w[1].lam) {
        return Err(Error::Precondition("oracle eigenvalues must be sorted descending".into()));
    }
    let mut scores = Vec::new();
    for k in -3i64..=3 {
        let mut r = 0.0;
        for n in 5..=10usize {
            let idx = (n as i64 + k) as usize;
            r += (oracle[n - 1].lam.ln() - fbm_eigenvalue(h, idx)?.ln()).abs();
        }
        scores.push(Calibration { shift: k, residual: r });
    }
    scores.sort_by(|a, b| a.residual.total_cmp(&b.residual));
    if scores[1].residual - scores[0].residual < 1e-3 {
        return Err(Error::Ambiguous(format!(
            "shifts {} and {} fit equally well (residuals {:.3e}, {:.3e})",
            scores[0].shift, scores[1].shift, scores[0].residual, scores[1].residual
        )));
    }
    Ok(scores[0])
}

/// `L2([lo, hi])` distance between the leading-term eigenfunction and an
/// oracle eigenfunction, after choosing the sign that maximizes their inner
/// product.
pub fn interior_l2_distance(asym: &AsymptoticEigenpair, oracle: &EigenPair, lo: f64, hi: f64) -> f64 {
    let widths = crate::kernels::midpoint_widths(&oracle.midpoints, oracle.horizon);
    let mut inner = 0.0;
    let mut cells = Vec::new();
    for ((&x, &p), &w) in oracle.midpoints.iter().zip(&oracle.phi).zip(&widths) {
        if x >= lo && x <= hi {
            let a = asym.phi(x);
            inner += a * p * w;
            cells.push((a, p, w));
        }
    }
    let sign = if inner < 0.0 { -1.0 } else { 1.0 };
    cells
        .iter()
        .map(|(a, p, w)| (a - sign * p).powi(2) * w)
        .sum::<f64>()
        .sqrt()
}

/// One line of the eigenvalue comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub h: f64,
    pub n: usize,
    pub nu: f64,
    pub lambda_asym: f64,
    pub lambda_oracle: f64,
    pub rel_err: f64,
}

pub fn compare_with_oracle(h: HurstParam, oracle: &[EigenPair], use_extrapolated: bool) -> Result<Vec<SpectrumRow>> {
    oracle
        .iter()
        .map(|p| {
            let lo = if use_extrapolated {
                p.lam_extrapolated.unwrap_or(p.lam)
            } else {
                p.lam
            };
            let la = fbm_eigenvalue(h, p.index)?;
            Ok(SpectrumRow {
                h: h.h(),
                n: p.index,
                nu: fbm_nu(h, p.index)?,
                lambda_asym: la,
                lambda_oracle: lo,
                rel_err: la / lo - 1.0,
            })
        })
        .collect()
}

pub fn write_spectrum_csv(rows: &[SpectrumRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "H,n,nu_n,lambda_asym,lambda_oracle,rel_err")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.15e},{:.15e},{:.15e},{:.6e}",
            r.h, r.n, r.nu, r.lambda_asym, r.lambda_oracle, r.rel_err
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
    fn brownian_values() {
        let p = brownian_eigenpair(1).unwrap();
        assert!((p.nu - PI / 2.0).abs() < 1e-15);
        assert!((p.lam - 0.405_284_734_569_351).abs() < 1e-12);
        assert!((brownian_eigenpair(2).unwrap().lam - 0.045_031_637_174_372_3).abs() < 1e-12);
        assert!(brownian_eigenpair(0).is_err());
    }

    #[test]
    fn nu_examples() {
        for n in 1..20 {
            assert_eq!(fbm_nu(h(0.5), n).unwrap(), (n as f64 - 0.5) * PI);
            let d = fbm_nu(h(0.3), n + 1).unwrap() - fbm_nu(h(0.3), n).unwrap();
            assert!((d - PI).abs() < 1e-12);
        }
        let expect = PI / 2.0 - 0.16 / 1.4 * PI / 2.0;
        assert!((fbm_nu(h(0.9), 1).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn eigenvalue_limits() {
        assert!((fbm_eigenvalue(h(0.5), 1).unwrap() - 0.405_284_734_569_351).abs() < 1e-12);
        for &x in &[0.1, 0.3, 0.75, 0.9] {
            let hp = h(x);
            // The (nπ) law lags ν_n by c = 1/2 + (H - 1/2)^2/(2H + 1) periods,
            // a relative gap of about (2H + 1) c / n.
            for &n in &[50usize, 2000] {
                let first = hp.kappa() * (n as f64 * PI).powf(-2.0 * x - 1.0);
                let gap = fbm_eigenvalue(hp, n).unwrap() / first - 1.0;
                let c = 0.5 + (x - 0.5) * (x - 0.5) / (2.0 * x + 1.0);
                let predicted = (2.0 * x + 1.0) * c / n as f64;
                assert!((gap / predicted - 1.0).abs() < 0.1, "H={x} n={n} gap={gap}");
            }
        }
        for &x in &[0.5 - 1e-6, 0.5 + 1e-6] {
            for n in 1..10 {
                let a = fbm_eigenvalue(h(x), n).unwrap();
                let b = brownian_eigenpair(n).unwrap().lam;
                assert!((a / b - 1.0).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn eta_sign_map() {
        assert_eq!(eta_h(h(0.5)), 0.0);
        for &x in &[0.05, 0.2, 0.45] {
            assert!(eta_h(h(x)) > 0.0);
        }
        for &x in &[0.55, 0.75, 0.95] {
            assert!(eta_h(h(x)) < 0.0);
        }
        let t = 0.37;
        let b = brownian_eigenpair(3).unwrap();
        assert!((fbm_eigenfunction_leading(h(0.5), 3, t).unwrap() - b.phi(t)).abs() < 1e-15);
    }

    #[test]
    fn boundary_values_alternate() {
        assert!((fbm_boundary_value(h(0.5), 2).unwrap() - SQRT_2).abs() < 1e-15);
        assert!((fbm_boundary_value(h(0.75), 3).unwrap() + 2.5f64.sqrt()).abs() < 1e-15);
    }

    fn fake_oracle(hp: HurstParam, shift: i64) -> Vec<EigenPair> {
        (1..=12)
            .map(|n| EigenPair {
                index: n,
                lam: fbm_eigenvalue(hp, (n as i64 + shift) as usize).unwrap(),
                nu: None,
                horizon: 1.0,
                midpoints: vec![],
                phi: vec![],
                lam_extrapolated: None,
                error_estimate: None,
            })
            .collect()
    }

    #[test]
    fn calibration() {
        let c = calibrate_enumeration(h(0.5), &fake_oracle(h(0.5), 0)).unwrap();
        assert_eq!(c.shift, 0);
        assert!(c.residual < 1e-12);
        assert_eq!(calibrate_enumeration(h(0.7), &fake_oracle(h(0.7), 2)).unwrap().shift, 2);
        assert!(calibrate_enumeration(h(0.7), &fake_oracle(h(0.7), 0)[..3]).is_err());
    }
}
