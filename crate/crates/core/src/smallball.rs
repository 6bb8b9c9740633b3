//! `L2` small-ball probabilities: the constants of the logarithmic law, the
//! exact Brownian benchmark and an eigenvalue-series oracle.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{ensure_positive, Error, Result};
use crate::kernels::HurstParam;
use crate::numerics::quad::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallBallConstants {
    pub h: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Constants of `log P(‖B^H‖ ≤ ε) = log C - β ε^{-1/H} + γ log ε + o(1)`.
pub fn beta_gamma(h: HurstParam) -> SmallBallConstants {
    let x = h.h();
    let q = 2.0 * x + 1.0;
    let inner = (PI * x).sin() * gamma(q) / (PI / q).sin().powf(q);
    SmallBallConstants {
        h: x,
        beta: x * q.powf(-q / (2.0 * x)) * inner.powf(1.0 / (2.0 * x)),
        gamma: ((x - 0.5).powi(2) + 1.0) / (2.0 * x),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CameronMartin {
    pub value: f64,
    /// Set when the formula exceeds 1, i.e. `ε` is outside the small-ball regime.
    pub asymptotic_only: bool,
}

/// `(4/√π) ε exp(-ε^{-2}/8)`, the Brownian small-ball asymptotics.
pub fn cameron_martin(eps: f64) -> Result<CameronMartin> {
    ensure_positive("eps", eps)?;
    let value = 4.0 / PI.sqrt() * eps * (-0.125 / (eps * eps)).exp();
    Ok(CameronMartin { value, asymptotic_only: value > 1.0 })
}

/// A truncated eigenvalue list together with the mass of the omitted tail.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSpectrum {
    pub lams: Vec<f64>,
    pub tail_mean: f64,
}

impl TruncatedSpectrum {
    /// Tail mass from a known trace `Σ_n λ_n`.
    pub fn from_trace(lams: Vec<f64>, trace: f64) -> Self {
        let kept: f64 = lams.iter().sum();
        Self { lams, tail_mean: (trace - kept).max(0.0) }
    }

    pub fn exact(lams: Vec<f64>) -> Self {
        Self { lams, tail_mean: 0.0 }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            lams: self.lams.iter().map(|l| l * factor).collect(),
            tail_mean: self.tail_mean * factor,
        }
    }
}

/// Trace of the fBm covariance operator on `[0, 1]`: `∫ t^{2H} dt`.
pub fn fbm_trace(h: HurstParam) -> f64 {
    1.0 / (2.0 * h.h() + 1.0)
}

const GL_POINTS: usize = 20;

/// `P(Σ λ_n Z_n² ≤ ε²)` by Imhof's inversion of the characteristic function.
///
/// The tail beyond the retained eigenvalues enters as a deterministic shift
/// of the threshold by its mean. Refused when that mean exceeds `0.1 ε²`.
pub fn smallball_oracle(spec: &TruncatedSpectrum, eps: f64) -> Result<f64> {
    ensure_positive("eps", eps)?;
    if spec.lams.is_empty() || spec.lams.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::Precondition("eigenvalues must be positive and finite".into()));
    }
    let budget = 0.1 * eps * eps;
    if spec.tail_mean > budget {
        return Err(Error::Truncation { tail: spec.tail_mean, budget });
    }
    let x = eps * eps - spec.tail_mean;
    imhof_cdf(&spec.lams, x)
}

/// `P(Σ λ_j Z_j² ≤ x)`.
pub fn imhof_cdf(lams: &[f64], x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    let half_trace = 0.5 * lams.iter().sum::<f64>();
    // θ(u) = ½ Σ atan(λ u) - ½ x u;  log ρ(u) = ¼ Σ ln(1 + λ² u²)
    let theta = |u: f64| 0.5 * lams.iter().map(|l| (l * u).atan()).sum::<f64>() - 0.5 * x * u;
    let dtheta =
        |u: f64| 0.5 * lams.iter().map(|l| l / (1.0 + l * l * u * u)).sum::<f64>() - 0.5 * x;
    let log_rho = |u: f64| 0.25 * lams.iter().map(|l| (l * l * u * u).ln_1p()).sum::<f64>();

    // Beyond U the integrand oscillates with phase speed at least x/4, so
    // integrating by parts bounds the remainder by 2/(|θ'(U)| U ρ(U)) / π.
    let mut upper = 1.0 / lams.iter().cloned().fold(0.0, f64::max);
    let mut guard = 0;
    loop {
        let speed = dtheta(upper).abs();
        let bound = 2.0 / (PI * speed * upper * log_rho(upper).exp());
        if speed >= 0.25 * x && bound < 1e-10 {
            break;
        }
        upper *= 2.0;
        guard += 1;
        if guard > 80 {
            return Err(Error::Convergence { what: "Imhof truncation point", iterations: guard });
        }
    }

    let (nodes, weights) = gauss_legendre(GL_POINTS);
    // Panels short enough to hold about half an oscillation each.
    let width = (PI / (half_trace + 0.5 * x)).min(upper);
    let panels = (upper / width).ceil() as usize;
    if panels > 50_000_000 {
        return Err(Error::Numerical(format!("Imhof integral needs {panels} panels")));
    }
    let mut sum = 0.0;
    for k in 0..panels {
        let (a, b) = (k as f64 * width, ((k + 1) as f64 * width).min(upper));
        let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
        let mut s = 0.0;
        for (z, w) in nodes.iter().zip(&weights) {
            let u = c + r * z;
            s += w * theta(u).sin() / (u * log_rho(u).exp());
        }
        sum += r * s;
    }
    Ok((0.5 - sum / PI).clamp(0.0, 1.0))
}

/// Fit of the logarithmic small-ball law to oracle probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogLawFit {
    /// Estimate of `log C(H)`: intercept of the residual regression.
    pub log_constant: f64,
    /// Slope on `ε^{1/H}` absorbing the leading correction.
    pub correction: f64,
    /// Residuals `log P + β ε^{-1/H} - γ log ε`, one per input point.
    pub residuals: Vec<f64>,
    /// Local slopes `Δr / Δ log ε` between consecutive points.
    pub drift_slopes: Vec<f64>,
    /// Whether `|drift slope|` shrinks as `ε` decreases.
    pub drift_shrinking: bool,
}

/// Regresses the residuals `r(ε) = log P + β ε^{-1/H} - γ log ε` on
/// `[1, ε^{1/H}]` for explicit constants `β`, `γ`.
pub fn fit_loglaw(h: HurstParam, beta: f64, gamma: f64, probs: &[(f64, f64)]) -> Result<LogLawFit> {
    if probs.len() < 4 {
        return Err(Error::Precondition("log-law fit needs at least 4 points".into()));
    }
    if probs.windows(2).any(|w| !(w[1].0 < w[0].0)) {
        return Err(Error::Precondition("epsilon values must be strictly decreasing".into()));
    }
    if probs.iter().any(|&(e, p)| !(e > 0.0 && p > 0.0)) {
        return Err(Error::Precondition("epsilon and probabilities must be positive".into()));
    }
    let inv_h = 1.0 / h.h();
    let residuals: Vec<f64> = probs
        .iter()
        .map(|&(e, p)| p.ln() + beta * e.powf(-inv_h) - gamma * e.ln())
        .collect();
    let xs: Vec<f64> = probs.iter().map(|&(e, _)| e.powf(inv_h)).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = residuals.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&residuals).map(|(x, y)| (x - mx) * (y - my)).sum();
    let correction = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let log_constant = my - correction * mx;
    let drift_slopes: Vec<f64> = probs
        .windows(2)
        .zip(residuals.windows(2))
        .map(|(p, r)| (r[1] - r[0]) / (p[1].0.ln() - p[0].0.ln()))
        .collect();
    let drift_shrinking = drift_slopes.windows(2).all(|w| w[1].abs() <= w[0].abs() + 1e-12);
    Ok(LogLawFit { log_constant, correction, residuals, drift_slopes, drift_shrinking })
}

/// [`fit_loglaw`] with the constants `β(H)`, `γ(H)`.
pub fn smallball_loglaw_check(h: HurstParam, probs: &[(f64, f64)]) -> Result<LogLawFit> {
    let c = beta_gamma(h);
    fit_loglaw(h, c.beta, c.gamma, probs)
}

pub fn write_loglaw_csv(h: HurstParam, probs: &[(f64, f64)], fit: &LogLawFit, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "H,eps,P_oracle,log_law_residual")?;
    for (&(e, p), r) in probs.iter().zip(&fit.residuals) {
        writeln!(out, "{},{},{:.12e},{:.12e}", h.h(), e, p, r)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::erf::erf;

    fn h(x: f64) -> HurstParam {
        HurstParam::new(x).unwrap()
    }

    #[test]
    fn brownian_constants_are_exact() {
        let c = beta_gamma(h(0.5));
        assert!((c.beta - 0.125).abs() < 1e-12);
        assert!((c.gamma - 1.0).abs() < 1e-12);
        assert!((beta_gamma(h(0.75)).gamma - 1.0625 / 1.5).abs() < 1e-14);
        for &x in &[0.5 - 1e-6, 0.5 + 1e-6] {
            assert!((beta_gamma(h(x)).beta - 0.125).abs() < 1e-4);
        }
    }

    #[test]
    fn cameron_martin_values() {
        let one = cameron_martin(1.0).unwrap();
        assert!(one.asymptotic_only);
        assert!((one.value - 4.0 / PI.sqrt() * (-0.125f64).exp()).abs() < 1e-15);
        let v = cameron_martin(0.2).unwrap();
        assert!((v.value - 4.0 / PI.sqrt() * 0.2 * (-3.125f64).exp()).abs() < 1e-15);
        assert!(!v.asymptotic_only);
        assert!(cameron_martin(0.3).unwrap().value > v.value);
    }

    #[test]
    fn chi_square_cases() {
        let p = smallball_oracle(&TruncatedSpectrum::exact(vec![1.0]), 1.0).unwrap();
        assert!((p - erf(1.0 / 2f64.sqrt())).abs() < 1e-6, "{p}");
        assert!((p - 0.682_689).abs() < 1e-6);
        for &e in &[0.3, 1.0, 2.0] {
            let p = smallball_oracle(&TruncatedSpectrum::exact(vec![0.5, 0.5]), e).unwrap();
            assert!((p - (1.0 - (-e * e as f64).exp())).abs() < 1e-6);
        }
    }

    #[test]
    fn truncation_guard() {
        let s = TruncatedSpectrum { lams: vec![1.0], tail_mean: 0.2 };
        assert!(matches!(smallball_oracle(&s, 1.0), Err(Error::Truncation { .. })));
    }

    #[test]
    fn synthetic_loglaw_recovers_zero_constant() {
        let hp = h(0.7);
        let c = beta_gamma(hp);
        let probs: Vec<(f64, f64)> = [0.5, 0.4, 0.3, 0.25, 0.2]
            .iter()
            .map(|&e: &f64| (e, (-c.beta * e.powf(-1.0 / 0.7) + c.gamma * e.ln()).exp()))
            .collect();
        let fit = smallball_loglaw_check(hp, &probs).unwrap();
        assert!(fit.log_constant.abs() < 1e-8);
        let mut bad = probs.clone();
        bad.swap(0, 1);
        assert!(smallball_loglaw_check(hp, &bad).is_err());
    }
}
