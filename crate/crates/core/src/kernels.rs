//! Covariance kernels, spectral densities and the scaling of eigenpairs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{ensure_positive, Error, Result};

/// Hurst exponent, validated to lie in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HurstParam(f64);

impl TryFrom<f64> for HurstParam {
    type Error = Error;
    fn try_from(h: f64) -> Result<Self> {
        Self::new(h)
    }
}

impl From<HurstParam> for f64 {
    fn from(h: HurstParam) -> f64 {
        h.0
    }
}

impl HurstParam {
    pub fn new(h: f64) -> Result<Self> {
        if h.is_finite() && h > 0.0 && h < 1.0 {
            Ok(Self(h))
        } else {
            Err(Error::InvalidParameter {
                name: "h",
                value: h,
                reason: "Hurst exponent must lie in (0, 1)",
            })
        }
    }

    #[inline]
    pub fn h(self) -> f64 {
        self.0
    }

    pub fn is_long_memory(self) -> bool {
        self.0 > 0.5
    }

    /// `H > 3/4`, where the mixed fBm is a semimartingale.
    pub fn is_semimartingale_mix(self) -> bool {
        self.0 > 0.75
    }

    /// `α = 2 - 2H`.
    pub fn alpha(self) -> f64 {
        2.0 - 2.0 * self.0
    }

    /// `c_α = (1 - α/2)(1 - α)`.
    pub fn c_alpha(self) -> f64 {
        let a = self.alpha();
        (1.0 - 0.5 * a) * (1.0 - a)
    }

    /// `d_α = c_α / Γ(α) · π / cos(πα/2)`.
    pub fn d_alpha(self) -> f64 {
        let a = self.alpha();
        self.c_alpha() / gamma(a) * PI / (0.5 * PI * a).cos()
    }

    /// `κ(H) = Γ(2H + 1) sin(πH)`.
    pub fn kappa(self) -> f64 {
        gamma(2.0 * self.0 + 1.0) * (PI * self.0).sin()
    }

    /// `c_H = H(2H - 1)`.
    pub fn c_h(self) -> f64 {
        self.0 * (2.0 * self.0 - 1.0)
    }

    fn require_long_memory(self) -> Result<()> {
        if self.is_long_memory() {
            Ok(())
        } else {
            Err(Error::Regime(format!(
                "the fractional noise kernel needs H > 1/2, got H = {}",
                self.0
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    FbmCovariance,
    FracNoise,
    BrownianCovariance,
    MixedFbm,
}

/// A covariance kernel `σ² K(s, t)` (plus `ε (s ∧ t)` for the mixed fBm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub h: HurstParam,
    pub sigma: f64,
    pub eps: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, h: HurstParam, sigma: f64, eps: f64) -> Result<Self> {
        ensure_positive("sigma", sigma)?;
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "eps",
                value: eps,
                reason: "noise intensity must be nonnegative and finite",
            });
        }
        if kind == KernelKind::FracNoise {
            h.require_long_memory()?;
        }
        Ok(Self { kind, h, sigma, eps })
    }

    pub fn fbm(h: HurstParam) -> Self {
        Self { kind: KernelKind::FbmCovariance, h, sigma: 1.0, eps: 0.0 }
    }

    pub fn brownian() -> Self {
        Self {
            kind: KernelKind::BrownianCovariance,
            h: HurstParam(0.5),
            sigma: 1.0,
            eps: 0.0,
        }
    }

    pub fn frac_noise(h: HurstParam) -> Result<Self> {
        Self::new(KernelKind::FracNoise, h, 1.0, 0.0)
    }

    pub fn mixed(h: HurstParam, sigma: f64, eps: f64) -> Result<Self> {
        Self::new(KernelKind::MixedFbm, h, sigma, eps)
    }

    /// Pointwise value `K(s, t)`.
    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        let s2 = self.sigma * self.sigma;
        match self.kind {
            KernelKind::FbmCovariance => Ok(s2 * fbm_cov(self.h, s, t)?),
            KernelKind::BrownianCovariance => Ok(s2 * fbm_cov(HurstParam(0.5), s, t)?),
            KernelKind::FracNoise => Ok(s2 * frac_noise_kernel(self.h, s, t)?),
            KernelKind::MixedFbm => {
                Ok(self.eps * fbm_cov(HurstParam(0.5), s, t)? + s2 * fbm_cov(self.h, s, t)?)
            }
        }
    }

    /// Exact `∬_{[a,b]×[c,d]} K(s, t) ds dt`.
    pub fn cell_integral(&self, a: f64, b: f64, c: f64, d: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        match self.kind {
            KernelKind::FbmCovariance => s2 * fbm_cell_integral(self.h.h(), a, b, c, d),
            KernelKind::BrownianCovariance => s2 * fbm_cell_integral(0.5, a, b, c, d),
            KernelKind::FracNoise => {
                s2 * self.h.c_h() * power_cell_integral(2.0 * self.h.h() - 2.0, a, b, c, d)
            }
            KernelKind::MixedFbm => {
                self.eps * fbm_cell_integral(0.5, a, b, c, d)
                    + s2 * fbm_cell_integral(self.h.h(), a, b, c, d)
            }
        }
    }
}

fn check_time(name: &'static str, t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {t} must be a nonnegative time")))
    }
}

/// fBm covariance `½(|t|^{2H} + |s|^{2H} - |t - s|^{2H})`.
pub fn fbm_cov(h: HurstParam, s: f64, t: f64) -> Result<f64> {
    check_time("s", s)?;
    check_time("t", t)?;
    let p = 2.0 * h.h();
    Ok(0.5 * (t.powf(p) + s.powf(p) - (t - s).abs().powf(p)))
}

/// Fractional noise kernel `c_H |s - t|^{2H - 2}`, `H > 1/2`.
pub fn frac_noise_kernel(h: HurstParam, s: f64, t: f64) -> Result<f64> {
    h.require_long_memory()?;
    let r = (s - t).abs();
    if r < 1e-14 {
        return Err(Error::Singularity(format!(
            "fractional noise kernel is singular at s = t (|s - t| = {r:e})"
        )));
    }
    Ok(h.c_h() * r.powf(2.0 * h.h() - 2.0))
}

/// Exact `∬_{[a,b]×[c,d]} |s - t|^γ ds dt` for `γ > -1`.
///
/// Well separated cells use the even Taylor expansion of the mixed second
/// difference of `|x|^{γ+2}`, which avoids the cancellation of the direct
/// antiderivative formula.
pub fn power_cell_integral(gamma: f64, a: f64, b: f64, c: f64, d: f64) -> f64 {
    let p = gamma + 2.0;
    let norm = 1.0 / ((gamma + 1.0) * p);
    let u = 0.5 * (b - a);
    let v = 0.5 * (d - c);
    let dist = (0.5 * (a + b) - 0.5 * (c + d)).abs();
    let w = u + v;
    if dist > 0.0 && w < 0.25 * dist {
        // Σ_{m even ≥ 2} 2 F^{(m)}(D)/m! [(u+v)^m - (u-v)^m], with
        // F^{(m)}(D) = p(p-1)...(p-m+1) D^{p-m} / (p(p-1)).
        let z = u - v;
        let mut falling = 1.0; // p(p-1)...(p-m+1) / (p(p-1)) for m = 2
        let mut fact = 2.0;
        let mut wm = w * w;
        let mut zm = z * z;
        let mut dm = dist.powf(p - 2.0);
        let inv_d2 = 1.0 / (dist * dist);
        let mut sum = 0.0;
        let mut m = 2.0;
        for _ in 0..40 {
            let term = 2.0 * falling / fact * dm * (wm - zm);
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
            falling *= (p - m) * (p - m - 1.0);
            fact *= (m + 1.0) * (m + 2.0);
            wm *= w * w;
            zm *= z * z;
            dm *= inv_d2;
            m += 2.0;
        }
        return sum;
    }
    let f = |x: f64| x.abs().powf(p) * norm;
    -f(b - d) + f(b - c) + f(a - d) - f(a - c)
}

/// Exact cell integral of the fBm covariance with Hurst exponent `h`.
pub fn fbm_cell_integral(h: f64, a: f64, b: f64, c: f64, d: f64) -> f64 {
    let p = 2.0 * h;
    let mono = |lo: f64, hi: f64| (hi.powf(p + 1.0) - lo.powf(p + 1.0)) / (p + 1.0);
    0.5 * ((d - c) * mono(a, b) + (b - a) * mono(c, d)) - 0.5 * power_cell_integral(p, a, b, c, d)
}

/// An eigenpair of a covariance operator on `[0, horizon]`, with the
/// eigenfunction sampled at the cell midpoints of a partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    /// 1-based position in the descending order of eigenvalues.
    pub index: usize,
    pub lam: f64,
    pub nu: Option<f64>,
    pub horizon: f64,
    pub midpoints: Vec<f64>,
    pub phi: Vec<f64>,
    /// Richardson-extrapolated eigenvalue and the size of the correction.
    pub lam_extrapolated: Option<f64>,
    pub error_estimate: Option<f64>,
}

impl EigenPair {
    /// `L2([0, horizon])` norm of the eigenfunction by midpoint quadrature.
    pub fn l2_norm(&self) -> f64 {
        let widths = midpoint_widths(&self.midpoints, self.horizon);
        self.phi
            .iter()
            .zip(&widths)
            .map(|(p, w)| p * p * w)
            .sum::<f64>()
            .sqrt()
    }
}

/// Cell widths recovered from the midpoints of a partition of `[0, horizon]`.
pub(crate) fn midpoint_widths(mid: &[f64], horizon: f64) -> Vec<f64> {
    let n = mid.len();
    let mut w = Vec::with_capacity(n);
    let mut left = 0.0;
    for i in 0..n {
        let width = 2.0 * (mid[i] - left);
        w.push(width);
        left += width;
    }
    // Guard against drift for long partitions: rescale to the horizon.
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        let s = horizon / total;
        w.iter_mut().for_each(|x| *x *= s);
    }
    w
}

/// Maps a unit-interval eigenpair of the fBm covariance to `[0, T]`.
pub fn scale_eigenpair(t: f64, pair: &EigenPair, h: HurstParam) -> Result<EigenPair> {
    ensure_positive("T", t)?;
    let gain = t.powf(2.0 * h.h() + 1.0);
    let amp = t.powf(-0.5);
    Ok(EigenPair {
        index: pair.index,
        lam: pair.lam * gain,
        nu: pair.nu.map(|nu| nu / t),
        horizon: pair.horizon * t,
        midpoints: pair.midpoints.iter().map(|x| x * t).collect(),
        phi: pair.phi.iter().map(|p| p * amp).collect(),
        lam_extrapolated: pair.lam_extrapolated.map(|l| l * gain),
        error_estimate: pair.error_estimate.map(|e| e * gain),
    })
}

/// Spectral density `1/(λ² + θ²)` of the stationary OU process.
pub fn ou_spectral_density(theta: f64, lam: f64) -> Result<f64> {
    ensure_positive("theta", theta)?;
    Ok(1.0 / (lam * lam + theta * theta))
}

/// Spectral density `ε + σ² κ(H) |λ|^{1-2H}` of the mixed-noise derivative.
pub fn mixed_spectral_density(h: HurstParam, sigma: f64, eps: f64, lam: f64) -> Result<f64> {
    ensure_positive("sigma", sigma)?;
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "eps",
            value: eps,
            reason: "noise intensity must be nonnegative and finite",
        });
    }
    let e = 1.0 - 2.0 * h.h();
    if lam == 0.0 && e < 0.0 {
        return Err(Error::Singularity(
            "spectral density is infinite at λ = 0 for H > 1/2".into(),
        ));
    }
    let pow = if e == 0.0 { 1.0 } else { lam.abs().powf(e) };
    Ok(eps + sigma * sigma * h.kappa() * pow)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(x: f64) -> HurstParam {
        HurstParam::new(x).unwrap()
    }

    #[test]
    fn hurst_validation_and_flags() {
        assert!(HurstParam::new(0.0).is_err());
        assert!(HurstParam::new(1.0).is_err());
        assert!(HurstParam::new(f64::NAN).is_err());
        assert!(h(0.6).is_long_memory() && !h(0.6).is_semimartingale_mix());
        assert!(h(0.8).is_semimartingale_mix());
        assert!((h(0.5).kappa() - 1.0).abs() < 1e-15);
        assert!((h(0.75).c_h() - 0.375).abs() < 1e-15);
    }

    #[test]
    fn fbm_cov_examples() {
        assert!((fbm_cov(h(0.5), 1.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((fbm_cov(h(0.75), 1.0, 2.0).unwrap() - 1.414_213_562_373_095).abs() < 1e-12);
        assert!((fbm_cov(h(0.3), 0.7, 0.7).unwrap() - 0.7f64.powf(0.6)).abs() < 1e-15);
        assert!(matches!(fbm_cov(h(0.3), -1.0, 0.7), Err(Error::Domain(_))));
    }

    #[test]
    fn frac_noise_examples() {
        assert!((frac_noise_kernel(h(0.75), 0.0, 1.0).unwrap() - 0.375).abs() < 1e-15);
        assert!((frac_noise_kernel(h(0.75), 1.0, 0.0).unwrap() - 0.375).abs() < 1e-15);
        assert!(matches!(frac_noise_kernel(h(0.6), 0.0, 0.0), Err(Error::Singularity(_))));
        assert!(matches!(frac_noise_kernel(h(0.4), 0.0, 1.0), Err(Error::Regime(_))));
        assert!(KernelSpec::frac_noise(h(0.5)).is_err());
    }

    #[test]
    fn spectral_densities() {
        assert_eq!(ou_spectral_density(1.0, 0.0).unwrap(), 1.0);
        assert_eq!(ou_spectral_density(2.0, 0.0).unwrap(), 0.25);
        assert_eq!(ou_spectral_density(1.0, 3.0).unwrap(), ou_spectral_density(1.0, -3.0).unwrap());
        assert!((mixed_spectral_density(h(0.5), 1.0, 0.0, 7.0).unwrap() - 1.0).abs() < 1e-15);
        // Γ(2.5) sin(3π/4) = 0.75 √π / √2
        let k = 0.75 * PI.sqrt() / 2f64.sqrt();
        assert!((mixed_spectral_density(h(0.75), 1.0, 2.0, 1.0).unwrap() - (2.0 + k)).abs() < 1e-13);
        assert!(mixed_spectral_density(h(0.75), 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn power_cell_integral_branches_agree() {
        // Unit power: ∬ |s - t| over [0,1]×[2,3] is exactly 2.
        assert!((power_cell_integral(1.0, 0.0, 1.0, 2.0, 3.0) - 2.0).abs() < 1e-14);
        for &g in &[-0.6, -0.2, 0.3, 1.4] {
            let f = |x: f64| x.abs().powf(g + 2.0) / ((g + 1.0) * (g + 2.0));
            let (a, b, c, d) = (0.0, 0.01, 0.3, 0.32);
            let direct = -f(b - d) + f(b - c) + f(a - d) - f(a - c);
            let series = power_cell_integral(g, a, b, c, d);
            assert!((direct - series).abs() < 1e-12 * series.abs(), "g={g}");
        }
    }

    #[test]
    fn brownian_cell_integral_is_exact() {
        // ∬_{[0,1]^2} min(s,t) = 1/3
        assert!((fbm_cell_integral(0.5, 0.0, 1.0, 0.0, 1.0) - 1.0 / 3.0).abs() < 1e-15);
        // disjoint cells: ∫_0^1∫_1^2 min = ∫_0^1 s ds = 1/2
        assert!((fbm_cell_integral(0.5, 0.0, 1.0, 1.0, 2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn scaling_of_eigenpairs() {
        let pair = EigenPair {
            index: 1,
            lam: 1.0,
            nu: Some(2.0),
            horizon: 1.0,
            midpoints: vec![0.25, 0.75],
            phi: vec![1.0, 1.0],
            lam_extrapolated: None,
            error_estimate: None,
        };
        let same = scale_eigenpair(1.0, &pair, h(0.7)).unwrap();
        assert_eq!(same, pair);
        let big = scale_eigenpair(2.0, &pair, h(0.5)).unwrap();
        assert!((big.lam - 4.0).abs() < 1e-15);
        assert!((big.l2_norm() - 1.0).abs() < 1e-12);
        assert!(scale_eigenpair(0.0, &pair, h(0.5)).is_err());
    }
}
