//! Integro-algebraic system for the eigenvalue parameter `ν`: the half-line
//! equations
//!
//! ```text
//! p±(t) = ±(1/π)∫_0^∞ h0(s)e^{-νs}/(s+t) p±(s) ds + 1
//! q±(t) = ±(1/π)∫_0^∞ h0(s)e^{-νs}/(s+t) q±(s) ds + t
//! ```
//!
//! their evaluation at `±i`, the coefficients `ξ`, `η` and the root condition
//! `Im(ξ η̄) = 0`. The kernel `h0`, the constants `X0(±i)` and `b_α` are inputs.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::kernels::HurstParam;
use crate::numerics::linalg::dot;
use crate::numerics::quad::gauss_legendre;
use crate::numerics::roots::brent;

/// `d_α = c_α/Γ(α) · π/cos(πα/2)` with `c_α = (1 - α/2)(1 - α)`.
pub fn d_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter { name: "alpha", value: alpha, reason: "must lie in (0, 1)" });
    }
    let c = (1.0 - 0.5 * alpha) * (1.0 - alpha);
    Ok(c / gamma(alpha) * PI / (0.5 * PI * alpha).cos())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bridge {
    NuToLambda,
    LambdaToNu,
}

/// `ν^{α-3} = λ/d_α`, `α = 2 - 2H`, in either direction.
pub fn nu_lambda_bridge(h: HurstParam, value: f64, direction: Bridge) -> Result<f64> {
    crate::error::ensure_positive("value", value)?;
    let a = h.alpha();
    let d = d_alpha(a)?;
    Ok(match direction {
        Bridge::NuToLambda => d * value.powf(a - 3.0),
        Bridge::LambdaToNu => (value / d).powf(1.0 / (a - 3.0)),
    })
}

/// Kernel `h0` on `(0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum H0Kernel {
    Zero,
    /// `a/(1 + s²)`.
    Rational { amplitude: f64 },
    /// `a s^{-γ}`, `0 <= γ < 1`.
    Power { amplitude: f64, exponent: f64 },
}

impl H0Kernel {
    pub fn synthetic() -> Self {
        H0Kernel::Rational { amplitude: 0.5 }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            H0Kernel::Zero => 0.0,
            H0Kernel::Rational { amplitude } => amplitude / (1.0 + s * s),
            H0Kernel::Power { amplitude, exponent } => amplitude * s.powf(-exponent),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            H0Kernel::Zero => Ok(()),
            H0Kernel::Rational { amplitude } if amplitude >= 0.0 && amplitude.is_finite() => Ok(()),
            H0Kernel::Power { amplitude, exponent }
                if amplitude >= 0.0 && amplitude.is_finite() && (0.0..1.0).contains(&exponent) =>
            {
                Ok(())
            }
            _ => Err(Error::InvalidParameter { name: "h0", value: f64::NAN, reason: "kernel parameters out of range" }),
        }
    }
}

/// Quadrature on `(0, t_max]`: Gauss-Legendre panels on a geometric mesh
/// clustered at 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfLineGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub t_max: f64,
}

impl HalfLineGrid {
    pub fn graded(t_max: f64, smallest: f64, ratio: f64, order: usize) -> Result<Self> {
        if !(t_max > smallest && smallest > 0.0 && ratio > 1.0 && order >= 2) {
            return Err(Error::Precondition("grid needs 0 < smallest < t_max, ratio > 1".into()));
        }
        let mut breaks = vec![0.0, smallest];
        while *breaks.last().unwrap() < t_max {
            let next = (breaks.last().unwrap() * ratio).min(t_max);
            breaks.push(next);
        }
        let (x, w) = gauss_legendre(order);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for p in breaks.windows(2) {
            let (mid, half) = (0.5 * (p[0] + p[1]), 0.5 * (p[1] - p[0]));
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + half * xi);
                weights.push(half * wi);
            }
        }
        Ok(Self { nodes, weights, t_max })
    }

    /// Default grid for parameter `ν`: `t_max = 40/ν`.
    pub fn for_nu(nu: f64) -> Result<Self> {
        let t_max = 40.0 / nu;
        Self::graded(t_max, 1e-12 * t_max, 2.0, 16)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HilbertSystemSpec {
    pub h0: H0Kernel,
    /// `X0(i)` and `X0(-i)`.
    pub x0_plus: Complex64,
    pub x0_minus: Complex64,
    pub b_alpha: Complex64,
    pub nu: f64,
    #[serde(skip)]
    pub grid: HalfLineGrid,
}

impl HilbertSystemSpec {
    pub fn new(h0: H0Kernel, x0_plus: Complex64, x0_minus: Complex64, b_alpha: Complex64, nu: f64) -> Result<Self> {
        crate::error::ensure_positive("nu", nu)?;
        h0.validate()?;
        Ok(Self { h0, x0_plus, x0_minus, b_alpha, nu, grid: HalfLineGrid::for_nu(nu)? })
    }

    /// `h0 ≡ 0`, `X0 ≡ 1`, `b_α = 0`.
    pub fn zero_kernel(nu: f64) -> Result<Self> {
        let one = Complex64::new(1.0, 0.0);
        Self::new(H0Kernel::Zero, one, one, Complex64::new(0.0, 0.0), nu)
    }

    /// `h0 = 0.5/(1 + s²)`, `X0 ≡ 1`, `b_α = 0`.
    pub fn synthetic(nu: f64) -> Result<Self> {
        let one = Complex64::new(1.0, 0.0);
        Self::new(H0Kernel::synthetic(), one, one, Complex64::new(0.0, 0.0), nu)
    }

    /// Same inputs at another `ν`, with the default grid for it.
    pub fn at_nu(&self, nu: f64) -> Result<Self> {
        Self::new(self.h0, self.x0_plus, self.x0_minus, self.b_alpha, nu)
    }

    /// `sup_s h0(s)e^{-νs}`, which bounds `(1/π)‖K‖` on `L²(ℝ₊)` because the
    /// kernel `1/(s+t)` has norm `π` there.
    pub fn contraction_estimate(&self) -> f64 {
        self.grid
            .nodes
            .iter()
            .map(|&s| self.h0.eval(s).abs() * (-self.nu * s).exp())
            .fold(0.0, f64::max)
    }

    /// Weighted kernel values `w_j h0(s_j)e^{-νs_j}/π`.
    fn weights(&self) -> Vec<f64> {
        self.grid
            .nodes
            .iter()
            .zip(&self.grid.weights)
            .map(|(&s, &w)| w * self.h0.eval(s) * (-self.nu * s).exp() / PI)
            .collect()
    }

}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PqSolution {
    pub nodes: Vec<f64>,
    pub p_plus: Vec<f64>,
    pub p_minus: Vec<f64>,
    pub q_plus: Vec<f64>,
    pub q_minus: Vec<f64>,
    pub iterations: usize,
    pub contraction: f64,
    /// Ratio of the last two iterate differences, the largest over the four
    /// equations.
    pub observed_factor: f64,
    /// Largest first-step difference, which sets the iteration count.
    pub first_step: f64,
    #[serde(skip)]
    kw: Vec<f64>,
}

const PQ_TOL: f64 = 1e-12;
const PQ_MAX_ITER: usize = 500;

/// Fixed-point iteration from `p ≡ 1`, `q ≡ t` on the spec grid.
pub fn solve_pq(spec: &HilbertSystemSpec) -> Result<PqSolution> {
    let contraction = spec.contraction_estimate();
    if contraction >= 1.0 {
        return Err(Error::Precondition(format!("contraction estimate {contraction} is not below 1")));
    }
    let kw = spec.weights();
    let s = spec.grid.nodes.clone();
    let n = s.len();
    let kernel: Vec<f64> = s
        .par_iter()
        .flat_map_iter(|&t| s.iter().zip(&kw).map(move |(&sj, &k)| k / (sj + t)))
        .collect();
    // Returns the solution, iteration count, last step ratio and first step.
    let solve = |sign: f64, rhs: fn(f64) -> f64| -> Result<(Vec<f64>, usize, f64, f64)> {
        let mut f: Vec<f64> = s.iter().map(|&t| rhs(t)).collect();
        let mut next = vec![0.0; n];
        let (mut last, mut first) = (f64::NAN, 0.0);
        for k in 1..=PQ_MAX_ITER {
            for (i, out) in next.iter_mut().enumerate() {
                *out = sign * dot(&kernel[i * n..(i + 1) * n], &f) + rhs(s[i]);
            }
            let diff = f.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = next.iter().map(|v| v.abs()).fold(1.0, f64::max);
            std::mem::swap(&mut f, &mut next);
            if k == 1 {
                first = diff / scale;
            }
            if diff <= PQ_TOL * scale {
                let ratio = if k > 2 { diff / last } else { 0.0 };
                return Ok((f, k, ratio, first));
            }
            last = diff;
        }
        Err(Error::Convergence { what: "fixed-point iteration for p, q", iterations: PQ_MAX_ITER })
    };
    let one: fn(f64) -> f64 = |_| 1.0;
    let ident: fn(f64) -> f64 = |t| t;
    let runs = [(1.0, one), (-1.0, one), (1.0, ident), (-1.0, ident)]
        .into_par_iter()
        .map(|(sign, rhs)| solve(sign, rhs))
        .collect::<Result<Vec<_>>>()?;
    let iterations = runs.iter().map(|r| r.1).max().unwrap_or(0);
    let observed_factor = runs.iter().map(|r| r.2).fold(0.0, f64::max);
    let first_step = runs.iter().map(|r| r.3).fold(0.0, f64::max);
    let mut runs = runs.into_iter().map(|r| r.0);
    let (p_plus, p_minus, q_plus, q_minus) =
        (runs.next().unwrap(), runs.next().unwrap(), runs.next().unwrap(), runs.next().unwrap());
    Ok(PqSolution { nodes: s, p_plus, p_minus, q_plus, q_minus, iterations, contraction, observed_factor, first_step, kw })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PqValues {
    pub p_plus: Complex64,
    pub p_minus: Complex64,
    pub q_plus: Complex64,
    pub q_minus: Complex64,
}

impl PqSolution {
    /// Right-hand sides of the equations at `z ∉ ℝ₋`.
    pub fn eval_complex(&self, z: Complex64) -> Result<PqValues> {
        if z.im == 0.0 && z.re <= 0.0 {
            return Err(Error::Domain(format!("z = {z} lies on the cut (-∞, 0]")));
        }
        let (mut ip, mut im, mut jp, mut jm) = (Complex64::default(), Complex64::default(), Complex64::default(), Complex64::default());
        for (j, &s) in self.nodes.iter().enumerate() {
            let k = self.kw[j] / (s + z);
            ip += k * self.p_plus[j];
            im += k * self.p_minus[j];
            jp += k * self.q_plus[j];
            jm += k * self.q_minus[j];
        }
        Ok(PqValues { p_plus: 1.0 + ip, p_minus: 1.0 - im, q_plus: z + jp, q_minus: z - jm })
    }

    /// `sup |p± - 1|` and `sup |q± - t|` over `ts`.
    pub fn deviations(&self, ts: &[f64]) -> Result<(f64, f64)> {
        let (mut dp, mut dq) = (0.0f64, 0.0f64);
        for &t in ts {
            let v = self.eval_complex(Complex64::new(t, 0.0))?;
            dp = dp.max((v.p_plus - 1.0).norm()).max((v.p_minus - 1.0).norm());
            dq = dq.max((v.q_plus - t).norm()).max((v.q_minus - t).norm());
        }
        Ok((dp, dq))
    }
}

/// Evaluation points `t ∈ [0.5, 4]` for the flattening checks.
pub fn deviation_points() -> Vec<f64> {
    (0..=35).map(|k| 0.5 + 0.1 * k as f64).collect()
}

pub fn eval_complex(sol: &PqSolution, z: Complex64) -> Result<PqValues> {
    sol.eval_complex(z)
}

/// `ξ` and `η` from the values of `p±`, `q±` at `i` and `-i`.
pub fn xi_eta(spec: &HilbertSystemSpec, at_i: &PqValues, at_minus_i: &PqValues) -> (Complex64, Complex64) {
    let a_plus = |v: &PqValues| v.p_plus + v.p_minus;
    let a_minus = |v: &PqValues| v.p_plus - v.p_minus;
    let b_plus = |v: &PqValues| v.q_plus + v.q_minus;
    let b_minus = |v: &PqValues| v.q_plus - v.q_minus;
    let e = Complex64::from_polar(1.0, 0.5 * spec.nu);
    let ec = e.conj();
    let ba = spec.b_alpha;
    let xi = e * spec.x0_plus * (b_plus(at_minus_i) - ba * a_plus(at_minus_i))
        + ec * spec.x0_minus * (b_minus(at_i) - ba * a_minus(at_i));
    let eta = e * spec.x0_plus * a_minus(at_minus_i) + ec * spec.x0_minus * a_plus(at_i);
    (xi, eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Determinant {
    pub xi: Complex64,
    pub eta: Complex64,
    pub residual: f64,
}

/// `Im(ξ η̄)` after solving the half-line equations at `spec.nu`.
pub fn determinant(spec: &HilbertSystemSpec) -> Result<Determinant> {
    let sol = solve_pq(spec)?;
    let i = Complex64::i();
    let (xi, eta) = xi_eta(spec, &sol.eval_complex(i)?, &sol.eval_complex(-i)?);
    Ok(Determinant { xi, eta, residual: (xi * eta.conj()).im })
}

pub fn determinant_residual(spec: &HilbertSystemSpec) -> Result<f64> {
    Ok(determinant(spec)?.residual)
}

/// Phase `arg X0(i) - arg X0(-i) + arg(i + b_α)` of the asymptotic law
/// `ν_k = kπ - phase`.
pub fn asymptotic_phase(spec: &HilbertSystemSpec) -> f64 {
    spec.x0_plus.arg() - spec.x0_minus.arg() + (Complex64::i() + spec.b_alpha).arg()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NuRoot {
    pub n: i64,
    pub nu: f64,
    pub residual: f64,
    pub scale: f64,
    pub asymptotic_prediction: f64,
}

impl NuRoot {
    pub fn gap(&self) -> f64 {
        self.nu - self.asymptotic_prediction
    }
}

/// Roots of `Im(ξ η̄)` in `[lo, hi]`, one per predicted bracket
/// `ν_k ± π/4`, widened to `± π/2` when the sign does not change.
pub fn find_nu_roots(spec: &HilbertSystemSpec, lo: f64, hi: f64, count: usize) -> Result<Vec<NuRoot>> {
    if !(hi > lo && lo > 0.0) {
        return Err(Error::Precondition("bracket needs 0 < lo < hi".into()));
    }
    let phase = asymptotic_phase(spec);
    let k_lo = ((lo + phase) / PI).ceil() as i64;
    let k_hi = ((hi + phase) / PI).floor() as i64;
    let predictions: Vec<(i64, f64)> = (k_lo..=k_hi).map(|k| (k, k as f64 * PI - phase)).collect();
    if predictions.len() < count {
        return Err(Error::Precondition(format!(
            "bracket [{lo}, {hi}] holds {} predicted roots, {count} requested",
            predictions.len()
        )));
    }
    let f = |nu: f64| -> Result<f64> { determinant_residual(&spec.at_nu(nu)?) };
    let mut roots = Vec::with_capacity(count);
    for &(k, pred) in predictions.iter().take(count) {
        let mut bracket = None;
        for width in [0.25 * PI, 0.5 * PI] {
            let (a, b) = ((pred - width).max(1e-3), pred + width);
            let (fa, fb) = (f(a)?, f(b)?);
            if fa * fb <= 0.0 {
                bracket = Some((a, b));
                break;
            }
        }
        let (a, b) = bracket.ok_or_else(|| Error::Numerical(format!("no sign change near predicted root {pred}")))?;
        let mut err = None;
        let nu = brent(
            |x| match f(x) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::NAN
                }
            },
            a,
            b,
            1e-13,
            200,
        )?;
        if let Some(e) = err {
            return Err(e);
        }
        let d = determinant(&spec.at_nu(nu)?)?;
        roots.push(NuRoot {
            n: k,
            nu,
            residual: d.residual.abs(),
            scale: d.xi.norm() * d.eta.norm(),
            asymptotic_prediction: pred,
        });
    }
    Ok(roots)
}

pub fn write_roots_csv(roots: &[NuRoot], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "nu_root,residual,prediction,gap")?;
    for r in roots {
        writeln!(out, "{:.15e},{:.6e},{:.15e},{:.6e}", r.nu, r.residual, r.asymptotic_prediction, r.gap())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_and_bridge() {
        let d = d_alpha(0.5).unwrap();
        let expect = 0.75 * 0.5 / PI.sqrt() * PI / (0.25 * PI).cos();
        assert!((d - expect).abs() < 1e-14);
        assert!(d_alpha(1.0).is_err());
        let h = HurstParam::new(0.75).unwrap();
        let lam = nu_lambda_bridge(h, 20.0, Bridge::NuToLambda).unwrap();
        assert!((lam - d * 20f64.powf(-2.5)).abs() < 1e-15);
        let nu = nu_lambda_bridge(h, lam, Bridge::LambdaToNu).unwrap();
        assert!((nu / 20.0 - 1.0).abs() < 1e-12);
        assert!(nu_lambda_bridge(h, 21.0, Bridge::NuToLambda).unwrap() < lam);
    }

    #[test]
    fn zero_kernel_is_exact() {
        let spec = HilbertSystemSpec::zero_kernel(7.3).unwrap();
        let sol = solve_pq(&spec).unwrap();
        assert!(sol.p_plus.iter().all(|&v| v == 1.0));
        assert!(sol.q_minus.iter().zip(&sol.nodes).all(|(v, t)| v == t));
        let z = Complex64::new(0.3, -2.0);
        let v = sol.eval_complex(z).unwrap();
        assert_eq!(v.p_minus, Complex64::new(1.0, 0.0));
        assert_eq!(v.q_plus, z);
        let d = determinant(&spec).unwrap();
        assert!((d.residual + 4.0 * 7.3f64.cos()).abs() < 1e-13);
        let roots = find_nu_roots(&spec, 1.0, 12.0, 3).unwrap();
        for (r, k) in roots.iter().zip(1..) {
            assert!((r.nu - (k as f64 - 0.5) * PI).abs() < 1e-10);
        }
        assert!(find_nu_roots(&spec, 1.0, 3.0, 100).is_err());
        assert!(sol.eval_complex(Complex64::new(-1.0, 0.0)).is_err());
    }

    #[test]
    fn zero_kernel_with_b_alpha() {
        let one = Complex64::new(1.0, 0.0);
        let b = Complex64::new(0.0, 0.4);
        let spec = HilbertSystemSpec::new(H0Kernel::Zero, one, one, b, 5.0).unwrap();
        let sol = solve_pq(&spec).unwrap();
        let i = Complex64::i();
        let (xi, eta) = xi_eta(&spec, &sol.eval_complex(i).unwrap(), &sol.eval_complex(-i).unwrap());
        let e = Complex64::from_polar(1.0, 2.5);
        assert!((xi - e * (-2.0 * i - 2.0 * b)).norm() < 1e-14);
        assert!((eta - 2.0 * e.conj()).norm() < 1e-14);
    }

    #[test]
    fn synthetic_kernel_flattens() {
        let pts = deviation_points();
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for nu in [25.0, 50.0, 100.0, 200.0] {
            let spec = HilbertSystemSpec::synthetic(nu).unwrap();
            let sol = solve_pq(&spec).unwrap();
            let (dp, dq) = sol.deviations(&pts).unwrap();
            assert!(dp < prev.0 && dq < prev.1);
            prev = (dp, dq);
            let z = Complex64::new(0.7, 1.1);
            let (a, b) = (sol.eval_complex(z).unwrap(), sol.eval_complex(z.conj()).unwrap());
            assert!((a.p_plus.conj() - b.p_plus).norm() < 1e-15);
            assert!((a.q_minus.conj() - b.q_minus).norm() < 1e-15);
            assert!(sol.observed_factor <= sol.contraction * 1.05, "{}", sol.observed_factor);
            let bound = (PQ_TOL / sol.first_step).ln() / sol.contraction.ln();
            // Near 0 the solution grows like t^{-δ}, which costs a transient
            // of about a dozen sweeps before the geometric rate sets in.
            assert!(sol.iterations as f64 <= bound + 15.0, "{} > {bound}", sol.iterations);
        }
    }

    #[test]
    fn contraction_is_checked() {
        let one = Complex64::new(1.0, 0.0);
        let spec = HilbertSystemSpec::new(H0Kernel::Rational { amplitude: 2.0 }, one, one, one, 10.0).unwrap();
        assert!(matches!(solve_pq(&spec), Err(Error::Precondition(_))));
    }
}
