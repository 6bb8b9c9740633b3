//! Steady-state errors of Kalman-Bucy type filters driven by fractional
//! noises, through the sectionally holomorphic extension `Λ(z; H1, H2)` of
//! the observation spectral density.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{ensure_positive, Error, Result};
use crate::kernels::HurstParam;
use crate::numerics::ode::dopri45;
use crate::numerics::quad::{integrate, integrate_to_infinity, QuadOptions};

/// State `dX = βX dt + dB^{H1}`, observation `dY = μX dt + √ε dB^{H2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterModel {
    pub beta: f64,
    pub mu: f64,
    pub eps: f64,
    pub h1: HurstParam,
    pub h2: HurstParam,
}

impl FilterModel {
    pub fn new(beta: f64, mu: f64, eps: f64, h1: HurstParam, h2: HurstParam) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::InvalidParameter { name: "beta", value: beta, reason: "must be finite" });
        }
        if !(mu.is_finite() && mu != 0.0) {
            return Err(Error::InvalidParameter { name: "mu", value: mu, reason: "must be nonzero and finite" });
        }
        ensure_positive("eps", eps)?;
        Ok(Self { beta, mu, eps, h1, h2 })
    }

    /// Classical model with white state and observation noises.
    pub fn classical(beta: f64, mu: f64, eps: f64) -> Result<Self> {
        let half = HurstParam::new(0.5)?;
        Self::new(beta, mu, eps, half, half)
    }

    /// Fractional state noise, white observation noise.
    pub fn white_observation(h: HurstParam, beta: f64, mu: f64, eps: f64) -> Result<Self> {
        Self::new(beta, mu, eps, h, HurstParam::new(0.5)?)
    }

    /// Signal-to-noise ratio `μ²/ε`.
    pub fn snr(&self) -> f64 {
        self.mu * self.mu / self.eps
    }

    /// `t₀ = √(β² + μ²/ε)`.
    pub fn t0(&self) -> f64 {
        (self.beta * self.beta + self.snr()).sqrt()
    }

    fn require_classical(&self) -> Result<()> {
        if self.h1.h() == 0.5 && self.h2.h() == 0.5 {
            Ok(())
        } else {
            Err(Error::Regime("formula holds for white state and observation noise only".into()))
        }
    }

    fn require_white_observation(&self) -> Result<()> {
        if self.h2.h() == 0.5 {
            Ok(())
        } else {
            Err(Error::Regime("formula holds for white observation noise (H2 = 1/2) only".into()))
        }
    }
}

/// `P_T` from `Ṗ = 2βP + 1 - (μ²/ε)P²`, `P_0 = 0`.
pub fn riccati_error(m: &FilterModel, t: f64) -> Result<f64> {
    m.require_classical()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("horizon T = {t} must be nonnegative")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let (b, q) = (m.beta, m.snr());
    let out = dopri45(
        |_, p, dp| dp[0] = 2.0 * b * p[0] + 1.0 - q * p[0] * p[0],
        0.0,
        &[0.0],
        &[t],
        1e-10,
        1e-12,
    )?;
    Ok(out[0][0])
}

/// `(β + √(β² + μ²/ε)) / (μ²/ε)`.
pub fn steady_state_bm(m: &FilterModel) -> Result<f64> {
    m.require_classical()?;
    Ok((m.beta + m.t0()) / m.snr())
}

/// Steady-state error for equal Hurst exponents `H1 = H2 = H`.
pub fn klb_steady_state(h: HurstParam, m: &FilterModel) -> Result<f64> {
    if m.h1 != h || m.h2 != h {
        return Err(Error::Regime("formula needs H1 = H2 = H".into()));
    }
    let x = h.h();
    let r = m.t0();
    Ok(gamma(2.0 * x + 1.0) / (2.0 * (r * r).powf(x))
        * (1.0 + (PI * x).sin() * (r + m.beta) / (r - m.beta)))
}

/// Small-noise prefactor of [`klb_steady_state`]: `½ Γ(2H+1)(1 + sin πH)(ε/μ²)^H`.
pub fn klb_small_noise(h: HurstParam, mu: f64, eps: f64) -> f64 {
    let x = h.h();
    0.5 * gamma(2.0 * x + 1.0) * (1.0 + (PI * x).sin()) * (eps / (mu * mu)).powf(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    UpperHalf,
    LowerHalf,
    UpperLimit,
    LowerLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaValue {
    pub z: Complex64,
    pub value: Complex64,
    pub branch: Branch,
}

/// `Λ` in the variable `w = z/i`, valid for `Re w >= 0`, `w != 0`.
fn lambda_w(m: &FilterModel, w: Complex64) -> Complex64 {
    let (a1, a2) = (1.0 - 2.0 * m.h1.h(), 1.0 - 2.0 * m.h2.h());
    let b2 = m.beta * m.beta;
    m.mu * m.mu * m.h1.kappa() * w.powf(a1) / (w * w + b2) + m.eps * m.h2.kappa() * w.powf(a2)
}

/// `Λ(z; H1, H2)` off the real axis; the lower half-plane by conjugation.
pub fn lambda_ext(m: &FilterModel, z: Complex64) -> Result<LambdaValue> {
    if z.im == 0.0 {
        return Err(Error::Domain(
            "Λ is cut along the real axis; request a boundary limit instead".into(),
        ));
    }
    let i = Complex64::i();
    if z.im > 0.0 {
        Ok(LambdaValue { z, value: lambda_w(m, z / i), branch: Branch::UpperHalf })
    } else {
        let up = lambda_w(m, z.conj() / i);
        Ok(LambdaValue { z, value: up.conj(), branch: Branch::LowerHalf })
    }
}

/// Boundary value `Λ^±(t)` on the real axis.
pub fn lambda_limit(m: &FilterModel, t: f64, upper: bool) -> Result<LambdaValue> {
    if t == 0.0 {
        return Err(Error::Singularity("Λ has a branch point at 0".into()));
    }
    if (t.abs() - m.beta.abs()).abs() <= 1e-14 * t.abs().max(1.0) {
        return Err(Error::Singularity(format!("Λ has a pole at t = {t}")));
    }
    // z = t + i0 gives w = -it on the boundary of the right half-plane.
    let w = Complex64::new(0.0, -t);
    let up = lambda_w(m, w);
    let z = Complex64::new(t, 0.0);
    Ok(if upper {
        LambdaValue { z, value: up, branch: Branch::UpperLimit }
    } else {
        LambdaValue { z, value: up.conj(), branch: Branch::LowerLimit }
    })
}

/// `G(w) = μ²κ(H1) w^{2(H2-H1)} + εκ(H2)(w² + β²)`, which has the zeros of
/// `Λ` but neither its poles nor (for `w` in the right half-plane) other zeros.
fn g_w(m: &FilterModel, w: Complex64) -> Complex64 {
    let c = 2.0 * (m.h2.h() - m.h1.h());
    m.mu * m.mu * m.h1.kappa() * w.powf(c) + m.eps * m.h2.kappa() * (w * w + m.beta * m.beta)
}

fn g_w_prime(m: &FilterModel, w: Complex64) -> Complex64 {
    let c = 2.0 * (m.h2.h() - m.h1.h());
    m.mu * m.mu * m.h1.kappa() * c * w.powf(c - 1.0) + 2.0 * m.eps * m.h2.kappa() * w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FirstQuadrantZero {
    /// `H1 > H2`: the unique zero in the open first quadrant.
    Interior { z0: Complex64, residual: f64, winding: i64 },
    /// `H1 < H2`: no zero, confirmed by a zero winding number.
    Absent { winding: i64 },
    /// `H1 = H2`: the zeros collapse onto the real point `t₀`.
    Boundary { t0: f64 },
}

/// Winding number of `G` around the sector `-π/2 < arg w < 0`,
/// `r_min < |w| < r_max` (the first quadrant in `z = i w`).
fn sector_winding(m: &FilterModel, r_min: f64, r_max: f64) -> Result<i64> {
    let mut path: Vec<Complex64> = Vec::new();
    let ray = |arg: f64, r: f64| Complex64::from_polar(r, arg);
    let k = 400;
    let (lr0, lr1) = (r_min.ln(), r_max.ln());
    // Out along arg 0, around the big arc, back along arg -π/2, small arc.
    for j in 0..k {
        path.push(ray(0.0, (lr0 + (lr1 - lr0) * j as f64 / k as f64).exp()));
    }
    for j in 0..k {
        path.push(ray(-0.5 * PI * j as f64 / k as f64, r_max));
    }
    for j in 0..k {
        path.push(ray(-0.5 * PI, (lr1 + (lr0 - lr1) * j as f64 / k as f64).exp()));
    }
    for j in 0..k {
        path.push(ray(-0.5 * PI + 0.5 * PI * j as f64 / k as f64, r_min));
    }
    path.push(path[0]);

    let mut total = 0.0;
    for seg in path.windows(2) {
        total += phase_change(m, seg[0], seg[1], 0)?;
    }
    // The path above runs clockwise.
    let w = -total / (2.0 * PI);
    let rounded = w.round();
    if (w - rounded).abs() > 1e-6 {
        return Err(Error::Numerical(format!("winding number {w} is not an integer")));
    }
    Ok(rounded as i64)
}

/// Change of `arg G` from `a` to `b`, bisecting until each step is below π/4.
fn phase_change(m: &FilterModel, a: Complex64, b: Complex64, depth: usize) -> Result<f64> {
    let (ga, gb) = (g_w(m, a), g_w(m, b));
    let d = (gb / ga).arg();
    if d.abs() < 0.25 * PI {
        return Ok(d);
    }
    if depth > 40 {
        return Err(Error::Numerical("argument principle contour passes through a zero".into()));
    }
    let mid = 0.5 * (a + b);
    // Keep the midpoint on the circle for arcs.
    let mid = if (a.norm() - b.norm()).abs() < 1e-12 * a.norm() {
        Complex64::from_polar(a.norm(), mid.arg())
    } else {
        mid
    };
    Ok(phase_change(m, a, mid, depth + 1)? + phase_change(m, mid, b, depth + 1)?)
}

fn newton_g(m: &FilterModel, mut w: Complex64) -> Option<Complex64> {
    for _ in 0..100 {
        let step = g_w(m, w) / g_w_prime(m, w);
        let mut next = w - step;
        // Stay inside the right half-plane where G is holomorphic.
        if next.re <= 0.0 {
            next = Complex64::new(0.5 * w.re, next.im);
        }
        w = next;
        if step.norm() <= 1e-15 * w.norm() {
            return Some(w);
        }
    }
    (g_w(m, w).norm() < 1e-12).then_some(w)
}

/// Zero of `Λ(·; H1, H2)` in the open first quadrant.
pub fn find_zero_first_quadrant(m: &FilterModel) -> Result<FirstQuadrantZero> {
    if m.h1 == m.h2 {
        return Ok(FirstQuadrantZero::Boundary { t0: m.t0() });
    }
    let scale = m.t0().max(1.0);
    let mut r_max = 10.0 * scale;
    let r_min = 1e-8 * scale.min(1.0).min(m.t0());
    let mut winding = None;
    for _ in 0..4 {
        match sector_winding(m, r_min, r_max) {
            Ok(k @ (0 | 1)) => {
                winding = Some(k);
                break;
            }
            _ => r_max *= 2.0,
        }
    }
    let winding = winding.ok_or_else(|| {
        Error::Numerical("winding count in the first quadrant is not 0 or 1".into())
    })?;
    if winding == 0 {
        return Ok(FirstQuadrantZero::Absent { winding });
    }
    // Seed Newton from the smallest |G| on a polar grid of the sector.
    let mut best = (f64::INFINITY, Complex64::new(scale, 0.0));
    for i in 1..60 {
        let r = (r_min.max(1e-4 * scale).ln()
            + (r_max.ln() - r_min.max(1e-4 * scale).ln()) * i as f64 / 60.0)
            .exp();
        for j in 1..30 {
            let w = Complex64::from_polar(r, -0.5 * PI * j as f64 / 30.0);
            let v = g_w(m, w).norm() / (1.0 + w.norm_sqr());
            if v < best.0 {
                best = (v, w);
            }
        }
    }
    let w0 = newton_g(m, best.1)
        .filter(|w| w.re > 0.0 && w.im < 0.0)
        .ok_or(Error::Convergence { what: "Newton iteration for the zero of Λ", iterations: 100 })?;
    let z0 = Complex64::i() * w0;
    let residual = lambda_ext(m, z0)?.value.norm();
    Ok(FirstQuadrantZero::Interior { z0, residual, winding })
}

/// `θ(t)`, the continuous branch of `arg Λ⁺(t; H, 1/2)` on `(0, ∞)` that
/// vanishes at infinity.
///
/// Writing `Λ⁺ = N/(β² - t²)` with `N = μ²κ(H)(-it)^{1-2H} + ε(β² - t²)`,
/// `Im N` keeps one sign on `(0, ∞)`, so `arg(-N)` is continuous and equals
/// `arg Λ⁺` modulo the jump of `π` at the pole `t = |β|`. At `H = 1/2` the
/// value is the limit from `H > 1/2`.
pub fn theta(m: &FilterModel, t: f64) -> f64 {
    let h = m.h1.h();
    let n = m.mu * m.mu * m.h1.kappa() * Complex64::new(0.0, -t).powf(1.0 - 2.0 * h)
        + m.eps * (m.beta * m.beta - t * t);
    let neg = -n;
    if h == 0.5 {
        return if neg.re < 0.0 { -PI } else { 0.0 };
    }
    neg.arg()
}

/// `θ(t)` checked for continuity on a dyadically refined grid over `(0, t]`.
pub fn theta_arg(m: &FilterModel, t: f64) -> Result<f64> {
    m.require_white_observation()?;
    ensure_positive("t", t)?;
    if m.h1.h() == 0.5 {
        return Ok(theta(m, t));
    }
    let lo = 1e-6 * t.min(1.0);
    let mut grid: Vec<f64> = (0..=64).map(|k| lo * (t / lo).powf(k as f64 / 64.0)).collect();
    for _ in 0..12 {
        let vals: Vec<f64> = grid.iter().map(|&s| theta(m, s)).collect();
        let worst = vals.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        if worst < 0.5 * PI {
            return Ok(*vals.last().unwrap());
        }
        let mut finer = Vec::with_capacity(2 * grid.len());
        for w in grid.windows(2) {
            finer.push(w[0]);
            finer.push((w[0] * w[1]).sqrt());
        }
        finer.push(*grid.last().unwrap());
        grid = finer;
    }
    Err(Error::Ambiguous("phase jumps persist after refinement".into()))
}

/// Value of the `θ` integral with the part beyond the last breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyState {
    pub value: f64,
    pub theta_integral: f64,
    pub tail: f64,
    pub zero_term: f64,
}

/// `(ε/μ²)((1/π)∫_0^∞ θ + β + 2 Re z₀ [H > 1/2])`.
pub fn steady_state_white(h: HurstParam, m: &FilterModel) -> Result<SteadyState> {
    m.require_white_observation()?;
    if m.h1 != h {
        return Err(Error::Precondition("model state Hurst exponent differs from h".into()));
    }
    let opts = QuadOptions { abs_tol: 1e-13, rel_tol: 1e-11, max_intervals: 4000 };
    let t0 = m.t0();
    let mut breaks = vec![0.0];
    if m.beta != 0.0 {
        breaks.push(m.beta.abs().min(t0));
    }
    breaks.push(t0);
    breaks.push(10.0 * t0);
    breaks.dedup();
    let mut integral = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            integral += integrate(|s| theta(m, s), w[0], w[1], opts)?.value;
        }
    }
    let last = *breaks.last().unwrap();
    let tail = integrate_to_infinity(|s| theta(m, s), last, opts)?.value;
    integral += tail;
    let zero_term = if h.h() >= 0.5 {
        match find_zero_first_quadrant(&FilterModel { h2: HurstParam::new(0.5)?, ..*m })? {
            FirstQuadrantZero::Interior { z0, .. } => 2.0 * z0.re,
            FirstQuadrantZero::Boundary { t0 } => 2.0 * t0,
            FirstQuadrantZero::Absent { .. } => {
                return Err(Error::Numerical("expected a first-quadrant zero for H > 1/2".into()))
            }
        }
    } else {
        0.0
    };
    let value = (integral / PI + m.beta + zero_term) / m.snr();
    Ok(SteadyState { value, theta_integral: integral, tail, zero_term })
}

/// `(ε/μ²)(1/2π)∫ log(1 + (μ²/ε)κ(H)|λ|^{1-2H}/(β² + λ²)) dλ` for any `β`.
///
/// Beyond `L` the integrand is replaced by its algebraic leading term
/// `(μ²/ε)κ(H) λ^{-1-2H}`, integrated in closed form.
pub fn spectral_error_integral(h: HurstParam, m: &FilterModel) -> Result<f64> {
    let q = m.snr() * h.kappa();
    let x = h.h();
    let b2 = m.beta * m.beta;
    let f = |l: f64| (q * l.powf(1.0 - 2.0 * x) / (b2 + l * l)).ln_1p();
    let opts = QuadOptions { abs_tol: 1e-13, rel_tol: 1e-11, max_intervals: 4000 };
    let t0 = m.t0();
    let big = 1e4 * t0.max(1.0) * q.max(1.0).powf(1.0 / (1.0 + 2.0 * x));
    let mut total = 0.0;
    let pts = [0.0, t0.min(1.0), t0, 10.0 * t0, big];
    for w in pts.windows(2) {
        if w[1] > w[0] {
            total += integrate(f, w[0], w[1], opts)?.value;
        }
    }
    let lead = q * big.powf(-2.0 * x) / (2.0 * x);
    // Next term of log(1+u) and of 1/(β²+λ²) bound the extrapolation error.
    let err = lead * (q * big.powf(-1.0 - 2.0 * x) + b2 / (big * big));
    if !(err < 1e-6 * total.abs().max(1e-300)) {
        return Err(Error::Convergence { what: "spectral integral tail", iterations: 0 });
    }
    total += lead;
    Ok(total / PI / m.snr())
}

/// Stationary-case error from the spectral theory of estimation, `β < 0`.
pub fn stationary_spectral_error(h: HurstParam, m: &FilterModel) -> Result<f64> {
    m.require_white_observation()?;
    if m.beta >= 0.0 {
        return Err(Error::Precondition("the stationary formula needs beta < 0".into()));
    }
    spectral_error_integral(h, m)
}

/// `ν = H1/(1 + H1 - H2)`.
pub fn small_noise_exponent(h1: HurstParam, h2: HurstParam) -> f64 {
    h1.h() / (1.0 + h1.h() - h2.h())
}

/// `κ(H)^{1/(2H+1)}/sin(π/(2H+1)) · (ε/μ²)^{2H/(2H+1)}`.
pub fn small_noise_error_white(h: HurstParam, mu: f64, eps: f64) -> Result<f64> {
    if !(mu.is_finite() && mu != 0.0) {
        return Err(Error::InvalidParameter { name: "mu", value: mu, reason: "must be nonzero and finite" });
    }
    ensure_positive("eps", eps)?;
    let q = 2.0 * h.h() + 1.0;
    Ok(h.kappa().powf(1.0 / q) / (PI / q).sin() * (eps / (mu * mu)).powf(2.0 * h.h() / q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterRow {
    pub h1: f64,
    pub h2: f64,
    pub beta: f64,
    pub mu: f64,
    pub eps: f64,
    pub p_formula: f64,
    pub p_crosscheck: f64,
    pub rel_diff: f64,
}

impl FilterRow {
    pub fn new(m: &FilterModel, p_formula: f64, p_crosscheck: f64) -> Self {
        Self {
            h1: m.h1.h(),
            h2: m.h2.h(),
            beta: m.beta,
            mu: m.mu,
            eps: m.eps,
            p_formula,
            p_crosscheck,
            rel_diff: p_formula / p_crosscheck - 1.0,
        }
    }
}

pub fn write_filter_csv(rows: &[FilterRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "H1,H2,beta,mu,eps,P_formula,P_crosscheck,rel_diff")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{:.12e},{:.12e},{:.6e}",
            r.h1, r.h2, r.beta, r.mu, r.eps, r.p_formula, r.p_crosscheck, r.rel_diff
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
    fn classical_formulas() {
        let m = FilterModel::classical(-1.0, 1.0, 1.0).unwrap();
        assert!((steady_state_bm(&m).unwrap() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert_eq!(riccati_error(&m, 0.0).unwrap(), 0.0);
        assert!((riccati_error(&m, 50.0).unwrap() - (2f64.sqrt() - 1.0)).abs() < 1e-9);
        let m0 = FilterModel::classical(0.0, 1.0, 0.04).unwrap();
        assert!((steady_state_bm(&m0).unwrap() - 0.2).abs() < 1e-15);
        assert!(FilterModel::classical(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn equal_hurst_formula_reduces_to_classical() {
        let m = FilterModel::classical(0.7, -1.3, 0.2).unwrap();
        let a = klb_steady_state(h(0.5), &m).unwrap();
        let b = steady_state_bm(&m).unwrap();
        assert!((a / b - 1.0).abs() < 1e-12);
        let m = FilterModel::new(0.0, 1.0, 0.3, h(0.7), h(0.7)).unwrap();
        let a = klb_steady_state(h(0.7), &m).unwrap();
        assert!((a / klb_small_noise(h(0.7), 1.0, 0.3) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn lambda_on_imaginary_axis_is_spectral_density() {
        let m = FilterModel::new(-0.8, 1.2, 0.3, h(0.7), h(0.6)).unwrap();
        for &l in &[0.3, 1.0, 4.0] {
            let v = lambda_ext(&m, Complex64::new(0.0, l)).unwrap().value;
            let f = m.mu * m.mu * m.h1.kappa() * l.powf(1.0 - 1.4) / (l * l + 0.64)
                + m.eps * m.h2.kappa() * l.powf(1.0 - 1.2);
            assert!(v.im.abs() < 1e-12 * f && (v.re - f).abs() < 1e-12 * f);
        }
        let z = Complex64::new(0.4, 1.3);
        let up = lambda_ext(&m, z).unwrap().value;
        let down = lambda_ext(&m, z.conj()).unwrap().value;
        assert!((up.conj() - down).norm() < 1e-14);
        assert!(lambda_ext(&m, Complex64::new(1.0, 0.0)).is_err());
        assert!(lambda_limit(&m, 0.8, true).is_err());
    }

    #[test]
    fn zero_structure() {
        let m = FilterModel::new(0.0, 1.0, 1.0, h(0.8), h(0.5)).unwrap();
        match find_zero_first_quadrant(&m).unwrap() {
            FirstQuadrantZero::Interior { z0, residual, winding } => {
                assert!(z0.re > 0.0 && z0.im > 0.0 && residual < 1e-10 && winding == 1);
                // For β = 0 the zero sits at arg(z0/i) = -π/(2 + 2H1 - 2H2).
                let w = z0 / Complex64::i();
                assert!((w.arg() + PI / 2.6).abs() < 1e-10);
            }
            other => panic!("{other:?}"),
        }
        let m = FilterModel::new(0.0, 1.0, 1.0, h(0.5), h(0.8)).unwrap();
        assert_eq!(find_zero_first_quadrant(&m).unwrap(), FirstQuadrantZero::Absent { winding: 0 });
        let m = FilterModel::new(1.0, 1.0, 1.0, h(0.6), h(0.6)).unwrap();
        assert_eq!(
            find_zero_first_quadrant(&m).unwrap(),
            FirstQuadrantZero::Boundary { t0: 2f64.sqrt() }
        );
    }

    #[test]
    fn theta_limits() {
        let m = FilterModel::white_observation(h(0.7), -1.0, 1.0, 0.5).unwrap();
        assert!(theta_arg(&m, 1e6).unwrap().abs() < 1e-6);
        assert!(theta_arg(&m, 3.0).is_ok());
        let c = FilterModel::classical(-1.0, 1.0, 1.0).unwrap();
        assert_eq!(theta_arg(&c, 1.0).unwrap(), -PI);
        assert_eq!(theta_arg(&c, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn arg_integral_matches_spectral_formula_when_stationary() {
        for &x in &[0.55, 0.7, 0.3] {
            let m = FilterModel::white_observation(h(x), -1.0, 1.0, 0.5).unwrap();
            let a = steady_state_white(h(x), &m).unwrap().value;
            let b = stationary_spectral_error(h(x), &m).unwrap();
            assert!((a / b - 1.0).abs() < 1e-8, "H={x}: {a} vs {b}");
        }
        let c = FilterModel::classical(-1.0, 1.0, 1.0).unwrap();
        let a = steady_state_white(h(0.5), &c).unwrap().value;
        assert!((a - (2f64.sqrt() - 1.0)).abs() < 1e-9);
        let b = stationary_spectral_error(h(0.5), &c).unwrap();
        assert!((b - (2f64.sqrt() - 1.0)).abs() < 1e-8);
    }

    #[test]
    fn exponents() {
        assert_eq!(small_noise_exponent(h(0.7), h(0.7)), 0.7);
        assert!((small_noise_exponent(h(0.7), h(0.5)) - 1.4 / 2.4).abs() < 1e-15);
        assert_eq!(small_noise_exponent(h(0.5), h(0.5)), 0.5);
        assert!((small_noise_error_white(h(0.5), 2.0, 0.3).unwrap() - (0.3f64 / 4.0).sqrt()).abs() < 1e-15);
    }
}
