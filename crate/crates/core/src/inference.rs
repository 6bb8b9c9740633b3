//! Fisher information rates, Ornstein-Uhlenbeck drift estimation and the
//! mixed fBm information matrix.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use crate::error::{ensure_positive, Error, Result};
use crate::kernels::HurstParam;
use crate::numerics::quad::{integrate, integrate_to_infinity, QuadOptions};

const QUAD: QuadOptions = QuadOptions { abs_tol: 1e-14, rel_tol: 1e-11, max_intervals: 4000 };

/// `(1/4π)∫ (∂_θ log f_θ(λ))² dλ` with the derivative by central difference.
pub fn whittle_rate(density: impl Fn(f64, f64) -> f64 + Sync, theta: f64, step: f64) -> Result<f64> {
    ensure_positive("step", step)?;
    let score = |lam: f64| {
        let up = density(theta + step, lam);
        let down = density(theta - step, lam);
        if !(up > 0.0 && down > 0.0) {
            return f64::NAN;
        }
        let d = (up.ln() - down.ln()) / (2.0 * step);
        d * d
    };
    let mut total = 0.0;
    for sign in [1.0, -1.0] {
        let g = |l: f64| score(sign * l);
        let body = integrate(g, 0.0, 1.0, QUAD)?.value;
        let tail = integrate_to_infinity(g, 1.0, QUAD)
            .map_err(|_| Error::Convergence { what: "Whittle integral tail", iterations: QUAD.max_intervals })?
            .value;
        total += body + tail;
    }
    Ok(total / (4.0 * PI))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OuScheme {
    EulerMaruyama,
    /// Exact Gaussian transition, for isolating the discretization bias.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuPath {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl OuPath {
    pub fn horizon(&self) -> f64 {
        self.dt * (self.values.len() - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuSimulation {
    pub theta0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub scheme: OuScheme,
    /// Scale of the driving noise; 0 gives the trivial path.
    pub noise: f64,
}

impl OuSimulation {
    pub fn new(theta0: f64, horizon: f64, dt: f64) -> Result<Self> {
        ensure_positive("theta0", theta0)?;
        ensure_positive("T", horizon)?;
        ensure_positive("dt", dt)?;
        if dt > 0.01 / theta0 * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!("dt = {dt} exceeds 0.01/theta0")));
        }
        Ok(Self { theta0, horizon, dt, scheme: OuScheme::EulerMaruyama, noise: 1.0 })
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn with_scheme(mut self, scheme: OuScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn run(&self, seed: u64) -> OuPath {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.run_with(&mut rng)
    }

    fn run_with(&self, rng: &mut ChaCha8Rng) -> OuPath {
        let n = self.steps();
        let (th, dt) = (self.theta0, self.dt);
        let (decay, sd) = match self.scheme {
            OuScheme::EulerMaruyama => (1.0 - th * dt, dt.sqrt()),
            OuScheme::Exact => ((-th * dt).exp(), ((1.0 - (-2.0 * th * dt).exp()) / (2.0 * th)).sqrt()),
        };
        let sd = sd * self.noise;
        let mut values = Vec::with_capacity(n + 1);
        let mut x = 0.0;
        values.push(x);
        for _ in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            x = decay * x + sd * z;
            values.push(x);
        }
        OuPath { dt, values }
    }
}

/// Euler-Maruyama path of `dX = -θ₀X dt + dW`, `X₀ = 0`.
pub fn simulate_ou(theta0: f64, horizon: f64, dt: f64, seed: u64) -> Result<OuPath> {
    Ok(OuSimulation::new(theta0, horizon, dt)?.run(seed))
}

/// `θ̂ = -Σ X_k ΔX_k / (Σ X_k² Δt)`.
pub fn ou_mle(path: &OuPath) -> Result<f64> {
    let x = &path.values;
    if x.len() < 100 {
        return Err(Error::Precondition(format!("path has {} points, need at least 100", x.len())));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for w in x.windows(2) {
        num += w[0] * (w[1] - w[0]);
        den += w[0] * w[0];
    }
    den *= path.dt;
    if den <= 0.0 || !den.is_finite() {
        return Err(Error::Numerical("degenerate path: zero quadratic sum".into()));
    }
    Ok(-num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Replicate {
    pub index: u64,
    pub theta_hat: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub theta0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    pub reps: usize,
    pub mean: f64,
    pub std: f64,
    pub abs_skew: f64,
    pub abs_excess_kurtosis: f64,
    pub mean_theta_hat: f64,
    pub pass_mean: Option<bool>,
    pub pass_std: Option<bool>,
    #[serde(skip)]
    pub replicates: Vec<Replicate>,
}

impl McReport {
    pub fn passes(&self) -> Option<bool> {
        Some(self.pass_mean? && self.pass_std?)
    }

    pub fn write_replicates_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "seed,theta_hat,z")?;
        for r in &self.replicates {
            writeln!(out, "{},{:.12e},{:.12e}", r.index, r.theta_hat, r.z)?;
        }
        Ok(())
    }
}

/// Monte Carlo of `z = √T(θ̂ - θ₀)/√(2θ₀)` over independent replicates.
///
/// Replicate `i` draws from the ChaCha stream `i` of the master seed.
pub fn mc_asymptotic_normality(
    theta0: f64,
    horizon: f64,
    dt: f64,
    reps: usize,
    seed: u64,
) -> Result<McReport> {
    mc_with(OuSimulation::new(theta0, horizon, dt)?, reps, seed)
}

pub fn mc_with(sim: OuSimulation, reps: usize, seed: u64) -> Result<McReport> {
    if reps == 0 {
        return Err(Error::InvalidParameter { name: "reps", value: 0.0, reason: "must be positive" });
    }
    let scale = (sim.horizon / (2.0 * sim.theta0)).sqrt();
    let replicates = (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let theta_hat = ou_mle(&sim.run_with(&mut rng))?;
            Ok(Replicate { index: i, theta_hat, z: scale * (theta_hat - sim.theta0) })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = reps as f64;
    let mean = replicates.iter().map(|r| r.z).sum::<f64>() / n;
    let mean_theta_hat = replicates.iter().map(|r| r.theta_hat).sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for r in &replicates {
        let d = r.z - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    let (std, abs_skew, abs_excess_kurtosis, pass_mean, pass_std) = if reps > 1 {
        let var = m2 / (n - 1.0);
        let pop = m2 / n;
        let std = var.sqrt();
        (
            std,
            (m3 / n / pop.powf(1.5)).abs(),
            (m4 / n / (pop * pop) - 3.0).abs(),
            Some(mean.abs() < 0.1),
            Some((std - 1.0).abs() < 0.15),
        )
    } else {
        (0.0, 0.0, 0.0, None, None)
    };
    Ok(McReport {
        theta0: sim.theta0,
        horizon: sim.horizon,
        dt: sim.dt,
        seed,
        reps,
        mean,
        std,
        abs_skew,
        abs_excess_kurtosis,
        mean_theta_hat,
        pass_mean,
        pass_std,
        replicates,
    })
}

/// `(H, σ)` for the mixed fBm `εW + σB^H` with `H ∈ (3/4, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixedTheta {
    pub h: HurstParam,
    pub sigma: f64,
}

impl MixedTheta {
    pub fn new(h: f64, sigma: f64) -> Result<Self> {
        let h = HurstParam::new(h)?;
        if !h.is_semimartingale_mix() {
            return Err(Error::InvalidParameter {
                name: "h",
                value: h.h(),
                reason: "mixed model needs H > 3/4",
            });
        }
        ensure_positive("sigma", sigma)?;
        Ok(Self { h, sigma })
    }
}

/// `∂_H log κ(H) = 2ψ(2H+1) + π cot(πH)`.
pub fn dlog_kappa(h: HurstParam) -> f64 {
    let x = h.h();
    2.0 * digamma(2.0 * x + 1.0) + PI / (PI * x).tan()
}

/// Gradient in `(H, σ)` of `log(ε + σ²κ(H)λ^{1-2H})` at `λ > 0`.
pub fn log_density_gradient(theta: MixedTheta, eps: f64, lam: f64) -> [f64; 2] {
    let h = theta.h;
    let k = theta.sigma * theta.sigma * h.kappa() * lam.powf(1.0 - 2.0 * h.h());
    let share = k / (eps + k);
    [share * (dlog_kappa(h) - 2.0 * lam.ln()), share * 2.0 / theta.sigma]
}

/// `(1/4π)∫ ∇log(ε + K̂_θ)∇ᵀlog(ε + K̂_θ) dλ`, with `K̂_θ = σ²κ(H)|λ|^{1-2H}`.
///
/// The even integrand is integrated over `λ = e^u` on each side of `λ = 1`.
pub fn mixed_fisher_matrix(theta: MixedTheta, eps: f64) -> Result<[[f64; 2]; 2]> {
    ensure_positive("eps", eps)?;
    let entry = |i: usize, j: usize| -> Result<f64> {
        let f = |u: f64| {
            let lam = u.exp();
            if lam == 0.0 || !lam.is_finite() {
                return 0.0;
            }
            let g = log_density_gradient(theta, eps, lam);
            g[i] * g[j] * lam
        };
        let quad = |r: Result<_>| {
            r.map_err(|_| Error::Convergence { what: "Fisher matrix quadrature", iterations: QUAD.max_intervals })
        };
        let right = quad(integrate_to_infinity(f, 0.0, QUAD))?.value;
        let left = quad(integrate_to_infinity(|v| f(-v), 0.0, QUAD))?.value;
        Ok(2.0 * (left + right) / (4.0 * PI))
    };
    let a = entry(0, 0)?;
    let b = entry(0, 1)?;
    let c = entry(1, 1)?;
    Ok([[a, b], [b, c]])
}

/// `ε^{-1/(4H-2)} [[1, -2σ² log ε^{-1/(2H-1)}], [0, 1]]`.
pub fn rate_matrix(eps: f64, theta: MixedTheta) -> Result<[[f64; 2]; 2]> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps = {eps} must lie in (0, 1)")));
    }
    let h = theta.h.h();
    let s = eps.powf(-1.0 / (4.0 * h - 2.0));
    let off = -2.0 * theta.sigma * theta.sigma * (-eps.ln() / (2.0 * h - 1.0));
    Ok([[s, s * off], [0.0, s]])
}

/// `(ε^{1/(4H-2)}, ε^{1/(4H-2)}/log ε^{-1})` for `H ∈ (3/4, 1]`.
pub fn minimax_rates(eps: f64, h: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps = {eps} must lie in (0, 1)")));
    }
    if !(h > 0.75 && h <= 1.0) {
        return Err(Error::InvalidParameter { name: "h", value: h, reason: "must lie in (3/4, 1]" });
    }
    let r = eps.powf(1.0 / (4.0 * h - 2.0));
    Ok((r, r / (-eps.ln())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::ou_spectral_density;

    #[test]
    fn whittle_ou() {
        for &t in &[0.5, 1.0, 2.0, 5.0] {
            let r = whittle_rate(|th, l| ou_spectral_density(th, l).unwrap_or(f64::NAN), t, 1e-4 * t).unwrap();
            assert!((r * 2.0 * t - 1.0).abs() < 1e-6, "theta={t}: {r}");
        }
    }

    #[test]
    fn ou_paths() {
        let a = simulate_ou(1.0, 10.0, 0.01, 7).unwrap();
        let b = simulate_ou(1.0, 10.0, 0.01, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values.len(), 1001);
        let z = OuSimulation::new(1.0, 10.0, 0.01).unwrap().with_noise(0.0).run(7);
        assert!(z.values.iter().all(|&v| v == 0.0));
        assert!(ou_mle(&z).is_err());
        assert!(simulate_ou(2.0, 10.0, 0.01, 1).is_err());

        // Stationary variance 1/(2θ).
        let th = 50.0;
        let p = simulate_ou(th, 200.0, 1e-4, 3).unwrap();
        let tail = &p.values[p.values.len() / 10..];
        let var = tail.iter().map(|x| x * x).sum::<f64>() / tail.len() as f64;
        assert!((var * 2.0 * th - 1.0).abs() < 0.1, "{var}");
    }

    #[test]
    fn mle_scale_invariance_and_sanity() {
        let p = simulate_ou(1.0, 500.0, 0.01, 11).unwrap();
        let t = ou_mle(&p).unwrap();
        assert!(t > 0.8 && t < 1.2, "{t}");
        let q = OuPath { dt: p.dt, values: p.values.iter().map(|x| 3.5 * x).collect() };
        assert!((ou_mle(&q).unwrap() / t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_replicate_suppresses_flags() {
        let r = mc_asymptotic_normality(1.0, 10.0, 0.01, 1, 5).unwrap();
        assert_eq!(r.reps, 1);
        assert_eq!(r.passes(), None);
    }

    #[test]
    fn fisher_matrix_structure() {
        let th = MixedTheta::new(0.8, 1.0).unwrap();
        let m = mixed_fisher_matrix(th, 1.0).unwrap();
        assert_eq!(m[0][1], m[1][0]);
        assert!(m[0][0] > 0.0 && m[0][0] * m[1][1] - m[0][1] * m[0][1] > 0.0);
        // Analytic against finite-difference gradient.
        let logf = |h: f64, s: f64, l: f64| {
            let hp = HurstParam::new(h).unwrap();
            (1.0 + s * s * hp.kappa() * l.powf(1.0 - 2.0 * h)).ln()
        };
        for &l in &[0.01, 0.7, 3.0, 200.0] {
            let g = log_density_gradient(th, 1.0, l);
            let d = 1e-6;
            let gh = (logf(0.8 + d, 1.0, l) - logf(0.8 - d, 1.0, l)) / (2.0 * d);
            let gs = (logf(0.8, 1.0 + d, l) - logf(0.8, 1.0 - d, l)) / (2.0 * d);
            assert!((g[0] / gh - 1.0).abs() < 1e-6 && (g[1] / gs - 1.0).abs() < 1e-6);
        }
        assert!(MixedTheta::new(0.7, 1.0).is_err());
    }

    #[test]
    fn fisher_sigma_substitution() {
        // λ ↦ cλ with c^{2H-1} = σ² maps (σ, ε) to (1, ε), so σ² I_σσ is invariant.
        let a = mixed_fisher_matrix(MixedTheta::new(0.85, 1.0).unwrap(), 0.5).unwrap();
        let b = mixed_fisher_matrix(MixedTheta::new(0.85, 2.0).unwrap(), 0.5).unwrap();
        let c = 2f64.powf(2.0 / 0.7);
        assert!((4.0 * b[1][1] / c / a[1][1] - 1.0).abs() < 1e-7, "{a:?} {b:?}");
    }

    #[test]
    fn rates() {
        let th = MixedTheta::new(0.8, 1.5).unwrap();
        let m = rate_matrix(1.0 - 1e-15, th).unwrap();
        assert!((m[0][0] - 1.0).abs() < 1e-12 && m[0][1].abs() < 1e-12);
        let e: f64 = 0.01;
        let m = rate_matrix(e, th).unwrap();
        let s = e.powf(-1.0 / 1.2);
        assert!((m[0][0] * m[1][1] / e.powf(-2.0 / 1.2) - 1.0).abs() < 1e-12);
        let off = -2.0 * 2.25 * (1.0 / 0.6) * (1.0 / e).ln() * s;
        assert!((m[0][1] / off - 1.0).abs() < 1e-12);
        let (rh, rs) = minimax_rates(1e-4, 1.0).unwrap();
        assert!((rh - 1e-2).abs() < 1e-15 && (rs - 1e-2 / 1e4f64.ln()).abs() < 1e-15);
    }
}
