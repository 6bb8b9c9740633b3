use std::f64::consts::PI;
use std::fmt::Write as _;

use fracspec_core::filtering::{self, FilterModel, FirstQuadrantZero};
use fracspec_core::hilbert_system::{self, HilbertSystemSpec};
use fracspec_core::inference::{self, MixedTheta};
use fracspec_core::kernels::ou_spectral_density;
use fracspec_core::kl_sampler::KlBasis;
use fracspec_core::secondkind::{self, loglog_slope};
use fracspec_core::smallball::{self, TruncatedSpectrum};
use fracspec_core::spectra::{self, SpectrumRow};
use fracspec_core::{quad_oracle, HurstParam, KernelSpec};
use serde_json::{json, Value};

use crate::cache;
use crate::config::*;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration; exit status 2.
    Config(String),
    /// A numerical routine failed; exit status 3.
    Numerical(fracspec_core::Error),
    Io(std::io::Error),
}

impl From<fracspec_core::Error> for CliError {
    fn from(e: fracspec_core::Error) -> Self {
        match e {
            fracspec_core::Error::InvalidParameter { .. } => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CliError::Config(m) => json!({ "error": "config", "message": m }),
            CliError::Numerical(e) => {
                let dbg = format!("{e:?}");
                let kind = dbg.split(['(', ' ', '{']).next().unwrap_or("").to_string();
                json!({ "error": "numerical", "kind": kind, "message": e.to_string() })
            }
            CliError::Io(e) => json!({ "error": "io", "message": e.to_string() }),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// A table plus a structured summary. Numeric fields of two runs agree within
/// `tolerance` (relative, with the same absolute floor).
pub struct Artifact {
    pub csv: String,
    pub summary: Value,
    pub tolerance: f64,
}

fn hurst(h: f64) -> CliResult<HurstParam> {
    Ok(HurstParam::new(h)?)
}

fn to_csv(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> CliResult<String> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(String::from_utf8(buf).expect("writers emit UTF-8"))
}

pub fn run(config: &RunConfig) -> CliResult<Artifact> {
    if config.command.is_stochastic() && config.seed.is_none() {
        return Err(CliError::Config("this subcommand needs an explicit --seed".into()));
    }
    match &config.command {
        Command::Eigen(p) => eigen(p),
        Command::Sample(p) => sample(p, config.seed.unwrap_or_default()),
        Command::Smallball(p) => smallball(p),
        Command::Secondkind(p) => second_kind(p),
        Command::Filter(p) => filter(p),
        Command::Fisher(p) => fisher(p, config.seed.unwrap_or_default()),
        Command::Hilbert(p) => hilbert(p),
    }
}

fn eigen(p: &EigenParams) -> CliResult<Artifact> {
    let mut rows: Vec<SpectrumRow> = Vec::new();
    let mut calibrations = Vec::new();
    for &hv in &p.hurst {
        let h = hurst(hv)?;
        let kernel = match p.kernel {
            EigenKernel::Fbm => KernelSpec::fbm(h),
            EigenKernel::Brownian => KernelSpec::brownian(),
        };
        let fine = cache::galerkin(&kernel, p.grid)?;
        let coarse = cache::galerkin(&kernel, p.grid / 2)?;
        let pairs = quad_oracle::oracle_from_matrices(&fine, coarse, p.count)?;
        match p.kernel {
            EigenKernel::Fbm => {
                rows.extend(spectra::compare_with_oracle(h, &pairs, !p.raw)?);
                if pairs.len() >= 10 {
                    let c = spectra::calibrate_enumeration(h, &pairs)?;
                    calibrations.push(json!({ "H": hv, "shift": c.shift, "residual": c.residual }));
                }
            }
            EigenKernel::Brownian => {
                for pair in &pairs {
                    let exact = spectra::brownian_eigenpair(pair.index)?;
                    let lo = if p.raw { pair.lam } else { pair.lam_extrapolated.unwrap_or(pair.lam) };
                    rows.push(SpectrumRow {
                        h: 0.5,
                        n: pair.index,
                        nu: exact.nu,
                        lambda_asym: exact.lam,
                        lambda_oracle: lo,
                        rel_err: exact.lam / lo - 1.0,
                    });
                }
            }
        }
    }
    let mut csv = String::new();
    for c in &calibrations {
        writeln!(csv, "# calibration: {c}").unwrap();
    }
    csv += &to_csv(|b| spectra::write_spectrum_csv(&rows, b))?;
    Ok(Artifact { csv, summary: json!({ "rows": rows, "calibration": calibrations }), tolerance: 1e-12 })
}

fn sample(p: &SampleParams, seed: u64) -> CliResult<Artifact> {
    let h = hurst(p.hurst)?;
    if p.points < 2 || p.paths == 0 {
        return Err(CliError::Config("need at least 2 points and 1 path".into()));
    }
    let grid: Vec<f64> = (0..p.points).map(|i| i as f64 / (p.points - 1) as f64).collect();
    let basis = match p.basis {
        Basis::Asymptotic => {
            let pairs = (1..=p.terms).map(|n| spectra::fbm_eigenpair(h, n)).collect::<Result<Vec<_>, _>>()?;
            KlBasis::new(&pairs, p.terms, &grid)?
        }
        Basis::Oracle => {
            let kernel = KernelSpec::fbm(h);
            let fine = cache::galerkin(&kernel, p.grid)?;
            let coarse = cache::galerkin(&kernel, p.grid / 2)?;
            let pairs = quad_oracle::oracle_from_matrices(&fine, coarse, p.terms)?;
            KlBasis::new(&pairs, p.terms, &grid)?
        }
    };
    let paths = basis.sample_many(seed..seed + p.paths as u64);
    let mut csv = String::from("t");
    for k in 0..p.paths {
        write!(csv, ",path_{k}").unwrap();
    }
    csv.push('\n');
    for (i, t) in grid.iter().enumerate() {
        write!(csv, "{t}").unwrap();
        for path in &paths {
            write!(csv, ",{:.15e}", path.values[i]).unwrap();
        }
        csv.push('\n');
    }
    let summary = json!({ "grid": grid, "paths": paths.iter().map(|s| &s.values).collect::<Vec<_>>() });
    Ok(Artifact { csv, summary, tolerance: 1e-12 })
}

fn smallball(p: &SmallballParams) -> CliResult<Artifact> {
    let h = hurst(p.hurst)?;
    let brownian = p.hurst == 0.5;
    let lams = (1..=p.terms)
        .map(|n| if brownian { spectra::brownian_eigenpair(n).map(|e| e.lam) } else { spectra::fbm_eigenvalue(h, n) })
        .collect::<Result<Vec<_>, _>>()?;
    let spec = TruncatedSpectrum::from_trace(lams, smallball::fbm_trace(h));
    let mut probs = Vec::new();
    for &e in &p.eps {
        probs.push((e, smallball::smallball_oracle(&spec, e)?));
    }
    let fit = smallball::smallball_loglaw_check(h, &probs)?;
    let constants = smallball::beta_gamma(h);
    let mut csv = String::from("H,eps,P_oracle,P_cm,ratio,log_law_residual\n");
    let mut cm_rows = Vec::new();
    for (&(e, pr), r) in probs.iter().zip(&fit.residuals) {
        let (cm, ratio) = if brownian {
            let c = smallball::cameron_martin(e)?.value;
            (format!("{c:.12e}"), format!("{:.12e}", pr / c))
        } else {
            (String::new(), String::new())
        };
        writeln!(csv, "{},{},{:.12e},{},{},{:.12e}", p.hurst, e, pr, cm, ratio, r).unwrap();
        cm_rows.push(json!({ "eps": e, "p_oracle": pr, "p_cm": cm, "ratio": ratio }));
    }
    let summary = json!({
        "constants": constants,
        "tail_mean": spec.tail_mean,
        "rows": cm_rows,
        "log_law": fit,
    });
    Ok(Artifact { csv, summary, tolerance: 1e-10 })
}

fn second_kind(p: &SecondKindParams) -> CliResult<Artifact> {
    let h = hurst(p.hurst)?;
    match p.mode {
        SecondKindMode::Boundary => {
            let mut u = Vec::new();
            for &e in &p.eps {
                u.push(secondkind::u_eps_boundary(h, e, p.cells)?);
            }
            let slope = loglog_slope(&p.eps, &u);
            let mut csv = String::from("H,eps,u_eps_1\n");
            for (e, v) in p.eps.iter().zip(&u) {
                writeln!(csv, "{},{},{:.12e}", p.hurst, e, v).unwrap();
            }
            Ok(Artifact { csv, summary: json!({ "eps": p.eps, "u_eps_1": u, "slope": slope }), tolerance: 1e-10 })
        }
        SecondKindMode::Bracket => {
            let curve = secondkind::martingale_bracket(h, p.bracket_eps, &p.t, p.cells_per_unit)?;
            let (ts, ds): (Vec<f64>, Vec<f64>) = curve
                .t
                .iter()
                .zip(&curve.derivative)
                .filter(|(t, _)| **t >= 4.0 && **t <= 32.0)
                .map(|(t, d)| (*t, *d))
                .unzip();
            let slope = (ts.len() >= 2).then(|| loglog_slope(&ts, &ds));
            let variant_gap = curve
                .variant_a
                .iter()
                .zip(&curve.variant_b)
                .filter(|(a, _)| **a > 0.0)
                .map(|(a, b)| (b / a - 1.0).abs())
                .fold(0.0, f64::max);
            let growth = secondkind::growth_conditions_check(&curve).ok();
            let csv = to_csv(|b| secondkind::write_bracket_csv(h, &curve, b))?;
            let summary = json!({
                "derivative_slope_4_32": slope,
                "expected_slope": 1.0 - 2.0 * p.hurst,
                "max_variant_gap": variant_gap,
                "growth": growth,
            });
            Ok(Artifact { csv, summary, tolerance: 1e-10 })
        }
    }
}

fn filter(p: &FilterParams) -> CliResult<Artifact> {
    let (h1, h2) = (hurst(p.h1)?, hurst(p.h2)?);
    let m = FilterModel::new(p.beta, p.mu, p.eps, h1, h2)?;
    let mut out: Vec<(&str, f64)> = Vec::new();
    if p.h2 == 0.5 {
        let s = filtering::steady_state_white(h1, &m)?;
        out.push(("steady_state", s.value));
        if p.beta < 0.0 {
            let sf = filtering::stationary_spectral_error(h1, &m)?;
            out.push(("spectral_formula", sf));
            out.push(("rel_diff", s.value / sf - 1.0));
        }
    }
    if p.h1 == p.h2 {
        out.push(("kalman_bucy", filtering::klb_steady_state(h1, &m)?));
    }
    if p.h1 == 0.5 && p.h2 == 0.5 {
        out.push(("classical_limit", filtering::steady_state_bm(&m)?));
        out.push(("riccati_endpoint", filtering::riccati_error(&m, p.horizon)?));
    }
    out.push(("small_noise_exponent", filtering::small_noise_exponent(h1, h2)));
    let zero = filtering::find_zero_first_quadrant(&m)?;
    match zero {
        FirstQuadrantZero::Interior { z0, residual, winding } => {
            out.push(("zero_re", z0.re));
            out.push(("zero_im", z0.im));
            out.push(("zero_residual", residual));
            out.push(("winding", winding as f64));
        }
        FirstQuadrantZero::Absent { winding } => out.push(("winding", winding as f64)),
        FirstQuadrantZero::Boundary { t0 } => out.push(("t0", t0)),
    }
    let mut csv = String::from("quantity,value\n");
    let mut obj = serde_json::Map::new();
    for (k, v) in &out {
        writeln!(csv, "{k},{v:.15e}").unwrap();
        obj.insert((*k).into(), json!(v));
    }
    obj.insert("zero".into(), serde_json::to_value(zero).expect("serializable"));
    Ok(Artifact { csv, summary: Value::Object(obj), tolerance: 1e-9 })
}

fn fisher(p: &FisherParams, seed: u64) -> CliResult<Artifact> {
    match p.kind {
        FisherKind::Whittle => {
            let mut csv = String::from("theta,rate,exact,rel_err\n");
            let mut rows = Vec::new();
            for &t in &p.theta {
                let r = inference::whittle_rate(|th, l| ou_spectral_density(th, l).unwrap_or(f64::NAN), t, 1e-4 * t)?;
                let exact = 0.5 / t;
                writeln!(csv, "{t},{r:.15e},{exact:.15e},{:.6e}", r / exact - 1.0).unwrap();
                rows.push(json!({ "theta": t, "rate": r, "exact": exact }));
            }
            Ok(Artifact { csv, summary: json!({ "rows": rows }), tolerance: 1e-9 })
        }
        FisherKind::Mixed => {
            let mut csv = String::from("H,sigma,eps,I_HH,I_Hsigma,I_sigmasigma,min_eig\n");
            let mut rows = Vec::new();
            for &hv in &p.hurst {
                for &s in &p.sigma {
                    let th = MixedTheta::new(hv, s)?;
                    let m = inference::mixed_fisher_matrix(th, p.eps)?;
                    let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
                    let min_eig = 0.5 * (a + c) - (0.25 * (a - c) * (a - c) + b * b).sqrt();
                    writeln!(csv, "{hv},{s},{},{a:.12e},{b:.12e},{c:.12e},{min_eig:.12e}", p.eps).unwrap();
                    let rates = if p.eps < 1.0 {
                        json!({
                            "rate_matrix": inference::rate_matrix(p.eps, th)?,
                            "minimax": inference::minimax_rates(p.eps, hv)?,
                        })
                    } else {
                        Value::Null
                    };
                    rows.push(json!({ "H": hv, "sigma": s, "matrix": m, "min_eig": min_eig, "rates": rates }));
                }
            }
            Ok(Artifact { csv, summary: json!({ "rows": rows }), tolerance: 1e-8 })
        }
        FisherKind::Mle => {
            let theta0 = *p.theta.first().ok_or_else(|| CliError::Config("need a theta value".into()))?;
            let mut csv = String::from("seed,reps,mean_z,std_z,abs_skew,abs_excess_kurtosis,mean_theta_hat,pass\n");
            let mut reports = Vec::new();
            let mut passed = 0;
            for s in seed..seed + p.seeds {
                let r = inference::mc_asymptotic_normality(theta0, p.horizon, p.dt, p.reps, s)?;
                let pass = r.passes();
                passed += usize::from(pass == Some(true));
                writeln!(
                    csv,
                    "{s},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
                    r.reps,
                    r.mean,
                    r.std,
                    r.abs_skew,
                    r.abs_excess_kurtosis,
                    r.mean_theta_hat,
                    pass.map_or("na".to_string(), |b| b.to_string())
                )
                .unwrap();
                reports.push(r);
            }
            let summary = json!({ "reports": reports, "passed": passed, "seeds": p.seeds });
            Ok(Artifact { csv, summary, tolerance: 1e-9 })
        }
    }
}

fn hilbert(p: &HilbertParams) -> CliResult<Artifact> {
    let start = 0.5 * (p.nu_min + p.nu_max);
    let spec = match p.kernel {
        HilbertKernel::Zero => HilbertSystemSpec::zero_kernel(start)?,
        HilbertKernel::Synthetic => HilbertSystemSpec::synthetic(start)?,
    };
    let count = if p.count > 0 {
        p.count
    } else {
        let phase = hilbert_system::asymptotic_phase(&spec);
        let lo = ((p.nu_min + phase) / PI).ceil() as i64;
        let hi = ((p.nu_max + phase) / PI).floor() as i64;
        (hi - lo + 1).max(0) as usize
    };
    let roots = hilbert_system::find_nu_roots(&spec, p.nu_min, p.nu_max, count)?;
    let csv = to_csv(|b| hilbert_system::write_roots_csv(&roots, b))?;
    Ok(Artifact { csv, summary: json!({ "spec": spec, "roots": roots }), tolerance: 1e-8 })
}
