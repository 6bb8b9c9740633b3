use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EigenKernel {
    Fbm,
    Brownian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct EigenParams {
    /// Hurst exponents (comma separated)
    #[arg(long, value_delimiter = ',', default_value = "0.75")]
    pub hurst: Vec<f64>,
    /// Galerkin cells on [0, 1]
    #[arg(long, default_value_t = 2000)]
    pub grid: usize,
    /// Number of eigenvalues
    #[arg(long, default_value_t = 30)]
    pub count: usize,
    #[arg(long, value_enum, default_value = "fbm")]
    pub kernel: EigenKernel,
    /// Compare against the raw grid eigenvalue instead of the Richardson value
    #[arg(long)]
    #[serde(default)]
    pub raw: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    Asymptotic,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct SampleParams {
    #[arg(long, default_value_t = 0.75)]
    pub hurst: f64,
    /// KL terms
    #[arg(long, default_value_t = 50)]
    pub terms: usize,
    /// Output points on [0, 1]
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    #[arg(long, default_value_t = 1)]
    pub paths: usize,
    #[arg(long, value_enum, default_value = "asymptotic")]
    pub basis: Basis,
    /// Galerkin cells for the oracle basis
    #[arg(long, default_value_t = 1000)]
    pub grid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct SmallballParams {
    #[arg(long, default_value_t = 0.5)]
    pub hurst: f64,
    /// Eigenvalues kept before the tail correction
    #[arg(long, default_value_t = 500)]
    pub terms: usize,
    /// Ball radii, strictly decreasing
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.4,0.3,0.25")]
    pub eps: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SecondKindMode {
    /// u_ε(1) against ε
    Boundary,
    /// Martingale bracket against t
    Bracket,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct SecondKindParams {
    #[arg(long, value_enum, default_value = "boundary")]
    pub mode: SecondKindMode,
    #[arg(long, default_value_t = 0.75)]
    pub hurst: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025,0.0125")]
    pub eps: Vec<f64>,
    /// Cells for the boundary solve
    #[arg(long, default_value_t = 400)]
    pub cells: usize,
    /// Horizons for the bracket sweep
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = 64)]
    pub cells_per_unit: usize,
    /// Noise intensity for the bracket sweep
    #[arg(long, default_value_t = 1.0)]
    pub bracket_eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct FilterParams {
    #[arg(long, default_value_t = 0.5)]
    pub h1: f64,
    #[arg(long, default_value_t = 0.5)]
    pub h2: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// Horizon for the Riccati solve (white noises only)
    #[arg(long, default_value_t = 50.0)]
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FisherKind {
    /// Whittle rate of the OU spectral density
    Whittle,
    /// Mixed fBm information matrix and rates
    Mixed,
    /// Monte Carlo of the OU drift estimator
    Mle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct FisherParams {
    #[arg(long, value_enum, default_value = "whittle")]
    pub kind: FisherKind,
    /// OU drift values
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,5")]
    pub theta: Vec<f64>,
    /// Mixed-model Hurst exponents
    #[arg(long, value_delimiter = ',', default_value = "0.8,0.85,0.9")]
    pub hurst: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
    pub sigma: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 100.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    /// Independent master seeds, counted from --seed
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum HilbertKernel {
    Zero,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct HilbertParams {
    #[arg(long, value_enum, default_value = "synthetic")]
    pub kernel: HilbertKernel,
    #[arg(long, default_value_t = 30.0)]
    pub nu_min: f64,
    #[arg(long, default_value_t = 60.0)]
    pub nu_max: f64,
    /// Roots to locate; 0 means every predicted root in the bracket
    #[arg(long, default_value_t = 0)]
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Subcommand)]
#[serde(tag = "subcommand", content = "params", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Command {
    /// Oracle eigenvalues against the asymptotic law
    Eigen(EigenParams),
    /// Karhunen-Loeve sample paths
    Sample(SampleParams),
    /// Small-ball probabilities
    Smallball(SmallballParams),
    /// Second-kind equation: boundary blow-up or martingale bracket
    Secondkind(SecondKindParams),
    /// Steady-state filtering errors
    Filter(FilterParams),
    /// Information rates and the drift estimator
    Fisher(FisherParams),
    /// Roots of the integro-algebraic system
    Hilbert(HilbertParams),
}

impl Command {
    pub fn is_stochastic(&self) -> bool {
        matches!(self, Command::Sample(_) | Command::Fisher(FisherParams { kind: FisherKind::Mle, .. }))
    }
}

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub format: Format,
}

pub const PRESETS: &[&str] = &[
    "brownian-exact",
    "fbm-spectrum",
    "cm-smallball",
    "secondkind-blowup",
    "bracket-growth",
    "kalman-bucy-identity",
    "filter-crosscheck",
    "lambda-zeros",
    "whittle-ou",
    "mixed-fisher",
    "mle-normality",
    "hilbert-zero",
    "hilbert-synthetic",
    "kl-sample",
];

pub fn preset(name: &str) -> Option<RunConfig> {
    let csv = |command, seed| Some(RunConfig { command, seed, format: Format::Csv });
    let filter = |h1, h2, beta, mu, eps| FilterParams { h1, h2, beta, mu, eps, horizon: 50.0 };
    let fisher = |kind| FisherParams {
        kind,
        theta: vec![0.5, 1.0, 2.0, 5.0],
        hurst: vec![0.8, 0.85, 0.9],
        sigma: vec![0.5, 1.0, 2.0],
        eps: 1.0,
        horizon: 100.0,
        dt: 0.01,
        reps: 500,
        seeds: 1,
    };
    let second = |mode| SecondKindParams {
        mode,
        hurst: 0.75,
        eps: vec![0.1, 0.05, 0.025, 0.0125],
        cells: 400,
        t: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
        cells_per_unit: 64,
        bracket_eps: 1.0,
    };
    match name {
        "brownian-exact" => csv(
            Command::Eigen(EigenParams { hurst: vec![0.5], grid: 2000, count: 5, kernel: EigenKernel::Brownian, raw: false }),
            None,
        ),
        "fbm-spectrum" => csv(
            Command::Eigen(EigenParams {
                hurst: vec![0.6, 0.75, 0.9],
                grid: 4000,
                count: 50,
                kernel: EigenKernel::Fbm,
                raw: false,
            }),
            None,
        ),
        "cm-smallball" => csv(
            Command::Smallball(SmallballParams { hurst: 0.5, terms: 500, eps: vec![0.5, 0.4, 0.3, 0.25] }),
            None,
        ),
        "secondkind-blowup" => csv(Command::Secondkind(second(SecondKindMode::Boundary)), None),
        "bracket-growth" => csv(Command::Secondkind(second(SecondKindMode::Bracket)), None),
        "kalman-bucy-identity" => csv(Command::Filter(filter(0.5, 0.5, -1.0, 1.0, 0.5)), None),
        "filter-crosscheck" => csv(Command::Filter(filter(0.7, 0.5, -1.0, 1.0, 0.5)), None),
        "lambda-zeros" => csv(Command::Filter(filter(0.8, 0.5, 0.5, 1.0, 0.5)), None),
        "whittle-ou" => csv(Command::Fisher(fisher(FisherKind::Whittle)), None),
        "mixed-fisher" => csv(Command::Fisher(fisher(FisherKind::Mixed)), None),
        "mle-normality" => csv(Command::Fisher(FisherParams { seeds: 20, ..fisher(FisherKind::Mle) }), Some(1)),
        "hilbert-zero" => csv(
            Command::Hilbert(HilbertParams { kernel: HilbertKernel::Zero, nu_min: 1.0, nu_max: 20.0, count: 0 }),
            None,
        ),
        "hilbert-synthetic" => csv(
            Command::Hilbert(HilbertParams { kernel: HilbertKernel::Synthetic, nu_min: 30.0, nu_max: 60.0, count: 0 }),
            None,
        ),
        "kl-sample" => csv(
            Command::Sample(SampleParams {
                hurst: 0.75,
                terms: 50,
                points: 101,
                paths: 4,
                basis: Basis::Asymptotic,
                grid: 1000,
            }),
            Some(42),
        ),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip() {
        for name in PRESETS {
            let c = preset(name).unwrap();
            let text = serde_json::to_string(&c).unwrap();
            let back: RunConfig = serde_json::from_str(&text).unwrap();
            assert_eq!(c, back, "{name}");
            assert!(!c.command.is_stochastic() || c.seed.is_some(), "{name}");
        }
        assert!(preset("bogus").is_none());
    }

    #[test]
    fn unknown_keys_rejected() {
        let ok = r#"{"command":{"subcommand":"filter","params":{"h1":0.5,"h2":0.5,"beta":-1,"mu":1,"eps":0.5,"horizon":50}}}"#;
        assert!(serde_json::from_str::<RunConfig>(ok).is_ok());
        let bad = ok.replace(r#""horizon":50"#, r#""horizon":50,"gain":2"#);
        assert!(serde_json::from_str::<RunConfig>(&bad).is_err());
        let bad = ok.replacen('{', r#"{"colour":1,"#, 1);
        assert!(serde_json::from_str::<RunConfig>(&bad).is_err());
        let bad = ok.replace(r#""params""#, r#""extra":0,"params""#);
        assert!(serde_json::from_str::<RunConfig>(&bad).is_err());
    }
}
