//! Spectral and statistical tools for fractional Gaussian processes.

pub mod error;
pub mod filtering;
pub mod hilbert_system;
pub mod inference;
pub mod kernels;
pub mod kl_sampler;
pub mod numerics;
pub mod quad_oracle;
pub mod secondkind;
pub mod smallball;
pub mod spectra;

pub use error::{Error, Result};
pub use kernels::{EigenPair, HurstParam, KernelKind, KernelSpec};
