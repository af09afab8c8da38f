//! The Gibbs measure `μ_γ`, the law `ρ` of the energy under it, and the
//! conditional (surface) measures `ν^r_γ` on the energy level sets.
//!
//! Under `μ_γ` the per-mode energies `X_k = ½ λ'_k |ω_k|²` are independent
//! exponentials with rates `λ_k = γ λ'_k`, so the energy is hypoexponential
//! and conditioning on `E = r` is a tilted distribution on a simplex.

mod density;
mod gibbs;
mod surface;

pub use density::{HypoexponentialDensity, DEFAULT_TALBOT_NODES};
pub use gibbs::{sample_mu, sample_mu_seeded, GibbsSpec};
pub use surface::{
    normalization_audit, nu_cross_moment, nu_second_moment, nu_second_moment_quadrature,
    ratio_form_second_moment, sample_nu, sample_nu_batch, sample_nu_indexed, McmcDiagnostics,
    ModeAudit, NuBatch, SimplexMethod, SimplexSamplerConfig,
};
