//! Meijer G-function evaluation on the real unit interval.
//!
//! The production evaluator ([`meijer_g`], [`PreparedG`]) sums residues at the
//! `b`-pole family and expresses the result as a finite sum of
//! `z^{b_h}`-scaled generalized hypergeometric series. The Mellin–Barnes
//! quadrature in [`contour`] is slow and exists only to cross-check it.

mod gamma;
mod grad;
mod hyper;
mod inclusion;
mod params;
mod slater;

pub mod contour;

pub use contour::{meijer_g_contour, ContourConfig};
pub use gamma::{ln_gamma, ln_gamma_complex, LnGamma};
pub use grad::{grad_params, grad_z, grad_z2, param_jacobian, ParamGradient, ParamJacobian};
pub use hyper::pfq;
pub use inclusion::{embed_m_branch, embed_n_branch, reduce_check};
pub use params::{Config, EvalPolicy, MeijerGParams, CONFIG_SET};
pub use slater::{meijer_g, PreparedG};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GfuncError {
    #[error("Gamma pole at {0}")]
    Pole(f64),
    #[error("series diverges: {0}")]
    Divergence(String),
    #[error("series did not converge within {terms} terms")]
    NonConvergence { terms: usize },
    #[error("series lost {0:.1} digits to cancellation")]
    PrecisionLoss(f64),
    #[error("contour: {0}")]
    Contour(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, GfuncError>;
