//! Optimization scaling laws for gradient descent and sign descent on the
//! linear bigram model with power-law token frequencies.
//!
//! The crate is organised bottom-up:
//!
//! - [`specfun`]: Gamma, Beta, zeta, generalized exponential integral and its
//!   inverse, Lambert W.
//! - [`powerlaw`]: synthetic power-law problems, harmonic sums and the full
//!   `d x d` eigen-system used as an oracle at small `d`.
//! - [`gd`]: closed-form gradient-descent dynamics, asymptotic rates and
//!   time-to-epsilon inversions.
//! - [`sd`]: exact and simplified sign-descent dynamics, step-size scalings,
//!   asymptotic rates and searches.
//! - [`corpus`]: bigram statistics from token streams and loss curves on them.
//! - [`baselines`]: worst-case comparison rates.
//! - [`experiments`]: grid runners producing the CSV tables, plus the
//!   log-log [`fit::ScalingFit`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod corpus;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod gd;
pub mod optim;
pub mod powerlaw;
pub mod quad;
pub mod sd;
pub mod specfun;

pub use error::{Error, Result};
pub use fit::ScalingFit;
pub use gd::{Algorithm, RateCurve, TimeSemantics};
pub use powerlaw::{FullEigenSystem, PowerLawSpec};
pub use sd::{SdConfig, SdExactState, SdMode};
