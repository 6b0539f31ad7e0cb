//! Pseudo-spectral laboratory for the fractional porous medium equation
//! `u_t = div(u grad (-Delta)^(-s) u)` on a periodic torus.
//!
//! The nonlinear problem is solved as the limit of linear degenerate
//! diffusion-transport problems with a frozen coefficient. Every operator
//! inequality and a-priori estimate those linear problems rely on can be
//! witnessed numerically through [`diagnostics`].

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod linear;
pub mod mollifier;
pub mod norms;
pub mod ops;
pub mod par;
pub mod picard;
pub mod quadrature;
pub mod run;
pub mod snapshot;

pub use error::{Error, Result};
pub use grid::{dealias, forward_transform, inverse_transform, Grid, RealField, SpectralField};
pub use mollifier::{mollify, MollifierKernel};
pub use norms::{besov_norm, homogeneous_seminorm, lp_norm, sobolev_norm, DyadicPartition};
pub use ops::{frac_laplacian, gradient, inv_frac_laplacian};
pub use config::{parse_config, parse_config_with, Mode, RunSpec};
pub use run::{execute, RunSummary};
