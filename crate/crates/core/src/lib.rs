//! Rényi entropy and Rényi mutual information estimation from generalized
//! nearest-neighbor graphs.
//!
//! The estimators are built on the functional
//!
//! ```text
//! L_p(V) = Σ_{(x, y) ∈ E(NN_S(V))} ‖x − y‖^p
//! ```
//!
//! where `NN_S(V)` has an edge from every point to its `i`-th nearest neighbor
//! for each `i` in a finite neighbor set `S`. For a sample of size `n` in `R^d`
//! and `α ∈ (0, 1)` the entropy estimate is
//!
//! ```text
//! Ĥ_α = log( L_p / (γ n^{1 − p/d}) ) / (1 − α),   p = d (1 − α)
//! ```
//!
//! and mutual information is the negated entropy of the empirical copula.
//! The constant `γ` depends only on `(d, p, S)` and is obtained by Monte-Carlo
//! calibration ([`calibration`]) or, for singleton `S`, in closed form.
//!
//! Module map:
//! - [`geometry`]: point sets, exact k-NN (kd-tree and exhaustive scan),
//!   nearest-neighbor graphs and the `L_p` / `L_p*` functionals.
//! - [`calibration`]: `γ` estimation, the analytic form and the on-disk cache.
//! - [`estimators`]: `Ĥ_α`, the empirical copula, `Î_α` and the histogram
//!   plug-in baseline.
//! - [`samplers`]: seeded synthetic distributions.
//! - [`isa`]: whitening, FastICA, subspace grouping and the block Amari index.
//! - [`diagnostics`]: empirical checks of the structural properties of `L_p`.
//! - [`experiments`]: drivers for the convergence-rate and ISA studies.

#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod geometry;
pub mod isa;
pub mod rng;
pub mod samplers;

pub use error::{Error, Result};
pub use geometry::{Cube, NeighborSpec, PointSet};

/// Version string stamped into every persisted or printed report.
pub const TOOL_VERSION: &str = concat!("renyi-core/", env!("CARGO_PKG_VERSION"));
