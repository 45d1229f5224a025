//! Discrete diffusion of two staggered spin species on a layered holographic
//! lattice.
//!
//! The crate models a classicalized holographic tensor network as an
//! undirected layered graph: `width` sites per layer, `depth` renormalization
//! layers, and two spin-zero bipartite-spin species (`↑↓` and `↓↑`) staggered
//! with period 2 along each layer. On that graph it provides
//!
//! * [`constants`] — physical constants and the derived diffusion
//!   coefficient `kappa = 2 t_P / t_ML = 1/π²`, always computed through the
//!   derivation chain rather than hard-coded;
//! * [`network`] — lattice construction, species staggering, adjacency, and
//!   boundary policy;
//! * [`laplacian`] — the species-staggered graph Laplacian assembled from
//!   exact integer stencil rows, an incidence-based cross-check construction,
//!   and a dense null-space routine;
//! * [`dynamics`] — explicit relaxation of the two-species distribution and
//!   three independent routes to the steady state (closed form, relaxation,
//!   dense kernel solve);
//! * [`metric`] — the information metric induced by `log₂` differences of the
//!   steady distribution, its Poincaré half-plane form, and a comparison
//!   against the AdS₂ metric `g_xx = g_rr = r⁻²`;
//! * [`io`] — deterministic CSV/JSON emission and parsing for all of the
//!   above.
//!
//! Numeric code is generic over the floating-point scalar through
//! [`scalar::Scalar`]; stencil arithmetic is additionally available over
//! exact integers through [`scalar::Coeff`]. The crate-level alias [`Real`]
//! picks the default precision used by the command-line front end.

// Validation guards are written `!(x > 0)` rather than `x <= 0` so that NaN
// inputs are rejected alongside non-positive ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod laplacian;
pub mod metric;
pub mod network;
pub mod rng;
pub mod scalar;
pub mod tolerances;

pub use error::{Error, Result};
pub use scalar::{Coeff, Scalar};

/// Default floating-point precision for front-end code paths.
pub type Real = f64;
