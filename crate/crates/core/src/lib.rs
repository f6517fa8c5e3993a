//! Numerical companion for the alpha invariant of complex Grassmannians.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: dense complex matrices, maximal minors, seeded samplers.
//! * [`atlas`]: points, affine charts, transitions and the unitary action.
//! * [`metric`]: Kähler potential, metric, volume density, Ricci tensor,
//!   admissibility of potentials.
//! * [`embedding`]: the embedding of a product of projective lines and the
//!   inequalities it satisfies.
//! * [`alpha`]: the extremal family, Monte-Carlo integration over the
//!   Grassmannian and the divergence experiments.

// `!(x > 0.0)` rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alpha;
pub mod atlas;
pub mod embedding;
pub mod error;
pub mod estimate;
pub mod linalg;
pub mod metric;
pub mod quadrature;

pub use error::{GeometryError, Result};
pub use estimate::IntegralEstimate;
