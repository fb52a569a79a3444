//! Finite-field toolkit for constructing combinatorial 2-designs from the
//! image sets of the quadratic maps f(x) = x^{p^l+1} over GF(p^m), verifying
//! the design property by exact pair counting, and certifying the supporting
//! counts and bounds (rootless-coefficient counts, image-set sizes, affine
//! stabilizers, 2-homogeneity, and plane-curve point bounds) by independent
//! brute force.
//!
//! Modules:
//! - [`field`]: exact GF(p^m) arithmetic with deterministic construction
//! - [`designs`]: incidence structures, value spectra, t-design verification
//! - [`family`]: the quadratic family, closed-form predictions, case checks
//! - [`groups`]: affine group actions, orbits, stabilizers, 2-homogeneity
//! - [`curves`]: point counting and bound certification for the associated
//!   plane curves
//! - [`sweep`]: batch execution over (p, m, l) grids with JSON reports

pub mod bitset;
pub mod curves;
pub mod designs;
pub mod family;
pub mod field;
pub mod groups;
pub mod sweep;
