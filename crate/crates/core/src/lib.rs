//! Numerical laboratory for a 2x2 non-Hermitian two-level model.
//!
//! The crate is organized around the stages of the computation:
//!
//! - [`model`] — the explicit Hamiltonian, its branch-selected
//!   eigen-decomposition in a fixed gauge, degeneracy-ring and nodal-line
//!   (string) detection.
//! - [`geometry`] — the three Berry-connection forms, Berry curvatures
//!   (finite-difference and closed-form), loop integrals, surface fluxes,
//!   and disk charge-distribution maps.
//! - [`dynamics`] — time-dependent Schrödinger evolution along
//!   parameter-space orbits with a compensatory phase factor, and the
//!   total/dynamical/geometric phase decomposition.
//! - [`gpe`] — a two-component 1D Gross–Pitaevskii split-step solver used
//!   to measure soliton geometric phases, plus unit conversions.
//! - [`acceptance`] — the end-to-end verification suite driven both by
//!   `cargo test` and the `verify` CLI command.
//!
//! All quantities are dimensionless unless stated otherwise. Everything is
//! deterministic: fixed summation orders, no wall-clock or RNG input.

pub mod acceptance;
pub mod cplx;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod gpe;
pub mod model;
pub mod quadrature;
pub mod report;

pub use cplx::{Matrix2C, Vec2C, C64};
pub use error::{Error, Result};
pub use model::{Band, EigenSystem, ModelConfig, ParamPoint};
