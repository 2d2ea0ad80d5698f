//! Desk-scale numerics for the Klein-Gordon equation on asymptotically
//! de Sitter spaces.
//!
//! The crate is organized around the objects that control the asymptotic
//! behavior of solutions of `(Box - lambda) u = 0` at the two conformal
//! boundaries of such a spacetime:
//!
//! - [`spectral`]: indicial roots `s_plus/s_minus`, shifted roots, the
//!   weight-regime classification, and the symbol ratio that witnesses
//!   ellipticity of the renormalized scattering operator.
//! - [`flow`]: null bicharacteristics in 0-cotangent coordinates and the
//!   classical scattering map between the two boundary cosphere bundles.
//! - [`expansion`]: the boundary Frobenius recursion producing truncated
//!   power-log expansions `x^s sum a_{j,k} x^j log^k x` per angular mode.
//! - [`psigma`]: the front-face model operator on the unit ball and its
//!   algebraic identities (conjugation, intertwining, positivity, the
//!   explicit null vector).
//! - [`poisson`]: the explicit flat-model Poisson kernel and its
//!   Gamma-function normalization.
//! - [`modes`]: the quantum scattering matrix on exact de Sitter assembled
//!   from per-mode ODE connection problems.
//! - [`evolve`]: direct (1+1)-dimensional evolution in compactified time,
//!   used to cross-validate the mode computation and to probe uniqueness.
//!
//! The `dscat` binary exposes each experiment as a subcommand; `dscat
//! verify` runs the acceptance battery in [`verify`].

pub mod cli;
pub mod evolve;
pub mod expansion;
pub mod fit;
pub mod flow;
pub mod modes;
pub mod ode;
pub mod poisson;
pub mod poly;
pub mod psigma;
pub mod report;
pub mod special;
pub mod spectral;
pub mod verify;

pub use num_complex::Complex64;
