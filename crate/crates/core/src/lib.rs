//! Numerical laboratory for the Dirichlet heat equation with a critical
//! exponential reaction on a disk.
//!
//! The library constructs the explicit singular stationary profile of
//!
//! ```text
//! ∂_t u - Δu = f(u),   f(s) = e^{s²}/|s|³  (|s| large),
//! ```
//!
//! on the disk whose radius the profile itself selects, and provides the
//! machinery to test the sharp trichotomy around that profile: initial data
//! strictly below it evolve classically, the profile itself admits both the
//! trivial stationary continuation and a bounded escaping solution, and any
//! datum strictly above it is driven to +∞ faster than the reaction can be
//! integrated, so no local solution exists at all.
//!
//! Modules are layered bottom-up: scalar special functions and quadrature,
//! the reaction term, radial grids and fields, the stationary profile,
//! Orlicz/Lorentz norms, the Dirichlet heat semigroup in Bessel modes, the
//! Duhamel fixed-point solver, the reciprocal-square-root change of
//! variables with its barrier construction, and the linear lower-bound
//! certificates that rule out local solutions above the profile.

pub mod bessel;
pub mod colehopf;
pub mod error;
pub mod evolution;
pub mod field;
pub mod nonexistence;
pub mod nonlinearity;
pub mod quad;
pub mod semigroup;
pub mod spaces;
pub mod stationary;

pub use error::{Error, Result};
pub use nonlinearity::Nonlinearity;
