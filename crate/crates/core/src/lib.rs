//! Simulation and numerics for the one-dimensional symmetric simple exclusion
//! process coupled to slow boundary reservoirs.
//!
//! The crate is organised around the objects that the hydrodynamic and
//! fluctuation theory of the model talks about:
//!
//! * [`spectral`]: the Robin Sturm–Liouville eigenbasis, the heat semigroup
//!   `T_t` and the inverse Laplacian acting on finite eigen-expansions.
//! * [`lattice`]: exact-in-law continuous-time simulation of the particle
//!   system, plus a brute-force generator oracle for small lattices.
//! * [`hydro`]: the discrete mean profile `ρ_t^n` and the continuum PDE
//!   solution.
//! * [`correlations`]: the two-point correlation function on the triangle
//!   `V_n`.
//! * [`fluctuations`]: the density fluctuation field, its martingale
//!   decomposition and the limiting covariance formulas.

pub mod correlations;
pub mod error;
pub mod fluctuations;
pub mod hydro;
pub mod lattice;
pub mod linalg;
pub mod quadrature;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use hydro::{BoundaryExtension, LatticeProfile, Reservoirs};
pub use lattice::{Configuration, EnsembleStats, InitSpec};
pub use spectral::{EigenBasis, EigenMode, SpectralFunction};

/// Static compressibility `χ(ρ) = ρ(1 − ρ)`.
#[inline]
pub fn chi(rho: f64) -> f64 {
    rho * (1.0 - rho)
}
