//! Numerical laboratory for restricting flat-torus Laplace eigenfunctions to
//! curved hypersurfaces.
//!
//! An eigenfunction of `−Δ` on `T^d = R^d/Z^d` with eigenvalue `4π²m` is a
//! trigonometric polynomial whose frequencies lie on the lattice shell
//! `{n ∈ Z^d : |n|² = m}`. Its squared `L²` norm on a hypersurface `Σ` is a
//! Hermitian form in the coefficients whose matrix holds the Fourier
//! transform of the surface measure at frequency differences.
//!
//! - [`lattice_shell`]: exact shell enumeration and counting.
//! - [`cap_stats`]: cap counts, arc minima, cluster partitions, cell histograms.
//! - [`surface`]: model hypersurfaces and `σ̂` by quadrature, closed form and
//!   stationary phase.
//! - [`restriction`]: Gram matrices, restriction norms, extreme eigenvalues and
//!   the cluster-decomposition certificate.
//! - [`expsums`]: bilinear and cap-pair exponential sums, power-law fits.

pub mod cap_stats;
pub mod error;
pub mod expsums;
pub mod lattice_shell;
pub mod numeric;
pub mod restriction;
pub mod surface;

pub use error::{Error, Result};
pub use num_complex::Complex64;
