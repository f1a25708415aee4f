//! Spectral solver and verification kernels for multi-component phase
//! separation coupled to small deformations of a spherical membrane.
//!
//! The crate is organized around the pieces of the model:
//!
//! - [`sphere`]: real spherical-harmonic transforms, quadrature, and the
//!   Laplace-Beltrami operator on the sphere of radius R;
//! - [`potential`]: the logarithmic entropy with its cubic extension and
//!   Yosida-regularized family, plus the multi-well free-energy density;
//! - [`fields`]: constrained state containers for the composition vector and
//!   the normal deformation, the simplex projection, mobility validation,
//!   and the weighted inverse Laplacian;
//! - [`dynamics`]: the coupled evolution (chemical potential, stabilized
//!   IMEX stepping, energies and dissipation bookkeeping);
//! - [`geometry`]: exact Canham-Helfrich functionals on radially perturbed
//!   spheres and the perturbation-expansion checks;
//! - [`diagnostics`]: separation monitoring, level-set measures, the
//!   recursive-decay utility, and the Sobolev-constant probe.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod potential;
pub mod sphere;

pub use error::{CoreError, Result};
