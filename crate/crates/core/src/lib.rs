//! Computational toolkit for the circle method over prime-weighted polynomial
//! sequences.
//!
//! The crate is organised bottom-up:
//!
//! * [`polycore`]: integer polynomials with zero constant term, differences,
//!   rescaling and denominator clearing.
//! * [`primetools`]: segmented sieve, von Mangoldt weights, the `Λ_{b,W}`
//!   residue-class objects and the divisor function `d_k`.
//! * [`expsum`]: exact-phase Weyl sums, complete sums and major-arc main terms.
//! * [`arcs`]: Dirichlet approximation, arc classification and moments.
//! * [`vaughan`]: the Vaughan decomposition and bilinear sums.
//! * [`spectral`]: Fourier analysis on `Z_N`, Bohr sets and smoothing.
//! * [`witness`]: counting and finding solutions of `x - y = ψ(z)` with
//!   `Wz + 1` prime, including the density-increment driver.

pub mod arcs;
pub mod arith;
pub mod dd;
pub mod error;
pub mod expsum;
pub mod polycore;
pub mod primetools;
pub mod spectral;
pub mod sum;
pub mod vaughan;
pub mod witness;

pub use error::{Error, Result};
pub use num_complex::Complex64;
