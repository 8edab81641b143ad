//! Pseudo-spectral laboratory for the inhomogeneous nonlinear Schrödinger
//! equation `i u_t + Δu + μ|x|^{-b}|u|^α u = 0`, with an exact-rational
//! engine for its exponent thresholds and Strichartz pair constructions.

pub mod exponents;
pub mod grid;
pub mod observables;
pub mod par;
pub mod runner;
pub mod scattering;
pub mod solver;
