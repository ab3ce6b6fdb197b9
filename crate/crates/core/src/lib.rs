//! Numerical core for topological-insulator nanowire calculations.
//!
//! The crate covers the full pipeline for a Bi₂Se₃ cylindrical nanowire:
//!
//! * [`basis`] — material constants, wire geometry, Bessel disk modes and
//!   their overlap integrals;
//! * [`hamiltonian`] — assembly of the four-band k·p Rayleigh-Ritz matrix
//!   and bulk-dispersion helpers;
//! * [`spectrum`] — the dense Hermitian eigenproblem, in-gap state
//!   classification, band sweeps and convergence diagnostics;
//! * [`rdm`] — sector, pure-state and mode-dependent reduced density
//!   matrices;
//! * [`entropy`] — von Neumann entropy, the Kitaev-Preskill combination,
//!   entanglement spectra and Uhlmann fidelity;
//! * [`qpt`] — Kraus-operator quantum process tomography by constrained
//!   gradient descent.
//!
//! All energies are in eV, lengths in Å, wave numbers in Å⁻¹ and entropies
//! in nats.

pub mod basis;
pub mod entropy;
pub mod hamiltonian;
pub mod linalg;
pub mod qpt;
pub mod rdm;
pub mod spectrum;

pub use num_complex::Complex64;
