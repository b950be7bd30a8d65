//! Simulation of adiabatic quantum computation on three-bit exact cover.
//!
//! The crate builds the interpolating Hamiltonian `H(s) = (1 - s) H_B + s H_P`
//! for an exact-cover instance, analyses its spectrum, integrates the
//! Schrödinger equation with optional single-qubit control errors, and
//! integrates a Davies master equation for a thermal photon bath.

pub mod ec3;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod integrator;
pub mod open_system;
pub mod operators;
pub mod spectral;
pub mod state;
pub mod table;

pub use ec3::{generate_unique, Assignment, Clause, Ec3Instance};
pub use error::{Error, Result};
pub use evolution::{evolve, find_runtime, success_probability, Calibration, EvolutionConfig, EvolutionResult};
pub use experiments::{SweepKind, SweepPlan, SweepResult};
pub use open_system::{
    davies_rhs, evolve_master, gibbs_state, thermal_success, BathParams, DensityMatrix, MasterResult,
};
pub use operators::{HamiltonianSpec, Perturbation, PerturbationKind};
pub use spectral::{eigensystem, ground_overlap, min_gap, spectrum_scan, EigenSystem, GapReport};
pub use state::StateVector;
pub use table::Table;
