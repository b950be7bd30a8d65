use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// A pure state of `n` qubits: `2^n` complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::Parameter(format!(
                "state length {} is not a power of two",
                amps.len()
            )));
        }
        Ok(StateVector { amps })
    }

    /// The uniform superposition, ground state of the beginning Hamiltonian.
    pub fn uniform(n: usize) -> Self {
        let dim = 1usize << n;
        let a = C64::new(1.0 / (dim as f64).sqrt(), 0.0);
        StateVector { amps: vec![a; dim] }
    }

    /// Computational basis state `|z>`.
    pub fn basis(n: usize, z: usize) -> Result<Self> {
        let dim = 1usize << n;
        if z >= dim {
            return Err(Error::AssignmentOutOfRange {
                value: z as u64,
                n,
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[z] = C64::new(1.0, 0.0);
        Ok(StateVector { amps })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn probability(&self, z: usize) -> f64 {
        self.amps[z].norm_sqr()
    }
}
