use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("bit index {index} out of range for {n} bits")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("assignment {value} does not fit in {n} bits")]
    AssignmentOutOfRange { value: u64, n: usize },

    #[error("invalid clause ({0}, {1}, {2}): indices must be pairwise distinct")]
    InvalidClause(usize, usize, usize),

    #[error("duplicate clause ({0}, {1}, {2})")]
    DuplicateClause(usize, usize, usize),

    #[error("bit {0} does not appear in any clause")]
    UncoveredBit(usize),

    #[error("unsupported bit count {n}: must lie in [{min}, {max}]")]
    BitCount { n: usize, min: usize, max: usize },

    #[error("instance generation failed after {0} restarts")]
    GenerationFailed(usize),

    #[error("satisfying assignment is missing or not unique")]
    NoUniqueSolution,

    #[error("recorded assignment {0} is not the unique satisfying assignment")]
    BadSolution(u64),

    #[error("malformed instance file, line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("{n} bits exceeds the dense-matrix cap of {cap}")]
    DenseCap { n: usize, cap: usize },

    #[error("invalid perturbation: {0}")]
    Perturbation(String),

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("eigendecomposition did not converge")]
    Convergence,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("maximum step count {0} exceeded")]
    MaxSteps(usize),

    #[error("norm drift {drift:e} at t = {t} exceeds tolerance; tighten the integrator tolerances")]
    NormDrift { drift: f64, t: f64 },

    #[error("density matrix eigenvalue {min_eig:e} at t = {t} violates positivity; tighten the integrator tolerances")]
    Positivity { min_eig: f64, t: f64 },

    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),

    #[error("no run time in [{lo}, {hi}] reaches success probability {target}")]
    NoCrossing { target: f64, lo: f64, hi: f64 },

    #[error("operation requires an unperturbed Hamiltonian")]
    Perturbed,

    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
