//! Problem, beginning, interpolated and perturbed Hamiltonians.
//!
//! `H(s) = (1-s) H_B + s H_P + K(s)` where `H_P` is diagonal with entries
//! `h(z)`, `H_B = sum_i d_i (1 - sigma_x^(i)) / 2` with `d_i` the number of
//! clauses touching bit `i`, and `K(s) = e(s) sum_i m_i . sigma^(i)` is an
//! optional random-field perturbation.
//!
//! Pauli conventions: `sigma_x^(i)` maps `|z>` to `|z ^ 2^i>`,
//! `sigma_y|0> = i|1>`, `sigma_y|1> = -i|0>`, `sigma_z|z_i> = (-1)^{z_i}|z_i>`.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ec3::Ec3Instance;
use crate::error::{Error, Result};
use crate::state::StateVector;

/// Default dense-matrix cap on the bit count.
pub const DEFAULT_DENSE_CAP: usize = 12;
/// Hard limit for the configurable dense cap.
pub const MAX_DENSE_CAP: usize = 14;

const UNIT_TOL: f64 = 1e-12;

/// Diagonal problem Hamiltonian, `diag[z] = h(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemHamiltonian {
    n: usize,
    diag: Vec<u32>,
}

impl ProblemHamiltonian {
    pub fn from_instance(inst: &Ec3Instance) -> Self {
        ProblemHamiltonian {
            n: inst.n(),
            diag: inst.violation_table(),
        }
    }

    pub fn from_diag(n: usize, diag: Vec<u32>) -> Result<Self> {
        if diag.len() != 1usize << n {
            return Err(Error::Dimension {
                expected: 1 << n,
                got: diag.len(),
            });
        }
        Ok(ProblemHamiltonian { n, diag })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn diag(&self) -> &[u32] {
        &self.diag
    }

    /// Basis states attaining the minimum of `h`.
    pub fn ground_indices(&self) -> Vec<usize> {
        let min = self.diag.iter().copied().min().unwrap_or(0);
        (0..self.diag.len()).filter(|&z| self.diag[z] == min).collect()
    }

    /// The ground state index when it is unique.
    pub fn unique_ground(&self) -> Option<usize> {
        match self.ground_indices().as_slice() {
            [z] => Some(*z),
            _ => None,
        }
    }
}

/// Beginning Hamiltonian stored by per-bit clause degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct BeginningHamiltonian {
    degrees: Vec<u32>,
}

impl BeginningHamiltonian {
    pub fn new(degrees: Vec<u32>) -> Result<Self> {
        if let Some(i) = degrees.iter().position(|&d| d == 0) {
            return Err(Error::UncoveredBit(i));
        }
        Ok(BeginningHamiltonian { degrees })
    }

    pub fn from_instance(inst: &Ec3Instance) -> Result<Self> {
        Self::new(inst.degrees())
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    /// `sum_i d_i / 2`, the constant diagonal part.
    pub fn diagonal_offset(&self) -> f64 {
        self.degrees.iter().map(|&d| d as f64).sum::<f64>() / 2.0
    }
}

/// The three random-field perturbation envelopes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PerturbationKind {
    /// `C1 s`
    K1,
    /// `C2 sin(pi s)`
    K2,
    /// `sin(C3 pi s) / 2` with integer `C3 >= 0`
    K3,
}

impl PerturbationKind {
    pub fn name(&self) -> &'static str {
        match self {
            PerturbationKind::K1 => "k1",
            PerturbationKind::K2 => "k2",
            PerturbationKind::K3 => "k3",
        }
    }
}

impl std::str::FromStr for PerturbationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "k1" => Ok(PerturbationKind::K1),
            "k2" => Ok(PerturbationKind::K2),
            "k3" => Ok(PerturbationKind::K3),
            other => Err(Error::Perturbation(format!("unknown kind `{other}`"))),
        }
    }
}

/// A sum of single-qubit fields `e(s) sum_i m_i . sigma^(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    kind: PerturbationKind,
    strength: f64,
    directions: Vec<[f64; 3]>,
    seed: Option<u64>,
}

impl Perturbation {
    pub fn new(kind: PerturbationKind, strength: f64, directions: Vec<[f64; 3]>) -> Result<Self> {
        if !strength.is_finite() {
            return Err(Error::Perturbation("strength must be finite".into()));
        }
        if kind == PerturbationKind::K3 && (strength < 0.0 || strength.fract() != 0.0) {
            return Err(Error::Perturbation(format!(
                "K3 frequency must be a nonnegative integer, got {strength}"
            )));
        }
        for (i, m) in directions.iter().enumerate() {
            let norm = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
            if (norm - 1.0).abs() > UNIT_TOL {
                return Err(Error::Perturbation(format!(
                    "direction {i} has norm {norm}, expected 1"
                )));
            }
        }
        Ok(Perturbation {
            kind,
            strength,
            directions,
            seed: None,
        })
    }

    /// Builds a perturbation whose directions are regenerated from `seed`.
    pub fn from_seed(kind: PerturbationKind, strength: f64, n: usize, seed: u64) -> Result<Self> {
        let mut p = Self::new(kind, strength, random_directions(n, seed)?)?;
        p.seed = Some(seed);
        Ok(p)
    }

    pub fn kind(&self) -> PerturbationKind {
        self.kind
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn directions(&self) -> &[[f64; 3]] {
        &self.directions
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Same directions, different strength.
    pub fn with_strength(&self, strength: f64) -> Result<Self> {
        let mut p = Self::new(self.kind, strength, self.directions.clone())?;
        p.seed = self.seed;
        Ok(p)
    }

    /// Scalar envelope `e(s)`. With `swap_s`, K1 ramps as `C1 (1 - s)`.
    pub fn envelope(&self, s: f64, swap_s: bool) -> f64 {
        match self.kind {
            PerturbationKind::K1 if swap_s => self.strength * (1.0 - s),
            PerturbationKind::K1 => self.strength * s,
            PerturbationKind::K2 => self.strength * (PI * s).sin(),
            PerturbationKind::K3 => 0.5 * (self.strength * PI * s).sin(),
        }
    }

    /// Config serialization: kind, strength and seed. Directions are never
    /// stored; they are regenerated from the seed.
    pub fn to_config(&self) -> Result<String> {
        let seed = self.seed.ok_or_else(|| {
            Error::Perturbation("only seeded perturbations can be serialized".into())
        })?;
        Ok(format!(
            "kind = {}\nstrength = {}\nseed = {}\n",
            self.kind.name(),
            self.strength,
            seed
        ))
    }

    pub fn from_config(text: &str, n: usize) -> Result<Self> {
        let mut kind = None;
        let mut strength = None;
        let mut seed = None;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Perturbation(format!("bad config line `{line}`")))?;
            let v = v.trim();
            match k.trim() {
                "kind" => kind = Some(v.parse::<PerturbationKind>()?),
                "strength" => {
                    strength = Some(v.parse::<f64>().map_err(|_| {
                        Error::Perturbation(format!("bad strength `{v}`"))
                    })?)
                }
                "seed" => {
                    seed = Some(
                        v.parse::<u64>()
                            .map_err(|_| Error::Perturbation(format!("bad seed `{v}`")))?,
                    )
                }
                _ => {}
            }
        }
        match (kind, strength, seed) {
            (Some(k), Some(c), Some(sd)) => Self::from_seed(k, c, n, sd),
            _ => Err(Error::Perturbation(
                "config needs kind, strength and seed".into(),
            )),
        }
    }
}

/// Free-function form of [`Perturbation::envelope`] without the swap.
pub fn envelope(p: &Perturbation, s: f64) -> f64 {
    p.envelope(s, false)
}

/// `n` directions drawn uniformly on the unit sphere by normalizing three
/// standard normal deviates.
pub fn random_directions(n: usize, seed: u64) -> Result<Vec<[f64; 3]>> {
    if n == 0 {
        return Err(Error::Parameter("need at least one direction".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let v: [f64; 3] = [
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
        ];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm < 1e-8 {
            continue;
        }
        out.push([v[0] / norm, v[1] / norm, v[2] / norm]);
    }
    Ok(out)
}

/// The full interpolating family plus optional perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    problem: ProblemHamiltonian,
    beginning: BeginningHamiltonian,
    perturbation: Option<Perturbation>,
    swap_s: bool,
    dense_cap: usize,
}

/// Per-`s` coefficients of the matrix-free action.
struct Coefficients {
    /// Constant diagonal, `(1-s) sum d_i / 2`.
    offset: f64,
    s: f64,
    /// `[coef for target bit 0, coef for target bit 1]` per qubit.
    flip: Vec<[C64; 2]>,
    /// `e(s) m_z` per qubit, sign applied by bit value.
    zfield: Vec<f64>,
}

impl HamiltonianSpec {
    pub fn new(problem: ProblemHamiltonian, beginning: BeginningHamiltonian) -> Result<Self> {
        if problem.n() != beginning.n() {
            return Err(Error::Dimension {
                expected: problem.n(),
                got: beginning.n(),
            });
        }
        Ok(HamiltonianSpec {
            problem,
            beginning,
            perturbation: None,
            swap_s: false,
            dense_cap: DEFAULT_DENSE_CAP,
        })
    }

    /// Unperturbed family for an instance. Every bit must be covered.
    pub fn from_instance(inst: &Ec3Instance) -> Result<Self> {
        Self::new(
            ProblemHamiltonian::from_instance(inst),
            BeginningHamiltonian::from_instance(inst)?,
        )
    }

    pub fn with_perturbation(mut self, p: Perturbation) -> Result<Self> {
        if p.directions().len() != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                got: p.directions().len(),
            });
        }
        self.perturbation = Some(p);
        Ok(self)
    }

    pub fn without_perturbation(&self) -> Self {
        HamiltonianSpec {
            perturbation: None,
            ..self.clone()
        }
    }

    pub fn with_swap_s(mut self, swap: bool) -> Self {
        self.swap_s = swap;
        self
    }

    pub fn with_dense_cap(mut self, cap: usize) -> Result<Self> {
        if cap > MAX_DENSE_CAP {
            return Err(Error::DenseCap {
                n: cap,
                cap: MAX_DENSE_CAP,
            });
        }
        self.dense_cap = cap;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.problem.n()
    }

    pub fn dim(&self) -> usize {
        1usize << self.n()
    }

    pub fn problem(&self) -> &ProblemHamiltonian {
        &self.problem
    }

    pub fn beginning(&self) -> &BeginningHamiltonian {
        &self.beginning
    }

    pub fn perturbation(&self) -> Option<&Perturbation> {
        self.perturbation.as_ref()
    }

    pub fn swap_s(&self) -> bool {
        self.swap_s
    }

    pub fn dense_cap(&self) -> usize {
        self.dense_cap
    }

    /// Perturbation envelope at `s`, zero when unperturbed.
    pub fn envelope(&self, s: f64) -> f64 {
        self.perturbation
            .as_ref()
            .map_or(0.0, |p| p.envelope(s, self.swap_s))
    }

    fn coefficients(&self, s: f64) -> Coefficients {
        let b = 1.0 - s;
        let e = self.envelope(s);
        let dirs = self.perturbation.as_ref().map(|p| p.directions());
        let mut flip = Vec::with_capacity(self.n());
        let mut zfield = Vec::with_capacity(self.n());
        for (i, &d) in self.beginning.degrees().iter().enumerate() {
            let base = -b * d as f64 / 2.0;
            let (mx, my, mz) = match dirs {
                Some(m) => (m[i][0], m[i][1], m[i][2]),
                None => (0.0, 0.0, 0.0),
            };
            let re = base + e * mx;
            // Target bit 0 receives -i from sigma_y|1>, target bit 1 receives +i.
            flip.push([C64::new(re, -e * my), C64::new(re, e * my)]);
            zfield.push(e * mz);
        }
        Coefficients {
            offset: b * self.beginning.diagonal_offset(),
            s,
            flip,
            zfield,
        }
    }

    /// Matrix-free `out = H(s) v`, `O(n 2^n)`.
    pub fn apply_into(&self, s: f64, v: &[C64], out: &mut [C64]) -> Result<()> {
        let dim = self.dim();
        if v.len() != dim || out.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: if v.len() != dim { v.len() } else { out.len() },
            });
        }
        let c = self.coefficients(s);
        let h = self.problem.diag();
        for z in 0..dim {
            let mut diag = c.offset + c.s * h[z] as f64;
            let mut acc = C64::new(0.0, 0.0);
            for (i, (fl, &fz)) in c.flip.iter().zip(&c.zfield).enumerate() {
                let bit = (z >> i) & 1;
                diag += if bit == 0 { fz } else { -fz };
                acc += fl[bit] * v[z ^ (1 << i)];
            }
            out[z] = acc + v[z] * diag;
        }
        Ok(())
    }

    pub fn apply(&self, s: f64, v: &StateVector) -> Result<StateVector> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        self.apply_into(s, v.amplitudes(), &mut out)?;
        StateVector::new(out)
    }

    fn check_dense(&self) -> Result<()> {
        if self.n() > self.dense_cap {
            return Err(Error::DenseCap {
                n: self.n(),
                cap: self.dense_cap,
            });
        }
        Ok(())
    }

    /// Dense `H(s)`, column `z` equal to `apply(s, |z>)`.
    pub fn dense(&self, s: f64) -> Result<Mat<C64>> {
        self.check_dense()?;
        let dim = self.dim();
        let c = self.coefficients(s);
        let h = self.problem.diag();
        let mut m = Mat::<C64>::zeros(dim, dim);
        for z in 0..dim {
            let mut diag = c.offset + c.s * h[z] as f64;
            for (i, (fl, &fz)) in c.flip.iter().zip(&c.zfield).enumerate() {
                let bit = (z >> i) & 1;
                diag += if bit == 0 { fz } else { -fz };
                let row = z ^ (1 << i);
                m[(row, z)] = fl[(row >> i) & 1];
            }
            m[(z, z)] = C64::new(diag, 0.0);
        }
        Ok(m)
    }

    /// `dH/ds = H_P - H_B` for the unperturbed family.
    pub fn d_ds(&self) -> Result<Mat<C64>> {
        self.check_dense()?;
        let dim = self.dim();
        let h = self.problem.diag();
        let offset = self.beginning.diagonal_offset();
        let mut m = Mat::<C64>::zeros(dim, dim);
        for z in 0..dim {
            m[(z, z)] = C64::new(h[z] as f64 - offset, 0.0);
            for (i, &d) in self.beginning.degrees().iter().enumerate() {
                m[(z ^ (1 << i), z)] = C64::new(d as f64 / 2.0, 0.0);
            }
        }
        Ok(m)
    }
}

/// Free-function forms matching the operation names.
pub fn apply(spec: &HamiltonianSpec, s: f64, v: &StateVector) -> Result<StateVector> {
    spec.apply(s, v)
}

pub fn dense(spec: &HamiltonianSpec, s: f64) -> Result<Mat<C64>> {
    spec.dense(s)
}

pub fn d_ds(spec: &HamiltonianSpec) -> Result<Mat<C64>> {
    spec.d_ds()
}
