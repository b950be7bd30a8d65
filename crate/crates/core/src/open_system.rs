//! Davies master equation for spins weakly coupled to a thermal photon bath.
//!
//! At each instant the generator is built from the eigensystem `{w_a, |a>}` of
//! the current system Hamiltonian:
//!
//! ```text
//! drho/dt = -i[H, rho]
//!           - sum_{i,a,b} [ N_ba |g_ba|^2 <a|s-|b><b|s+|a>
//!                         + (N_ab + 1) |g_ab|^2 <b|s-|a><a|s+|b> ]
//!             { P_a rho + rho P_a - 2 |b><a| rho |a><b| }
//! ```
//!
//! with `N_ba = 1 / (exp(beta (w_b - w_a)) - 1)`, `g_ba = lambda g(w_b - w_a)`
//! for `w_b > w_a` and zero otherwise, and `s+- = (sigma_x +- i sigma_y) / 2`.

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::ec3::Ec3Instance;
use crate::error::{Error, Result};
use crate::evolution::EvolutionConfig;
use crate::integrator::{integrate, OdeSystem};
use crate::operators::HamiltonianSpec;
use crate::spectral::{eigensystem, eigenvalues, EigenSystem};
use crate::state::StateVector;
use crate::table::Table;

/// Largest bit count accepted by the master-equation solver.
pub const MAX_MASTER_BITS: usize = 4;
/// Transition frequencies below this are treated as degenerate.
pub const SPACING_CUTOFF: f64 = 1e-9;
/// Runs abort when the density matrix develops an eigenvalue below this.
pub const POSITIVITY_LIMIT: f64 = -1e-4;

const ZERO: C64 = C64::new(0.0, 0.0);

/// A density matrix on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: Mat<C64>,
}

impl DensityMatrix {
    pub fn new(rho: Mat<C64>) -> Result<Self> {
        if rho.nrows() != rho.ncols() || !rho.nrows().is_power_of_two() {
            return Err(Error::Dimension {
                expected: rho.nrows(),
                got: rho.ncols(),
            });
        }
        Ok(DensityMatrix { rho })
    }

    pub fn pure(psi: &StateVector) -> Self {
        let a = psi.amplitudes();
        DensityMatrix {
            rho: Mat::from_fn(a.len(), a.len(), |i, j| a[i] * a[j].conj()),
        }
    }

    pub fn matrix(&self) -> &Mat<C64> {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.rho[(i, i)]).sum()
    }

    /// `max |rho - rho^dagger|` entrywise.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..i {
                worst = worst.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
            worst = worst.max(self.rho[(i, i)].im.abs());
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let h = hermitian_part(&self.rho);
        Ok(eigenvalues(&h)?[0])
    }

    /// `<z|rho|z>`.
    pub fn population(&self, z: usize) -> f64 {
        self.rho[(z, z)].re
    }

    /// `1/2 || rho - sigma ||_1`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        let diff = Mat::from_fn(self.dim(), self.dim(), |i, j| {
            self.rho[(i, j)] - other.rho[(i, j)]
        });
        let ev = eigenvalues(&hermitian_part(&diff))?;
        Ok(0.5 * ev.iter().map(|e| e.abs()).sum::<f64>())
    }
}

fn hermitian_part(m: &Mat<C64>) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// Spectral function of the bath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectralFunction {
    /// `g(w) = 1` for `w >= 0`, zero otherwise.
    #[default]
    Flat,
}

impl SpectralFunction {
    pub fn g(&self, omega: f64) -> f64 {
        match self {
            SpectralFunction::Flat => {
                if omega >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathParams {
    pub lambda_sq: f64,
    /// Inverse temperature, `k_B = 1`.
    pub beta: f64,
    pub spectral: SpectralFunction,
}

impl BathParams {
    pub fn new(lambda_sq: f64, beta: f64) -> Result<Self> {
        if !(lambda_sq >= 0.0 && lambda_sq.is_finite()) {
            return Err(Error::Parameter(format!("coupling {lambda_sq} must be >= 0")));
        }
        if !(beta > 0.0) {
            return Err(Error::Parameter(format!("inverse temperature {beta} must be > 0")));
        }
        Ok(BathParams {
            lambda_sq,
            beta,
            spectral: SpectralFunction::Flat,
        })
    }

    pub fn from_temperature(lambda_sq: f64, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::Parameter(format!("temperature {temperature} must be > 0")));
        }
        Self::new(lambda_sq, 1.0 / temperature)
    }

    pub fn temperature(&self) -> f64 {
        1.0 / self.beta
    }
}

/// Bose-Einstein occupation `1 / (exp(beta w) - 1)` for `w > 0`.
pub fn bose_factor(beta: f64, omega: f64) -> f64 {
    1.0 / (beta * omega).exp_m1()
}

/// Davies transition coefficients for one eigensystem.
#[derive(Debug, Clone)]
pub struct DaviesRates {
    /// `coeff[(a, b)]`: the bracketed sum over spins for the pair `(a, b)`,
    /// moving population from `a` to `b`.
    pub coeff: Mat<f64>,
    /// `sum_i |<a|s-^(i)|b>|^2`.
    pub lowering_sq: Mat<f64>,
    /// Pairs with a needed rate whose spacing fell below [`SPACING_CUTOFF`].
    pub degenerate_pairs: usize,
}

impl DaviesRates {
    pub fn new(eig: &EigenSystem, n: usize, bath: &BathParams) -> Self {
        let d = eig.dim();
        let v = &eig.states;
        let mut lowering_sq = Mat::<f64>::zeros(d, d);
        let mut sv = Mat::<C64>::zeros(d, d);
        for i in 0..n {
            let bit = 1usize << i;
            // s-^(i) maps |..0_i..> to |..1_i..>.
            for row in 0..d {
                for b in 0..d {
                    sv[(row, b)] = if row & bit != 0 { v[(row ^ bit, b)] } else { ZERO };
                }
            }
            let m = v.adjoint() * &sv;
            for a in 0..d {
                for b in 0..d {
                    lowering_sq[(a, b)] += m[(a, b)].norm_sqr();
                }
            }
        }

        let w = &eig.energies;
        let mut coeff = Mat::<f64>::zeros(d, d);
        let mut degenerate_pairs = 0;
        for a in 0..d {
            for b in 0..d {
                if a == b {
                    continue;
                }
                let gap = w[b] - w[a];
                if gap.abs() < SPACING_CUTOFF {
                    if lowering_sq[(a, b)] > 1e-14 || lowering_sq[(b, a)] > 1e-14 {
                        degenerate_pairs += 1;
                    }
                    continue;
                }
                coeff[(a, b)] = if gap > 0.0 {
                    let g = bath.spectral.g(gap);
                    bose_factor(bath.beta, gap) * bath.lambda_sq * g * g * lowering_sq[(a, b)]
                } else {
                    let g = bath.spectral.g(-gap);
                    (bose_factor(bath.beta, -gap) + 1.0)
                        * bath.lambda_sq
                        * g
                        * g
                        * lowering_sq[(b, a)]
                };
            }
        }
        DaviesRates {
            coeff,
            lowering_sq,
            degenerate_pairs,
        }
    }
}

/// Dissipative part of the generator in the computational basis.
pub fn dissipator(rho: &Mat<C64>, eig: &EigenSystem, rates: &DaviesRates) -> Mat<C64> {
    let d = eig.dim();
    let v = &eig.states;
    let rt = v.adjoint() * rho * v;
    let out_rate: Vec<f64> = (0..d).map(|a| (0..d).map(|b| rates.coeff[(a, b)]).sum()).collect();
    let gain: Vec<f64> = (0..d)
        .map(|b| (0..d).map(|a| rates.coeff[(a, b)] * rt[(a, a)].re).sum())
        .collect();
    let dt = Mat::from_fn(d, d, |x, y| {
        let mut val = -rt[(x, y)] * (out_rate[x] + out_rate[y]);
        if x == y {
            val += 2.0 * gain[x];
        }
        val
    });
    v * dt * v.adjoint()
}

fn commutator_term(h: &Mat<C64>, rho: &Mat<C64>) -> Mat<C64> {
    let hr = h * rho;
    let rh = rho * h;
    let d = h.nrows();
    // -i (H rho - rho H)
    Mat::from_fn(d, d, |i, j| {
        let c = hr[(i, j)] - rh[(i, j)];
        C64::new(c.im, -c.re)
    })
}

/// Full generator given a precomputed eigensystem of `h`.
pub fn davies_rhs_with(
    rho: &Mat<C64>,
    h: &Mat<C64>,
    eig: &EigenSystem,
    n: usize,
    bath: &BathParams,
) -> (Mat<C64>, usize) {
    if bath.lambda_sq == 0.0 {
        return (commutator_term(h, rho), 0);
    }
    let rates = DaviesRates::new(eig, n, bath);
    (generator(rho, h, eig, Some(&rates)), rates.degenerate_pairs)
}

fn generator(rho: &Mat<C64>, h: &Mat<C64>, eig: &EigenSystem, rates: Option<&DaviesRates>) -> Mat<C64> {
    let mut out = commutator_term(h, rho);
    if let Some(rates) = rates {
        out += dissipator(rho, eig, rates);
    }
    out
}

/// `drho/dt` at fixed `s` for an unperturbed spec.
pub fn davies_rhs(
    rho: &DensityMatrix,
    spec: &HamiltonianSpec,
    s: f64,
    bath: &BathParams,
) -> Result<Mat<C64>> {
    if spec.perturbation().is_some() {
        return Err(Error::Perturbed);
    }
    if rho.dim() != spec.dim() {
        return Err(Error::Dimension {
            expected: spec.dim(),
            got: rho.dim(),
        });
    }
    let h = spec.dense(s)?;
    if bath.lambda_sq == 0.0 {
        return Ok(commutator_term(&h, rho.matrix()));
    }
    let eig = eigensystem(&h)?;
    Ok(davies_rhs_with(rho.matrix(), &h, &eig, spec.n(), bath).0)
}

/// Gibbs state `exp(-beta H) / Z` of a diagonalized Hamiltonian.
pub fn gibbs_of(eig: &EigenSystem, beta: f64) -> DensityMatrix {
    let e0 = eig.energies[0];
    let w: Vec<f64> = eig.energies.iter().map(|e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    let d = eig.dim();
    let v = &eig.states;
    let rho = Mat::from_fn(d, d, |i, j| {
        (0..d).map(|a| v[(i, a)] * v[(j, a)].conj() * (w[a] / z)).sum()
    });
    DensityMatrix { rho }
}

/// Gibbs state of the problem Hamiltonian, built on the diagonal.
pub fn gibbs_state(inst: &Ec3Instance, beta: f64) -> Result<DensityMatrix> {
    if !(beta > 0.0) {
        return Err(Error::Parameter(format!("inverse temperature {beta} must be > 0")));
    }
    let h = inst.violation_table();
    let hmin = h.iter().copied().min().unwrap_or(0);
    let w: Vec<f64> = h.iter().map(|&x| (-beta * (x - hmin) as f64).exp()).collect();
    let z: f64 = w.iter().sum();
    let d = h.len();
    let mut rho = Mat::<C64>::zeros(d, d);
    for i in 0..d {
        rho[(i, i)] = C64::new(w[i] / z, 0.0);
    }
    Ok(DensityMatrix { rho })
}

/// `<z*| rho_P |z*>`.
pub fn thermal_success(inst: &Ec3Instance, beta: f64) -> Result<f64> {
    let z = inst.solution().ok_or(Error::NoUniqueSolution)?;
    if !(beta > 0.0) {
        return Err(Error::Parameter(format!("inverse temperature {beta} must be > 0")));
    }
    let h = inst.violation_table();
    let hz = h[z.value() as usize];
    let part: f64 = h.iter().map(|&x| (-beta * (x as f64 - hz as f64)).exp()).sum();
    Ok(1.0 / part)
}

#[derive(Debug, Clone)]
pub struct MasterResult {
    pub rho: DensityMatrix,
    pub success_probability: f64,
    /// Largest `|Tr rho - 1|` at accepted steps.
    pub trace_error: f64,
    /// Smallest density-matrix eigenvalue at accepted steps.
    pub min_eigenvalue: f64,
    /// Largest Hermitian-symmetrization correction applied.
    pub max_symmetrization: f64,
    /// Generator evaluations that hit near-degenerate spacings.
    pub degeneracy_warnings: usize,
    pub steps_taken: usize,
    pub steps_rejected: usize,
}

#[derive(Clone, Copy)]
enum Schedule {
    Sweep { run_time: f64 },
    Fixed { s: f64 },
}

/// Generator pieces for a fixed `s`, computed once.
struct Frozen {
    h: Mat<C64>,
    eig: EigenSystem,
    rates: Option<DaviesRates>,
}

struct Master<'a> {
    spec: &'a HamiltonianSpec,
    bath: BathParams,
    schedule: Schedule,
    fixed: Option<Frozen>,
    d: usize,
    trace_error: f64,
    min_eigenvalue: f64,
    max_symmetrization: f64,
    degeneracy_warnings: usize,
}

fn unflatten(y: &[C64], d: usize) -> Mat<C64> {
    Mat::from_fn(d, d, |i, j| y[i + j * d])
}

impl OdeSystem for Master<'_> {
    fn rhs(&mut self, t: f64, y: &[C64], dy: &mut [C64]) -> Result<()> {
        let d = self.d;
        let rho = unflatten(y, d);
        let out = match (&self.fixed, self.schedule) {
            (Some(f), _) => (
                generator(&rho, &f.h, &f.eig, f.rates.as_ref()),
                f.rates.as_ref().map_or(0, |r| r.degenerate_pairs),
            ),
            (None, schedule) => {
                let s = match schedule {
                    Schedule::Sweep { run_time } => (t / run_time).clamp(0.0, 1.0),
                    Schedule::Fixed { s } => s,
                };
                let h = self.spec.dense(s)?;
                if self.bath.lambda_sq == 0.0 {
                    (commutator_term(&h, &rho), 0)
                } else {
                    let eig = eigensystem(&h)?;
                    davies_rhs_with(&rho, &h, &eig, self.spec.n(), &self.bath)
                }
            }
        };
        let (m, warnings) = out;
        self.degeneracy_warnings += usize::from(warnings > 0);
        for j in 0..d {
            for i in 0..d {
                dy[i + j * d] = m[(i, j)];
            }
        }
        Ok(())
    }

    fn accept(&mut self, t: f64, y: &mut [C64]) -> Result<bool> {
        let d = self.d;
        let mut fix = 0.0f64;
        for i in 0..d {
            for j in 0..i {
                let a = y[i + j * d];
                let b = y[j + i * d];
                let avg = (a + b.conj()) * 0.5;
                fix = fix.max((a - avg).norm());
                y[i + j * d] = avg;
                y[j + i * d] = avg.conj();
            }
            fix = fix.max(y[i + i * d].im.abs());
            y[i + i * d].im = 0.0;
        }
        self.max_symmetrization = self.max_symmetrization.max(fix);
        let trace: f64 = (0..d).map(|i| y[i + i * d].re).sum();
        self.trace_error = self.trace_error.max((trace - 1.0).abs());
        let min_eig = eigenvalues(&unflatten(y, d))?[0];
        self.min_eigenvalue = self.min_eigenvalue.min(min_eig);
        if min_eig < POSITIVITY_LIMIT {
            return Err(Error::Positivity { min_eig, t });
        }
        Ok(fix > 0.0)
    }
}

fn run_master(
    spec: &HamiltonianSpec,
    rho0: &DensityMatrix,
    duration: f64,
    schedule: Schedule,
    bath: &BathParams,
    cfg: &EvolutionConfig,
) -> Result<MasterResult> {
    if spec.n() > MAX_MASTER_BITS {
        return Err(Error::BitCount {
            n: spec.n(),
            min: 1,
            max: MAX_MASTER_BITS,
        });
    }
    if spec.perturbation().is_some() {
        return Err(Error::Perturbed);
    }
    if rho0.dim() != spec.dim() {
        return Err(Error::Dimension {
            expected: spec.dim(),
            got: rho0.dim(),
        });
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::Parameter(format!("run time must be positive, got {duration}")));
    }
    let ctl = cfg.step_control()?;
    let d = spec.dim();
    let fixed = match schedule {
        Schedule::Fixed { s } => {
            let h = spec.dense(s)?;
            let eig = eigensystem(&h)?;
            let rates = (bath.lambda_sq > 0.0).then(|| DaviesRates::new(&eig, spec.n(), bath));
            Some(Frozen { h, eig, rates })
        }
        Schedule::Sweep { .. } => None,
    };
    let mut sys = Master {
        spec,
        bath: *bath,
        schedule,
        fixed,
        d,
        trace_error: 0.0,
        min_eigenvalue: f64::INFINITY,
        max_symmetrization: 0.0,
        degeneracy_warnings: 0,
    };
    let mut y: Vec<C64> = (0..d * d).map(|k| rho0.rho[(k % d, k / d)]).collect();
    let stats = integrate(&mut sys, &mut y, 0.0, duration, &ctl)?;
    let rho = DensityMatrix {
        rho: unflatten(&y, d),
    };
    let success_probability = spec
        .problem()
        .ground_indices()
        .iter()
        .map(|&z| rho.population(z))
        .sum();
    Ok(MasterResult {
        rho,
        success_probability,
        trace_error: sys.trace_error,
        min_eigenvalue: sys.min_eigenvalue,
        max_symmetrization: sys.max_symmetrization,
        degeneracy_warnings: sys.degeneracy_warnings,
        steps_taken: stats.steps_taken,
        steps_rejected: stats.steps_rejected,
    })
}

/// Integrates the master equation over `[0, T]` along the interpolation,
/// starting from the pure uniform superposition.
pub fn evolve_master_spec(
    spec: &HamiltonianSpec,
    run_time: f64,
    bath: &BathParams,
    cfg: &EvolutionConfig,
) -> Result<MasterResult> {
    let rho0 = DensityMatrix::pure(&StateVector::uniform(spec.n()));
    run_master(spec, &rho0, run_time, Schedule::Sweep { run_time }, bath, cfg)
}

pub fn evolve_master(
    inst: &Ec3Instance,
    run_time: f64,
    bath: &BathParams,
    cfg: &EvolutionConfig,
) -> Result<MasterResult> {
    if inst.n() > MAX_MASTER_BITS {
        return Err(Error::BitCount {
            n: inst.n(),
            min: 1,
            max: MAX_MASTER_BITS,
        });
    }
    evolve_master_spec(&HamiltonianSpec::from_instance(inst)?, run_time, bath, cfg)
}

/// Evolves `rho0` under the generator frozen at `s` for `duration`.
pub fn relax_at(
    spec: &HamiltonianSpec,
    s: f64,
    rho0: &DensityMatrix,
    duration: f64,
    bath: &BathParams,
    cfg: &EvolutionConfig,
) -> Result<MasterResult> {
    run_master(spec, rho0, duration, Schedule::Fixed { s }, bath, cfg)
}

/// CSV header for decoherence sweeps.
pub fn decoherence_table() -> Table {
    Table::new([
        "T",
        "temperature",
        "lambda_sq",
        "success_prob",
        "thermal_success",
        "trace_err",
        "min_eig",
    ])
}
