//! Closed-system evolution `i d psi/dt = H(t/T) psi` from the uniform
//! superposition, success probabilities, and run-time calibration.

use num_complex::Complex64 as C64;

use crate::ec3::Ec3Instance;
use crate::error::{Error, Result};
use crate::integrator::{integrate, OdeSystem, StepControl};
use crate::operators::HamiltonianSpec;
use crate::spectral::eigensystem;
use crate::state::StateVector;
use crate::table::{Cell, Table};

/// Hard limit on `| ||psi|| - 1 |` during a run.
pub const NORM_DRIFT_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Sample the trajectory whenever this much time has elapsed.
    pub record_stride: Option<f64>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_steps: 20_000_000,
            record_stride: None,
        }
    }
}

impl EvolutionConfig {
    /// Relative tolerance `tol`, absolute tolerance `tol / 100`.
    pub fn with_tol(tol: f64) -> Self {
        EvolutionConfig {
            rel_tol: tol,
            abs_tol: tol * 1e-2,
            ..Default::default()
        }
    }

    pub(crate) fn step_control(&self) -> Result<StepControl> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Parameter("tolerances must be positive".into()));
        }
        Ok(StepControl {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_steps: self.max_steps,
            h0: None,
        })
    }
}

/// One trajectory sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub s: f64,
    /// Population of the instantaneous ground state; NaN above the dense cap.
    pub prob_ground: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub final_state: StateVector,
    pub success_probability: f64,
    /// Largest `| ||psi|| - 1 |` seen at accepted steps.
    pub norm_drift: f64,
    pub steps_taken: usize,
    pub steps_rejected: usize,
    pub trajectory: Option<Vec<TrajectoryRow>>,
}

struct Schrodinger<'a> {
    spec: &'a HamiltonianSpec,
    run_time: f64,
    scratch: Vec<C64>,
    norm_drift: f64,
    stride: Option<f64>,
    next_sample: f64,
    trajectory: Vec<TrajectoryRow>,
}

impl Schrodinger<'_> {
    fn sample(&mut self, t: f64, y: &[C64], norm: f64) -> Result<()> {
        let s = (t / self.run_time).clamp(0.0, 1.0);
        let prob_ground = if self.spec.n() <= self.spec.dense_cap() {
            let eig = eigensystem(&self.spec.dense(s)?)?;
            let amp: C64 = (0..y.len()).map(|i| eig.states[(i, 0)].conj() * y[i]).sum();
            amp.norm_sqr()
        } else {
            f64::NAN
        };
        self.trajectory.push(TrajectoryRow {
            t,
            s,
            prob_ground,
            norm,
        });
        Ok(())
    }
}

impl OdeSystem for Schrodinger<'_> {
    fn rhs(&mut self, t: f64, y: &[C64], dy: &mut [C64]) -> Result<()> {
        let s = (t / self.run_time).clamp(0.0, 1.0);
        self.spec.apply_into(s, y, &mut self.scratch)?;
        for (d, h) in dy.iter_mut().zip(&self.scratch) {
            *d = C64::new(h.im, -h.re);
        }
        Ok(())
    }

    fn accept(&mut self, t: f64, y: &mut [C64]) -> Result<bool> {
        let norm = y.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let drift = (norm - 1.0).abs();
        self.norm_drift = self.norm_drift.max(drift);
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::NormDrift { drift, t });
        }
        if let Some(stride) = self.stride {
            if t >= self.next_sample || t >= self.run_time {
                self.sample(t, y, norm)?;
                while self.next_sample <= t {
                    self.next_sample += stride;
                }
            }
        }
        Ok(false)
    }
}

/// Total probability on the minimizers of `h`; for a unique-solution
/// instance this is `|<z*|psi>|^2`.
pub(crate) fn ground_probability(spec: &HamiltonianSpec, amps: &[C64]) -> f64 {
    spec.problem()
        .ground_indices()
        .iter()
        .map(|&z| amps[z].norm_sqr())
        .sum()
}

/// Integrates from the uniform superposition over `[0, T]` with
/// `H(t) = H(s = t/T)` including any perturbation in `spec`.
pub fn evolve(spec: &HamiltonianSpec, run_time: f64, cfg: &EvolutionConfig) -> Result<EvolutionResult> {
    if !(run_time > 0.0 && run_time.is_finite()) {
        return Err(Error::Parameter(format!("run time must be positive, got {run_time}")));
    }
    let ctl = cfg.step_control()?;
    let mut y = StateVector::uniform(spec.n()).into_amplitudes();
    let stride = match cfg.record_stride {
        Some(s) if s > 0.0 => Some(s),
        Some(s) => return Err(Error::Parameter(format!("record stride must be positive, got {s}"))),
        None => None,
    };
    let mut sys = Schrodinger {
        spec,
        run_time,
        scratch: vec![C64::new(0.0, 0.0); y.len()],
        norm_drift: 0.0,
        stride,
        next_sample: stride.unwrap_or(0.0),
        trajectory: Vec::new(),
    };
    if stride.is_some() {
        sys.sample(0.0, &y, 1.0)?;
    }
    let stats = integrate(&mut sys, &mut y, 0.0, run_time, &ctl)?;
    let success_probability = ground_probability(spec, &y);
    Ok(EvolutionResult {
        success_probability,
        norm_drift: sys.norm_drift,
        steps_taken: stats.steps_taken,
        steps_rejected: stats.steps_rejected,
        trajectory: stride.map(|_| sys.trajectory),
        final_state: StateVector::new(y)?,
    })
}

/// `|<z*|psi>|^2` for the instance's recorded satisfying assignment.
pub fn success_probability(psi: &StateVector, inst: &Ec3Instance) -> Result<f64> {
    let z = inst.solution().ok_or(Error::NoUniqueSolution)?;
    if psi.dim() != inst.dim() {
        return Err(Error::Dimension {
            expected: inst.dim(),
            got: psi.dim(),
        });
    }
    Ok(psi.probability(z.value() as usize))
}

/// CSV with header `t,s,prob_ground,norm`.
pub fn trajectory_table(rows: &[TrajectoryRow]) -> Table {
    let mut t = Table::new(["t", "s", "prob_ground", "norm"]);
    for r in rows {
        t.push(vec![
            Cell::Float(r.t),
            Cell::Float(r.s),
            Cell::Float(r.prob_ground),
            Cell::Float(r.norm),
        ]);
    }
    t
}

/// Lower and upper ends of the run-time search.
pub const RUNTIME_SEARCH_RANGE: (f64, f64) = (0.1, 1e4);

/// A run time and the success probability it achieves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub run_time: f64,
    pub success_probability: f64,
}

/// Finds a run time with `|Prob(T) - target| <= tol` on the unperturbed
/// problem. `T` is stepped geometrically by `sqrt(2)` from 0.1 until the
/// probability first reaches `target`; the first bracketing interval is then
/// refined by an Illinois false-position search.
pub fn find_runtime(
    spec: &HamiltonianSpec,
    target: f64,
    tol: f64,
    cfg: &EvolutionConfig,
) -> Result<Calibration> {
    if spec.perturbation().is_some() {
        return Err(Error::Perturbed);
    }
    let floor = 1.0 / spec.dim() as f64;
    if !(target > floor && target < 0.99) {
        return Err(Error::Parameter(format!(
            "target probability {target} must lie in ({floor}, 0.99)"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter("tolerance must be positive".into()));
    }
    let prob = |t: f64| evolve(spec, t, cfg).map(|r| r.success_probability);
    let (lo_t, hi_t) = RUNTIME_SEARCH_RANGE;

    let mut prev = (0.0, floor);
    let mut t = lo_t;
    let mut bracket = None;
    while t <= hi_t * (1.0 + 1e-12) {
        let p = prob(t)?;
        if (p - target).abs() <= tol {
            return Ok(Calibration {
                run_time: t,
                success_probability: p,
            });
        }
        if p > target {
            bracket = Some((prev, (t, p)));
            break;
        }
        prev = (t, p);
        t *= std::f64::consts::SQRT_2;
    }
    let Some(((mut a, mut fa), (mut b, mut fb))) = bracket else {
        return Err(Error::NoCrossing {
            target,
            lo: lo_t,
            hi: hi_t,
        });
    };
    fa -= target;
    fb -= target;
    let mut side = 0i8;
    for _ in 0..100 {
        let c = (a * fb - b * fa) / (fb - fa);
        let c = if c > a && c < b { c } else { 0.5 * (a + b) };
        let pc = prob(c)?;
        let fc = pc - target;
        if fc.abs() <= tol || (b - a) < 1e-9 * b {
            return Ok(Calibration {
                run_time: c,
                success_probability: pc,
            });
        }
        if fc < 0.0 {
            a = c;
            fa = fc;
            if side == -1 {
                fb /= 2.0;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa /= 2.0;
            }
            side = 1;
        }
    }
    Err(Error::NoCrossing {
        target,
        lo: lo_t,
        hi: hi_t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ec3::generate_unique;

    #[test]
    fn success_probability_basics() {
        let inst = generate_unique(4, 0).unwrap();
        let z = inst.solution().unwrap().value() as usize;
        let at = StateVector::basis(4, z).unwrap();
        assert_eq!(success_probability(&at, &inst).unwrap(), 1.0);
        let uni = StateVector::uniform(4);
        assert!((success_probability(&uni, &inst).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        let other = StateVector::basis(4, (z + 1) % 16).unwrap();
        assert_eq!(success_probability(&other, &inst).unwrap(), 0.0);
        let bare = crate::ec3::Ec3Instance::new(4, inst.clauses().to_vec()).unwrap();
        assert_eq!(success_probability(&uni, &bare), Err(Error::NoUniqueSolution));
    }

    #[test]
    fn tiny_run_time_keeps_initial_state() {
        let inst = generate_unique(4, 0).unwrap();
        let spec = HamiltonianSpec::from_instance(&inst).unwrap();
        let r = evolve(&spec, 1e-3, &EvolutionConfig::default()).unwrap();
        assert!((r.success_probability - 1.0 / 16.0).abs() < 1e-3);
        assert!(r.norm_drift < 1e-6);
    }

    #[test]
    fn long_run_time_is_adiabatic() {
        let inst = generate_unique(4, 0).unwrap();
        let spec = HamiltonianSpec::from_instance(&inst).unwrap();
        let gap = crate::spectral::min_gap(&spec, 201).unwrap();
        let t = 100.0 * gap.adiabatic_scale();
        let r = evolve(&spec, t, &EvolutionConfig::default()).unwrap();
        assert!(r.success_probability >= 0.9, "{}", r.success_probability);
    }

    #[test]
    fn trajectory_sampling() {
        let inst = generate_unique(4, 0).unwrap();
        let spec = HamiltonianSpec::from_instance(&inst).unwrap();
        let cfg = EvolutionConfig {
            record_stride: Some(1.0),
            ..Default::default()
        };
        let r = evolve(&spec, 10.0, &cfg).unwrap();
        let traj = r.trajectory.unwrap();
        assert!(traj.len() >= 10);
        assert_eq!(traj[0].t, 0.0);
        assert!((traj[0].prob_ground - 1.0).abs() < 1e-10);
        assert_eq!(traj.last().unwrap().t, 10.0);
        assert!(traj.windows(2).all(|w| w[1].t > w[0].t));
        assert!(trajectory_table(&traj).to_csv().starts_with("t,s,prob_ground,norm\n"));
    }

    #[test]
    fn tolerance_convergence() {
        let inst = generate_unique(5, 3).unwrap();
        let spec = HamiltonianSpec::from_instance(&inst).unwrap();
        let a = evolve(&spec, 8.0, &EvolutionConfig::with_tol(1e-8)).unwrap();
        let b = evolve(&spec, 8.0, &EvolutionConfig::with_tol(5e-9)).unwrap();
        assert!((a.success_probability - b.success_probability).abs() <= 1e-6);
    }

    #[test]
    fn runtime_search() {
        let inst = generate_unique(5, 1).unwrap();
        let spec = HamiltonianSpec::from_instance(&inst).unwrap();
        let cfg = EvolutionConfig::default();
        let cal = find_runtime(&spec, 0.5, 0.02, &cfg).unwrap();
        let p = evolve(&spec, cal.run_time, &cfg).unwrap().success_probability;
        assert!((p - 0.5).abs() <= 0.02);
        assert!(find_runtime(&spec, 1.0 / 64.0, 0.02, &cfg).is_err());
        assert!(evolve(&spec, 0.0, &cfg).is_err());
    }
}
