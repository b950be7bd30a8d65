//! Adaptive Dormand-Prince 5(4) integrator for complex linear systems.
//!
//! Shared by the Schrödinger and master-equation solvers. Step control is a
//! PI controller on the embedded fourth-order error estimate.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MAX_GROWTH: f64 = 5.0;
const MAX_SHRINK: f64 = 0.1;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;

/// Right-hand side `dy/dt = f(t, y)` plus an accepted-step hook.
pub trait OdeSystem {
    fn rhs(&mut self, t: f64, y: &[C64], dy: &mut [C64]) -> Result<()>;

    /// Called after every accepted step. May modify `y`; returns `true` if it
    /// did, which invalidates the first-same-as-last stage.
    fn accept(&mut self, _t: f64, _y: &mut [C64]) -> Result<bool> {
        Ok(false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Initial step; `None` uses a thousandth of the interval.
    pub h0: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub steps_taken: usize,
    pub steps_rejected: usize,
    pub rhs_evals: usize,
}

fn axpy(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..out.len() {
        let mut acc = C64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        out[i] = y[i] + acc * h;
    }
}

/// Integrates `y` in place from `t0` to `t1`.
pub fn integrate<S: OdeSystem>(
    sys: &mut S,
    y: &mut [C64],
    t0: f64,
    t1: f64,
    ctl: &StepControl,
) -> Result<IntegrationStats> {
    if !(t1 > t0) {
        return Err(Error::Parameter(format!("empty interval [{t0}, {t1}]")));
    }
    if !(ctl.rel_tol > 0.0 && ctl.abs_tol > 0.0) {
        return Err(Error::Parameter("tolerances must be positive".into()));
    }
    let n = y.len();
    let zero = C64::new(0.0, 0.0);
    let mut k = vec![vec![zero; n]; 7];
    let mut tmp = vec![zero; n];
    let mut ynew = vec![zero; n];

    let mut stats = IntegrationStats::default();
    let mut t = t0;
    let mut h = ctl.h0.unwrap_or((t1 - t0) / 1000.0).min(t1 - t0);
    let mut err_prev: f64 = 1e-4;
    let mut rejected_last = false;

    sys.rhs(t, y, &mut k[0])?;
    stats.rhs_evals += 1;

    while t < t1 {
        if stats.steps_taken + stats.steps_rejected >= ctl.max_steps {
            return Err(Error::MaxSteps(ctl.max_steps));
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow(t));
        }

        let (k1, rest) = k.split_at_mut(1);
        let k1 = &k1[0];
        let (k2, rest) = rest.split_at_mut(1);
        let k2 = &mut k2[0];
        let (k3, rest) = rest.split_at_mut(1);
        let k3 = &mut k3[0];
        let (k4, rest) = rest.split_at_mut(1);
        let k4 = &mut k4[0];
        let (k5, rest) = rest.split_at_mut(1);
        let k5 = &mut k5[0];
        let (k6, k7) = rest.split_at_mut(1);
        let k6 = &mut k6[0];
        let k7 = &mut k7[0];

        axpy(&mut tmp, y, h, &[(A21, k1)]);
        sys.rhs(t + C2 * h, &tmp, k2)?;
        axpy(&mut tmp, y, h, &[(A31, k1), (A32, k2)]);
        sys.rhs(t + C3 * h, &tmp, k3)?;
        axpy(&mut tmp, y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
        sys.rhs(t + C4 * h, &tmp, k4)?;
        axpy(&mut tmp, y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
        sys.rhs(t + C5 * h, &tmp, k5)?;
        axpy(&mut tmp, y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
        let t_end = if last { t1 } else { t + h };
        sys.rhs(t_end, &tmp, k6)?;
        axpy(&mut ynew, y, h, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
        sys.rhs(t_end, &ynew, k7)?;
        stats.rhs_evals += 6;

        let mut sq = 0.0;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let sc = ctl.abs_tol + ctl.rel_tol * y[i].norm().max(ynew[i].norm());
            sq += (e.norm() / sc).powi(2);
        }
        let err = (sq / n as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::Parameter("non-finite error estimate".into()));
        }

        if err <= 1.0 {
            stats.steps_taken += 1;
            t = t_end;
            y.copy_from_slice(&ynew);
            let modified = sys.accept(t, y)?;
            if modified {
                sys.rhs(t, y, &mut k[0])?;
                stats.rhs_evals += 1;
            } else {
                k.swap(0, 6);
            }
            let err = err.max(1e-10);
            let mut fac = SAFETY * err.powf(-ALPHA) * err_prev.powf(BETA);
            fac = fac.clamp(MAX_SHRINK, MAX_GROWTH);
            if rejected_last {
                fac = fac.min(1.0);
            }
            h *= fac;
            err_prev = err;
            rejected_last = false;
        } else {
            stats.steps_rejected += 1;
            let fac = (SAFETY * err.powf(-0.2)).max(MAX_SHRINK);
            h *= fac;
            rejected_last = true;
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rotation {
        omega: f64,
    }

    impl OdeSystem for Rotation {
        fn rhs(&mut self, _t: f64, y: &[C64], dy: &mut [C64]) -> Result<()> {
            dy[0] = y[0] * C64::new(0.0, -self.omega);
            Ok(())
        }
    }

    struct Decay;

    impl OdeSystem for Decay {
        fn rhs(&mut self, t: f64, y: &[C64], dy: &mut [C64]) -> Result<()> {
            dy[0] = -y[0] * (2.0 * t);
            Ok(())
        }
    }

    fn ctl(rel: f64) -> StepControl {
        StepControl {
            rel_tol: rel,
            abs_tol: rel * 1e-2,
            max_steps: 1_000_000,
            h0: None,
        }
    }

    #[test]
    fn phase_rotation() {
        let mut y = vec![C64::new(1.0, 0.0)];
        integrate(&mut Rotation { omega: 3.0 }, &mut y, 0.0, 10.0, &ctl(1e-10)).unwrap();
        let want = C64::new(0.0, -30.0).exp();
        assert!((y[0] - want).norm() < 1e-8);
    }

    #[test]
    fn time_dependent_decay() {
        let mut y = vec![C64::new(1.0, 0.0)];
        integrate(&mut Decay, &mut y, 0.0, 2.0, &ctl(1e-10)).unwrap();
        assert!((y[0].re - (-4f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn fifth_order_convergence() {
        // Fixed steps via a huge tolerance and tiny max growth would be
        // awkward; compare errors at two tolerances instead.
        let run = |rel| {
            let mut y = vec![C64::new(1.0, 0.0)];
            let st = integrate(&mut Rotation { omega: 1.0 }, &mut y, 0.0, 20.0, &ctl(rel)).unwrap();
            ((y[0] - C64::new(0.0, -20.0).exp()).norm(), st.steps_taken)
        };
        let (e1, n1) = run(1e-6);
        let (e2, n2) = run(1e-11);
        assert!(e2 < e1);
        assert!(n2 > n1);
        // Step count grows like tol^(-1/5).
        let ratio = n2 as f64 / n1 as f64;
        assert!(ratio > 5.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn max_steps_enforced() {
        let mut y = vec![C64::new(1.0, 0.0)];
        let mut c = ctl(1e-12);
        c.max_steps = 10;
        assert_eq!(
            integrate(&mut Rotation { omega: 50.0 }, &mut y, 0.0, 100.0, &c),
            Err(Error::MaxSteps(10))
        );
    }
}
