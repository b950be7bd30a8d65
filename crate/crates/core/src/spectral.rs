//! Dense Hermitian eigendecomposition, spectrum scans, minimum gap and the
//! transition matrix element, and ground-state overlap diagnostics.

use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operators::{HamiltonianSpec, PerturbationKind};
use crate::table::{Cell, Table};

/// Hermiticity tolerance on input matrices.
pub const HERMITIAN_TOL: f64 = 1e-8;
/// Gaps below this at interior `s` are flagged as crossings.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Levels closer than this are treated as one degenerate cluster.
const CLUSTER_TOL: f64 = 1e-8;
/// Default number of scan points in `[0, 1]`.
pub const DEFAULT_GRID_POINTS: usize = 201;
const GOLDEN_TOL: f64 = 1e-6;
/// Number of levels kept in each [`GapRow`].
pub const REPORT_LEVELS: usize = 4;

/// Ascending eigenvalues and the matching orthonormal eigenvectors
/// (column `a` belongs to `energies[a]`).
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    pub states: Mat<C64>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Column `a` as a vector.
    pub fn state(&self, a: usize) -> Vec<C64> {
        (0..self.dim()).map(|i| self.states[(i, a)]).collect()
    }

    /// `max_a ||H v_a - w_a v_a||`.
    pub fn max_residual(&self, h: &Mat<C64>) -> f64 {
        let d = self.dim();
        (0..d)
            .map(|a| {
                (0..d)
                    .map(|i| {
                        let hv: C64 = (0..d).map(|j| h[(i, j)] * self.states[(j, a)]).sum();
                        (hv - self.states[(i, a)] * self.energies[a]).norm_sqr()
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// `max |V^dagger V - I|` entrywise.
    pub fn orthonormality_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                let dot: C64 = (0..d)
                    .map(|i| self.states[(i, a)].conj() * self.states[(i, b)])
                    .sum();
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - want).norm());
            }
        }
        worst
    }
}

fn hermitian_deviation(h: &Mat<C64>) -> f64 {
    let d = h.nrows();
    let mut dev = 0.0f64;
    for i in 0..d {
        for j in 0..=i {
            dev = dev.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    dev
}

fn check_input(h: &Mat<C64>) -> Result<bool> {
    if h.nrows() != h.ncols() {
        return Err(Error::Dimension {
            expected: h.nrows(),
            got: h.ncols(),
        });
    }
    let dev = hermitian_deviation(h);
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let real = (0..h.ncols()).all(|j| (0..h.nrows()).all(|i| h[(i, j)].im == 0.0));
    Ok(real)
}

fn real_part(h: &Mat<C64>) -> Mat<f64> {
    Mat::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)].re)
}

/// Full decomposition with ascending energies. Each eigenvector is rephased
/// so that its largest-magnitude component is real and positive.
pub fn eigensystem(h: &Mat<C64>) -> Result<EigenSystem> {
    let real = check_input(h)?;
    let d = h.nrows();
    let (energies, mut states) = if real {
        let evd = real_part(h)
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::Convergence)?;
        let s = evd.S().column_vector();
        let u = evd.U();
        (
            (0..d).map(|i| s[i]).collect::<Vec<f64>>(),
            Mat::from_fn(d, d, |i, j| C64::new(u[(i, j)], 0.0)),
        )
    } else {
        let evd = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::Convergence)?;
        let s = evd.S().column_vector();
        let u = evd.U();
        (
            (0..d).map(|i| s[i].re).collect::<Vec<f64>>(),
            Mat::from_fn(d, d, |i, j| u[(i, j)]),
        )
    };
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::Convergence);
    }
    fix_gauge(&mut states);
    Ok(EigenSystem { energies, states })
}

fn fix_gauge(states: &mut Mat<C64>) {
    let d = states.nrows();
    for a in 0..states.ncols() {
        let mut best = 0;
        let mut best_mag = -1.0;
        for i in 0..d {
            let m = states[(i, a)].norm();
            if m > best_mag {
                best_mag = m;
                best = i;
            }
        }
        let pivot = states[(best, a)];
        if pivot.norm() == 0.0 {
            continue;
        }
        let phase = pivot.conj() / pivot.norm();
        for i in 0..d {
            states[(i, a)] *= phase;
        }
    }
}

/// Ascending eigenvalues only.
pub fn eigenvalues(h: &Mat<C64>) -> Result<Vec<f64>> {
    let real = check_input(h)?;
    let vals = if real {
        real_part(h)
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|_| Error::Convergence)?
    } else {
        h.self_adjoint_eigenvalues(Side::Lower)
            .map_err(|_| Error::Convergence)?
    };
    if vals.iter().any(|e| !e.is_finite()) {
        return Err(Error::Convergence);
    }
    Ok(vals)
}

/// One scan point: `s` and the lowest few energies.
#[derive(Debug, Clone, PartialEq)]
pub struct GapRow {
    pub s: f64,
    pub energies: Vec<f64>,
}

/// Minimum gap, its location, and the largest transition matrix element.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub delta: f64,
    pub s_star: f64,
    pub e_cal: f64,
    pub grid: Vec<GapRow>,
    /// Set when some interior gap fell below [`DEGENERACY_TOL`].
    pub degenerate: bool,
}

impl GapReport {
    /// The run-time scale `E / Delta^2`.
    pub fn adiabatic_scale(&self) -> f64 {
        self.e_cal / (self.delta * self.delta)
    }
}

fn gap_at(spec: &HamiltonianSpec, s: f64) -> Result<f64> {
    let e = eigenvalues(&spec.dense(s)?)?;
    Ok(e[1] - e[0])
}

/// `|<1,s| dH/ds |0,s>|`. When the first excited level is degenerate the norm
/// of the projection onto the whole level is used, which does not depend on
/// the basis chosen inside it.
fn transition_element(eig: &EigenSystem, dh: &Mat<C64>) -> f64 {
    let d = eig.dim();
    let ground = eig.state(0);
    let w: Vec<C64> = (0..d)
        .map(|i| (0..d).map(|j| dh[(i, j)] * ground[j]).sum())
        .collect();
    let e1 = eig.energies[1];
    let mut acc = 0.0;
    for a in 1..d {
        if eig.energies[a] - e1 > CLUSTER_TOL {
            break;
        }
        let amp: C64 = (0..d).map(|i| eig.states[(i, a)].conj() * w[i]).sum();
        acc += amp.norm_sqr();
    }
    acc.sqrt()
}

fn golden_min<F>(mut f: F, mut lo: f64, mut hi: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > GOLDEN_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Scans `s` uniformly over `[0, 1]`, then refines the three deepest coarse
/// local minima of `E1 - E0` by golden-section search. Includes the
/// perturbation when the spec carries one. The matrix element uses the
/// unperturbed derivative `H_P - H_B` and is maximized over the coarse grid.
pub fn min_gap(spec: &HamiltonianSpec, grid_points: usize) -> Result<GapReport> {
    if grid_points < 11 {
        return Err(Error::Parameter(format!(
            "min_gap needs at least 11 grid points, got {grid_points}"
        )));
    }
    let dh = spec.d_ds()?;
    let last = (grid_points - 1) as f64;
    let points: Vec<(GapRow, f64)> = (0..grid_points)
        .into_par_iter()
        .map(|k| {
            let s = k as f64 / last;
            let eig = eigensystem(&spec.dense(s)?)?;
            let keep = eig.dim().min(REPORT_LEVELS);
            let e = transition_element(&eig, &dh);
            Ok((
                GapRow {
                    s,
                    energies: eig.energies[..keep].to_vec(),
                },
                e,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let gaps: Vec<f64> = points
        .iter()
        .map(|(r, _)| r.energies[1] - r.energies[0])
        .collect();
    let e_cal = points.iter().map(|p| p.1).fold(0.0, f64::max);
    let grid: Vec<GapRow> = points.into_iter().map(|p| p.0).collect();

    let n = gaps.len();
    let mut minima: Vec<usize> = (0..n)
        .filter(|&k| {
            let left = k == 0 || gaps[k] <= gaps[k - 1];
            let right = k + 1 == n || gaps[k] <= gaps[k + 1];
            left && right
        })
        .collect();
    minima.sort_by(|&a, &b| gaps[a].total_cmp(&gaps[b]).then(a.cmp(&b)));
    minima.truncate(3);

    let interior = |s: f64| s > 0.0 && s < 1.0;
    let mut degenerate = grid
        .iter()
        .zip(&gaps)
        .any(|(r, &g)| interior(r.s) && g < DEGENERACY_TOL);

    let (mut best_k, mut delta) = (0, f64::INFINITY);
    for (k, &g) in gaps.iter().enumerate() {
        if g < delta {
            delta = g;
            best_k = k;
        }
    }
    let mut s_star = grid[best_k].s;
    for &k in &minima {
        let lo = grid[k.saturating_sub(1)].s;
        let hi = grid[(k + 1).min(n - 1)].s;
        let (s, g) = golden_min(|s| gap_at(spec, s), lo, hi)?;
        if interior(s) && g < DEGENERACY_TOL {
            degenerate = true;
        }
        if g < delta {
            delta = g;
            s_star = s;
        }
    }

    Ok(GapReport {
        delta,
        s_star,
        e_cal,
        grid,
        degenerate,
    })
}

/// Rows `(s, E0, ..., E_{levels-1})` over a uniform grid in `[0, 1]`.
pub fn spectrum_scan(spec: &HamiltonianSpec, grid_points: usize, levels: usize) -> Result<Vec<Vec<f64>>> {
    if levels == 0 || levels > spec.dim() {
        return Err(Error::Parameter(format!(
            "levels must lie in [1, {}], got {levels}",
            spec.dim()
        )));
    }
    if grid_points < 2 {
        return Err(Error::Parameter("spectrum scan needs at least 2 points".into()));
    }
    let last = (grid_points - 1) as f64;
    (0..grid_points)
        .into_par_iter()
        .map(|k| {
            let s = k as f64 / last;
            let e = eigenvalues(&spec.dense(s)?)?;
            let mut row = Vec::with_capacity(levels + 1);
            row.push(s);
            row.extend_from_slice(&e[..levels]);
            Ok(row)
        })
        .collect()
}

/// CSV form of a spectrum scan with header `s,E0,E1,...`.
pub fn spectrum_table(rows: &[Vec<f64>]) -> Table {
    let levels = rows.first().map_or(0, |r| r.len() - 1);
    let header = std::iter::once("s".to_string()).chain((0..levels).map(|a| format!("E{a}")));
    let mut t = Table::new(header);
    for r in rows {
        t.push(r.iter().map(|&x| Cell::Float(x)).collect());
    }
    t
}

/// Overlap of the ground state of `H_P` with the ground state of
/// `H_P + K1(1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapReport {
    pub overlap: f64,
    /// Set when the perturbed ground state is degenerate.
    pub degenerate: bool,
}

pub fn ground_overlap(spec: &HamiltonianSpec) -> Result<OverlapReport> {
    match spec.perturbation() {
        Some(p) if p.kind() == PerturbationKind::K1 => {}
        _ => {
            return Err(Error::Perturbation(
                "ground overlap needs a K1 perturbation".into(),
            ))
        }
    }
    let target = spec.problem().unique_ground().ok_or(Error::NoUniqueSolution)?;
    let eig = eigensystem(&spec.dense(1.0)?)?;
    Ok(OverlapReport {
        overlap: eig.states[(target, 0)].norm_sqr(),
        degenerate: eig.energies[1] - eig.energies[0] < DEGENERACY_TOL,
    })
}
