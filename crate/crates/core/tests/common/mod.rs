//! Oracles shared by the integration and acceptance tests. They avoid the
//! crate's own solvers so that agreement is meaningful.

#![allow(dead_code)]

use adiaq::{Ec3Instance, HamiltonianSpec};
use faer::Mat;
use num_complex::Complex64 as C64;

/// Counts satisfying assignments by checking every clause directly.
pub fn brute_force_count(inst: &Ec3Instance) -> u64 {
    let mut count = 0;
    for z in 0u64..(1u64 << inst.n()) {
        let ok = inst.clauses().iter().all(|c| {
            let ones = c.indices().iter().filter(|&&i| (z >> i) & 1 == 1).count();
            ones == 1
        });
        if ok {
            count += 1;
        }
    }
    count
}

/// `exp(-i H dt)` for Hermitian `h`, through faer's eigendecomposition.
pub fn expm_hermitian(h: &Mat<C64>, dt: f64) -> Mat<C64> {
    let d = h.nrows();
    let eig = h.self_adjoint_eigen(faer::Side::Lower).expect("eigendecomposition");
    let u = eig.U();
    let w = eig.S().column_vector();
    let phased = Mat::from_fn(d, d, |i, a| u[(i, a)] * C64::from_polar(1.0, -w[a].re * dt));
    &phased * u.adjoint()
}

/// Piecewise-constant propagation with the Hamiltonian frozen at each
/// slice midpoint. Returns the final state from the uniform superposition.
pub fn piecewise_propagate(spec: &HamiltonianSpec, run_time: f64, slices: usize) -> Vec<C64> {
    let d = spec.dim();
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut psi = Mat::<C64>::from_fn(d, 1, |_, _| amp);
    let dt = run_time / slices as f64;
    for k in 0..slices {
        let s = (k as f64 + 0.5) / slices as f64;
        let h = spec.dense(s).expect("dense");
        psi = expm_hermitian(&h, dt) * &psi;
    }
    (0..d).map(|i| psi[(i, 0)]).collect()
}

/// `1 - |<a|b>|^2` for unit vectors.
pub fn infidelity(a: &[C64], b: &[C64]) -> f64 {
    let ov: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    1.0 - ov.norm_sqr()
}

/// Average ranks, ties sharing the mean rank.
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0;
        for &k in &idx[i..=j] {
            r[k] = mean;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}
