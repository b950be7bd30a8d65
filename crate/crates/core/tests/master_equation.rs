use adiaq::ec3::{Clause, Ec3Instance};
use adiaq::evolution::{evolve, EvolutionConfig};
use adiaq::open_system::{
    davies_rhs, evolve_master, gibbs_of, gibbs_state, relax_at, BathParams, DensityMatrix,
};
use adiaq::spectral::eigensystem;
use adiaq::{generate_unique, HamiltonianSpec, StateVector};

/// Unique-solution instances need four bits, so `n = 3` uses one clause with
/// three satisfying assignments; success then counts all of them.
fn three_bit_spec() -> HamiltonianSpec {
    let inst = Ec3Instance::new(3, vec![Clause::new(0, 1, 2).unwrap()]).unwrap();
    HamiltonianSpec::from_instance(&inst).unwrap()
}

#[test]
fn closed_limit_matches_pure_evolution() {
    let cfg = EvolutionConfig::with_tol(1e-9);
    let bath = BathParams::new(0.0, 1.0).unwrap();
    let spec = three_bit_spec();
    for t in [2.0, 9.0] {
        let mixed = adiaq::open_system::evolve_master_spec(&spec, t, &bath, &cfg).unwrap();
        let pure = evolve(&spec, t, &cfg).unwrap();
        assert!((mixed.success_probability - pure.success_probability).abs() < 1e-4);
        let want = DensityMatrix::pure(&pure.final_state);
        assert!(mixed.rho.trace_distance(&want).unwrap() < 1e-4);
    }
}

#[test]
fn bookkeeping_stays_tight() {
    let inst = generate_unique(4, 6).unwrap();
    let bath = BathParams::from_temperature(0.1, 1.0).unwrap();
    let r = evolve_master(&inst, 20.0, &bath, &EvolutionConfig::default()).unwrap();
    assert!(r.trace_error < 1e-6, "trace error {}", r.trace_error);
    assert!(r.min_eigenvalue > -1e-6, "min eigenvalue {}", r.min_eigenvalue);
    assert!(r.max_symmetrization < 1e-9);
    assert!(r.rho.hermiticity_error() < 1e-8);
    assert!((0.0..=1.0 + 1e-6).contains(&r.success_probability));
}

#[test]
fn relaxes_to_gibbs_mid_sweep() {
    let inst = generate_unique(4, 1).unwrap();
    let spec = HamiltonianSpec::from_instance(&inst).unwrap();
    let eig = eigensystem(&spec.dense(0.5).unwrap()).unwrap();
    let rho0 = DensityMatrix::pure(&StateVector::uniform(4));
    for temp in [0.5, 2.0] {
        let bath = BathParams::from_temperature(0.1, temp).unwrap();
        let r = relax_at(&spec, 0.5, &rho0, 300.0, &bath, &EvolutionConfig::default()).unwrap();
        let gibbs = gibbs_of(&eig, bath.beta);
        let dist = r.rho.trace_distance(&gibbs).unwrap();
        assert!(dist < 1e-3, "temperature {temp}: distance {dist}");
    }
}

#[test]
fn problem_gibbs_state_is_stationary_at_the_end_point() {
    let inst = generate_unique(4, 1).unwrap();
    let spec = HamiltonianSpec::from_instance(&inst).unwrap();
    for temp in [0.1, 1.0, 10.0] {
        let bath = BathParams::from_temperature(0.1, temp).unwrap();
        let rho = gibbs_state(&inst, bath.beta).unwrap();
        let d = davies_rhs(&rho, &spec, 1.0, &bath).unwrap();
        let worst = (0..16)
            .flat_map(|i| (0..16).map(move |j| (i, j)))
            .map(|(i, j)| d[(i, j)].norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-10, "temperature {temp}: {worst}");
    }
}

#[test]
fn cold_bath_beats_hot_bath() {
    let inst = generate_unique(4, 3).unwrap();
    let cfg = EvolutionConfig::default();
    let cold = BathParams::from_temperature(0.1, 0.1).unwrap();
    let hot = BathParams::from_temperature(0.1, 10.0).unwrap();
    let pc = evolve_master(&inst, 60.0, &cold, &cfg).unwrap().success_probability;
    let ph = evolve_master(&inst, 60.0, &hot, &cfg).unwrap().success_probability;
    assert!(pc > ph + 0.2, "cold {pc} hot {ph}");
}
