mod common;

use adiaq::evolution::{evolve, EvolutionConfig};
use adiaq::{generate_unique, HamiltonianSpec, Perturbation, PerturbationKind};

use common::{infidelity, piecewise_propagate};

#[test]
fn matches_piecewise_propagation() {
    let cfg = EvolutionConfig::with_tol(1e-9);
    for (seed, t) in [(0u64, 3.0), (1, 17.0), (2, 40.0)] {
        let inst = generate_unique(4, seed).unwrap();
        let spec = HamiltonianSpec::from_instance(&inst).unwrap();
        let got = evolve(&spec, t, &cfg).unwrap();
        let want = piecewise_propagate(&spec, t, 20_000);
        let err = infidelity(got.final_state.amplitudes(), &want);
        assert!(err < 1e-5, "seed {seed} T {t}: infidelity {err}");
        assert!(got.norm_drift < 1e-6);
    }
}

#[test]
fn perturbed_matches_piecewise_propagation() {
    let cfg = EvolutionConfig::with_tol(1e-9);
    let inst = generate_unique(4, 5).unwrap();
    for (kind, c) in [
        (PerturbationKind::K1, 0.7),
        (PerturbationKind::K2, -1.5),
        (PerturbationKind::K3, 6.0),
    ] {
        let p = Perturbation::from_seed(kind, c, 4, 11).unwrap();
        let spec = HamiltonianSpec::from_instance(&inst)
            .unwrap()
            .with_perturbation(p)
            .unwrap();
        let got = evolve(&spec, 12.0, &cfg).unwrap();
        let want = piecewise_propagate(&spec, 12.0, 20_000);
        let err = infidelity(got.final_state.amplitudes(), &want);
        assert!(err < 1e-5, "{kind:?}: infidelity {err}");
    }
}

#[test]
fn slower_runs_do_better_eventually() {
    let inst = generate_unique(5, 8).unwrap();
    let spec = HamiltonianSpec::from_instance(&inst).unwrap();
    let cfg = EvolutionConfig::default();
    let fast = evolve(&spec, 0.5, &cfg).unwrap().success_probability;
    let slow = evolve(&spec, 200.0, &cfg).unwrap().success_probability;
    assert!(slow > fast);
    assert!(slow > 0.9);
}
