use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subharmonic::evolve::{
    dense_reference_evolve, expectation, observable_trace, propagate, uniform_times, IntegratorOptions,
};
use subharmonic::fock::{
    build_hamiltonian, build_observables, enumerate_basis, product_initial_state, InitialStateSpec, ModeTruncation,
    ModelParams, ProductBasis, StateVector,
};
use subharmonic::Error;

fn random_state(basis: ProductBasis, rng: &mut ChaCha8Rng) -> StateVector {
    let amps = (0..basis.dim()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    StateVector::normalized(basis, amps).unwrap()
}

fn max_diff(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn basis_state_is_stationary_without_coupling() {
    let p = ModelParams::new(1, 2, 0.0, 0.7, -0.3).unwrap();
    let basis = enumerate_basis(ModeTruncation::new(4, 6)).unwrap();
    let h = build_hamiltonian(&p, &basis).unwrap();
    let ops = build_observables(&p, &basis).unwrap();
    let psi0 = StateVector::basis_state(basis, 3, 2).unwrap();
    let trace = observable_trace(&h, &psi0, &ops, &uniform_times(20.0, 41), &IntegratorOptions::default()).unwrap();
    for s in &trace.samples {
        assert!((s.n_a - 3.0).abs() < 1e-12 && (s.n_b - 2.0).abs() < 1e-12);
        assert!(s.x.abs() < 1e-15 && s.y.abs() < 1e-15);
        assert!((s.norm - 1.0).abs() < 1e-14);
    }
}

#[test]
fn krylov_matches_dense_oracle_on_small_rectangle() {
    let p = ModelParams::with_detuning(1, 2, 1.0, 0.3).unwrap();
    let basis = enumerate_basis(ModeTruncation::new(5, 5)).unwrap();
    assert_eq!(basis.dim(), 36);
    let h = build_hamiltonian(&p, &basis).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let psi0 = random_state(basis, &mut rng);
    let times = [0.0, 0.1, 0.75, 2.0, 5.0];
    let snaps = propagate(&h, &psi0, &times, &IntegratorOptions::default()).unwrap();
    for (t, snap) in times.iter().zip(&snaps) {
        let reference = dense_reference_evolve(&h, &psi0, *t).unwrap();
        assert!(max_diff(snap, &reference) < 1e-8, "t = {t}");
    }
}

#[test]
fn dense_oracle_is_identity_at_zero_time() {
    let p = ModelParams::resonant(1, 2, 1.0).unwrap();
    let basis = enumerate_basis(ModeTruncation::new(3, 4)).unwrap();
    let h = build_hamiltonian(&p, &basis).unwrap();
    let psi0 = random_state(basis, &mut ChaCha8Rng::seed_from_u64(1));
    assert_eq!(dense_reference_evolve(&h, &psi0, 0.0).unwrap(), psi0);
}

#[test]
fn dense_oracle_solves_two_level_rabi_problem() {
    // |1,0> couples only to |0,2> with element sqrt(1)*sqrt(2!) = sqrt 2.
    let g = 0.8;
    let p = ModelParams::resonant(1, 2, g).unwrap();
    let basis = enumerate_basis(ModeTruncation::new(1, 2)).unwrap();
    let h = build_hamiltonian(&p, &basis).unwrap();
    let psi0 = StateVector::basis_state(basis, 1, 0).unwrap();
    let w = g * 2f64.sqrt();
    for t in [0.3, 1.1, 2.5] {
        let psi = dense_reference_evolve(&h, &psi0, t).unwrap();
        assert!((psi.amplitude(1, 0) - Complex64::new((w * t).cos(), 0.0)).norm() < 1e-12);
        assert!((psi.amplitude(0, 2) - Complex64::new(0.0, -(w * t).sin())).norm() < 1e-12);
    }
}

#[test]
fn dense_oracle_composes() {
    let p = ModelParams::with_detuning(2, 1, 0.5, 0.2).unwrap();
    let basis = enumerate_basis(ModeTruncation::new(6, 4)).unwrap();
    let h = build_hamiltonian(&p, &basis).unwrap();
    let psi0 = random_state(basis, &mut ChaCha8Rng::seed_from_u64(3));
    let (t, s) = (0.7, 1.9);
    let stepped = dense_reference_evolve(&h, &dense_reference_evolve(&h, &psi0, t).unwrap(), s).unwrap();
    let direct = dense_reference_evolve(&h, &psi0, t + s).unwrap();
    assert!(max_diff(&stepped, &direct) < 1e-10);
}

#[test]
fn dense_oracle_rejects_large_dimension() {
    let p = ModelParams::resonant(1, 2, 1.0).unwrap();
    let basis = enumerate_basis(ModeTruncation::new(20, 30)).unwrap();
    let h = build_hamiltonian(&p, &basis).unwrap();
    let psi0 = StateVector::basis_state(basis, 1, 0).unwrap();
    assert!(matches!(dense_reference_evolve(&h, &psi0, 1.0), Err(Error::DimensionTooLarge { .. })));
}

#[test]
fn norm_holds_to_ten_coupling_times() {
    let g = 0.5;
    let p = ModelParams::resonant(1, 2, g).unwrap();
    let spec = InitialStateSpec::coherent(10.0, 0);
    let basis = enumerate_basis(spec.truncation(1, 2)).unwrap();
    let h = build_hamiltonian(&p, &basis).unwrap();
    let psi0 = product_initial_state(&spec, &basis).unwrap();
    let out = propagate(&h, &psi0, &[10.0 / g], &IntegratorOptions::default()).unwrap();
    assert!((out[0].norm() - 1.0).abs() < 1e-9);
}

#[test]
fn propagation_is_deterministic() {
    let p = ModelParams::resonant(1, 2, 1.0).unwrap();
    let spec = InitialStateSpec::coherent(4.0, 1);
    let basis = enumerate_basis(spec.truncation(1, 2)).unwrap();
    let h = build_hamiltonian(&p, &basis).unwrap();
    let psi0 = product_initial_state(&spec, &basis).unwrap();
    let times = uniform_times(3.0, 31);
    let a = propagate(&h, &psi0, &times, &IntegratorOptions::default()).unwrap();
    let b = propagate(&h, &psi0, &times, &IntegratorOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn rejects_bad_inputs() {
    let p = ModelParams::resonant(1, 2, 1.0).unwrap();
    let small = enumerate_basis(ModeTruncation::new(2, 2)).unwrap();
    let large = enumerate_basis(ModeTruncation::new(2, 3)).unwrap();
    let h = build_hamiltonian(&p, &small).unwrap();
    let opts = IntegratorOptions::default();
    let other = StateVector::basis_state(large, 0, 0).unwrap();
    assert!(matches!(propagate(&h, &other, &[1.0], &opts), Err(Error::BasisMismatch)));
    let psi = StateVector::basis_state(small, 1, 0).unwrap();
    assert!(propagate(&h, &psi, &[1.0, 0.5], &opts).is_err());
    assert!(propagate(&h, &psi, &[-1.0], &opts).is_err());
    assert!(propagate(&h, &psi, &[f64::NAN], &opts).is_err());
}

#[test]
fn initial_expectations() {
    let p = ModelParams::resonant(1, 2, 1.0).unwrap();
    let spec = InitialStateSpec::coherent(10.0, 3);
    let basis = enumerate_basis(spec.truncation(1, 2)).unwrap();
    let ops = build_observables(&p, &basis).unwrap();
    let psi = product_initial_state(&spec, &basis).unwrap();
    let n_a = expectation(&ops.n_a, &psi).unwrap();
    let n_b = expectation(&ops.n_b, &psi).unwrap();
    let y = expectation(&ops.y, &psi).unwrap();
    assert!((n_a.re - 10.0).abs() < 1e-9 && n_a.im.abs() < 1e-12);
    assert!((n_b.re - 3.0).abs() < 1e-12 && n_b.im.abs() < 1e-12);
    assert!(y.norm() < 1e-12);
}

#[test]
fn zero_duration_trace_is_initial_sample() {
    let p = ModelParams::resonant(1, 2, 1.0).unwrap();
    let spec = InitialStateSpec::coherent(10.0, 0);
    let basis = enumerate_basis(spec.truncation(1, 2)).unwrap();
    let h = build_hamiltonian(&p, &basis).unwrap();
    let ops = build_observables(&p, &basis).unwrap();
    let psi0 = product_initial_state(&spec, &basis).unwrap();
    let trace = observable_trace(&h, &psi0, &ops, &uniform_times(0.0, 100), &IntegratorOptions::default()).unwrap();
    assert_eq!(trace.len(), 1);
    let s = trace.samples[0];
    assert_eq!(s.t, 0.0);
    assert_eq!(s.n_a, expectation(&ops.n_a, &psi0).unwrap().re);
    assert_eq!(s.n_b, 0.0);
}

#[test]
fn trace_obeys_heisenberg_equations() {
    let g = 1.0;
    let (k, l, n_a) = (1, 2, 10.0);
    let p = ModelParams::resonant(k, l, g).unwrap();
    let spec = InitialStateSpec::coherent(n_a, 0);
    let basis = enumerate_basis(spec.truncation(k, l)).unwrap();
    let h = build_hamiltonian(&p, &basis).unwrap();
    let ops = build_observables(&p, &basis).unwrap();
    let psi0 = product_initial_state(&spec, &basis).unwrap();
    let horizon = 30.0 / (4.0 * g * n_a.sqrt());
    let trace = observable_trace(&h, &psi0, &ops, &uniform_times(horizon, 2001), &IntegratorOptions::default()).unwrap();

    let dt = trace.samples[1].t - trace.samples[0].t;
    let nb = trace.n_b();
    let deriv: Vec<(usize, f64)> = (2..nb.len() - 2)
        .map(|i| (i, (nb[i - 2] - 8.0 * nb[i - 1] + 8.0 * nb[i + 1] - nb[i + 2]) / (12.0 * dt)))
        .collect();
    let floor = 0.05 * deriv.iter().map(|d| d.1.abs()).fold(0.0, f64::max);
    let mut worst = 0.0_f64;
    for (i, d) in deriv {
        if d.abs() > floor {
            let predicted = -2.0 * g * l as f64 * trace.samples[i].y;
            worst = worst.max((d - predicted).abs() / d.abs());
        }
    }
    assert!(worst < 0.02, "worst relative residual {worst}");

    // zero detuning keeps <x> pinned, and Q and H are conserved
    for s in &trace.samples {
        assert!(s.x.abs() < 1e-8);
    }
    assert!(trace.max_charge_drift() < 1e-8);
    assert!(trace.max_norm_drift() < 1e-9);
    assert!(trace.max_energy_drift(1.0) < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn krylov_agrees_with_dense(
        seed in any::<u64>(),
        k in 1u32..=3,
        l in 1u32..=3,
        n_a_max in 2usize..=9,
        n_b_max in 2usize..=12,
        delta in -1.0f64..1.0,
        t in 0.0f64..4.0,
    ) {
        let p = ModelParams::with_detuning(k, l, 0.6, delta).unwrap();
        let basis = enumerate_basis(ModeTruncation::new(n_a_max, n_b_max)).unwrap();
        let h = build_hamiltonian(&p, &basis).unwrap();
        let psi0 = random_state(basis, &mut ChaCha8Rng::seed_from_u64(seed));
        let fast = propagate(&h, &psi0, &[t], &IntegratorOptions::default()).unwrap();
        let exact = dense_reference_evolve(&h, &psi0, t).unwrap();
        prop_assert!(max_diff(&fast[0], &exact) < 1e-8);
    }

    #[test]
    fn krylov_composes(seed in any::<u64>(), t in 0.01f64..2.0, s in 0.01f64..2.0) {
        let p = ModelParams::with_detuning(1, 2, 1.0, 0.4).unwrap();
        let basis = enumerate_basis(ModeTruncation::new(6, 10)).unwrap();
        let h = build_hamiltonian(&p, &basis).unwrap();
        let psi0 = random_state(basis, &mut ChaCha8Rng::seed_from_u64(seed));
        let opts = IntegratorOptions::default();
        let mid = propagate(&h, &psi0, &[t], &opts).unwrap().pop().unwrap();
        let stepped = propagate(&h, &mid, &[s], &opts).unwrap().pop().unwrap();
        let direct = propagate(&h, &psi0, &[t + s], &opts).unwrap().pop().unwrap();
        prop_assert!(max_diff(&stepped, &direct) < 1e-8);
    }
}
