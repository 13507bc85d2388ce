//! Every enumerated Hadamard test must reproduce its matrix-algebra term.
//!
//! The oracle works entirely through dense Pauli action and statevectors:
//! denominators against Re <x|A_i A_j|x>, global numerators against
//! <b|A_i|x>, local numerators against Re <phi_i|Z_q|phi_j> with
//! phi_k = U^ A_k x. This pins the circuit families, the control layout,
//! and the ancilla read-out convention all at once.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vqls_core::circuit::{build_ansatz, ansatz_parameter_count, StateVector};
use vqls_core::cost::{cost, CostKind, EvalPath};
use vqls_core::hadamard::{enumerate_tests, HadamardRunner, Part, TestFamily};
use vqls_core::numerics::inner;
use vqls_core::problems::{make_banded_synthetic, make_ising, make_random_pauli, ProblemInstance};

fn z_apply(n: usize, q: usize, v: &[Complex64]) -> Vec<Complex64> {
    let bit = 1usize << (n - 1 - q);
    v.iter()
        .enumerate()
        .map(|(z, a)| if z & bit != 0 { -a } else { *a })
        .collect()
}

fn check_instance(inst: &ProblemInstance, theta_seed: u64) {
    let n = inst.n;
    let m = ansatz_parameter_count(n, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(theta_seed);
    let theta: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();

    let ansatz = build_ansatz(n, 1, &theta).unwrap();
    let runner = HadamardRunner::new(&inst.lcu, &inst.b_circuit, ansatz.clone()).unwrap();

    let x = ansatz.run_from_zero().unwrap();
    let ax: Vec<Vec<Complex64>> = (0..inst.lcu.len())
        .map(|i| inst.lcu.string(i).apply(x.amplitudes()))
        .collect();
    let b_state = inst.b_circuit.run_from_zero().unwrap();
    let u_inverse = inst.b_circuit.inverse();
    let phi: Vec<Vec<Complex64>> = ax
        .iter()
        .map(|v| {
            u_inverse
                .simulate(&StateVector::from_amplitudes(n, v.clone()).unwrap())
                .unwrap()
                .into_amplitudes()
        })
        .collect();

    for kind in [CostKind::Global, CostKind::Local] {
        let (specs, _) = enumerate_tests(inst.lcu.len(), n, kind).unwrap();
        for spec in &specs {
            let got = runner.run(spec, &theta, None, None).unwrap();
            let want = match spec.family {
                TestFamily::Denominator { i, j } => inner(&ax[i], &ax[j]).re,
                TestFamily::GlobalNumerator { i } => {
                    let amp = inner(b_state.amplitudes(), &ax[i]);
                    match spec.part {
                        Part::Real => amp.re,
                        Part::Imaginary => amp.im,
                    }
                }
                TestFamily::LocalNumerator { i, j, q } => {
                    inner(&phi[i], &z_apply(n, q, &phi[j])).re
                }
            };
            assert!(
                (got - want).abs() < 1e-10,
                "{:?}: circuit {got} vs algebra {want}",
                spec
            );
        }
    }
}

#[test]
fn every_spec_matches_matrix_algebra_ising() {
    check_instance(&make_ising(3, 0.1, 5.0).unwrap(), 1);
}

#[test]
fn every_spec_matches_matrix_algebra_random_pauli() {
    check_instance(&make_random_pauli(3, 42).unwrap(), 2);
}

#[test]
fn cross_path_holds_for_banded_family() {
    // The banded stand-in has a large generic LCU; two draws suffice here,
    // the per-family sweep lives in the acceptance suite.
    let inst = make_banded_synthetic(12, 3, 7).unwrap();
    let m = ansatz_parameter_count(inst.n, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..2 {
        let theta: Vec<f64> =
            (0..m).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        for kind in [CostKind::Global, CostKind::Local] {
            let d = cost(&inst, &theta, kind, EvalPath::DirectMatrix).unwrap().value;
            let h = cost(&inst, &theta, kind, EvalPath::HadamardExact).unwrap().value;
            assert!((d - h).abs() < 1e-9, "{kind}: {d} vs {h}");
        }
    }
}
