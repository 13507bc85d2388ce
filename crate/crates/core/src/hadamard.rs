//! Hadamard tests and the three test-circuit families behind the cost
//! functions.
//!
//! A Hadamard test estimates Re<psi|W|psi> (or Im with an extra S-dagger
//! on the ancilla) from the probability of reading the ancilla in |1>:
//! the value is 1 - 2 P(1).
//!
//! Families, with V the ansatz, U the b-preparation, and A_i the Pauli
//! strings of the LCU decomposition (all self-adjoint):
//!
//! - `Denominator(i, j)`, i < j: uncontrolled V, then controlled A_j and
//!   controlled A_i. Measures Re<0|V^ A_i A_j V|0>. Diagonal terms need no
//!   circuit; they contribute the known c_i^2.
//! - `GlobalNumerator(i)`: controlled V, controlled A_i, controlled U^.
//!   Measures Re or Im of <0|U^ A_i V|0>.
//! - `LocalNumerator(i, j, q)`, i <= j: uncontrolled V, controlled A_i,
//!   uncontrolled U^, controlled Z_q, uncontrolled U, controlled A_j.
//!   Measures Re<0|V^ A_j U Z_q U^ A_i V|0>, the (i, j) term of the
//!   per-qubit local expansion (its conjugate-transpose symmetry makes the
//!   (i, j) and (j, i) real parts equal).
//!
//! Budget: the global cost needs L(L-1)/2 denominator tests plus 2L
//! numerator tests, (L^2+3L)/2 in total. For the local cost this module
//! enumerates the literal term count of the per-qubit expansion:
//! L(L-1)/2 + n*(L + L(L-1)/2). Quoted budgets for the local cost vary
//! across sources (L(L-1)/2 + 2L and n*L(L-1)/2 both circulate); neither
//! matches the literal term count, so the enumeration here is the
//! authoritative number for this crate.

use crate::circuit::{controlled, Circuit, Gate, StateVector};
use crate::cost::CostKind;
use crate::error::{Error, Result};
use crate::pauli::{LcuTerms, PauliLetter, PauliString};
use rand::distributions::Distribution;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Part {
    Real,
    Imaginary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestFamily {
    Denominator { i: usize, j: usize },
    GlobalNumerator { i: usize },
    LocalNumerator { i: usize, j: usize, q: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HadamardTestSpec {
    pub family: TestFamily,
    pub part: Part,
}

impl HadamardTestSpec {
    pub fn is_numerator(&self) -> bool {
        !matches!(self.family, TestFamily::Denominator { .. })
    }

    /// Stable per-spec seed stream derived from a base seed (FNV-style mix),
    /// so shot sampling is reproducible spec by spec.
    fn derive_seed(&self, base: u64) -> u64 {
        let (tag, i, j, q) = match self.family {
            TestFamily::Denominator { i, j } => (1u64, i as u64, j as u64, 0u64),
            TestFamily::GlobalNumerator { i } => (2, i as u64, 0, 0),
            TestFamily::LocalNumerator { i, j, q } => (3, i as u64, j as u64, q as u64),
        };
        let part = match self.part {
            Part::Real => 0u64,
            Part::Imaginary => 1,
        };
        let mut h = 0xcbf29ce484222325u64 ^ base;
        for v in [tag, i, j, q, part] {
            h ^= v;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

/// Test counts for one cost-function evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestBudget {
    pub kind: CostKind,
    pub l: usize,
    pub n: usize,
    pub denominator_tests: usize,
    pub numerator_tests: usize,
}

impl TestBudget {
    pub fn total(&self) -> usize {
        self.denominator_tests + self.numerator_tests
    }

    pub fn csv_header() -> &'static str {
        "kind,L,n,denominator_tests,numerator_tests,total"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.kind,
            self.l,
            self.n,
            self.denominator_tests,
            self.numerator_tests,
            self.total()
        )
    }
}

/// Every Hadamard test required for one evaluation of the given cost kind,
/// in deterministic order, together with the budget summary.
pub fn enumerate_tests(l: usize, n: usize, kind: CostKind) -> Result<(Vec<HadamardTestSpec>, TestBudget)> {
    if l < 1 {
        return Err(Error::Invalid("LCU must have at least one term".into()));
    }
    let mut specs = Vec::new();
    for i in 0..l {
        for j in (i + 1)..l {
            specs.push(HadamardTestSpec { family: TestFamily::Denominator { i, j }, part: Part::Real });
        }
    }
    let denominator_tests = specs.len();
    match kind {
        CostKind::Global => {
            for i in 0..l {
                for part in [Part::Real, Part::Imaginary] {
                    specs.push(HadamardTestSpec { family: TestFamily::GlobalNumerator { i }, part });
                }
            }
        }
        CostKind::Local => {
            for q in 0..n {
                for i in 0..l {
                    specs.push(HadamardTestSpec {
                        family: TestFamily::LocalNumerator { i, j: i, q },
                        part: Part::Real,
                    });
                }
                for i in 0..l {
                    for j in (i + 1)..l {
                        specs.push(HadamardTestSpec {
                            family: TestFamily::LocalNumerator { i, j, q },
                            part: Part::Real,
                        });
                    }
                }
            }
        }
    }
    let budget = TestBudget {
        kind,
        l,
        n,
        denominator_tests,
        numerator_tests: specs.len() - denominator_tests,
    };
    Ok((specs, budget))
}

/// Raw Hadamard test: ancilla H (then S-dagger for the imaginary part),
/// uncontrolled `prep` on the data register, controlled `op`, ancilla H.
pub fn hadamard_test_circuit(prep: &Circuit, op: &Circuit, part: Part) -> Result<Circuit> {
    if prep.n() != op.n() {
        return Err(Error::DimensionMismatch("prep and op register widths differ".into()));
    }
    let n = prep.n();
    let mut c = Circuit::new(n + 1);
    c.push(Gate::h(0))?;
    if part == Part::Imaginary {
        c.push(Gate::sdg(0))?;
    }
    c.append(&prep.embedded(n + 1, 1)?)?;
    c.append(&controlled(op))?;
    c.push(Gate::h(0))?;
    Ok(c)
}

/// Probability of reading 1 on qubit 0 of the final state.
pub fn ancilla_one_probability(state: &StateVector) -> f64 {
    let dim = state.amplitudes().len();
    state.amplitudes()[dim / 2..].iter().map(|a| a.norm_sqr()).sum()
}

/// Builds and runs the three test families for a fixed instance.
pub struct HadamardRunner<'a> {
    lcu: &'a LcuTerms,
    prep: &'a Circuit,
    ansatz: Circuit,
}

impl<'a> HadamardRunner<'a> {
    /// `ansatz` is V with bindable parameters; `prep` is U with U|0> = |b>.
    pub fn new(lcu: &'a LcuTerms, prep: &'a Circuit, ansatz: Circuit) -> Result<Self> {
        let n = lcu.n();
        if prep.n() != n || ansatz.n() != n {
            return Err(Error::DimensionMismatch(
                "LCU, preparation, and ansatz must share the register width".into(),
            ));
        }
        Ok(Self { lcu, prep, ansatz })
    }

    fn pauli_circuit(&self, index: usize) -> Result<Circuit> {
        if index >= self.lcu.len() {
            return Err(Error::InvalidTestSpec(format!(
                "term index {index} out of range for L = {}",
                self.lcu.len()
            )));
        }
        Ok(pauli_string_circuit(self.lcu.string(index)))
    }

    /// The full test circuit for `spec` with the ansatz bound to `theta`.
    pub fn build_circuit(&self, spec: &HadamardTestSpec, theta: &[f64]) -> Result<Circuit> {
        let mut v = self.ansatz.clone();
        v.bind_parameters(theta)?;
        let n = self.lcu.n();
        match spec.family {
            TestFamily::Denominator { i, j } => {
                if i == j {
                    return Err(Error::InvalidTestSpec(
                        "diagonal denominator terms need no test; they contribute c_i^2".into(),
                    ));
                }
                if i > j {
                    return Err(Error::InvalidTestSpec("denominator requires i < j".into()));
                }
                let mut op = self.pauli_circuit(j)?;
                op.append(&self.pauli_circuit(i)?)?;
                hadamard_test_circuit(&v, &op, spec.part)
            }
            TestFamily::GlobalNumerator { i } => {
                let mut op = v;
                op.append(&self.pauli_circuit(i)?)?;
                op.append(&self.prep.inverse())?;
                hadamard_test_circuit(&Circuit::new(n), &op, spec.part)
            }
            TestFamily::LocalNumerator { i, j, q } => {
                if i > j {
                    return Err(Error::InvalidTestSpec("local numerator requires i <= j".into()));
                }
                if q >= n {
                    return Err(Error::InvalidTestSpec(format!(
                        "local qubit index {q} out of range for n = {n}"
                    )));
                }
                let mut c = Circuit::new(n + 1);
                c.push(Gate::h(0))?;
                if spec.part == Part::Imaginary {
                    c.push(Gate::sdg(0))?;
                }
                c.append(&v.embedded(n + 1, 1)?)?;
                c.append(&controlled(&self.pauli_circuit(i)?))?;
                c.append(&self.prep.inverse().embedded(n + 1, 1)?)?;
                c.push(Gate::cz(0, q + 1))?;
                c.append(&self.prep.embedded(n + 1, 1)?)?;
                c.append(&controlled(&self.pauli_circuit(j)?))?;
                c.push(Gate::h(0))?;
                Ok(c)
            }
        }
    }

    /// Runs a test. Exact mode returns 1 - 2 P(1) from the statevector;
    /// shot mode draws Binomial(shots, P(1)) with a per-spec seed stream.
    pub fn run(
        &self,
        spec: &HadamardTestSpec,
        theta: &[f64],
        shots: Option<u64>,
        seed: Option<u64>,
    ) -> Result<f64> {
        let circuit = self.build_circuit(spec, theta)?;
        let state = circuit.run_from_zero()?;
        let p1 = ancilla_one_probability(&state);
        match shots {
            None => Ok(1.0 - 2.0 * p1),
            Some(0) => Err(Error::ZeroShots),
            Some(shots) => {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.derive_seed(seed.unwrap_or(0)));
                let dist = rand_distr::Binomial::new(shots, p1.clamp(0.0, 1.0))
                    .map_err(|e| Error::Invalid(format!("binomial sampling: {e}")))?;
                let successes = dist.sample(&mut rng);
                Ok(1.0 - 2.0 * successes as f64 / shots as f64)
            }
        }
    }
}

/// Gate realization of a Pauli string: one X/Y/Z per non-identity letter.
/// The string is self-adjoint, so the same circuit serves as its inverse.
pub fn pauli_string_circuit(s: &PauliString) -> Circuit {
    let mut c = Circuit::new(s.n());
    for (q, &letter) in s.letters().iter().enumerate() {
        let gate = match letter {
            PauliLetter::I => continue,
            PauliLetter::X => Gate::x(q),
            PauliLetter::Y => Gate::y(q),
            PauliLetter::Z => Gate::z(q),
        };
        c.push(gate).expect("pauli gate in range");
    }
    c
}
