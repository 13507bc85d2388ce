//! Global and local cost functions with two evaluation paths, plus exact
//! parameter-shift gradients.
//!
//! Writing |psi> = A V(theta)|0> and U for the b-preparation:
//!
//! - global cost: C_G = 1 - |<b|psi>|^2 / <psi|psi>, the expectation of
//!   H_G = A^(I - |b><b|)A divided by <psi|psi>;
//! - local cost:  C_L = 1/2 - (1/2n) sum_q <0|V^ A^ U Z_q U^ A V|0> /
//!   <psi|psi>, the expectation of H_L = A^ U (I - P) U^ A divided by
//!   <psi|psi>, where P = (1/n) sum_q |0_q><0_q| (x) I. The two forms
//!   agree through the identity P = (I + (1/n) sum_q Z_q) / 2, and the
//!   tests check this numerically rather than assuming it.
//!
//! `local_numerator` returns (1/n) sum_q <0|V^ A^ U Z_q U^ A V|0>; the
//! direct path computes it from the projector expectation 2<phi|P|phi> -
//! <phi|phi> with phi = U^ psi, the Hadamard path from the per-qubit
//! reduced expansion over the LCU terms.
//!
//! In every [`CostEvaluation`], `numerator` is the Hamiltonian expectation
//! (so `value = numerator / denominator` for both kinds) and `denominator`
//! is <psi|psi>.
//!
//! The reduced expansions require real LCU coefficients. The [`general`]
//! submodule keeps the unreduced complex-coefficient route, used in tests
//! to validate the reduction.

use crate::circuit::{build_ansatz, Circuit, StateVector};
use crate::error::{Error, Result};
use crate::hadamard::{HadamardRunner, HadamardTestSpec, Part, TestFamily};
use crate::problems::ProblemInstance;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::fmt;

/// Denominators below this threshold abort the evaluation.
pub const DENOMINATOR_FLOOR: f64 = 1e-14;

/// Imaginary parts above this tolerance disqualify the reduced expansions.
pub const REAL_COEFF_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    Global,
    Local,
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostKind::Global => write!(f, "global"),
            CostKind::Local => write!(f, "local"),
        }
    }
}

impl std::str::FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(CostKind::Global),
            "local" => Ok(CostKind::Local),
            other => Err(Error::Invalid(format!("unknown cost kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EvalPath {
    /// Exact matrix algebra on the statevector (the fast path).
    DirectMatrix,
    /// Hadamard-test aggregation with exact ancilla probabilities.
    HadamardExact,
    /// Hadamard-test aggregation with binomial shot noise.
    HadamardSampled { shots: u64, seed: u64 },
}

impl fmt::Display for EvalPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalPath::DirectMatrix => write!(f, "direct_matrix"),
            EvalPath::HadamardExact => write!(f, "hadamard_exact"),
            EvalPath::HadamardSampled { shots, seed } => {
                write!(f, "hadamard_sampled(shots={shots};seed={seed})")
            }
        }
    }
}

/// One cost evaluation with its pieces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostEvaluation {
    pub value: f64,
    /// Hamiltonian expectation <x|H|x> for the evaluated kind.
    pub numerator: f64,
    /// <psi|psi>.
    pub denominator: f64,
    pub kind: CostKind,
    pub path: EvalPath,
    pub theta: Vec<f64>,
}

impl CostEvaluation {
    pub fn csv_header() -> &'static str {
        "kind,path,value,numerator,denominator,eval_index"
    }

    pub fn csv_row(&self, eval_index: usize) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.kind, self.path, self.value, self.numerator, self.denominator, eval_index
        )
    }
}

/// Caches the per-instance circuits so repeated evaluations only rebind
/// the ansatz angles.
pub struct CostEvaluator<'a> {
    inst: &'a ProblemInstance,
    layers: usize,
    ansatz: Circuit,
    prep_inverse: Circuit,
    coefficients: Vec<f64>,
}

/// Raw theta-dependent quantities shared by both cost kinds.
struct RawTerms {
    /// <psi|psi>.
    den: f64,
    /// |<b|psi>|^2.
    overlap: f64,
    /// sum_q <0|V^ A^ U Z_q U^ A V|0>, via the projector form.
    z_sum: f64,
}

impl<'a> CostEvaluator<'a> {
    pub fn new(inst: &'a ProblemInstance, layers: usize) -> Result<Self> {
        let n = inst.n;
        let m = crate::circuit::ansatz_parameter_count(n, layers);
        let ansatz = build_ansatz(n, layers, &vec![0.0; m])?;
        let coefficients = inst.lcu.real_coefficients(REAL_COEFF_TOL)?;
        Ok(Self { inst, layers, ansatz, prep_inverse: inst.b_circuit.inverse(), coefficients })
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.ansatz.parameter_count()
    }

    /// |x(theta)> = V(theta)|0>.
    pub fn ansatz_state(&self, theta: &[f64]) -> Result<StateVector> {
        let mut v = self.ansatz.clone();
        v.bind_parameters(theta)?;
        v.run_from_zero()
    }

    /// A V(theta)|0> through the LCU action.
    pub fn psi(&self, theta: &[f64]) -> Result<Vec<Complex64>> {
        let x = self.ansatz_state(theta)?;
        self.inst.lcu.apply(x.amplitudes())
    }

    fn raw_direct(&self, theta: &[f64], want_z_sum: bool) -> Result<RawTerms> {
        let psi = self.psi(theta)?;
        let den: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let b = self.inst.b_complex();
        let overlap = crate::numerics::inner(&b, &psi).norm_sqr();
        let z_sum = if want_z_sum {
            // Projector route: with phi = U^ psi,
            // <phi|P|phi> = (1/n) sum_q sum_{z: bit_q(z)=0} |phi_z|^2
            // and sum_q <phi|Z_q|phi> = 2 n <phi|P|phi> - n <phi|phi>.
            let n = self.inst.n;
            let phi = self
                .prep_inverse
                .simulate(&StateVector::from_amplitudes(n, psi)?)?;
            let mut proj = 0.0;
            let mut phi_norm = 0.0;
            for (z, a) in phi.amplitudes().iter().enumerate() {
                let zeros = n as f64 - (z as u32).count_ones() as f64;
                let w = a.norm_sqr();
                proj += zeros * w;
                phi_norm += w;
            }
            proj /= n as f64;
            n as f64 * (2.0 * proj - phi_norm)
        } else {
            0.0
        };
        Ok(RawTerms { den, overlap, z_sum })
    }

    fn runner(&self) -> Result<HadamardRunner<'_>> {
        HadamardRunner::new(&self.inst.lcu, &self.inst.b_circuit, self.ansatz.clone())
    }

    fn hadamard_shots(path: EvalPath) -> (Option<u64>, Option<u64>) {
        match path {
            EvalPath::DirectMatrix | EvalPath::HadamardExact => (None, None),
            EvalPath::HadamardSampled { shots, seed } => (Some(shots), Some(seed)),
        }
    }

    /// <psi|psi> by the requested path.
    pub fn psi_norm_sq(&self, theta: &[f64], path: EvalPath) -> Result<f64> {
        match path {
            EvalPath::DirectMatrix => Ok(self.raw_direct(theta, false)?.den),
            _ => {
                let (shots, seed) = Self::hadamard_shots(path);
                let runner = self.runner()?;
                let c = &self.coefficients;
                let mut acc: f64 = c.iter().map(|ci| ci * ci).sum();
                for i in 0..c.len() {
                    for j in (i + 1)..c.len() {
                        let spec = HadamardTestSpec {
                            family: TestFamily::Denominator { i, j },
                            part: Part::Real,
                        };
                        acc += 2.0 * c[i] * c[j] * runner.run(&spec, theta, shots, seed)?;
                    }
                }
                Ok(acc)
            }
        }
    }

    /// |<b|psi>|^2 by the requested path.
    pub fn overlap_sq(&self, theta: &[f64], path: EvalPath) -> Result<f64> {
        match path {
            EvalPath::DirectMatrix => Ok(self.raw_direct(theta, false)?.overlap),
            _ => {
                let (shots, seed) = Self::hadamard_shots(path);
                let runner = self.runner()?;
                let c = &self.coefficients;
                let l = c.len();
                let mut re = vec![0.0; l];
                let mut im = vec![0.0; l];
                for i in 0..l {
                    let family = TestFamily::GlobalNumerator { i };
                    re[i] = runner.run(
                        &HadamardTestSpec { family, part: Part::Real },
                        theta,
                        shots,
                        seed,
                    )?;
                    im[i] = runner.run(
                        &HadamardTestSpec { family, part: Part::Imaginary },
                        theta,
                        shots,
                        seed,
                    )?;
                }
                let mut acc: f64 =
                    (0..l).map(|i| c[i] * c[i] * (re[i] * re[i] + im[i] * im[i])).sum();
                for i in 0..l {
                    for j in (i + 1)..l {
                        acc += 2.0 * c[i] * c[j] * (re[i] * re[j] + im[i] * im[j]);
                    }
                }
                Ok(acc)
            }
        }
    }

    /// (1/n) sum_q <0|V^ A^ U Z_q U^ A V|0> by the requested path.
    pub fn local_numerator(&self, theta: &[f64], path: EvalPath) -> Result<f64> {
        let n = self.inst.n;
        match path {
            EvalPath::DirectMatrix => Ok(self.raw_direct(theta, true)?.z_sum / n as f64),
            _ => {
                let (shots, seed) = Self::hadamard_shots(path);
                let runner = self.runner()?;
                let c = &self.coefficients;
                let l = c.len();
                let mut acc = 0.0;
                for q in 0..n {
                    for i in 0..l {
                        let spec = HadamardTestSpec {
                            family: TestFamily::LocalNumerator { i, j: i, q },
                            part: Part::Real,
                        };
                        acc += c[i] * c[i] * runner.run(&spec, theta, shots, seed)?;
                    }
                    for i in 0..l {
                        for j in (i + 1)..l {
                            let spec = HadamardTestSpec {
                                family: TestFamily::LocalNumerator { i, j, q },
                                part: Part::Real,
                            };
                            acc += 2.0 * c[i] * c[j] * runner.run(&spec, theta, shots, seed)?;
                        }
                    }
                }
                Ok(acc / n as f64)
            }
        }
    }

    /// Full cost evaluation.
    pub fn cost(&self, theta: &[f64], kind: CostKind, path: EvalPath) -> Result<CostEvaluation> {
        let (den, numerator) = match (kind, path) {
            (CostKind::Global, EvalPath::DirectMatrix) => {
                let raw = self.raw_direct(theta, false)?;
                (raw.den, raw.den - raw.overlap)
            }
            (CostKind::Local, EvalPath::DirectMatrix) => {
                let raw = self.raw_direct(theta, true)?;
                (raw.den, (raw.den - raw.z_sum / self.inst.n as f64) / 2.0)
            }
            (CostKind::Global, _) => {
                let den = self.psi_norm_sq(theta, path)?;
                let overlap = self.overlap_sq(theta, path)?;
                (den, den - overlap)
            }
            (CostKind::Local, _) => {
                let den = self.psi_norm_sq(theta, path)?;
                let ln = self.local_numerator(theta, path)?;
                (den, (den - ln) / 2.0)
            }
        };
        if den < DENOMINATOR_FLOOR {
            return Err(Error::SingularDenominator(den));
        }
        Ok(CostEvaluation {
            value: numerator / den,
            numerator,
            denominator: den,
            kind,
            path,
            theta: theta.to_vec(),
        })
    }

    /// Cost value on the direct path, for optimizer loops.
    pub fn cost_value(&self, theta: &[f64], kind: CostKind) -> Result<f64> {
        Ok(self.cost(theta, kind, EvalPath::DirectMatrix)?.value)
    }

    /// (denominator, kind-specific raw numerator): overlap for the global
    /// kind, sum_q <Z_q> for the local kind. Both are expectations
    /// <0|V^ M V|0> of fixed Hermitian M, so the parameter-shift rule
    /// applies to each.
    fn shift_pieces(&self, theta: &[f64], kind: CostKind) -> Result<(f64, f64)> {
        let raw = self.raw_direct(theta, kind == CostKind::Local)?;
        match kind {
            CostKind::Global => Ok((raw.den, raw.overlap)),
            CostKind::Local => Ok((raw.den, raw.z_sum)),
        }
    }

    /// d(cost)/d(theta_k) by the parameter-shift rule on numerator and
    /// denominator separately, combined with the quotient rule.
    pub fn gradient_component(&self, theta: &[f64], kind: CostKind, k: usize) -> Result<f64> {
        let (den, num) = self.shift_pieces(theta, kind)?;
        if den < DENOMINATOR_FLOOR {
            return Err(Error::SingularDenominator(den));
        }
        let mut plus = theta.to_vec();
        plus[k] += FRAC_PI_2;
        let mut minus = theta.to_vec();
        minus[k] -= FRAC_PI_2;
        let (den_p, num_p) = self.shift_pieces(&plus, kind)?;
        let (den_m, num_m) = self.shift_pieces(&minus, kind)?;
        let dden = (den_p - den_m) / 2.0;
        let dnum = (num_p - num_m) / 2.0;
        let ratio_derivative = (dnum * den - num * dden) / (den * den);
        Ok(match kind {
            CostKind::Global => -ratio_derivative,
            CostKind::Local => -ratio_derivative / (2.0 * self.inst.n as f64),
        })
    }

    /// Exact gradient of the cost on the direct path.
    pub fn gradient(&self, theta: &[f64], kind: CostKind) -> Result<Vec<f64>> {
        let (den, num) = self.shift_pieces(theta, kind)?;
        if den < DENOMINATOR_FLOOR {
            return Err(Error::SingularDenominator(den));
        }
        let m = theta.len();
        let mut out = Vec::with_capacity(m);
        let mut shifted = theta.to_vec();
        for k in 0..m {
            let orig = shifted[k];
            shifted[k] = orig + FRAC_PI_2;
            let (den_p, num_p) = self.shift_pieces(&shifted, kind)?;
            shifted[k] = orig - FRAC_PI_2;
            let (den_m, num_m) = self.shift_pieces(&shifted, kind)?;
            shifted[k] = orig;
            let dden = (den_p - den_m) / 2.0;
            let dnum = (num_p - num_m) / 2.0;
            let ratio_derivative = (dnum * den - num * dden) / (den * den);
            out.push(match kind {
                CostKind::Global => -ratio_derivative,
                CostKind::Local => -ratio_derivative / (2.0 * self.inst.n as f64),
            });
        }
        Ok(out)
    }
}

/// Number of ansatz layers implied by a parameter vector for `n` qubits.
pub fn layers_for_parameter_count(n: usize, m: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::Invalid("the ansatz needs at least 2 qubits".into()));
    }
    let per_layer = 2 * n - 2;
    if m < n || (m - n) % per_layer != 0 {
        return Err(Error::ParameterCount { expected: n, got: m });
    }
    Ok((m - n) / per_layer)
}

/// Convenience wrappers with the layer count inferred from theta.
pub fn psi_norm_sq(inst: &ProblemInstance, theta: &[f64], path: EvalPath) -> Result<f64> {
    let layers = layers_for_parameter_count(inst.n, theta.len())?;
    CostEvaluator::new(inst, layers)?.psi_norm_sq(theta, path)
}

pub fn overlap_sq(inst: &ProblemInstance, theta: &[f64], path: EvalPath) -> Result<f64> {
    let layers = layers_for_parameter_count(inst.n, theta.len())?;
    CostEvaluator::new(inst, layers)?.overlap_sq(theta, path)
}

pub fn local_numerator(inst: &ProblemInstance, theta: &[f64], path: EvalPath) -> Result<f64> {
    let layers = layers_for_parameter_count(inst.n, theta.len())?;
    CostEvaluator::new(inst, layers)?.local_numerator(theta, path)
}

pub fn cost(
    inst: &ProblemInstance,
    theta: &[f64],
    kind: CostKind,
    path: EvalPath,
) -> Result<CostEvaluation> {
    let layers = layers_for_parameter_count(inst.n, theta.len())?;
    CostEvaluator::new(inst, layers)?.cost(theta, kind, path)
}

pub fn gradient(inst: &ProblemInstance, theta: &[f64], kind: CostKind) -> Result<Vec<f64>> {
    let layers = layers_for_parameter_count(inst.n, theta.len())?;
    CostEvaluator::new(inst, layers)?.gradient(theta, kind)
}

/// Unreduced complex-coefficient route, kept for validation.
///
/// For arbitrary complex coefficients c_i the quantities become
///
/// - <psi|psi> = sum |c_i|^2 + sum_{i<j} 2 Re(conj(c_i) c_j E_ij) with
///   E_ij = <0|V^ A_i A_j V|0>;
/// - |<b|psi>|^2 = sum |c_i|^2 |F_i|^2 + sum_{i<j} 2 Re(c_i conj(c_j) F_i conj(F_j))
///   with F_i = <0|U^ A_i V|0>;
/// - sum terms of the local numerator analogously with
///   G_ij = <0|V^ A_i U Z_q U^ A_j V|0>.
///
/// Every E, F, G is assembled from a Real and an Imaginary Hadamard test.
pub mod general {
    use super::*;
    use crate::pauli::LcuTerms;

    fn complex_expectation(
        runner: &HadamardRunner<'_>,
        family: TestFamily,
        theta: &[f64],
    ) -> Result<Complex64> {
        let re = runner.run(&HadamardTestSpec { family, part: Part::Real }, theta, None, None)?;
        let im =
            runner.run(&HadamardTestSpec { family, part: Part::Imaginary }, theta, None, None)?;
        Ok(Complex64::new(re, im))
    }

    pub fn psi_norm_sq(
        lcu: &LcuTerms,
        prep: &Circuit,
        ansatz: &Circuit,
        theta: &[f64],
    ) -> Result<f64> {
        let runner = HadamardRunner::new(lcu, prep, ansatz.clone())?;
        let l = lcu.len();
        let mut acc: f64 = (0..l).map(|i| lcu.coefficient(i).norm_sqr()).sum();
        for i in 0..l {
            for j in (i + 1)..l {
                // The circuit measures <0|V^ A_i A_j V|0> = E_ij directly
                // (the strings are self-adjoint).
                let e = complex_expectation(&runner, TestFamily::Denominator { i, j }, theta)?;
                acc += 2.0 * (lcu.coefficient(i).conj() * lcu.coefficient(j) * e).re;
            }
        }
        Ok(acc)
    }

    pub fn overlap_sq(
        lcu: &LcuTerms,
        prep: &Circuit,
        ansatz: &Circuit,
        theta: &[f64],
    ) -> Result<f64> {
        let runner = HadamardRunner::new(lcu, prep, ansatz.clone())?;
        let l = lcu.len();
        let f: Result<Vec<Complex64>> = (0..l)
            .map(|i| complex_expectation(&runner, TestFamily::GlobalNumerator { i }, theta))
            .collect();
        let f = f?;
        let mut acc: f64 =
            (0..l).map(|i| lcu.coefficient(i).norm_sqr() * f[i].norm_sqr()).sum();
        for i in 0..l {
            for j in (i + 1)..l {
                acc += 2.0
                    * (lcu.coefficient(i) * lcu.coefficient(j).conj() * f[i] * f[j].conj()).re;
            }
        }
        Ok(acc)
    }

    pub fn local_z_sum(
        lcu: &LcuTerms,
        prep: &Circuit,
        ansatz: &Circuit,
        theta: &[f64],
    ) -> Result<f64> {
        let runner = HadamardRunner::new(lcu, prep, ansatz.clone())?;
        let l = lcu.len();
        let n = lcu.n();
        let mut acc = 0.0;
        for q in 0..n {
            for i in 0..l {
                let spec = TestFamily::LocalNumerator { i, j: i, q };
                let g = runner.run(
                    &HadamardTestSpec { family: spec, part: Part::Real },
                    theta,
                    None,
                    None,
                )?;
                acc += lcu.coefficient(i).norm_sqr() * g;
            }
            for i in 0..l {
                for j in (i + 1)..l {
                    let g =
                        complex_expectation(&runner, TestFamily::LocalNumerator { i, j, q }, theta)?;
                    // The circuit measures <0|V^ A_j U Z_q U^ A_i V|0>, the
                    // conjugate of the (i, j) term.
                    acc += 2.0 * (lcu.coefficient(i).conj() * lcu.coefficient(j) * g.conj()).re;
                }
            }
        }
        Ok(acc)
    }
}
