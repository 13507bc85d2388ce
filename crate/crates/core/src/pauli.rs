//! Pauli strings and the decomposition of a matrix into a linear
//! combination of unitaries over the Pauli basis.
//!
//! Conventions: a string is written "XZIY..." with the leftmost letter on
//! qubit 0, and qubit 0 is the most significant bit of an amplitude index.
//! The induced matrix is the Kronecker product of the letters in order.
//!
//! For a matrix A of size 2^n, the coefficient of basis string P is
//! Tr(A P) / 2^n. Full enumeration over all 4^n strings is only attempted
//! up to a qubit limit; instance generators that know their own support
//! pass it explicitly via [`decompose_on_strings`].

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Qubit limit for materializing a Pauli string as a dense matrix.
pub const MAX_DENSE_QUBITS: usize = 12;

/// Qubit limit for the full 4^n decomposition scan.
pub const MAX_FULL_SCAN_QUBITS: usize = 6;

/// Coefficients at or below this magnitude are dropped from decompositions.
pub const DEFAULT_DROP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
}

impl PauliLetter {
    fn from_char(ch: char) -> Result<Self> {
        match ch {
            'I' => Ok(Self::I),
            'X' => Ok(Self::X),
            'Y' => Ok(Self::Y),
            'Z' => Ok(Self::Z),
            _ => Err(Error::Invalid(format!("invalid Pauli letter '{ch}'"))),
        }
    }

    fn to_char(self) -> char {
        match self {
            Self::I => 'I',
            Self::X => 'X',
            Self::Y => 'Y',
            Self::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Pauli operators; unitary and Hermitian.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    letters: Vec<PauliLetter>,
}

impl PauliString {
    pub fn new(letters: Vec<PauliLetter>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::Invalid("Pauli string needs at least one letter".into()));
        }
        Ok(Self { letters })
    }

    pub fn identity(n: usize) -> Self {
        Self { letters: vec![PauliLetter::I; n] }
    }

    pub fn n(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[PauliLetter] {
        &self.letters
    }

    pub fn letter(&self, qubit: usize) -> PauliLetter {
        self.letters[qubit]
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&l| l == PauliLetter::I)
    }

    /// Bit mask of amplitude-index bits flipped by this string (X and Y).
    /// Qubit q maps to bit n-1-q.
    fn x_mask(&self) -> usize {
        let n = self.n();
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == PauliLetter::X || l == PauliLetter::Y)
            .fold(0, |m, (q, _)| m | (1 << (n - 1 - q)))
    }

    /// Bit mask of amplitude-index bits that contribute a (-1)^bit phase (Z and Y).
    fn phase_mask(&self) -> usize {
        let n = self.n();
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == PauliLetter::Z || l == PauliLetter::Y)
            .fold(0, |m, (q, _)| m | (1 << (n - 1 - q)))
    }

    fn y_count(&self) -> usize {
        self.letters.iter().filter(|&&l| l == PauliLetter::Y).count()
    }

    /// Amplitude action: P |z> = phase(z) |z ^ x_mask> with
    /// phase(z) = i^{#Y} * (-1)^{popcount(z & phase_mask)}.
    pub fn apply(&self, amps: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
        self.apply_scaled_add(Complex64::new(1.0, 0.0), amps, &mut out);
        out
    }

    /// out += coeff * P * amps, without allocating.
    pub fn apply_scaled_add(&self, coeff: Complex64, amps: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(amps.len(), 1 << self.n());
        let x = self.x_mask();
        let pmask = self.phase_mask();
        let base = i_pow(self.y_count()) * coeff;
        for (z, a) in amps.iter().enumerate() {
            let sign = if (z & pmask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            out[z ^ x] += base * sign * a;
        }
    }

    /// Dense 2^n x 2^n matrix of the string.
    pub fn matrix(&self) -> Result<DenseMatrix> {
        let n = self.n();
        if n > MAX_DENSE_QUBITS {
            return Err(Error::QubitLimit {
                n,
                max: MAX_DENSE_QUBITS,
                context: "dense Pauli string matrix".into(),
            });
        }
        let dim = 1usize << n;
        let x = self.x_mask();
        let pmask = self.phase_mask();
        let base = i_pow(self.y_count());
        let mut m = DenseMatrix::zeros(dim, dim);
        // P |z> = phase(z) |z ^ x>, so column z has its entry at row z ^ x.
        for z in 0..dim {
            let sign = if (z & pmask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            m.set(z ^ x, z, base * sign);
        }
        Ok(m)
    }

    /// Tr(A P) computed in O(2^n) from the permutation structure of P.
    pub fn trace_with(&self, a: &DenseMatrix) -> Result<Complex64> {
        let dim = 1usize << self.n();
        if a.rows() != dim || a.cols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "trace_with: {}-qubit string against {}x{} matrix",
                self.n(),
                a.rows(),
                a.cols()
            )));
        }
        let x = self.x_mask();
        let pmask = self.phase_mask();
        let base = i_pow(self.y_count());
        let mut acc = Complex64::new(0.0, 0.0);
        for z in 0..dim {
            let sign = if (z & pmask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * a.get(z, z ^ x);
        }
        Ok(base * acc)
    }

    /// String with index `k` in the lexicographic enumeration of all 4^n
    /// strings (I < X < Y < Z, qubit 0 most significant).
    fn from_index(n: usize, k: usize) -> Self {
        let mut letters = vec![PauliLetter::I; n];
        let mut rem = k;
        for q in (0..n).rev() {
            letters[q] = match rem % 4 {
                0 => PauliLetter::I,
                1 => PauliLetter::X,
                2 => PauliLetter::Y,
                _ => PauliLetter::Z,
            };
            rem /= 4;
        }
        Self { letters }
    }
}

fn i_pow(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.letters {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters: Result<Vec<_>> = s.chars().map(PauliLetter::from_char).collect();
        Self::new(letters?)
    }
}

/// One term of an LCU decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct LcuTerm {
    pub coefficient: Complex64,
    pub string: PauliString,
}

/// A = sum_i c_i A_i over distinct Pauli strings, kept in lexicographic
/// order for deterministic downstream enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct LcuTerms {
    n: usize,
    terms: Vec<LcuTerm>,
}

impl LcuTerms {
    /// Builds from explicit terms: sorts lexicographically, rejects
    /// duplicate strings, and drops coefficients at or below `drop_tol`.
    pub fn new(n: usize, terms: Vec<(Complex64, PauliString)>, drop_tol: f64) -> Result<Self> {
        let mut kept: Vec<LcuTerm> = Vec::with_capacity(terms.len());
        for (coefficient, string) in terms {
            if string.n() != n {
                return Err(Error::DimensionMismatch(format!(
                    "LCU term '{string}' has {} letters, expected {n}",
                    string.n()
                )));
            }
            if coefficient.norm() <= drop_tol {
                continue;
            }
            kept.push(LcuTerm { coefficient, string });
        }
        kept.sort_by(|a, b| a.string.cmp(&b.string));
        for w in kept.windows(2) {
            if w[0].string == w[1].string {
                return Err(Error::Invalid(format!("duplicate LCU string '{}'", w[0].string)));
            }
        }
        Ok(Self { n, terms: kept })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Number of terms, L.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[LcuTerm] {
        &self.terms
    }

    pub fn coefficient(&self, i: usize) -> Complex64 {
        self.terms[i].coefficient
    }

    pub fn string(&self, i: usize) -> &PauliString {
        &self.terms[i].string
    }

    /// Divides every coefficient by `scale`.
    pub fn rescaled(&self, scale: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| LcuTerm { coefficient: t.coefficient / scale, string: t.string.clone() })
            .collect();
        Self { n: self.n, terms }
    }

    /// Sum_i c_i A_i as a dense matrix. An empty term list gives zero.
    pub fn reconstruct(&self) -> Result<DenseMatrix> {
        let dim = self.dim();
        let mut m = DenseMatrix::zeros(dim, dim);
        for t in &self.terms {
            let x = t.string.x_mask();
            let pmask = t.string.phase_mask();
            let base = i_pow(t.string.y_count()) * t.coefficient;
            for z in 0..dim {
                let sign = if (z & pmask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                m.add_assign_at(z ^ x, z, base * sign);
            }
        }
        Ok(m)
    }

    /// (sum_i c_i A_i) v.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "LCU apply: dimension {} vs vector length {}",
                self.dim(),
                v.len()
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        for t in &self.terms {
            t.string.apply_scaled_add(t.coefficient, v, &mut out);
        }
        Ok(out)
    }

    /// True iff every coefficient has |Im c| <= tol. For a Pauli basis this
    /// is equivalent to the reconstructed matrix being Hermitian.
    pub fn coefficients_real(&self, tol: f64) -> bool {
        self.terms.iter().all(|t| t.coefficient.im.abs() <= tol)
    }

    pub fn max_imag_coefficient(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.im.abs()).fold(0.0, f64::max)
    }

    /// Real parts of the coefficients, or an error if any imaginary part
    /// exceeds `tol`.
    pub fn real_coefficients(&self, tol: f64) -> Result<Vec<f64>> {
        let max_imag = self.max_imag_coefficient();
        if max_imag > tol {
            return Err(Error::ComplexCoefficients { max_imag });
        }
        Ok(self.terms.iter().map(|t| t.coefficient.re).collect())
    }
}

/// Pauli decomposition of `a` by the trace formula over all 4^n strings.
///
/// The full scan is capped at [`MAX_FULL_SCAN_QUBITS`]; see
/// [`decompose_with_limit`] to raise the cap deliberately, or
/// [`decompose_on_strings`] when the support is known.
pub fn decompose(a: &DenseMatrix, drop_tol: f64) -> Result<LcuTerms> {
    decompose_with_limit(a, drop_tol, MAX_FULL_SCAN_QUBITS)
}

pub fn decompose_with_limit(a: &DenseMatrix, drop_tol: f64, max_n: usize) -> Result<LcuTerms> {
    let n = qubit_count(a)?;
    if n > max_n {
        return Err(Error::QubitLimit {
            n,
            max: max_n,
            context: "full 4^n decomposition scan; pass an explicit string set instead".into(),
        });
    }
    let dim = 1usize << n;
    let norm = 1.0 / dim as f64;
    let mut terms = Vec::new();
    for k in 0..(1usize << (2 * n)) {
        let s = PauliString::from_index(n, k);
        let c = s.trace_with(a)? * norm;
        if c.norm() > drop_tol {
            terms.push(LcuTerm { coefficient: c, string: s });
        }
    }
    // Enumeration order is already lexicographic.
    Ok(LcuTerms { n, terms })
}

/// Pauli decomposition restricted to an explicit string set.
pub fn decompose_on_strings(
    a: &DenseMatrix,
    strings: &[PauliString],
    drop_tol: f64,
) -> Result<LcuTerms> {
    let n = qubit_count(a)?;
    let norm = 1.0 / (1usize << n) as f64;
    let mut terms = Vec::with_capacity(strings.len());
    for s in strings {
        if s.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "string '{s}' has {} letters, matrix has {n} qubits",
                s.n()
            )));
        }
        let c = s.trace_with(a)? * norm;
        terms.push((c, s.clone()));
    }
    LcuTerms::new(n, terms, drop_tol)
}

fn qubit_count(a: &DenseMatrix) -> Result<usize> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("decomposition needs a square matrix".into()));
    }
    let size = a.rows();
    if !size.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(size));
    }
    Ok(size.trailing_zeros() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::hermitian_eigenvalues;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single(letter: PauliLetter) -> DenseMatrix {
        match letter {
            PauliLetter::I => DenseMatrix::identity(2),
            PauliLetter::X => DenseMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap(),
            PauliLetter::Y => DenseMatrix::new(
                2,
                2,
                vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
            )
            .unwrap(),
            PauliLetter::Z => DenseMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap(),
        }
    }

    /// Kronecker-product oracle, independent of the mask-based fast path.
    fn kron_oracle(s: &PauliString) -> DenseMatrix {
        let mut m = DenseMatrix::identity(1);
        for &l in s.letters() {
            m = m.kron(&single(l));
        }
        m
    }

    fn random_complex(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        let data = (0..n * n)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        DenseMatrix::new(n, n, data).unwrap()
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        let m = random_complex(n, rng);
        m.add(&m.adjoint()).unwrap().scale(c(0.5, 0.0))
    }

    #[test]
    fn single_letter_matrices() {
        let i: PauliString = "I".parse().unwrap();
        assert!(i.matrix().unwrap().max_abs_diff(&DenseMatrix::identity(2)) < 1e-15);
        let z: PauliString = "Z".parse().unwrap();
        let zm = DenseMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        assert!(z.matrix().unwrap().max_abs_diff(&zm) < 1e-15);
    }

    #[test]
    fn xz_matches_hand_kronecker() {
        let s: PauliString = "XZ".parse().unwrap();
        // X (x) Z = [[0,0,1,0],[0,0,0,-1],[1,0,0,0],[0,-1,0,0]]
        let hand = DenseMatrix::from_real(
            4,
            4,
            &[
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, -1.0, //
                1.0, 0.0, 0.0, 0.0, //
                0.0, -1.0, 0.0, 0.0,
            ],
        )
        .unwrap();
        assert!(s.matrix().unwrap().max_abs_diff(&hand) < 1e-15);
        assert!(s.matrix().unwrap().max_abs_diff(&kron_oracle(&s)) < 1e-15);
    }

    #[test]
    fn matrices_match_kronecker_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..30 {
            let n = rng.gen_range(1..=4);
            let letters: Vec<PauliLetter> = (0..n)
                .map(|_| match rng.gen_range(0..4) {
                    0 => PauliLetter::I,
                    1 => PauliLetter::X,
                    2 => PauliLetter::Y,
                    _ => PauliLetter::Z,
                })
                .collect();
            let s = PauliString::new(letters).unwrap();
            assert!(s.matrix().unwrap().max_abs_diff(&kron_oracle(&s)) < 1e-14, "string {s}");
        }
    }

    #[test]
    fn apply_matches_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let n = rng.gen_range(1..=4);
            let s = PauliString::from_index(n, rng.gen_range(0..(1 << (2 * n))));
            let v: Vec<Complex64> = (0..(1 << n))
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let via_matrix = s.matrix().unwrap().matvec(&v).unwrap();
            let via_masks = s.apply(&v);
            for (a, b) in via_matrix.iter().zip(&via_masks) {
                assert!((a - b).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn decompose_pauli_z() {
        let z = single(PauliLetter::Z);
        let t = decompose(&z, DEFAULT_DROP_TOL).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.string(0).to_string(), "Z");
        assert!((t.coefficient(0) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn decompose_hadamard_matrix() {
        let h = 1.0 / 2.0_f64.sqrt();
        let m = DenseMatrix::from_real(2, 2, &[h, h, h, -h]).unwrap();
        let t = decompose(&m, DEFAULT_DROP_TOL).unwrap();
        // Trace-formula oracle: Tr(H X)/2 = 1/sqrt(2), Tr(H Z)/2 = 1/sqrt(2).
        assert_eq!(t.len(), 2);
        assert_eq!(t.string(0).to_string(), "X");
        assert_eq!(t.string(1).to_string(), "Z");
        assert!((t.coefficient(0).re - h).abs() < 1e-15);
        assert!((t.coefficient(1).re - h).abs() < 1e-15);
    }

    #[test]
    fn decompose_zero_matrix() {
        let t = decompose(&DenseMatrix::zeros(4, 4), DEFAULT_DROP_TOL).unwrap();
        assert!(t.is_empty());
        let back = t.reconstruct().unwrap();
        assert!(back.max_abs() < 1e-15);
    }

    #[test]
    fn decompose_rejects_non_power_of_two() {
        let m = DenseMatrix::zeros(3, 3);
        assert!(matches!(decompose(&m, 0.0), Err(Error::NotPowerOfTwo(3))));
    }

    #[test]
    fn round_trip_random_complex() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &n in &[1usize, 2, 3, 4] {
            let a = random_complex(1 << n, &mut rng);
            let t = decompose(&a, 0.0).unwrap();
            let back = t.reconstruct().unwrap();
            assert!(back.max_abs_diff(&a) < 1e-10, "n={n}");
        }
    }

    #[test]
    fn proposition_both_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let n = rng.gen_range(1..=3);
            let h = random_hermitian(1 << n, &mut rng);
            let t = decompose(&h, 0.0).unwrap();
            assert!(t.coefficients_real(1e-10));

            let g = random_complex(1 << n, &mut rng);
            let tg = decompose(&g, 0.0).unwrap();
            let hermitian = g.hermiticity_defect() < 1e-10;
            assert_eq!(tg.coefficients_real(1e-10), hermitian);
        }
    }

    #[test]
    fn hermitian_y_combination() {
        // i(|0><1| - |1><0|) = Y is Hermitian, so its single coefficient is real.
        let m =
            DenseMatrix::new(2, 2, vec![c(0.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(0.0, 0.0)])
                .unwrap()
                .scale(c(-1.0, 0.0));
        let t = decompose(&m, DEFAULT_DROP_TOL).unwrap();
        assert!(t.coefficients_real(1e-12));
    }

    #[test]
    fn non_hermitian_has_complex_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut g = random_complex(4, &mut rng);
        g.set(0, 1, g.get(0, 1) + c(0.0, 0.5));
        assert!(g.hermiticity_defect() > 1e-3);
        let t = decompose(&g, 0.0).unwrap();
        assert!(!t.coefficients_real(1e-10));
        assert!(matches!(t.real_coefficients(1e-10), Err(Error::ComplexCoefficients { .. })));
    }

    #[test]
    fn parseval_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for &n in &[1usize, 2, 3] {
            let a = random_complex(1 << n, &mut rng);
            let t = decompose(&a, 0.0).unwrap();
            let sum_sq: f64 = t.terms().iter().map(|t| t.coefficient.norm_sqr()).sum();
            let want = a.frobenius_norm().powi(2) / (1 << n) as f64;
            assert!((sum_sq - want).abs() <= 1e-10 * want.max(1.0));
        }
    }

    #[test]
    fn ixz_real_coefficients_give_real_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 3;
        let strings: Vec<PauliString> = (0..6)
            .map(|_| {
                let letters = (0..n)
                    .map(|_| match rng.gen_range(0..3) {
                        0 => PauliLetter::I,
                        1 => PauliLetter::X,
                        _ => PauliLetter::Z,
                    })
                    .collect();
                PauliString::new(letters).unwrap()
            })
            .collect();
        let terms = strings
            .into_iter()
            .map(|s| (c(rng.gen_range(-1.0..1.0), 0.0), s))
            .collect();
        // Duplicate strings can occur in this draw; merging is not the point
        // here, so retry with distinct strings only.
        let t = match LcuTerms::new(n, terms, 0.0) {
            Ok(t) => t,
            Err(_) => return,
        };
        let m = t.reconstruct().unwrap();
        assert!(m.max_imag() == 0.0);
        assert!(m.hermiticity_defect() == 0.0);
    }

    #[test]
    fn restricted_scan_matches_full_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_hermitian(8, &mut rng);
        let full = decompose(&a, 0.0).unwrap();
        let strings: Vec<PauliString> =
            full.terms().iter().map(|t| t.string.clone()).collect();
        let restricted = decompose_on_strings(&a, &strings, 0.0).unwrap();
        assert_eq!(full, restricted);

        // A subset scan only sees its own coefficients.
        let partial = decompose_on_strings(&a, &strings[..3], 0.0).unwrap();
        assert_eq!(partial.len(), 3);
        for t in partial.terms() {
            let c = full
                .terms()
                .iter()
                .find(|f| f.string == t.string)
                .unwrap()
                .coefficient;
            assert!((t.coefficient - c).norm() < 1e-15);
        }
    }

    #[test]
    fn lcu_apply_matches_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_hermitian(8, &mut rng);
        let t = decompose(&a, 0.0).unwrap();
        let v: Vec<Complex64> = (0..8)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let direct = a.matvec(&v).unwrap();
        let via_lcu = t.apply(&v).unwrap();
        for (x, y) in direct.iter().zip(&via_lcu) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn lexicographic_term_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_hermitian(8, &mut rng);
        let t = decompose(&a, 0.0).unwrap();
        for w in t.terms().windows(2) {
            assert!(w[0].string < w[1].string);
        }
    }

    #[test]
    fn reconstructed_spectrum_is_real() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = random_hermitian(8, &mut rng);
        let t = decompose(&a, 0.0).unwrap();
        let evs = hermitian_eigenvalues(&t.reconstruct().unwrap(), 1e-10).unwrap();
        assert_eq!(evs.len(), 8);
    }
}
