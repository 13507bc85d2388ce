//! Dense complex linear algebra: Hermitian eigensolving, singular values,
//! condition numbers, and the alignment metric.
//!
//! The eigensolver is a cyclic Jacobi iteration. A complex Hermitian matrix
//! H = Re + i*Im is embedded into the real symmetric matrix
//! [[Re, -Im], [Im, Re]], whose spectrum is that of H with every eigenvalue
//! doubled, so a single real symmetric kernel serves both cases. Real
//! symmetric inputs (the common case here) skip the embedding.
//!
//! All operations are pure functions over immutable inputs.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Default element-wise tolerance for Hermiticity checks.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Dense complex matrix in row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Invalid("matrix dimensions must be at least 1".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(rows, cols, entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn add_assign_at(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] += v;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch("matrix addition shapes differ".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch("matrix subtraction shapes differ".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.get(r, c).conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    out.data[r * other.cols + c] += a * other.get(k, c);
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "matvec: {}x{} matrix with vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, x) in row.iter().zip(v) {
                acc += a * x;
            }
            out[r] = acc;
        }
        Ok(out)
    }

    /// Kronecker product, with `self` on the most significant side.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self.get(r1, c1);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        out.data[(r1 * other.rows + r2) * cols + (c1 * other.cols + c2)] =
                            a * other.get(r2, c2);
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        let n = self.rows.min(self.cols);
        (0..n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry-wise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry of |A - A^dag|; zero for an exactly Hermitian matrix.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut defect: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                let d = (self.get(r, c) - self.get(c, r).conj()).norm();
                defect = defect.max(d);
            }
        }
        defect
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

/// Ascending eigenvalues of a Hermitian matrix via cyclic Jacobi rotations.
///
/// Rejects inputs whose Hermiticity defect exceeds `tol`, reporting the
/// maximum asymmetry found.
pub fn hermitian_eigenvalues(m: &DenseMatrix, tol: f64) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("eigenvalues need a square matrix".into()));
    }
    let defect = m.hermiticity_defect();
    if defect > tol {
        return Err(Error::NotHermitian { defect, tol });
    }
    let n = m.rows();
    let scale = m.max_abs();
    if scale == 0.0 {
        return Ok(vec![0.0; n]);
    }

    let mut evs = if m.max_imag() <= 1e-13 * scale {
        // Real symmetric fast path; symmetrize to kill the sub-tol defect.
        let mut a = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                a[r * n + c] = 0.5 * (m.get(r, c).re + m.get(c, r).re);
            }
        }
        jacobi_eigenvalues_symmetric(&mut a, n)
    } else {
        // Embed H = Re + i*Im into [[Re, -Im], [Im, Re]]: real symmetric,
        // each eigenvalue of H appears twice.
        let nn = 2 * n;
        let mut a = vec![0.0; nn * nn];
        for r in 0..n {
            for c in 0..n {
                let h = 0.5 * (m.get(r, c) + m.get(c, r).conj());
                a[r * nn + c] = h.re;
                a[(n + r) * nn + (n + c)] = h.re;
                a[r * nn + (n + c)] = -h.im;
                a[(n + r) * nn + c] = h.im;
            }
        }
        let doubled = jacobi_eigenvalues_symmetric(&mut a, nn);
        doubled.into_iter().step_by(2).collect()
    };
    evs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(evs)
}

/// Cyclic Jacobi sweeps on a real symmetric matrix (eigenvalues only).
///
/// Follows the classic rotation with the stable tangent formula; sweeps stop
/// once the off-diagonal 1-norm falls below 1e-14 of the initial Frobenius
/// norm. Returns eigenvalues sorted ascending.
fn jacobi_eigenvalues_symmetric(a: &mut [f64], n: usize) -> Vec<f64> {
    const MAX_SWEEPS: usize = 100;
    if n == 1 {
        return vec![a[0]];
    }
    let fro: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if fro == 0.0 {
        return vec![0.0; n];
    }
    let threshold = 1e-14 * fro;

    let mut d: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];

    for sweep in 0..MAX_SWEEPS {
        let off: f64 = (0..n - 1)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q].abs())
            .sum();
        if off <= threshold {
            break;
        }
        // During the first sweeps, skip rotations on entries that are tiny
        // relative to the current off-diagonal mass.
        let rotation_floor = if sweep < 3 { 0.2 * off / (n * n) as f64 } else { 0.0 };

        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let g = 100.0 * apq.abs();
                if sweep > 3
                    && d[p].abs() + g == d[p].abs()
                    && d[q].abs() + g == d[q].abs()
                {
                    a[p * n + q] = 0.0;
                    continue;
                }
                if apq.abs() <= rotation_floor {
                    continue;
                }
                let h = d[q] - d[p];
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let mut t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        t = -t;
                    }
                    t
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let h = t * apq;
                z[p] -= h;
                z[q] += h;
                d[p] -= h;
                d[q] += h;
                a[p * n + q] = 0.0;
                let rotate = |a: &mut [f64], i: usize, j: usize, k: usize, l: usize| {
                    let g = a[i * n + j];
                    let h = a[k * n + l];
                    a[i * n + j] = g - s * (h + g * tau);
                    a[k * n + l] = h + s * (g - h * tau);
                };
                for j in 0..p {
                    rotate(a, j, p, j, q);
                }
                for j in (p + 1)..q {
                    rotate(a, p, j, j, q);
                }
                for j in (q + 1)..n {
                    rotate(a, p, j, q, j);
                }
            }
        }
        for i in 0..n {
            b[i] += z[i];
            d[i] = b[i];
            z[i] = 0.0;
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    d
}

/// Singular values (ascending) via the eigenvalues of M^dag M.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    let gram = m.adjoint().matmul(m)?;
    let evs = hermitian_eigenvalues(&gram, 1e-9 * (1.0 + gram.max_abs()))?;
    Ok(evs.into_iter().map(|l| l.max(0.0).sqrt()).collect())
}

/// Condition number sigma_max / sigma_min.
pub fn condition_number(m: &DenseMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("condition number needs a square matrix".into()));
    }
    let sv = singular_values(m)?;
    let sigma_min = sv[0];
    let sigma_max = sv[sv.len() - 1];
    if sigma_max == 0.0 || sigma_min < 1e-14 * sigma_max {
        return Err(Error::Singular { sigma_min, sigma_max });
    }
    Ok(sigma_max / sigma_min)
}

pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm2_real(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// <u|v> with the conjugation on the left argument.
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Re<u,v> / (|u| |v|), the cosine of the angle for real-amplitude data.
pub fn cosine_alignment(u: &[Complex64], v: &[Complex64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch("cosine_alignment lengths differ".into()));
    }
    let nu = norm2(u);
    let nv = norm2(v);
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(inner(u, v).re / (nu * nv))
}

/// Divides a Hermitian matrix by its largest absolute eigenvalue.
///
/// Returns the rescaled matrix together with the recorded scale.
pub fn rescale_to_unit_spectral_max(m: &DenseMatrix) -> Result<(DenseMatrix, f64)> {
    let evs = hermitian_eigenvalues(m, HERMITICITY_TOL)?;
    let lambda = evs.iter().map(|l| l.abs()).fold(0.0, f64::max);
    if lambda == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok((m.scale(Complex64::new(1.0 / lambda, 0.0)), lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Roots of the characteristic cubic of a symmetric 3x3 matrix, via the
    /// trigonometric formula. Independent of the Jacobi path.
    fn cubic_eigenvalues(m: &DenseMatrix) -> Vec<f64> {
        let a = m.get(0, 0).re;
        let b = m.get(1, 1).re;
        let cc = m.get(2, 2).re;
        let d = m.get(0, 1).re;
        let e = m.get(0, 2).re;
        let f = m.get(1, 2).re;
        let tr = a + b + cc;
        let m2 = a * b - d * d + a * cc - e * e + b * cc - f * f;
        let det = a * (b * cc - f * f) - d * (d * cc - f * e) + e * (d * f - b * e);
        // lambda^3 - tr lambda^2 + m2 lambda - det = 0; shift x = lambda - tr/3.
        let s = tr / 3.0;
        let p = m2 - tr * tr / 3.0;
        let q = s * s * s - tr * s * s + m2 * s - det;
        if p.abs() < 1e-12 {
            return vec![s; 3];
        }
        let r = (-p / 3.0).max(0.0).sqrt();
        let arg = (3.0 * q / (2.0 * p * r)).clamp(-1.0, 1.0);
        let phi = arg.acos();
        let mut roots: Vec<f64> = (0..3)
            .map(|k| 2.0 * r * ((phi + 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos() + s)
            .collect();
        roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
        roots
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(n, n);
        for r in 0..n {
            for cidx in r..n {
                if r == cidx {
                    m.set(r, cidx, c(rng.gen_range(-1.0..1.0), 0.0));
                } else {
                    let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    m.set(r, cidx, v);
                    m.set(cidx, r, v.conj());
                }
            }
        }
        m
    }

    #[test]
    fn identity_eigenvalues() {
        let m = DenseMatrix::identity(4);
        let evs = hermitian_eigenvalues(&m, HERMITICITY_TOL).unwrap();
        assert_eq!(evs, vec![1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn pauli_z_eigenvalues() {
        let m = DenseMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        let evs = hermitian_eigenvalues(&m, HERMITICITY_TOL).unwrap();
        assert!((evs[0] + 1.0).abs() < 1e-14);
        assert!((evs[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_symmetric_3x3_matches_cubic_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let mut m = DenseMatrix::zeros(3, 3);
            for r in 0..3 {
                for cidx in r..3 {
                    let v = c(rng.gen_range(-2.0..2.0), 0.0);
                    m.set(r, cidx, v);
                    m.set(cidx, r, v);
                }
            }
            let evs = hermitian_eigenvalues(&m, HERMITICITY_TOL).unwrap();
            let oracle = cubic_eigenvalues(&m);
            for (got, want) in evs.iter().zip(&oracle) {
                assert!((got - want).abs() < 1e-9, "got {got}, oracle {want}");
            }
        }
    }

    #[test]
    fn eigenvalue_sum_equals_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &n in &[2usize, 5, 16, 33, 64] {
            let m = random_hermitian(n, &mut rng);
            let evs = hermitian_eigenvalues(&m, HERMITICITY_TOL).unwrap();
            let sum: f64 = evs.iter().sum();
            let tr = m.trace().re;
            assert!(
                (sum - tr).abs() <= 1e-9 * m.frobenius_norm().max(1.0),
                "n={n}: sum {sum} vs trace {tr}"
            );
        }
    }

    #[test]
    fn non_hermitian_rejected_with_defect() {
        let m = DenseMatrix::from_real(2, 2, &[1.0, 2.0, 0.0, 1.0]).unwrap();
        match hermitian_eigenvalues(&m, 1e-12) {
            Err(Error::NotHermitian { defect, .. }) => assert!((defect - 2.0).abs() < 1e-15),
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn condition_number_examples() {
        assert!((condition_number(&DenseMatrix::identity(5)).unwrap() - 1.0).abs() < 1e-12);
        let d = DenseMatrix::from_real(2, 2, &[2.0, 0.0, 0.0, 0.5]).unwrap();
        assert!((condition_number(&d).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn condition_number_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_hermitian(8, &mut rng);
        let k1 = condition_number(&m).unwrap();
        let k2 = condition_number(&m.scale(c(3.7, 0.0))).unwrap();
        assert!((k1 - k2).abs() <= 1e-12 * k1);
    }

    #[test]
    fn singular_matrix_reported() {
        let m = DenseMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(condition_number(&m), Err(Error::Singular { .. })));
    }

    #[test]
    fn cosine_alignment_examples() {
        let v = vec![c(0.6, 0.0), c(0.8, 0.0)];
        let neg: Vec<_> = v.iter().map(|z| -z).collect();
        assert!((cosine_alignment(&v, &v).unwrap() - 1.0).abs() < 1e-14);
        assert!((cosine_alignment(&v, &neg).unwrap() + 1.0).abs() < 1e-14);
        let e0 = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let e1 = vec![c(0.0, 0.0), c(1.0, 0.0)];
        assert!(cosine_alignment(&e0, &e1).unwrap().abs() < 1e-14);
        assert!(matches!(
            cosine_alignment(&[c(0.0, 0.0)], &[c(1.0, 0.0)]),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn cosine_alignment_scaling_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u: Vec<_> = (0..6).map(|_| c(rng.gen_range(-1.0..1.0), 0.0)).collect();
        let v: Vec<_> = (0..6).map(|_| c(rng.gen_range(-1.0..1.0), 0.0)).collect();
        let base = cosine_alignment(&u, &v).unwrap();
        for alpha in [2.5, -0.3] {
            let scaled: Vec<_> = v.iter().map(|z| z * c(alpha, 0.0)).collect();
            let got = cosine_alignment(&u, &scaled).unwrap();
            assert!((got - alpha.signum() * base).abs() < 1e-12);
        }
    }

    #[test]
    fn rescale_examples() {
        let two_i = DenseMatrix::identity(4).scale(c(2.0, 0.0));
        let (m, s) = rescale_to_unit_spectral_max(&two_i).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
        assert!(m.max_abs_diff(&DenseMatrix::identity(4)) < 1e-12);

        let x = DenseMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let (mx, sx) = rescale_to_unit_spectral_max(&x).unwrap();
        assert!((sx - 1.0).abs() < 1e-12);
        assert!(mx.max_abs_diff(&x) < 1e-12);

        assert!(matches!(
            rescale_to_unit_spectral_max(&DenseMatrix::zeros(2, 2)),
            Err(Error::ZeroMatrix)
        ));
    }

    #[test]
    fn complex_hermitian_embedding() {
        // Pauli Y is Hermitian with spectrum {-1, 1}.
        let y = DenseMatrix::new(2, 2, vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
            .unwrap();
        let evs = hermitian_eigenvalues(&y, HERMITICITY_TOL).unwrap();
        assert!((evs[0] + 1.0).abs() < 1e-12);
        assert!((evs[1] - 1.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_hermitian(12, &mut rng);
        let evs = hermitian_eigenvalues(&m, HERMITICITY_TOL).unwrap();
        let sum: f64 = evs.iter().sum();
        assert!((sum - m.trace().re).abs() < 1e-9 * m.frobenius_norm().max(1.0));
    }
}
