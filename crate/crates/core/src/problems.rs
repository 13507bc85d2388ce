//! Problem-instance generation and ingestion.
//!
//! Three families:
//!
//! - `ising`: A = (sum_i X_i + J sum_i Z_i Z_{i+1} + eta I) / xi over an
//!   open chain of n qubits, with xi the largest absolute eigenvalue so
//!   the rescaled matrix has spectral max 1. The right-hand side is the
//!   equal superposition, prepared by one layer of H gates. The LCU terms
//!   are the 2n strings of the Hamiltonian itself, no scan needed.
//! - `random-pauli`: L = 2n distinct strings over {I, X, Z}^n sampled
//!   uniformly without replacement, coefficients uniform in [-10, 10],
//!   rescaled to spectral max 1; b has entries uniform in [-1, 1] and is
//!   normalized, prepared by the real-amplitude rotation tree.
//! - `banded`: a random symmetric banded matrix standing in for externally
//!   assembled systems, pushed through the same scaling and padding
//!   conventions as ingested blocks.
//!
//! Ingestion reads Matrix Market coordinate files; [`extract_and_pad`]
//! pulls the designated off-diagonal block out of a structured system,
//! divides block and right-hand side by the block's largest absolute
//! eigenvalue, and pads to the next power of two with unit diagonal
//! entries so the appended solution components are exactly zero.

use crate::circuit::{prepare_state, Circuit, Gate};
use crate::error::{Error, Result};
use crate::numerics::{hermitian_eigenvalues, norm2_real, DenseMatrix, HERMITICITY_TOL};
use crate::pauli::{decompose_with_limit, LcuTerms, PauliLetter, PauliString, DEFAULT_DROP_TOL};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// Decomposition scan cap for ingested matrices (dimension 2^10).
const INGEST_SCAN_LIMIT: usize = 10;

/// How the right-hand side state is prepared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsPreparation {
    /// One Hadamard per qubit (equal superposition).
    HadamardLayer,
    /// Real-amplitude multiplexed-RY tree.
    RealAmplitudeTree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetadata {
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Ising coupling J.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<usize>,
    /// None when the matrix is numerically singular (sigma_min below
    /// 1e-14 sigma_max), as in the strongly coupled Ising regime.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub condition_number: Option<f64>,
    /// Divisor xi applied to reach spectral max 1.
    pub scale: f64,
    /// Original block size when the instance was padded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub padded_from: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// A linear system prepared for the solver: matrix (dense and LCU form),
/// unit right-hand side with its preparation circuit, and metadata.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub n: usize,
    pub a_dense: Option<DenseMatrix>,
    pub lcu: LcuTerms,
    pub b: Vec<f64>,
    pub b_circuit: Circuit,
    pub rhs_preparation: RhsPreparation,
    pub metadata: InstanceMetadata,
}

impl ProblemInstance {
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn b_complex(&self) -> Vec<Complex64> {
        self.b.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    /// Same system with a replacement right-hand side (normalized here),
    /// prepared by the real-amplitude tree. Used to construct instances
    /// whose exact solution lies in the ansatz space.
    pub fn with_rhs(&self, b: &[f64]) -> Result<ProblemInstance> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "replacement rhs has length {}, expected {}",
                b.len(),
                self.dim()
            )));
        }
        let norm = norm2_real(b);
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        let b: Vec<f64> = b.iter().map(|x| x / norm).collect();
        let b_circuit = prepare_state(&b)?;
        Ok(ProblemInstance {
            n: self.n,
            a_dense: self.a_dense.clone(),
            lcu: self.lcu.clone(),
            b,
            b_circuit,
            rhs_preparation: RhsPreparation::RealAmplitudeTree,
            metadata: self.metadata.clone(),
        })
    }
}

fn hadamard_layer(n: usize) -> Circuit {
    let mut c = Circuit::new(n);
    for q in 0..n {
        c.push(Gate::h(q)).expect("in range");
    }
    c
}

/// Spectral data of a Hermitian matrix: (max |eig|, max |eig| / min |eig|).
/// The condition number is None for numerically singular input.
fn spectral_scale_and_kappa(a: &DenseMatrix) -> Result<(f64, Option<f64>)> {
    let evs = hermitian_eigenvalues(a, 1e-9 * (1.0 + a.max_abs()))?;
    let max = evs.iter().map(|l| l.abs()).fold(0.0, f64::max);
    let min = evs.iter().map(|l| l.abs()).fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let kappa = if min < 1e-14 * max { None } else { Some(max / min) };
    Ok((max, kappa))
}

/// Transverse-field Ising chain instance (open boundary).
pub fn make_ising(n: usize, coupling: f64, eta: f64) -> Result<ProblemInstance> {
    if n < 2 {
        return Err(Error::Invalid("ising instance needs n >= 2".into()));
    }
    let mut terms: Vec<(Complex64, PauliString)> = Vec::with_capacity(2 * n);
    for q in 0..n {
        let mut letters = vec![PauliLetter::I; n];
        letters[q] = PauliLetter::X;
        terms.push((Complex64::new(1.0, 0.0), PauliString::new(letters)?));
    }
    for q in 0..n - 1 {
        let mut letters = vec![PauliLetter::I; n];
        letters[q] = PauliLetter::Z;
        letters[q + 1] = PauliLetter::Z;
        terms.push((Complex64::new(coupling, 0.0), PauliString::new(letters)?));
    }
    terms.push((Complex64::new(eta, 0.0), PauliString::identity(n)));

    let unscaled = LcuTerms::new(n, terms, DEFAULT_DROP_TOL)?;
    let dense_unscaled = unscaled.reconstruct()?;
    let (xi, kappa) = spectral_scale_and_kappa(&dense_unscaled)?;
    let lcu = unscaled.rescaled(xi);
    let a_dense = dense_unscaled.scale(Complex64::new(1.0 / xi, 0.0));

    let dim = 1usize << n;
    let b = vec![1.0 / (dim as f64).sqrt(); dim];
    Ok(ProblemInstance {
        n,
        a_dense: Some(a_dense),
        lcu,
        b,
        b_circuit: hadamard_layer(n),
        rhs_preparation: RhsPreparation::HadamardLayer,
        metadata: InstanceMetadata {
            family: "ising".into(),
            seed: None,
            coupling: Some(coupling),
            eta: Some(eta),
            bandwidth: None,
            condition_number: kappa,
            scale: xi,
            padded_from: None,
            warnings: vec![],
        },
    })
}

/// Random Pauli-sum instance.
///
/// Draw order under the seed is fixed: string letters (term by term,
/// qubit 0 first, rejecting duplicates), then the L coefficients, then the
/// 2^n right-hand-side entries.
pub fn make_random_pauli(n: usize, seed: u64) -> Result<ProblemInstance> {
    if n < 2 {
        return Err(Error::Invalid("random-pauli instance needs n >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = 2 * n;
    let mut strings: Vec<PauliString> = Vec::with_capacity(l);
    while strings.len() < l {
        let letters: Vec<PauliLetter> = (0..n)
            .map(|_| match rng.gen_range(0..3u8) {
                0 => PauliLetter::I,
                1 => PauliLetter::X,
                _ => PauliLetter::Z,
            })
            .collect();
        let s = PauliString::new(letters)?;
        if !strings.contains(&s) {
            strings.push(s);
        }
    }
    let terms: Vec<(Complex64, PauliString)> = strings
        .into_iter()
        .map(|s| (Complex64::new(rng.gen_range(-10.0..10.0), 0.0), s))
        .collect();
    let unscaled = LcuTerms::new(n, terms, DEFAULT_DROP_TOL)?;
    let dense_unscaled = unscaled.reconstruct()?;
    let (xi, kappa) = spectral_scale_and_kappa(&dense_unscaled)?;
    let lcu = unscaled.rescaled(xi);
    let a_dense = dense_unscaled.scale(Complex64::new(1.0 / xi, 0.0));

    let dim = 1usize << n;
    let mut b: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = norm2_real(&b);
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    b.iter_mut().for_each(|x| *x /= norm);
    let b_circuit = prepare_state(&b)?;

    Ok(ProblemInstance {
        n,
        a_dense: Some(a_dense),
        lcu,
        b,
        b_circuit,
        rhs_preparation: RhsPreparation::RealAmplitudeTree,
        metadata: InstanceMetadata {
            family: "random-pauli".into(),
            seed: Some(seed),
            coupling: None,
            eta: None,
            bandwidth: None,
            condition_number: kappa,
            scale: xi,
            padded_from: None,
            warnings: vec![],
        },
    })
}

/// Scales a square symmetric block and its rhs segment by the block's
/// largest absolute eigenvalue, pads both to the next power of two (unit
/// diagonal, zero rhs), and assembles the instance.
fn finish_padded_instance(
    block: DenseMatrix,
    b_seg: Vec<f64>,
    mut metadata: InstanceMetadata,
) -> Result<ProblemInstance> {
    let size = block.rows();
    let (lambda, kappa) = spectral_scale_and_kappa(&block)?;
    let scaled = block.scale(Complex64::new(1.0 / lambda, 0.0));

    let padded_size = size.next_power_of_two().max(2);
    let n = padded_size.trailing_zeros() as usize;
    let mut a = DenseMatrix::identity(padded_size);
    for r in 0..size {
        for c in 0..size {
            a.set(r, c, scaled.get(r, c));
        }
    }
    for d in size..padded_size {
        a.set(d, d, Complex64::new(1.0, 0.0));
    }

    let mut b = vec![0.0; padded_size];
    for (slot, v) in b.iter_mut().zip(&b_seg) {
        *slot = v / lambda;
    }
    let norm = norm2_real(&b);
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    b.iter_mut().for_each(|x| *x /= norm);

    let lcu = decompose_with_limit(&a, DEFAULT_DROP_TOL, INGEST_SCAN_LIMIT)?;
    let b_circuit = prepare_state(&b)?;
    metadata.condition_number = kappa;
    metadata.scale = lambda;
    metadata.padded_from = if padded_size == size { None } else { Some(size) };
    Ok(ProblemInstance {
        n,
        a_dense: Some(a),
        lcu,
        b,
        b_circuit,
        rhs_preparation: RhsPreparation::RealAmplitudeTree,
        metadata,
    })
}

/// Extracts the upper-right block (rows 0..block_rows, the last block_cols
/// columns) and the matching leading rhs segment, then applies the scaling
/// and padding conventions.
///
/// The lower-left block is checked for diagonality; a violation is recorded
/// as a metadata warning rather than an error.
pub fn extract_and_pad(
    a_full: &DenseMatrix,
    b_full: &[f64],
    block_rows: usize,
    block_cols: usize,
) -> Result<ProblemInstance> {
    if !a_full.is_square() {
        return Err(Error::DimensionMismatch("extract_and_pad needs a square matrix".into()));
    }
    let t = a_full.rows();
    if block_rows == 0 || block_rows > t || block_cols == 0 || block_cols > t {
        return Err(Error::Invalid(format!(
            "block {block_rows}x{block_cols} does not fit a {t}x{t} matrix"
        )));
    }
    if block_rows != block_cols {
        return Err(Error::Invalid(format!(
            "extracted block must be square, got {block_rows}x{block_cols}"
        )));
    }
    if b_full.len() != t {
        return Err(Error::DimensionMismatch(format!(
            "rhs has length {}, matrix has {t} rows",
            b_full.len()
        )));
    }
    let col0 = t - block_cols;
    let mut block = DenseMatrix::zeros(block_rows, block_cols);
    for r in 0..block_rows {
        for c in 0..block_cols {
            block.set(r, c, a_full.get(r, col0 + c));
        }
    }
    let mut warnings = Vec::new();
    // Lower-left block: rows block_rows..t, cols 0..t-block_cols.
    let mut off_diag: f64 = 0.0;
    for r in block_rows..t {
        for c in 0..col0 {
            if r - block_rows != c {
                off_diag = off_diag.max(a_full.get(r, c).norm());
            }
        }
    }
    if off_diag > 1e-12 {
        warnings.push(format!(
            "lower-left block is not diagonal (max off-diagonal entry {off_diag:.3e})"
        ));
    }
    let defect = block.hermiticity_defect();
    if defect > 1e-9 {
        return Err(Error::NotHermitian { defect, tol: 1e-9 });
    }
    let b_seg = b_full[..block_rows].to_vec();
    finish_padded_instance(
        block,
        b_seg,
        InstanceMetadata {
            family: "extracted".into(),
            seed: None,
            coupling: None,
            eta: None,
            bandwidth: None,
            condition_number: None,
            scale: 0.0,
            padded_from: None,
            warnings,
        },
    )
}

/// Synthetic stand-in for externally assembled banded systems: a random
/// symmetric matrix with the given bandwidth plus a random rhs segment,
/// run through the extract-and-pad conventions. Draw order under the seed:
/// in-band matrix entries row by row, then the rhs entries.
pub fn make_banded_synthetic(size: usize, bandwidth: usize, seed: u64) -> Result<ProblemInstance> {
    if size < 2 {
        return Err(Error::Invalid("banded instance needs size >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut block = DenseMatrix::zeros(size, size);
    for r in 0..size {
        for c in r..(r + bandwidth + 1).min(size) {
            let v = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
            block.set(r, c, v);
            block.set(c, r, v);
        }
    }
    let b_seg: Vec<f64> = (0..size).map(|_| rng.gen_range(-1.0..1.0)).collect();
    finish_padded_instance(
        block,
        b_seg,
        InstanceMetadata {
            family: "banded".into(),
            seed: Some(seed),
            coupling: None,
            eta: None,
            bandwidth: Some(bandwidth),
            condition_number: None,
            scale: 0.0,
            padded_from: None,
            warnings: vec![],
        },
    )
}

/// Reads a Matrix Market coordinate file (real or integer entries,
/// `general` or `symmetric` storage).
pub fn load_matrix_market(path: &Path) -> Result<DenseMatrix> {
    let file = fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut symmetric = false;
    let mut dims: Option<(usize, usize, usize)> = None;
    let mut matrix: Option<DenseMatrix> = None;
    let mut entries_seen = 0usize;
    let mut header_seen = false;

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let parse_err = |message: String| Error::Parse { line: lineno, message };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if !header_seen {
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() < 4 || fields[0] != "%%MatrixMarket" || fields[1] != "matrix" {
                return Err(parse_err("expected `%%MatrixMarket matrix ...` header".into()));
            }
            if fields[2] != "coordinate" {
                return Err(parse_err(format!(
                    "unsupported format '{}', only coordinate is handled",
                    fields[2]
                )));
            }
            match fields[3] {
                "real" | "integer" => {}
                other => {
                    return Err(parse_err(format!("unsupported field type '{other}'")));
                }
            }
            match fields.get(4).copied().unwrap_or("general") {
                "general" => symmetric = false,
                "symmetric" => symmetric = true,
                other => {
                    return Err(parse_err(format!("unsupported symmetry '{other}'")));
                }
            }
            header_seen = true;
            continue;
        }
        if trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if dims.is_none() {
            if fields.len() != 3 {
                return Err(parse_err("expected `rows cols nnz`".into()));
            }
            let rows: usize =
                fields[0].parse().map_err(|_| parse_err("bad row count".into()))?;
            let cols: usize =
                fields[1].parse().map_err(|_| parse_err("bad column count".into()))?;
            let nnz: usize =
                fields[2].parse().map_err(|_| parse_err("bad entry count".into()))?;
            if rows == 0 || cols == 0 {
                return Err(parse_err("matrix dimensions must be positive".into()));
            }
            matrix = Some(DenseMatrix::zeros(rows, cols));
            dims = Some((rows, cols, nnz));
            continue;
        }
        let (rows, cols, nnz) = dims.unwrap();
        if fields.len() != 3 {
            return Err(parse_err("expected `i j value`".into()));
        }
        let i: usize = fields[0].parse().map_err(|_| parse_err("bad row index".into()))?;
        let j: usize = fields[1].parse().map_err(|_| parse_err("bad column index".into()))?;
        let v: f64 = fields[2].parse().map_err(|_| parse_err("bad value".into()))?;
        if i == 0 || i > rows || j == 0 || j > cols {
            return Err(parse_err(format!("index ({i}, {j}) outside {rows}x{cols}")));
        }
        entries_seen += 1;
        if entries_seen > nnz {
            return Err(parse_err(format!("more than the declared {nnz} entries")));
        }
        let m = matrix.as_mut().unwrap();
        m.set(i - 1, j - 1, Complex64::new(v, 0.0));
        if symmetric && i != j {
            m.set(j - 1, i - 1, Complex64::new(v, 0.0));
        }
    }
    let matrix = matrix.ok_or(Error::Parse { line: 0, message: "empty file".into() })?;
    let (_, _, nnz) = dims.unwrap();
    if entries_seen != nnz {
        return Err(Error::Parse {
            line: 0,
            message: format!("declared {nnz} entries, found {entries_seen}"),
        });
    }
    Ok(matrix)
}

/// Writes a real matrix in Matrix Market coordinate/general form.
pub fn save_matrix_market(path: &Path, m: &DenseMatrix) -> Result<()> {
    if m.max_imag() > 1e-14 {
        return Err(Error::Invalid("matrix market writer handles real matrices only".into()));
    }
    let mut entries = Vec::new();
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let v = m.get(r, c).re;
            if v != 0.0 {
                entries.push((r + 1, c + 1, v));
            }
        }
    }
    let mut out = fs::File::create(path)?;
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", m.rows(), m.cols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(out, "{} {} {}", i, j, v)?;
    }
    Ok(())
}

/// Reads a plain-text vector, one value per line.
pub fn load_vector(path: &Path) -> Result<Vec<f64>> {
    let file = fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let v: f64 = trimmed.parse().map_err(|_| Error::Parse {
            line: idx + 1,
            message: format!("bad vector entry '{trimmed}'"),
        })?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::Parse { line: 0, message: "vector file has no entries".into() });
    }
    Ok(out)
}

pub fn save_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut out = fs::File::create(path)?;
    for x in v {
        writeln!(out, "{}", x)?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct LcuTermRecord {
    re: f64,
    im: f64,
    string: String,
}

/// On-disk form of an instance: metadata, LCU terms, rhs preparation kind,
/// and file names for the matrix and rhs.
#[derive(Serialize, Deserialize)]
struct InstanceManifest {
    schema: String,
    n: usize,
    metadata: InstanceMetadata,
    rhs_preparation: RhsPreparation,
    lcu: Vec<LcuTermRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix_file: Option<String>,
    rhs_file: String,
}

const INSTANCE_SCHEMA: &str = "vqls-instance-v1";

/// Writes manifest.json, matrix.mtx (when dense data is present), and b.txt.
pub fn save_instance(dir: &Path, inst: &ProblemInstance) -> Result<()> {
    fs::create_dir_all(dir)?;
    let matrix_file = match &inst.a_dense {
        Some(a) => {
            save_matrix_market(&dir.join("matrix.mtx"), a)?;
            Some("matrix.mtx".to_string())
        }
        None => None,
    };
    save_vector(&dir.join("b.txt"), &inst.b)?;
    let manifest = InstanceManifest {
        schema: INSTANCE_SCHEMA.into(),
        n: inst.n,
        metadata: inst.metadata.clone(),
        rhs_preparation: inst.rhs_preparation,
        lcu: inst
            .lcu
            .terms()
            .iter()
            .map(|t| LcuTermRecord {
                re: t.coefficient.re,
                im: t.coefficient.im,
                string: t.string.to_string(),
            })
            .collect(),
        matrix_file,
        rhs_file: "b.txt".into(),
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

pub fn load_instance(dir: &Path) -> Result<ProblemInstance> {
    let manifest: InstanceManifest =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    if manifest.schema != INSTANCE_SCHEMA {
        return Err(Error::Invalid(format!(
            "unknown instance schema '{}'",
            manifest.schema
        )));
    }
    let terms: Result<Vec<(Complex64, PauliString)>> = manifest
        .lcu
        .iter()
        .map(|r| Ok((Complex64::new(r.re, r.im), r.string.parse()?)))
        .collect();
    let lcu = LcuTerms::new(manifest.n, terms?, 0.0)?;
    let b = load_vector(&dir.join(&manifest.rhs_file))?;
    if b.len() != 1 << manifest.n {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} does not match n = {}",
            b.len(),
            manifest.n
        )));
    }
    let a_dense = match &manifest.matrix_file {
        Some(f) => Some(load_matrix_market(&dir.join(f))?),
        None => None,
    };
    let b_circuit = match manifest.rhs_preparation {
        RhsPreparation::HadamardLayer => hadamard_layer(manifest.n),
        RhsPreparation::RealAmplitudeTree => prepare_state(&b)?,
    };
    Ok(ProblemInstance {
        n: manifest.n,
        a_dense,
        lcu,
        b,
        b_circuit,
        rhs_preparation: manifest.rhs_preparation,
        metadata: manifest.metadata,
    })
}

/// Checks the construction invariants of an instance; used by tests and
/// by the command-line generator after building.
pub fn validate_instance(inst: &ProblemInstance) -> Result<()> {
    let norm = norm2_real(&inst.b);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotUnitNorm { norm, tol: 1e-9 });
    }
    if let Some(a) = &inst.a_dense {
        let back = inst.lcu.reconstruct()?;
        let diff = back.max_abs_diff(a);
        if diff > 1e-10 {
            return Err(Error::Invalid(format!(
                "LCU does not reconstruct the dense matrix (max deviation {diff:.3e})"
            )));
        }
        let evs = hermitian_eigenvalues(a, HERMITICITY_TOL.max(1e-9))?;
        let max = evs.iter().map(|l| l.abs()).fold(0.0, f64::max);
        if (max - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("spectral max is {max}, expected 1")));
        }
    }
    let prepared = inst.b_circuit.run_from_zero()?;
    let b_state = crate::circuit::StateVector::from_amplitudes(inst.n, inst.b_complex())?;
    if prepared.fidelity(&b_state) < 1.0 - 1e-9 {
        return Err(Error::Invalid("b circuit does not prepare b".into()));
    }
    Ok(())
}
