//! Gate model and statevector simulation.
//!
//! Qubit ordering: qubit 0 is the most significant bit of an amplitude
//! index, matching the leftmost letter of a Pauli string. Every gate acts
//! as a single-qubit base operation on its target, conditioned on a
//! (possibly empty) set of control qubits; CX and CZ are the controlled
//! forms of X and Z with the control held in `controls`. Additional
//! controls stack on the same list, so a CZ inside a controlled circuit
//! becomes a CCZ without changing representation.
//!
//! Lowering targets the {RX, RY, RZ, CX} basis. Rule table (phases are
//! global scalars, listed per rule before the replacement's own gates are
//! lowered further):
//!
//! | gate           | replacement                                   | phase  |
//! |----------------|-----------------------------------------------|--------|
//! | H              | RZ(pi) RY(pi/2)                               | i      |
//! | S / Sdg        | RZ(+-pi/2)                                    | e^{+-i pi/4} |
//! | X / Y / Z      | RX(pi) / RY(pi) / RZ(pi)                      | i      |
//! | CZ             | H(t) CX H(t)                                  | exact  |
//! | CY             | RZ(-pi/2)(t) CX RZ(pi/2)(t)                   | exact  |
//! | CH             | RY(-pi/4)(t) CZ RY(pi/4)(t)                   | exact  |
//! | CRY(a)         | RY(a/2)(t) CX RY(-a/2)(t) CX                  | exact  |
//! | CRX(a)         | H(t) CRZ(a) H(t)                              | exact  |
//! | CRZ(a)         | RZ(a/2)(t) CX RZ(-a/2)(t) CX                  | exact  |
//! | CS / CSdg      | RZ(+-pi/4)(c) RZ(+-pi/4)(t) CX RZ(-+pi/4)(t) CX | e^{+-i pi/8} |
//! | CCZ            | 6 CX + 7 RZ(+-pi/4)                           | e^{-i pi/8} |
//! | CCX            | H(t) CCZ H(t)                                 | e^{-i pi/8} |
//!
//! The controlled forms are exact up to one overall scalar, so wrapping a
//! circuit in [`controlled`] and lowering preserves the block structure
//! |0><0| (x) I + |1><1| (x) U up to a global phase of the whole circuit.
//! A controlled *relative* phase never arises from this table.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GateKind {
    RX,
    RY,
    RZ,
    H,
    S,
    Sdg,
    X,
    Y,
    Z,
    CX,
    CZ,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::RX | GateKind::RY | GateKind::RZ)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::RX => "RX",
            GateKind::RY => "RY",
            GateKind::RZ => "RZ",
            GateKind::H => "H",
            GateKind::S => "S",
            GateKind::Sdg => "Sdg",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::CX => "CX",
            GateKind::CZ => "CZ",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "RX" => GateKind::RX,
            "RY" => GateKind::RY,
            "RZ" => GateKind::RZ,
            "H" => GateKind::H,
            "S" => GateKind::S,
            "Sdg" => GateKind::Sdg,
            "X" => GateKind::X,
            "Y" => GateKind::Y,
            "Z" => GateKind::Z,
            "CX" => GateKind::CX,
            "CZ" => GateKind::CZ,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    /// Rotation angle in radians; unused (0) for non-rotation kinds.
    pub angle: f64,
    pub controls: Vec<usize>,
    pub targets: Vec<usize>,
}

impl Gate {
    pub fn rx(target: usize, angle: f64) -> Self {
        Self { kind: GateKind::RX, angle, controls: vec![], targets: vec![target] }
    }

    pub fn ry(target: usize, angle: f64) -> Self {
        Self { kind: GateKind::RY, angle, controls: vec![], targets: vec![target] }
    }

    pub fn rz(target: usize, angle: f64) -> Self {
        Self { kind: GateKind::RZ, angle, controls: vec![], targets: vec![target] }
    }

    pub fn h(target: usize) -> Self {
        Self { kind: GateKind::H, angle: 0.0, controls: vec![], targets: vec![target] }
    }

    pub fn s(target: usize) -> Self {
        Self { kind: GateKind::S, angle: 0.0, controls: vec![], targets: vec![target] }
    }

    pub fn sdg(target: usize) -> Self {
        Self { kind: GateKind::Sdg, angle: 0.0, controls: vec![], targets: vec![target] }
    }

    pub fn x(target: usize) -> Self {
        Self { kind: GateKind::X, angle: 0.0, controls: vec![], targets: vec![target] }
    }

    pub fn y(target: usize) -> Self {
        Self { kind: GateKind::Y, angle: 0.0, controls: vec![], targets: vec![target] }
    }

    pub fn z(target: usize) -> Self {
        Self { kind: GateKind::Z, angle: 0.0, controls: vec![], targets: vec![target] }
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self { kind: GateKind::CX, angle: 0.0, controls: vec![control], targets: vec![target] }
    }

    pub fn cz(control: usize, target: usize) -> Self {
        Self { kind: GateKind::CZ, angle: 0.0, controls: vec![control], targets: vec![target] }
    }

    /// All qubits the gate touches.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.controls.iter().chain(self.targets.iter()).copied()
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.targets.len() != 1 {
            return Err(Error::Invalid(format!(
                "gate {} must have exactly one target",
                self.kind.name()
            )));
        }
        if self.kind.is_rotation() && !self.angle.is_finite() {
            return Err(Error::Invalid("rotation angle must be finite".into()));
        }
        let mut seen = Vec::new();
        for q in self.qubits() {
            if q >= n {
                return Err(Error::Invalid(format!(
                    "qubit {q} out of range for {n}-qubit circuit"
                )));
            }
            if seen.contains(&q) {
                return Err(Error::Invalid(format!("duplicate qubit {q} in gate")));
            }
            seen.push(q);
        }
        match self.kind {
            GateKind::CX | GateKind::CZ if self.controls.is_empty() => Err(Error::Invalid(
                format!("{} requires at least one control", self.kind.name()),
            )),
            _ => Ok(()),
        }
    }

    /// 2x2 matrix applied on the target when all controls read 1.
    fn base_matrix(&self) -> [Complex64; 4] {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        match self.kind {
            GateKind::RX => {
                let (s, c) = (self.angle / 2.0).sin_cos();
                [
                    Complex64::new(c, 0.0),
                    Complex64::new(0.0, -s),
                    Complex64::new(0.0, -s),
                    Complex64::new(c, 0.0),
                ]
            }
            GateKind::RY => {
                let (s, c) = (self.angle / 2.0).sin_cos();
                [
                    Complex64::new(c, 0.0),
                    Complex64::new(-s, 0.0),
                    Complex64::new(s, 0.0),
                    Complex64::new(c, 0.0),
                ]
            }
            GateKind::RZ => {
                let (s, c) = (self.angle / 2.0).sin_cos();
                [Complex64::new(c, -s), zero, zero, Complex64::new(c, s)]
            }
            GateKind::H => {
                let h = Complex64::new(1.0 / 2.0_f64.sqrt(), 0.0);
                [h, h, h, -h]
            }
            GateKind::S => [one, zero, zero, Complex64::new(0.0, 1.0)],
            GateKind::Sdg => [one, zero, zero, Complex64::new(0.0, -1.0)],
            GateKind::X | GateKind::CX => [zero, one, one, zero],
            GateKind::Y => [zero, Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), zero],
            GateKind::Z | GateKind::CZ => [one, zero, zero, -one],
        }
    }

    fn adjoint(&self) -> Self {
        let mut g = self.clone();
        match self.kind {
            GateKind::RX | GateKind::RY | GateKind::RZ => g.angle = -self.angle,
            GateKind::S => g.kind = GateKind::Sdg,
            GateKind::Sdg => g.kind = GateKind::S,
            // H, X, Y, Z, CX, CZ are self-adjoint.
            _ => {}
        }
        g
    }

    fn shifted(&self, offset: usize) -> Self {
        Gate {
            kind: self.kind,
            angle: self.angle,
            controls: self.controls.iter().map(|q| q + offset).collect(),
            targets: self.targets.iter().map(|q| q + offset).collect(),
        }
    }
}

impl fmt::Display for Gate {
    /// Line format: `KIND angle controls targets`, with `-` for an absent
    /// angle or empty control list and commas inside lists.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let angle = if self.kind.is_rotation() { format!("{}", self.angle) } else { "-".into() };
        let controls = if self.controls.is_empty() {
            "-".into()
        } else {
            self.controls.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(",")
        };
        let targets =
            self.targets.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "{} {} {} {}", self.kind.name(), angle, controls, targets)
    }
}

/// 2^n complex amplitudes with unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zero_state(n: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { n, amps }
    }

    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1 << n {
            return Err(Error::DimensionMismatch(format!(
                "state vector for {n} qubits needs {} amplitudes, got {}",
                1usize << n,
                amps.len()
            )));
        }
        Ok(Self { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        crate::numerics::norm2(&self.amps)
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        crate::numerics::inner(&self.amps, &other.amps)
    }

    /// |<self|other>|^2.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }
}

/// Ordered gate list over a fixed register, with parameter slots pointing
/// at the RY gates whose angles form the variational parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
    parameter_slots: Vec<usize>,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Self { n, gates: Vec::new(), parameter_slots: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn parameter_count(&self) -> usize {
        self.parameter_slots.len()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.n)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Pushes an RY gate and registers it as the next parameter slot.
    pub fn push_parameterized_ry(&mut self, target: usize, angle: f64) -> Result<()> {
        self.push(Gate::ry(target, angle))?;
        self.parameter_slots.push(self.gates.len() - 1);
        Ok(())
    }

    /// Appends all gates of `other` (same register width); parameter slots
    /// carry over in order.
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch(format!(
                "cannot append a {}-qubit circuit to a {}-qubit circuit",
                other.n, self.n
            )));
        }
        let offset = self.gates.len();
        self.gates.extend(other.gates.iter().cloned());
        self.parameter_slots.extend(other.parameter_slots.iter().map(|s| s + offset));
        Ok(())
    }

    /// Rebinds the parameterized RY angles.
    pub fn bind_parameters(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.parameter_slots.len() {
            return Err(Error::ParameterCount {
                expected: self.parameter_slots.len(),
                got: theta.len(),
            });
        }
        for (slot, &angle) in self.parameter_slots.iter().zip(theta) {
            self.gates[*slot].angle = angle;
        }
        Ok(())
    }

    /// The same gates embedded in a register widened by `offset` ancillas
    /// in front (qubit q becomes q + offset).
    pub fn embedded(&self, new_n: usize, offset: usize) -> Result<Circuit> {
        if self.n + offset > new_n {
            return Err(Error::DimensionMismatch("embedding exceeds register".into()));
        }
        Ok(Circuit {
            n: new_n,
            gates: self.gates.iter().map(|g| g.shifted(offset)).collect(),
            parameter_slots: self.parameter_slots.clone(),
        })
    }

    /// Adjoint circuit: gates reversed and conjugated.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n: self.n,
            gates: self.gates.iter().rev().map(Gate::adjoint).collect(),
            parameter_slots: Vec::new(),
        }
    }

    /// Applies the circuit to `input` and returns the output state.
    pub fn simulate(&self, input: &StateVector) -> Result<StateVector> {
        if input.n != self.n {
            return Err(Error::DimensionMismatch(format!(
                "circuit has {} qubits, state has {}",
                self.n, input.n
            )));
        }
        let mut amps = input.amps.clone();
        for gate in &self.gates {
            apply_gate(&mut amps, self.n, gate);
        }
        Ok(StateVector { n: self.n, amps })
    }

    pub fn run_from_zero(&self) -> Result<StateVector> {
        self.simulate(&StateVector::zero_state(self.n))
    }

    /// One-gate-per-line text form, for golden files.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_text(n: usize, text: &str) -> Result<Circuit> {
        let mut circuit = Circuit::new(n);
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parse = |msg: &str| Error::Parse { line: idx + 1, message: msg.into() };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(parse("expected `KIND angle controls targets`"));
            }
            let kind = GateKind::from_name(fields[0])
                .ok_or_else(|| parse(&format!("unknown gate kind '{}'", fields[0])))?;
            let angle = if fields[1] == "-" {
                0.0
            } else {
                fields[1].parse::<f64>().map_err(|_| parse("bad angle"))?
            };
            let controls = if fields[2] == "-" {
                vec![]
            } else {
                fields[2]
                    .split(',')
                    .map(|t| t.parse::<usize>().map_err(|_| parse("bad control index")))
                    .collect::<Result<Vec<_>>>()?
            };
            let targets = fields[3]
                .split(',')
                .map(|t| t.parse::<usize>().map_err(|_| parse("bad target index")))
                .collect::<Result<Vec<_>>>()?;
            circuit.push(Gate { kind, angle, controls, targets })?;
        }
        Ok(circuit)
    }
}

fn apply_gate(amps: &mut [Complex64], n: usize, gate: &Gate) {
    let target = gate.targets[0];
    let tbit = 1usize << (n - 1 - target);
    let cmask: usize =
        gate.controls.iter().fold(0, |m, &q| m | (1usize << (n - 1 - q)));
    let [m00, m01, m10, m11] = gate.base_matrix();
    let dim = amps.len();
    for idx in 0..dim {
        if idx & tbit != 0 || idx & cmask != cmask {
            continue;
        }
        let hi = idx | tbit;
        let a0 = amps[idx];
        let a1 = amps[hi];
        amps[idx] = m00 * a0 + m01 * a1;
        amps[hi] = m10 * a0 + m11 * a1;
    }
}

/// Number of ansatz parameters for `n` qubits and `layers` layers.
pub fn ansatz_parameter_count(n: usize, layers: usize) -> usize {
    n + layers * (2 * n - 2)
}

/// Layered hardware-efficient ansatz over RY and CZ.
///
/// One RY on every qubit, then per layer: CZ on pairs (0,1),(2,3),...,
/// RY on every qubit, CZ on pairs (1,2),(3,4),..., and RY on the interior
/// qubits 1..n-2. Total parameter count is n + layers*(2n-2).
pub fn build_ansatz(n: usize, layers: usize, theta: &[f64]) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::Invalid("ansatz needs at least 2 qubits".into()));
    }
    let expected = ansatz_parameter_count(n, layers);
    if theta.len() != expected {
        return Err(Error::ParameterCount { expected, got: theta.len() });
    }
    let mut c = Circuit::new(n);
    let mut next = 0usize;
    for q in 0..n {
        c.push_parameterized_ry(q, theta[next])?;
        next += 1;
    }
    for _ in 0..layers {
        let mut q = 0;
        while q + 1 < n {
            c.push(Gate::cz(q, q + 1))?;
            q += 2;
        }
        for q in 0..n {
            c.push_parameterized_ry(q, theta[next])?;
            next += 1;
        }
        let mut q = 1;
        while q + 1 < n {
            c.push(Gate::cz(q, q + 1))?;
            q += 2;
        }
        for q in 1..n.saturating_sub(1) {
            c.push_parameterized_ry(q, theta[next])?;
            next += 1;
        }
    }
    debug_assert_eq!(next, expected);
    Ok(c)
}

/// State preparation for a real unit vector by a tree of multiplexed RY
/// rotations.
///
/// Levels above the leaves rotate by 2*atan2 of the nonnegative subtree
/// norms; the leaf level uses the signed pair (b_even, b_odd), which makes
/// the output amplitudes equal `b` exactly (global phase +1). Multiplexors
/// whose angles are all zero are omitted, so basis states give an empty
/// circuit.
pub fn prepare_state(b: &[f64]) -> Result<Circuit> {
    let dim = b.len();
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    let n = dim.trailing_zeros() as usize;
    let norm = crate::numerics::norm2_real(b);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotUnitNorm { norm, tol: 1e-9 });
    }

    // subtree_norm[level][prefix]: L2 norm of the amplitudes under the
    // prefix of `level` bits. Level n holds |b_z| at the leaves.
    let mut levels: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    levels.push(b.iter().map(|x| x.abs()).collect());
    for _ in 0..n {
        let prev = levels.last().unwrap();
        let half: Vec<f64> = (0..prev.len() / 2)
            .map(|i| (prev[2 * i].powi(2) + prev[2 * i + 1].powi(2)).sqrt())
            .collect();
        levels.push(half);
    }
    levels.reverse(); // levels[k] now has 2^k entries.

    let mut circuit = Circuit::new(n);
    for q in 0..n {
        let angles: Vec<f64> = (0..(1usize << q))
            .map(|prefix| {
                let parent = levels[q][prefix];
                if parent == 0.0 {
                    return 0.0;
                }
                if q + 1 == n {
                    // Leaf level: signed amplitudes fix the signs exactly.
                    2.0 * f64::atan2(b[2 * prefix + 1], b[2 * prefix])
                } else {
                    2.0 * f64::atan2(levels[q + 1][2 * prefix + 1], levels[q + 1][2 * prefix])
                }
            })
            .collect();
        if angles.iter().all(|a| *a == 0.0) {
            continue;
        }
        let controls: Vec<usize> = (0..q).collect();
        emit_multiplexed_ry(&mut circuit, &controls, q, &angles)?;
    }
    Ok(circuit)
}

/// Emits a uniformly controlled RY with 2^k single-control CX gates and
/// 2^k RY gates (Gray-code walk). `angles[j]` applies when the controls
/// read the bit pattern j (controls[0] = most significant bit).
fn emit_multiplexed_ry(
    circuit: &mut Circuit,
    controls: &[usize],
    target: usize,
    angles: &[f64],
) -> Result<()> {
    let k = controls.len();
    debug_assert_eq!(angles.len(), 1 << k);
    if k == 0 {
        return circuit.push(Gate::ry(target, angles[0]));
    }
    let size = 1usize << k;
    let gray = |i: usize| i ^ (i >> 1);
    // theta_x = sum_i (-1)^{<gray(i), x>} phi_i  =>  phi = 2^-k G^T theta.
    let mut phis = vec![0.0; size];
    for (i, phi) in phis.iter_mut().enumerate() {
        let g = gray(i);
        let mut acc = 0.0;
        for (x, theta) in angles.iter().enumerate() {
            let sign = if (g & x).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * theta;
        }
        *phi = acc / size as f64;
    }
    for i in 0..size {
        circuit.push(Gate::ry(target, phis[i]))?;
        // Bit flipped between gray(i) and gray(i+1); the final step closes
        // the cycle on the most significant bit.
        let flip = if i + 1 == size { k - 1 } else { (gray(i) ^ gray(i + 1)).trailing_zeros() as usize };
        // Pattern bit b corresponds to controls[k-1-b].
        circuit.push(Gate::cx(controls[k - 1 - flip], target))?;
    }
    Ok(())
}

/// Prepends one ancilla as qubit 0 and adds it as a control on every gate,
/// realizing |0><0| (x) I + |1><1| (x) U exactly.
pub fn controlled(c: &Circuit) -> Circuit {
    let mut gates = Vec::with_capacity(c.gates.len());
    for g in &c.gates {
        let mut g = g.shifted(1);
        g.controls.insert(0, 0);
        gates.push(g);
    }
    Circuit { n: c.n + 1, gates, parameter_slots: c.parameter_slots.clone() }
}

/// Rewrites a circuit into the {RX, RY, RZ, CX} basis.
///
/// The output equals the input up to a global phase. A peephole pass then
/// merges adjacent same-axis rotations on a qubit and deletes angle-0
/// rotations.
pub fn lower(c: &Circuit) -> Result<Circuit> {
    let mut out = Circuit::new(c.n);
    for gate in &c.gates {
        lower_gate(&mut out, gate)?;
    }
    peephole(&mut out);
    Ok(out)
}

fn lower_gate(out: &mut Circuit, gate: &Gate) -> Result<()> {
    let t = gate.targets[0];
    let nc = gate.controls.len();
    match (gate.kind, nc) {
        (GateKind::RX | GateKind::RY | GateKind::RZ, 0) => out.push(gate.clone()),
        (GateKind::H, 0) => {
            out.push(Gate::rz(t, PI))?;
            out.push(Gate::ry(t, FRAC_PI_2))
        }
        (GateKind::S, 0) => out.push(Gate::rz(t, FRAC_PI_2)),
        (GateKind::Sdg, 0) => out.push(Gate::rz(t, -FRAC_PI_2)),
        (GateKind::X, 0) => out.push(Gate::rx(t, PI)),
        (GateKind::Y, 0) => out.push(Gate::ry(t, PI)),
        (GateKind::Z, 0) => out.push(Gate::rz(t, PI)),
        (GateKind::X | GateKind::CX, 1) => out.push(Gate::cx(gate.controls[0], t)),
        (GateKind::Z | GateKind::CZ, 1) => {
            let c0 = gate.controls[0];
            lower_gate(out, &Gate::h(t))?;
            out.push(Gate::cx(c0, t))?;
            lower_gate(out, &Gate::h(t))
        }
        (GateKind::Y, 1) => {
            let c0 = gate.controls[0];
            out.push(Gate::rz(t, -FRAC_PI_2))?;
            out.push(Gate::cx(c0, t))?;
            out.push(Gate::rz(t, FRAC_PI_2))
        }
        (GateKind::H, 1) => {
            let c0 = gate.controls[0];
            out.push(Gate::ry(t, -FRAC_PI_4))?;
            lower_gate(out, &Gate::cz(c0, t))?;
            out.push(Gate::ry(t, FRAC_PI_4))
        }
        (GateKind::RY, 1) => {
            let c0 = gate.controls[0];
            out.push(Gate::ry(t, gate.angle / 2.0))?;
            out.push(Gate::cx(c0, t))?;
            out.push(Gate::ry(t, -gate.angle / 2.0))?;
            out.push(Gate::cx(c0, t))
        }
        (GateKind::RZ, 1) => {
            let c0 = gate.controls[0];
            out.push(Gate::rz(t, gate.angle / 2.0))?;
            out.push(Gate::cx(c0, t))?;
            out.push(Gate::rz(t, -gate.angle / 2.0))?;
            out.push(Gate::cx(c0, t))
        }
        // RX = H RZ H exactly, so conjugate the controlled-RZ rule.
        (GateKind::RX, 1) => {
            let c0 = gate.controls[0];
            lower_gate(out, &Gate::h(t))?;
            lower_gate(out, &Gate { kind: GateKind::RZ, angle: gate.angle, controls: vec![c0], targets: vec![t] })?;
            lower_gate(out, &Gate::h(t))
        }
        (GateKind::S, 1) | (GateKind::Sdg, 1) => {
            let sign = if gate.kind == GateKind::S { 1.0 } else { -1.0 };
            let c0 = gate.controls[0];
            out.push(Gate::rz(c0, sign * FRAC_PI_4))?;
            out.push(Gate::rz(t, sign * FRAC_PI_4))?;
            out.push(Gate::cx(c0, t))?;
            out.push(Gate::rz(t, -sign * FRAC_PI_4))?;
            out.push(Gate::cx(c0, t))
        }
        (GateKind::Z | GateKind::CZ, 2) => {
            lower_ccz(out, gate.controls[0], gate.controls[1], t)
        }
        (GateKind::X | GateKind::CX, 2) => {
            lower_gate(out, &Gate::h(t))?;
            lower_ccz(out, gate.controls[0], gate.controls[1], t)?;
            lower_gate(out, &Gate::h(t))
        }
        _ => Err(Error::UnsupportedGate(format!(
            "{} with {} controls",
            gate.kind.name(),
            nc
        ))),
    }
}

/// CCZ as 6 CX and 7 RZ(+-pi/4). Exact up to the global phase e^{-i pi/8};
/// a phase-exact CCZ cannot exist in this basis, since every {RX,RY,RZ,CX}
/// circuit has unit determinant while det(CCZ) = -1.
fn lower_ccz(out: &mut Circuit, a: usize, b: usize, c: usize) -> Result<()> {
    let t = FRAC_PI_4;
    out.push(Gate::cx(b, c))?;
    out.push(Gate::rz(c, -t))?;
    out.push(Gate::cx(a, c))?;
    out.push(Gate::rz(c, t))?;
    out.push(Gate::cx(b, c))?;
    out.push(Gate::rz(c, -t))?;
    out.push(Gate::cx(a, c))?;
    out.push(Gate::rz(c, t))?;
    out.push(Gate::rz(b, t))?;
    out.push(Gate::cx(a, b))?;
    out.push(Gate::rz(b, -t))?;
    out.push(Gate::cx(a, b))?;
    out.push(Gate::rz(a, t))
}

fn peephole(c: &mut Circuit) {
    loop {
        let mut changed = false;
        // last_on[q] = index of the previous surviving gate touching q.
        let mut last_on: Vec<Option<usize>> = vec![None; c.n];
        let mut keep = vec![true; c.gates.len()];
        for i in 0..c.gates.len() {
            let gate = c.gates[i].clone();
            if gate.kind.is_rotation() && gate.controls.is_empty() {
                let q = gate.targets[0];
                if let Some(j) = last_on[q] {
                    let prev = &c.gates[j];
                    if prev.kind == gate.kind && prev.controls.is_empty() {
                        c.gates[j].angle += gate.angle;
                        keep[i] = false;
                        changed = true;
                        continue;
                    }
                }
            }
            for q in gate.qubits() {
                last_on[q] = Some(i);
            }
        }
        let mut merged: Vec<Gate> = Vec::with_capacity(c.gates.len());
        for (i, g) in c.gates.drain(..).enumerate() {
            if !keep[i] {
                continue;
            }
            if g.kind.is_rotation() && g.controls.is_empty() && g.angle.abs() <= 1e-12 {
                changed = true;
                continue;
            }
            merged.push(g);
        }
        c.gates = merged;
        c.parameter_slots.clear();
        if !changed {
            break;
        }
    }
}

/// Gate counts and depth of a lowered circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub counts: BTreeMap<String, usize>,
    pub total: usize,
    /// Longest chain of gates sharing qubits.
    pub depth: usize,
}

pub fn resources(c: &Circuit) -> Result<ResourceReport> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut frontier = vec![0usize; c.n];
    let mut depth = 0usize;
    for gate in &c.gates {
        let lowered = match gate.kind {
            GateKind::RX | GateKind::RY | GateKind::RZ => gate.controls.is_empty(),
            GateKind::CX => gate.controls.len() == 1,
            _ => false,
        };
        if !lowered {
            return Err(Error::NotLowered(format!(
                "{} with {} controls",
                gate.kind.name(),
                gate.controls.len()
            )));
        }
        *counts.entry(gate.kind.name().to_string()).or_insert(0) += 1;
        let level = 1 + gate.qubits().map(|q| frontier[q]).max().unwrap_or(0);
        for q in gate.qubits() {
            frontier[q] = level;
        }
        depth = depth.max(level);
    }
    let total = counts.values().sum();
    Ok(ResourceReport { counts, total, depth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DenseMatrix;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Dense unitary of a circuit by simulating all basis inputs.
    fn dense_unitary(c: &Circuit) -> DenseMatrix {
        let dim = 1usize << c.n();
        let mut m = DenseMatrix::zeros(dim, dim);
        for col in 0..dim {
            let mut amps = vec![c64(0.0, 0.0); dim];
            amps[col] = c64(1.0, 0.0);
            let out = c
                .simulate(&StateVector::from_amplitudes(c.n(), amps).unwrap())
                .unwrap();
            for (row, a) in out.amplitudes().iter().enumerate() {
                m.set(row, col, *a);
            }
        }
        m
    }

    /// Max amplitude deviation between two unitaries after aligning the
    /// global phase by the trace of U^dag W.
    fn phase_aligned_distance(u: &DenseMatrix, w: &DenseMatrix) -> f64 {
        let overlap = u.adjoint().matmul(w).unwrap().trace();
        let phase = if overlap.norm() > 1e-12 { overlap / overlap.norm() } else { c64(1.0, 0.0) };
        u.scale(phase).max_abs_diff(w)
    }

    fn single_matrix(kind: GateKind, angle: f64) -> DenseMatrix {
        let g = Gate { kind, angle, controls: vec![], targets: vec![0] };
        let m = g.base_matrix();
        DenseMatrix::new(2, 2, m.to_vec()).unwrap()
    }

    fn random_circuit(n: usize, gates: usize, rng: &mut ChaCha8Rng) -> Circuit {
        let mut c = Circuit::new(n);
        for _ in 0..gates {
            let t = rng.gen_range(0..n);
            match rng.gen_range(0..8) {
                0 => c.push(Gate::ry(t, rng.gen_range(-3.0..3.0))).unwrap(),
                1 => c.push(Gate::rz(t, rng.gen_range(-3.0..3.0))).unwrap(),
                2 => c.push(Gate::rx(t, rng.gen_range(-3.0..3.0))).unwrap(),
                3 => c.push(Gate::h(t)).unwrap(),
                4 => c.push(Gate::s(t)).unwrap(),
                5 => c.push(Gate::z(t)).unwrap(),
                6 if n > 1 => {
                    let mut ctrl = rng.gen_range(0..n);
                    while ctrl == t {
                        ctrl = rng.gen_range(0..n);
                    }
                    c.push(Gate::cx(ctrl, t)).unwrap();
                }
                _ if n > 1 => {
                    let mut ctrl = rng.gen_range(0..n);
                    while ctrl == t {
                        ctrl = rng.gen_range(0..n);
                    }
                    c.push(Gate::cz(ctrl, t)).unwrap();
                }
                _ => c.push(Gate::h(t)).unwrap(),
            }
        }
        c
    }

    #[test]
    fn hadamard_on_zero() {
        let mut c = Circuit::new(1);
        c.push(Gate::h(0)).unwrap();
        let out = c.run_from_zero().unwrap();
        let r = 1.0 / 2.0_f64.sqrt();
        assert!((out.amplitudes()[0] - c64(r, 0.0)).norm() < 1e-15);
        assert!((out.amplitudes()[1] - c64(r, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn cx_on_basis_state() {
        // |10>: qubit 0 (MSB) is 1; CX(0,1) flips qubit 1 giving |11>.
        let mut c = Circuit::new(2);
        c.push(Gate::cx(0, 1)).unwrap();
        let mut amps = vec![c64(0.0, 0.0); 4];
        amps[0b10] = c64(1.0, 0.0);
        let out = c.simulate(&StateVector::from_amplitudes(2, amps).unwrap()).unwrap();
        assert!((out.amplitudes()[0b11] - c64(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn random_circuit_matches_kronecker_product_oracle() {
        // Build the full 8x8 unitary gate by gate with Kronecker products
        // and embedded controlled blocks, then compare amplitudes.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            let circ = random_circuit(3, 12, &mut rng);
            let dim = 8;
            let mut u = DenseMatrix::identity(dim);
            for gate in circ.gates() {
                let mut g = DenseMatrix::zeros(dim, dim);
                let base = single_matrix(gate.kind, gate.angle);
                let tbit = 1usize << (3 - 1 - gate.targets[0]);
                let cmask: usize =
                    gate.controls.iter().fold(0, |m, &q| m | (1usize << (3 - 1 - q)));
                for col in 0..dim {
                    if col & cmask != cmask {
                        g.set(col, col, c64(1.0, 0.0));
                        continue;
                    }
                    let b = usize::from(col & tbit != 0);
                    for r in 0..2 {
                        let row = (col & !tbit) | if r == 1 { tbit } else { 0 };
                        g.add_assign_at(row, col, base.get(r, b));
                    }
                }
                u = g.matmul(&u).unwrap();
            }
            let v: Vec<Complex64> = {
                let mut v: Vec<Complex64> = (0..dim)
                    .map(|_| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let norm = crate::numerics::norm2(&v);
                v.iter_mut().for_each(|z| *z /= norm);
                v
            };
            let direct = u.matvec(&v).unwrap();
            let sim = circ
                .simulate(&StateVector::from_amplitudes(3, v).unwrap())
                .unwrap();
            for (a, b) in direct.iter().zip(sim.amplitudes()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn norm_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let n = rng.gen_range(1..=5);
            let circ = random_circuit(n, 30, &mut rng);
            let out = circ.run_from_zero().unwrap();
            assert!((out.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ansatz_parameter_counts() {
        assert_eq!(ansatz_parameter_count(6, 2), 26);
        for n in 2..=10 {
            for layers in 0..=5 {
                let m = ansatz_parameter_count(n, layers);
                let theta = vec![0.1; m];
                let c = build_ansatz(n, layers, &theta).unwrap();
                assert_eq!(c.parameter_count(), m);
                let bad = vec![0.1; m + 1];
                assert!(matches!(
                    build_ansatz(n, layers, &bad),
                    Err(Error::ParameterCount { expected, got }) if expected == m && got == m + 1
                ));
            }
        }
    }

    #[test]
    fn ansatz_layers_zero() {
        let c = build_ansatz(2, 0, &[0.3, 0.4]).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.gates().iter().all(|g| g.kind == GateKind::RY));
    }

    #[test]
    fn ansatz_reaches_equal_superposition() {
        // theta: initial zeros; mid sublayer pi/2 on boundary qubits only;
        // interior sublayer pi/2. CZ layers act trivially along the way.
        for n in 2..=6 {
            let mut theta = vec![0.0; ansatz_parameter_count(n, 1)];
            theta[n] = std::f64::consts::FRAC_PI_2;
            theta[n + n - 1] = std::f64::consts::FRAC_PI_2;
            for q in 1..n - 1 {
                theta[2 * n + q - 1] = std::f64::consts::FRAC_PI_2;
            }
            let out = build_ansatz(n, 1, &theta).unwrap().run_from_zero().unwrap();
            let mut h_layer = Circuit::new(n);
            for q in 0..n {
                h_layer.push(Gate::h(q)).unwrap();
            }
            let want = h_layer.run_from_zero().unwrap();
            for (a, b) in out.amplitudes().iter().zip(want.amplitudes()) {
                assert!((a - b).norm() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn prepare_basis_state_is_empty() {
        let mut b = vec![0.0; 8];
        b[0] = 1.0;
        let c = prepare_state(&b).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn prepare_uniform_matches_hadamard_layer() {
        let n = 3;
        let b = vec![1.0 / (8.0_f64).sqrt(); 8];
        let c = prepare_state(&b).unwrap();
        let got = c.run_from_zero().unwrap();
        let mut h = Circuit::new(n);
        for q in 0..n {
            h.push(Gate::h(q)).unwrap();
        }
        let want = h.run_from_zero().unwrap();
        for (a, b) in got.amplitudes().iter().zip(want.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn prepare_random_real_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=6 {
            for _ in 0..5 {
                let mut b: Vec<f64> = (0..(1 << n)).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = crate::numerics::norm2_real(&b);
                b.iter_mut().for_each(|x| *x /= norm);
                let out = prepare_state(&b).unwrap().run_from_zero().unwrap();
                for (a, want) in out.amplitudes().iter().zip(&b) {
                    assert!((a - c64(*want, 0.0)).norm() < 1e-10, "n={n}");
                }
            }
        }
    }

    #[test]
    fn prepare_rejects_unnormalized() {
        let b = vec![1.0, 1.0];
        assert!(matches!(prepare_state(&b), Err(Error::NotUnitNorm { .. })));
    }

    #[test]
    fn controlled_x_equals_cx() {
        let mut x = Circuit::new(1);
        x.push(Gate::x(0)).unwrap();
        let cx = controlled(&x);
        let mut want = Circuit::new(2);
        want.push(Gate::cx(0, 1)).unwrap();
        assert!(phase_aligned_distance(&dense_unitary(&cx), &dense_unitary(&want)) < 1e-14);
    }

    #[test]
    fn controlled_cz_phase_on_111() {
        let mut cz = Circuit::new(2);
        cz.push(Gate::cz(0, 1)).unwrap();
        let ccz = controlled(&cz);
        let mut amps = vec![c64(0.0, 0.0); 8];
        amps[0b111] = c64(1.0, 0.0);
        let out = ccz.simulate(&StateVector::from_amplitudes(3, amps).unwrap()).unwrap();
        assert!((out.amplitudes()[0b111] - c64(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn controlled_matches_block_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let circ = random_circuit(2, 8, &mut rng);
            let u = dense_unitary(&circ);
            let cu = dense_unitary(&controlled(&circ));
            // Oracle: explicit block matrix [[I, 0], [0, U]].
            let mut want = DenseMatrix::zeros(8, 8);
            for i in 0..4 {
                want.set(i, i, c64(1.0, 0.0));
                for j in 0..4 {
                    want.set(4 + i, 4 + j, u.get(i, j));
                }
            }
            assert!(cu.max_abs_diff(&want) < 1e-12);
        }
    }

    #[test]
    fn controlled_is_identity_on_zero_ancilla() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let circ = random_circuit(3, 15, &mut rng);
        let cu = controlled(&circ);
        // Data state embedded with ancilla |0>: amplitudes must be untouched.
        let data: Vec<Complex64> = {
            let mut v: Vec<Complex64> =
                (0..8).map(|_| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let norm = crate::numerics::norm2(&v);
            v.iter_mut().for_each(|z| *z /= norm);
            v
        };
        let mut amps = vec![c64(0.0, 0.0); 16];
        amps[..8].copy_from_slice(&data);
        let out = cu.simulate(&StateVector::from_amplitudes(4, amps).unwrap()).unwrap();
        for (i, a) in out.amplitudes().iter().enumerate() {
            let want = if i < 8 { data[i] } else { c64(0.0, 0.0) };
            assert!((a - want).norm() == 0.0);
        }
    }

    #[test]
    fn lower_hadamard() {
        let mut h = Circuit::new(1);
        h.push(Gate::h(0)).unwrap();
        let low = lower(&h).unwrap();
        assert_eq!(low.len(), 2);
        assert_eq!(low.gates()[0].kind, GateKind::RZ);
        assert_eq!(low.gates()[1].kind, GateKind::RY);
        assert!(phase_aligned_distance(&dense_unitary(&low), &dense_unitary(&h)) < 1e-12);
    }

    #[test]
    fn lower_cz_truth_table() {
        let mut cz = Circuit::new(2);
        cz.push(Gate::cz(0, 1)).unwrap();
        let low = lower(&cz).unwrap();
        let u = dense_unitary(&low);
        let want = dense_unitary(&cz);
        assert!(phase_aligned_distance(&u, &want) < 1e-12);
        // Basis-state truth table: only |11> flips sign.
        for col in 0..4 {
            let mut amps = vec![c64(0.0, 0.0); 4];
            amps[col] = c64(1.0, 0.0);
            let out = low.simulate(&StateVector::from_amplitudes(2, amps).unwrap()).unwrap();
            let expect = if col == 3 { -1.0 } else { 1.0 };
            // Global phase of the lowered pair is -1; compare ratios.
            let a = out.amplitudes()[col];
            assert!((a.norm() - 1.0).abs() < 1e-12);
            if col == 0 {
                continue;
            }
            let mut ref_amps = vec![c64(0.0, 0.0); 4];
            ref_amps[0] = c64(1.0, 0.0);
            let ref_out =
                low.simulate(&StateVector::from_amplitudes(2, ref_amps).unwrap()).unwrap();
            let rel = (a / ref_out.amplitudes()[0]).re;
            assert!((rel - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn lower_ccz_against_dense_oracle() {
        let mut cz = Circuit::new(2);
        cz.push(Gate::cz(0, 1)).unwrap();
        let ccz = controlled(&cz);
        let low = lower(&ccz).unwrap();
        let mut want = DenseMatrix::identity(8);
        want.set(7, 7, c64(-1.0, 0.0));
        assert!(phase_aligned_distance(&dense_unitary(&low), &want) < 1e-12);
        let rep = resources(&low).unwrap();
        assert_eq!(rep.counts["CX"], 6);
        assert_eq!(rep.counts["RZ"], 7);
    }

    #[test]
    fn lower_ccx_against_dense_oracle() {
        let mut x = Circuit::new(1);
        x.push(Gate::x(0)).unwrap();
        let ccx = controlled(&controlled(&x));
        let low = lower(&ccx).unwrap();
        let mut want = DenseMatrix::identity(8);
        want.set(6, 6, c64(0.0, 0.0));
        want.set(7, 7, c64(0.0, 0.0));
        want.set(6, 7, c64(1.0, 0.0));
        want.set(7, 6, c64(1.0, 0.0));
        assert!(phase_aligned_distance(&dense_unitary(&low), &want) < 1e-12);
    }

    #[test]
    fn lower_preserves_action_on_random_circuits() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let n = rng.gen_range(1..=3);
            let circ = random_circuit(n, 10, &mut rng);
            let wrapped = controlled(&circ);
            for c in [&circ, &wrapped] {
                let low = lower(c).unwrap();
                assert!(
                    phase_aligned_distance(&dense_unitary(&low), &dense_unitary(c)) < 1e-9,
                    "n={}",
                    c.n()
                );
            }
        }
    }

    #[test]
    fn resources_examples() {
        let empty = Circuit::new(2);
        let rep = resources(&empty).unwrap();
        assert_eq!(rep.total, 0);
        assert_eq!(rep.depth, 0);

        let mut cx = Circuit::new(2);
        cx.push(Gate::cx(0, 1)).unwrap();
        let rep = resources(&cx).unwrap();
        assert_eq!(rep.counts["CX"], 1);
        assert_eq!(rep.depth, 1);

        let mut h = Circuit::new(1);
        h.push(Gate::h(0)).unwrap();
        let rep = resources(&lower(&h).unwrap()).unwrap();
        assert_eq!(rep.counts["RY"], 1);
        assert_eq!(rep.counts["RZ"], 1);
        assert_eq!(rep.depth, 2);
    }

    #[test]
    fn resources_rejects_unlowered() {
        let mut h = Circuit::new(1);
        h.push(Gate::h(0)).unwrap();
        assert!(matches!(resources(&h), Err(Error::NotLowered(_))));
    }

    #[test]
    fn peephole_merges_and_deletes() {
        let mut c = Circuit::new(1);
        c.push(Gate::ry(0, 0.5)).unwrap();
        c.push(Gate::ry(0, -0.5)).unwrap();
        let low = lower(&c).unwrap();
        assert!(low.is_empty());
    }

    #[test]
    fn text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let circ = random_circuit(3, 20, &mut rng);
        let text = circ.to_text();
        let back = Circuit::from_text(3, &text).unwrap();
        assert_eq!(circ.gates(), back.gates());
    }

    #[test]
    fn inverse_undoes_circuit() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let circ = random_circuit(3, 15, &mut rng);
        let state = circ.run_from_zero().unwrap();
        let back = circ.inverse().simulate(&state).unwrap();
        let zero = StateVector::zero_state(3);
        assert!(back.fidelity(&zero) > 1.0 - 1e-12);
    }

    #[test]
    fn bind_parameters_rebinds_ansatz() {
        let theta = vec![0.1, 0.2, 0.3, 0.4];
        let mut c = build_ansatz(2, 1, &theta).unwrap();
        let out1 = c.run_from_zero().unwrap();
        c.bind_parameters(&[0.5, 0.6, 0.7, 0.8]).unwrap();
        c.bind_parameters(&theta).unwrap();
        let out2 = c.run_from_zero().unwrap();
        assert!(out1.fidelity(&out2) > 1.0 - 1e-14);
    }
}
