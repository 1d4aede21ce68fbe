//! Dense statevector simulation over a minimal gate set.
//!
//! Qubit 0 is the least significant bit of a basis index, so the amplitude of
//! `|q_{n-1} … q_1 q_0⟩` lives at index `Σ q_k 2^k`. Bitstrings produced by
//! [`measure_counts`] are printed with qubit `n-1` on the left.
//!
//! Rotations follow `RY(θ) = exp(-iθY/2)` and `RZ(θ) = exp(-iθZ/2)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateOp {
    H(usize),
    X(usize),
    Ry(usize, f64),
    Rz(usize, f64),
    Cnot { control: usize, target: usize },
}

impl GateOp {
    fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            GateOp::H(q) | GateOp::X(q) | GateOp::Ry(q, _) | GateOp::Rz(q, _) => (q, None),
            GateOp::Cnot { control, target } => (target, Some(control)),
        }
    }

    /// Checks qubit indices against a register width.
    pub fn validate(&self, width: usize) -> Result<()> {
        let (target, control) = self.qubits();
        if target >= width {
            return Err(Error::Argument(format!(
                "{self}: qubit {target} out of range for width {width}"
            )));
        }
        if let Some(c) = control {
            if c >= width {
                return Err(Error::Argument(format!(
                    "{self}: control {c} out of range for width {width}"
                )));
            }
            if c == target {
                return Err(Error::Argument(format!("{self}: control equals target")));
            }
        }
        Ok(())
    }

    /// Adjoint gate. H, X and CNOT are self-inverse; rotations negate.
    pub fn inverse(self) -> Self {
        match self {
            GateOp::Ry(q, t) => GateOp::Ry(q, -t),
            GateOp::Rz(q, t) => GateOp::Rz(q, -t),
            other => other,
        }
    }

    /// Same gate with its rotation angle replaced (identity for fixed gates).
    pub fn with_angle(self, theta: f64) -> Self {
        match self {
            GateOp::Ry(q, _) => GateOp::Ry(q, theta),
            GateOp::Rz(q, _) => GateOp::Rz(q, theta),
            other => other,
        }
    }
}

/// Line format `KIND q[,q2][,θ]`, e.g. `H 0`, `CNOT 0,1`, `RZ 2,0.5`.
impl fmt::Display for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GateOp::H(q) => write!(f, "H {q}"),
            GateOp::X(q) => write!(f, "X {q}"),
            GateOp::Ry(q, t) => write!(f, "RY {q},{t:?}"),
            GateOp::Rz(q, t) => write!(f, "RZ {q},{t:?}"),
            GateOp::Cnot { control, target } => write!(f, "CNOT {control},{target}"),
        }
    }
}

impl FromStr for GateOp {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let bad = || Error::Structural(format!("malformed gate line `{line}`"));
        let (kind, args) = line.trim().split_once(' ').ok_or_else(bad)?;
        let args: Vec<&str> = args.split(',').map(str::trim).collect();
        let qubit = |i: usize| -> Result<usize> {
            args.get(i).ok_or_else(bad)?.parse().map_err(|_| bad())
        };
        let angle = |i: usize| -> Result<f64> {
            args.get(i).ok_or_else(bad)?.parse().map_err(|_| bad())
        };
        let expect = |n: usize| if args.len() == n { Ok(()) } else { Err(bad()) };
        match kind {
            "H" => expect(1).and(Ok(GateOp::H(qubit(0)?))),
            "X" => expect(1).and(Ok(GateOp::X(qubit(0)?))),
            "RY" => expect(2).and(Ok(GateOp::Ry(qubit(0)?, angle(1)?))),
            "RZ" => expect(2).and(Ok(GateOp::Rz(qubit(0)?, angle(1)?))),
            "CNOT" => expect(2).and(Ok(GateOp::Cnot {
                control: qubit(0)?,
                target: qubit(1)?,
            })),
            _ => Err(bad()),
        }
    }
}

/// Fixed-width, append-only gate list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    width: usize,
    gates: Vec<GateOp>,
}

impl Circuit {
    pub fn new(width: usize) -> Result<Self> {
        if width == 0 || width > MAX_QUBITS {
            return Err(Error::Argument(format!(
                "circuit width must be in 1..={MAX_QUBITS}, got {width}"
            )));
        }
        Ok(Self {
            width,
            gates: Vec::new(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[GateOp] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: GateOp) -> Result<&mut Self> {
        gate.validate(self.width)?;
        self.gates.push(gate);
        Ok(self)
    }

    /// Appends every gate of `other` (which must have the same width).
    pub fn extend_from(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.width != self.width {
            return Err(Error::Dimension(format!(
                "cannot append a {}-qubit circuit to a {}-qubit one",
                other.width, self.width
            )));
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(self)
    }

    /// The adjoint circuit: gates reversed and inverted.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            width: self.width,
            gates: self.gates.iter().rev().map(|g| g.inverse()).collect(),
        }
    }

    /// One gate per line, preceded by a `QUBITS n` header.
    pub fn dump(&self) -> String {
        let mut out = format!("QUBITS {}\n", self.width);
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses the output of [`Circuit::dump`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Structural("empty circuit dump".into()))?;
        let width = header
            .trim()
            .strip_prefix("QUBITS ")
            .and_then(|w| w.parse().ok())
            .ok_or_else(|| Error::Structural(format!("bad circuit header `{header}`")))?;
        let mut circuit = Circuit::new(width)?;
        for line in lines {
            circuit.push(line.parse()?)?;
        }
        Ok(circuit)
    }
}

/// `2^n` complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Argument(format!(
                "register width must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let mut s = Self::zero(n_qubits)?;
        if index >= s.amps.len() {
            return Err(Error::Argument(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Wraps raw amplitudes; the length must be a power of two and the
    /// vector must be normalized within 1e-10.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Argument(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let s = Self {
            n_qubits: len.trailing_zeros() as usize,
            amps,
        };
        if (s.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::Argument(format!("state norm is {}", s.norm())));
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension(format!(
                "inner product of {}- and {}-qubit states",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Multiplies every amplitude by `e^{iφ}`.
    pub fn apply_global_phase(&mut self, phi: f64) {
        let phase = Complex64::from_polar(1.0, phi);
        for a in &mut self.amps {
            *a *= phase;
        }
    }

    /// Applies one gate in place.
    pub fn apply(&mut self, gate: &GateOp) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match *gate {
            GateOp::H(q) => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                self.apply_1q(q, |a, b| ((a + b) * s, (a - b) * s));
            }
            GateOp::X(q) => self.apply_1q(q, |a, b| (b, a)),
            GateOp::Ry(q, theta) => {
                let (sin, cos) = (theta / 2.0).sin_cos();
                self.apply_1q(q, |a, b| (a * cos - b * sin, a * sin + b * cos));
            }
            GateOp::Rz(q, theta) => {
                let lo = Complex64::from_polar(1.0, -theta / 2.0);
                let hi = Complex64::from_polar(1.0, theta / 2.0);
                self.apply_1q(q, |a, b| (a * lo, b * hi));
            }
            GateOp::Cnot { control, target } => {
                let (cm, tm) = (1usize << control, 1usize << target);
                for i in 0..self.amps.len() {
                    if i & cm != 0 && i & tm == 0 {
                        self.amps.swap(i, i | tm);
                    }
                }
            }
        }
        Ok(())
    }

    fn apply_1q<F>(&mut self, q: usize, f: F)
    where
        F: Fn(Complex64, Complex64) -> (Complex64, Complex64),
    {
        let mask = 1usize << q;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let (a, b) = f(self.amps[i], self.amps[i | mask]);
                self.amps[i] = a;
                self.amps[i | mask] = b;
            }
        }
    }
}

/// Applies a single gate, returning the new state.
pub fn apply_gate(mut state: StateVector, gate: &GateOp) -> Result<StateVector> {
    state.apply(gate)?;
    Ok(state)
}

/// Runs `circuit` left to right from `initial`, or from `|0…0⟩` when `None`.
pub fn run(circuit: &Circuit, initial: Option<StateVector>) -> Result<StateVector> {
    let mut state = match initial {
        Some(s) if s.n_qubits != circuit.width => {
            return Err(Error::Dimension(format!(
                "{}-qubit circuit applied to a {}-qubit state",
                circuit.width, s.n_qubits
            )))
        }
        Some(s) => s,
        None => StateVector::zero(circuit.width)?,
    };
    for g in &circuit.gates {
        state.apply(g)?;
    }
    Ok(state)
}

/// `⟨ψ|Z⊗…⊗Z|ψ⟩ = Σ_b (-1)^{popcount(b)} |ψ_b|²`.
pub fn expectation_parity_z(state: &StateVector) -> f64 {
    state
        .amps
        .iter()
        .enumerate()
        .map(|(b, a)| {
            let p = a.norm_sqr();
            if b.count_ones() % 2 == 0 {
                p
            } else {
                -p
            }
        })
        .sum::<f64>()
        .clamp(-1.0, 1.0)
}

/// Samples `shots` measurements in the computational basis.
///
/// Keys are bitstrings with qubit `n-1` leftmost; only observed outcomes are
/// present.
pub fn measure_counts(
    state: &StateVector,
    shots: usize,
    seed: u64,
) -> Result<BTreeMap<String, usize>> {
    if shots == 0 {
        return Err(Error::Argument("shots must be at least 1".into()));
    }
    let mut cumulative = Vec::with_capacity(state.amps.len());
    let mut acc = 0.0;
    for a in &state.amps {
        acc += a.norm_sqr();
        cumulative.push(acc);
    }
    let total = acc;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hist = vec![0usize; state.amps.len()];
    for _ in 0..shots {
        let u = rng.random::<f64>() * total;
        let idx = cumulative
            .partition_point(|&c| c <= u)
            .min(cumulative.len() - 1);
        hist[idx] += 1;
    }
    let width = state.n_qubits;
    Ok(hist
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c > 0)
        .map(|(b, c)| (format!("{b:0width$b}"), c))
        .collect())
}
