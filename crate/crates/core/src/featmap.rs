//! Second-order Pauli feature map with `Z` single-qubit and `XX` two-qubit
//! terms.
//!
//! One repetition of the map is
//!
//! ```text
//! exp(i Σ_{(j,k)} f_jk(x) X_j X_k) · exp(i Σ_m f_m(x) Z_m) · H^⊗n
//! ```
//!
//! with `f_m(x) = x[m]` and `f_jk(x) = (π - x[j])(π - x[k])`; the block is
//! applied `reps` times to `|0…0⟩`.
//!
//! Compilation to the simulator's gate set:
//! * `exp(i f Z)` is `RZ(-2f)`, since `RZ(θ) = exp(-iθZ/2)`.
//! * `exp(i f Z_j Z_k)` is `CNOT(j→k) · RZ_k(-2f) · CNOT(j→k)`.
//! * `exp(i f X_j X_k)` is the `ZZ` block conjugated by `H_j H_k`.
//!
//! Inputs are expected in `[0, 2π]` per feature; [`FeatureScaler`] provides
//! the min-max map fitted on training data.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{self, Circuit, GateOp, StateVector};
use crate::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entanglement {
    /// Adjacent pairs `(0,1), (1,2), …`.
    #[default]
    Linear,
    /// Every pair `j < k`.
    Full,
}

impl fmt::Display for Entanglement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Entanglement::Linear => "linear",
            Entanglement::Full => "full",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureMapConfig {
    pub n_qubits: usize,
    pub reps: usize,
    pub entanglement: Entanglement,
}

impl FeatureMapConfig {
    pub fn new(n_qubits: usize, reps: usize, entanglement: Entanglement) -> Result<Self> {
        let cfg = Self {
            n_qubits,
            reps,
            entanglement,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > qsim::MAX_QUBITS {
            return Err(Error::Config(format!(
                "feature map needs 1..={} qubits, got {}",
                qsim::MAX_QUBITS,
                self.n_qubits
            )));
        }
        if self.reps == 0 {
            return Err(Error::Config("feature map repetitions must be >= 1".into()));
        }
        Ok(())
    }

    /// Entangled qubit pairs, `j < k`, in construction order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_qubits;
        match self.entanglement {
            Entanglement::Linear => (1..n).map(|k| (k - 1, k)).collect(),
            Entanglement::Full => (0..n)
                .flat_map(|j| (j + 1..n).map(move |k| (j, k)))
                .collect(),
        }
    }
}

/// Phase for a single qubit: `x[m]`.
pub fn data_map_single(x: &[f64], m: usize) -> Result<f64> {
    x.get(m).copied().ok_or_else(|| {
        Error::Argument(format!("qubit {m} out of range for {} features", x.len()))
    })
}

/// Phase for an entangled pair: `(π - x[j])(π - x[k])`.
pub fn data_map_pair(x: &[f64], j: usize, k: usize) -> Result<f64> {
    if j == k {
        return Err(Error::Argument(format!("pair ({j},{k}) repeats a qubit")));
    }
    Ok((PI - data_map_single(x, j)?) * (PI - data_map_single(x, k)?))
}

fn push_xx_block(c: &mut Circuit, j: usize, k: usize, phase: f64) -> Result<()> {
    c.push(GateOp::H(j))?
        .push(GateOp::H(k))?
        .push(GateOp::Cnot { control: j, target: k })?
        .push(GateOp::Rz(k, -2.0 * phase))?
        .push(GateOp::Cnot { control: j, target: k })?
        .push(GateOp::H(j))?
        .push(GateOp::H(k))?;
    Ok(())
}

/// Compiles the feature map for `x` into a circuit.
pub fn build_feature_map(x: &[f64], cfg: &FeatureMapConfig) -> Result<Circuit> {
    cfg.validate()?;
    if x.len() != cfg.n_qubits {
        return Err(Error::Dimension(format!(
            "feature map has {} qubits, input has {} features",
            cfg.n_qubits,
            x.len()
        )));
    }
    let pairs = cfg.pairs();
    let mut c = Circuit::new(cfg.n_qubits)?;
    for _ in 0..cfg.reps {
        for q in 0..cfg.n_qubits {
            c.push(GateOp::H(q))?;
        }
        for q in 0..cfg.n_qubits {
            c.push(GateOp::Rz(q, -2.0 * data_map_single(x, q)?))?;
        }
        for &(j, k) in &pairs {
            push_xx_block(&mut c, j, k, data_map_pair(x, j, k)?)?;
        }
    }
    Ok(c)
}

/// `|f(x)⟩`: the feature-map circuit run from `|0…0⟩`.
pub fn feature_state(x: &[f64], cfg: &FeatureMapConfig) -> Result<StateVector> {
    qsim::run(&build_feature_map(x, cfg)?, None)
}

/// Per-feature min-max scaling onto `[low, high]`, fitted on one split and
/// applied unchanged to others. Values outside the fitted range are not
/// clipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    pub low: f64,
    pub high: f64,
}

impl FeatureScaler {
    pub fn fit(x: &FeatureMatrix, low: f64, high: f64) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::Argument("cannot fit a scaler on zero rows".into()));
        }
        if low.partial_cmp(&high) != Some(std::cmp::Ordering::Less) {
            return Err(Error::Config(format!(
                "scaling range [{low}, {high}] is empty"
            )));
        }
        let mins = x.column_iter().map(|c| c.min()).collect();
        let maxs = x.column_iter().map(|c| c.max()).collect();
        Ok(Self {
            mins,
            maxs,
            low,
            high,
        })
    }

    /// Range used by the feature map, `[0, 2π]`.
    pub fn fit_phase(x: &FeatureMatrix) -> Result<Self> {
        Self::fit(x, 0.0, 2.0 * PI)
    }

    /// Constant training columns map to `low`.
    pub fn transform(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.ncols() != self.mins.len() {
            return Err(Error::Dimension(format!(
                "scaler fitted on {} features, input has {}",
                self.mins.len(),
                x.ncols()
            )));
        }
        let span = self.high - self.low;
        Ok(FeatureMatrix::from_fn(x.nrows(), x.ncols(), |r, c| {
            let width = self.maxs[c] - self.mins[c];
            if width > 0.0 {
                self.low + span * (x[(r, c)] - self.mins[c]) / width
            } else {
                self.low
            }
        }))
    }
}
