//! Fidelity kernels and the variational quantum classifier.
//!
//! The kernel entry for a pair of inputs is `|⟨f(a)|f(b)⟩|²`, evaluated from
//! exact amplitudes. The classifier feeds `|f(x)⟩` through a real-amplitudes
//! ansatz and reads out the parity expectation `e = ⟨Z⊗…⊗Z⟩`; the predicted
//! label is `1` iff `e ≥ Δ`. Training minimises the mean squared error of `e`
//! against `±1` targets with ADAM, using parameter-shift gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featmap::{build_feature_map, feature_state, FeatureMapConfig};
use crate::qsim::{self, Circuit, GateOp, StateVector};
use crate::{FeatureMatrix, KernelMatrix};

const SHIFT: f64 = std::f64::consts::FRAC_PI_2;

fn row(x: &FeatureMatrix, r: usize) -> Vec<f64> {
    x.row(r).iter().copied().collect()
}

/// Feature states of every row of `x`, in row order.
pub fn feature_states(x: &FeatureMatrix, cfg: &FeatureMapConfig) -> Result<Vec<StateVector>> {
    if x.ncols() != cfg.n_qubits {
        return Err(Error::Dimension(format!(
            "feature map has {} qubits, data has {} features",
            cfg.n_qubits,
            x.ncols()
        )));
    }
    (0..x.nrows())
        .into_par_iter()
        .map(|r| feature_state(&row(x, r), cfg))
        .collect()
}

fn fidelity(a: &StateVector, b: &StateVector) -> f64 {
    a.inner(b).map(|z| z.norm_sqr()).unwrap_or(f64::NAN)
}

/// Rectangular kernel `K[i][j] = |⟨f(x1_i)|f(x2_j)⟩|²`.
pub fn quantum_kernel_matrix(
    x1: &FeatureMatrix,
    x2: &FeatureMatrix,
    cfg: &FeatureMapConfig,
) -> Result<KernelMatrix> {
    let s1 = feature_states(x1, cfg)?;
    let s2 = feature_states(x2, cfg)?;
    Ok(kernel_from_states(&s1, &s2))
}

/// Kernel between two precomputed state lists.
pub fn kernel_from_states(s1: &[StateVector], s2: &[StateVector]) -> KernelMatrix {
    let rows: Vec<Vec<f64>> = s1
        .par_iter()
        .map(|a| s2.iter().map(|b| fidelity(a, b)).collect())
        .collect();
    KernelMatrix::from_row_iterator(s1.len(), s2.len(), rows.into_iter().flatten())
}

/// Symmetric training Gram matrix. Only the upper triangle is evaluated and
/// mirrored.
pub fn quantum_gram(x: &FeatureMatrix, cfg: &FeatureMapConfig) -> Result<KernelMatrix> {
    let states = feature_states(x, cfg)?;
    Ok(gram_from_states(&states))
}

pub fn gram_from_states(states: &[StateVector]) -> KernelMatrix {
    let n = states.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| fidelity(&states[i], &states[j])).collect())
        .collect();
    let mut k = KernelMatrix::zeros(n, n);
    for (i, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            k[(i, i + off)] = v;
            k[(i + off, i)] = v;
        }
    }
    k
}

/// Shot count used by the sampling mode when none is configured.
pub const DEFAULT_SHOTS: usize = 1024;

fn entry_seed(seed: u64, i: usize, j: usize) -> u64 {
    seed ^ (((i as u64) << 32) | j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Fraction of `shots` that return the all-zero outcome from
/// `U(b)† U(a)|0⟩`.
fn sampled_fidelity(a: &StateVector, b_inverse: &Circuit, shots: usize, seed: u64) -> Result<f64> {
    let out = qsim::run(b_inverse, Some(a.clone()))?;
    let zeros = "0".repeat(out.n_qubits());
    let counts = qsim::measure_counts(&out, shots, seed)?;
    Ok(counts.get(&zeros).copied().unwrap_or(0) as f64 / shots as f64)
}

fn inverse_maps(x: &FeatureMatrix, cfg: &FeatureMapConfig) -> Result<Vec<Circuit>> {
    (0..x.nrows())
        .into_par_iter()
        .map(|r| build_feature_map(&row(x, r), cfg).map(|c| c.inverse()))
        .collect()
}

/// Shot-sampled estimate of [`quantum_kernel_matrix`]: each entry is the
/// observed frequency of the all-zero outcome of the compute-uncompute
/// circuit. Deterministic given `seed`.
pub fn sampled_kernel_matrix(
    x1: &FeatureMatrix,
    x2: &FeatureMatrix,
    cfg: &FeatureMapConfig,
    shots: usize,
    seed: u64,
) -> Result<KernelMatrix> {
    let s1 = feature_states(x1, cfg)?;
    let inv2 = inverse_maps(x2, cfg)?;
    let rows: Vec<Vec<f64>> = s1
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            inv2.iter()
                .enumerate()
                .map(|(j, b)| sampled_fidelity(a, b, shots, entry_seed(seed, i, j)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(KernelMatrix::from_row_iterator(
        s1.len(),
        inv2.len(),
        rows.into_iter().flatten(),
    ))
}

/// Shot-sampled training Gram matrix: upper triangle sampled and mirrored,
/// unit diagonal.
pub fn sampled_gram(
    x: &FeatureMatrix,
    cfg: &FeatureMapConfig,
    shots: usize,
    seed: u64,
) -> Result<KernelMatrix> {
    let states = feature_states(x, cfg)?;
    let inv = inverse_maps(x, cfg)?;
    let n = states.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| sampled_fidelity(&states[i], &inv[j], shots, entry_seed(seed, i, j)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut k = KernelMatrix::identity(n, n);
    for (i, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            k[(i, i + 1 + off)] = v;
            k[(i + 1 + off, i)] = v;
        }
    }
    Ok(k)
}

/// Number of rotation angles in a real-amplitudes ansatz.
pub fn ansatz_param_count(n_qubits: usize, layers: usize) -> usize {
    n_qubits * (layers + 1)
}

/// Real-amplitudes ansatz: an `RY` column, then `layers` times a linear
/// `CNOT` chain `0→1→…→n-1` followed by another `RY` column.
///
/// `theta[c * n + q]` is the angle on qubit `q` in column `c`.
pub fn build_real_amplitudes(n_qubits: usize, layers: usize, theta: &[f64]) -> Result<Circuit> {
    let expected = ansatz_param_count(n_qubits, layers);
    if theta.len() != expected {
        return Err(Error::Dimension(format!(
            "ansatz on {n_qubits} qubits with {layers} layers needs {expected} angles, got {}",
            theta.len()
        )));
    }
    let mut c = Circuit::new(n_qubits)?;
    let mut angles = theta.chunks_exact(n_qubits);
    for (q, &t) in angles.next().unwrap().iter().enumerate() {
        c.push(GateOp::Ry(q, t))?;
    }
    for column in angles {
        for q in 1..n_qubits {
            c.push(GateOp::Cnot {
                control: q - 1,
                target: q,
            })?;
        }
        for (q, &t) in column.iter().enumerate() {
            c.push(GateOp::Ry(q, t))?;
        }
    }
    Ok(c)
}

/// A trained (or initial) classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqcModel {
    pub params: Vec<f64>,
    pub layers: usize,
    pub feature_map: FeatureMapConfig,
    /// Decision threshold Δ on the parity expectation.
    pub threshold: f64,
    /// Full-batch loss at the start of each iteration.
    pub loss_history: Vec<f64>,
    pub best_loss: Option<f64>,
}

impl VqcModel {
    pub fn new(feature_map: FeatureMapConfig, layers: usize, params: Vec<f64>) -> Result<Self> {
        let expected = ansatz_param_count(feature_map.n_qubits, layers);
        if params.len() != expected {
            return Err(Error::Dimension(format!(
                "expected {expected} ansatz angles, got {}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Argument("ansatz angles must be finite".into()));
        }
        Ok(Self {
            params,
            layers,
            feature_map,
            threshold: 0.0,
            loss_history: Vec::new(),
            best_loss: None,
        })
    }

    /// Model with angles drawn uniformly from `[-π, π]`.
    pub fn random(feature_map: FeatureMapConfig, layers: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = ansatz_param_count(feature_map.n_qubits, layers);
        let pi = std::f64::consts::PI;
        let params = (0..n).map(|_| rng.random_range(-pi..=pi)).collect();
        Self::new(feature_map, layers, params)
    }

    pub fn ansatz(&self) -> Result<Circuit> {
        build_real_amplitudes(self.feature_map.n_qubits, self.layers, &self.params)
    }

    /// Running minimum of the loss history.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.loss_history
            .iter()
            .scan(f64::INFINITY, |best, &l| {
                *best = best.min(l);
                Some(*best)
            })
            .collect()
    }
}

/// Parity expectation of the ansatz applied to an already-encoded state.
fn expectation_on(state: &StateVector, ansatz: &Circuit) -> Result<f64> {
    let out = qsim::run(ansatz, Some(state.clone()))?;
    Ok(qsim::expectation_parity_z(&out))
}

/// `e(x) = ⟨f(x)| U(θ)† Z⊗…⊗Z U(θ) |f(x)⟩`.
pub fn vqc_forward(x: &[f64], model: &VqcModel) -> Result<f64> {
    let state = feature_state(x, &model.feature_map)?;
    expectation_on(&state, &model.ansatz()?)
}

/// Label `1` iff `e(x) ≥ Δ`.
pub fn vqc_predict(x: &[f64], model: &VqcModel) -> Result<u8> {
    Ok(label_for(vqc_forward(x, model)?, model.threshold))
}

pub fn label_for(expectation: f64, threshold: f64) -> u8 {
    u8::from(expectation >= threshold)
}

/// Predicts every row of `x`.
pub fn vqc_predict_batch(x: &FeatureMatrix, model: &VqcModel) -> Result<Vec<u8>> {
    let states = feature_states(x, &model.feature_map)?;
    let ansatz = model.ansatz()?;
    states
        .par_iter()
        .map(|s| expectation_on(s, &ansatz).map(|e| label_for(e, model.threshold)))
        .collect()
}

/// Predicts every row of `x` from a parity expectation estimated with
/// `shots` samples per row.
pub fn vqc_predict_batch_sampled(
    x: &FeatureMatrix,
    model: &VqcModel,
    shots: usize,
    seed: u64,
) -> Result<Vec<u8>> {
    let states = feature_states(x, &model.feature_map)?;
    let ansatz = model.ansatz()?;
    states
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let out = qsim::run(&ansatz, Some(s.clone()))?;
            let counts = qsim::measure_counts(&out, shots, entry_seed(seed, i, 0))?;
            let signed: i64 = counts
                .iter()
                .map(|(bits, &c)| {
                    let odd = bits.bytes().filter(|&b| b == b'1').count() % 2 == 1;
                    if odd {
                        -(c as i64)
                    } else {
                        c as i64
                    }
                })
                .sum();
            Ok(label_for(signed as f64 / shots as f64, model.threshold))
        })
        .collect()
}

fn target(y: u8) -> f64 {
    if y == 1 {
        1.0
    } else {
        -1.0
    }
}

fn check_batch(x: &FeatureMatrix, y: &[u8]) -> Result<()> {
    if x.nrows() == 0 {
        return Err(Error::Argument("empty batch".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!(
            "{} rows but {} labels",
            x.nrows(),
            y.len()
        )));
    }
    if let Some(bad) = y.iter().find(|&&l| l > 1) {
        return Err(Error::Argument(format!("label {bad} is not 0 or 1")));
    }
    Ok(())
}

/// Encoded batch; feature states do not depend on θ, so they are computed
/// once and reused across loss and gradient evaluations.
struct EncodedBatch {
    states: Vec<StateVector>,
    targets: Vec<f64>,
}

impl EncodedBatch {
    fn new(x: &FeatureMatrix, y: &[u8], cfg: &FeatureMapConfig) -> Result<Self> {
        check_batch(x, y)?;
        Ok(Self {
            states: feature_states(x, cfg)?,
            targets: y.iter().map(|&l| target(l)).collect(),
        })
    }

    fn loss(&self, model: &VqcModel) -> Result<f64> {
        let ansatz = model.ansatz()?;
        let sq: Vec<f64> = self
            .states
            .par_iter()
            .zip(&self.targets)
            .map(|(s, t)| expectation_on(s, &ansatz).map(|e| (e - t).powi(2)))
            .collect::<Result<_>>()?;
        Ok(sq.iter().sum::<f64>() / sq.len() as f64)
    }

    /// Loss and its gradient. Per-sample terms are collected in order and
    /// summed sequentially so results are bit-stable under parallelism.
    fn loss_and_gradient(&self, model: &VqcModel) -> Result<(f64, Vec<f64>)> {
        let ansatz = model.ansatz()?;
        let (n_qubits, layers) = (model.feature_map.n_qubits, model.layers);
        // Shifted circuits are shared by every sample.
        let shifted: Vec<(Circuit, Circuit)> = (0..model.params.len())
            .map(|p| {
                let mut plus = model.params.clone();
                let mut minus = model.params.clone();
                plus[p] += SHIFT;
                minus[p] -= SHIFT;
                Ok((
                    build_real_amplitudes(n_qubits, layers, &plus)?,
                    build_real_amplitudes(n_qubits, layers, &minus)?,
                ))
            })
            .collect::<Result<_>>()?;
        let per_sample: Vec<(f64, Vec<f64>)> = self
            .states
            .par_iter()
            .zip(&self.targets)
            .map(|(s, &t)| -> Result<(f64, Vec<f64>)> {
                let e = expectation_on(s, &ansatz)?;
                let residual = e - t;
                let grad = shifted
                    .iter()
                    .map(|(plus, minus)| {
                        let de = (expectation_on(s, plus)? - expectation_on(s, minus)?) / 2.0;
                        Ok(2.0 * residual * de)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Ok((residual * residual, grad))
            })
            .collect::<Result<_>>()?;

        let n = per_sample.len() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; model.params.len()];
        for (l, g) in per_sample {
            loss += l;
            for (acc, v) in grad.iter_mut().zip(g) {
                *acc += v;
            }
        }
        grad.iter_mut().for_each(|g| *g /= n);
        Ok((loss / n, grad))
    }
}

/// Mean squared error of `e(x)` against targets `-1` (label 0) / `+1`
/// (label 1).
pub fn vqc_loss(x: &FeatureMatrix, y: &[u8], model: &VqcModel) -> Result<f64> {
    EncodedBatch::new(x, y, &model.feature_map)?.loss(model)
}

/// Gradient of [`vqc_loss`] with respect to the ansatz angles, using the
/// parameter-shift rule `∂e/∂θ = [e(θ + π/2) - e(θ - π/2)] / 2`.
pub fn vqc_gradient(x: &FeatureMatrix, y: &[u8], model: &VqcModel) -> Result<Vec<f64>> {
    Ok(EncodedBatch::new(x, y, &model.feature_map)?
        .loss_and_gradient(model)?
        .1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates and step counter.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

/// One bias-corrected ADAM update of `theta` in place.
pub fn adam_step(
    theta: &mut [f64],
    grad: &[f64],
    state: &mut AdamState,
    hyper: &AdamConfig,
) -> Result<()> {
    if grad.len() != theta.len() || state.m.len() != theta.len() || state.v.len() != theta.len() {
        return Err(Error::Dimension(format!(
            "adam: {} params, {} gradients, state of {}/{}",
            theta.len(),
            grad.len(),
            state.m.len(),
            state.v.len()
        )));
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - hyper.beta1.powi(t);
    let bc2 = 1.0 - hyper.beta2.powi(t);
    for i in 0..theta.len() {
        let g = grad[i];
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        theta[i] -= hyper.lr * m_hat / (v_hat.sqrt() + hyper.eps);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VqcConfig {
    pub layers: usize,
    pub iterations: usize,
    pub seed: u64,
    pub threshold: f64,
    pub adam: AdamConfig,
}

impl Default for VqcConfig {
    fn default() -> Self {
        Self {
            layers: 3,
            iterations: 100,
            seed: 42,
            threshold: 0.0,
            adam: AdamConfig::default(),
        }
    }
}

/// Full-batch ADAM training from seeded uniform `[-π, π]` angles.
///
/// Returns the parameters with the lowest loss seen (including the final
/// iterate) and the per-iteration loss history.
pub fn vqc_train(
    x: &FeatureMatrix,
    y: &[u8],
    feature_map: &FeatureMapConfig,
    cfg: &VqcConfig,
) -> Result<VqcModel> {
    let batch = EncodedBatch::new(x, y, feature_map)?;
    let mut model = VqcModel::random(*feature_map, cfg.layers, cfg.seed)?;
    model.threshold = cfg.threshold;
    if cfg.iterations == 0 {
        return Ok(model);
    }

    let mut adam = AdamState::new(model.params.len());
    let mut best = (f64::INFINITY, model.params.clone());
    for _ in 0..cfg.iterations {
        let (loss, grad) = batch.loss_and_gradient(&model)?;
        if !loss.is_finite() {
            return Err(Error::Structural("VQC loss became non-finite".into()));
        }
        model.loss_history.push(loss);
        if loss < best.0 {
            best = (loss, model.params.clone());
        }
        adam_step(&mut model.params, &grad, &mut adam, &cfg.adam)?;
    }
    let final_loss = batch.loss(&model)?;
    if final_loss < best.0 {
        best = (final_loss, model.params.clone());
    }
    model.params = best.1;
    model.best_loss = Some(best.0);
    Ok(model)
}
