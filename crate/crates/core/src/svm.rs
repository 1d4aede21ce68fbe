//! Soft-margin binary SVM trained on the dual with sequential minimal
//! optimization.
//!
//! The solver works on a precomputed kernel matrix, so the same code serves
//! the classical linear baseline and the fidelity-kernel classifier. Public
//! labels are `{0, 1}`; internally they are mapped to `{-1, +1}`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{FeatureMatrix, KernelMatrix};

const SYMMETRY_TOL: f64 = 1e-8;
const MIN_STEP: f64 = 1e-12;

/// `K[i][j] = <x1_i, x2_j>`.
pub fn linear_kernel(x1: &FeatureMatrix, x2: &FeatureMatrix) -> Result<KernelMatrix> {
    if x1.ncols() != x2.ncols() {
        return Err(Error::Dimension(format!(
            "linear kernel: {} vs {} features",
            x1.ncols(),
            x2.ncols()
        )));
    }
    Ok(x1 * x2.transpose())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelMode {
    /// Model keeps its support vectors and predicts from raw features.
    Linear,
    /// Model predicts from kernel rows against the training set.
    Precomputed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    /// Box constraint on the dual variables.
    pub c: f64,
    /// KKT violation tolerance.
    pub tol: f64,
    /// Maximum number of full sweeps over the training set.
    pub max_passes: usize,
    /// Seed for the randomized choice of the second multiplier.
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            max_passes: 100,
            seed: 42,
        }
    }
}

/// A trained SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub support: Vec<usize>,
    pub mode: KernelMode,
    pub c: f64,
    /// Training labels in `{-1, +1}`.
    pub signs: Vec<f64>,
    /// Features of the support vectors, in `support` order (linear mode only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_vectors: Option<Vec<Vec<f64>>>,
    pub converged: bool,
    pub sweeps: usize,
}

/// Label and raw decision value of one prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: u8,
    pub decision: f64,
}

impl Prediction {
    fn from_decision(decision: f64) -> Self {
        Self {
            label: u8::from(decision >= 0.0),
            decision,
        }
    }
}

fn to_signs(y: &[u8]) -> Result<Vec<f64>> {
    y.iter()
        .map(|&l| match l {
            0 => Ok(-1.0),
            1 => Ok(1.0),
            other => Err(Error::Argument(format!("label {other} is not 0 or 1"))),
        })
        .collect()
}

/// Trains on a precomputed kernel matrix.
///
/// The returned model is flagged `converged = false` when `max_passes`
/// sweeps finish with multipliers still changing.
pub fn svm_train(k: &KernelMatrix, y: &[u8], params: &SvmParams) -> Result<SvmModel> {
    let n = y.len();
    if !k.is_square() || k.nrows() != n {
        return Err(Error::Dimension(format!(
            "kernel is {}x{} but there are {n} labels",
            k.nrows(),
            k.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::Argument("cannot train on an empty set".into()));
    }
    if params.c.is_nan() || params.c <= 0.0 {
        return Err(Error::Argument(format!("C must be positive, got {}", params.c)));
    }
    let asym = (0..n)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| (k[(i, j)] - k[(j, i)]).abs())
        .fold(0.0, f64::max);
    if asym > SYMMETRY_TOL {
        return Err(Error::Argument(format!(
            "kernel matrix is not symmetric (max |K - Kᵀ| = {asym:e})"
        )));
    }
    let signs = to_signs(y)?;
    let mut smo = Smo::new(k, &signs, params);
    smo.solve();

    let support = (0..n).filter(|&i| smo.alpha[i] > 0.0).collect();
    let bias = smo.final_bias();
    let (alphas, converged, sweeps) = (smo.alpha, smo.converged, smo.sweeps);
    Ok(SvmModel {
        bias,
        alphas,
        support,
        mode: KernelMode::Precomputed,
        c: params.c,
        signs,
        support_vectors: None,
        converged,
        sweeps,
    })
}

/// Trains with the linear kernel and keeps the support vectors so the model
/// can score raw feature rows.
pub fn svm_train_linear(x: &FeatureMatrix, y: &[u8], params: &SvmParams) -> Result<SvmModel> {
    let k = linear_kernel(x, x)?;
    let mut model = svm_train(&k, y, params)?;
    model.mode = KernelMode::Linear;
    model.support_vectors = Some(
        model
            .support
            .iter()
            .map(|&i| x.row(i).iter().copied().collect())
            .collect(),
    );
    Ok(model)
}

impl SvmModel {
    /// Dual objective `Σα - ½ ΣΣ αᵢαⱼyᵢyⱼKᵢⱼ` on the training kernel.
    pub fn dual_objective(&self, k: &KernelMatrix) -> f64 {
        dual_objective(&self.alphas, &self.signs, k)
    }

    pub fn n_train(&self) -> usize {
        self.alphas.len()
    }

    /// Scores one point from its kernel values against every training point.
    pub fn predict_precomputed(&self, k_row: &[f64]) -> Result<Prediction> {
        if k_row.len() != self.n_train() {
            return Err(Error::Dimension(format!(
                "kernel row has {} entries, model was trained on {}",
                k_row.len(),
                self.n_train()
            )));
        }
        let decision = self
            .support
            .iter()
            .map(|&i| self.alphas[i] * self.signs[i] * k_row[i])
            .sum::<f64>()
            + self.bias;
        Ok(Prediction::from_decision(decision))
    }

    /// Scores one raw feature vector (linear mode only).
    pub fn predict_linear(&self, x: &[f64]) -> Result<Prediction> {
        let svs = match (&self.mode, &self.support_vectors) {
            (KernelMode::Linear, Some(svs)) => svs,
            _ => {
                return Err(Error::Argument(
                    "raw-feature prediction needs a linear-mode model".into(),
                ))
            }
        };
        let mut decision = self.bias;
        for (sv, &i) in svs.iter().zip(&self.support) {
            if sv.len() != x.len() {
                return Err(Error::Dimension(format!(
                    "model expects {} features, got {}",
                    sv.len(),
                    x.len()
                )));
            }
            let dot: f64 = sv.iter().zip(x).map(|(a, b)| a * b).sum();
            decision += self.alphas[i] * self.signs[i] * dot;
        }
        Ok(Prediction::from_decision(decision))
    }

    /// Predicts every row of a `test × train` kernel matrix.
    pub fn predict_kernel(&self, k: &KernelMatrix) -> Result<Vec<Prediction>> {
        (0..k.nrows())
            .map(|r| {
                let row: Vec<f64> = k.row(r).iter().copied().collect();
                self.predict_precomputed(&row)
            })
            .collect()
    }

    /// Predicts every row of a feature matrix (linear mode only).
    pub fn predict_features(&self, x: &FeatureMatrix) -> Result<Vec<Prediction>> {
        (0..x.nrows())
            .map(|r| {
                let row: Vec<f64> = x.row(r).iter().copied().collect();
                self.predict_linear(&row)
            })
            .collect()
    }

    /// Linear-mode weight vector `w = Σ αᵢ yᵢ xᵢ`.
    pub fn weights(&self) -> Option<Vec<f64>> {
        let svs = self.support_vectors.as_ref()?;
        let dim = svs.first().map_or(0, Vec::len);
        let mut w = vec![0.0; dim];
        for (sv, &i) in svs.iter().zip(&self.support) {
            for (wk, xk) in w.iter_mut().zip(sv) {
                *wk += self.alphas[i] * self.signs[i] * xk;
            }
        }
        Some(w)
    }
}

/// Dual objective of arbitrary multipliers; `signs` are `±1`.
pub fn dual_objective(alphas: &[f64], signs: &[f64], k: &KernelMatrix) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alphas[i] * alphas[j] * signs[i] * signs[j] * k[(i, j)];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// Solver state. `grad[k] = Σⱼ αⱼ yⱼ K[j][k]`, maintained incrementally.
struct Smo<'a> {
    k: &'a DMatrix<f64>,
    y: &'a [f64],
    c: f64,
    tol: f64,
    max_passes: usize,
    rng: ChaCha8Rng,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    bias: f64,
    converged: bool,
    sweeps: usize,
}

impl<'a> Smo<'a> {
    fn new(k: &'a DMatrix<f64>, y: &'a [f64], params: &SvmParams) -> Self {
        let n = y.len();
        Self {
            k,
            y,
            c: params.c,
            tol: params.tol,
            max_passes: params.max_passes,
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            alpha: vec![0.0; n],
            grad: vec![0.0; n],
            bias: 0.0,
            converged: false,
            sweeps: 0,
        }
    }

    fn error(&self, i: usize) -> f64 {
        self.grad[i] + self.bias - self.y[i]
    }

    fn violates_kkt(&self, i: usize) -> bool {
        let r = self.y[i] * self.error(i);
        (r < -self.tol && self.alpha[i] < self.c) || (r > self.tol && self.alpha[i] > 0.0)
    }

    fn solve(&mut self) {
        let n = self.y.len();
        while self.sweeps < self.max_passes {
            self.sweeps += 1;
            let mut changed = 0;
            for i in 0..n {
                if !self.violates_kkt(i) {
                    continue;
                }
                // Random starting point for the second index, then fall back
                // to every other index in cyclic order.
                let start = self.rng.random_range(0..n);
                for offset in 0..n {
                    let j = (start + offset) % n;
                    if j != i && self.take_step(i, j) {
                        changed += 1;
                        break;
                    }
                }
            }
            if changed == 0 {
                self.converged = true;
                break;
            }
        }
    }

    fn take_step(&mut self, i: usize, j: usize) -> bool {
        let (yi, yj) = (self.y[i], self.y[j]);
        let (ai, aj) = (self.alpha[i], self.alpha[j]);
        let (lo, hi) = if yi != yj {
            ((aj - ai).max(0.0), (self.c + aj - ai).min(self.c))
        } else {
            ((ai + aj - self.c).max(0.0), (ai + aj).min(self.c))
        };
        if hi - lo < MIN_STEP {
            return false;
        }
        let (ei, ej) = (self.error(i), self.error(j));
        let (kii, kjj, kij) = (self.k[(i, i)], self.k[(j, j)], self.k[(i, j)]);
        let eta = 2.0 * kij - kii - kjj;

        // Change of the dual objective when α_j moves by t along the
        // equality-constraint line.
        let slope = yj * (ei - ej);
        let gain = |t: f64| slope * t + 0.5 * eta * t * t;
        let aj_new = if eta < -MIN_STEP {
            (aj - yj * (ei - ej) / eta).clamp(lo, hi)
        } else {
            let (g_lo, g_hi) = (gain(lo - aj), gain(hi - aj));
            if g_lo > g_hi + MIN_STEP {
                lo
            } else if g_hi > g_lo + MIN_STEP {
                hi
            } else {
                aj
            }
        };
        if (aj_new - aj).abs() < MIN_STEP || gain(aj_new - aj) <= 0.0 {
            return false;
        }
        // Rounding can leave a multiplier an ulp outside the box.
        let snap = |a: f64| {
            let eps = 1e-12 * self.c;
            if a < eps {
                0.0
            } else if a > self.c - eps {
                self.c
            } else {
                a
            }
        };
        let aj_new = snap(aj_new);
        let ai_new = snap(ai + yi * yj * (aj - aj_new));
        let (di, dj) = (ai_new - ai, aj_new - aj);

        let b1 = self.bias - ei - yi * di * kii - yj * dj * kij;
        let b2 = self.bias - ej - yi * di * kij - yj * dj * kjj;
        self.bias = if ai_new > 0.0 && ai_new < self.c {
            b1
        } else if aj_new > 0.0 && aj_new < self.c {
            b2
        } else {
            0.5 * (b1 + b2)
        };

        self.alpha[i] = ai_new;
        self.alpha[j] = aj_new;
        for (m, g) in self.grad.iter_mut().enumerate() {
            *g += yi * di * self.k[(i, m)] + yj * dj * self.k[(j, m)];
        }
        true
    }

    /// Bias from the KKT conditions: the mean over free multipliers, or the
    /// midpoint of the feasible interval when every multiplier is at a bound.
    fn final_bias(&self) -> f64 {
        let margin = 1e-8 * self.c;
        let free: Vec<f64> = (0..self.y.len())
            .filter(|&i| self.alpha[i] > margin && self.alpha[i] < self.c - margin)
            .map(|i| self.y[i] - self.grad[i])
            .collect();
        if !free.is_empty() {
            return free.iter().sum::<f64>() / free.len() as f64;
        }
        let mut lower = f64::NEG_INFINITY;
        let mut upper = f64::INFINITY;
        for i in 0..self.y.len() {
            let target = self.y[i] - self.grad[i];
            let at_upper = self.alpha[i] >= self.c - margin;
            // y(g + b) >= 1 for α = 0, <= 1 for α = C
            if (self.y[i] > 0.0) != at_upper {
                lower = lower.max(target);
            } else {
                upper = upper.min(target);
            }
        }
        match (lower.is_finite(), upper.is_finite()) {
            (true, true) => 0.5 * (lower + upper),
            (true, false) => lower,
            (false, true) => upper,
            (false, false) => self.bias,
        }
    }
}
