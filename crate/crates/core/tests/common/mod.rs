//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the simulator or solvers under test: gates are
//! built as dense matrices with Kronecker products, exponentials come from a
//! Taylor series, the SVM dual is maximised by enumerating active sets.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use qsent_core::{Circuit, GateOp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C = Complex64;
pub type CMat = DMatrix<C>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn eye(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    CMat::from_fn(ar * br, ac * bc, |r, col| {
        a[(r / br, col / bc)] * b[(r % br, col % bc)]
    })
}

pub fn mat2(e: [C; 4]) -> CMat {
    CMat::from_row_slice(2, 2, &e)
}

pub fn pauli_x() -> CMat {
    mat2([c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> CMat {
    mat2([c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> CMat {
    mat2([c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

pub fn hadamard() -> CMat {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    mat2([c(h, 0.), c(h, 0.), c(h, 0.), c(-h, 0.)])
}

fn proj(bit: usize) -> CMat {
    let mut p = CMat::zeros(2, 2);
    p[(bit, bit)] = c(1., 0.);
    p
}

/// `exp(-iθP/2)` for a Pauli `P` from the Taylor oracle.
pub fn rotation(pauli: &CMat, theta: f64) -> CMat {
    expm(&(pauli * c(0., -theta / 2.0)))
}

/// `ops` placed on the listed qubits of an `n`-qubit register, identity
/// elsewhere. Qubit 0 is the rightmost Kronecker factor.
pub fn on_qubits(n: usize, ops: &[(usize, CMat)]) -> CMat {
    let mut out = eye(1);
    for q in (0..n).rev() {
        let factor = ops
            .iter()
            .find(|(k, _)| *k == q)
            .map_or_else(|| eye(2), |(_, m)| m.clone());
        out = kron(&out, &factor);
    }
    out
}

pub fn gate_matrix(n: usize, g: &GateOp) -> CMat {
    match *g {
        GateOp::H(q) => on_qubits(n, &[(q, hadamard())]),
        GateOp::X(q) => on_qubits(n, &[(q, pauli_x())]),
        GateOp::Ry(q, t) => on_qubits(n, &[(q, rotation(&pauli_y(), t))]),
        GateOp::Rz(q, t) => on_qubits(n, &[(q, rotation(&pauli_z(), t))]),
        GateOp::Cnot { control, target } => {
            on_qubits(n, &[(control, proj(0))])
                + on_qubits(n, &[(control, proj(1)), (target, pauli_x())])
        }
    }
}

/// Product of per-gate matrices (later gates multiply on the left).
pub fn circuit_matrix(circ: &Circuit) -> CMat {
    let n = circ.width();
    circ.gates()
        .iter()
        .fold(eye(1 << n), |acc, g| gate_matrix(n, g) * acc)
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &CMat) -> CMat {
    let norm: f64 = a.iter().map(|z| z.norm()).sum();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a * c(0.5f64.powi(squarings as i32), 0.);
    let dim = a.nrows();
    let mut sum = eye(dim);
    let mut term = eye(dim);
    for k in 1..=30 {
        term = &term * &scaled * c(1.0 / k as f64, 0.);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Largest entry-wise deviation of `a` from `b` after removing the best
/// global phase (aligned on `b`'s largest entry).
pub fn phase_distance(a: &[C], b: &[C]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (idx, _) = b
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .unwrap();
    let phase = if a[idx].norm() > 0.0 {
        b[idx] / a[idx] * (a[idx].norm() / b[idx].norm())
    } else {
        c(1., 0.)
    };
    a.iter()
        .zip(b)
        .map(|(x, y)| (x * phase - y).norm())
        .fold(0.0, f64::max)
}

pub fn matrix_phase_distance(a: &CMat, b: &CMat) -> f64 {
    phase_distance(a.as_slice(), b.as_slice())
}

/// Unitary of the Pauli Z + XX feature map written directly as
/// `(exp(i Σ f_jk X_j X_k) · exp(i Σ f_m Z_m) · H^{⊗n})^r`.
pub fn feature_map_oracle(x: &[f64], reps: usize, pairs: &[(usize, usize)]) -> CMat {
    let n = x.len();
    let dim = 1 << n;
    let pi = std::f64::consts::PI;
    let mut z_sum = CMat::zeros(dim, dim);
    for (m, &xm) in x.iter().enumerate() {
        z_sum += on_qubits(n, &[(m, pauli_z())]) * c(xm, 0.);
    }
    let mut xx_sum = CMat::zeros(dim, dim);
    for &(j, k) in pairs {
        let f = (pi - x[j]) * (pi - x[k]);
        xx_sum += on_qubits(n, &[(j, pauli_x()), (k, pauli_x())]) * c(f, 0.);
    }
    let hn = on_qubits(n, &(0..n).map(|q| (q, hadamard())).collect::<Vec<_>>());
    let block = expm(&(xx_sum * c(0., 1.))) * expm(&(z_sum * c(0., 1.))) * hn;
    (0..reps).fold(eye(dim), |acc, _| &block * acc)
}

pub fn zero_state(n: usize) -> DVector<C> {
    let mut v = DVector::zeros(1 << n);
    v[0] = c(1., 0.);
    v
}

/// `⟨ψ|Z⊗…⊗Z|ψ⟩` with the observable built as a dense matrix.
pub fn parity_expectation(n: usize, psi: &DVector<C>) -> f64 {
    let zs = on_qubits(n, &(0..n).map(|q| (q, pauli_z())).collect::<Vec<_>>());
    (psi.adjoint() * zs * psi)[(0, 0)].re
}

pub fn random_angles(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    (0..n).map(|_| rng.random_range(-pi..pi)).collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// Eigenvalues (descending) and matching eigenvectors (as columns) of the
/// sample covariance of `x`.
pub fn covariance_eigen(x: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = x.nrows() as f64;
    let mean = x.row_mean();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let cov = centered.transpose() * &centered / (n - 1.0);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(x.ncols(), order.len(), |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

/// Maximum of the soft-margin SVM dual
/// `W(α) = Σα − ½ΣΣ αᵢαⱼyᵢyⱼKᵢⱼ` s.t. `0 ≤ α ≤ C`, `Σαᵢyᵢ = 0`,
/// found by enumerating which multipliers sit at 0, at C, or are free and
/// solving the stationarity system of the free ones.
pub fn brute_force_dual(k: &DMatrix<f64>, y: &[f64], cap: f64) -> f64 {
    let n = y.len();
    let objective = |a: &[f64]| {
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += a[i] * a[j] * y[i] * y[j] * k[(i, j)];
            }
        }
        a.iter().sum::<f64>() - 0.5 * quad
    };
    let mut best = 0.0;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { cap } else { 0.0 }).collect();
        if !free.is_empty() {
            // unknowns: α_F and b;  Σ_j Q_ij α_j + b y_i = 1 (i ∈ F), Σ y_i α_i = 0
            let m = free.len();
            let mut a = DMatrix::zeros(m + 1, m + 1);
            let mut rhs = DVector::zeros(m + 1);
            for (r, &i) in free.iter().enumerate() {
                let fixed: f64 = (0..n)
                    .filter(|&j| state[j] == 1)
                    .map(|j| y[i] * y[j] * k[(i, j)] * cap)
                    .sum();
                for (col, &j) in free.iter().enumerate() {
                    a[(r, col)] = y[i] * y[j] * k[(i, j)];
                }
                a[(r, m)] = y[i];
                rhs[r] = 1.0 - fixed;
            }
            for (col, &j) in free.iter().enumerate() {
                a[(m, col)] = y[j];
            }
            rhs[m] = -(0..n).filter(|&j| state[j] == 1).map(|j| y[j] * cap).sum::<f64>();
            let Ok(sol) = a.clone().pseudo_inverse(1e-12) else {
                continue;
            };
            let sol = sol * &rhs;
            if (&a * &sol - &rhs).norm() > 1e-8 {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r];
            }
        }
        let feasible = alpha.iter().all(|&v| (-1e-10..=cap + 1e-10).contains(&v))
            && alpha.iter().zip(y).map(|(a, s)| a * s).sum::<f64>().abs() < 1e-8;
        if feasible {
            best = f64::max(best, objective(&alpha));
        }
    }
    best
}

/// ADAM written directly from its update rule.
pub struct ReferenceAdam {
    pub lr: f64,
    pub b1: f64,
    pub b2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl ReferenceAdam {
    pub fn new(n: usize) -> Self {
        Self {
            lr: 0.01,
            b1: 0.9,
            b2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, theta: &mut [f64], g: &[f64]) {
        self.t += 1;
        for i in 0..theta.len() {
            self.m[i] = self.b1 * self.m[i] + (1.0 - self.b1) * g[i];
            self.v[i] = self.b2 * self.v[i] + (1.0 - self.b2) * g[i] * g[i];
            let m_hat = self.m[i] / (1.0 - self.b1.powi(self.t));
            let v_hat = self.v[i] / (1.0 - self.b2.powi(self.t));
            theta[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}
