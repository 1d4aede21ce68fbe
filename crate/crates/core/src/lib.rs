//! Hybrid quantum-classical sentiment classification.
//!
//! The crate covers the whole path from raw labelled text to a metrics table:
//!
//! * [`textprep`]: regex cleaning, tokenization, stop-word removal, label
//!   encoding and count vectorization.
//! * [`dimred`]: PCA (feature reduction) and the averaging 1-D Haar transform
//!   (sample-count reduction).
//! * [`svm`]: a soft-margin SVM trained with SMO, in linear or precomputed
//!   kernel mode.
//! * [`qsim`]: a small dense statevector simulator.
//! * [`featmap`]: the Pauli (Z, XX) feature-map circuit and feature scaling.
//! * [`qml`]: fidelity kernels and the variational quantum classifier.
//! * [`pipeline`]: dataset ingestion, experiment orchestration, metrics and
//!   report emission.
//!
//! Qubit ordering is little-endian throughout: qubit 0 is the least
//! significant bit of a basis-state index.

pub mod dimred;
pub mod error;
pub mod featmap;
pub mod pipeline;
pub mod qml;
pub mod qsim;
pub mod svm;
pub mod textprep;

pub use error::{Error, Result};
pub use featmap::{Entanglement, FeatureMapConfig, FeatureScaler};
pub use pipeline::{ClassifierKind, ExperimentConfig, MetricsReport};
pub use qsim::{Circuit, GateOp, StateVector};

/// Dense sample-by-feature matrix (rows are samples).
pub type FeatureMatrix = nalgebra::DMatrix<f64>;

/// Real Gram matrix, square for training or rectangular (test × train).
pub type KernelMatrix = nalgebra::DMatrix<f64>;

/// Binary class labels in `{0, 1}`.
pub type Labels = Vec<u8>;
