//! Dataset ingestion, experiment orchestration, metrics and reports.
//!
//! An experiment runs preprocess → vectorize → PCA → min-max scaling →
//! optional Haar compression of the training split → classifier → evaluation
//! of both splits. Every fitted stage sees training rows only and records
//! that in [`FitRecord`]s.

mod config;
mod dataset;
mod experiment;
mod metrics;
mod report;

pub use config::{
    ClassifierConfig, ClassifierKind, DataFormat, DatasetConfig, ExperimentConfig,
    FeatureMapSettings, OutputConfig, QuantumConfig, ReductionConfig, ReportFormat, SplitConfig,
    SweepConfig, MAX_HAAR_LEVELS,
};
pub use dataset::{load_dataset, read_dataset, train_test_split, SplitIndices};
pub use experiment::{
    build_corpus, count_matrix, fit_experiment, load_corpus, run_experiment, run_sweep,
    text_pipeline, Corpus, ExperimentRun, TrainedClassifier, TrainedPipeline,
};
pub use metrics::{compute_metrics, Confusion, FitRecord, MetricsReport, SplitKind, SplitMetrics};
pub use report::{
    emit_report, read_json_reports, write_csv, write_json, EmitOptions, CSV_HEADER,
};
