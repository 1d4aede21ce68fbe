use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ClassifierKind, DatasetConfig, ExperimentConfig};
use super::dataset::{load_dataset, train_test_split, SplitIndices};
use super::metrics::{compute_metrics, FitRecord, MetricsReport, SplitKind, SplitMetrics};
use crate::dimred::{haar_compress_dataset, pca_fit, pca_transform, PcaModel};
use crate::error::{Error, Result};
use crate::featmap::FeatureScaler;
use crate::qml::{self, VqcModel};
use crate::svm::{svm_train, svm_train_linear, SvmModel};
use crate::textprep::{
    build_vocabulary, encode_labels, vectorize, LabelMap, LabeledDocument, StopWords,
    TextPipeline, Vocabulary,
};
use crate::{FeatureMatrix, Labels};

/// Tokenized documents with encoded labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub tokens: Vec<Vec<String>>,
    pub labels: Labels,
    pub label_map: LabelMap,
    /// Rows read from the file before empty documents were dropped.
    pub n_loaded: usize,
    pub discarded_rows: usize,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn select(&self, idx: &[usize]) -> (Vec<&[String]>, Labels) {
        (
            idx.iter().map(|&i| self.tokens[i].as_slice()).collect(),
            idx.iter().map(|&i| self.labels[i]).collect(),
        )
    }
}

/// Text pipeline for a dataset section: bundled or user stop words, and
/// lowercasing (English only unless overridden).
pub fn text_pipeline(cfg: &DatasetConfig) -> Result<TextPipeline> {
    let mut text = TextPipeline::for_language(cfg.language);
    if let Some(path) = &cfg.stopwords {
        text.stopwords = StopWords::load(path)?;
    }
    if let Some(lower) = cfg.lowercase {
        text.lowercase = lower;
    }
    Ok(text)
}

/// Tokenizes `docs` and encodes labels. Documents left with no tokens are
/// dropped and counted. With `label_map` given, labels are encoded against it
/// instead of being inferred.
pub fn build_corpus(
    docs: &[LabeledDocument],
    text: &TextPipeline,
    label_map: Option<&LabelMap>,
) -> Result<Corpus> {
    let tokenized: Vec<Vec<String>> = docs.par_iter().map(|d| text.tokens(&d.text)).collect();
    let mut tokens = Vec::with_capacity(docs.len());
    let mut raw_labels = Vec::with_capacity(docs.len());
    for (doc, toks) in docs.iter().zip(tokenized) {
        if toks.is_empty() {
            continue;
        }
        tokens.push(toks);
        raw_labels.push(doc.label.as_str());
    }
    let discarded_rows = docs.len() - tokens.len();
    if discarded_rows > 0 {
        log::warn!("{discarded_rows} documents were empty after preprocessing and were dropped");
    }
    let (labels, label_map) = match label_map {
        Some(map) => (
            raw_labels
                .iter()
                .map(|l| map.encode(l))
                .collect::<Result<Vec<_>>>()?,
            map.clone(),
        ),
        None => encode_labels(&raw_labels)?,
    };
    Ok(Corpus {
        tokens,
        labels,
        label_map,
        n_loaded: docs.len(),
        discarded_rows,
    })
}

/// Loads and tokenizes the configured dataset.
pub fn load_corpus(cfg: &DatasetConfig) -> Result<Corpus> {
    let docs = load_dataset(&cfg.path)?;
    log::info!("loaded {} rows from {}", docs.len(), cfg.path.display());
    build_corpus(&docs, &text_pipeline(cfg)?, None)
}

/// Count matrix of `docs` over `vocab` (one row per document).
pub fn count_matrix<S: AsRef<[String]>>(docs: &[S], vocab: &Vocabulary) -> FeatureMatrix {
    let mut x = FeatureMatrix::zeros(docs.len(), vocab.len());
    for (r, d) in docs.iter().enumerate() {
        for (c, &n) in vectorize(d.as_ref(), vocab).0.iter().enumerate() {
            x[(r, c)] = n as f64;
        }
    }
    x
}

/// Fitted classifier of a [`TrainedPipeline`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedClassifier {
    ClassicalSvm(SvmModel),
    QkernelSvm {
        svm: SvmModel,
        /// Rows the Gram matrix was built from (after Haar compression).
        train_features: Vec<Vec<f64>>,
    },
    Vqc(VqcModel),
}

/// Everything fitted on a training split, enough to score new documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedPipeline {
    pub config: ExperimentConfig,
    pub label_map: LabelMap,
    pub vocabulary: Vocabulary,
    pub pca: Option<PcaModel>,
    pub scaler: Option<FeatureScaler>,
    pub classifier: TrainedClassifier,
    pub fits: Vec<FitRecord>,
    pub train_time_s: f64,
    pub n_train_used: usize,
    pub truncated_rows: BTreeMap<u8, usize>,
}

fn staged<T>(stage: &'static str, cfg: &ExperimentConfig, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        already @ Error::Stage { .. } => already,
        source => Error::Stage {
            stage,
            config: cfg.summary(),
            source: Box::new(source),
        },
    })
}

fn to_rows(x: &FeatureMatrix) -> Vec<Vec<f64>> {
    x.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>]) -> FeatureMatrix {
    let ncols = rows.first().map_or(0, Vec::len);
    FeatureMatrix::from_row_iterator(rows.len(), ncols, rows.iter().flatten().copied())
}

impl TrainedPipeline {
    /// Fits every stage on the `train` rows of `corpus` only.
    pub fn fit(cfg: &ExperimentConfig, corpus: &Corpus, train: &[usize]) -> Result<Self> {
        staged("config", cfg, cfg.validate())?;
        let (train_docs, y_train) = corpus.select(train);
        let n_train = train.len();
        let record = |stage: &str, rows: usize| FitRecord {
            stage: stage.to_owned(),
            split: SplitKind::Train,
            rows,
        };
        let mut fits = Vec::new();

        let vocabulary = staged("vectorize", cfg, build_vocabulary(&train_docs))?;
        fits.push(record("vocabulary", n_train));
        let counts = count_matrix(&train_docs, &vocabulary);
        log::info!("vocabulary: {} terms from {n_train} training rows", vocabulary.len());

        let (pca, scaler, features) = match cfg.reduction.pca_k {
            None => (None, None, counts),
            Some(k) => {
                let model = staged("pca", cfg, pca_fit(&counts))?;
                fits.push(record("pca", n_train));
                let reduced = staged("pca", cfg, pca_transform(&model, &counts, k))?;
                let fm = &cfg.feature_map;
                let scaler = staged("scale", cfg, FeatureScaler::fit(&reduced, fm.scale_min, fm.scale_max))?;
                fits.push(record("scaler", n_train));
                let scaled = staged("scale", cfg, scaler.transform(&reduced))?;
                (Some(model), Some(scaler), scaled)
            }
        };

        let compressed = staged(
            "haar",
            cfg,
            haar_compress_dataset(&features, &y_train, cfg.reduction.haar_levels),
        )?;
        if cfg.reduction.haar_levels > 0 {
            fits.push(record("haar", n_train));
        }
        let (x_used, y_used) = (compressed.features, compressed.labels);

        let start = Instant::now();
        let classifier = staged("train", cfg, train_classifier(cfg, &x_used, &y_used))?;
        let train_time_s = start.elapsed().as_secs_f64();
        fits.push(record("classifier", y_used.len()));

        Ok(Self {
            config: cfg.clone(),
            label_map: corpus.label_map.clone(),
            vocabulary,
            pca,
            scaler,
            classifier,
            fits,
            train_time_s,
            n_train_used: y_used.len(),
            truncated_rows: compressed.truncated,
        })
    }

    /// Classifier input features for tokenized documents.
    pub fn features<S: AsRef<[String]>>(&self, docs: &[S]) -> Result<FeatureMatrix> {
        let counts = count_matrix(docs, &self.vocabulary);
        match (&self.pca, &self.scaler, self.config.reduction.pca_k) {
            (Some(pca), Some(scaler), Some(k)) => scaler.transform(&pca_transform(pca, &counts, k)?),
            (None, None, None) => Ok(counts),
            _ => Err(Error::Structural("PCA and scaler must be fitted together".into())),
        }
    }

    /// Labels for a feature matrix produced by [`TrainedPipeline::features`].
    pub fn predict_features(&self, x: &FeatureMatrix, seed_offset: u64) -> Result<Labels> {
        let shots = self.config.quantum.shots;
        match &self.classifier {
            TrainedClassifier::ClassicalSvm(svm) => {
                Ok(svm.predict_features(x)?.iter().map(|p| p.label).collect())
            }
            TrainedClassifier::QkernelSvm {
                svm,
                train_features,
            } => {
                let fm = self.config.feature_map_config()?;
                let train = from_rows(train_features);
                let k = if shots == 0 {
                    qml::quantum_kernel_matrix(x, &train, &fm)?
                } else {
                    let seed = self.config.svm.seed.wrapping_add(1 + seed_offset);
                    qml::sampled_kernel_matrix(x, &train, &fm, shots, seed)?
                };
                Ok(svm.predict_kernel(&k)?.iter().map(|p| p.label).collect())
            }
            TrainedClassifier::Vqc(model) => {
                if shots == 0 {
                    qml::vqc_predict_batch(x, model)
                } else {
                    let seed = self.config.vqc.seed.wrapping_add(1 + seed_offset);
                    qml::vqc_predict_batch_sampled(x, model, shots, seed)
                }
            }
        }
    }

    /// Labels for tokenized documents.
    pub fn predict_tokens<S: AsRef<[String]>>(&self, docs: &[S]) -> Result<Labels> {
        self.predict_features(&self.features(docs)?, 0)
    }

    /// Labels for raw texts, using the configured text pipeline.
    pub fn predict_texts<S: AsRef<str>>(&self, texts: &[S]) -> Result<Labels> {
        let text = text_pipeline(&self.config.dataset)?;
        let docs: Vec<Vec<String>> = texts.iter().map(|t| text.tokens(t.as_ref())).collect();
        self.predict_tokens(&docs)
    }

    /// Metrics on the given rows of `corpus`.
    pub fn evaluate(&self, corpus: &Corpus, idx: &[usize], seed_offset: u64) -> Result<SplitMetrics> {
        let (docs, y) = corpus.select(idx);
        let pred = self.predict_features(&self.features(&docs)?, seed_offset)?;
        compute_metrics(&y, &pred)
    }

    pub fn converged(&self) -> bool {
        match &self.classifier {
            TrainedClassifier::ClassicalSvm(svm) | TrainedClassifier::QkernelSvm { svm, .. } => {
                svm.converged
            }
            TrainedClassifier::Vqc(_) => true,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Structural(format!("model json: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Dataset(format!("not a trained model: {e}")))
    }
}

fn train_classifier(cfg: &ExperimentConfig, x: &FeatureMatrix, y: &[u8]) -> Result<TrainedClassifier> {
    match cfg.classifier.kind {
        ClassifierKind::ClassicalSvm => Ok(TrainedClassifier::ClassicalSvm(svm_train_linear(
            x, y, &cfg.svm,
        )?)),
        ClassifierKind::QkernelSvm => {
            let fm = cfg.feature_map_config()?;
            let gram = match cfg.quantum.shots {
                0 => qml::quantum_gram(x, &fm)?,
                shots => qml::sampled_gram(x, &fm, shots, cfg.svm.seed)?,
            };
            Ok(TrainedClassifier::QkernelSvm {
                svm: svm_train(&gram, y, &cfg.svm)?,
                train_features: to_rows(x),
            })
        }
        ClassifierKind::Vqc => {
            let fm = cfg.feature_map_config()?;
            Ok(TrainedClassifier::Vqc(qml::vqc_train(x, y, &fm, &cfg.vqc)?))
        }
    }
}

/// Fitted pipeline plus its split, returned by [`fit_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub pipeline: TrainedPipeline,
    pub split: SplitIndices,
    pub report: MetricsReport,
}

/// Splits, fits and evaluates one configuration on an already-loaded corpus.
pub fn fit_experiment(cfg: &ExperimentConfig, corpus: &Corpus) -> Result<ExperimentRun> {
    let split = staged(
        "split",
        cfg,
        train_test_split(&corpus.labels, cfg.split.ratio, cfg.split.seed),
    )?;
    let pipeline = TrainedPipeline::fit(cfg, corpus, &split.train)?;
    let train = staged("evaluate", cfg, pipeline.evaluate(corpus, &split.train, 0))?;
    let test = staged("evaluate", cfg, pipeline.evaluate(corpus, &split.test, 1))?;
    let report = MetricsReport {
        method: cfg.classifier.kind,
        pca_k: cfg.reduction.pca_k,
        haar_levels: cfg.reduction.haar_levels,
        train,
        test,
        train_time_s: pipeline.train_time_s,
        n_train: split.train.len(),
        n_train_used: pipeline.n_train_used,
        n_test: split.test.len(),
        discarded_rows: corpus.discarded_rows,
        truncated_rows: pipeline.truncated_rows.clone(),
        converged: pipeline.converged(),
        fits: pipeline.fits.clone(),
        config: cfg.clone(),
    };
    log::info!(
        "{}: train_acc={:.4} test_acc={:.4} time={:.3}s",
        cfg.summary(),
        report.train.accuracy,
        report.test.accuracy,
        report.train_time_s
    );
    Ok(ExperimentRun {
        pipeline,
        split,
        report,
    })
}

/// Runs one experiment end to end: load, preprocess, split, fit, evaluate.
/// Errors are wrapped with the failing stage and a config summary.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    staged("config", cfg, cfg.validate())?;
    let corpus = staged("load", cfg, load_corpus(&cfg.dataset))?;
    Ok(fit_experiment(cfg, &corpus)?.report)
}

/// Runs every grid point of `cfg.sweep` (or `cfg` alone) on one shared
/// corpus. Reports come back in grid order even when run in parallel.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<MetricsReport>> {
    let grid = staged("config", cfg, cfg.expand_sweep())?;
    let corpus = staged("load", cfg, load_corpus(&cfg.dataset))?;
    let parallel = cfg.sweep.as_ref().is_some_and(|s| s.parallel);
    let run = |c: &ExperimentConfig| fit_experiment(c, &corpus).map(|r| r.report);
    if parallel {
        grid.par_iter().map(run).collect()
    } else {
        grid.iter().map(run).collect()
    }
}
