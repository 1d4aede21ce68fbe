use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featmap::{Entanglement, FeatureMapConfig};
use crate::qml::VqcConfig;
use crate::qsim::MAX_QUBITS;
use crate::svm::SvmParams;
use crate::textprep::Language;

/// Largest Haar level accepted in a configuration.
pub const MAX_HAAR_LEVELS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    ClassicalSvm,
    QkernelSvm,
    Vqc,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [
        ClassifierKind::ClassicalSvm,
        ClassifierKind::QkernelSvm,
        ClassifierKind::Vqc,
    ];

    pub fn is_quantum(self) -> bool {
        !matches!(self, ClassifierKind::ClassicalSvm)
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierKind::ClassicalSvm => "classical_svm",
            ClassifierKind::QkernelSvm => "qkernel_svm",
            ClassifierKind::Vqc => "vqc",
        })
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown classifier `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    #[default]
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub format: DataFormat,
    pub language: Language,
    /// Stop-word file overriding the bundled list for `language`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<PathBuf>,
    /// Lowercase after cleaning; defaults to true for English only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lowercase: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    /// Fraction of each class assigned to training.
    pub ratio: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            ratio: 0.8,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionConfig {
    /// Number of principal components kept; `None` disables PCA.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pca_k: Option<usize>,
    /// Haar levels applied to the training split (0 disables).
    pub haar_levels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureMapSettings {
    /// Must equal `pca_k` when given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qubits: Option<usize>,
    pub reps: usize,
    pub entanglement: Entanglement,
    /// Target range of the per-feature min-max scaling.
    pub scale_min: f64,
    pub scale_max: f64,
}

impl Default for FeatureMapSettings {
    fn default() -> Self {
        Self {
            qubits: None,
            reps: 2,
            entanglement: Entanglement::Linear,
            scale_min: 0.0,
            scale_max: 2.0 * std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantumConfig {
    /// 0 evaluates exact amplitudes; otherwise kernels and VQC predictions
    /// are estimated from this many sampled shots.
    pub shots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub format: ReportFormat,
}

/// Method × reduction grid expanded by [`ExperimentConfig::expand_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub classifiers: Vec<ClassifierKind>,
    /// PCA sizes; 0 means no PCA.
    pub pca_k: Vec<usize>,
    pub haar_levels: Vec<usize>,
    /// Run grid points concurrently (timings then include contention).
    pub parallel: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            classifiers: ClassifierKind::ALL.to_vec(),
            pca_k: vec![2, 4, 6],
            haar_levels: vec![0],
            parallel: false,
        }
    }
}

/// Declarative description of one experiment (or a sweep of them).
///
/// Loaded from TOML; relative paths are resolved against the config file's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub reduction: ReductionConfig,
    pub classifier: ClassifierConfig,
    #[serde(default)]
    pub feature_map: FeatureMapSettings,
    #[serde(default)]
    pub quantum: QuantumConfig,
    #[serde(default)]
    pub svm: SvmParams,
    #[serde(default)]
    pub vqc: VqcConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

impl ExperimentConfig {
    /// Minimal valid configuration for `dataset` with everything else at
    /// defaults.
    pub fn new(dataset: impl Into<PathBuf>, language: Language, kind: ClassifierKind) -> Self {
        Self {
            dataset: DatasetConfig {
                path: dataset.into(),
                format: DataFormat::Csv,
                language,
                stopwords: None,
                lowercase: None,
            },
            split: SplitConfig::default(),
            reduction: ReductionConfig::default(),
            classifier: ClassifierConfig { kind },
            feature_map: FeatureMapSettings::default(),
            quantum: QuantumConfig::default(),
            svm: SvmParams::default(),
            vqc: VqcConfig::default(),
            output: OutputConfig::default(),
            sweep: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset.path);
        if let Some(p) = self.dataset.stopwords.as_mut() {
            fix(p);
        }
        if let Some(p) = self.output.path.as_mut() {
            fix(p);
        }
    }

    /// Applies a `--seed` override to every seeded stage.
    pub fn set_seed(&mut self, seed: u64) {
        self.split.seed = seed;
        self.svm.seed = seed;
        self.vqc.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.split.ratio;
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Config(format!("split ratio {r} is not in (0, 1)")));
        }
        if self.reduction.pca_k == Some(0) {
            return Err(Error::Config(
                "pca_k must be at least 1 (omit it to disable PCA)".into(),
            ));
        }
        if self.reduction.haar_levels > MAX_HAAR_LEVELS {
            return Err(Error::Config(format!(
                "haar_levels {} exceeds the supported maximum {MAX_HAAR_LEVELS}",
                self.reduction.haar_levels
            )));
        }
        if self.reduction.haar_levels > 0 && self.reduction.pca_k.is_none() {
            return Err(Error::Config(
                "haar_levels > 0 requires pca_k: Haar compression runs on PCA-reduced features"
                    .into(),
            ));
        }
        let (lo, hi) = (self.feature_map.scale_min, self.feature_map.scale_max);
        if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
            return Err(Error::Config("feature_map.scale_min must be < scale_max".into()));
        }
        let positive = |v: f64| v > 0.0 && !v.is_nan();
        if !positive(self.svm.c) || !positive(self.svm.tol) || self.svm.max_passes == 0 {
            return Err(Error::Config(
                "svm needs c > 0, tol > 0 and max_passes >= 1".into(),
            ));
        }
        if self.classifier.kind.is_quantum() {
            let k = self.reduction.pca_k.ok_or_else(|| {
                Error::Config(format!(
                    "{} needs pca_k: one qubit per reduced feature",
                    self.classifier.kind
                ))
            })?;
            if k > MAX_QUBITS {
                return Err(Error::Config(format!(
                    "pca_k = {k} would need more than {MAX_QUBITS} qubits"
                )));
            }
            if let Some(q) = self.feature_map.qubits {
                if q != k {
                    return Err(Error::Config(format!(
                        "feature_map.qubits = {q} disagrees with pca_k = {k}"
                    )));
                }
            }
            self.feature_map_config()?;
        }
        Ok(())
    }

    /// Feature-map configuration for quantum classifiers.
    pub fn feature_map_config(&self) -> Result<FeatureMapConfig> {
        let n = self
            .reduction
            .pca_k
            .ok_or_else(|| Error::Config("feature map needs pca_k".into()))?;
        FeatureMapConfig::new(n, self.feature_map.reps, self.feature_map.entanglement)
    }

    /// One-line summary used in error messages and logs.
    pub fn summary(&self) -> String {
        format!(
            "classifier={} pca_k={} haar_levels={} dataset={}",
            self.classifier.kind,
            self.reduction
                .pca_k
                .map_or_else(|| "none".to_owned(), |k| k.to_string()),
            self.reduction.haar_levels,
            self.dataset.path.display()
        )
    }

    /// Expands the `[sweep]` grid in classifier, pca_k, haar_levels order.
    /// Without a `[sweep]` section the config itself is the only point.
    pub fn expand_sweep(&self) -> Result<Vec<ExperimentConfig>> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![self.clone()]);
        };
        let mut out = Vec::new();
        for &kind in &sweep.classifiers {
            for &k in &sweep.pca_k {
                for &levels in &sweep.haar_levels {
                    let mut cfg = self.clone();
                    cfg.sweep = None;
                    cfg.classifier.kind = kind;
                    cfg.reduction.pca_k = (k > 0).then_some(k);
                    cfg.reduction.haar_levels = levels;
                    if k > 0 {
                        cfg.feature_map.qubits = None;
                    }
                    cfg.validate()?;
                    out.push(cfg);
                }
            }
        }
        if out.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        Ok(out)
    }
}
