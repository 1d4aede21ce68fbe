//! Dimensionality reduction.
//!
//! [`pca_fit`] / [`pca_transform`] reduce the number of feature columns.
//! [`haar_forward`] / [`haar_inverse`] implement the multi-level 1-D Haar
//! transform in averaging form (`a = (x0 + x1) / 2`, `d = (x0 - x1) / 2`),
//! and [`haar_compress_dataset`] uses it to reduce the number of rows of a
//! labelled dataset by `2^levels` per class.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::FeatureMatrix;

/// Fitted principal components.
///
/// `components` is `k × M` with orthonormal rows, ordered by non-increasing
/// explained variance. Each row's largest-magnitude entry is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PcaModelRepr", into = "PcaModelRepr")]
pub struct PcaModel {
    mean: DVector<f64>,
    components: DMatrix<f64>,
    explained_variance: DVector<f64>,
}

/// JSON layout: `{"mean": [M], "components": [[M]; k], "explained_variance": [k]}`.
#[derive(Serialize, Deserialize)]
struct PcaModelRepr {
    mean: Vec<f64>,
    components: Vec<Vec<f64>>,
    explained_variance: Vec<f64>,
}

impl From<PcaModel> for PcaModelRepr {
    fn from(m: PcaModel) -> Self {
        Self {
            mean: m.mean.iter().copied().collect(),
            components: m
                .components
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            explained_variance: m.explained_variance.iter().copied().collect(),
        }
    }
}

impl TryFrom<PcaModelRepr> for PcaModel {
    type Error = Error;

    fn try_from(r: PcaModelRepr) -> Result<Self> {
        let m = r.mean.len();
        let k = r.components.len();
        if r.explained_variance.len() != k || r.components.iter().any(|c| c.len() != m) {
            return Err(Error::Structural(
                "pca model: component/mean/variance lengths disagree".into(),
            ));
        }
        Ok(Self {
            mean: DVector::from_vec(r.mean),
            components: DMatrix::from_row_iterator(k, m, r.components.into_iter().flatten()),
            explained_variance: DVector::from_vec(r.explained_variance),
        })
    }
}

impl PcaModel {
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    pub fn explained_variance(&self) -> &DVector<f64> {
        &self.explained_variance
    }

    /// Number of fitted components (P).
    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    /// Input dimension (M).
    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    /// Fraction of the total variance captured by the first `k` components.
    pub fn explained_variance_ratio(&self, k: usize) -> f64 {
        let total: f64 = self.explained_variance.iter().sum();
        if total == 0.0 {
            return 0.0;
        }
        self.explained_variance.iter().take(k).sum::<f64>() / total
    }
}

/// Fits PCA by SVD of the mean-centred data.
///
/// Keeps `min(N, M)` components.
pub fn pca_fit(x: &FeatureMatrix) -> Result<PcaModel> {
    let (n, m) = x.shape();
    if n < 2 {
        return Err(Error::Argument(format!(
            "PCA needs at least 2 rows, got {n}"
        )));
    }
    if m == 0 {
        return Err(Error::Argument("PCA needs at least one feature".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("PCA input contains non-finite values".into()));
    }

    let mean = x.row_mean().transpose();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    if centered.iter().all(|&v| v == 0.0) {
        return Err(Error::NoVariance);
    }

    let svd = centered.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Structural("SVD did not produce right singular vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let k = order.len();
    let mut components = DMatrix::zeros(k, m);
    let mut explained = DVector::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        let mut row = v_t.row(src).into_owned();
        let pivot = row
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, v)| {
                if v.abs() > best.1.abs() {
                    (i, v)
                } else {
                    best
                }
            });
        if pivot.1 < 0.0 {
            row.neg_mut();
        }
        components.set_row(dst, &row);
        let s = svd.singular_values[src];
        explained[dst] = s * s / (n as f64 - 1.0);
    }

    Ok(PcaModel {
        mean,
        components,
        explained_variance: explained,
    })
}

/// Projects `x` onto the first `k` components: `(x - mean) · componentsᵀ`.
pub fn pca_transform(model: &PcaModel, x: &FeatureMatrix, k: usize) -> Result<FeatureMatrix> {
    if k > model.n_components() {
        return Err(Error::Argument(format!(
            "requested {k} components but only {} were fitted",
            model.n_components()
        )));
    }
    if x.ncols() != model.n_features() {
        return Err(Error::Dimension(format!(
            "PCA fitted on {} features, input has {}",
            model.n_features(),
            x.ncols()
        )));
    }
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= model.mean.transpose();
    }
    let basis = model.components.rows(0, k);
    Ok(centered * basis.transpose())
}

/// Multi-level 1-D Haar decomposition of a signal of length `N`.
///
/// `details[0]` is the finest level (length `N/2`), `details[levels-1]` the
/// coarsest (length `N/2^levels`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HaarDecomposition {
    pub approximation: Vec<f64>,
    pub details: Vec<Vec<f64>>,
    pub levels: usize,
}

/// Forward transform: each level replaces the current approximation by its
/// pairwise averages and records the pairwise half-differences.
pub fn haar_forward(signal: &[f64], levels: usize) -> Result<HaarDecomposition> {
    if levels == 0 {
        return Err(Error::Argument("Haar transform needs at least one level".into()));
    }
    let block = 1usize
        .checked_shl(levels as u32)
        .filter(|b| *b > 0)
        .ok_or_else(|| Error::Argument(format!("{levels} Haar levels is too many")))?;
    if signal.is_empty() || signal.len() % block != 0 {
        return Err(Error::Argument(format!(
            "signal length {} is not a positive multiple of 2^{levels} = {block}; \
             truncate trailing samples to a multiple of {block} first",
            signal.len()
        )));
    }

    let mut approx = signal.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let half = approx.len() / 2;
        let mut next = Vec::with_capacity(half);
        let mut detail = Vec::with_capacity(half);
        for pair in approx.chunks_exact(2) {
            next.push((pair[0] + pair[1]) / 2.0);
            detail.push((pair[0] - pair[1]) / 2.0);
        }
        details.push(detail);
        approx = next;
    }
    Ok(HaarDecomposition {
        approximation: approx,
        details,
        levels,
    })
}

/// Exact inverse of [`haar_forward`]: `x[2i] = a[i] + d[i]`,
/// `x[2i+1] = a[i] - d[i]`, from the coarsest level down.
pub fn haar_inverse(decomposition: &HaarDecomposition) -> Result<Vec<f64>> {
    let HaarDecomposition {
        approximation,
        details,
        levels,
    } = decomposition;
    if details.len() != *levels || *levels == 0 {
        return Err(Error::Structural(format!(
            "decomposition claims {levels} levels but holds {} detail vectors",
            details.len()
        )));
    }
    let mut current = approximation.clone();
    for (depth, detail) in details.iter().enumerate().rev() {
        if detail.len() != current.len() {
            return Err(Error::Structural(format!(
                "detail level {} has length {}, expected {}",
                depth + 1,
                detail.len(),
                current.len()
            )));
        }
        current = current
            .iter()
            .zip(detail)
            .flat_map(|(a, d)| [a + d, a - d])
            .collect();
    }
    Ok(current)
}

/// Result of [`haar_compress_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct HaarCompressed {
    pub features: FeatureMatrix,
    pub labels: Vec<u8>,
    /// Trailing rows dropped per class to reach a multiple of `2^levels`.
    pub truncated: BTreeMap<u8, usize>,
}

/// Reduces the row count of a labelled dataset by `2^levels` per class.
///
/// Rows are grouped by class (ascending label), keeping dataset order within
/// a class. Each feature column of a class block is transformed as a 1-D
/// signal and only the level-`levels` approximation is kept, so every output
/// row is the average of `2^levels` consecutive same-class input rows.
/// Trailing rows that do not fill a whole block are dropped and counted.
pub fn haar_compress_dataset(
    x: &FeatureMatrix,
    y: &[u8],
    levels: usize,
) -> Result<HaarCompressed> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!(
            "{} feature rows but {} labels",
            x.nrows(),
            y.len()
        )));
    }
    if levels == 0 {
        return Ok(HaarCompressed {
            features: x.clone(),
            labels: y.to_vec(),
            truncated: BTreeMap::new(),
        });
    }
    let block = 1usize
        .checked_shl(levels as u32)
        .ok_or_else(|| Error::Argument(format!("{levels} Haar levels is too many")))?;

    let mut by_class: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, &label) in y.iter().enumerate() {
        by_class.entry(label).or_default().push(i);
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    let mut truncated = BTreeMap::new();
    for (&class, idx) in &by_class {
        let kept = idx.len() / block * block;
        if kept == 0 {
            return Err(Error::OverCompressed(format!(
                "class {class} has {} rows, fewer than 2^{levels} = {block}",
                idx.len()
            )));
        }
        let dropped = idx.len() - kept;
        if dropped > 0 {
            log::info!("haar: class {class}: dropping {dropped} trailing rows");
        }
        truncated.insert(class, dropped);

        let out_rows = kept / block;
        let mut class_rows = vec![vec![0.0; x.ncols()]; out_rows];
        for col in 0..x.ncols() {
            let signal: Vec<f64> = idx[..kept].iter().map(|&r| x[(r, col)]).collect();
            let dec = haar_forward(&signal, levels)?;
            for (row, v) in class_rows.iter_mut().zip(dec.approximation) {
                row[col] = v;
            }
        }
        labels.extend(std::iter::repeat_n(class, out_rows));
        rows.extend(class_rows);
    }

    let features = DMatrix::from_row_iterator(rows.len(), x.ncols(), rows.into_iter().flatten());
    Ok(HaarCompressed {
        features,
        labels,
        truncated,
    })
}
