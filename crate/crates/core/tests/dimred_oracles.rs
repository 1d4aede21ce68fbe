mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use qsent_core::dimred::{haar_compress_dataset, haar_forward, haar_inverse, pca_fit, pca_transform};
use qsent_core::Error;
use rand::Rng;

#[test]
fn explained_variance_matches_covariance_eigenvalues() {
    let mut rng = rng(31);
    let x = random_matrix(&mut rng, 20, 6, -3.0, 3.0);
    let model = pca_fit(&x).unwrap();
    let (values, _) = covariance_eigen(&x);
    assert_eq!(model.n_components(), 6);
    for (got, want) in model.explained_variance().iter().zip(&values) {
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }
}

#[test]
fn projection_matches_eigenvector_oracle_up_to_sign() {
    let mut rng = rng(32);
    // correlated synthetic features so the leading directions are well separated
    let base = random_matrix(&mut rng, 40, 2, -2.0, 2.0);
    let mix = DMatrix::from_row_slice(2, 6, &[3.0, 1.0, 0.5, -1.0, 0.2, 2.0, -0.5, 1.5, 2.0, 0.3, -1.0, 0.1]);
    let noise = random_matrix(&mut rng, 40, 6, -0.1, 0.1);
    let x = base * mix + noise;

    let model = pca_fit(&x).unwrap();
    let z = pca_transform(&model, &x, 2).unwrap();
    let (_, vectors) = covariance_eigen(&x);
    let mean = x.row_mean();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let oracle = centered * vectors.columns(0, 2);
    for col in 0..2 {
        let same: f64 = (z.column(col) - oracle.column(col)).amax();
        let flipped: f64 = (z.column(col) + oracle.column(col)).amax();
        assert!(same.min(flipped) < 1e-8, "column {col}: {same} / {flipped}");
    }
}

#[test]
fn components_orthonormal_and_variances_consistent() {
    let mut rng = rng(33);
    let x = random_matrix(&mut rng, 30, 5, 0.0, 4.0);
    let model = pca_fit(&x).unwrap();
    let w = model.components();
    let gram = w * w.transpose();
    assert!((gram - DMatrix::identity(w.nrows(), w.nrows())).amax() < 1e-10);
    let z = pca_transform(&model, &x, model.n_components()).unwrap();
    for (i, ev) in model.explained_variance().iter().enumerate() {
        let col = z.column(i);
        let var = col.iter().map(|v| v * v).sum::<f64>() / (x.nrows() as f64 - 1.0);
        assert!((var - ev).abs() < 1e-8);
    }
    for row in w.row_iter() {
        let top = row.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap();
        assert!(top > 0.0);
    }
}

#[test]
fn pca_errors() {
    assert!(matches!(pca_fit(&DMatrix::from_element(4, 3, 2.0)), Err(Error::NoVariance)));
    let x = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 1.0, 0.0, 2.0, 2.0]);
    let model = pca_fit(&x).unwrap();
    assert!(pca_transform(&model, &x, 3).is_err());
    assert!(matches!(
        pca_transform(&model, &DMatrix::zeros(2, 3), 1),
        Err(Error::Dimension(_))
    ));
}

#[test]
fn haar_round_trip_random_lengths() {
    let mut rng = rng(34);
    for _ in 0..100 {
        let levels = rng.random_range(1..=5);
        let blocks = rng.random_range(1..=8);
        let len = blocks << levels;
        let x: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
        let dec = haar_forward(&x, levels).unwrap();
        assert_eq!(dec.approximation.len(), len >> levels);
        let back = haar_inverse(&dec).unwrap();
        let err = back.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }
}

#[test]
fn monotone_ramp_details_are_small() {
    let ramp: Vec<f64> = (0..64).map(|i| 10.0 + i as f64 * 0.5).collect();
    let dec = haar_forward(&ramp, 3).unwrap();
    let mean_abs = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>() / v.len() as f64;
    for d in &dec.details {
        assert!(mean_abs(d) <= mean_abs(&dec.approximation));
    }
}

fn class_blocks(labels: &[u8]) -> Vec<(u8, usize)> {
    let mut counts = std::collections::BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    counts.into_iter().collect()
}

proptest! {
    #[test]
    fn haar_inverse_of_forward_is_identity(
        levels in 1usize..=5,
        blocks in 1usize..=8,
        seed in any::<u64>(),
    ) {
        let mut rng = common::rng(seed);
        let x: Vec<f64> = (0..(blocks << levels)).map(|_| rng.random_range(-1e3..1e3)).collect();
        let back = haar_inverse(&haar_forward(&x, levels).unwrap()).unwrap();
        for (a, b) in back.iter().zip(&x) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn compression_row_count_law_and_label_purity(
        labels in proptest::collection::vec(0u8..2, 8..80),
        levels in 0usize..=3,
        seed in any::<u64>(),
    ) {
        let mut rng = common::rng(seed);
        let n = labels.len();
        let block = 1usize << levels;
        prop_assume!(class_blocks(&labels).iter().all(|&(_, c)| c >= block));
        prop_assume!(class_blocks(&labels).len() == 2);
        // feature 0 carries the label so mixing would be visible
        let x = DMatrix::from_fn(n, 3, |r, c| {
            if c == 0 { labels[r] as f64 * 100.0 } else { rng.random_range(-1.0..1.0) }
        });
        let out = haar_compress_dataset(&x, &labels, levels).unwrap();
        let expected: usize = class_blocks(&labels).iter().map(|&(_, c)| c / block).sum();
        prop_assert_eq!(out.labels.len(), expected);
        prop_assert_eq!(out.features.nrows(), expected);
        for (r, &l) in out.labels.iter().enumerate() {
            prop_assert!((out.features[(r, 0)] - l as f64 * 100.0).abs() < 1e-9);
        }
        for (class, count) in class_blocks(&labels) {
            let dropped = out.truncated.get(&class).copied().unwrap_or(0);
            prop_assert_eq!(dropped, if levels == 0 { 0 } else { count % block });
        }
    }
}
