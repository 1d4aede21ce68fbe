//! Acceptance suite: one PASS/FAIL line per criterion, then the non-gating
//! dataset checks. Exits non-zero if any gating criterion fails.
//!
//! Dataset checks run only when the files are supplied:
//! `QSENT_BENGALI_CSV` and `QSENT_TWITTER_CSV` (UTF-8, `text,label` header).

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use nalgebra::SymmetricEigen;
use qsent_core::dimred::{haar_forward, haar_inverse};
use qsent_core::featmap::build_feature_map;
use qsent_core::pipeline::{run_experiment, run_sweep, write_csv, EmitOptions, SweepConfig};
use qsent_core::qml::{
    ansatz_param_count, quantum_gram, quantum_kernel_matrix, vqc_gradient, vqc_loss,
    vqc_predict_batch, vqc_train, VqcConfig, VqcModel,
};
use qsent_core::svm::{linear_kernel, svm_train, svm_train_linear, SvmParams};
use qsent_core::textprep::Language;
use qsent_core::{ClassifierKind, Entanglement, ExperimentConfig, FeatureMapConfig, FeatureMatrix};
use rand::Rng;
use std::f64::consts::PI;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn run_criterion(id: &str, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let over = budget.is_some_and(|b| elapsed > b);
    let timing = match budget {
        Some(b) => format!("{:.3}s of {}s", elapsed.as_secs_f64(), b.as_secs()),
        None => format!("{:.3}s", elapsed.as_secs_f64()),
    };
    let (pass, detail) = match outcome {
        Ok(d) if over => (false, format!("{d}; over time budget")),
        Ok(d) => (true, d),
        Err(e) => (false, e),
    };
    println!("[{}] {id} {name}: {detail} ({timing})", if pass { "PASS" } else { "FAIL" });
    pass
}

fn fm(n: usize, reps: usize) -> FeatureMapConfig {
    FeatureMapConfig::new(n, reps, Entanglement::Linear).unwrap()
}

fn c1_haar_round_trip() -> Check {
    let mut rng = rng(101);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let levels = rng.random_range(1..=5usize);
        let len = loop {
            let l = rng.random_range(8..=256usize);
            if l % (1 << levels) == 0 {
                break l;
            }
        };
        let x: Vec<f64> = (0..len).map(|_| rng.random_range(-100.0..100.0)).collect();
        let back = haar_inverse(&haar_forward(&x, levels).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let err = back.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(err);
    }
    ensure(worst <= 1e-12, format!("max error {worst:e}"))?;
    Ok(format!("200 vectors, max error {worst:e}"))
}

fn c2_feature_map_equivalence() -> Check {
    let mut rng = rng(102);
    let mut worst = 0.0f64;
    for n in 1..=3 {
        for reps in 1..=2 {
            let cfg = fm(n, reps);
            for _ in 0..20 {
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
                let circ = build_feature_map(&x, &cfg).map_err(|e| e.to_string())?;
                let d = matrix_phase_distance(
                    &circuit_matrix(&circ),
                    &feature_map_oracle(&x, reps, &cfg.pairs()),
                );
                worst = worst.max(d);
            }
        }
    }
    ensure(worst < 1e-10, format!("max deviation {worst:e}"))?;
    Ok(format!("120 maps, max deviation up to phase {worst:e}"))
}

fn c3_gram_properties() -> Check {
    let mut rng = rng(103);
    let (mut asym, mut diag, mut min_eig) = (0.0f64, 0.0f64, f64::INFINITY);
    for n in [2, 4] {
        for _ in 0..10 {
            let x = random_matrix(&mut rng, 8, n, 0.0, 2.0 * PI);
            let k = quantum_gram(&x, &fm(n, 2)).map_err(|e| e.to_string())?;
            asym = asym.max((&k - k.transpose()).amax());
            diag = diag.max(k.diagonal().iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max));
            min_eig = min_eig.min(SymmetricEigen::new(k).eigenvalues.min());
        }
    }
    let a = random_matrix(&mut rng, 10, 1, 0.0, 2.0 * PI);
    let b = random_matrix(&mut rng, 10, 1, 0.0, 2.0 * PI);
    let k = quantum_kernel_matrix(&a, &b, &fm(1, 1)).map_err(|e| e.to_string())?;
    let closed = FeatureMatrix::from_fn(10, 10, |i, j| (a[(i, 0)] - b[(j, 0)]).cos().powi(2));
    let closed_err = (k - closed).amax();
    ensure(asym < 1e-10, format!("asymmetry {asym:e}"))?;
    ensure(diag < 1e-10, format!("diagonal error {diag:e}"))?;
    ensure(min_eig >= -1e-8, format!("min eigenvalue {min_eig:e}"))?;
    ensure(closed_err < 1e-10, format!("cos² error {closed_err:e}"))?;
    Ok(format!(
        "asym {asym:.1e}, diag {diag:.1e}, min eig {min_eig:.2e}, cos² err {closed_err:.1e}"
    ))
}

fn c4_gradient_check() -> Check {
    let mut rng = rng(104);
    let h = 1e-4;
    let mut worst = 0.0f64;
    for case in 0..50 {
        let n = 1 + case % 3;
        let layers = 1 + case % 3;
        let cfg = fm(n, 1 + case % 2);
        let x = random_matrix(&mut rng, 2, n, 0.0, 2.0 * PI);
        let y = [0u8, 1];
        let theta = random_angles(&mut rng, ansatz_param_count(n, layers));
        let model = VqcModel::new(cfg, layers, theta.clone()).map_err(|e| e.to_string())?;
        let grad = vqc_gradient(&x, &y, &model).map_err(|e| e.to_string())?;
        let mut diff = 0.0;
        let mut norm = 0.0;
        for i in 0..theta.len() {
            let at = |d: f64| {
                let mut t = theta.clone();
                t[i] += d;
                vqc_loss(&x, &y, &VqcModel::new(cfg, layers, t).unwrap()).unwrap()
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            diff += (grad[i] - fd).powi(2);
            norm += fd * fd;
        }
        worst = worst.max(diff.sqrt() / norm.sqrt().max(1e-3));
    }
    ensure(worst < 1e-6, format!("max relative error {worst:e}"))?;
    Ok(format!("50 instances, max relative error {worst:.2e}"))
}

fn c5_svm_oracle() -> Check {
    let mut rng = rng(105);
    let mut worst = 0.0f64;
    let mut mismatches = 0;
    for _ in 0..10 {
        let (x, y) = loop {
            let x = random_matrix(&mut rng, 6, 2, -2.0, 2.0);
            let y: Vec<u8> = (0..6).map(|_| rng.random_range(0..2)).collect();
            if y.contains(&0) && y.contains(&1) {
                break (x, y);
            }
        };
        let params = SvmParams::default();
        let k = linear_kernel(&x, &x).map_err(|e| e.to_string())?;
        let pre = svm_train(&k, &y, &params).map_err(|e| e.to_string())?;
        let signs: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
        let oracle = brute_force_dual(&k, &signs, params.c);
        worst = worst.max((pre.dual_objective(&k) - oracle).abs());

        let lin = svm_train_linear(&x, &y, &params).map_err(|e| e.to_string())?;
        let test = random_matrix(&mut rng, 20, 2, -3.0, 3.0);
        let a = lin.predict_features(&test).map_err(|e| e.to_string())?;
        let b = pre
            .predict_kernel(&linear_kernel(&test, &x).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        mismatches += a.iter().zip(&b).filter(|(p, q)| p.label != q.label).count();
    }
    ensure(worst < 1e-4, format!("dual gap {worst:e}"))?;
    ensure(mismatches == 0, format!("{mismatches} mode mismatches"))?;
    Ok(format!("10 instances, max dual gap {worst:.2e}, mode predictions identical"))
}

fn c6_vqc_learnability() -> Check {
    let cfg = fm(2, 2);
    let layers = 3;
    let teacher = VqcModel::random(cfg, layers, 7).map_err(|e| e.to_string())?;
    let mut rng = rng(106);
    let x = random_matrix(&mut rng, 40, 2, 0.0, 2.0 * PI);
    let y = vqc_predict_batch(&x, &teacher).map_err(|e| e.to_string())?;
    let positives = y.iter().filter(|&&l| l == 1).count();
    let student_cfg = VqcConfig {
        layers,
        iterations: 200,
        seed: 2024,
        ..Default::default()
    };
    let student = vqc_train(&x, &y, &cfg, &student_cfg).map_err(|e| e.to_string())?;
    let pred = vqc_predict_batch(&x, &student).map_err(|e| e.to_string())?;
    let acc = pred.iter().zip(&y).filter(|(p, t)| p == t).count() as f64 / y.len() as f64;
    ensure(acc >= 0.9, format!("training accuracy {acc:.3} ({positives}/40 positive)"))?;
    Ok(format!("training accuracy {acc:.3} after 200 iterations ({positives}/40 positive)"))
}

fn toy_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/toy_sentiment.csv")
}

fn c7_toy_end_to_end() -> Check {
    let mut reports = Vec::new();
    for kind in ClassifierKind::ALL {
        let mut cfg = ExperimentConfig::new(toy_path(), Language::English, kind);
        cfg.reduction.pca_k = Some(2);
        reports.push(run_experiment(&cfg).map_err(|e| e.to_string())?);
    }
    let classical = reports[0].test.accuracy;
    ensure(classical >= 0.9, format!("classical SVM test accuracy {classical:.3}"))?;
    let mut got = Vec::new();
    write_csv(&reports, &mut got, EmitOptions { redact_timing: true }).map_err(|e| e.to_string())?;
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/toy_report.csv");
    let want = std::fs::read(&golden).map_err(|e| format!("{}: {e}", golden.display()))?;
    ensure(got == want, "report differs from golden file")?;
    Ok(format!(
        "3 classifiers, classical test accuracy {classical:.3}, golden report matches"
    ))
}

/// Non-gating comparison against a published figure.
fn soft(name: &str, value: f64, lo: f64, hi: f64) {
    let tag = if (lo..=hi).contains(&value) { "SOFT-PASS" } else { "SOFT-MISS" };
    println!("[{tag}] {name}: {:.2}% (band {:.0}–{:.0}%)", value * 100.0, lo * 100.0, hi * 100.0);
}

fn soft_dataset(env: &str, language: Language, classical: f64, quantum: f64, haar_classical: Option<f64>) {
    let Some(path) = std::env::var_os(env) else {
        println!("[SKIP] {env} not set; dataset checks skipped");
        return;
    };
    let result = (|| -> qsent_core::Result<()> {
        let base = ExperimentConfig::new(PathBuf::from(&path), language, ClassifierKind::ClassicalSvm);
        let r = run_experiment(&base)?;
        soft(&format!("{env} classical SVM test accuracy"), r.test.accuracy, classical - 0.05, classical + 0.05);

        let mut cfg = base.clone();
        cfg.classifier.kind = ClassifierKind::QkernelSvm;
        cfg.reduction.pca_k = Some(2);
        let r = run_experiment(&cfg)?;
        soft(&format!("{env} quantum-kernel test accuracy (pca_k=2)"), r.test.accuracy, 0.65, 0.77);

        cfg.sweep = Some(SweepConfig {
            classifiers: ClassifierKind::ALL.to_vec(),
            pca_k: vec![2],
            haar_levels: vec![1, 2, 3, 4, 5],
            parallel: true,
        });
        for r in run_sweep(&cfg)? {
            let label = format!("{env} {} haar_levels={} test accuracy", r.method, r.haar_levels);
            match (r.method, haar_classical) {
                (ClassifierKind::ClassicalSvm, Some(target)) => {
                    soft(&label, r.test.accuracy, target - 0.05, target + 0.05)
                }
                (ClassifierKind::ClassicalSvm, None) => {
                    println!("[INFO] {label}: {:.2}%", r.test.accuracy * 100.0)
                }
                _ => soft(&label, r.test.accuracy, quantum - 0.05, quantum + 0.05),
            }
        }
        Ok(())
    })();
    if let Err(e) = result {
        println!("[SOFT-MISS] {env}: run failed: {e}");
    }
}

type Criterion = (&'static str, &'static str, Option<u64>, fn() -> Check);

fn main() -> ExitCode {
    // `cargo test` passes harness flags such as `--nocapture`; nothing to parse.
    let checks: [Criterion; 7] = [
        ("1", "Haar round trip", Some(1), c1_haar_round_trip),
        ("2", "feature-map equivalence", Some(10), c2_feature_map_equivalence),
        ("3", "kernel Gram properties", None, c3_gram_properties),
        ("4", "parameter-shift gradient check", None, c4_gradient_check),
        ("5", "SVM dual oracle and mode equivalence", None, c5_svm_oracle),
        ("6", "VQC teacher-student learnability", Some(60), c6_vqc_learnability),
        ("7", "toy end-to-end run", None, c7_toy_end_to_end),
    ];
    let mut failed = 0;
    for (id, name, budget, f) in checks {
        if !run_criterion(id, name, budget.map(Duration::from_secs), f) {
            failed += 1;
        }
    }
    soft_dataset("QSENT_BENGALI_CSV", Language::Bengali, 0.72, 0.7222, None);
    soft_dataset("QSENT_TWITTER_CSV", Language::English, 0.84, 0.7123, Some(0.58));
    println!("acceptance: {} of 7 criteria passed", 7 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
