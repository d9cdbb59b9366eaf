//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities (visible with `--nocapture`).
//!
//! Run with: cargo test --test acceptance -- --nocapture

use std::time::Instant;

use lewiscore::bench::{
    emit_report, run_experiment, DatasetSpec, ExperimentConfig, Method, ReportFormat,
};
use lewiscore::coreset::draw_coreset;
use lewiscore::data::{gen_index_instance, gen_synthetic, LabeledMatrix};
use lewiscore::linalg::{leverage_scores, DenseMatrix};
use lewiscore::losses::{
    estimate_mu, loss_gradient, signed_masses, total_loss, weighted_loss, LossKind, MuEstimate,
    NiceHinge, Regularizer,
};
use lewiscore::rng::{derive_seed, SplitMix64};
use lewiscore::weights::{lewis_weights, sampling_probabilities, LewisConfig};

fn random_gaussian_matrix(n: usize, d: usize, seed: u64) -> DenseMatrix {
    let mut rng = SplitMix64::new(seed);
    DenseMatrix::new(n, d, (0..n * d).map(|_| rng.next_gaussian()).collect())
}

fn nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    lewiscore::bench::nearest_rank_percentile(sorted, pct)
}

/// Criterion 1: after the default 20 fixed-point iterations on 50 seeded
/// Gaussian matrices (n = 2000, d = 20), the fixed-point defect is < 1e-5
/// and the weights sum to 20 +/- 0.002. Under 30 seconds.
#[test]
fn acceptance_01_lewis_fixed_point() {
    let start = Instant::now();
    let mut worst_residual = 0.0_f64;
    let mut worst_sum_gap = 0.0_f64;
    for seed in 0..50 {
        let x = random_gaussian_matrix(2000, 20, 10_000 + seed);
        let res = lewis_weights(&x, &LewisConfig::default()).unwrap();
        worst_residual = worst_residual.max(res.residual);
        worst_sum_gap = worst_sum_gap.max((res.weights.sum() - 20.0).abs());
        assert!(
            res.residual < 1e-5,
            "seed {seed}: residual {}",
            res.residual
        );
        assert!(
            (res.weights.sum() - 20.0).abs() <= 0.002,
            "seed {seed}: sum {}",
            res.weights.sum()
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "took {elapsed:.1}s");
    println!(
        "ACCEPTANCE 1 (lewis fixed point): PASS - worst residual {worst_residual:.2e}, worst sum gap {worst_sum_gap:.2e}, {elapsed:.1}s"
    );
}

/// Criterion 2: structured matrices are exact to 1e-9: Lewis weights of I_d
/// are 1, of two stacked copies 1/2; leverage scores sum to the rank.
#[test]
fn acceptance_02_structured_matrix_exactness() {
    let d = 6;
    let res = lewis_weights(&DenseMatrix::identity(d), &LewisConfig::default()).unwrap();
    for &v in &res.weights.values {
        assert!((v - 1.0).abs() <= 1e-9, "identity weight {v}");
    }

    let mut rows = Vec::new();
    for _ in 0..2 {
        for i in 0..d {
            let mut r = vec![0.0; d];
            r[i] = 1.0;
            rows.push(r);
        }
    }
    let stacked = DenseMatrix::from_rows(&rows);
    let res = lewis_weights(&stacked, &LewisConfig::default()).unwrap();
    for &v in &res.weights.values {
        assert!((v - 0.5).abs() <= 1e-9, "stacked weight {v}");
    }

    // full-rank and rank-deficient leverage sums
    let x = random_gaussian_matrix(60, 5, 77);
    let sum = leverage_scores(&x).unwrap().sum();
    assert!((sum - 5.0).abs() <= 1e-9, "full-rank sum {sum}");

    let mut rng = SplitMix64::new(3);
    let deficient_rows: Vec<Vec<f64>> = (0..40)
        .map(|_| {
            let a = rng.next_gaussian();
            let b = rng.next_gaussian();
            vec![a, b, 2.0 * a - b]
        })
        .collect();
    let deficient = DenseMatrix::from_rows(&deficient_rows);
    let sum = leverage_scores(&deficient).unwrap().sum();
    assert!((sum - 2.0).abs() <= 1e-9, "rank-deficient sum {sum}");

    println!("ACCEPTANCE 2 (structured-matrix exactness): PASS - all values exact to 1e-9");
}

/// Criterion 3: hard-instance loss gap. For every bit string and probe index
/// with n0 in {4, 8} and kappa in {0.25, 0.5}, the regularized hinge
/// objective at the probe equals 2*n^k*d(d+1)^2 when the probed bit is set
/// and n^k*d(d+1)^2 otherwise, to 1e-9 relative. Under 10 seconds.
#[test]
fn acceptance_03_hard_instance_loss_gap() {
    let start = Instant::now();
    let hinge = NiceHinge::hinge();
    let mut checked = 0u64;
    let mut worst_rel = 0.0_f64;
    for &n0 in &[4usize, 8] {
        for &kappa in &[0.25, 0.5] {
            for mask in 0..(1u32 << n0) {
                let a: Vec<bool> = (0..n0).map(|i| (mask >> i) & 1 == 1).collect();
                for b in 1..=n0 {
                    let inst = gen_index_instance(n0, kappa, &a, b).unwrap();
                    let reg = Regularizer::l2_squared(inst.reg_scale());
                    let loss = total_loss(&inst.z, &inst.beta_probe, &hinge, &reg).unwrap();
                    let want = inst.expected_objective();
                    let rel = (loss - want).abs() / want;
                    worst_rel = worst_rel.max(rel);
                    assert!(
                        rel <= 1e-9,
                        "n0={n0} kappa={kappa} mask={mask:b} b={b}: {loss} vs {want}"
                    );
                    checked += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "took {elapsed:.1}s");
    println!(
        "ACCEPTANCE 3 (hard-instance loss gap): PASS - {checked} instances, worst relative error {worst_rel:.2e}, {elapsed:.1}s"
    );
}

/// Criterion 4: additive guarantee for the positive-part sum. Lewis coresets
/// on heavy-tailed synthetic data: the 95th percentile of
/// |sampled - full| / ||Z beta||_1 over 200 unit directions and 50 seeds is
/// below 0.1 at m = 4000, and shrinks at least 1.5x from m = 1000.
/// Under 5 minutes.
#[test]
fn acceptance_04_relu_additive_guarantee() {
    let start = Instant::now();
    let z = gen_synthetic(10_000, 10, 3.0, 1);
    let lewis = lewis_weights(z.matrix(), &LewisConfig::default())
        .unwrap()
        .weights;

    let mut rng = SplitMix64::new(123);
    let betas: Vec<Vec<f64>> = (0..200).map(|_| rng.next_unit_vector(10)).collect();
    // margins, positive-part sums, and l1 masses per direction, computed once
    let margins: Vec<Vec<f64>> = betas.iter().map(|b| z.matrix().matvec(b)).collect();
    let relu_sums: Vec<f64> = margins
        .iter()
        .map(|m| m.iter().map(|v| v.max(0.0)).sum())
        .collect();
    let l1_masses: Vec<f64> = margins
        .iter()
        .map(|m| m.iter().map(|v| v.abs()).sum())
        .collect();

    let p95_for = |m_size: usize| -> f64 {
        let p = sampling_probabilities(&lewis, m_size, false, 1.0).unwrap();
        let mut errs = Vec::with_capacity(200 * 50);
        for seed in 0..50u64 {
            let c = draw_coreset(&p, m_size, derive_seed(777, &[m_size as u64, seed])).unwrap();
            for k in 0..betas.len() {
                let mk = &margins[k];
                let approx: f64 = c
                    .indices()
                    .iter()
                    .zip(c.weights())
                    .map(|(&i, &w)| w * mk[i].max(0.0))
                    .sum();
                errs.push((approx - relu_sums[k]).abs() / l1_masses[k]);
            }
        }
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        nearest_rank(&errs, 95.0)
    };

    let p95_small = p95_for(1000);
    let p95_large = p95_for(4000);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(p95_large < 0.1, "p95 at m=4000: {p95_large}");
    assert!(
        p95_small / p95_large >= 1.5,
        "shrink factor {} (p95 {} -> {})",
        p95_small / p95_large,
        p95_small,
        p95_large
    );
    assert!(elapsed < 300.0, "took {elapsed:.1}s");
    println!(
        "ACCEPTANCE 4 (additive guarantee): PASS - p95 {p95_small:.4} at m=1000, {p95_large:.4} at m=4000 (shrink {:.2}x), {elapsed:.1}s",
        p95_small / p95_large
    );
}

fn median_cells(report: &lewiscore::bench::ExperimentReport, method: &str) -> Vec<(usize, f64)> {
    report
        .cells
        .iter()
        .filter(|c| c.method == method)
        .map(|c| (c.m, c.p50.unwrap_or(f64::INFINITY)))
        .collect()
}

/// Criterion 5: method ordering. On heavy-tailed data with high estimated
/// complexity, Lewis sampling beats uniform at every size in the default
/// grid for both losses without regularization; on light-tailed data with
/// squared-l2 regularization 0.5, uniform is within 2x of Lewis at the
/// smallest size. Under 20 minutes.
#[test]
fn acceptance_05_method_ordering() {
    let start = Instant::now();

    // high-complexity instance: assert the premise mu >= 10 first
    let z = gen_synthetic(10_000, 10, 3.0, 1);
    let (mu, _) = estimate_mu(&z, 2000, 5);
    let mu_ok = match mu {
        MuEstimate::Infinite => true,
        MuEstimate::Finite(v) => v >= 10.0,
    };
    assert!(mu_ok, "instance complexity too low: mu = {mu}");

    let mut summary = String::new();
    for loss in [LossKind::Logistic, LossKind::Hinge] {
        let mut cfg = ExperimentConfig::new(DatasetSpec::Synthetic {
            n: 10_000,
            d: 10,
            skew: 3.0,
            seed: 1,
        });
        cfg.loss = loss;
        cfg.reg = Regularizer::none();
        cfg.methods = vec![Method::Lewis, Method::Uniform];
        cfg.trials = 100;
        cfg.seed = 42;
        cfg.solver.max_iters = 150;
        cfg.mu_budget = 500;
        let (report, _) = run_experiment(&cfg).unwrap();
        let lewis = median_cells(&report, "lewis");
        let uniform = median_cells(&report, "uniform");
        for ((m, lw), (m2, un)) in lewis.iter().zip(&uniform) {
            assert_eq!(m, m2);
            assert!(
                lw < un,
                "{loss:?} m={m}: lewis median {lw} not below uniform {un}"
            );
        }
        summary.push_str(&format!(
            " [{loss:?}: lewis {:.2e} vs uniform {:.2e} at m=500]",
            lewis[0].1, uniform[0].1
        ));
    }

    // regularized, light-tailed: uniform within 2x of lewis at smallest m
    let mut cfg = ExperimentConfig::new(DatasetSpec::Synthetic {
        n: 10_000,
        d: 10,
        skew: 0.0,
        seed: 11,
    });
    cfg.loss = LossKind::Logistic;
    cfg.reg = Regularizer::l2_squared(0.5);
    cfg.methods = vec![Method::Lewis, Method::Uniform];
    cfg.sizes = vec![500];
    cfg.trials = 100;
    cfg.seed = 42;
    cfg.solver.max_iters = 150;
    cfg.mu_budget = 500;
    let (report, _) = run_experiment(&cfg).unwrap();
    let lewis = median_cells(&report, "lewis")[0].1;
    let uniform = median_cells(&report, "uniform")[0].1;
    assert!(
        uniform <= 2.0 * lewis,
        "regularized skew-0: uniform median {uniform} more than 2x lewis {lewis}"
    );

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 1200.0, "took {elapsed:.1}s");
    println!(
        "ACCEPTANCE 5 (method ordering): PASS - mu {mu},{summary} [regularized skew-0: uniform/lewis = {:.2}], {elapsed:.0}s",
        uniform / lewis
    );
}

/// Criterion 6: unbiasedness. The 1000-seed mean of the coreset-weighted
/// loss at a fixed parameter vector is within 4 standard errors of the full
/// loss on a 500x5 instance.
#[test]
fn acceptance_06_unbiasedness() {
    let z = gen_synthetic(500, 5, 1.5, 21);
    let f = NiceHinge::logistic();
    let reg = Regularizer::none();
    let mut rng = SplitMix64::new(9);
    let beta = rng.next_unit_vector(5);
    let full = total_loss(&z, &beta, &f, &reg).unwrap();

    let lewis = lewis_weights(z.matrix(), &LewisConfig::default())
        .unwrap()
        .weights;
    let m = 50;
    let p = sampling_probabilities(&lewis, m, true, 1.0).unwrap();
    let seeds = 1000;
    let values: Vec<f64> = (0..seeds)
        .map(|s| {
            let c = draw_coreset(&p, m, 40_000 + s as u64).unwrap();
            weighted_loss(&c, &z, &beta, &f, &reg).unwrap()
        })
        .collect();
    let mean = values.iter().sum::<f64>() / seeds as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (seeds - 1) as f64;
    let se = (var / seeds as f64).sqrt();
    let gap = (mean - full).abs();
    assert!(
        gap <= 4.0 * se,
        "mean {mean} vs full {full}: gap {gap} > 4 se {se}"
    );
    println!(
        "ACCEPTANCE 6 (unbiasedness): PASS - mean {mean:.4} vs full {full:.4}, gap/se = {:.2}",
        gap / se
    );
}

/// Criterion 7: the mu estimator with budget 1e4 agrees with a 1e5-point
/// angle-grid brute force to 2% on 20 random 2-d instances; the 1-d analytic
/// cases are exact.
#[test]
fn acceptance_07_mu_oracle_agreement() {
    // d = 1 analytic cases
    let z1 = LabeledMatrix::new(DenseMatrix::from_rows(&[vec![1.0], vec![-1.0]]), None, "t");
    let (mu, _) = estimate_mu(&z1, 100, 1);
    assert_eq!(mu, MuEstimate::Finite(1.0));
    let z2 = LabeledMatrix::new(DenseMatrix::from_rows(&[vec![2.0], vec![-1.0]]), None, "t");
    let (mu, _) = estimate_mu(&z2, 100, 1);
    assert_eq!(mu, MuEstimate::Finite(2.0));

    // d = 2 angle-grid oracle
    let grid = 100_000usize;
    let mut worst = 0.0_f64;
    for inst in 0..20u64 {
        let z = LabeledMatrix::new(random_gaussian_matrix(50, 2, 600 + inst), None, "t");
        let mut oracle = 0.0_f64;
        let mut oracle_infinite = false;
        for k in 0..grid {
            let theta = std::f64::consts::PI * k as f64 / grid as f64;
            let beta = [theta.cos(), theta.sin()];
            let (pos, neg) = signed_masses(&z, &beta);
            let (hi, lo) = if pos >= neg { (pos, neg) } else { (neg, pos) };
            if hi > 0.0 && lo < 1e-12 * hi {
                oracle_infinite = true;
                break;
            }
            if lo > 0.0 {
                oracle = oracle.max(hi / lo);
            }
        }
        let (mu, _) = estimate_mu(&z, 10_000, 900 + inst);
        match (oracle_infinite, mu) {
            (true, MuEstimate::Infinite) => {}
            (false, MuEstimate::Finite(v)) => {
                let rel = (v - oracle).abs() / oracle;
                worst = worst.max(rel);
                assert!(
                    rel <= 0.02,
                    "instance {inst}: estimate {v} vs oracle {oracle} ({rel:.3} rel)"
                );
            }
            (o, e) => panic!("instance {inst}: oracle infinite={o}, estimate {e:?}"),
        }
    }
    println!(
        "ACCEPTANCE 7 (mu oracle agreement): PASS - d=1 exact, worst d=2 deviation {worst:.4} (<= 0.02)"
    );
}

/// Criterion 8: analytic gradients match central finite differences to 1e-4
/// relative at 100 random smooth points, for logistic with and without each
/// regularizer.
#[test]
fn acceptance_08_gradient_correctness() {
    let z = gen_synthetic(60, 6, 1.0, 31);
    let f = NiceHinge::logistic();
    let regs = [
        Regularizer::none(),
        Regularizer::l2_squared(0.5),
        Regularizer::l2(0.5),
        Regularizer::l1(0.5),
    ];
    let mut rng = SplitMix64::new(17);
    let mut checked = 0;
    let mut worst = 0.0_f64;
    for reg in &regs {
        for _ in 0..25 {
            let beta: Vec<f64> = (0..6).map(|_| rng.next_gaussian()).collect();
            let g = loss_gradient(&z, &beta, &f, reg).unwrap();
            for k in 0..6 {
                let h = 1e-6 * (1.0 + beta[k].abs());
                let mut bp = beta.clone();
                bp[k] += h;
                let mut bm = beta.clone();
                bm[k] -= h;
                let fd = (total_loss(&z, &bp, &f, reg).unwrap()
                    - total_loss(&z, &bm, &f, reg).unwrap())
                    / (2.0 * h);
                let rel = (g[k] - fd).abs() / g[k].abs().max(fd.abs()).max(1.0);
                worst = worst.max(rel);
                assert!(rel <= 1e-4, "reg {:?} comp {k}: rel {rel}", reg.kind);
            }
            checked += 1;
        }
    }
    println!(
        "ACCEPTANCE 8 (gradient correctness): PASS - {checked} points, worst relative deviation {worst:.2e}"
    );
}

/// Criterion 9: repeated runs with an identical configuration produce
/// byte-identical CSV/JSON (and SVG) outputs.
#[test]
fn acceptance_09_determinism() {
    let mut cfg = ExperimentConfig::new(DatasetSpec::Synthetic {
        n: 2000,
        d: 5,
        skew: 2.0,
        seed: 6,
    });
    cfg.methods = vec![Method::Lewis, Method::L2s, Method::Uniform];
    cfg.sizes = vec![100, 200];
    cfg.trials = 10;
    cfg.seed = 2024;
    cfg.mu_budget = 300;
    cfg.solver.max_iters = 150;

    let base = std::env::temp_dir().join(format!("lewiscore_acc9_{}", std::process::id()));
    let formats = [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Svg];
    let mut digests: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for run in 0..2 {
        let (report, timing) = run_experiment(&cfg).unwrap();
        let dir = base.join(format!("run{run}"));
        let written = emit_report(&report, &timing, &formats, &dir).unwrap();
        let mut files: Vec<(String, Vec<u8>)> = written
            .iter()
            .filter(|p| !p.ends_with("timings.json"))
            .map(|p| {
                (
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    std::fs::read(p).unwrap(),
                )
            })
            .collect();
        files.sort_by(|a, b| a.0.cmp(&b.0));
        digests.push(files);
    }
    assert_eq!(digests[0].len(), digests[1].len());
    let mut names = Vec::new();
    for (a, b) in digests[0].iter().zip(&digests[1]) {
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1, "{} differs between identical runs", a.0);
        names.push(a.0.clone());
    }
    std::fs::remove_dir_all(&base).ok();
    println!(
        "ACCEPTANCE 9 (determinism): PASS - byte-identical across runs: {}",
        names.join(", ")
    );
}

/// Criterion 10 (optional, gated on dataset availability): with the real
/// datasets downloaded, the harness completes the full grid and the
/// qualitative ordering on KDD Cup '99 (Lewis best for both losses, with
/// and without regularization) is reproduced. Set LEWISCORE_DATA_DIR (or
/// place files under ./datasets) to enable; see the README for expected
/// names. Exact curves are not asserted: preprocessing of the published
/// datasets is not pinned down.
#[test]
fn acceptance_10_real_datasets_optional() {
    let dir = std::env::var("LEWISCORE_DATA_DIR").unwrap_or_else(|_| "datasets".into());
    let kdd = std::path::Path::new(&dir).join("kddcup99.libsvm");
    if !kdd.exists() {
        println!(
            "ACCEPTANCE 10 (real datasets): SKIP - {} not present; criterion is gated on dataset availability",
            kdd.display()
        );
        return;
    }
    let trials: usize = std::env::var("LEWISCORE_OPT10_TRIALS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(100);

    // complete the full grid on every available dataset
    for name in ["webspam.libsvm", "covtype.libsvm", "kddcup99.libsvm"] {
        let path = std::path::Path::new(&dir).join(name);
        if !path.exists() {
            println!("  (skipping {name}: not present)");
            continue;
        }
        for loss in [LossKind::Logistic, LossKind::Hinge] {
            for reg in [Regularizer::none(), Regularizer::l2_squared(0.5)] {
                let mut cfg = ExperimentConfig::new(DatasetSpec::Libsvm(path.clone()));
                cfg.loss = loss;
                cfg.reg = reg;
                cfg.trials = trials;
                cfg.seed = 42;
                cfg.solver.max_iters = 150;
                cfg.mu_budget = 500;
                let (report, _) = run_experiment(&cfg).unwrap();

                if name == "kddcup99.libsvm" {
                    let lewis = median_cells(&report, "lewis");
                    for other in ["l2s", "uniform"] {
                        let competitor = median_cells(&report, other);
                        for ((m, lw), (_, ot)) in lewis.iter().zip(&competitor) {
                            assert!(
                                lw <= ot,
                                "kdd {loss:?} reg {:?} m={m}: lewis {lw} not best vs {other} {ot}",
                                report.reg
                            );
                        }
                    }
                }
            }
        }
    }
    println!("ACCEPTANCE 10 (real datasets): PASS - grid completed; Lewis best on KDD Cup '99");
}
