//! ℓ1 Lewis weights and the sampling distributions derived from them.
//!
//! The Lewis weights of a matrix `X` are the unique nonnegative τ with
//! `τ_i² = x_iᵀ (Xᵀ diag(1/τ) X)⁺ x_i`; they generalize leverage scores from
//! ℓ2 to ℓ1 and sum to the rank of `X`. They are computed here by the
//! geometric-mean fixed-point iteration
//! `τ_i ← sqrt(τ_i · lev_i(diag(1/√τ) X))`, which contracts where the plain
//! assignment oscillates. Each iteration costs one leverage-score
//! computation of a row-rescaled matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{leverage_scores, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightKind {
    LewisWeights,
    SqrtLeverage,
    Uniform,
    SamplingProb,
}

impl std::fmt::Display for WeightKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeightKind::LewisWeights => write!(f, "lewis"),
            WeightKind::SqrtLeverage => write!(f, "l2s"),
            WeightKind::Uniform => write!(f, "uniform"),
            WeightKind::SamplingProb => write!(f, "sampling-prob"),
        }
    }
}

/// Per-row nonnegative scores with a declared kind. `LewisWeights` sum to the
/// rank of the matrix (d when full rank); `SamplingProb` sums to the target
/// sample count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub values: Vec<f64>,
    pub kind: WeightKind,
}

impl WeightVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Configuration of the Lewis-weight fixed-point iteration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LewisConfig {
    /// Iteration cap; 20 is enough to reach successive relative differences
    /// around 1e-6 on well-conditioned data.
    pub max_iters: usize,
    /// Stop when `max_i |τ_i_new / τ_i_old - 1|` drops below this.
    pub tol: f64,
}

impl Default for LewisConfig {
    fn default() -> Self {
        Self {
            max_iters: 20,
            tol: 1e-6,
        }
    }
}

/// Result of the Lewis-weight computation: the weights, how many iterations
/// ran, and the final fixed-point defect
/// `max_i |τ_i² - x_iᵀ(XᵀWX)⁺x_i| / max(τ_i², 1e-30)`.
#[derive(Debug, Clone)]
pub struct LewisResult {
    pub weights: WeightVector,
    pub iterations: usize,
    pub residual: f64,
}

/// Computes the ℓ1 Lewis weights of `X` by fixed-point iteration from the
/// uniform start `τ_i = d/n`. Zero rows get weight 0 and are excluded from
/// the reweighted Gram matrix. Non-convergence is not an error: the returned
/// residual tells the caller how good the fixed point is.
pub fn lewis_weights(x: &DenseMatrix, cfg: &LewisConfig) -> Result<LewisResult> {
    assert!(cfg.max_iters >= 1, "max_iters must be at least 1");
    assert!(cfg.tol > 0.0, "tol must be positive");
    x.check_finite("lewis_weights input")?;

    let n = x.rows();
    let d = x.cols();
    let nonzero: Vec<usize> = (0..n)
        .filter(|&i| x.row(i).iter().any(|&v| v != 0.0))
        .collect();
    if nonzero.is_empty() {
        return Ok(LewisResult {
            weights: WeightVector {
                values: vec![0.0; n],
                kind: WeightKind::LewisWeights,
            },
            iterations: 0,
            residual: 0.0,
        });
    }

    // Compact matrix of the nonzero rows.
    let active: Vec<Vec<f64>> = nonzero.iter().map(|&i| x.row(i).to_vec()).collect();
    let active = DenseMatrix::from_rows(&active);
    let na = active.rows();

    let mut tau = vec![d as f64 / n as f64; na];
    let mut iterations = 0;

    // leverage scores of diag(1/sqrt(τ)) X at the current τ
    let reweighted_leverage = |tau: &[f64]| -> Result<Vec<f64>> {
        let scales: Vec<f64> = tau.iter().map(|&t| 1.0 / t.sqrt()).collect();
        let lev = leverage_scores(&active.scale_rows(&scales))?;
        Ok(lev.into_values())
    };

    let mut lev = reweighted_leverage(&tau)?;
    for _ in 0..cfg.max_iters {
        iterations += 1;
        let mut max_change = 0.0_f64;
        let mut next = Vec::with_capacity(na);
        for i in 0..na {
            // sqrt(τ_i * lev_i) = sqrt(x_iᵀ (XᵀWX)⁺ x_i)
            let t = (tau[i] * lev[i]).sqrt();
            if tau[i] > 0.0 {
                max_change = max_change.max((t / tau[i] - 1.0).abs());
            }
            next.push(t);
        }
        tau = next;
        lev = reweighted_leverage(&tau)?;
        if max_change < cfg.tol {
            break;
        }
    }

    // Defect of the defining fixed point at the final τ.
    let mut residual = 0.0_f64;
    for i in 0..na {
        let quad = tau[i] * lev[i]; // x_iᵀ (XᵀWX)⁺ x_i
        let defect = (tau[i] * tau[i] - quad).abs() / (tau[i] * tau[i]).max(1e-30);
        residual = residual.max(defect);
    }

    let mut values = vec![0.0; n];
    for (k, &i) in nonzero.iter().enumerate() {
        values[i] = tau[k];
    }
    Ok(LewisResult {
        weights: WeightVector {
            values,
            kind: WeightKind::LewisWeights,
        },
        iterations,
        residual,
    })
}

/// Row scores `sqrt(leverage_i)`, the ℓ2-based sampling baseline.
pub fn sqrt_leverage_distribution(x: &DenseMatrix) -> Result<WeightVector> {
    let lev = leverage_scores(x)?;
    Ok(WeightVector {
        values: lev.values().iter().map(|&v| v.sqrt()).collect(),
        kind: WeightKind::SqrtLeverage,
    })
}

/// Uniform scores `1/n`.
pub fn uniform_distribution(n: usize) -> WeightVector {
    WeightVector {
        values: vec![1.0 / n as f64; n],
        kind: WeightKind::Uniform,
    }
}

/// Turns row scores into sampling probabilities summing to `m`.
///
/// With `uniform_mix` the base score is `max(w_i, 1/n)`, which floors every
/// row's chance at the uniform rate; `mu_oversample` only annotates the
/// recommended sample count and cancels in the normalization, so it does not
/// change the distribution at fixed `m`.
pub fn sampling_probabilities(
    w: &WeightVector,
    m: usize,
    uniform_mix: bool,
    mu_oversample: f64,
) -> Result<WeightVector> {
    if m == 0 {
        return Err(Error::InvalidConfig("sample count m must be >= 1".into()));
    }
    if mu_oversample < 1.0 || mu_oversample.is_nan() {
        return Err(Error::InvalidConfig(format!(
            "mu_oversample must be >= 1, got {mu_oversample}"
        )));
    }
    let n = w.len();
    if n == 0 {
        return Err(Error::ZeroMass);
    }
    if !w.values.iter().all(|v| v.is_finite() && *v >= 0.0) {
        return Err(Error::NonFinite("sampling weights"));
    }
    let floor = 1.0 / n as f64;
    let base: Vec<f64> = if uniform_mix {
        w.values.iter().map(|&v| v.max(floor)).collect()
    } else {
        w.values.clone()
    };
    let total: f64 = base.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let mf = m as f64;
    let mut p: Vec<f64> = base.iter().map(|&b| mf * b / total).collect();
    // Pin the sum to m exactly by absorbing the rounding residual into the
    // last component.
    let partial: f64 = p[..n - 1].iter().sum();
    p[n - 1] = mf - partial;
    Ok(WeightVector {
        values: p,
        kind: WeightKind::SamplingProb,
    })
}

/// Histogram with log-spaced bin edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges, starting at 1.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Histogram of the pointwise divergence `max(p_i/q_i, q_i/p_i)` between two
/// distributions, after normalizing both to unit mass and flooring at
/// `1e-300`. Bin edges are log-spaced from 1 to the maximum ratio.
pub fn distribution_ratio_histogram(
    p: &WeightVector,
    q: &WeightVector,
    bins: usize,
) -> Result<Histogram> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(p.len(), q.len()));
    }
    assert!(bins >= 1, "need at least one bin");
    let (sp, sq) = (p.sum(), q.sum());
    if sp <= 0.0 || sq <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let ratios: Vec<f64> = p
        .values
        .iter()
        .zip(&q.values)
        .map(|(&pv, &qv)| {
            let a = (pv / sp).max(1e-300);
            let b = (qv / sq).max(1e-300);
            (a / b).max(b / a)
        })
        .collect();
    let max_ratio = ratios.iter().fold(1.0_f64, |acc, &r| acc.max(r));
    let hi = max_ratio.max(1.0 + 1e-12);
    let log_hi = hi.ln();
    let edges: Vec<f64> = (0..=bins)
        .map(|k| (log_hi * k as f64 / bins as f64).exp())
        .collect();
    let mut counts = vec![0u64; bins];
    for r in ratios {
        let mut idx = ((r.ln() / log_hi) * bins as f64).floor() as isize;
        if idx < 0 {
            idx = 0;
        }
        if idx as usize >= bins {
            idx = bins as isize - 1;
        }
        counts[idx as usize] += 1;
    }
    Ok(Histogram { edges, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_matrix(n: usize, d: usize, seed: u64) -> DenseMatrix {
        let mut rng = SplitMix64::new(seed);
        DenseMatrix::new(n, d, (0..n * d).map(|_| rng.next_gaussian()).collect())
    }

    fn stacked_identities(d: usize, copies: usize) -> DenseMatrix {
        let mut rows = Vec::new();
        for _ in 0..copies {
            for i in 0..d {
                let mut r = vec![0.0; d];
                r[i] = 1.0;
                rows.push(r);
            }
        }
        DenseMatrix::from_rows(&rows)
    }

    #[test]
    fn lewis_identity_is_all_ones() {
        let res = lewis_weights(&DenseMatrix::identity(5), &LewisConfig::default()).unwrap();
        for &v in &res.weights.values {
            assert!((v - 1.0).abs() < 1e-12, "weight {v}");
        }
        assert!(res.residual < 1e-12);
        assert_eq!(res.iterations, 1);
    }

    #[test]
    fn lewis_stacked_identities_are_half() {
        let res = lewis_weights(&stacked_identities(4, 2), &LewisConfig::default()).unwrap();
        for &v in &res.weights.values {
            assert!((v - 0.5).abs() < 1e-12, "weight {v}");
        }
    }

    #[test]
    fn lewis_sum_matches_long_run_fixed_point() {
        let x = random_matrix(200, 5, 77);
        let res = lewis_weights(&x, &LewisConfig::default()).unwrap();
        assert!((res.weights.sum() - 5.0).abs() < 1e-3, "sum {}", res.weights.sum());
        assert!(res.residual < 1e-5, "residual {}", res.residual);
        assert!(res.iterations <= 20);

        // long-run oracle: 200 iterations, tight tolerance
        let long = lewis_weights(
            &x,
            &LewisConfig {
                max_iters: 200,
                tol: 1e-14,
            },
        )
        .unwrap();
        for (a, b) in res.weights.values.iter().zip(&long.weights.values) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
        assert!((long.weights.sum() - 5.0).abs() < 1e-10);
    }

    #[test]
    fn lewis_zero_rows_get_zero_weight() {
        let mut rows = vec![vec![0.0, 0.0]];
        rows.push(vec![1.0, 0.0]);
        rows.push(vec![0.0, 2.0]);
        let x = DenseMatrix::from_rows(&rows);
        // init d/n = 2/3 is off the fixed point here, so give the iteration
        // room to contract all the way
        let cfg = LewisConfig {
            max_iters: 60,
            tol: 1e-14,
        };
        let res = lewis_weights(&x, &cfg).unwrap();
        assert_eq!(res.weights.values[0], 0.0);
        assert!((res.weights.values[1] - 1.0).abs() < 1e-9);
        assert!((res.weights.values[2] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lewis_invariant_under_row_sign_flips() {
        let x = random_matrix(60, 4, 13);
        let mut rng = SplitMix64::new(99);
        let signs: Vec<f64> = (0..60)
            .map(|_| if rng.next_f64() < 0.5 { -1.0 } else { 1.0 })
            .collect();
        let flipped = x.scale_rows(&signs);
        let a = lewis_weights(&x, &LewisConfig::default()).unwrap();
        let b = lewis_weights(&flipped, &LewisConfig::default()).unwrap();
        for (u, v) in a.weights.values.iter().zip(&b.weights.values) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn lewis_invariant_under_right_multiplication() {
        let x = random_matrix(50, 3, 29);
        let t = DenseMatrix::new(3, 3, vec![1.2, 0.4, -0.3, 0.0, 0.9, 0.5, 0.1, -0.2, 1.4]);
        let a = lewis_weights(&x, &LewisConfig::default()).unwrap();
        let b = lewis_weights(&x.matmul(&t), &LewisConfig::default()).unwrap();
        for (u, v) in a.weights.values.iter().zip(&b.weights.values) {
            assert!((u - v).abs() < 1e-6, "{u} vs {v}");
        }
    }

    #[test]
    fn residual_small_after_default_iterations_across_shapes() {
        // full-rank Gaussian matrices of assorted shapes: the defect after
        // the default 20 iterations should be below 1e-5 nearly always
        let mut ok = 0;
        let trials = 100;
        for t in 0..trials {
            let mut rng = SplitMix64::new(1000 + t);
            let n = 100 + (rng.next_u64() % 900) as usize;
            let d = 3 + (rng.next_u64() % 18) as usize;
            let x = random_matrix(n, d, 5000 + t);
            let res = lewis_weights(&x, &LewisConfig::default()).unwrap();
            if res.residual < 1e-5 {
                ok += 1;
            }
        }
        assert!(ok >= 95, "only {ok}/{trials} runs reached residual < 1e-5");
    }

    #[test]
    fn sqrt_leverage_values() {
        let x = DenseMatrix::identity(3);
        let w = sqrt_leverage_distribution(&x).unwrap();
        assert_eq!(w.kind, WeightKind::SqrtLeverage);
        for &v in &w.values {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let x = random_matrix(50, 4, 31);
        let w = sqrt_leverage_distribution(&x).unwrap();
        let resummed: f64 = w.values.iter().map(|v| v * v).sum();
        assert!((resummed - 4.0).abs() < 1e-8);
    }

    #[test]
    fn sampling_probabilities_uniform() {
        let w = uniform_distribution(5);
        let p = sampling_probabilities(&w, 10, false, 1.0).unwrap();
        for &v in &p.values {
            assert!((v - 2.0).abs() < 1e-12);
        }
        assert_eq!(p.kind, WeightKind::SamplingProb);
    }

    #[test]
    fn sampling_probabilities_mixture_floor() {
        let w = WeightVector {
            values: vec![0.0, 0.0, 1.0],
            kind: WeightKind::LewisWeights,
        };
        let p = sampling_probabilities(&w, 3, true, 1.0).unwrap();
        // base = (1/3, 1/3, 1), normalized to sum 3
        assert!((p.values[0] - 0.6).abs() < 1e-12);
        assert!((p.values[1] - 0.6).abs() < 1e-12);
        assert!((p.values[2] - 1.8).abs() < 1e-12);
    }

    #[test]
    fn sampling_probabilities_sum_and_ratios() {
        let x = random_matrix(100, 4, 7);
        let lewis = lewis_weights(&x, &LewisConfig::default()).unwrap().weights;
        let p = sampling_probabilities(&lewis, 50, false, 1.0).unwrap();
        let sum = p.sum();
        assert!((sum - 50.0).abs() <= 1e-9 * 50.0, "sum {sum}");
        // ratios match the base ratios
        for i in 0..99 {
            let expect = lewis.values[i] / lewis.values[i + 1];
            let got = p.values[i] / p.values[i + 1];
            assert!((expect - got).abs() <= 1e-9 * expect.abs().max(1.0));
        }
        // ordering preserved up to the residual adjustment
        let mut order: Vec<usize> = (0..100).collect();
        order.sort_by(|&a, &b| lewis.values[a].partial_cmp(&lewis.values[b]).unwrap());
        for w in order.windows(2) {
            assert!(p.values[w[0]] <= p.values[w[1]] + 1e-9 * 50.0);
        }
    }

    #[test]
    fn sampling_probabilities_zero_mass() {
        let w = WeightVector {
            values: vec![0.0, 0.0],
            kind: WeightKind::LewisWeights,
        };
        assert!(matches!(
            sampling_probabilities(&w, 5, false, 1.0),
            Err(Error::ZeroMass)
        ));
    }

    #[test]
    fn histogram_identical_distributions() {
        let p = uniform_distribution(10);
        let h = distribution_ratio_histogram(&p, &p, 8).unwrap();
        assert_eq!(h.counts[0], 10);
        assert_eq!(h.total(), 10);
    }

    #[test]
    fn histogram_hand_ratios() {
        // normalized p = (0.2, 0.8), q = (0.5, 0.5): ratios (2.5, 1.6)
        let p = WeightVector {
            values: vec![1.0, 4.0],
            kind: WeightKind::SamplingProb,
        };
        let q = WeightVector {
            values: vec![1.0, 1.0],
            kind: WeightKind::SamplingProb,
        };
        let h = distribution_ratio_histogram(&p, &q, 4).unwrap();
        assert_eq!(h.total(), 2);
        let max_edge = *h.edges.last().unwrap();
        assert!((max_edge - 2.5).abs() < 1e-12, "max edge {max_edge}");
        // 1.6 lands strictly inside, 2.5 in the last bin
        assert_eq!(*h.counts.last().unwrap(), 1);
    }

    #[test]
    fn histogram_length_mismatch() {
        let p = uniform_distribution(3);
        let q = uniform_distribution(4);
        assert!(matches!(
            distribution_ratio_histogram(&p, &q, 4),
            Err(Error::LengthMismatch(3, 4))
        ));
    }

    #[test]
    fn histogram_heavy_tail_has_large_ratio() {
        let z = crate::data::gen_synthetic(2000, 5, 3.0, 17);
        let lewis = lewis_weights(z.matrix(), &LewisConfig::default())
            .unwrap()
            .weights;
        let p = sampling_probabilities(&lewis, 100, false, 1.0).unwrap();
        let u = sampling_probabilities(&uniform_distribution(2000), 100, false, 1.0).unwrap();
        let h = distribution_ratio_histogram(&p, &u, 16).unwrap();
        assert!(*h.edges.last().unwrap() > 10.0);
        assert_eq!(h.total(), 2000);
    }
}
