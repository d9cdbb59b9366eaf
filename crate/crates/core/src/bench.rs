//! Seeded multi-trial benchmark harness.
//!
//! The protocol: solve the full-data problem once for `β*`, compute each
//! method's row scores once, then for every (method, coreset size, trial)
//! draw a coreset with a seed derived from `(base seed, method, m, trial)`,
//! train on it, and record the relative loss against `β*`. Trials are
//! independent and run in parallel; reports are assembled in a fixed order
//! so the emitted CSV/JSON bytes depend only on the configuration.
//!
//! Wall-clock timings are collected separately ([`TimingReport`]) and
//! emitted to their own file so the deterministic outputs stay deterministic.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coreset::draw_coreset;
use crate::data::{gen_synthetic, load_csv, load_libsvm, LabeledMatrix};
use crate::error::{Error, Result};
use crate::losses::{estimate_mu, LossKind, MuEstimate, NiceHinge, RegKind, Regularizer};
use crate::plot::{histogram_plot, relative_loss_plot, PercentileSeries};
use crate::rng::{derive_seed, label_tag, ALGORITHM};
use crate::solve::{minimize, relative_loss, SolveConfig, SolveResult};
use crate::weights::{
    distribution_ratio_histogram, lewis_weights, sampling_probabilities,
    sqrt_leverage_distribution, uniform_distribution, Histogram, LewisConfig, WeightVector,
};

/// Where the data comes from. The string grammar (used by the CLI and config
/// files) is `synthetic:n=..,d=..,skew=..,seed=..`, `libsvm:PATH`, or
/// `csv:PATH`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DatasetSpec {
    Synthetic { n: usize, d: usize, skew: f64, seed: u64 },
    Libsvm(PathBuf),
    Csv(PathBuf),
}

impl DatasetSpec {
    pub fn load(&self) -> Result<LabeledMatrix> {
        match self {
            DatasetSpec::Synthetic { n, d, skew, seed } => {
                if n < d || *d == 0 {
                    return Err(Error::InvalidConfig(format!(
                        "synthetic dataset needs n >= d >= 1, got n={n}, d={d}"
                    )));
                }
                Ok(gen_synthetic(*n, *d, *skew, *seed))
            }
            DatasetSpec::Libsvm(p) => load_libsvm(p),
            DatasetSpec::Csv(p) => load_csv(p),
        }
    }
}

impl std::fmt::Display for DatasetSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DatasetSpec::Synthetic { n, d, skew, seed } => {
                write!(f, "synthetic:n={n},d={d},skew={skew},seed={seed}")
            }
            DatasetSpec::Libsvm(p) => write!(f, "libsvm:{}", p.display()),
            DatasetSpec::Csv(p) => write!(f, "csv:{}", p.display()),
        }
    }
}

impl FromStr for DatasetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').ok_or_else(|| {
            Error::InvalidConfig(format!(
                "dataset spec {s:?} must look like synthetic:..., libsvm:PATH or csv:PATH"
            ))
        })?;
        match kind {
            "libsvm" => Ok(DatasetSpec::Libsvm(PathBuf::from(rest))),
            "csv" => Ok(DatasetSpec::Csv(PathBuf::from(rest))),
            "synthetic" => {
                let (mut n, mut d, mut skew, mut seed) = (None, None, 0.0_f64, 0u64);
                for part in rest.split(',') {
                    let (key, val) = part.split_once('=').ok_or_else(|| {
                        Error::InvalidConfig(format!("bad synthetic parameter {part:?}"))
                    })?;
                    let parse_err =
                        |k: &str, v: &str| Error::InvalidConfig(format!("bad value for {k}: {v:?}"));
                    match key {
                        "n" => n = Some(val.parse().map_err(|_| parse_err(key, val))?),
                        "d" => d = Some(val.parse().map_err(|_| parse_err(key, val))?),
                        "skew" => skew = val.parse().map_err(|_| parse_err(key, val))?,
                        "seed" => seed = val.parse().map_err(|_| parse_err(key, val))?,
                        other => {
                            return Err(Error::InvalidConfig(format!(
                                "unknown synthetic parameter {other:?}"
                            )))
                        }
                    }
                }
                let n = n.ok_or_else(|| Error::InvalidConfig("synthetic needs n=".into()))?;
                let d = d.ok_or_else(|| Error::InvalidConfig("synthetic needs d=".into()))?;
                Ok(DatasetSpec::Synthetic { n, d, skew, seed })
            }
            other => Err(Error::InvalidConfig(format!("unknown dataset kind {other:?}"))),
        }
    }
}

/// Sampling method under comparison. `Sketch` is reserved for an external
/// oblivious sketching baseline and rejected at validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Lewis,
    L2s,
    Uniform,
    Sketch,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Lewis => "lewis",
            Method::L2s => "l2s",
            Method::Uniform => "uniform",
            Method::Sketch => "sketch",
        }
    }

    /// Stable tag for seed derivation; never renumber.
    pub fn stable_tag(&self) -> u64 {
        label_tag(self.name())
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lewis" => Ok(Method::Lewis),
            "l2s" => Ok(Method::L2s),
            "uniform" => Ok(Method::Uniform),
            "sketch" => Ok(Method::Sketch),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

/// Parses a regularizer spec: `none`, `l2sq:SCALE`, `l2:SCALE`, `l1:SCALE`.
pub fn parse_regularizer(s: &str) -> Result<Regularizer> {
    if s == "none" {
        return Ok(Regularizer::none());
    }
    let (kind, scale) = s.split_once(':').ok_or_else(|| {
        Error::InvalidConfig(format!("regularizer {s:?} must be none or kind:scale"))
    })?;
    let scale: f64 = scale
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad regularizer scale {scale:?}")))?;
    if scale < 0.0 || scale.is_nan() {
        return Err(Error::InvalidConfig("regularizer scale must be >= 0".into()));
    }
    match kind {
        "l2sq" => Ok(Regularizer::l2_squared(scale)),
        "l2" => Ok(Regularizer::l2(scale)),
        "l1" => Ok(Regularizer::l1(scale)),
        other => Err(Error::InvalidConfig(format!("unknown regularizer {other:?}"))),
    }
}

pub fn format_regularizer(reg: &Regularizer) -> String {
    match reg.kind {
        RegKind::None => "none".into(),
        RegKind::L2Squared => format!("l2sq:{}", reg.scale),
        RegKind::L2 => format!("l2:{}", reg.scale),
        RegKind::L1 => format!("l1:{}", reg.scale),
    }
}

pub fn parse_loss(s: &str) -> Result<LossKind> {
    match s {
        "logistic" => Ok(LossKind::Logistic),
        "hinge" => Ok(LossKind::Hinge),
        other => Err(Error::InvalidConfig(format!(
            "unknown loss {other:?} (expected logistic or hinge)"
        ))),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub loss: LossKind,
    pub reg: Regularizer,
    pub methods: Vec<Method>,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Floor every sampling rate at the uniform rate 1/n.
    pub uniform_mix: bool,
    /// Annotates the recommended oversampling factor; does not change the
    /// distribution at fixed m.
    pub mu_oversample: f64,
    /// Random directions spent estimating μ.
    pub mu_budget: usize,
    pub lewis: LewisConfig,
    pub solver: SolveConfig,
    pub parallel: bool,
    pub histogram_bins: usize,
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSpec) -> Self {
        Self {
            dataset,
            loss: LossKind::Logistic,
            reg: Regularizer::none(),
            methods: vec![Method::Lewis, Method::L2s, Method::Uniform],
            sizes: vec![500, 1000, 2000, 4000, 8000],
            trials: 100,
            seed: 0,
            uniform_mix: true,
            mu_oversample: 1.0,
            mu_budget: 2000,
            lewis: LewisConfig::default(),
            solver: SolveConfig::default(),
            parallel: true,
            histogram_bins: 40,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("methods list is empty".into()));
        }
        if self.methods.contains(&Method::Sketch) {
            return Err(Error::NotImplemented(
                "the sketch baseline is an external system; the name is reserved",
            ));
        }
        if self.sizes.is_empty() {
            return Err(Error::InvalidConfig("sizes list is empty".into()));
        }
        if !self.sizes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig(
                "sizes must be strictly increasing".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if matches!(self.loss, LossKind::ReLU) {
            return Err(Error::InvalidConfig(
                "benchmark losses are logistic or hinge".into(),
            ));
        }
        if self.mu_oversample < 1.0 || self.mu_oversample.is_nan() {
            return Err(Error::InvalidConfig("mu_oversample must be >= 1".into()));
        }
        if self.histogram_bins == 0 {
            return Err(Error::InvalidConfig("histogram_bins must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    /// None when the trial failed; the failure is in `failure`.
    pub relative_loss: Option<f64>,
    pub solver_iterations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub method: String,
    pub m: usize,
    /// Nearest-rank percentiles of relative loss across trials; a failed
    /// trial counts as +infinity, and a percentile landing on one is None.
    pub p25: Option<f64>,
    pub p50: Option<f64>,
    pub p75: Option<f64>,
    pub failures: usize,
    pub trials: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuReport {
    pub infinite: bool,
    pub value: Option<f64>,
}

impl From<MuEstimate> for MuReport {
    fn from(m: MuEstimate) -> Self {
        match m {
            MuEstimate::Finite(v) => MuReport {
                infinite: false,
                value: Some(v),
            },
            MuEstimate::Infinite => MuReport {
                infinite: true,
                value: None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioHistogramReport {
    /// Method whose distribution is compared against the baseline.
    pub method: String,
    /// Baseline distribution (the Lewis weights).
    pub baseline: String,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rng_algorithm: String,
    pub dataset: String,
    pub n: usize,
    pub d: usize,
    pub loss: LossKind,
    pub reg: String,
    pub methods: Vec<String>,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub uniform_mix: bool,
    pub mu_oversample: f64,
    pub mu: MuReport,
    pub beta_star_objective: f64,
    pub beta_star_iterations: usize,
    pub beta_star_converged: bool,
    pub lewis_iterations: Option<usize>,
    pub lewis_residual: Option<f64>,
    pub cells: Vec<CellReport>,
    pub ratio_histograms: Vec<RatioHistogramReport>,
}

/// Wall-clock measurements, kept out of the deterministic report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingReport {
    pub weight_seconds: Vec<(String, f64)>,
    pub solve_full_seconds: f64,
    pub total_seconds: f64,
}

/// Nearest-rank percentile of an ascending-sorted slice: the value at rank
/// `ceil(p/100 * len)` (1-based). `p25` of 100 sorted values is the 25th.
pub fn nearest_rank_percentile(sorted: &[f64], pct: f64) -> f64 {
    assert!(!sorted.is_empty());
    assert!(pct > 0.0 && pct <= 100.0);
    let rank = (pct / 100.0 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn percentile_or_none(sorted: &[f64], pct: f64) -> Option<f64> {
    let v = nearest_rank_percentile(sorted, pct);
    v.is_finite().then_some(v)
}

fn compute_method_scores(
    method: Method,
    z: &LabeledMatrix,
    lewis_cfg: &LewisConfig,
) -> Result<(WeightVector, Option<(usize, f64)>)> {
    match method {
        Method::Lewis => {
            let res = lewis_weights(z.matrix(), lewis_cfg)?;
            Ok((res.weights, Some((res.iterations, res.residual))))
        }
        Method::L2s => Ok((sqrt_leverage_distribution(z.matrix())?, None)),
        Method::Uniform => Ok((uniform_distribution(z.n()), None)),
        Method::Sketch => Err(Error::NotImplemented(
            "the sketch baseline is an external system; the name is reserved",
        )),
    }
}

/// Runs the full experiment described by `cfg`. Deterministic end-to-end
/// (the [`TimingReport`] is the only run-dependent output).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(ExperimentReport, TimingReport)> {
    cfg.validate()?;
    let t_start = std::time::Instant::now();

    let z = cfg.dataset.load()?;
    let f = NiceHinge::from_kind(cfg.loss);

    let t_solve = std::time::Instant::now();
    let star: SolveResult = minimize(&z, &f, &cfg.reg, None, &cfg.solver, None)?;
    let solve_full_seconds = t_solve.elapsed().as_secs_f64();
    if star.objective <= 0.0 {
        return Err(Error::DivisionByZero(
            "full-data optimum is zero; instance is degenerate for the relative-loss metric",
        ));
    }

    let mu_seed = derive_seed(cfg.seed, &[label_tag("mu")]);
    let (mu, _witness) = estimate_mu(&z, cfg.mu_budget, mu_seed);

    // per-method row scores, computed once and timed
    let mut weight_seconds = Vec::new();
    let mut scores: Vec<(Method, WeightVector)> = Vec::new();
    let mut lewis_stats: Option<(usize, f64)> = None;
    for &method in &cfg.methods {
        let t = std::time::Instant::now();
        let (w, stats) = compute_method_scores(method, &z, &cfg.lewis)?;
        weight_seconds.push((method.name().to_string(), t.elapsed().as_secs_f64()));
        if method == Method::Lewis {
            lewis_stats = stats;
        }
        scores.push((method, w));
    }

    let n = z.n();
    let run_trial = |method: Method, p: &WeightVector, m: usize, trial: usize| -> TrialRecord {
        let seed = derive_seed(cfg.seed, &[method.stable_tag(), m as u64, trial as u64]);
        let outcome = draw_coreset(p, m, seed).and_then(|coreset| {
            let tilde = minimize(&z, &f, &cfg.reg, Some(&coreset), &cfg.solver, None)?;
            let rl = relative_loss(star.objective, &tilde.beta, &z, &f, &cfg.reg)?;
            Ok((rl, tilde.iterations, tilde.converged))
        });
        match outcome {
            Ok((rl, iters, conv)) => TrialRecord {
                trial,
                seed,
                relative_loss: Some(rl),
                solver_iterations: iters,
                converged: conv,
                failure: None,
            },
            Err(e) => TrialRecord {
                trial,
                seed,
                relative_loss: None,
                solver_iterations: 0,
                converged: false,
                failure: Some(e.to_string()),
            },
        }
    };

    let mut cells = Vec::new();
    for (method, w) in &scores {
        for &m in &cfg.sizes {
            let p = sampling_probabilities(w, m, cfg.uniform_mix, cfg.mu_oversample)?;
            let trials: Vec<TrialRecord> = if cfg.parallel {
                (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| run_trial(*method, &p, m, t))
                    .collect()
            } else {
                (0..cfg.trials).map(|t| run_trial(*method, &p, m, t)).collect()
            };
            let failures = trials.iter().filter(|t| t.failure.is_some()).count();
            // failed trials enter the percentile computation as +infinity so
            // they can never flatter the summary
            let mut values: Vec<f64> = trials
                .iter()
                .map(|t| t.relative_loss.unwrap_or(f64::INFINITY))
                .collect();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            cells.push(CellReport {
                method: method.name().to_string(),
                m,
                p25: percentile_or_none(&values, 25.0),
                p50: percentile_or_none(&values, 50.0),
                p75: percentile_or_none(&values, 75.0),
                failures,
                trials,
            });
        }
    }

    // sampling-distribution divergence histograms against the Lewis baseline
    let mut ratio_histograms = Vec::new();
    if let Some((_, lewis_scores)) = scores.iter().find(|(m, _)| *m == Method::Lewis) {
        let effective = |w: &WeightVector| -> WeightVector {
            if cfg.uniform_mix {
                let floor = 1.0 / n as f64;
                WeightVector {
                    values: w.values.iter().map(|&v| v.max(floor)).collect(),
                    kind: w.kind,
                }
            } else {
                w.clone()
            }
        };
        let q = effective(lewis_scores);
        for (method, w) in &scores {
            if *method == Method::Lewis {
                continue;
            }
            let p = effective(w);
            let histogram = distribution_ratio_histogram(&p, &q, cfg.histogram_bins)?;
            ratio_histograms.push(RatioHistogramReport {
                method: method.name().to_string(),
                baseline: Method::Lewis.name().to_string(),
                histogram,
            });
        }
    }

    let report = ExperimentReport {
        rng_algorithm: ALGORITHM.to_string(),
        dataset: cfg.dataset.to_string(),
        n,
        d: z.d(),
        loss: cfg.loss,
        reg: format_regularizer(&cfg.reg),
        methods: cfg.methods.iter().map(|m| m.name().to_string()).collect(),
        sizes: cfg.sizes.clone(),
        trials: cfg.trials,
        seed: cfg.seed,
        uniform_mix: cfg.uniform_mix,
        mu_oversample: cfg.mu_oversample,
        mu: mu.into(),
        beta_star_objective: star.objective,
        beta_star_iterations: star.iterations,
        beta_star_converged: star.converged,
        lewis_iterations: lewis_stats.map(|(i, _)| i),
        lewis_residual: lewis_stats.map(|(_, r)| r),
        cells,
        ratio_histograms,
    };
    let timing = TimingReport {
        weight_seconds,
        solve_full_seconds,
        total_seconds: t_start.elapsed().as_secs_f64(),
    };
    Ok((report, timing))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "svg" | "svg-plot" => Ok(ReportFormat::Svg),
            other => Err(Error::InvalidConfig(format!("unknown format {other:?}"))),
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v}"),
        None => "inf".to_string(),
    }
}

/// Percentile summary as CSV: one row per (method, m, percentile).
pub fn report_to_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("method,m,percentile,relative_loss\n");
    for cell in &report.cells {
        for (pct, v) in [(25, cell.p25), (50, cell.p50), (75, cell.p75)] {
            out.push_str(&format!("{},{},{},{}\n", cell.method, cell.m, pct, fmt_opt(v)));
        }
    }
    out
}

fn plot_title(report: &ExperimentReport) -> String {
    format!(
        "{} | {} | reg {}",
        report.dataset, report.loss, report.reg
    )
}

fn series_for_plot(report: &ExperimentReport) -> Vec<PercentileSeries> {
    report
        .methods
        .iter()
        .map(|name| {
            let cells: Vec<&CellReport> = report
                .cells
                .iter()
                .filter(|c| &c.method == name)
                .collect();
            PercentileSeries {
                method: name.clone(),
                sizes: cells.iter().map(|c| c.m).collect(),
                p25: cells.iter().map(|c| c.p25).collect(),
                p50: cells.iter().map(|c| c.p50).collect(),
                p75: cells.iter().map(|c| c.p75).collect(),
            }
        })
        .collect()
}

/// Writes the requested formats into `out_dir` and returns the paths
/// written. `report.csv`, `report.json`, `plot.svg` and the histogram SVGs
/// are byte-deterministic; `timings.json` is informational.
pub fn emit_report(
    report: &ExperimentReport,
    timing: &TimingReport,
    formats: &[ReportFormat],
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    for fmt in formats {
        match fmt {
            ReportFormat::Csv => {
                let path = out_dir.join("report.csv");
                std::fs::write(&path, report_to_csv(report))?;
                written.push(path);
            }
            ReportFormat::Json => {
                let path = out_dir.join("report.json");
                let mut json = serde_json::to_string_pretty(report)?;
                json.push('\n');
                std::fs::write(&path, json)?;
                written.push(path);
            }
            ReportFormat::Svg => {
                let path = out_dir.join("plot.svg");
                std::fs::write(&path, relative_loss_plot(&plot_title(report), &series_for_plot(report)))?;
                written.push(path);
                for rh in &report.ratio_histograms {
                    let path = out_dir.join(format!("hist_{}_vs_{}.svg", rh.method, rh.baseline));
                    let title = format!("{} vs {} sampling ratio", rh.method, rh.baseline);
                    std::fs::write(&path, histogram_plot(&title, &rh.histogram))?;
                    written.push(path);
                }
            }
        }
    }

    let timing_path = out_dir.join("timings.json");
    let mut json = serde_json::to_string_pretty(timing)?;
    json.push('\n');
    std::fs::write(&timing_path, json)?;
    written.push(timing_path);
    Ok(written)
}
