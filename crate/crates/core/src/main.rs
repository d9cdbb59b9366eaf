//! Benchmark CLI: compute sampling weights, draw coresets, estimate μ, run
//! the multi-trial experiment, and generate hard instances.
//!
//! Exit codes: 0 success, 1 validation error (flags/config), 2 runtime error.

use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};

use lewiscore::bench::{
    emit_report, parse_loss, parse_regularizer, run_experiment, DatasetSpec, ExperimentConfig,
    Method, ReportFormat,
};
use lewiscore::coreset::{draw_coreset, write_coreset};
use lewiscore::data::{gen_index_instance, parse_bits, write_libsvm};
use lewiscore::error::Error;
use lewiscore::losses::{estimate_mu, total_loss, NiceHinge, Regularizer};
use lewiscore::weights::{
    lewis_weights, sampling_probabilities, sqrt_leverage_distribution, uniform_distribution,
    LewisConfig, WeightVector,
};

#[derive(Parser)]
#[command(
    name = "lewiscore",
    version,
    about = "Coreset construction and benchmarking for linear classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a row-score vector (lewis, l2s, or uniform) for a dataset.
    Weights(WeightsArgs),
    /// Draw one coreset and serialize it as CSV with a JSON header.
    Coreset(CoresetArgs),
    /// Estimate the classification complexity ratio mu.
    Mu(MuArgs),
    /// Run the full seeded multi-trial benchmark.
    Bench(BenchArgs),
    /// Generate a hard instance and optionally verify its loss identity.
    Hardinstance(HardInstanceArgs),
}

#[derive(Args)]
struct WeightsArgs {
    /// synthetic:n=..,d=..,skew=..,seed=.. | libsvm:PATH | csv:PATH
    #[arg(long)]
    dataset: String,
    /// lewis | l2s | uniform
    #[arg(long, default_value = "lewis")]
    method: String,
    #[arg(long, default_value_t = 20)]
    lewis_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    lewis_tol: f64,
    /// Output JSON file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CoresetArgs {
    #[arg(long)]
    dataset: String,
    #[arg(long, default_value = "lewis")]
    method: String,
    /// Number of draws m.
    #[arg(long)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Floor sampling rates at the uniform rate 1/n.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    uniform_mix: bool,
    /// Collapse repeated draws of a row into one weighted entry.
    #[arg(long, default_value_t = false)]
    merge: bool,
    /// Output CSV file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MuArgs {
    #[arg(long)]
    dataset: String,
    /// Number of random unit directions.
    #[arg(long, default_value_t = 2000)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional JSON output file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Default)]
struct BenchArgs {
    /// JSON config file; explicit flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    /// logistic | hinge
    #[arg(long)]
    loss: Option<String>,
    /// none | l2sq:SCALE | l2:SCALE | l1:SCALE
    #[arg(long)]
    reg: Option<String>,
    /// Comma-separated subset of lewis,l2s,uniform.
    #[arg(long)]
    methods: Option<String>,
    /// Comma-separated strictly increasing coreset sizes.
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of csv,json,svg.
    #[arg(long)]
    format: Option<String>,
    #[arg(long, action = ArgAction::Set)]
    uniform_mix: Option<bool>,
    #[arg(long, action = ArgAction::Set)]
    parallel: Option<bool>,
    #[arg(long)]
    mu_budget: Option<usize>,
}

#[derive(Args)]
struct HardInstanceArgs {
    /// Bit-string length.
    #[arg(long)]
    n0: usize,
    #[arg(long)]
    kappa: f64,
    /// Bit string like 1011 (defaults to all ones).
    #[arg(long)]
    a: Option<String>,
    /// 1-based probe index.
    #[arg(long, default_value_t = 1)]
    b: usize,
    /// Write the stacked matrix as libsvm.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluate the regularized hinge objective at the probe and compare to
    /// the exact expected value.
    #[arg(long, default_value_t = false)]
    verify: bool,
}

/// Partial config accepted via `--config`; flags override.
#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    dataset: Option<String>,
    loss: Option<String>,
    reg: Option<String>,
    methods: Option<Vec<String>>,
    sizes: Option<Vec<usize>>,
    trials: Option<usize>,
    seed: Option<u64>,
    uniform_mix: Option<bool>,
    mu_oversample: Option<f64>,
    mu_budget: Option<usize>,
    lewis_max_iters: Option<usize>,
    lewis_tol: Option<f64>,
    solver_max_iters: Option<usize>,
    solver_grad_tol: Option<f64>,
    parallel: Option<bool>,
    histogram_bins: Option<usize>,
    out: Option<String>,
    format: Option<Vec<String>>,
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_) | Error::NotImplemented(_) | Error::InvalidShape(_) => 1,
        _ => 2,
    }
}

fn main() {
    // die quietly when stdout is a closed pipe (e.g. `lewiscore bench | head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Weights(args) => cmd_weights(args),
        Command::Coreset(args) => cmd_coreset(args),
        Command::Mu(args) => cmd_mu(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Hardinstance(args) => cmd_hardinstance(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

fn compute_scores(
    method: Method,
    z: &lewiscore::data::LabeledMatrix,
    lewis_cfg: &LewisConfig,
) -> Result<(WeightVector, Option<(usize, f64)>), Error> {
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

fn cmd_weights(args: WeightsArgs) -> Result<(), Error> {
    let spec: DatasetSpec = args.dataset.parse()?;
    let method: Method = args.method.parse()?;
    let z = spec.load()?;
    let lewis_cfg = LewisConfig {
        max_iters: args.lewis_iters,
        tol: args.lewis_tol,
    };
    let (w, stats) = compute_scores(method, &z, &lewis_cfg)?;

    #[derive(serde::Serialize)]
    struct Dump {
        dataset: String,
        method: String,
        n: usize,
        sum: f64,
        iterations: Option<usize>,
        residual: Option<f64>,
        values: Vec<f64>,
    }
    let dump = Dump {
        dataset: spec.to_string(),
        method: method.name().to_string(),
        n: w.len(),
        sum: w.sum(),
        iterations: stats.map(|s| s.0),
        residual: stats.map(|s| s.1),
        values: w.values,
    };
    let mut json = serde_json::to_string_pretty(&dump)?;
    json.push('\n');
    match args.out {
        Some(path) => std::fs::write(path, json)?,
        None => print!("{json}"),
    }
    Ok(())
}

fn cmd_coreset(args: CoresetArgs) -> Result<(), Error> {
    let spec: DatasetSpec = args.dataset.parse()?;
    let method: Method = args.method.parse()?;
    if args.size == 0 {
        return Err(Error::InvalidConfig("--size must be >= 1".into()));
    }
    let z = spec.load()?;
    let (w, _) = compute_scores(method, &z, &LewisConfig::default())?;
    let p = sampling_probabilities(&w, args.size, args.uniform_mix, 1.0)?;
    let mut coreset = draw_coreset(&p, args.size, args.seed)?;
    if args.merge {
        coreset = coreset.merged();
    }
    write_coreset(&coreset, z.n(), z.d(), &args.out)?;
    println!(
        "wrote coreset: m={} method={} seed={} -> {}",
        args.size,
        method,
        args.seed,
        args.out.display()
    );
    Ok(())
}

fn cmd_mu(args: MuArgs) -> Result<(), Error> {
    let spec: DatasetSpec = args.dataset.parse()?;
    if args.budget == 0 {
        return Err(Error::InvalidConfig("--budget must be >= 1".into()));
    }
    let z = spec.load()?;
    let (mu, witness) = estimate_mu(&z, args.budget, args.seed);

    #[derive(serde::Serialize)]
    struct Dump {
        dataset: String,
        budget: usize,
        seed: u64,
        infinite: bool,
        mu_lower_bound: Option<f64>,
        witness_beta: Vec<f64>,
    }
    let dump = Dump {
        dataset: spec.to_string(),
        budget: args.budget,
        seed: args.seed,
        infinite: mu.is_infinite(),
        mu_lower_bound: if mu.is_infinite() { None } else { Some(mu.value()) },
        witness_beta: witness,
    };
    println!("mu estimate: {mu} (lower bound, budget {})", args.budget);
    if let Some(path) = args.out {
        let mut json = serde_json::to_string_pretty(&dump)?;
        json.push('\n');
        std::fs::write(path, json)?;
    }
    Ok(())
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
        .collect()
}

fn cmd_bench(args: BenchArgs) -> Result<(), Error> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::InvalidConfig(format!("config file: {e}")))?
        }
        None => FileConfig::default(),
    };

    let dataset_str = args
        .dataset
        .or(file.dataset)
        .ok_or_else(|| Error::InvalidConfig("--dataset (or config dataset) is required".into()))?;
    let mut cfg = ExperimentConfig::new(dataset_str.parse()?);

    if let Some(s) = args.loss.or(file.loss) {
        cfg.loss = parse_loss(&s)?;
    }
    if let Some(s) = args.reg.or(file.reg) {
        cfg.reg = parse_regularizer(&s)?;
    }
    let method_names = args
        .methods
        .map(|s| split_list(&s))
        .or(file.methods);
    if let Some(names) = method_names {
        cfg.methods = names
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Method>, _>>()?;
    }
    let size_list = match args.sizes {
        Some(s) => Some(
            split_list(&s)
                .iter()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| Error::InvalidConfig(format!("bad size {t:?}")))
                })
                .collect::<Result<Vec<usize>, _>>()?,
        ),
        None => file.sizes,
    };
    if let Some(sizes) = size_list {
        cfg.sizes = sizes;
    }
    if let Some(t) = args.trials.or(file.trials) {
        cfg.trials = t;
    }
    if let Some(s) = args.seed.or(file.seed) {
        cfg.seed = s;
    }
    if let Some(u) = args.uniform_mix.or(file.uniform_mix) {
        cfg.uniform_mix = u;
    }
    if let Some(v) = file.mu_oversample {
        cfg.mu_oversample = v;
    }
    if let Some(v) = args.mu_budget.or(file.mu_budget) {
        cfg.mu_budget = v;
    }
    if let Some(v) = file.lewis_max_iters {
        cfg.lewis.max_iters = v;
    }
    if let Some(v) = file.lewis_tol {
        cfg.lewis.tol = v;
    }
    if let Some(v) = file.solver_max_iters {
        cfg.solver.max_iters = v;
    }
    if let Some(v) = file.solver_grad_tol {
        cfg.solver.grad_tol = v;
    }
    if let Some(v) = args.parallel.or(file.parallel) {
        cfg.parallel = v;
    }
    if let Some(v) = file.histogram_bins {
        cfg.histogram_bins = v;
    }

    let out_dir = args
        .out
        .or(file.out.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("bench_out"));
    let format_names = args
        .format
        .map(|s| split_list(&s))
        .or(file.format)
        .unwrap_or_else(|| vec!["csv".into(), "json".into(), "svg".into()]);
    let formats = format_names
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<ReportFormat>, _>>()?;

    cfg.validate()?;
    let (report, timing) = run_experiment(&cfg)?;
    let written = emit_report(&report, &timing, &formats, &out_dir)?;

    println!(
        "dataset {} (n={}, d={}), loss {}, reg {}, mu {}",
        report.dataset,
        report.n,
        report.d,
        report.loss,
        report.reg,
        match (report.mu.infinite, report.mu.value) {
            (true, _) => "inf".to_string(),
            (false, Some(v)) => format!("{v:.4}"),
            (false, None) => "?".to_string(),
        }
    );
    for cell in &report.cells {
        println!(
            "  {:>8} m={:<6} median={} (p25={}, p75={}){}",
            cell.method,
            cell.m,
            cell.p50.map_or("inf".into(), |v| format!("{v:.3e}")),
            cell.p25.map_or("inf".into(), |v| format!("{v:.3e}")),
            cell.p75.map_or("inf".into(), |v| format!("{v:.3e}")),
            if cell.failures > 0 {
                format!(" [{} failed]", cell.failures)
            } else {
                String::new()
            }
        );
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_hardinstance(args: HardInstanceArgs) -> Result<(), Error> {
    let bits = match args.a {
        Some(s) => parse_bits(&s)?,
        None => vec![true; args.n0],
    };
    let inst = gen_index_instance(args.n0, args.kappa, &bits, args.b)?;
    println!(
        "instance: n0={} kappa={} d={} nominal n={} copies={} rows={} cols={}",
        args.n0,
        args.kappa,
        inst.d,
        inst.n,
        inst.copies,
        inst.z.n(),
        inst.z.d()
    );
    if let Some(path) = &args.out {
        write_libsvm(&inst.z, path)?;
        println!("wrote {}", path.display());
    }
    if args.verify {
        let reg = Regularizer::l2_squared(inst.reg_scale());
        let loss = total_loss(&inst.z, &inst.beta_probe, &NiceHinge::hinge(), &reg)?;
        let want = inst.expected_objective();
        let rel = (loss - want).abs() / want;
        println!(
            "objective at probe: {loss} (expected {want}, bit a({})={}, relative error {rel:.3e})",
            args.b,
            if inst.a[args.b - 1] { 1 } else { 0 }
        );
        if rel > 1e-9 {
            return Err(Error::InvalidShape(format!(
                "loss identity violated: relative error {rel}"
            )));
        }
        println!("loss identity verified to 1e-9 relative");
    }
    Ok(())
}
