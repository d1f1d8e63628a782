use clap::{Args, Parser};
use nuts_engine::diagnostics::ess_report;
use nuts_engine::model::build_target;
use nuts_engine::nuts::DEFAULT_MAX_DEPTH;
use nuts_engine::Error;
use nuts_engine_cli::config::{ExperimentConfig, SamplerKind};
use nuts_engine_cli::csvio::read_draws;
use nuts_engine_cli::modelspec::parse_model_spec;
use nuts_engine_cli::report::{compare_samplers, RunSummary};
use nuts_engine_cli::runner::{
    analytic_mvn_references, empirical_references, run_experiment, ReferencePairs,
};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "nuts-engine",
    about = "Gradient-based MCMC benchmark harness: HMC, NUTS, dual averaging, baselines, ESS"
)]
enum Cli {
    /// Run one sampler on one model and persist draws, statistics, and a
    /// summary.
    Sample(SampleArgs),
    /// Effective-sample-size report for a draws file.
    Ess(EssArgs),
    /// Run the sampler grid described by a config file.
    Benchmark(BenchmarkArgs),
    /// Aggregate run summaries into an ESS-per-gradient comparison.
    Compare(CompareArgs),
}

#[derive(Args)]
struct SampleArgs {
    /// Model spec, e.g. mvn:dim=10,seed=42 | logreg:n=200,k=8,seed=1 |
    /// logreg:file=PATH | hlr:... | sv:t=200,seed=2 | sv:file=PATH
    #[arg(long)]
    model: String,
    /// nuts | nuts-naive | hmc | hmc-fixed | rwm | gibbs
    #[arg(long)]
    sampler: String,
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    #[arg(long, default_value_t = 1000)]
    adapt: usize,
    /// Dual-averaging target acceptance statistic.
    #[arg(long, default_value_t = 0.6)]
    delta: f64,
    /// Simulation length for hmc (eps * L).
    #[arg(long)]
    lambda: Option<f64>,
    /// Fixed step size (hmc-fixed, or fixed-step nuts variants).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Leapfrog step count for hmc-fixed.
    #[arg(long)]
    steps: Option<u32>,
    /// Proposal scale for rwm (tuned to acceptance 0.234 when omitted).
    #[arg(long)]
    proposal_scale: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    max_depth: u32,
    /// Iterations to discard before analysis (defaults to --adapt).
    #[arg(long)]
    burn_in: Option<usize>,
    /// ESS reference: none | analytic | run:<kept>
    #[arg(long, default_value = "none")]
    reference: String,
    /// Use the full-size benchmark targets (slow: expect hours).
    #[arg(long, default_value_t = false)]
    paper_scale: bool,
}

#[derive(Args)]
struct EssArgs {
    /// Draws CSV produced by `sample` or `benchmark`.
    #[arg(long)]
    draws: PathBuf,
    /// Reference moments: a draws CSV from a separate long run, or
    /// `analytic:MODELSPEC` for targets with known moments (mvn only).
    #[arg(long)]
    r#ref: String,
    /// Gradient evaluations spent producing the draws, for the
    /// per-gradient rate.
    #[arg(long)]
    grads: Option<u64>,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// TOML config file; see the repository README for the keys.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Directory scanned recursively for summary.json files.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output directory for comparison.csv and comparison.json (defaults
    /// to the input directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli {
        Cli::Sample(args) => cmd_sample(args),
        Cli::Ess(args) => cmd_ess(args),
        Cli::Benchmark(args) => cmd_benchmark(args),
        Cli::Compare(args) => cmd_compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_sample(args: SampleArgs) -> Result<(), Error> {
    let sampler: SamplerKind = args.sampler.parse()?;
    if args.paper_scale {
        eprintln!(
            "warning: --paper-scale selects the full-size benchmark targets; \
             runs can take hours and substantial memory"
        );
    }
    let config = ExperimentConfig {
        model: args.model,
        paper_scale: args.paper_scale,
        sampler,
        iterations: args.iters,
        adapt: args.adapt,
        burn_in: args.burn_in,
        deltas: vec![args.delta],
        lambdas: if sampler.uses_lambda_grid() {
            Some(vec![args.lambda.ok_or_else(|| {
                Error::config("sampler hmc needs --lambda")
            })?])
        } else {
            None
        },
        replications: 1,
        seed: args.seed,
        out_dir: args.out,
        max_depth: args.max_depth,
        epsilon: args.epsilon,
        steps: args.steps,
        proposal_scale: args.proposal_scale,
        reference: args.reference.parse()?,
        workers: Some(1),
    };
    let summary = run_experiment(&config)?;
    println!(
        "wrote {} chain(s) under {} (model {}, dim {})",
        summary.chains.len(),
        config.out_dir.display(),
        summary.model.name,
        summary.model.dim
    );
    for c in &summary.chains {
        let h = c
            .h_discrepancy
            .map(|v| format!("{v:+.4}"))
            .unwrap_or_else(|| "n/a".into());
        println!(
            "  grid {} rep {}: grads={} h-discrepancy={} divergences={} draws={}",
            c.grid_index, c.replication, c.total_grad_evals, h, c.divergences, c.draws_file
        );
    }
    Ok(())
}

fn cmd_ess(args: EssArgs) -> Result<(), Error> {
    let draws = read_draws(&args.draws)?;
    let dim = draws[0].len();
    let refs: ReferencePairs = if let Some(spec_text) = args.r#ref.strip_prefix("analytic:") {
        let spec = parse_model_spec(spec_text, false)?;
        let model = build_target(&spec)?;
        let mvn = model
            .mvn_spec()
            .ok_or_else(|| Error::config("analytic references exist only for the mvn target"))?;
        if dim != mvn.dim() {
            return Err(Error::config(format!(
                "model has dimension {}, draws have {dim}",
                mvn.dim()
            )));
        }
        analytic_mvn_references(mvn)?
    } else {
        let ref_path = PathBuf::from(&args.r#ref);
        let ref_draws = read_draws(&ref_path)?;
        if ref_draws[0].len() != dim {
            return Err(Error::config(format!(
                "reference has {} coordinates, draws have {dim}",
                ref_draws[0].len()
            )));
        }
        empirical_references(&ref_draws, &format!("file:{}", ref_path.display()))?
    };

    let report = ess_report(&draws, &refs, args.grads)?;
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::config(format!("report serialization failed: {e}")))?;
    match args.out {
        Some(path) => fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<(), Error> {
    let text = fs::read_to_string(&args.config)?;
    let configs = nuts_engine_cli::config::parse_benchmark_config(&text)?;
    for config in &configs {
        if config.paper_scale {
            eprintln!(
                "warning: paper_scale=true selects the full-size benchmark targets; \
                 runs can take hours"
            );
        }
        let summary = run_experiment(config)?;
        println!(
            "{}: {} chains, {} total gradient evaluations, {} ms",
            config.sampler,
            summary.chains.len(),
            summary
                .chains
                .iter()
                .map(|c| c.total_grad_evals)
                .sum::<u64>(),
            summary.wall_ms
        );
    }
    Ok(())
}

fn collect_summaries(dir: &Path, found: &mut Vec<RunSummary>) -> Result<(), Error> {
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() {
            collect_summaries(&path, found)?;
        } else if path.file_name().is_some_and(|n| n == "summary.json") {
            found.push(RunSummary::read_json(&path)?);
        }
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<(), Error> {
    let mut summaries = Vec::new();
    collect_summaries(&args.input, &mut summaries)?;
    let comparison = compare_samplers(&summaries)?;
    let out_dir = args.out.unwrap_or_else(|| args.input.clone());
    fs::create_dir_all(&out_dir)?;
    fs::write(out_dir.join("comparison.csv"), comparison.to_csv())?;
    let json = serde_json::to_string_pretty(&comparison)
        .map_err(|e| Error::config(format!("comparison serialization failed: {e}")))?;
    fs::write(out_dir.join("comparison.json"), json)?;
    println!("{}", comparison.to_csv());
    if let Some(ratio) = comparison.nuts_to_best_hmc_ratio {
        println!("nuts / best-hmc min-ESS per gradient: {ratio:.3}");
    }
    Ok(())
}
