//! Experiment execution: builds the model once, fans grid points and
//! replications out over a worker pool, persists per-chain artifacts, and
//! assembles the run summary.

use crate::config::{ExperimentConfig, GridPoint, ReferenceSpec, SamplerKind};
use crate::csvio::{write_draws, write_stats};
use crate::report::{has_accept_statistic, summary_skeleton, ChainSummary, ModelInfo, RunSummary};
use nuts_engine::baselines::{gibbs_mvn_run, rwm_run, rwm_tune_scale, RwmConfig};
use nuts_engine::chain::ChainOutput;
use nuts_engine::diagnostics::{ess_report, h_discrepancy, trajectory_histogram, MomentReference};
use nuts_engine::hmc::{hmc_run, HmcConfig};
use nuts_engine::model::{build_target, BuiltinModel, MvnSpec, TargetModel};
use nuts_engine::nuts::{naive_nuts_run, nuts_run, NaiveNutsConfig, NutsConfig};
use nuts_engine::rng::{derive_chain_seed, derive_seed, RngStream};
use nuts_engine::Error;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

/// Name of the marker file that exists while a run directory is being
/// written; a leftover marker means the run crashed partway.
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

/// Optimal acceptance rate for random-walk Metropolis proposals, the
/// default tuning target when no proposal scale is given.
pub const RWM_TARGET_RATE: f64 = 0.234;

const REFERENCE_STREAM: u64 = 0x7265_6673; // "refs"

/// Per-dimension reference moments: for the coordinate and for its squared
/// deviation from the reference mean.
pub type ReferencePairs = Vec<(MomentReference, MomentReference)>;

/// Analytic references for the multivariate normal: mean zero, variance
/// from the covariance diagonal; the squared functional of a Gaussian has
/// mean `var` and variance `2 var^2`.
pub fn analytic_mvn_references(spec: &MvnSpec) -> Result<ReferencePairs, Error> {
    let cov = spec.covariance();
    let dim = spec.dim();
    let mut refs = Vec::with_capacity(dim);
    for d in 0..dim {
        let var = cov[d * dim + d];
        refs.push((
            MomentReference::new(0.0, var, "analytic")?,
            MomentReference::new(var, 2.0 * var * var, "analytic")?,
        ));
    }
    Ok(refs)
}

/// Empirical references from a matrix of reference draws.
pub fn empirical_references(
    draws: &[Vec<f64>],
    provenance: &str,
) -> Result<ReferencePairs, Error> {
    if draws.len() < 10 {
        return Err(Error::config(
            "reference run must have at least 10 draws".to_string(),
        ));
    }
    let dim = draws[0].len();
    let mut refs = Vec::with_capacity(dim);
    for d in 0..dim {
        let series: Vec<f64> = draws.iter().map(|r| r[d]).collect();
        let mean_ref = MomentReference::from_series(&series, provenance)?;
        let sq: Vec<f64> = series.iter().map(|x| (x - mean_ref.mean).powi(2)).collect();
        let sq_ref = MomentReference::from_series(&sq, provenance)?;
        refs.push((mean_ref, sq_ref));
    }
    Ok(refs)
}

/// Runs the long reference chain (efficient NUTS at target 0.5) and
/// extracts moments from it.
pub fn run_reference_chain(
    model: &BuiltinModel,
    kept: usize,
    root_seed: u64,
    max_depth: u32,
) -> Result<ReferencePairs, Error> {
    let adapt = (kept / 10).clamp(100, 1000);
    let config = NutsConfig::adaptive(0.5, adapt + kept, adapt).with_max_depth(max_depth);
    let mut rng = RngStream::seed_from(derive_seed(root_seed, REFERENCE_STREAM));
    let out = nuts_run(model, &vec![0.0; model.dim()], &config, &mut rng)?;
    let provenance = format!(
        "nuts reference run: delta=0.5, kept={kept}, adapt={adapt}, model={}",
        model.name()
    );
    empirical_references(out.kept_draws(adapt), &provenance)
}

/// Resolves the configured reference into per-dimension moment pairs.
pub fn resolve_references(
    config: &ExperimentConfig,
    model: &BuiltinModel,
) -> Result<Option<ReferencePairs>, Error> {
    match &config.reference {
        ReferenceSpec::None => Ok(None),
        ReferenceSpec::Analytic => {
            let spec = model.mvn_spec().ok_or_else(|| {
                Error::config("analytic references exist only for the mvn target")
            })?;
            Ok(Some(analytic_mvn_references(spec)?))
        }
        ReferenceSpec::Run { kept } => Ok(Some(run_reference_chain(
            model,
            *kept,
            config.seed,
            config.max_depth,
        )?)),
    }
}

fn worker_count(config: &ExperimentConfig, jobs: usize) -> usize {
    let hw = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let mut n = config.workers.unwrap_or(hw);
    if let Ok(env_cap) = std::env::var("NUTS_ENGINE_WORKERS") {
        if let Ok(cap) = env_cap.parse::<usize>() {
            n = n.min(cap.max(1));
        }
    }
    n.clamp(1, jobs.max(1))
}

struct Job {
    grid_index: usize,
    replication: usize,
    point: GridPoint,
}

/// Runs one chain for a grid point. Public so tests can drive individual
/// configurations without the experiment wrapper.
pub fn run_single_chain(
    config: &ExperimentConfig,
    model: &BuiltinModel,
    point: GridPoint,
    seed: u64,
    rwm_scale: Option<f64>,
) -> Result<ChainOutput, Error> {
    let theta0 = vec![0.0; model.dim()];
    let mut rng = RngStream::seed_from(seed);
    match config.sampler {
        SamplerKind::Nuts => {
            let nuts_config = match config.epsilon {
                Some(eps) => NutsConfig::fixed(eps, config.iterations),
                None => {
                    let delta = point.delta.ok_or_else(|| {
                        Error::config("nuts grid point lacks a delta target".to_string())
                    })?;
                    NutsConfig::adaptive(delta, config.iterations, config.adapt)
                }
            }
            .with_max_depth(config.max_depth);
            nuts_run(model, &theta0, &nuts_config, &mut rng)
        }
        SamplerKind::NutsNaive => {
            let naive = NaiveNutsConfig {
                epsilon: config.epsilon,
                iterations: config.iterations,
                max_depth: config.max_depth,
                delta_max: nuts_engine::nuts::DEFAULT_DELTA_MAX,
            };
            naive_nuts_run(model, &theta0, &naive, &mut rng)
        }
        SamplerKind::Hmc => {
            let delta = point
                .delta
                .ok_or_else(|| Error::config("hmc grid point lacks a delta target".to_string()))?;
            let lambda = point
                .lambda
                .ok_or_else(|| Error::config("hmc grid point lacks a lambda".to_string()))?;
            let hmc_config = HmcConfig::adaptive(delta, lambda, config.iterations, config.adapt);
            hmc_run(model, &theta0, &hmc_config, &mut rng)
        }
        SamplerKind::HmcFixed => {
            let eps = config
                .epsilon
                .ok_or_else(|| Error::config("hmc-fixed needs --epsilon".to_string()))?;
            let steps = config
                .steps
                .ok_or_else(|| Error::config("hmc-fixed needs --steps".to_string()))?;
            let hmc_config = HmcConfig::fixed(eps, steps, config.iterations);
            hmc_run(model, &theta0, &hmc_config, &mut rng)
        }
        SamplerKind::Rwm => {
            let scale = rwm_scale.expect("rwm scale resolved before jobs start");
            rwm_run(
                model,
                &theta0,
                &RwmConfig::new(scale, config.iterations),
                &mut rng,
            )
        }
        SamplerKind::Gibbs => {
            let spec = model
                .mvn_spec()
                .ok_or_else(|| Error::config("gibbs runs only on the mvn target"))?;
            gibbs_mvn_run(spec, &theta0, config.iterations, &mut rng)
        }
    }
}

fn coefficient_of_variation(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return None;
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some(var.sqrt() / mean.abs())
}

#[allow(clippy::too_many_arguments)]
fn summarize_chain(
    config: &ExperimentConfig,
    job: &Job,
    seed: u64,
    out: &ChainOutput,
    refs: Option<&ReferencePairs>,
    draws_file: String,
    stats_file: String,
    wall_ms: u128,
) -> Result<ChainSummary, Error> {
    let burn_in = config.burn_in();
    let kept_stats = out.kept_stats(burn_in);

    let accept_stats: Vec<f64> = kept_stats.iter().map(|s| s.accept_stat).collect();
    let (mean_accept, h_disc) = if has_accept_statistic(config.sampler) {
        let mean = out.mean_accept_stat(burn_in);
        let disc = job.point.delta.map(|d| h_discrepancy(&accept_stats, d));
        (Some(mean), disc)
    } else {
        (None, None)
    };

    let poft = match config.sampler {
        SamplerKind::Nuts | SamplerKind::NutsNaive => {
            let pairs: Vec<(u32, u64)> = kept_stats.iter().map(|s| (s.depth, s.states)).collect();
            Some(trajectory_histogram(&pairs).power_of_two_fraction)
        }
        _ => None,
    };

    let eps_bar_cv = if config.adapt >= 200 && config.sampler.uses_delta_grid() {
        let window: Vec<f64> = out.stats[config.adapt - 200..config.adapt]
            .iter()
            .map(|s| s.eps_bar)
            .collect();
        coefficient_of_variation(&window)
    } else {
        None
    };

    let ess = match refs {
        Some(refs) => Some(ess_report(
            out.kept_draws(burn_in),
            refs,
            Some(out.total_grad_evals()),
        )?),
        None => None,
    };

    Ok(ChainSummary {
        sampler: out.sampler.clone(),
        grid_index: job.grid_index,
        replication: job.replication,
        delta: job.point.delta,
        lambda: job.point.lambda,
        seed,
        iterations: out.iterations(),
        kept: out.kept_draws(burn_in).len(),
        iteration_grad_evals: out.iteration_grad_evals(),
        setup_grad_evals: out.setup_grad_evals,
        total_grad_evals: out.total_grad_evals(),
        mean_accept_stat: mean_accept,
        h_discrepancy: h_disc,
        acceptance_rate: out.acceptance_rate(burn_in),
        divergences: out.divergences(),
        max_depth_hits: out.max_depth_hits(),
        final_epsilon: out.stats.last().map(|s| s.eps),
        eps_bar_cv_last_200: eps_bar_cv,
        power_of_two_fraction: poft,
        ess,
        warnings: out.warnings.clone(),
        draws_file,
        stats_file,
        wall_ms,
    })
}

/// Executes the full experiment: grid x replications, each chain with a
/// seed derived from (root, grid index, replication). Writes draw and
/// stats CSVs plus `summary.json` under the output directory and returns
/// the summary.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary, Error> {
    let started = Instant::now();
    config.validate()?;

    let spec = crate::modelspec::parse_model_spec(&config.model, config.paper_scale)?;
    let model = build_target(&spec)?;

    // Incompatibilities surface before any chain runs.
    if config.sampler == SamplerKind::Gibbs && model.mvn_spec().is_none() {
        return Err(Error::config(format!(
            "gibbs runs only on the mvn target, got `{}`",
            model.name()
        )));
    }
    if config.reference == ReferenceSpec::Analytic && model.mvn_spec().is_none() {
        return Err(Error::config(
            "analytic references exist only for the mvn target".to_string(),
        ));
    }

    fs::create_dir_all(&config.out_dir)?;
    let chains_dir = config.out_dir.join("chains");
    fs::create_dir_all(&chains_dir)?;
    let marker = config.out_dir.join(INCOMPLETE_MARKER);
    fs::write(&marker, "run in progress\n")?;

    // Proposal scale for rwm: explicit, or tuned once per experiment on a
    // dedicated stream.
    let rwm_scale = if config.sampler == SamplerKind::Rwm {
        match config.proposal_scale {
            Some(s) => Some(s),
            None => {
                let mut rng = RngStream::seed_from(derive_seed(config.seed, 0x7475_6e65)); // "tune"
                Some(rwm_tune_scale(
                    &model,
                    &vec![0.0; model.dim()],
                    RWM_TARGET_RATE,
                    &mut rng,
                )?)
            }
        }
    } else {
        None
    };

    let refs = resolve_references(config, &model)?;

    let grid = config.grid();
    let mut jobs = Vec::new();
    for (grid_index, point) in grid.iter().enumerate() {
        for replication in 0..config.replications {
            jobs.push(Job {
                grid_index,
                replication,
                point: *point,
            });
        }
    }

    let workers = worker_count(config, jobs.len());
    let next_job = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<ChainSummary, Error>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next_job.fetch_add(1, Ordering::Relaxed);
                if idx >= jobs.len() {
                    break;
                }
                let job = &jobs[idx];
                let result = run_job(config, &model, job, refs.as_ref(), rwm_scale, &chains_dir);
                let mut guard = results.lock().expect("results mutex");
                guard[idx] = Some(result);
            });
        }
    });

    let mut summary = summary_skeleton(
        config,
        ModelInfo {
            name: model.name().to_string(),
            dim: model.dim(),
        },
    );
    let collected = results.into_inner().expect("results mutex");
    for slot in collected {
        let chain = slot.expect("every job ran")?;
        summary.chains.push(chain);
    }
    summary
        .chains
        .sort_by_key(|c| (c.grid_index, c.replication));
    summary.wall_ms = started.elapsed().as_millis();
    summary.write_json(&config.out_dir.join("summary.json"))?;
    fs::remove_file(&marker)?;
    Ok(summary)
}

fn run_job(
    config: &ExperimentConfig,
    model: &BuiltinModel,
    job: &Job,
    refs: Option<&ReferencePairs>,
    rwm_scale: Option<f64>,
    chains_dir: &Path,
) -> Result<ChainSummary, Error> {
    let started = Instant::now();
    let seed = derive_chain_seed(config.seed, job.grid_index as u64, job.replication as u64);
    let out = run_single_chain(config, model, job.point, seed, rwm_scale)?;

    let stem = format!("g{:02}_r{:02}", job.grid_index, job.replication);
    let draws_path = chains_dir.join(format!("{stem}_draws.csv"));
    let stats_path = chains_dir.join(format!("{stem}_stats.csv"));
    write_draws(&draws_path, &out, config.burn_in())?;
    write_stats(&stats_path, &out)?;

    summarize_chain(
        config,
        job,
        seed,
        &out,
        refs,
        draws_path.to_string_lossy().into_owned(),
        stats_path.to_string_lossy().into_owned(),
        started.elapsed().as_millis(),
    )
}
