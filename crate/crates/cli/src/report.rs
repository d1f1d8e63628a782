//! Run summaries and the sampler-efficiency comparison table.

use crate::config::{ExperimentConfig, SamplerKind};
use nuts_engine::diagnostics::EssReport;
use nuts_engine::Error;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelInfo {
    pub name: String,
    pub dim: usize,
}

/// Everything recorded about one chain. Ratios always ship with their
/// numerator and denominator: `ess.ess_per_grad` comes with `min_ess`
/// inside the report and `total_grad_evals` here.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainSummary {
    pub sampler: String,
    pub grid_index: usize,
    pub replication: usize,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub seed: u64,
    pub iterations: usize,
    pub kept: usize,
    pub iteration_grad_evals: u64,
    pub setup_grad_evals: u64,
    pub total_grad_evals: u64,
    pub mean_accept_stat: Option<f64>,
    pub h_discrepancy: Option<f64>,
    pub acceptance_rate: f64,
    pub divergences: usize,
    pub max_depth_hits: usize,
    pub final_epsilon: Option<f64>,
    pub eps_bar_cv_last_200: Option<f64>,
    pub power_of_two_fraction: Option<f64>,
    #[serde(default)]
    pub ess: Option<EssReport>,
    pub warnings: Vec<String>,
    pub draws_file: String,
    pub stats_file: String,
    pub wall_ms: u128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub model: ModelInfo,
    pub sampler: String,
    pub model_spec: String,
    pub iterations: usize,
    pub adapt: usize,
    pub burn_in: usize,
    pub root_seed: u64,
    pub chains: Vec<ChainSummary>,
    pub wall_ms: u128,
}

impl RunSummary {
    pub fn write_json(&self, path: &Path) -> Result<(), Error> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::config(format!("summary serialization failed: {e}")))?;
        fs::write(path, text)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("summary `{}`: {e}", path.display())))
    }
}

pub fn summary_skeleton(config: &ExperimentConfig, model: ModelInfo) -> RunSummary {
    RunSummary {
        model,
        sampler: config.sampler.to_string(),
        model_spec: config.model.clone(),
        iterations: config.iterations,
        adapt: config.adapt,
        burn_in: config.burn_in(),
        root_seed: config.seed,
        chains: Vec::new(),
        wall_ms: 0,
    }
}

/// One grid point aggregated over replications.
#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub sampler: String,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub replications: usize,
    pub mean_min_ess: f64,
    pub mean_total_grads: f64,
    pub mean_min_ess_per_grad: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub model: ModelInfo,
    pub rows: Vec<CompareRow>,
    /// Best grid point among hmc/hmc-fixed rows by ESS per gradient.
    pub best_hmc: Option<CompareRow>,
    /// Best nuts grid point by ESS per gradient.
    pub best_nuts: Option<CompareRow>,
    /// `best_nuts / best_hmc` in min-ESS per gradient.
    pub nuts_to_best_hmc_ratio: Option<f64>,
}

/// Aggregates summaries (which must share a model) into an ESS-per-gradient
/// table by sampler, delta, and lambda.
pub fn compare_samplers(summaries: &[RunSummary]) -> Result<Comparison, Error> {
    if summaries.is_empty() {
        return Err(Error::config("no summaries to compare"));
    }
    let model = summaries[0].model.clone();
    for s in summaries {
        if s.model.name != model.name || s.model.dim != model.dim {
            return Err(Error::config(format!(
                "summaries mix models `{}` and `{}`",
                model.name, s.model.name
            )));
        }
    }

    type Key = (String, Option<u64>, Option<u64>);
    let key_of = |c: &ChainSummary| -> Key {
        (
            c.sampler.clone(),
            c.delta.map(f64::to_bits),
            c.lambda.map(f64::to_bits),
        )
    };

    let mut groups: BTreeMap<Key, Vec<&ChainSummary>> = BTreeMap::new();
    for s in summaries {
        for c in &s.chains {
            groups.entry(key_of(c)).or_default().push(c);
        }
    }

    let mut rows = Vec::new();
    for ((sampler, delta_bits, lambda_bits), chains) in &groups {
        let mut ess_sum = 0.0;
        let mut grads_sum = 0.0;
        let mut rate_sum = 0.0;
        for c in chains {
            let ess = c.ess.as_ref().ok_or_else(|| {
                Error::config(format!(
                    "chain {} of sampler {} has no ESS report; rerun with a reference configured",
                    c.replication, c.sampler
                ))
            })?;
            let per_grad = ess.ess_per_grad.ok_or_else(|| {
                Error::config("ESS report lacks the per-gradient rate".to_string())
            })?;
            ess_sum += ess.min_ess;
            grads_sum += c.total_grad_evals as f64;
            rate_sum += per_grad;
        }
        let n = chains.len() as f64;
        rows.push(CompareRow {
            sampler: sampler.clone(),
            delta: delta_bits.map(f64::from_bits),
            lambda: lambda_bits.map(f64::from_bits),
            replications: chains.len(),
            mean_min_ess: ess_sum / n,
            mean_total_grads: grads_sum / n,
            mean_min_ess_per_grad: rate_sum / n,
        });
    }

    let best_of = |pred: &dyn Fn(&&CompareRow) -> bool| -> Option<CompareRow> {
        rows.iter()
            .filter(pred)
            .max_by(|a, b| {
                a.mean_min_ess_per_grad
                    .total_cmp(&b.mean_min_ess_per_grad)
            })
            .cloned()
    };
    let best_hmc = best_of(&|r| r.sampler.starts_with("hmc"));
    let best_nuts = best_of(&|r| r.sampler == "nuts");
    let ratio = match (&best_nuts, &best_hmc) {
        (Some(n), Some(h)) if h.mean_min_ess_per_grad > 0.0 => {
            Some(n.mean_min_ess_per_grad / h.mean_min_ess_per_grad)
        }
        _ => None,
    };

    Ok(Comparison {
        model,
        rows,
        best_hmc,
        best_nuts,
        nuts_to_best_hmc_ratio: ratio,
    })
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "sampler,delta,lambda,replications,mean_min_ess,mean_total_grads,mean_min_ess_per_grad\n",
        );
        for r in &self.rows {
            let delta = r.delta.map(|d| d.to_string()).unwrap_or_default();
            let lambda = r.lambda.map(|l| l.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.sampler,
                delta,
                lambda,
                r.replications,
                r.mean_min_ess,
                r.mean_total_grads,
                r.mean_min_ess_per_grad
            ));
        }
        out
    }
}

/// True when this sampler kind produces an acceptance statistic whose mean
/// is meaningfully compared to a target.
pub fn has_accept_statistic(kind: SamplerKind) -> bool {
    !matches!(kind, SamplerKind::NutsNaive | SamplerKind::Gibbs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(sampler: &str, delta: Option<f64>, lambda: Option<f64>, per_grad: f64) -> ChainSummary {
        ChainSummary {
            sampler: sampler.into(),
            grid_index: 0,
            replication: 0,
            delta,
            lambda,
            seed: 1,
            iterations: 100,
            kept: 50,
            iteration_grad_evals: 1000,
            setup_grad_evals: 10,
            total_grad_evals: 1010,
            mean_accept_stat: Some(0.6),
            h_discrepancy: Some(0.0),
            acceptance_rate: 0.9,
            divergences: 0,
            max_depth_hits: 0,
            final_epsilon: Some(0.2),
            eps_bar_cv_last_200: None,
            power_of_two_fraction: None,
            ess: Some(EssReport {
                mean_ess: vec![40.0],
                second_moment_ess: vec![50.0],
                mean_cutoff: vec![1],
                second_moment_cutoff: vec![1],
                min_ess: per_grad * 1010.0,
                ess_per_grad: Some(per_grad),
                flags: vec![],
            }),
            warnings: vec![],
            draws_file: "d.csv".into(),
            stats_file: "s.csv".into(),
            wall_ms: 1,
        }
    }

    fn summary(sampler: &str, chains: Vec<ChainSummary>) -> RunSummary {
        RunSummary {
            model: ModelInfo {
                name: "mvn-2".into(),
                dim: 2,
            },
            sampler: sampler.into(),
            model_spec: "mvn:dim=2".into(),
            iterations: 100,
            adapt: 50,
            burn_in: 50,
            root_seed: 1,
            chains,
            wall_ms: 10,
        }
    }

    #[test]
    fn single_summary_gives_one_row() {
        let s = summary("nuts", vec![chain("nuts", Some(0.6), None, 0.05)]);
        let cmp = compare_samplers(&[s]).unwrap();
        assert_eq!(cmp.rows.len(), 1);
        assert!(cmp.best_hmc.is_none());
        assert!(cmp.nuts_to_best_hmc_ratio.is_none());
    }

    #[test]
    fn ratio_uses_best_hmc_point() {
        let nuts = summary("nuts", vec![chain("nuts", Some(0.6), None, 0.06)]);
        let hmc = summary(
            "hmc",
            vec![
                chain("hmc", Some(0.65), Some(1.0), 0.02),
                chain("hmc", Some(0.65), Some(2.0), 0.04),
            ],
        );
        let cmp = compare_samplers(&[nuts, hmc]).unwrap();
        assert_eq!(cmp.rows.len(), 3);
        let best = cmp.best_hmc.unwrap();
        assert_eq!(best.lambda, Some(2.0));
        assert!((cmp.nuts_to_best_hmc_ratio.unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn mismatched_models_are_rejected() {
        let a = summary("nuts", vec![chain("nuts", Some(0.6), None, 0.05)]);
        let mut b = summary("hmc", vec![chain("hmc", Some(0.6), Some(1.0), 0.05)]);
        b.model.name = "other".into();
        assert!(compare_samplers(&[a, b]).is_err());
        assert!(compare_samplers(&[]).is_err());
    }

    #[test]
    fn replications_are_averaged() {
        let mut c1 = chain("nuts", Some(0.6), None, 0.04);
        let mut c2 = chain("nuts", Some(0.6), None, 0.08);
        c1.replication = 0;
        c2.replication = 1;
        let s = summary("nuts", vec![c1, c2]);
        let cmp = compare_samplers(&[s]).unwrap();
        assert_eq!(cmp.rows.len(), 1);
        assert_eq!(cmp.rows[0].replications, 2);
        assert!((cmp.rows[0].mean_min_ess_per_grad - 0.06).abs() < 1e-12);
    }
}
