//! Experiment configuration: sampler selection, grids, seeds, references.

use nuts_engine::Error;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Nuts,
    NutsNaive,
    Hmc,
    HmcFixed,
    Rwm,
    Gibbs,
}

impl SamplerKind {
    pub fn uses_delta_grid(self) -> bool {
        matches!(self, SamplerKind::Nuts | SamplerKind::Hmc)
    }

    pub fn uses_lambda_grid(self) -> bool {
        self == SamplerKind::Hmc
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SamplerKind::Nuts => "nuts",
            SamplerKind::NutsNaive => "nuts-naive",
            SamplerKind::Hmc => "hmc",
            SamplerKind::HmcFixed => "hmc-fixed",
            SamplerKind::Rwm => "rwm",
            SamplerKind::Gibbs => "gibbs",
        };
        f.write_str(s)
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "nuts" => Ok(SamplerKind::Nuts),
            "nuts-naive" => Ok(SamplerKind::NutsNaive),
            "hmc" => Ok(SamplerKind::Hmc),
            "hmc-fixed" => Ok(SamplerKind::HmcFixed),
            "rwm" => Ok(SamplerKind::Rwm),
            "gibbs" => Ok(SamplerKind::Gibbs),
            other => Err(Error::config(format!(
                "unknown sampler `{other}` (expected nuts, nuts-naive, hmc, hmc-fixed, rwm, gibbs)"
            ))),
        }
    }
}

/// Where reference moments for ESS come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ReferenceSpec {
    /// No ESS in the summary.
    None,
    /// Analytic moments; multivariate normal only.
    Analytic,
    /// A dedicated long reference chain (efficient NUTS at target 0.5)
    /// with this many kept iterations.
    Run { kept: usize },
}

impl FromStr for ReferenceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s == "none" {
            return Ok(ReferenceSpec::None);
        }
        if s == "analytic" {
            return Ok(ReferenceSpec::Analytic);
        }
        if let Some(n) = s.strip_prefix("run:") {
            let kept = n
                .parse()
                .map_err(|_| Error::config(format!("`{s}`: run reference needs an iteration count")))?;
            return Ok(ReferenceSpec::Run { kept });
        }
        Err(Error::config(format!(
            "unknown reference `{s}` (expected none, analytic, or run:<kept>)"
        )))
    }
}

/// One sampler x model experiment over a (delta, lambda) grid.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub model: String,
    pub paper_scale: bool,
    pub sampler: SamplerKind,
    pub iterations: usize,
    pub adapt: usize,
    /// Iterations discarded before analysis and persistence; defaults to
    /// the adaptation length.
    pub burn_in: Option<usize>,
    pub deltas: Vec<f64>,
    pub lambdas: Option<Vec<f64>>,
    pub replications: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub max_depth: u32,
    /// Fixed step size (hmc-fixed, or fixed-step nuts/nuts-naive).
    pub epsilon: Option<f64>,
    /// Leapfrog step count for hmc-fixed.
    pub steps: Option<u32>,
    /// Proposal scale for rwm; tuned to the 0.234 target when absent.
    pub proposal_scale: Option<f64>,
    pub reference: ReferenceSpec,
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.adapt)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.iterations == 0 {
            return Err(Error::config("iters must be positive"));
        }
        if self.replications == 0 {
            return Err(Error::config("replications must be positive"));
        }
        if self.burn_in() >= self.iterations {
            return Err(Error::config(format!(
                "burn-in ({}) must be below iters ({})",
                self.burn_in(),
                self.iterations
            )));
        }
        if self.sampler.uses_delta_grid() && self.epsilon.is_none() && self.deltas.is_empty() {
            return Err(Error::config("delta grid must be nonempty"));
        }
        for &d in &self.deltas {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::config(format!("delta {d} must lie in (0, 1)")));
            }
        }
        match (&self.lambdas, self.sampler.uses_lambda_grid()) {
            (Some(ls), true) => {
                if ls.is_empty() {
                    return Err(Error::config("lambda grid must be nonempty"));
                }
                if let Some(bad) = ls.iter().find(|l| !(**l > 0.0)) {
                    return Err(Error::config(format!("lambda {bad} must be positive")));
                }
            }
            (None, true) => {
                if self.epsilon.is_none() {
                    return Err(Error::config("sampler hmc needs a lambda grid"));
                }
            }
            (Some(_), false) => {
                return Err(Error::config(format!(
                    "sampler {} does not take a lambda grid",
                    self.sampler
                )));
            }
            (None, false) => {}
        }
        if self.sampler == SamplerKind::HmcFixed && (self.epsilon.is_none() || self.steps.is_none())
        {
            return Err(Error::config("hmc-fixed needs --epsilon and --steps"));
        }
        Ok(())
    }

    /// Grid points as (delta, lambda) pairs; fixed-parameter samplers get
    /// a single point without either.
    pub fn grid(&self) -> Vec<GridPoint> {
        match self.sampler {
            SamplerKind::Hmc => {
                let lambdas = self.lambdas.clone().unwrap_or_else(|| vec![1.0]);
                let mut points = Vec::new();
                for &delta in &self.deltas {
                    for &lambda in &lambdas {
                        points.push(GridPoint {
                            delta: Some(delta),
                            lambda: Some(lambda),
                        });
                    }
                }
                points
            }
            SamplerKind::Nuts => {
                if self.epsilon.is_some() {
                    vec![GridPoint::default()]
                } else {
                    self.deltas
                        .iter()
                        .map(|&d| GridPoint {
                            delta: Some(d),
                            lambda: None,
                        })
                        .collect()
                }
            }
            _ => vec![GridPoint::default()],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct GridPoint {
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
}

/// Benchmark config file: one experiment per listed sampler, sharing the
/// model, grids, and output root. Flat key-value TOML.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchmarkFile {
    model: String,
    samplers: Vec<String>,
    iters: usize,
    adapt: usize,
    burn_in: Option<usize>,
    #[serde(default)]
    deltas: Vec<f64>,
    lambdas: Option<Vec<f64>>,
    replications: Option<usize>,
    seed: u64,
    out: String,
    max_depth: Option<u32>,
    epsilon: Option<f64>,
    steps: Option<u32>,
    proposal_scale: Option<f64>,
    reference: Option<String>,
    workers: Option<usize>,
    paper_scale: Option<bool>,
}

/// Parses a benchmark config file into per-sampler experiments.
pub fn parse_benchmark_config(text: &str) -> Result<Vec<ExperimentConfig>, Error> {
    let file: BenchmarkFile =
        toml::from_str(text).map_err(|e| Error::config(format!("config file: {e}")))?;
    if file.samplers.is_empty() {
        return Err(Error::config("samplers list must be nonempty"));
    }
    let reference = match &file.reference {
        None => ReferenceSpec::None,
        Some(s) => s.parse()?,
    };
    let out_root = PathBuf::from(&file.out);
    let mut configs = Vec::new();
    for name in &file.samplers {
        let sampler: SamplerKind = name.parse()?;
        let config = ExperimentConfig {
            model: file.model.clone(),
            paper_scale: file.paper_scale.unwrap_or(false),
            sampler,
            iterations: file.iters,
            adapt: file.adapt,
            burn_in: file.burn_in,
            deltas: file.deltas.clone(),
            lambdas: if sampler.uses_lambda_grid() {
                file.lambdas.clone()
            } else {
                None
            },
            replications: file.replications.unwrap_or(1),
            seed: file.seed,
            out_dir: out_root.join(name),
            max_depth: file.max_depth.unwrap_or(nuts_engine::nuts::DEFAULT_MAX_DEPTH),
            epsilon: file.epsilon,
            steps: file.steps,
            proposal_scale: file.proposal_scale,
            reference: reference.clone(),
            workers: file.workers,
        };
        config.validate()?;
        configs.push(config);
    }
    // The lambda grid must come with hmc and only hmc.
    if file.lambdas.is_some() && !configs.iter().any(|c| c.sampler.uses_lambda_grid()) {
        return Err(Error::config(
            "a lambda grid was given but no sampler uses one (only hmc does)",
        ));
    }
    Ok(configs)
}

/// Log-spaced grid: `count` values from `min` to `max` with a constant
/// ratio between neighbors.
pub fn log_spaced(min: f64, max: f64, count: usize) -> Vec<f64> {
    assert!(min > 0.0 && max > min && count >= 2);
    let step = (max / min).powf(1.0 / (count - 1) as f64);
    (0..count).map(|i| min * step.powi(i as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_file_roundtrip() {
        let text = r#"
model = "mvn:dim=2,seed=7"
samplers = ["nuts", "hmc"]
iters = 200
adapt = 100
deltas = [0.6, 0.8]
lambdas = [0.5, 1.5]
replications = 3
seed = 9
out = "out/bench"
reference = "analytic"
"#;
        let configs = parse_benchmark_config(text).unwrap();
        assert_eq!(configs.len(), 2);
        assert_eq!(configs[0].sampler, SamplerKind::Nuts);
        assert_eq!(configs[0].grid().len(), 2);
        assert_eq!(configs[1].sampler, SamplerKind::Hmc);
        assert_eq!(configs[1].grid().len(), 4);
        assert_eq!(configs[0].out_dir, PathBuf::from("out/bench/nuts"));
        assert_eq!(configs[0].reference, ReferenceSpec::Analytic);
    }

    #[test]
    fn lambda_grid_only_with_hmc() {
        let text = r#"
model = "mvn"
samplers = ["nuts"]
iters = 100
adapt = 50
deltas = [0.6]
lambdas = [1.0]
seed = 1
out = "o"
"#;
        assert!(parse_benchmark_config(text).is_err());

        let text_hmc_missing = r#"
model = "mvn"
samplers = ["hmc"]
iters = 100
adapt = 50
deltas = [0.6]
seed = 1
out = "o"
"#;
        assert!(parse_benchmark_config(text_hmc_missing).is_err());
    }

    #[test]
    fn grid_counts() {
        let mut config = ExperimentConfig {
            model: "mvn".into(),
            paper_scale: false,
            sampler: SamplerKind::Hmc,
            iterations: 10,
            adapt: 5,
            burn_in: None,
            deltas: vec![0.5, 0.6],
            lambdas: Some(vec![1.0, 2.0, 3.0]),
            replications: 2,
            seed: 0,
            out_dir: "x".into(),
            max_depth: 10,
            epsilon: None,
            steps: None,
            proposal_scale: None,
            reference: ReferenceSpec::None,
            workers: None,
        };
        assert_eq!(config.grid().len(), 6);
        config.sampler = SamplerKind::Rwm;
        config.lambdas = None;
        assert_eq!(config.grid().len(), 1);
    }

    #[test]
    fn log_spaced_ratio_is_constant() {
        let grid = log_spaced(0.15, 0.15 * 40.0, 10);
        assert_eq!(grid.len(), 10);
        let expect = 40f64.powf(1.0 / 9.0);
        for w in grid.windows(2) {
            assert!(((w[1] / w[0]) - expect).abs() < 1e-12);
        }
        assert!((grid[9] / grid[0] - 40.0).abs() < 1e-9);
    }

    #[test]
    fn validation_rejects_bad_delta() {
        let config = ExperimentConfig {
            model: "mvn".into(),
            paper_scale: false,
            sampler: SamplerKind::Nuts,
            iterations: 10,
            adapt: 5,
            burn_in: None,
            deltas: vec![1.5],
            lambdas: None,
            replications: 1,
            seed: 0,
            out_dir: "x".into(),
            max_depth: 10,
            epsilon: None,
            steps: None,
            proposal_scale: None,
            reference: ReferenceSpec::None,
            workers: None,
        };
        assert!(config.validate().is_err());
    }
}
