//! Dataset ingestion: the German-credit numeric format, a price-series
//! loader, synthetic generators, and column standardization.

use crate::error::Error;
use crate::model::{LogRegData, SvData};
use crate::rng::RngStream;
use crate::Result;
use rand::Rng;
use rand_distr::{Exp, StudentT};
use std::fs;
use std::path::Path;

/// Standardizes each column of a row-major `n x k` matrix to zero mean and
/// unit sample variance (the `n - 1` convention). Already-standardized
/// input passes through unchanged up to rounding, so the operation is
/// idempotent.
pub fn standardize_columns(x: &mut [f64], n: usize, k: usize) -> Result<()> {
    assert_eq!(x.len(), n * k);
    if n < 2 {
        return Err(Error::config(
            "standardization needs at least two rows".to_string(),
        ));
    }
    for c in 0..k {
        let mean = (0..n).map(|i| x[i * k + c]).sum::<f64>() / n as f64;
        let var = (0..n)
            .map(|i| {
                let d = x[i * k + c] - mean;
                d * d
            })
            .sum::<f64>()
            / (n - 1) as f64;
        if var <= 0.0 {
            return Err(Error::config(format!("predictor column {c} is constant")));
        }
        let sd = var.sqrt();
        for i in 0..n {
            x[i * k + c] = (x[i * k + c] - mean) / sd;
        }
    }
    Ok(())
}

/// Loads the 25-column whitespace-separated German-credit numeric format:
/// 24 integer predictors and a final label in {1, 2}, mapped to {+1, -1}.
/// Predictors are standardized on load.
pub fn load_german_credit(path: impl AsRef<Path>) -> Result<LogRegData> {
    let text = fs::read_to_string(path)?;
    parse_german_credit(&text)
}

pub(crate) fn parse_german_credit(text: &str) -> Result<LogRegData> {
    const COLS: usize = 25;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != COLS {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {COLS} columns, found {}", fields.len()),
            });
        }
        let mut row = Vec::with_capacity(COLS - 1);
        for f in &fields[..COLS - 1] {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("unparseable predictor value `{f}`"),
            })?;
            row.push(v);
        }
        let label = match fields[COLS - 1] {
            "1" => 1.0,
            "2" => -1.0,
            other => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("label must be 1 or 2, found `{other}`"),
                })
            }
        };
        rows.push(row);
        labels.push(label);
    }
    if rows.len() < 2 {
        return Err(Error::config(format!(
            "need at least 2 observations, found {}",
            rows.len()
        )));
    }
    LogRegData::from_rows(&rows, &labels, LogRegData::DEFAULT_PRIOR_VARIANCE)
}

/// Deterministic synthetic logistic-regression data: standard-normal
/// predictors, labels from a logistic model with unit-scale coefficients.
pub fn synthetic_logreg(n: usize, k: usize, seed: u64) -> Result<LogRegData> {
    if n < 2 || k == 0 {
        return Err(Error::config(format!(
            "synthetic logreg needs n >= 2 and k >= 1, got n={n}, k={k}"
        )));
    }
    let mut rng = RngStream::substream(seed, 0x4c52_4447); // "LRDG"
    let mut rows = vec![vec![0.0; k]; n];
    for row in rows.iter_mut() {
        rng.fill_standard_normal(row);
    }
    let intercept = 0.3;
    let coef: Vec<f64> = (0..k).map(|_| rng.standard_normal()).collect();
    let mut labels = Vec::with_capacity(n);
    for row in &rows {
        let z = intercept + row.iter().zip(&coef).map(|(x, b)| x * b).sum::<f64>();
        let p = 1.0 / (1.0 + (-z).exp());
        labels.push(if rng.uniform() < p { 1.0 } else { -1.0 });
    }
    LogRegData::from_rows(&rows, &labels, LogRegData::DEFAULT_PRIOR_VARIANCE)
}

/// Simulates the stochastic-volatility generative process and returns the
/// log-return differences: exponential draws for the random-walk precision,
/// the tail parameter, and the initial scale (all mean 100); a Gaussian
/// random walk on the log scales; Student-t return innovations.
pub fn synthetic_sv(t: usize, seed: u64) -> Result<SvData> {
    if t < 2 {
        return Err(Error::config(format!("synthetic sv needs T >= 2, got {t}")));
    }
    let rate = SvData::DEFAULT_RATE;
    let mut rng = RngStream::substream(seed, 0x5356_4447); // "SVDG"
    let exp = Exp::new(rate).expect("rate is positive");
    let tau: f64 = rng.sample(exp);
    let nu: f64 = rng.sample(exp);
    let s1: f64 = rng.sample(exp);
    let walk_sd = tau.sqrt().recip();
    let t_dist = StudentT::new(nu.max(1e-3)).expect("dof is positive");

    let mut log_s = s1.max(1e-12).ln();
    let mut diffs = Vec::with_capacity(t - 1);
    for _ in 1..t {
        log_s += walk_sd * rng.standard_normal();
        let innovation: f64 = rng.sample(t_dist);
        diffs.push(log_s.exp() * innovation);
    }
    SvData::new(diffs, rate)
}

/// Loads a single-column CSV of positive prices and converts it to
/// log-return differences.
pub fn load_sv_prices(path: impl AsRef<Path>) -> Result<SvData> {
    let text = fs::read_to_string(path)?;
    parse_sv_prices(&text)
}

pub(crate) fn parse_sv_prices(text: &str) -> Result<SvData> {
    let mut prices = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let field = line.trim();
        if field.is_empty() {
            continue;
        }
        if lineno == 1 && field.parse::<f64>().is_err() {
            continue; // header row
        }
        let p: f64 = field.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("unparseable price `{field}`"),
        })?;
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::Parse {
                line: lineno,
                message: format!("prices must be positive and finite, found {p}"),
            });
        }
        prices.push(p);
    }
    if prices.len() < 2 {
        return Err(Error::config(format!(
            "need at least 2 prices, found {}",
            prices.len()
        )));
    }
    let diffs = prices
        .windows(2)
        .map(|w| w[1].ln() - w[0].ln())
        .collect::<Vec<f64>>();
    SvData::new(diffs, SvData::DEFAULT_RATE)
}
