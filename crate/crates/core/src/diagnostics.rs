//! Effective-sample-size estimation from truncated autocorrelation sums,
//! acceptance-statistic discrepancy, and trajectory-length summaries.
//!
//! Autocorrelations are always normalized with moments from an *external*
//! reference (a separate long run, or analytic values where available);
//! taking them from the chain under evaluation systematically
//! underestimates autocorrelation and inflates ESS.

use crate::error::Error;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Autocorrelations below this are treated as noise; the lag sum stops at
/// the first dip below it.
pub const AUTOCORR_CUTOFF: f64 = 0.05;

/// Reference moments for one scalar functional of the chain.
#[derive(Debug, Clone, Serialize)]
pub struct MomentReference {
    pub mean: f64,
    pub variance: f64,
    /// Where the moments came from (length and kind of the reference run,
    /// or "analytic").
    pub provenance: String,
}

impl MomentReference {
    pub fn new(mean: f64, variance: f64, provenance: impl Into<String>) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() || !mean.is_finite() {
            return Err(Error::config(format!(
                "reference moments must be finite with positive variance, got mean={mean}, variance={variance}"
            )));
        }
        Ok(MomentReference {
            mean,
            variance,
            provenance: provenance.into(),
        })
    }

    /// Empirical moments of a (long) reference series.
    pub fn from_series(series: &[f64], provenance: impl Into<String>) -> Result<Self> {
        if series.len() < 2 {
            return Err(Error::config("reference series needs at least 2 values"));
        }
        let n = series.len() as f64;
        let mean = series.iter().sum::<f64>() / n;
        let variance = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        MomentReference::new(mean, variance, provenance)
    }
}

/// Autocorrelation estimates for lags `0..=max_lag`, normalized with the
/// reference moments:
/// `rho_s = sum_{m=s+1..M} (f_m - mu)(f_{m-s} - mu) / (var * (M - s))`.
pub fn autocorrelation(
    chain: &[f64],
    reference: &MomentReference,
    max_lag: usize,
) -> Result<Vec<f64>> {
    let m = chain.len();
    if m < 2 {
        return Err(Error::config("chain needs at least 2 values"));
    }
    if max_lag >= m {
        return Err(Error::config(format!(
            "max lag {max_lag} must be below the chain length {m}"
        )));
    }
    let dev: Vec<f64> = chain.iter().map(|x| x - reference.mean).collect();
    let mut rho = Vec::with_capacity(max_lag + 1);
    for s in 0..=max_lag {
        rho.push(lag_correlation(&dev, s, reference.variance));
    }
    Ok(rho)
}

fn lag_correlation(dev: &[f64], s: usize, variance: f64) -> f64 {
    let m = dev.len();
    let mut acc = 0.0;
    for i in s..m {
        acc += dev[i] * dev[i - s];
    }
    acc / (variance * (m - s) as f64)
}

/// ESS estimate with its truncation diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct EssOutcome {
    pub ess: f64,
    /// First lag whose autocorrelation dipped below the cutoff (or the
    /// last lag examined when none did).
    pub cutoff: usize,
    pub cutoff_reached: bool,
    /// The truncated sum went negative enough to clamp the denominator:
    /// the chain is anticorrelated beyond what the estimator can resolve.
    pub super_efficient: bool,
    /// The chain itself had zero variance.
    pub degenerate: bool,
}

/// ESS from the truncated autocorrelation sum,
/// `M / (1 + 2 * sum_{s=1..cutoff} (1 - s/M) rho_s)`,
/// stopping at the first lag below [`AUTOCORR_CUTOFF`].
pub fn ess(chain: &[f64], reference: &MomentReference) -> Result<EssOutcome> {
    ess_with_options(chain, reference, true)
}

/// As [`ess`], with the choice of whether the first sub-cutoff lag is
/// included in the sum (the truncation bound is inclusive by default).
pub fn ess_with_options(
    chain: &[f64],
    reference: &MomentReference,
    include_cutoff_lag: bool,
) -> Result<EssOutcome> {
    let m = chain.len();
    if m < 10 {
        return Err(Error::config(format!(
            "ESS estimation needs at least 10 draws, got {m}"
        )));
    }
    if !(reference.variance > 0.0) {
        return Err(Error::config("reference variance must be positive"));
    }
    let dev: Vec<f64> = chain.iter().map(|x| x - reference.mean).collect();
    let chain_mean = chain.iter().sum::<f64>() / m as f64;
    let degenerate = chain.iter().all(|&x| x == chain_mean);

    let mut weighted_sum = 0.0;
    let mut cutoff = m - 1;
    let mut cutoff_reached = false;
    for s in 1..m {
        let rho = lag_correlation(&dev, s, reference.variance);
        let weight = 1.0 - s as f64 / m as f64;
        if rho < AUTOCORR_CUTOFF {
            cutoff = s;
            cutoff_reached = true;
            if include_cutoff_lag {
                weighted_sum += weight * rho;
            }
            break;
        }
        weighted_sum += weight * rho;
    }

    let mut denom = 1.0 + 2.0 * weighted_sum;
    let floor = 1.0 / m as f64;
    let super_efficient = denom < floor;
    if super_efficient {
        denom = floor;
    }
    Ok(EssOutcome {
        ess: m as f64 / denom,
        cutoff,
        cutoff_reached,
        super_efficient,
        degenerate,
    })
}

/// Per-dimension ESS for the mean and the second central moment, with the
/// minimum over everything and the per-gradient rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EssReport {
    pub mean_ess: Vec<f64>,
    pub second_moment_ess: Vec<f64>,
    pub mean_cutoff: Vec<usize>,
    pub second_moment_cutoff: Vec<usize>,
    pub min_ess: f64,
    pub ess_per_grad: Option<f64>,
    pub flags: Vec<String>,
}

/// Computes the report over an `M x D` draw matrix.
///
/// `refs[d]` holds the reference moments for coordinate `d`: first for the
/// coordinate itself, then for its squared deviation from the *reference*
/// mean (the second-central-moment functional is centered with the
/// reference mean, not the chain's own).
pub fn ess_report(
    draws: &[Vec<f64>],
    refs: &[(MomentReference, MomentReference)],
    grads: Option<u64>,
) -> Result<EssReport> {
    if draws.is_empty() {
        return Err(Error::config("no draws"));
    }
    let dim = refs.len();
    if draws[0].len() != dim {
        return Err(Error::config(format!(
            "draws have {} coordinates but {} references were supplied",
            draws[0].len(),
            dim
        )));
    }

    let mut report = EssReport {
        mean_ess: Vec::with_capacity(dim),
        second_moment_ess: Vec::with_capacity(dim),
        mean_cutoff: Vec::with_capacity(dim),
        second_moment_cutoff: Vec::with_capacity(dim),
        min_ess: f64::INFINITY,
        ess_per_grad: None,
        flags: Vec::new(),
    };

    for d in 0..dim {
        let series: Vec<f64> = draws.iter().map(|row| row[d]).collect();
        let mean_out = ess(&series, &refs[d].0)?;
        push_flags(&mut report.flags, d, "mean", &mean_out);

        let centered_sq: Vec<f64> = series
            .iter()
            .map(|x| (x - refs[d].0.mean).powi(2))
            .collect();
        let sq_out = ess(&centered_sq, &refs[d].1)?;
        push_flags(&mut report.flags, d, "second-moment", &sq_out);

        report.min_ess = report.min_ess.min(mean_out.ess).min(sq_out.ess);
        report.mean_ess.push(mean_out.ess);
        report.second_moment_ess.push(sq_out.ess);
        report.mean_cutoff.push(mean_out.cutoff);
        report.second_moment_cutoff.push(sq_out.cutoff);
    }
    if let Some(g) = grads {
        if g > 0 {
            report.ess_per_grad = Some(report.min_ess / g as f64);
        }
    }
    Ok(report)
}

fn push_flags(flags: &mut Vec<String>, dim: usize, functional: &str, out: &EssOutcome) {
    if !out.cutoff_reached {
        flags.push(format!("cutoff-not-reached:dim{dim}:{functional}"));
    }
    if out.super_efficient {
        flags.push(format!("super-efficient:dim{dim}:{functional}"));
    }
    if out.degenerate {
        flags.push(format!("degenerate:dim{dim}:{functional}"));
    }
}

/// Mean realized acceptance statistic minus its target.
pub fn h_discrepancy(accept_stats: &[f64], delta: f64) -> f64 {
    if accept_stats.is_empty() {
        return f64::NAN;
    }
    accept_stats.iter().sum::<f64>() / accept_stats.len() as f64 - delta
}

/// Histogram of per-iteration trajectory lengths (in states visited) and
/// the fraction that are exact powers of two.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryHistogram {
    pub bins: BTreeMap<u64, u64>,
    pub power_of_two_fraction: f64,
    pub iterations: u64,
}

pub fn trajectory_histogram(depths_and_counts: &[(u32, u64)]) -> TrajectoryHistogram {
    let mut bins = BTreeMap::new();
    let mut pow2 = 0u64;
    for &(_, states) in depths_and_counts {
        *bins.entry(states).or_insert(0) += 1;
        if states > 0 && states & (states - 1) == 0 {
            pow2 += 1;
        }
    }
    let n = depths_and_counts.len() as u64;
    TrajectoryHistogram {
        bins,
        power_of_two_fraction: if n == 0 { 0.0 } else { pow2 as f64 / n as f64 },
        iterations: n,
    }
}
