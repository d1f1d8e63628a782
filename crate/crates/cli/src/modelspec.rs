//! Textual model specifications for the command line and config files.
//!
//! Grammar: `name[:key=value,...]`. Examples:
//!
//! - `mvn:dim=10,seed=42`
//! - `logreg:n=200,k=8,seed=1` or `logreg:file=german.data-numeric`
//! - `hlr:n=200,k=8,seed=1,rate=0.01` or `hlr:file=...`
//! - `sv:t=200,seed=2` or `sv:file=prices.csv`
//!
//! A bare name picks the desk-scale defaults; `paper_scale` switches to
//! the full benchmark sizes (the logistic-regression targets then require
//! an explicit data file).

use nuts_engine::model::{
    load_german_credit, load_sv_prices, synthetic_logreg, synthetic_sv, HlrSpec, LogRegData,
    ModelSpec, SvData,
};
use nuts_engine::Error;
use std::collections::BTreeMap;

/// Desk-scale defaults: small enough for continuous testing.
mod desk {
    pub const MVN_DIM: usize = 10;
    pub const LR_N: usize = 200;
    pub const LR_K: usize = 8;
    pub const HLR_K: usize = 8;
    pub const SV_T: usize = 200;
    pub const SEED: u64 = 42;
}

/// Full benchmark sizes. Expect runtimes in hours, not seconds.
mod full {
    pub const MVN_DIM: usize = 250;
    pub const SV_T: usize = 3000;
}

fn parse_kv(s: &str) -> Result<(&str, BTreeMap<String, String>), Error> {
    let (name, rest) = match s.split_once(':') {
        Some((n, r)) => (n, r),
        None => (s, ""),
    };
    let mut map = BTreeMap::new();
    if !rest.is_empty() {
        for pair in rest.split(',') {
            let (k, v) = pair.split_once('=').ok_or_else(|| {
                Error::config(format!("model spec field `{pair}` is not key=value"))
            })?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    Ok((name.trim(), map))
}

fn get_usize(map: &BTreeMap<String, String>, key: &str, default: usize) -> Result<usize, Error> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| Error::config(format!("`{key}={v}` is not a positive integer"))),
    }
}

fn get_u64(map: &BTreeMap<String, String>, key: &str, default: u64) -> Result<u64, Error> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| Error::config(format!("`{key}={v}` is not an integer"))),
    }
}

fn get_f64(map: &BTreeMap<String, String>, key: &str, default: f64) -> Result<f64, Error> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| Error::config(format!("`{key}={v}` is not a number"))),
    }
}

/// Resolves a spec string to a buildable [`ModelSpec`], loading or
/// generating data as needed.
pub fn parse_model_spec(spec: &str, paper_scale: bool) -> Result<ModelSpec, Error> {
    let (name, map) = parse_kv(spec)?;
    match name {
        "mvn" => {
            let default_dim = if paper_scale { full::MVN_DIM } else { desk::MVN_DIM };
            let dim = get_usize(&map, "dim", default_dim)?;
            let seed = get_u64(&map, "seed", desk::SEED)?;
            Ok(ModelSpec::Mvn { dim, seed })
        }
        "logreg" => {
            let data = logreg_data(&map, paper_scale, "logreg")?;
            Ok(ModelSpec::LogReg { data })
        }
        "hlr" => {
            let base = if map.contains_key("file") {
                logreg_data(&map, paper_scale, "hlr")?
            } else {
                let n = get_usize(&map, "n", desk::LR_N)?;
                let k = get_usize(&map, "k", desk::HLR_K)?;
                let seed = get_u64(&map, "seed", desk::SEED)?;
                require_desk_or_file(paper_scale, "hlr", &map)?;
                synthetic_logreg(n, k, seed)?
            };
            let rate = get_f64(&map, "rate", HlrSpec::DEFAULT_RATE)?;
            Ok(ModelSpec::Hlr {
                spec: HlrSpec::new(base, rate)?,
            })
        }
        "sv" => {
            let data: SvData = if let Some(path) = map.get("file") {
                load_sv_prices(path)?
            } else {
                let default_t = if paper_scale { full::SV_T } else { desk::SV_T };
                let t = get_usize(&map, "t", default_t)?;
                let seed = get_u64(&map, "seed", desk::SEED)?;
                synthetic_sv(t, seed)?
            };
            Ok(ModelSpec::Sv { data })
        }
        other => Err(Error::config(format!(
            "unknown model `{other}` (expected mvn, logreg, hlr, or sv)"
        ))),
    }
}

fn logreg_data(
    map: &BTreeMap<String, String>,
    paper_scale: bool,
    which: &str,
) -> Result<LogRegData, Error> {
    if let Some(path) = map.get("file") {
        return load_german_credit(path);
    }
    require_desk_or_file(paper_scale, which, map)?;
    let n = get_usize(map, "n", desk::LR_N)?;
    let k = get_usize(map, "k", desk::LR_K)?;
    let seed = get_u64(map, "seed", desk::SEED)?;
    synthetic_logreg(n, k, seed)
}

fn require_desk_or_file(
    paper_scale: bool,
    which: &str,
    map: &BTreeMap<String, String>,
) -> Result<(), Error> {
    if paper_scale && !map.contains_key("n") {
        return Err(Error::config(format!(
            "paper-scale `{which}` needs the credit dataset: pass {which}:file=<path> \
             (25 whitespace-separated numeric columns) or give explicit n=,k= sizes"
        )));
    }
    Ok(())
}
