//! Plain-CSV persistence for draws and per-iteration statistics.
//!
//! Values use the shortest round-trip decimal form, so identical inputs
//! always produce byte-identical files.

use nuts_engine::chain::ChainOutput;
use nuts_engine::Error;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// Writes the kept draws, one row per iteration after burn-in, with a
/// header naming the coordinates.
pub fn write_draws(path: &Path, out: &ChainOutput, burn_in: usize) -> Result<(), Error> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    let header: Vec<String> = (0..out.dim).map(|d| format!("theta_{d}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for row in out.kept_draws(burn_in) {
        let mut line = String::with_capacity(row.len() * 20);
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v}"));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes per-iteration statistics for every iteration, adaptation
/// included.
pub fn write_stats(path: &Path, out: &ChainOutput) -> Result<(), Error> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(
        w,
        "iter,eps,eps_bar,accept_stat,depth,states,n_slice,grads,divergent,capped,accepted"
    )?;
    for (i, s) in out.stats.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            i + 1,
            s.eps,
            s.eps_bar,
            s.accept_stat,
            s.depth,
            s.states,
            s.n_slice,
            s.grads,
            s.divergent,
            s.capped,
            s.accepted
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a draws CSV back into rows. The header row is required.
pub fn read_draws(path: &Path) -> Result<Vec<Vec<f64>>, Error> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut rows = Vec::new();
    let mut dim = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if lineno == 1 {
            dim = Some(line.split(',').count());
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, Error> = line
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("unparseable value `{f}`"),
                })
            })
            .collect();
        let row = row?;
        if Some(row.len()) != dim {
            return Err(Error::Parse {
                line: lineno,
                message: format!(
                    "row has {} values, header promised {}",
                    row.len(),
                    dim.unwrap_or(0)
                ),
            });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::config("draws file contains no data rows"));
    }
    Ok(rows)
}
