//! Two-parameter sweeps. Points run concurrently; each finished row is
//! appended to `sweep.partial` so an interrupted sweep can resume, and the
//! final `sweep.csv` is sorted by grid index so it does not depend on the
//! worker count or completion order.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::sync::Mutex;

use rayon::prelude::*;

use crate::certificate::fmt_f64;
use crate::error::{Error, Result};

use super::commands::simulate;
use super::config::resolve_key;
use super::{write_atomic, RunConfig, EXIT_OK};

pub const SWEEP_FILE: &str = "sweep.csv";
pub const PARTIAL_FILE: &str = "sweep.partial";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl SweepAxis {
    pub fn value(&self, k: usize) -> f64 {
        if k + 1 == self.count {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * k as f64 / (self.count - 1) as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axes: [SweepAxis; 2],
}

impl SweepSpec {
    /// Parses two `name=lo:hi:count` arguments.
    pub fn parse(args: &[String]) -> Result<SweepSpec> {
        if args.len() != 2 {
            return Err(Error::Config(format!(
                "a sweep needs exactly two --sweep arguments, got {}",
                args.len()
            )));
        }
        let axis = |s: &str| -> Result<SweepAxis> {
            let bad = || Error::Config(format!("--sweep expects name=lo:hi:count, got `{s}`"));
            let (name, range) = s.split_once('=').ok_or_else(bad)?;
            let parts: Vec<&str> = range.split(':').collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
            let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
            let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
            if count < 2 {
                return Err(Error::Config(format!("sweep count must be at least 2, got {count}")));
            }
            let name = name.trim();
            resolve_key(name)?;
            let mut probe = super::preset("phyllotaxis")?;
            probe
                .set(name, "1")
                .map_err(|_| Error::Config(format!("`{name}` is not a numeric config key")))?;
            Ok(SweepAxis {
                name: name.to_string(),
                lo,
                hi,
                count,
            })
        };
        Ok(SweepSpec {
            axes: [axis(&args[0])?, axis(&args[1])?],
        })
    }

    pub fn len(&self) -> usize {
        self.axes[0].count * self.axes[1].count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Swept values at grid index `i` (first axis outer).
    pub fn point(&self, i: usize) -> [f64; 2] {
        let n2 = self.axes[1].count;
        [self.axes[0].value(i / n2), self.axes[1].value(i % n2)]
    }

    pub fn header(&self) -> String {
        format!(
            "index,{},{},outcome,outcome_t,max_l,feasible",
            self.axes[0].name, self.axes[1].name
        )
    }
}

/// Runs one grid point and renders its CSV row.
pub fn evaluate_point(base: &RunConfig, spec: &SweepSpec, index: usize) -> String {
    let values = spec.point(index);
    let mut cfg = base.clone();
    let applied = spec
        .axes
        .iter()
        .zip(values)
        .try_for_each(|(axis, v)| cfg.set(&axis.name, &fmt_f64(v)));
    let (outcome, t, max_l, feasible) = match applied.and_then(|_| simulate(&cfg, None, None)) {
        Ok(sim) => (
            sim.result.outcome.label(),
            sim.result.outcome.time().unwrap_or(f64::NAN),
            sim.max_l(),
            sim.certificate.as_ref().is_some_and(|c| c.is_valid()),
        ),
        Err(_) => ("error", f64::NAN, f64::NAN, false),
    };
    format!(
        "{index},{},{},{outcome},{},{},{feasible}",
        fmt_f64(values[0]),
        fmt_f64(values[1]),
        fmt_f64(t),
        fmt_f64(max_l)
    )
}

fn read_partial(path: &std::path::Path, total: usize) -> Result<BTreeMap<usize, String>> {
    let mut done = BTreeMap::new();
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(done),
        Err(e) => return Err(Error::io(path, e)),
    };
    for line in text.lines() {
        // A torn last line from an interrupted write is simply recomputed.
        let Some((idx, _)) = line.split_once(',') else { continue };
        let Ok(idx) = idx.parse::<usize>() else { continue };
        let complete = line.ends_with(",true") || line.ends_with(",false");
        if idx < total && complete && line.split(',').count() == 7 {
            done.insert(idx, line.to_string());
        }
    }
    Ok(done)
}

/// Computes all missing rows; returns the number of rows still missing.
pub fn run_sweep(
    base: &RunConfig,
    spec: &SweepSpec,
    workers: usize,
    resume: bool,
    max_points: Option<usize>,
) -> Result<usize> {
    let out = &base.out;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let partial_path = out.join(PARTIAL_FILE);
    let total = spec.len();
    let mut done = if resume {
        read_partial(&partial_path, total)?
    } else {
        if partial_path.exists() {
            std::fs::remove_file(&partial_path).map_err(|e| Error::io(&partial_path, e))?;
        }
        BTreeMap::new()
    };
    let mut pending: Vec<usize> = (0..total).filter(|i| !done.contains_key(i)).collect();
    if let Some(limit) = max_points {
        pending.truncate(limit);
    }
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&partial_path)
        .map_err(|e| Error::io(&partial_path, e))?;
    let sink = Mutex::new(file);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<(usize, String)> = pool.install(|| {
        pending
            .par_iter()
            .map(|&i| {
                let line = evaluate_point(base, spec, i);
                let mut f = sink.lock().expect("partial-file lock poisoned");
                let _ = writeln!(f, "{line}");
                let _ = f.flush();
                (i, line)
            })
            .collect()
    });
    done.extend(rows);
    let missing = total - done.len();
    if missing == 0 {
        let mut csv = spec.header();
        csv.push('\n');
        for line in done.values() {
            csv.push_str(line);
            csv.push('\n');
        }
        write_atomic(&out.join(SWEEP_FILE), csv.as_bytes())?;
        std::fs::remove_file(&partial_path).map_err(|e| Error::io(&partial_path, e))?;
    }
    Ok(missing)
}

pub fn cmd_sweep(
    base: &RunConfig,
    spec: &SweepSpec,
    workers: usize,
    resume: bool,
    max_points: Option<usize>,
) -> Result<i32> {
    let missing = run_sweep(base, spec, workers, resume, max_points)?;
    if missing == 0 {
        println!("sweep complete: {} rows in {}", spec.len(), base.out.join(SWEEP_FILE).display());
    } else {
        println!(
            "sweep partial: {} of {} rows recorded; rerun with --resume",
            spec.len() - missing,
            spec.len()
        );
    }
    Ok(EXIT_OK)
}
