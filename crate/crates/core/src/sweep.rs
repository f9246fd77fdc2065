//! Parameter sweeps: one independent run per (axis value, seed).

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{canonical_key, ScenarioConfig};
use crate::engine::run;
use crate::error::{Result, SimError};
use crate::metrics::RunReport;
use crate::output::write_run;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis: String,
    pub value: String,
    pub seed: u64,
    pub report: RunReport,
}

/// Runs `base` with `axis` set to each of `values`, once per seed. Results
/// come back in `(value, seed)` order regardless of completion order. When
/// `out` is given, each run's artifacts go to `out/<axis>=<value>/seed=<s>/`
/// as soon as it finishes, and a line is appended to `out/sweep.jsonl`.
pub fn sweep(
    base: &ScenarioConfig,
    axis: &str,
    values: &[String],
    seeds: &[u64],
    out: Option<&Path>,
) -> Result<Vec<SweepPoint>> {
    let key = canonical_key(axis).ok_or_else(|| SimError::UnknownAxis(axis.to_string()))?;
    let mut jobs = Vec::with_capacity(values.len() * seeds.len());
    for v in values {
        for &s in seeds {
            let mut cfg = base.clone();
            // Seed first so that sweeping over `seed` itself still works.
            cfg.sim.seed = s;
            cfg.set(key, v)?;
            cfg.validate()?;
            jobs.push((v.clone(), cfg.sim.seed, cfg));
        }
    }
    let journal = match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Some(Mutex::new(
                OpenOptions::new().create(true).append(true).open(dir.join("sweep.jsonl"))?,
            ))
        }
        None => None,
    };
    jobs.into_par_iter()
        .map(|(value, seed, cfg)| {
            let log = run(&cfg)?;
            let point = SweepPoint {
                axis: key.to_string(),
                value,
                seed,
                report: log.report.clone(),
            };
            if let (Some(dir), Some(journal)) = (out, journal.as_ref()) {
                write_run(&dir.join(format!("{key}={}", point.value)).join(format!("seed={seed}")), &log)?;
                let line = serde_json::to_string(&point)?;
                let mut f = journal.lock().expect("journal lock poisoned");
                writeln!(f, "{line}")?;
            }
            Ok(point)
        })
        .collect()
}
