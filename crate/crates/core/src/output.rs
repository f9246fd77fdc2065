//! Run artifacts on disk: `report.json`, `bins.csv`, `handover.csv`,
//! `manifest.json` and, when decision logging is on, `decisions.csv`.

use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::engine::RunLog;
use crate::error::{Result, SimError};
use crate::metrics::{Bin, UserTrace};

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub seed: u64,
    pub config: ScenarioConfig,
    /// The configuration in the flat text format.
    pub config_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinRow {
    pub user_id: usize,
    pub t_bin: usize,
    pub bits: f64,
    pub serving_cell: usize,
    pub frozen_flag: u8,
    pub frozen_ttis: u32,
    pub session_ttis: u32,
    pub streaming: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct HandoverRow {
    user: usize,
    from: usize,
    to: usize,
    long_avg: Option<f64>,
    freeze: Option<f64>,
    timestamp: f64,
}

pub fn write_bins<W: std::io::Write>(traces: &[UserTrace], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (user_id, t) in traces.iter().enumerate() {
        for (t_bin, b) in t.bins.iter().enumerate() {
            w.serialize(BinRow {
                user_id,
                t_bin,
                bits: b.bits,
                serving_cell: b.serving_cell,
                frozen_flag: u8::from(b.frozen()),
                frozen_ttis: b.frozen_ttis,
                session_ttis: b.session_ttis,
                streaming: u8::from(t.streaming),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rebuilds per-user traces from `bins.csv` content. Users and bins must be
/// dense and in order.
pub fn read_bins<R: Read>(input: R) -> Result<Vec<UserTrace>> {
    let mut r = csv::Reader::from_reader(input);
    let mut traces: Vec<UserTrace> = Vec::new();
    for row in r.deserialize() {
        let row: BinRow = row?;
        if row.user_id == traces.len() {
            traces.push(UserTrace {
                bins: Vec::new(),
                streaming: row.streaming != 0,
            });
        } else if row.user_id + 1 != traces.len() {
            return Err(SimError::Trace(format!("user {} out of order", row.user_id)));
        }
        let t = traces.last_mut().expect("pushed above");
        if row.t_bin != t.bins.len() {
            return Err(SimError::Trace(format!("bin {} of user {} out of order", row.t_bin, row.user_id)));
        }
        if !(row.bits.is_finite() && row.bits >= 0.0) || row.frozen_ttis > row.session_ttis {
            return Err(SimError::Trace(format!("bad values in bin {} of user {}", row.t_bin, row.user_id)));
        }
        t.bins.push(Bin {
            bits: row.bits,
            serving_cell: row.serving_cell,
            frozen_ttis: row.frozen_ttis,
            session_ttis: row.session_ttis,
        });
    }
    if let Some(first) = traces.first() {
        if traces.iter().any(|t| t.bins.len() != first.bins.len()) {
            return Err(SimError::Trace("users have different bin counts".into()));
        }
    }
    Ok(traces)
}

pub fn write_run(dir: &Path, log: &RunLog) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(&log.report)?)?;
    write_bins(&log.traces, fs::File::create(dir.join("bins.csv"))?)?;

    let mut w = csv::Writer::from_path(dir.join("handover.csv"))?;
    for h in &log.handovers {
        w.serialize(HandoverRow {
            user: h.user,
            from: h.from,
            to: h.to,
            long_avg: h.long_avg,
            freeze: h.freeze,
            timestamp: h.timestamp,
        })?;
    }
    w.flush()?;

    if log.config.sim.decision_log {
        let mut w = csv::Writer::from_path(dir.join("decisions.csv"))?;
        for d in &log.decisions {
            w.serialize(d)?;
        }
        w.flush()?;
    }

    let manifest = Manifest {
        version: VERSION.to_string(),
        seed: log.config.sim.seed,
        config: log.config.clone(),
        config_text: log.config.to_text(),
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}
