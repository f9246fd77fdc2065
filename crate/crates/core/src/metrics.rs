//! Post-warm-up performance metrics.
//!
//! Everything in a [`RunReport`] is derived from the per-user one-second bins,
//! so a report recomputed from a persisted `bins.csv` matches the in-run
//! report exactly.

use serde::{Deserialize, Serialize};

use crate::handover::HandoverRecord;

/// One second of one user's measurement window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub bits: f64,
    /// Serving cell at the end of the bin.
    pub serving_cell: usize,
    /// TTIs spent stalled during the bin.
    pub frozen_ttis: u32,
    /// TTIs of active playback session (playing or stalled) during the bin.
    pub session_ttis: u32,
}

impl Bin {
    pub fn frozen(&self) -> bool {
        self.frozen_ttis > 0
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UserTrace {
    pub bins: Vec<Bin>,
    /// Whether the user runs a playback session (streaming traffic).
    pub streaming: bool,
}

impl UserTrace {
    pub fn total_bits(&self) -> f64 {
        self.bins.iter().map(|b| b.bits).sum()
    }

    /// Exact mean delivered rate over the window, bits/s.
    pub fn mean_rate(&self) -> f64 {
        if self.bins.is_empty() {
            0.0
        } else {
            self.total_bits() / self.bins.len() as f64
        }
    }

    pub fn freeze_fraction(&self) -> f64 {
        let frozen: u64 = self.bins.iter().map(|b| b.frozen_ttis as u64).sum();
        let session: u64 = self.bins.iter().map(|b| b.session_ttis as u64).sum();
        if session == 0 {
            0.0
        } else {
            frozen as f64 / session as f64
        }
    }
}

/// `(Σx)² / (N·Σx²)`; `None` for an empty or all-zero input.
pub fn jain_index(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let sum: f64 = values.iter().sum();
    let sum_sq: f64 = values.iter().map(|x| x * x).sum();
    if sum_sq <= 0.0 {
        return None;
    }
    Some((sum * sum / (values.len() as f64 * sum_sq)).min(1.0))
}

/// Sum over users of the mean delivered rate, bits/s.
pub fn network_throughput(traces: &[UserTrace]) -> f64 {
    traces.iter().map(UserTrace::mean_rate).sum()
}

/// Nearest-rank percentile of `values` (`pct` in (0, 100]).
pub fn nearest_rank(values: &[f64], pct: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((pct / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    Some(sorted[rank.min(sorted.len()) - 1])
}

/// Minimum number of one-second bins for a user to enter the percentile
/// starvation metric.
pub const MIN_BINS_FOR_PERCENTILE: usize = 10;

/// Mean over users of each user's `pct`-th percentile one-second throughput.
pub fn slot_percentile_throughput(traces: &[UserTrace], pct: f64) -> f64 {
    let per_user: Vec<f64> = traces
        .iter()
        .filter(|t| t.bins.len() >= MIN_BINS_FOR_PERCENTILE)
        .filter_map(|t| {
            let bits: Vec<f64> = t.bins.iter().map(|b| b.bits).collect();
            nearest_rank(&bits, pct)
        })
        .collect();
    if per_user.is_empty() {
        0.0
    } else {
        per_user.iter().sum::<f64>() / per_user.len() as f64
    }
}

/// `Σ ln(mean rate)`, in nats, with means floored at `rate_floor`.
pub fn log_sum_rate(traces: &[UserTrace], rate_floor: f64) -> f64 {
    traces.iter().map(|t| t.mean_rate().max(rate_floor).ln()).sum()
}

/// Mean freeze fraction over streaming users and the Jain index of the
/// fractions (absent when nobody froze).
pub fn freezing_metrics(traces: &[UserTrace]) -> (f64, Option<f64>) {
    let fractions: Vec<f64> = traces
        .iter()
        .filter(|t| t.streaming)
        .map(UserTrace::freeze_fraction)
        .collect();
    freeze_summary(&fractions)
}

pub fn freeze_summary(fractions: &[f64]) -> (f64, Option<f64>) {
    if fractions.is_empty() {
        return (0.0, None);
    }
    let mean = fractions.iter().sum::<f64>() / fractions.len() as f64;
    (mean, jain_index(fractions))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSummary {
    pub user: usize,
    pub mean_rate: f64,
    pub p10_rate: f64,
    pub freeze_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub rule: String,
    pub seed: u64,
    /// Measurement window, seconds.
    pub measured_seconds: usize,
    pub t_net: f64,
    pub j_net: Option<f64>,
    pub t_slot10: f64,
    pub f_lt_avg: Option<f64>,
    pub j_f_net: Option<f64>,
    pub r_log_net: f64,
    pub handovers: usize,
    pub users: Vec<UserSummary>,
}

impl RunReport {
    pub fn from_traces(
        rule: &str,
        seed: u64,
        traces: &[UserTrace],
        handovers: &[HandoverRecord],
        rate_floor: f64,
    ) -> Self {
        let means: Vec<f64> = traces.iter().map(UserTrace::mean_rate).collect();
        let any_streaming = traces.iter().any(|t| t.streaming);
        let (f_lt_avg, j_f_net) = if any_streaming {
            let (m, j) = freezing_metrics(traces);
            (Some(m), j)
        } else {
            (None, None)
        };
        let users = traces
            .iter()
            .enumerate()
            .map(|(user, t)| {
                let bits: Vec<f64> = t.bins.iter().map(|b| b.bits).collect();
                UserSummary {
                    user,
                    mean_rate: t.mean_rate(),
                    p10_rate: nearest_rank(&bits, 10.0).unwrap_or(0.0),
                    freeze_fraction: t.streaming.then(|| t.freeze_fraction()),
                }
            })
            .collect();
        Self {
            rule: rule.to_string(),
            seed,
            measured_seconds: traces.first().map_or(0, |t| t.bins.len()),
            t_net: network_throughput(traces),
            j_net: jain_index(&means),
            t_slot10: slot_percentile_throughput(traces, 10.0),
            f_lt_avg,
            j_f_net,
            r_log_net: log_sum_rate(traces, rate_floor),
            handovers: handovers.len(),
            users,
        }
    }
}
