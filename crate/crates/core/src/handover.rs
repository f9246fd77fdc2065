//! Strongest-server association and the handover exchange of long-term
//! user state between base stations.

use serde::{Deserialize, Serialize};

use crate::channel::{path_loss_db, ChannelConfig};
use crate::geometry::{distance, HexNetwork, Position};
use crate::traffic::FreezeStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HandoverMode {
    /// The old BS hands the long-term rate and freeze history to the new BS.
    MultiCell,
    /// The new BS starts from scratch.
    SingleCell,
}

/// One state-transfer message, logged for every serving-cell change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandoverRecord {
    pub user: usize,
    pub from: usize,
    pub to: usize,
    /// Long-term average rate handed to the target BS (bits/s). `None` in
    /// single-cell mode where nothing is transferred.
    pub long_avg: Option<f64>,
    pub freeze: Option<f64>,
    pub timestamp: f64,
}

/// Serving cell per user.
#[derive(Debug, Clone, PartialEq)]
pub struct Association {
    pub serving_cell: Vec<usize>,
    pub time_of_last_check: f64,
}

/// Scheduler-side history for one user. Averages are initialized lazily from
/// the first rate the user reports in a (new) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LookbackState {
    pub short_avg: f64,
    pub long_avg: f64,
    pub short_pending: bool,
    pub long_pending: bool,
    /// Session freeze counters at the moment the current BS started tracking
    /// the user. Zero unless single-cell mode reset it.
    pub freeze_origin: FreezeStats,
}

impl Default for LookbackState {
    fn default() -> Self {
        Self {
            short_avg: 0.0,
            long_avg: 0.0,
            short_pending: true,
            long_pending: true,
            freeze_origin: FreezeStats::default(),
        }
    }
}

impl LookbackState {
    /// First measured rate in a cell seeds whichever averages are pending.
    pub fn seed_pending(&mut self, first_rate: f64, floor: f64) {
        let r = first_rate.max(floor);
        if self.short_pending {
            self.short_avg = r;
            self.short_pending = false;
        }
        if self.long_pending {
            self.long_avg = r;
            self.long_pending = false;
        }
    }

    /// Freeze fraction as seen by the serving BS.
    pub fn visible_freeze(&self, session: &FreezeStats) -> f64 {
        let frozen = session.frozen_time - self.freeze_origin.frozen_time;
        let total = session.session_time - self.freeze_origin.session_time;
        if total <= 0.0 {
            0.0
        } else {
            (frozen / total).clamp(0.0, 1.0)
        }
    }
}

/// Index of the strongest mean received power, in any monotone unit.
/// Ties keep `current`; otherwise the lowest index wins.
pub fn best_server_from_power(power: &[f64], current: Option<usize>) -> usize {
    let mut best = 0;
    for (m, &p) in power.iter().enumerate().skip(1) {
        if p > power[best] {
            best = m;
        }
    }
    match current {
        Some(c) if c < power.len() && power[c] >= power[best] => c,
        _ => best,
    }
}

/// Strongest base station by `tx − PL − shadowing` in dB, no fast fading.
pub fn best_server(
    user: Position,
    network: &HexNetwork,
    shadow_db: &[f64],
    cfg: &ChannelConfig,
    current: Option<usize>,
) -> usize {
    let tx = cfg.tx_power_dbm();
    let budget: Vec<f64> = network
        .cell_centers
        .iter()
        .zip(shadow_db)
        .map(|(c, s)| tx - path_loss_db(distance(user, *c) / 1000.0) - s)
        .collect();
    best_server_from_power(&budget, current)
}

/// Applies a serving-cell change for `user`, if any. The short-term average
/// is cell-local and always restarts; the long-term average and freeze
/// history survive only in multi-cell mode.
#[allow(clippy::too_many_arguments)]
pub fn maybe_handover(
    assoc: &mut Association,
    user: usize,
    new_best: usize,
    mode: HandoverMode,
    state: &mut LookbackState,
    session_freeze: &FreezeStats,
    now: f64,
) -> Option<HandoverRecord> {
    let from = assoc.serving_cell[user];
    if from == new_best {
        return None;
    }
    assoc.serving_cell[user] = new_best;
    state.short_pending = true;
    let (long_avg, freeze) = match mode {
        HandoverMode::MultiCell => (Some(state.long_avg), Some(state.visible_freeze(session_freeze))),
        HandoverMode::SingleCell => {
            state.long_pending = true;
            state.freeze_origin = *session_freeze;
            (None, None)
        }
    };
    Some(HandoverRecord {
        user,
        from,
        to: new_best,
        long_avg,
        freeze,
        timestamp: now,
    })
}
