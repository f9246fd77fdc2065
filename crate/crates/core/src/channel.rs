//! Downlink link model: macro-cell path loss, log-normal shadowing,
//! Rayleigh block fading and Shannon rate with an SINR ceiling.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geometry::{distance, HexNetwork, Position};

/// Distances below this are clamped before evaluating path loss.
pub const MIN_DISTANCE_KM: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterferenceMode {
    /// Every other active base station interferes at full power.
    FullReuse,
    NoiseLimited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Informational only; the path-loss formula is fixed for 2 GHz.
    pub carrier_frequency: f64,
    pub bandwidth: f64,
    /// Watts.
    pub tx_power: f64,
    /// dBm/Hz.
    pub noise_density: f64,
    /// dB.
    pub ue_noise_figure: f64,
    /// Standard deviation of log-normal shadowing, dB.
    pub shadowing_std: f64,
    /// dB.
    pub sinr_clip: f64,
    pub interference_mode: InterferenceMode,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            carrier_frequency: 2.0e9,
            bandwidth: 10.0e6,
            tx_power: 40.0,
            noise_density: -174.0,
            ue_noise_figure: 9.0,
            shadowing_std: 8.0,
            sinr_clip: 20.0,
            interference_mode: InterferenceMode::FullReuse,
        }
    }
}

impl ChannelConfig {
    /// Receiver noise power in watts.
    pub fn noise_power(&self) -> f64 {
        let dbm = self.noise_density + 10.0 * self.bandwidth.log10() + self.ue_noise_figure;
        db_to_linear(dbm - 30.0)
    }

    pub fn tx_power_dbm(&self) -> f64 {
        10.0 * (self.tx_power * 1000.0).log10()
    }

    pub fn sinr_clip_linear(&self) -> f64 {
        db_to_linear(self.sinr_clip)
    }

    /// Highest rate the link model can produce.
    pub fn peak_rate(&self) -> f64 {
        achievable_rate(self.sinr_clip_linear(), self.bandwidth)
    }
}

/// Instantaneous state of one user–BS link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSample {
    pub path_loss: f64,
    pub shadowing: f64,
    pub fading_power_gain: f64,
    pub sinr: f64,
    pub rate: f64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// `128.1 + 37.6·log10(d)` with `d` in kilometers.
pub fn path_loss_db(d_km: f64) -> f64 {
    128.1 + 37.6 * d_km.max(MIN_DISTANCE_KM).log10()
}

pub fn sample_shadowing<R: Rng + ?Sized>(std_db: f64, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    z * std_db
}

/// Rayleigh envelope squared: exponential power gain with unit mean.
pub fn sample_fading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// Mean received power (watts) over a link before fast fading.
pub fn received_power(tx_power: f64, path_loss_db: f64, shadowing_db: f64) -> f64 {
    tx_power * db_to_linear(-(path_loss_db + shadowing_db))
}

/// `signal / (noise + interference)` capped at the clip level.
pub fn clipped_sinr(signal: f64, noise: f64, interference: f64, clip_linear: f64) -> f64 {
    let sinr = signal / (noise + interference);
    sinr.min(clip_linear)
}

/// Shannon rate, bits per second.
pub fn achievable_rate(sinr: f64, bandwidth: f64) -> f64 {
    bandwidth * (1.0 + sinr).log2()
}

/// Full evaluation of one serving link. `shadow_db[m]` holds this user's
/// shadowing towards base station `m`. Interferers use unit fading gain.
pub fn compute_link(
    user: Position,
    serving: usize,
    network: &HexNetwork,
    shadow_db: &[f64],
    fading_gain: f64,
    cfg: &ChannelConfig,
) -> LinkSample {
    let pl = |m: usize| path_loss_db(distance(user, network.cell_centers[m]) / 1000.0);
    let path_loss = pl(serving);
    let signal = received_power(cfg.tx_power, path_loss, shadow_db[serving]) * fading_gain;
    let interference = match cfg.interference_mode {
        InterferenceMode::NoiseLimited => 0.0,
        InterferenceMode::FullReuse => (0..network.num_cells())
            .filter(|&m| m != serving)
            .map(|m| received_power(cfg.tx_power, pl(m), shadow_db[m]))
            .sum(),
    };
    let sinr = clipped_sinr(signal, cfg.noise_power(), interference, cfg.sinr_clip_linear());
    LinkSample {
        path_loss,
        shadowing: shadow_db[serving],
        fading_power_gain: fading_gain,
        sinr,
        rate: achievable_rate(sinr, cfg.bandwidth),
    }
}

pub fn compute_sinr(
    user: Position,
    serving: usize,
    network: &HexNetwork,
    shadow_db: &[f64],
    fading_gain: f64,
    cfg: &ChannelConfig,
) -> f64 {
    compute_link(user, serving, network, shadow_db, fading_gain, cfg).sinr
}
