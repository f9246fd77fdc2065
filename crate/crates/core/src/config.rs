//! Scenario configuration and its flat text format.
//!
//! ```text
//! # comments start with '#'
//! [scheduler]
//! rule = ll-pf-exp
//! alpha = 0.05
//!
//! users.count = 60        # dotted keys work with or without a section
//! ```
//!
//! Every key is optional; missing keys keep the defaults of the chosen preset.
//! See [`KEYS`] for the full schema.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelConfig, InterferenceMode};
use crate::error::ConfigError;
use crate::handover::HandoverMode;
use crate::scheduler::{SchedulerParams, SigmoidVariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrafficMode {
    FullBuffer,
    /// Constant-rate arrivals feeding a client playback buffer.
    Cbr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Paper,
    Desk,
}

impl FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            other => Err(format!("unknown preset `{other}` (expected paper or desk)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub rings: u32,
    /// meters
    pub inter_bs_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsersConfig {
    pub count: usize,
    /// m/s
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    pub carrier_frequency: f64,
    pub bandwidth_full_buffer: f64,
    pub bandwidth_streaming: f64,
    pub tx_power: f64,
    pub noise_density: f64,
    pub noise_figure: f64,
    pub shadowing_std: f64,
    /// Travel distance (m) after which shadowing is redrawn.
    pub shadowing_decorrelation: f64,
    pub sinr_clip: f64,
    pub interference: InterferenceMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficConfig {
    pub mode: TrafficMode,
    /// bits/s
    pub arrival_rate: f64,
    /// bits/s
    pub stream_rate: f64,
    /// seconds of content
    pub playback_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandoverConfig {
    pub mode: HandoverMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// seconds
    pub time: f64,
    pub warm_up: f64,
    pub tti: f64,
    /// Mobility, shadowing and association cadence, seconds.
    pub update_interval: f64,
    pub seed: u64,
    /// Keep every scheduling decision in the run log.
    pub decision_log: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub network: NetworkConfig,
    pub users: UsersConfig,
    pub channel: RadioConfig,
    pub traffic: TrafficConfig,
    pub scheduler: SchedulerParams,
    pub handover: HandoverConfig,
    pub sim: SimConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::preset(Preset::Paper)
    }
}

/// All recognized keys, in rendering order.
pub const KEYS: &[&str] = &[
    "network.rings",
    "network.inter_bs_distance",
    "users.count",
    "users.speed",
    "channel.carrier_frequency",
    "channel.bandwidth_full_buffer",
    "channel.bandwidth_streaming",
    "channel.tx_power",
    "channel.noise_density",
    "channel.noise_figure",
    "channel.shadowing_std",
    "channel.shadowing_decorrelation",
    "channel.sinr_clip",
    "channel.interference",
    "traffic.mode",
    "traffic.arrival_rate",
    "traffic.stream_rate",
    "traffic.playback_threshold",
    "scheduler.rule",
    "scheduler.w_short",
    "scheduler.w_long",
    "scheduler.alpha",
    "scheduler.beta",
    "scheduler.steepness",
    "scheduler.queue_weight",
    "scheduler.queue_scale",
    "scheduler.rate_floor",
    "scheduler.freeze_floor",
    "scheduler.sigmoid",
    "handover.mode",
    "sim.time",
    "sim.warm_up",
    "sim.tti",
    "sim.update_interval",
    "sim.seed",
    "sim.decision_log",
];

/// Short names accepted wherever a key is expected (sweep axes, `--set`).
const ALIASES: &[(&str, &str)] = &[
    ("W", "scheduler.w_long"),
    ("w_short", "scheduler.w_short"),
    ("w_long", "scheduler.w_long"),
    ("alpha", "scheduler.alpha"),
    ("beta", "scheduler.beta"),
    ("c", "scheduler.steepness"),
    ("N", "users.count"),
    ("lambda", "traffic.arrival_rate"),
    ("rule", "scheduler.rule"),
    ("handover", "handover.mode"),
    ("seed", "sim.seed"),
];

/// Resolves an alias or full key to its canonical dotted form.
pub fn canonical_key(key: &str) -> Option<&'static str> {
    let key = key.trim();
    if let Some(k) = KEYS.iter().find(|k| **k == key) {
        return Some(k);
    }
    ALIASES.iter().find(|(a, _)| *a == key).map(|(_, k)| *k)
}

fn num(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = value.parse().map_err(|_| invalid(key, value, "expected a number"))?;
    if !v.is_finite() {
        return Err(invalid(key, value, "must be finite"));
    }
    Ok(v)
}

fn uint<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| invalid(key, value, "expected a non-negative integer"))
}

fn boolean(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(invalid(key, value, "expected true or false")),
    }
}

fn invalid(key: &str, value: &str, reason: &str) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

fn interference_name(m: InterferenceMode) -> &'static str {
    match m {
        InterferenceMode::FullReuse => "full-reuse",
        InterferenceMode::NoiseLimited => "noise-limited",
    }
}

fn traffic_name(m: TrafficMode) -> &'static str {
    match m {
        TrafficMode::FullBuffer => "full-buffer",
        TrafficMode::Cbr => "cbr",
    }
}

fn handover_name(m: HandoverMode) -> &'static str {
    match m {
        HandoverMode::MultiCell => "multi-cell",
        HandoverMode::SingleCell => "single-cell",
    }
}

fn sigmoid_name(m: SigmoidVariant) -> &'static str {
    match m {
        SigmoidVariant::Literal => "literal",
        SigmoidVariant::Mirrored => "mirrored",
    }
}

impl ScenarioConfig {
    pub fn preset(preset: Preset) -> Self {
        let base = Self {
            network: NetworkConfig {
                rings: 2,
                inter_bs_distance: 1000.0,
            },
            users: UsersConfig {
                count: 200,
                speed: 40.0 / 3.6,
            },
            channel: RadioConfig {
                carrier_frequency: 2.0e9,
                bandwidth_full_buffer: 10.0e6,
                bandwidth_streaming: 5.0e6,
                tx_power: 40.0,
                noise_density: -174.0,
                noise_figure: 9.0,
                shadowing_std: 8.0,
                shadowing_decorrelation: 50.0,
                sinr_clip: 20.0,
                interference: InterferenceMode::FullReuse,
            },
            traffic: TrafficConfig {
                mode: TrafficMode::FullBuffer,
                arrival_rate: 12.0e6,
                stream_rate: 1.5e6,
                playback_threshold: 5.0,
            },
            scheduler: SchedulerParams::default(),
            handover: HandoverConfig {
                mode: HandoverMode::MultiCell,
            },
            sim: SimConfig {
                time: 500.0,
                warm_up: 200.0,
                tti: 0.001,
                update_interval: 0.1,
                seed: 1,
                decision_log: false,
            },
        };
        match preset {
            Preset::Paper => base,
            Preset::Desk => Self {
                users: UsersConfig {
                    count: 60,
                    ..base.users
                },
                sim: SimConfig {
                    time: 120.0,
                    warm_up: 30.0,
                    ..base.sim
                },
                ..base
            },
        }
    }

    /// Channel parameters for the configured traffic mode.
    pub fn channel_config(&self) -> ChannelConfig {
        let c = &self.channel;
        ChannelConfig {
            carrier_frequency: c.carrier_frequency,
            bandwidth: match self.traffic.mode {
                TrafficMode::FullBuffer => c.bandwidth_full_buffer,
                TrafficMode::Cbr => c.bandwidth_streaming,
            },
            tx_power: c.tx_power,
            noise_density: c.noise_density,
            ue_noise_figure: c.noise_figure,
            shadowing_std: c.shadowing_std,
            sinr_clip: c.sinr_clip,
            interference_mode: c.interference,
        }
    }

    /// Sets one key (full dotted name or alias) from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let canonical = canonical_key(key).ok_or_else(|| ConfigError::UnknownKey(key.trim().to_string()))?;
        let v = value.trim();
        let k = canonical;
        match k {
            "network.rings" => self.network.rings = uint(k, v)?,
            "network.inter_bs_distance" => self.network.inter_bs_distance = num(k, v)?,
            "users.count" => self.users.count = uint(k, v)?,
            "users.speed" => self.users.speed = num(k, v)?,
            "channel.carrier_frequency" => self.channel.carrier_frequency = num(k, v)?,
            "channel.bandwidth_full_buffer" => self.channel.bandwidth_full_buffer = num(k, v)?,
            "channel.bandwidth_streaming" => self.channel.bandwidth_streaming = num(k, v)?,
            "channel.tx_power" => self.channel.tx_power = num(k, v)?,
            "channel.noise_density" => self.channel.noise_density = num(k, v)?,
            "channel.noise_figure" => self.channel.noise_figure = num(k, v)?,
            "channel.shadowing_std" => self.channel.shadowing_std = num(k, v)?,
            "channel.shadowing_decorrelation" => self.channel.shadowing_decorrelation = num(k, v)?,
            "channel.sinr_clip" => self.channel.sinr_clip = num(k, v)?,
            "channel.interference" => {
                self.channel.interference = match v {
                    "full-reuse" => InterferenceMode::FullReuse,
                    "noise-limited" => InterferenceMode::NoiseLimited,
                    _ => return Err(invalid(k, v, "expected full-reuse or noise-limited")),
                }
            }
            "traffic.mode" => {
                self.traffic.mode = match v {
                    "full-buffer" => TrafficMode::FullBuffer,
                    "cbr" => TrafficMode::Cbr,
                    _ => return Err(invalid(k, v, "expected full-buffer or cbr")),
                }
            }
            "traffic.arrival_rate" => self.traffic.arrival_rate = num(k, v)?,
            "traffic.stream_rate" => self.traffic.stream_rate = num(k, v)?,
            "traffic.playback_threshold" => self.traffic.playback_threshold = num(k, v)?,
            "scheduler.rule" => self.scheduler.rule = v.parse().map_err(|e: String| invalid(k, v, &e))?,
            "scheduler.w_short" => self.scheduler.w_short = num(k, v)?,
            "scheduler.w_long" => self.scheduler.w_long = num(k, v)?,
            "scheduler.alpha" => self.scheduler.alpha = num(k, v)?,
            "scheduler.beta" => self.scheduler.beta = num(k, v)?,
            "scheduler.steepness" => self.scheduler.steepness = num(k, v)?,
            "scheduler.queue_weight" => self.scheduler.queue_weight = num(k, v)?,
            "scheduler.queue_scale" => self.scheduler.queue_scale = num(k, v)?,
            "scheduler.rate_floor" => self.scheduler.rate_floor = num(k, v)?,
            "scheduler.freeze_floor" => self.scheduler.freeze_floor = num(k, v)?,
            "scheduler.sigmoid" => {
                self.scheduler.sigmoid = match v {
                    "literal" => SigmoidVariant::Literal,
                    "mirrored" => SigmoidVariant::Mirrored,
                    _ => return Err(invalid(k, v, "expected literal or mirrored")),
                }
            }
            "handover.mode" => {
                self.handover.mode = match v {
                    "multi-cell" => HandoverMode::MultiCell,
                    "single-cell" => HandoverMode::SingleCell,
                    _ => return Err(invalid(k, v, "expected multi-cell or single-cell")),
                }
            }
            "sim.time" => self.sim.time = num(k, v)?,
            "sim.warm_up" => self.sim.warm_up = num(k, v)?,
            "sim.tti" => self.sim.tti = num(k, v)?,
            "sim.update_interval" => self.sim.update_interval = num(k, v)?,
            "sim.seed" => self.sim.seed = uint(k, v)?,
            "sim.decision_log" => self.sim.decision_log = boolean(k, v)?,
            _ => unreachable!("key table and setter out of sync: {k}"),
        }
        Ok(())
    }

    /// Text value of a key, in the same format [`set`](Self::set) accepts.
    pub fn get(&self, key: &str) -> Option<String> {
        let k = canonical_key(key)?;
        Some(match k {
            "network.rings" => self.network.rings.to_string(),
            "network.inter_bs_distance" => self.network.inter_bs_distance.to_string(),
            "users.count" => self.users.count.to_string(),
            "users.speed" => self.users.speed.to_string(),
            "channel.carrier_frequency" => self.channel.carrier_frequency.to_string(),
            "channel.bandwidth_full_buffer" => self.channel.bandwidth_full_buffer.to_string(),
            "channel.bandwidth_streaming" => self.channel.bandwidth_streaming.to_string(),
            "channel.tx_power" => self.channel.tx_power.to_string(),
            "channel.noise_density" => self.channel.noise_density.to_string(),
            "channel.noise_figure" => self.channel.noise_figure.to_string(),
            "channel.shadowing_std" => self.channel.shadowing_std.to_string(),
            "channel.shadowing_decorrelation" => self.channel.shadowing_decorrelation.to_string(),
            "channel.sinr_clip" => self.channel.sinr_clip.to_string(),
            "channel.interference" => interference_name(self.channel.interference).to_string(),
            "traffic.mode" => traffic_name(self.traffic.mode).to_string(),
            "traffic.arrival_rate" => self.traffic.arrival_rate.to_string(),
            "traffic.stream_rate" => self.traffic.stream_rate.to_string(),
            "traffic.playback_threshold" => self.traffic.playback_threshold.to_string(),
            "scheduler.rule" => self.scheduler.rule.name().to_string(),
            "scheduler.w_short" => self.scheduler.w_short.to_string(),
            "scheduler.w_long" => self.scheduler.w_long.to_string(),
            "scheduler.alpha" => self.scheduler.alpha.to_string(),
            "scheduler.beta" => self.scheduler.beta.to_string(),
            "scheduler.steepness" => self.scheduler.steepness.to_string(),
            "scheduler.queue_weight" => self.scheduler.queue_weight.to_string(),
            "scheduler.queue_scale" => self.scheduler.queue_scale.to_string(),
            "scheduler.rate_floor" => self.scheduler.rate_floor.to_string(),
            "scheduler.freeze_floor" => self.scheduler.freeze_floor.to_string(),
            "scheduler.sigmoid" => sigmoid_name(self.scheduler.sigmoid).to_string(),
            "handover.mode" => handover_name(self.handover.mode).to_string(),
            "sim.time" => self.sim.time.to_string(),
            "sim.warm_up" => self.sim.warm_up.to_string(),
            "sim.tti" => self.sim.tti.to_string(),
            "sim.update_interval" => self.sim.update_interval.to_string(),
            "sim.seed" => self.sim.seed.to_string(),
            "sim.decision_log" => self.sim.decision_log.to_string(),
            _ => return None,
        })
    }

    /// Applies a config file on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (line, key, value) in parse_entries(text)? {
            self.set(&key, &value).map_err(|e| match e {
                ConfigError::UnknownKey(k) => ConfigError::Syntax {
                    line,
                    message: format!("unknown key `{k}`"),
                },
                ConfigError::InvalidValue { key, value, reason } => ConfigError::Syntax {
                    line,
                    message: format!("invalid value `{value}` for `{key}`: {reason}"),
                },
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn from_text(preset: Preset, text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::preset(preset);
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Renders every key in sectioned form; parsing the output reproduces
    /// `self` exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for key in KEYS {
            let (sec, name) = key.split_once('.').expect("keys are dotted");
            if sec != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{sec}]");
                section = sec;
            }
            let _ = writeln!(out, "{name} = {}", self.get(key).expect("known key"));
        }
        out
    }

    /// Number of TTIs per second; `tti` must divide one second.
    pub fn ttis_per_second(&self) -> usize {
        (1.0 / self.sim.tti).round() as usize
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Inconsistent(m.to_string()));
        let s = &self.sim;
        if !(s.tti > 0.0) {
            return bad("sim.tti must be positive");
        }
        let per_sec = 1.0 / s.tti;
        if (per_sec - per_sec.round()).abs() > 1e-6 {
            return bad("sim.tti must divide one second");
        }
        let whole = |x: f64| (x - x.round()).abs() < 1e-9;
        if !(s.warm_up >= 0.0 && s.warm_up < s.time) {
            return bad("sim.warm_up must be non-negative and below sim.time");
        }
        if !whole(s.time) || !whole(s.warm_up) {
            return bad("sim.time and sim.warm_up must be whole seconds");
        }
        let ratio = s.update_interval / s.tti;
        if !(s.update_interval >= s.tti) || (ratio - ratio.round()).abs() > 1e-6 {
            return bad("sim.update_interval must be a positive multiple of sim.tti");
        }
        if self.users.count == 0 {
            return bad("users.count must be at least 1");
        }
        if !(self.users.speed >= 0.0) {
            return bad("users.speed must be non-negative");
        }
        if !(self.network.inter_bs_distance > 0.0) {
            return bad("network.inter_bs_distance must be positive");
        }
        let c = &self.channel;
        if !(c.bandwidth_full_buffer > 0.0 && c.bandwidth_streaming > 0.0 && c.tx_power > 0.0) {
            return bad("bandwidths and tx power must be positive");
        }
        if !(c.shadowing_std >= 0.0 && c.shadowing_decorrelation > 0.0) {
            return bad("shadowing std must be non-negative and decorrelation distance positive");
        }
        let p = &self.scheduler;
        if !(p.w_short >= s.tti && p.w_long >= s.tti) {
            return bad("averaging windows must span at least one TTI");
        }
        if !(p.beta > 0.0 && p.beta < 1.0) {
            return bad("scheduler.beta must lie in (0, 1)");
        }
        if !(p.steepness > 0.0) {
            return bad("scheduler.steepness must be positive");
        }
        if !(p.rate_floor > 0.0 && p.freeze_floor > 0.0) {
            return bad("rate and freeze floors must be positive");
        }
        if !(p.alpha >= 0.0 && p.queue_weight >= 0.0 && p.queue_scale > 0.0) {
            return bad("alpha and queue weight must be non-negative, queue scale positive");
        }
        let t = &self.traffic;
        if t.mode == TrafficMode::Cbr && !(t.arrival_rate >= 0.0 && t.stream_rate > 0.0 && t.playback_threshold >= 0.0) {
            return bad("cbr traffic needs a non-negative arrival rate, positive stream rate and threshold >= 0");
        }
        if t.mode == TrafficMode::FullBuffer && p.rule.uses_freeze() {
            return bad("ll-exp-freeze needs playback buffers (traffic.mode = cbr)");
        }
        Ok(())
    }
}

/// Splits config text into `(line, dotted key, value)` triples.
pub fn parse_entries(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut section: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line,
                message: "unterminated section header".into(),
            })?;
            let name = name.trim();
            if !valid_ident_path(name) {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("invalid section name `{name}`"),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim();
        if !valid_ident_path(key) {
            return Err(ConfigError::Syntax {
                line,
                message: format!("invalid key `{key}`"),
            });
        }
        let full = match &section {
            Some(s) => format!("{s}.{key}"),
            None => key.to_string(),
        };
        let mut value = value.trim();
        if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
            value = &value[1..value.len() - 1];
        }
        if value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: format!("missing value for `{full}`"),
            });
        }
        if !seen.insert(full.clone()) {
            return Err(ConfigError::Duplicate { line, key: full });
        }
        out.push((line, full, value.to_string()));
    }
    Ok(out)
}

fn valid_ident_path(s: &str) -> bool {
    !s.is_empty()
        && s.split('.')
            .all(|part| !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'))
}

/// Parses a `key=value` override as given to `--set`.
pub fn parse_override(arg: &str) -> Result<(String, String), ConfigError> {
    let (k, v) = arg.split_once('=').ok_or_else(|| ConfigError::Syntax {
        line: 0,
        message: format!("override `{arg}` is not of the form key=value"),
    })?;
    let k = k.trim();
    let v = v.trim();
    if canonical_key(k).is_none() {
        return Err(ConfigError::UnknownKey(k.to_string()));
    }
    if v.is_empty() {
        return Err(invalid(k, v, "empty value"));
    }
    Ok((k.to_string(), v.to_string()))
}
