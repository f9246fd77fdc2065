//! Multi-cell downlink scheduling simulator.
//!
//! A 19-cell (configurable) hexagonal network with random-waypoint users,
//! log-distance path loss, shadowing, Rayleigh fading and Shannon rates. Each
//! cell schedules one user per 1 ms TTI with one of eight rules: max-rate,
//! proportional fair on a short or long window, the queue-aware exponential
//! rule, and four long-term lookback variants whose long-term state (average
//! rate, video freeze fraction) is handed from cell to cell at handover.

pub mod channel;
pub mod config;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod handover;
pub mod metrics;
pub mod output;
pub mod rng;
pub mod scheduler;
pub mod sweep;
pub mod traffic;

pub use config::{Preset, ScenarioConfig, TrafficMode};
pub use engine::{run, run_scene, run_with_probe, MobilityPlan, Probe, RunLog, Scene, UserSetup};
pub use error::{ConfigError, SimError};
pub use handover::HandoverMode;
pub use metrics::RunReport;
pub use scheduler::{Rule, SchedulerParams};
pub use sweep::{sweep, SweepPoint};
