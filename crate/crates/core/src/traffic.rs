//! Base-station user queues and client playback buffers.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QueueMode {
    /// Unbounded backlog; the BS always has data for the user.
    FullBuffer,
    /// Constant-rate arrivals into a finite backlog.
    Cbr,
}

/// Per-user downlink queue held at the base station (fluid, in bits).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsQueue {
    pub backlog: f64,
    /// bits/s
    pub arrival_rate: f64,
    pub mode: QueueMode,
}

impl BsQueue {
    pub fn full_buffer() -> Self {
        Self {
            backlog: f64::INFINITY,
            arrival_rate: 0.0,
            mode: QueueMode::FullBuffer,
        }
    }

    pub fn cbr(arrival_rate: f64) -> Self {
        Self {
            backlog: 0.0,
            arrival_rate,
            mode: QueueMode::Cbr,
        }
    }

    /// Adds `λ·dt` bits in CBR mode; returns the bits added.
    pub fn enqueue_arrivals(&mut self, dt: f64) -> f64 {
        match self.mode {
            QueueMode::FullBuffer => 0.0,
            QueueMode::Cbr => {
                let bits = self.arrival_rate * dt;
                self.backlog += bits;
                bits
            }
        }
    }

    /// Serves up to `offered` bits and returns what was actually served.
    pub fn serve(&mut self, offered: f64) -> f64 {
        debug_assert!(offered >= 0.0);
        match self.mode {
            QueueMode::FullBuffer => offered,
            QueueMode::Cbr => {
                let served = offered.min(self.backlog);
                self.backlog -= served;
                if self.backlog < 0.0 {
                    self.backlog = 0.0;
                }
                served
            }
        }
    }

    pub fn has_data(&self) -> bool {
        match self.mode {
            QueueMode::FullBuffer => true,
            QueueMode::Cbr => self.backlog > 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlaybackState {
    Playing,
    Frozen,
}

/// Client-side media buffer, measured in seconds of content.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaybackBuffer {
    pub content: f64,
    /// bits/s
    pub stream_rate: f64,
    /// Seconds of content needed to (re)start playback.
    pub threshold: f64,
    pub state: PlaybackState,
    /// False until the buffer first reaches the threshold. Startup buffering
    /// is not counted as freezing.
    pub started: bool,
    /// Seconds of media played out so far.
    pub played: f64,
}

impl PlaybackBuffer {
    pub fn new(stream_rate: f64, threshold: f64) -> Self {
        Self {
            content: 0.0,
            stream_rate,
            threshold,
            state: PlaybackState::Frozen,
            started: false,
            played: 0.0,
        }
    }

    pub fn is_stalled(&self) -> bool {
        self.started && self.state == PlaybackState::Frozen
    }
}

/// Stall bookkeeping for one playback session.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FreezeStats {
    pub frozen_time: f64,
    pub session_time: f64,
}

impl FreezeStats {
    pub fn freeze_fraction(&self) -> f64 {
        freeze_fraction(self)
    }
}

pub fn freeze_fraction(stats: &FreezeStats) -> f64 {
    if stats.session_time <= 0.0 {
        0.0
    } else {
        (stats.frozen_time / stats.session_time).clamp(0.0, 1.0)
    }
}

/// Advances the playback buffer by `dt` seconds after `delivered` bits
/// arrived. Transitions are evaluated against the state at the start of the
/// step: a playing buffer that drains freezes at the end of the step, and a
/// frozen buffer that refills to the threshold resumes at the end of the step.
pub fn playback_step(buffer: &mut PlaybackBuffer, delivered: f64, dt: f64, stats: &mut FreezeStats) {
    debug_assert!(dt > 0.0 && delivered >= 0.0);
    buffer.content += delivered / buffer.stream_rate;
    match buffer.state {
        PlaybackState::Playing => {
            let consumed = dt.min(buffer.content);
            buffer.content -= consumed;
            buffer.played += consumed;
            if buffer.content <= 0.0 {
                buffer.content = 0.0;
                buffer.state = PlaybackState::Frozen;
            }
        }
        PlaybackState::Frozen => {
            if buffer.started {
                stats.frozen_time += dt;
            }
            if buffer.content >= buffer.threshold {
                buffer.state = PlaybackState::Playing;
                buffer.started = true;
            }
        }
    }
    if buffer.started {
        stats.session_time += dt;
    }
}
