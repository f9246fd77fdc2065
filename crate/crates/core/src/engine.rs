//! The per-TTI simulation loop.
//!
//! Each TTI runs, in order: the periodic mobility/shadowing/association
//! update, channel sampling (the rate a user reports now is the rate the BS
//! schedules on in the next TTI), CBR arrivals, one scheduling decision per
//! cell, playback, moving-average updates and metric binning.

use serde::{Deserialize, Serialize};

use crate::channel::{achievable_rate, path_loss_db, received_power, sample_fading, sample_shadowing, InterferenceMode};
use crate::config::{ScenarioConfig, TrafficMode};
use crate::error::Result;
use crate::geometry::{distance, HexNetwork, MobilityState, Position};
use crate::handover::{best_server_from_power, maybe_handover, Association, HandoverRecord, LookbackState};
use crate::metrics::{Bin, RunReport, UserTrace};
use crate::rng::{stream, Purpose, StreamRng};
use crate::scheduler::{update_moving_average, Observables, Scheduler, Scratch};
use crate::traffic::{playback_step, BsQueue, FreezeStats, PlaybackBuffer};

/// How one user moves.
#[derive(Debug, Clone, PartialEq)]
pub enum MobilityPlan {
    /// Random waypoint over the network region at the given speed (m/s).
    RandomWaypoint { speed: f64 },
    /// Walks the polyline at `speed` and stays at its last point.
    Scripted { path: Vec<Position>, speed: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserSetup {
    pub mobility: MobilityPlan,
    /// Per-user CBR arrival rate; `None` uses the configured rate.
    pub arrival_rate: Option<f64>,
}

/// Cell layout and user population for a run.
#[derive(Debug, Clone)]
pub struct Scene {
    pub network: HexNetwork,
    pub users: Vec<UserSetup>,
}

impl Scene {
    /// The configured hexagonal network with `users.count` random-waypoint users.
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            network: HexNetwork::build(cfg.network.rings, cfg.network.inter_bs_distance),
            users: (0..cfg.users.count)
                .map(|_| UserSetup {
                    mobility: MobilityPlan::RandomWaypoint { speed: cfg.users.speed },
                    arrival_rate: None,
                })
                .collect(),
        }
    }
}

/// Hooks into the loop for tests and tracing. All methods default to no-ops.
pub trait Probe {
    /// After each periodic update (and once at start-up).
    fn on_update(&mut self, _tti: u64, _user: usize, _position: Position, _serving: usize, _shadow_db: &[f64]) {}
    /// Channel sample taken in `tti`, to be used for the decision in `tti + 1`.
    fn on_channel(&mut self, _tti: u64, _user: usize, _fading_gain: f64, _rate: f64) {}
    fn on_arrival(&mut self, _tti: u64, _user: usize, _bits: f64) {}
    /// One scheduling decision; `decision_rate` is the reported rate used.
    fn on_serve(&mut self, _tti: u64, _cell: usize, _user: usize, _decision_rate: f64, _served_bits: f64) {}
    /// End-of-TTI per-user state after the moving-average update.
    fn on_user_tti(&mut self, _tti: u64, _user: usize, _scheduled: bool, _served_rate: f64, _state: &LookbackState) {}
}

/// A probe that records nothing.
pub struct NoProbe;
impl Probe for NoProbe {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub tti: u64,
    pub cell: usize,
    pub user: usize,
    pub rate: f64,
    pub served_bits: f64,
}

/// End-of-run bit accounting for one user.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UserLedger {
    pub arrived_bits: f64,
    pub delivered_bits: f64,
    /// `None` under full buffer.
    pub backlog_bits: Option<f64>,
    pub played_bits: f64,
    pub buffered_bits: f64,
    pub session_freeze_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct RunLog {
    pub config: ScenarioConfig,
    pub report: RunReport,
    pub traces: Vec<UserTrace>,
    pub handovers: Vec<HandoverRecord>,
    pub decisions: Vec<DecisionRecord>,
    pub ledgers: Vec<UserLedger>,
}

enum Mover {
    Rwp(MobilityState),
    Scripted {
        position: Position,
        path: Vec<Position>,
        next: usize,
        speed: f64,
    },
}

impl Mover {
    fn position(&self) -> Position {
        match self {
            Mover::Rwp(m) => m.position,
            Mover::Scripted { position, .. } => *position,
        }
    }

    fn is_static(&self) -> bool {
        match self {
            Mover::Rwp(m) => m.speed == 0.0,
            Mover::Scripted { path, next, speed, .. } => *speed == 0.0 || *next >= path.len(),
        }
    }

    fn advance(&mut self, dt: f64, network: &HexNetwork, rng: &mut StreamRng) -> f64 {
        match self {
            Mover::Rwp(m) => m.advance(dt, network, rng),
            Mover::Scripted { position, path, next, speed } => {
                let mut remaining = *speed * dt;
                let total = remaining;
                while remaining > 0.0 && *next < path.len() {
                    let target = path[*next];
                    let d = distance(*position, target);
                    if d > remaining {
                        let f = remaining / d;
                        position.x += (target.x - position.x) * f;
                        position.y += (target.y - position.y) * f;
                        remaining = 0.0;
                    } else {
                        *position = target;
                        remaining -= d;
                        *next += 1;
                    }
                }
                total - remaining
            }
        }
    }
}

struct UserRt {
    mover: Mover,
    mob_rng: StreamRng,
    shadow_rng: StreamRng,
    fade_rng: StreamRng,
    shadow_db: Vec<f64>,
    since_shadow: f64,
    lookback: LookbackState,
    queue: BsQueue,
    playback: Option<PlaybackBuffer>,
    session: FreezeStats,
    /// Rate reported in the previous TTI; `None` right after start or a handover.
    reported: Option<f64>,
    pending: f64,
    /// Mean power from the serving BS and the sum over all other BSs.
    serving_power: f64,
    other_power: f64,
    ledger: UserLedger,
}

/// Runs the configured scenario on its default hexagonal scene.
pub fn run(cfg: &ScenarioConfig) -> Result<RunLog> {
    run_scene(cfg, &Scene::from_config(cfg), &mut NoProbe)
}

pub fn run_with_probe<P: Probe>(cfg: &ScenarioConfig, probe: &mut P) -> Result<RunLog> {
    run_scene(cfg, &Scene::from_config(cfg), probe)
}

pub fn run_scene<P: Probe>(cfg: &ScenarioConfig, scene: &Scene, probe: &mut P) -> Result<RunLog> {
    cfg.validate()?;
    let net = &scene.network;
    let chan = cfg.channel_config();
    let num_cells = net.num_cells();
    let num_users = scene.users.len();
    let tti = cfg.sim.tti;
    let per_sec = cfg.ttis_per_second();
    let total_ttis = (cfg.sim.time * per_sec as f64).round() as u64;
    let warm_ttis = (cfg.sim.warm_up * per_sec as f64).round() as u64;
    let measured_secs = ((total_ttis - warm_ttis) / per_sec as u64) as usize;
    let update_every = (cfg.sim.update_interval / tti).round() as u64;
    let noise = chan.noise_power();
    let clip = chan.sinr_clip_linear();
    let bandwidth = chan.bandwidth;
    let full_reuse = chan.interference_mode == InterferenceMode::FullReuse;
    let params = &cfg.scheduler;
    let floor = params.rate_floor;
    let short_slots = (params.w_short / tti).max(1.0);
    let long_slots = (params.w_long / tti).max(1.0);
    let cbr = cfg.traffic.mode == TrafficMode::Cbr;
    let seed = cfg.sim.seed;
    let scheduler = Scheduler::new(params.clone());

    // Mean received power per (user, cell), row-major.
    let mut power = vec![0.0f64; num_users * num_cells];
    let mut users: Vec<UserRt> = Vec::with_capacity(num_users);
    for (u, setup) in scene.users.iter().enumerate() {
        let mut mob_rng = stream(seed, Purpose::Mobility, u as u64);
        let mut shadow_rng = stream(seed, Purpose::Shadowing, u as u64);
        let fade_rng = stream(seed, Purpose::Fading, u as u64);
        let mover = match &setup.mobility {
            MobilityPlan::RandomWaypoint { speed } => Mover::Rwp(MobilityState::new(net, *speed, &mut mob_rng)),
            MobilityPlan::Scripted { path, speed } => Mover::Scripted {
                position: path.first().copied().unwrap_or(Position::ORIGIN),
                path: path.clone(),
                next: 1,
                speed: *speed,
            },
        };
        let shadow_db = (0..num_cells)
            .map(|_| sample_shadowing(chan.shadowing_std, &mut shadow_rng))
            .collect();
        let queue = if cbr {
            BsQueue::cbr(setup.arrival_rate.unwrap_or(cfg.traffic.arrival_rate))
        } else {
            BsQueue::full_buffer()
        };
        users.push(UserRt {
            mover,
            mob_rng,
            shadow_rng,
            fade_rng,
            shadow_db,
            since_shadow: 0.0,
            lookback: LookbackState::default(),
            queue,
            playback: cbr.then(|| PlaybackBuffer::new(cfg.traffic.stream_rate, cfg.traffic.playback_threshold)),
            session: FreezeStats::default(),
            reported: None,
            pending: 0.0,
            serving_power: 0.0,
            other_power: 0.0,
            ledger: UserLedger::default(),
        });
    }

    let refresh_power = |u: usize, user: &UserRt, power: &mut [f64]| {
        let pos = user.mover.position();
        let row = &mut power[u * num_cells..(u + 1) * num_cells];
        for (m, c) in net.cell_centers.iter().enumerate() {
            row[m] = received_power(chan.tx_power, path_loss_db(distance(pos, *c) / 1000.0), user.shadow_db[m]);
        }
    };

    let mut assoc = Association {
        serving_cell: vec![0; num_users],
        time_of_last_check: 0.0,
    };
    for (u, user) in users.iter().enumerate() {
        refresh_power(u, user, &mut power);
        assoc.serving_cell[u] = best_server_from_power(&power[u * num_cells..(u + 1) * num_cells], None);
    }

    let mut handovers = Vec::new();
    let mut decisions = Vec::new();
    let mut traces: Vec<UserTrace> = (0..num_users)
        .map(|u| UserTrace {
            bins: vec![
                Bin {
                    bits: 0.0,
                    serving_cell: assoc.serving_cell[u],
                    frozen_ttis: 0,
                    session_ttis: 0,
                };
                measured_secs
            ],
            streaming: cbr,
        })
        .collect();

    let mut cell_users: Vec<Vec<usize>> = vec![Vec::new(); num_cells];
    let mut cell_active = vec![true; num_cells];
    let mut inactive: Vec<usize> = Vec::new();
    let mut served_bits = vec![0.0f64; num_users];
    let mut scheduled = vec![false; num_users];
    let mut cands: Vec<Observables> = Vec::new();
    let mut cand_ids: Vec<usize> = Vec::new();
    let mut scratch = Scratch::default();
    let mut membership_dirty = true;

    for k in 0..total_ttis {
        let now = k as f64 * tti;

        // (1) Mobility, shadowing and association.
        if k % update_every == 0 {
            for (u, user) in users.iter_mut().enumerate() {
                if k > 0 && !user.mover.is_static() {
                    let moved = user.mover.advance(cfg.sim.update_interval, net, &mut user.mob_rng);
                    user.since_shadow += moved;
                    if user.since_shadow >= cfg.channel.shadowing_decorrelation {
                        user.since_shadow %= cfg.channel.shadowing_decorrelation;
                        for s in user.shadow_db.iter_mut() {
                            *s = sample_shadowing(chan.shadowing_std, &mut user.shadow_rng);
                        }
                    }
                    refresh_power(u, user, &mut power);
                }
                let row = &power[u * num_cells..(u + 1) * num_cells];
                let best = best_server_from_power(row, Some(assoc.serving_cell[u]));
                if let Some(rec) = maybe_handover(
                    &mut assoc,
                    u,
                    best,
                    cfg.handover.mode,
                    &mut user.lookback,
                    &user.session,
                    now,
                ) {
                    handovers.push(rec);
                    user.reported = None;
                    membership_dirty = true;
                }
                let serving = assoc.serving_cell[u];
                user.serving_power = row[serving];
                user.other_power = row.iter().enumerate().filter(|(m, _)| *m != serving).map(|(_, p)| p).sum();
                probe.on_update(k, u, user.mover.position(), serving, &user.shadow_db);
            }
            assoc.time_of_last_check = now;
            if membership_dirty {
                for list in cell_users.iter_mut() {
                    list.clear();
                }
                for u in 0..num_users {
                    cell_users[assoc.serving_cell[u]].push(u);
                }
                membership_dirty = false;
            }
        }

        // (2) Channel sampling. Cells without anything to send stay silent.
        inactive.clear();
        for m in 0..num_cells {
            cell_active[m] = cell_users[m].iter().any(|&u| users[u].queue.has_data());
            if !cell_active[m] {
                inactive.push(m);
            }
        }
        for (u, user) in users.iter_mut().enumerate() {
            let gain = sample_fading(&mut user.fade_rng);
            let interference = if full_reuse {
                let serving = assoc.serving_cell[u];
                let mut i = user.other_power;
                for &m in &inactive {
                    if m != serving {
                        i -= power[u * num_cells + m];
                    }
                }
                i.max(0.0)
            } else {
                0.0
            };
            let sinr = (user.serving_power * gain / (noise + interference)).min(clip);
            let rate = achievable_rate(sinr, bandwidth);
            user.lookback.seed_pending(rate, floor);
            user.pending = rate;
            probe.on_channel(k, u, gain, rate);
        }

        // (3) Arrivals.
        if cbr {
            for (u, user) in users.iter_mut().enumerate() {
                let bits = user.queue.enqueue_arrivals(tti);
                user.ledger.arrived_bits += bits;
                probe.on_arrival(k, u, bits);
            }
        }

        // (4)-(5) One decision per cell on last TTI's reports.
        served_bits.iter_mut().for_each(|b| *b = 0.0);
        scheduled.iter_mut().for_each(|s| *s = false);
        for (m, members) in cell_users.iter().enumerate() {
            cands.clear();
            cand_ids.clear();
            for &u in members {
                let user = &users[u];
                let Some(rate) = user.reported else { continue };
                if !user.queue.has_data() {
                    continue;
                }
                cand_ids.push(u);
                cands.push(Observables {
                    inst_rate: rate,
                    short_avg: user.lookback.short_avg,
                    long_avg: user.lookback.long_avg,
                    queue_bits: if cbr { user.queue.backlog } else { 0.0 },
                    freeze: user.lookback.visible_freeze(&user.session),
                    alpha: params.alpha,
                    queue_weight: params.queue_weight,
                });
            }
            let Some(pick) = scheduler.select(&cands, &mut scratch) else { continue };
            let u = cand_ids[pick];
            let rate = cands[pick].inst_rate;
            let bits = users[u].queue.serve(rate * tti);
            served_bits[u] = bits;
            scheduled[u] = true;
            probe.on_serve(k, m, u, rate, bits);
            if cfg.sim.decision_log {
                decisions.push(DecisionRecord {
                    tti: k,
                    cell: m,
                    user: u,
                    rate,
                    served_bits: bits,
                });
            }
        }

        // (6)-(8) Playback, averages, binning.
        let bin = (k >= warm_ttis).then(|| ((k - warm_ttis) / per_sec as u64) as usize);
        for (u, user) in users.iter_mut().enumerate() {
            let bits = served_bits[u];
            user.ledger.delivered_bits += bits;
            if let Some(buf) = user.playback.as_mut() {
                playback_step(buf, bits, tti, &mut user.session);
            }
            let served_rate = bits / tti;
            let p = scheduled[u];
            let lb = &mut user.lookback;
            lb.short_avg = update_moving_average(lb.short_avg, served_rate, p, short_slots).max(floor);
            lb.long_avg = update_moving_average(lb.long_avg, served_rate, p, long_slots).max(floor);
            probe.on_user_tti(k, u, p, served_rate, lb);
            if let Some(b) = bin.filter(|&b| b < measured_secs) {
                let entry = &mut traces[u].bins[b];
                entry.bits += bits;
                entry.serving_cell = assoc.serving_cell[u];
                if let Some(buf) = &user.playback {
                    if buf.started {
                        entry.session_ttis += 1;
                        if buf.is_stalled() {
                            entry.frozen_ttis += 1;
                        }
                    }
                }
            }
            // Reports become visible to the BS in the next TTI.
            user.reported = Some(user.pending);
        }
    }

    let ledgers = users
        .iter()
        .map(|user| {
            let mut l = user.ledger;
            if cbr {
                l.backlog_bits = Some(user.queue.backlog);
            }
            if let Some(buf) = &user.playback {
                l.played_bits = buf.played * buf.stream_rate;
                l.buffered_bits = buf.content * buf.stream_rate;
            }
            l.session_freeze_fraction = user.session.freeze_fraction();
            l
        })
        .collect();

    let report = RunReport::from_traces(params.rule.name(), seed, &traces, &handovers, floor);
    Ok(RunLog {
        config: cfg.clone(),
        report,
        traces,
        handovers,
        decisions,
        ledgers,
    })
}
