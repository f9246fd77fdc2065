//! Shared helpers for the integration tests: an independent scheduler oracle,
//! recording probes and the invariant checks reused by the acceptance target.
#![allow(dead_code)]

use lls_core::engine::{NoProbe, Probe};
use lls_core::geometry::Position;
use lls_core::handover::LookbackState;
use lls_core::metrics::jain_index;
use lls_core::output::write_run;
use lls_core::scheduler::{update_moving_average, Observables, Scheduler, Scratch, SigmoidVariant};
use lls_core::traffic::{playback_step, FreezeStats, PlaybackBuffer, PlaybackState};
use lls_core::{run_with_probe, HandoverMode, Preset, Rule, ScenarioConfig, SchedulerParams, TrafficMode};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

// ---------------------------------------------------------------------------
// Scheduler oracle

/// One cell's worth of candidates plus the rule parameters.
#[derive(Debug, Clone)]
pub struct Instance {
    pub params: SchedulerParams,
    pub users: Vec<Observables>,
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Random instance with 1..=6 users. Some users are exact copies of others
/// so that tie-breaking is exercised.
pub fn random_instance(rule: Rule, rng: &mut impl Rng) -> Instance {
    let n = rng.gen_range(1..=6);
    let mut params = SchedulerParams {
        rule,
        alpha: rng.gen_range(0.0..0.5),
        beta: rng.gen_range(0.05..0.95),
        steepness: rng.gen_range(0.5..20.0),
        sigmoid: if rng.gen_bool(0.5) { SigmoidVariant::Literal } else { SigmoidVariant::Mirrored },
        ..SchedulerParams::default()
    };
    if rng.gen_bool(0.2) {
        params.alpha = 0.0;
    }
    let mut users: Vec<Observables> = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 && rng.gen_bool(0.15) {
            let j = rng.gen_range(0..i);
            users.push(users[j]);
            continue;
        }
        let pick = |rng: &mut Xoshiro256PlusPlus| -> f64 {
            match rng.gen_range(0..10) {
                0 => 0.0,
                1 => 500.0,
                _ => log_uniform(rng, 1e3, 1e8),
            }
        };
        let mut sub = Xoshiro256PlusPlus::seed_from_u64(rng.gen());
        users.push(Observables {
            inst_rate: pick(&mut sub),
            short_avg: pick(&mut sub),
            long_avg: pick(&mut sub),
            queue_bits: if sub.gen_bool(0.1) { 0.0 } else { log_uniform(&mut sub, 1.0, 2e9) },
            freeze: if sub.gen_bool(0.3) { 0.0 } else { sub.gen_range(0.0..1.0) },
            alpha: params.alpha,
            queue_weight: if sub.gen_bool(0.5) { 1.0 } else { sub.gen_range(0.5..2.0) },
        });
    }
    Instance { params, users }
}

/// Per-user priority written directly from the rule definitions.
pub fn oracle_weights(inst: &Instance) -> Vec<f64> {
    let p = &inst.params;
    let u = &inst.users;
    let n = u.len();
    let floor = p.rate_floor;

    // exp[(a q − avg)/(1 + √avg)], queues in Mbit
    let aq: Vec<f64> = u.iter().map(|o| o.queue_weight * o.queue_bits * p.queue_scale).collect();
    let mut total = 0.0;
    for v in &aq {
        total += v;
    }
    let avg = total / n as f64;
    let qexp: Vec<f64> = aq.iter().map(|v| ((v - avg) / (1.0 + avg.sqrt())).exp()).collect();

    let mut top = 0.0f64;
    for o in u {
        if o.short_avg > top {
            top = o.short_avg;
        }
    }
    let norm: Vec<f64> = u
        .iter()
        .map(|o| if top <= 0.0 { 0.05 } else { (o.short_avg / top).clamp(0.05, 1.0) })
        .collect();

    (0..n)
        .map(|i| {
            let o = &u[i];
            let r = o.inst_rate;
            let rs = if o.short_avg < floor { floor } else { o.short_avg };
            let rl = if o.long_avg < floor { floor } else { o.long_avg };
            match p.rule {
                Rule::MaxRate => r,
                Rule::PfShort => r / rs,
                Rule::PfLong => r / rl,
                Rule::Exp => r / rs * qexp[i],
                Rule::LlPfExp => r / rl * (o.alpha / norm[i]).exp(),
                Rule::LlPfSig => {
                    let e = (-p.steepness * (norm[i] - p.beta)).exp();
                    let util = match p.sigmoid {
                        SigmoidVariant::Literal => 1.0 - e,
                        SigmoidVariant::Mirrored => 1.0 + e,
                    };
                    r / rl * util
                }
                Rule::LlExp => r / rl * qexp[i],
                Rule::LlExpFreeze => r * o.freeze.max(p.freeze_floor) * qexp[i],
            }
        })
        .collect()
}

/// Brute force: the first user whose weight is at least every other weight.
pub fn oracle_select(inst: &Instance) -> Option<usize> {
    let w = oracle_weights(inst);
    (0..w.len()).find(|&i| w.iter().all(|&x| !(x > w[i])))
}

/// Number of instances where the library disagrees with the oracle.
pub fn oracle_mismatches(rule: Rule, instances: usize, seed: u64) -> usize {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut scratch = Scratch::default();
    let mut bad = 0;
    for _ in 0..instances {
        let inst = random_instance(rule, &mut rng);
        let got = Scheduler::new(inst.params.clone()).select(&inst.users, &mut scratch);
        if got != oracle_select(&inst) {
            bad += 1;
        }
    }
    bad
}

// ---------------------------------------------------------------------------
// Probes

#[derive(Debug, Default, Clone, PartialEq)]
pub struct EnvTrace {
    pub positions: Vec<(u64, usize, f64, f64)>,
    pub serving: Vec<(u64, usize, usize)>,
    pub shadow: Vec<Vec<f64>>,
    pub fading: Vec<f64>,
    pub rates: Vec<f64>,
}

impl Probe for EnvTrace {
    fn on_update(&mut self, tti: u64, user: usize, pos: Position, serving: usize, shadow_db: &[f64]) {
        self.positions.push((tti, user, pos.x, pos.y));
        self.serving.push((tti, user, serving));
        self.shadow.push(shadow_db.to_vec());
    }
    fn on_channel(&mut self, _tti: u64, _user: usize, fading_gain: f64, rate: f64) {
        self.fading.push(fading_gain);
        self.rates.push(rate);
    }
}

/// Per-TTI averages of every user, plus the raw inputs that produced them.
#[derive(Debug, Default, Clone)]
pub struct AvgTrace {
    /// [user] -> first measured rate and serving cell at each update tick
    pub first_rate: Vec<Option<f64>>,
    pub channel: Vec<Vec<f64>>,
    pub steps: Vec<Vec<(bool, f64, LookbackState)>>,
    pub serving: Vec<Vec<(u64, usize)>>,
}

impl AvgTrace {
    pub fn new(users: usize) -> Self {
        Self {
            first_rate: vec![None; users],
            channel: vec![Vec::new(); users],
            steps: vec![Vec::new(); users],
            serving: vec![Vec::new(); users],
        }
    }
}

impl Probe for AvgTrace {
    fn on_update(&mut self, tti: u64, user: usize, _pos: Position, serving: usize, _shadow_db: &[f64]) {
        self.serving[user].push((tti, serving));
    }
    fn on_channel(&mut self, _tti: u64, user: usize, _gain: f64, rate: f64) {
        self.first_rate[user].get_or_insert(rate);
        self.channel[user].push(rate);
    }
    fn on_user_tti(&mut self, _tti: u64, user: usize, scheduled: bool, served_rate: f64, state: &LookbackState) {
        self.steps[user].push((scheduled, served_rate, *state));
    }
}

// ---------------------------------------------------------------------------
// Scenarios

pub fn small_full_buffer(rule: Rule, seed: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::preset(Preset::Desk);
    cfg.network.rings = 1;
    cfg.users.count = 12;
    cfg.users.speed = 30.0;
    cfg.sim.time = 40.0;
    cfg.sim.warm_up = 10.0;
    cfg.sim.seed = seed;
    cfg.scheduler.rule = rule;
    cfg.scheduler.w_long = 20.0;
    cfg
}

pub fn small_streaming(rule: Rule, seed: u64) -> ScenarioConfig {
    let mut cfg = small_full_buffer(rule, seed);
    cfg.traffic.mode = TrafficMode::Cbr;
    cfg.users.count = 40;
    cfg.traffic.arrival_rate = 3e6;
    cfg.sim.warm_up = 0.0;
    cfg
}

// ---------------------------------------------------------------------------
// Invariant checks. Each returns the number of violations found and a note.

pub type Check = (usize, String);

pub fn check_moving_average(seed: u64) -> Check {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut bad = 0;
    let mut cases = 0;
    for _ in 0..200 {
        let w = [1.0, 2.0, 10.0, 1000.0, 300_000.0][rng.gen_range(0..5)];
        // Fixed point: served at its own average every slot.
        let r = log_uniform(&mut rng, 1e3, 1e8);
        let mut avg = r;
        for _ in 0..1000 {
            avg = update_moving_average(avg, r, true, w);
        }
        cases += 1;
        if (avg - r).abs() > 1e-12 * r {
            bad += 1;
        }
        // Bounds for arbitrary p sequences.
        let mut max_r = log_uniform(&mut rng, 1e3, 1e8);
        let mut avg = rng.gen_range(1e3..=max_r);
        for _ in 0..1000 {
            let r = log_uniform(&mut rng, 1e3, 1e8);
            max_r = max_r.max(r);
            // The engine floors every update at 1 kbit/s; without it a long
            // run of p = 0 underflows to exactly zero.
            avg = update_moving_average(avg, r, rng.gen_bool(0.3), w).max(1e3);
            cases += 1;
            if !(avg > 0.0 && avg <= max_r) {
                bad += 1;
            }
        }
    }
    (bad, format!("{cases} steps"))
}

/// Replays every user's long-term average in one fictitious cell from the
/// recorded (r, p) stream and compares bit-for-bit with the engine, across
/// all handovers of a multi-cell run.
pub fn check_concatenation(seed: u64) -> Check {
    let mut cfg = small_full_buffer(Rule::LlPfExp, seed);
    cfg.handover.mode = HandoverMode::MultiCell;
    let mut probe = AvgTrace::new(cfg.users.count);
    let log = run_with_probe(&cfg, &mut probe).expect("run");
    let w = cfg.scheduler.w_long / cfg.sim.tti;
    let floor = cfg.scheduler.rate_floor;
    let mut bad = 0;
    let mut compared = 0;
    for u in 0..cfg.users.count {
        let mut r = probe.first_rate[u].unwrap().max(floor);
        for &(p, served, state) in &probe.steps[u] {
            let inv = 1.0 / w;
            let x = if p { served } else { 0.0 };
            r = (inv * x + (1.0 - inv) * r).max(floor);
            compared += 1;
            if r.to_bits() != state.long_avg.to_bits() {
                bad += 1;
            }
        }
    }
    // The value announced at handover is the one the new cell continues from.
    for h in &log.handovers {
        let k = (h.timestamp / cfg.sim.tti).round() as usize;
        if k == 0 {
            continue;
        }
        let before = probe.steps[h.user][k - 1].2.long_avg;
        compared += 1;
        if h.long_avg.map(f64::to_bits) != Some(before.to_bits()) {
            bad += 1;
        }
    }
    if log.handovers.is_empty() {
        bad += 1;
    }
    (bad, format!("{compared} values, {} handovers", log.handovers.len()))
}

/// Arrivals − deliveries = backlog per user, decisions sum to deliveries,
/// bins sum to deliveries, media conservation at the client.
pub fn check_conservation(seed: u64) -> Check {
    let mut cfg = small_streaming(Rule::LlExpFreeze, seed);
    cfg.sim.decision_log = true;
    let log = run_with_probe(&cfg, &mut NoProbe).expect("run");
    let mut bad = 0;
    let mut per_user = vec![0.0; cfg.users.count];
    let mut seen = std::collections::HashSet::new();
    for d in &log.decisions {
        per_user[d.user] += d.served_bits;
        if !seen.insert((d.tti, d.cell)) {
            bad += 1;
        }
    }
    let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
    for (u, l) in log.ledgers.iter().enumerate() {
        let backlog = l.backlog_bits.unwrap_or(f64::NAN);
        if (l.arrived_bits - l.delivered_bits - backlog).abs() > 1e-9 * l.arrived_bits {
            bad += 1;
        }
        if !rel(per_user[u], l.delivered_bits) {
            bad += 1;
        }
        if !rel(log.traces[u].total_bits(), l.delivered_bits) {
            bad += 1;
        }
        if (l.played_bits + l.buffered_bits - l.delivered_bits).abs() > 1e-6 * l.delivered_bits.max(1.0) {
            bad += 1;
        }
    }
    (bad, format!("{} users, {} decisions", cfg.users.count, log.decisions.len()))
}

/// Random delivery traces through the playback state machine.
pub fn check_playback(seed: u64) -> Check {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut bad = 0;
    let mut steps = 0;
    for _ in 0..20 {
        let mut buf = PlaybackBuffer::new(1.5e6, 5.0);
        let mut stats = FreezeStats::default();
        let burst = rng.gen_range(0.05..0.6);
        let mut last_frozen = 0.0;
        for _ in 0..20_000 {
            let before = buf;
            let bits = if rng.gen_bool(burst) { rng.gen_range(0.0..15_000.0) } else { 0.0 };
            playback_step(&mut buf, bits, 0.001, &mut stats);
            steps += 1;
            let legal = match (before.state, buf.state) {
                (PlaybackState::Playing, PlaybackState::Frozen) => buf.content == 0.0,
                (PlaybackState::Frozen, PlaybackState::Playing) => buf.content >= buf.threshold,
                _ => true,
            };
            let frozen_only_when_stalled = stats.frozen_time == last_frozen || before.is_stalled();
            if !legal
                || buf.content < 0.0
                || stats.frozen_time < last_frozen
                || stats.frozen_time > stats.session_time + 1e-9
                || !frozen_only_when_stalled
            {
                bad += 1;
            }
            last_frozen = stats.frozen_time;
        }
    }
    (bad, format!("{steps} steps"))
}

pub fn check_jain(seed: u64) -> Check {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..10_000 {
        let n = rng.gen_range(1..50);
        let x: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(0.2) { 0.0 } else { log_uniform(&mut rng, 1e-3, 1e9) })
            .collect();
        let Some(j) = jain_index(&x) else {
            if x.iter().any(|&v| v > 0.0) {
                bad += 1;
            }
            continue;
        };
        if j < 1.0 / n as f64 - 1e-12 || j > 1.0 + 1e-12 {
            bad += 1;
        }
        let k = log_uniform(&mut rng, 1e-6, 1e6);
        let scaled: Vec<f64> = x.iter().map(|v| v * k).collect();
        match jain_index(&scaled) {
            Some(js) if (js - j).abs() <= 1e-12 => {}
            _ => bad += 1,
        }
    }
    (bad, "10000 vectors".into())
}

/// Same seed, two runs, byte-identical artifact directories.
pub fn check_determinism(seed: u64) -> Check {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut bad = 0;
    let mut files = 0;
    for cfg in [small_full_buffer(Rule::LlPfExp, seed), small_streaming(Rule::LlExp, seed)] {
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        write_run(&a, &run_with_probe(&cfg, &mut NoProbe).expect("run")).expect("write");
        write_run(&b, &run_with_probe(&cfg, &mut NoProbe).expect("run")).expect("write");
        for name in ["report.json", "bins.csv", "handover.csv", "manifest.json"] {
            files += 1;
            if std::fs::read(a.join(name)).expect("read") != std::fs::read(b.join(name)).expect("read") {
                bad += 1;
            }
        }
    }
    (bad, format!("{files} files compared"))
}

/// Environment randomness does not depend on the scheduling rule. Under full
/// buffer every cell transmits, so the rates agree too.
pub fn check_crn(seed: u64) -> Check {
    let mut bad = 0;
    let trace = |cfg: &ScenarioConfig| {
        let mut p = EnvTrace::default();
        run_with_probe(cfg, &mut p).expect("run");
        p
    };
    let base = trace(&small_full_buffer(Rule::MaxRate, seed));
    for rule in Rule::ALL.iter().copied().skip(1).filter(|r| !r.uses_freeze()) {
        if trace(&small_full_buffer(rule, seed)) != base {
            bad += 1;
        }
    }
    let stream_base = trace(&small_streaming(Rule::Exp, seed));
    for rule in [Rule::LlExp, Rule::LlExpFreeze, Rule::PfShort] {
        let t = trace(&small_streaming(rule, seed));
        if t.positions != stream_base.positions
            || t.serving != stream_base.serving
            || t.shadow != stream_base.shadow
            || t.fading != stream_base.fading
        {
            bad += 1;
        }
    }
    (bad, format!("{} rules", Rule::ALL.len()))
}

// ---------------------------------------------------------------------------
// Small statistics helpers

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, my) = (mean(&rx), mean(&ry));
    let mut num = 0.0;
    let (mut dx, mut dy) = (0.0, 0.0);
    for i in 0..rx.len() {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx).powi(2);
        dy += (ry[i] - my).powi(2);
    }
    if dx == 0.0 || dy == 0.0 {
        0.0
    } else {
        num / (dx * dy).sqrt()
    }
}
