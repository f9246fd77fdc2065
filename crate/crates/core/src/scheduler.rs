//! Per-cell scheduling rules.
//!
//! Every rule is a weight function over per-user observables followed by an
//! arg-max. The long-term lookback rules mix a cell-local short-term indicator
//! (normalized short-term rate or queue length) with a long-term indicator
//! that follows the user across cells (long-term rate, freeze fraction).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Lower clamp for normalized short-term rates.
pub const NORM_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    /// Max-rate: highest instantaneous rate.
    #[serde(rename = "mr")]
    MaxRate,
    /// Proportional fair on the cell-local short window.
    #[serde(rename = "pf-short")]
    PfShort,
    /// Proportional fair on the long window.
    #[serde(rename = "pf-long")]
    PfLong,
    /// Queue-aware exponential rule on the short window.
    #[serde(rename = "exp")]
    Exp,
    #[serde(rename = "ll-pf-exp")]
    LlPfExp,
    #[serde(rename = "ll-pf-sig")]
    LlPfSig,
    #[serde(rename = "ll-exp")]
    LlExp,
    #[serde(rename = "ll-exp-freeze")]
    LlExpFreeze,
}

impl Rule {
    pub const ALL: [Rule; 8] = [
        Rule::MaxRate,
        Rule::PfShort,
        Rule::PfLong,
        Rule::Exp,
        Rule::LlPfExp,
        Rule::LlPfSig,
        Rule::LlExp,
        Rule::LlExpFreeze,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::MaxRate => "mr",
            Rule::PfShort => "pf-short",
            Rule::PfLong => "pf-long",
            Rule::Exp => "exp",
            Rule::LlPfExp => "ll-pf-exp",
            Rule::LlPfSig => "ll-pf-sig",
            Rule::LlExp => "ll-exp",
            Rule::LlExpFreeze => "ll-exp-freeze",
        }
    }

    pub fn uses_queues(self) -> bool {
        matches!(self, Rule::Exp | Rule::LlExp | Rule::LlExpFreeze)
    }

    pub fn uses_norm(self) -> bool {
        matches!(self, Rule::LlPfExp | Rule::LlPfSig)
    }

    pub fn uses_freeze(self) -> bool {
        matches!(self, Rule::LlExpFreeze)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Rule::ALL
            .into_iter()
            .find(|r| r.name() == key)
            .ok_or_else(|| format!("unknown scheduler rule `{s}`"))
    }
}

/// Which side of the sigmoid the LL-PF-Sig rule uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmoidVariant {
    /// `1 − exp(−c(x − β))`, increasing in x; negative below β.
    Literal,
    /// `1 + exp(−c(x − β))`, positive and decreasing in x.
    Mirrored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerParams {
    pub rule: Rule,
    /// Short averaging window, seconds.
    pub w_short: f64,
    /// Long averaging window, seconds.
    pub w_long: f64,
    pub alpha: f64,
    pub beta: f64,
    pub steepness: f64,
    /// Default per-user queue weight `a_i`.
    pub queue_weight: f64,
    /// Multiplier turning queued bits into the unit used in the exponent
    /// (1e-6: megabits).
    pub queue_scale: f64,
    /// bits/s
    pub rate_floor: f64,
    pub freeze_floor: f64,
    pub sigmoid: SigmoidVariant,
}

impl Default for SchedulerParams {
    fn default() -> Self {
        Self {
            rule: Rule::PfShort,
            w_short: 1.0,
            w_long: 300.0,
            alpha: 0.2,
            beta: 0.5,
            steepness: 10.0,
            queue_weight: 1.0,
            queue_scale: 1e-6,
            rate_floor: 1e3,
            freeze_floor: 0.01,
            sigmoid: SigmoidVariant::Literal,
        }
    }
}

/// What a base station knows about one candidate user in the current TTI.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Observables {
    /// Reported achievable rate, bits/s.
    pub inst_rate: f64,
    pub short_avg: f64,
    pub long_avg: f64,
    /// Queued bits at the BS (0 under full buffer).
    pub queue_bits: f64,
    /// Long-term freeze fraction.
    pub freeze: f64,
    pub alpha: f64,
    pub queue_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvgKind {
    Short,
    Long,
}

/// One step of the exponential moving average
/// `R(t+1) = r·p/W + (1 − 1/W)·R(t)` with `W` in slots.
#[inline]
pub fn update_moving_average(avg: f64, inst_rate: f64, scheduled: bool, window_slots: f64) -> f64 {
    debug_assert!(window_slots >= 1.0);
    let inv = 1.0 / window_slots;
    let served = if scheduled { inst_rate } else { 0.0 };
    inv * served + (1.0 - inv) * avg
}

/// Short-term averages divided by the cell maximum, clamped to `[0.05, 1]`.
pub fn normalize_short_rates(short_avgs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(short_avgs.len());
    normalize_into(short_avgs.iter().copied(), &mut out);
    out
}

fn normalize_into(values: impl Iterator<Item = f64> + Clone, out: &mut Vec<f64>) {
    let max = values.clone().fold(0.0f64, f64::max);
    out.clear();
    if max <= 0.0 {
        out.extend(values.map(|_| NORM_FLOOR));
    } else {
        out.extend(values.map(|v| (v / max).clamp(NORM_FLOOR, 1.0)));
    }
}

/// `exp(α/x)`.
#[inline]
pub fn utility_exp(x: f64, alpha: f64) -> f64 {
    (alpha / x).exp()
}

/// `1 − exp(−c(x − β))`.
#[inline]
pub fn utility_sigmoid(x: f64, beta: f64, c: f64) -> f64 {
    1.0 - (-c * (x - beta)).exp()
}

/// `1 + exp(−c(x − β))`.
#[inline]
pub fn utility_sigmoid_mirrored(x: f64, beta: f64, c: f64) -> f64 {
    1.0 + (-c * (x - beta)).exp()
}

pub fn weight_mr(obs: &Observables) -> f64 {
    obs.inst_rate
}

pub fn weight_pf(obs: &Observables, which: AvgKind, rate_floor: f64) -> f64 {
    let avg = match which {
        AvgKind::Short => obs.short_avg,
        AvgKind::Long => obs.long_avg,
    };
    obs.inst_rate / avg.max(rate_floor)
}

/// Exponential queue term shared by the EXP family:
/// `exp((a_i q_i − m) / (1 + √m))` with `m` the mean of `a_i q_i`.
/// Queues are multiplied by `queue_scale` first.
pub fn exp_queue_factor(queues: &[f64], queue_weights: &[f64], queue_scale: f64) -> Vec<f64> {
    assert_eq!(queues.len(), queue_weights.len());
    let scaled: Vec<f64> = queues
        .iter()
        .zip(queue_weights)
        .map(|(q, a)| a * q * queue_scale)
        .collect();
    let mut out = Vec::with_capacity(scaled.len());
    queue_factor_into(&scaled, &mut out);
    out
}

fn queue_factor_into(scaled: &[f64], out: &mut Vec<f64>) {
    out.clear();
    if scaled.is_empty() {
        return;
    }
    let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
    let denom = 1.0 + mean.sqrt();
    out.extend(scaled.iter().map(|aq| ((aq - mean) / denom).exp()));
}

pub fn weight_exp(obs: &Observables, queue_factor: f64, rate_floor: f64) -> f64 {
    weight_pf(obs, AvgKind::Short, rate_floor) * queue_factor
}

pub fn weight_ll_pf_exp(obs: &Observables, norm_short: f64, rate_floor: f64) -> f64 {
    weight_pf(obs, AvgKind::Long, rate_floor) * utility_exp(norm_short, obs.alpha)
}

pub fn weight_ll_pf_sig(obs: &Observables, norm_short: f64, params: &SchedulerParams) -> f64 {
    let u = match params.sigmoid {
        SigmoidVariant::Literal => utility_sigmoid(norm_short, params.beta, params.steepness),
        SigmoidVariant::Mirrored => utility_sigmoid_mirrored(norm_short, params.beta, params.steepness),
    };
    weight_pf(obs, AvgKind::Long, params.rate_floor) * u
}

pub fn weight_ll_exp(obs: &Observables, queue_factor: f64, rate_floor: f64) -> f64 {
    weight_pf(obs, AvgKind::Long, rate_floor) * queue_factor
}

/// Uses the instantaneous rate directly, scaled by the floored freeze fraction.
pub fn weight_ll_exp_freeze(obs: &Observables, queue_factor: f64, freeze_floor: f64) -> f64 {
    obs.inst_rate * obs.freeze.max(freeze_floor) * queue_factor
}

/// Arg-max with ties going to the lowest index. `None` when there are no
/// candidates (idle TTI). NaN weights never win.
pub fn select_user(weights: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &w) in weights.iter().enumerate() {
        match best {
            None => best = Some((i, w)),
            Some((_, bw)) if w > bw || (bw.is_nan() && !w.is_nan()) => best = Some((i, w)),
            _ => {}
        }
    }
    best.map(|(i, _)| i)
}

/// Reusable buffers for [`Scheduler::select`].
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    pub weights: Vec<f64>,
    aux: Vec<f64>,
    factor: Vec<f64>,
}

/// A configured rule applied to one cell's candidates per TTI.
#[derive(Debug, Clone)]
pub struct Scheduler {
    pub params: SchedulerParams,
}

impl Scheduler {
    pub fn new(params: SchedulerParams) -> Self {
        Self { params }
    }

    /// Fills `scratch.weights` with one weight per candidate.
    pub fn weights(&self, cands: &[Observables], scratch: &mut Scratch) {
        let p = &self.params;
        let Scratch { weights, aux, factor } = scratch;
        weights.clear();
        if cands.is_empty() {
            return;
        }
        let rule = p.rule;
        if rule.uses_norm() {
            normalize_into(cands.iter().map(|o| o.short_avg), aux);
        }
        if rule.uses_queues() {
            aux.clear();
            aux.extend(cands.iter().map(|o| o.queue_weight * o.queue_bits * p.queue_scale));
            queue_factor_into(aux, factor);
        }
        for (i, o) in cands.iter().enumerate() {
            let w = match rule {
                Rule::MaxRate => weight_mr(o),
                Rule::PfShort => weight_pf(o, AvgKind::Short, p.rate_floor),
                Rule::PfLong => weight_pf(o, AvgKind::Long, p.rate_floor),
                Rule::Exp => weight_exp(o, factor[i], p.rate_floor),
                Rule::LlPfExp => weight_ll_pf_exp(o, aux[i], p.rate_floor),
                Rule::LlPfSig => weight_ll_pf_sig(o, aux[i], p),
                Rule::LlExp => weight_ll_exp(o, factor[i], p.rate_floor),
                Rule::LlExpFreeze => weight_ll_exp_freeze(o, factor[i], p.freeze_floor),
            };
            weights.push(w);
        }
    }

    pub fn select(&self, cands: &[Observables], scratch: &mut Scratch) -> Option<usize> {
        self.weights(cands, scratch);
        select_user(&scratch.weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(inst_rate: f64, short_avg: f64, long_avg: f64) -> Observables {
        Observables {
            inst_rate,
            short_avg,
            long_avg,
            alpha: 0.2,
            queue_weight: 1.0,
            ..Default::default()
        }
    }

    const E4: f64 = 54.598_150_033_144_24;

    #[test]
    fn moving_average_steps() {
        assert_eq!(update_moving_average(2.0, 4.0, true, 2.0), 3.0);
        assert_eq!(update_moving_average(2.0, 4.0, false, 2.0), 1.0);
        let mut r = 5.0;
        for _ in 0..10_000 {
            r = update_moving_average(r, 5.0, true, 1000.0);
        }
        assert!((r - 5.0).abs() < 1e-9);
    }

    #[test]
    fn normalization() {
        let n = normalize_short_rates(&[2e6, 4e6, 1e6]);
        assert_eq!(n, vec![0.5, 1.0, 0.25]);
        assert_eq!(normalize_short_rates(&[4e6, 0.04e6]), vec![1.0, 0.05]);
        assert_eq!(normalize_short_rates(&[3.0]), vec![1.0]);
        assert_eq!(normalize_short_rates(&[0.0, 0.0]), vec![0.05, 0.05]);
    }

    #[test]
    fn utilities() {
        for x in [0.05, 0.3, 1.0] {
            assert_eq!(utility_exp(x, 0.0), 1.0);
        }
        assert!((utility_exp(0.05, 0.2) - E4).abs() < 1e-9);
        assert!((utility_exp(1.0, 0.2) - 1.221_402_758_160_17).abs() < 1e-12);
        assert_eq!(utility_sigmoid(0.5, 0.5, 10.0), 0.0);
        assert!((utility_sigmoid(1e6, 0.5, 10.0) - 1.0).abs() < 1e-12);
        assert!((utility_sigmoid(0.6, 0.5, 10.0) - 0.632_120_558_828_557_7).abs() < 1e-12);
    }

    #[test]
    fn mr_and_pf() {
        let w: Vec<f64> = [obs(3e6, 1.0, 1.0), obs(5e6, 1.0, 1.0)].iter().map(weight_mr).collect();
        assert_eq!(select_user(&w), Some(1));
        assert_eq!(weight_mr(&obs(0.0, 1.0, 1.0)), 0.0);
        assert_eq!(weight_pf(&obs(4.0e6, 2.0e6, 1.0), AvgKind::Short, 1e3), 2.0);
        assert_eq!(weight_pf(&obs(2.0e6, 2.0e6, 1.0), AvgKind::Short, 1e3), 1.0);
        // Floor applies.
        assert_eq!(weight_pf(&obs(1e3, 0.0, 0.0), AvgKind::Long, 1e3), 1.0);
    }

    #[test]
    fn queue_factor_examples() {
        let f = exp_queue_factor(&[3e6, 3e6, 3e6], &[1.0; 3], 1e-6);
        assert!(f.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        let f = exp_queue_factor(&[2e6, 0.0], &[1.0, 1.0], 1e-6);
        assert!((f[0] - 0.5f64.exp()).abs() < 1e-12);
        assert!((f[1] - (-0.5f64).exp()).abs() < 1e-12);
        assert_eq!(exp_queue_factor(&[7e6], &[1.0], 1e-6), vec![1.0]);
    }

    #[test]
    fn exp_weights_compose() {
        let f = exp_queue_factor(&[2e6, 0.0], &[1.0, 1.0], 1e-6);
        let a = weight_exp(&obs(1e6, 1e6, 1.0), f[0], 1e3);
        let b = weight_exp(&obs(1e6, 1e6, 1.0), f[1], 1e3);
        assert!((a - 0.5f64.exp()).abs() < 1e-12);
        assert!((b - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn ll_pf_exp_favours_starved_user() {
        let o = obs(1e6, 1.0, 1e6);
        let w1 = weight_ll_pf_exp(&o, 1.0, 1e3);
        let w2 = weight_ll_pf_exp(&o, 0.05, 1e3);
        assert!((w1 - 1.221_402_758_160_17).abs() < 1e-9);
        assert!((w2 - E4).abs() < 1e-9);
    }

    #[test]
    fn ll_pf_exp_alpha_monotone() {
        let mut last = 0.0;
        for k in 0..20 {
            let alpha = k as f64 * 0.05;
            let lo = Observables { alpha, ..obs(1e6, 1.0, 1e6) };
            let ratio = weight_ll_pf_exp(&lo, 0.1, 1e3) / weight_ll_pf_exp(&lo, 0.8, 1e3);
            assert!(ratio >= last);
            last = ratio;
        }
    }

    #[test]
    fn ll_pf_sig_values() {
        let p = SchedulerParams::default();
        let o = obs(1e6, 1.0, 1e6);
        assert_eq!(weight_ll_pf_sig(&o, 0.5, &p), 0.0);
        assert!((weight_ll_pf_sig(&o, 1.0, &p) - 0.993_262_053_000_914_7).abs() < 1e-12);
        assert!(weight_ll_pf_sig(&o, 0.05, &p) < 0.0);
        let mirrored = SchedulerParams {
            sigmoid: SigmoidVariant::Mirrored,
            ..p
        };
        assert!(weight_ll_pf_sig(&o, 0.05, &mirrored) > weight_ll_pf_sig(&o, 1.0, &mirrored));
    }

    #[test]
    fn ll_exp_freeze_ratio() {
        let a = Observables { freeze: 0.28, ..obs(1e6, 1.0, 1.0) };
        let b = Observables { freeze: 0.05, ..obs(1e6, 1.0, 1.0) };
        let r = weight_ll_exp_freeze(&a, 1.0, 0.01) / weight_ll_exp_freeze(&b, 1.0, 0.01);
        assert!((r - 5.6).abs() < 1e-12);
        let z = Observables { freeze: 0.0, ..obs(2e6, 1.0, 1.0) };
        assert_eq!(weight_ll_exp_freeze(&z, 1.5, 0.01), 2e6 * 0.01 * 1.5);
    }

    #[test]
    fn select_ties_and_idle() {
        assert_eq!(select_user(&[2.0, 1.0]), Some(0));
        assert_eq!(select_user(&[1.0, 1.0]), Some(0));
        assert_eq!(select_user(&[]), None);
        assert_eq!(select_user(&[-3.0, -1.0, -2.0]), Some(1));
        assert_eq!(select_user(&[f64::NAN, 0.5]), Some(1));
    }

    #[test]
    fn rule_names_round_trip() {
        for r in Rule::ALL {
            assert_eq!(r.name().parse::<Rule>().unwrap(), r);
        }
        assert!("foo".parse::<Rule>().is_err());
        assert_eq!("LL_EXP".parse::<Rule>().unwrap(), Rule::LlExp);
    }

    #[test]
    fn scheduler_equal_queues_reduce_to_pf() {
        let cands = [
            Observables { queue_bits: 4e6, ..obs(3e6, 1e6, 2e6) },
            Observables { queue_bits: 4e6, ..obs(5e6, 2e6, 1e6) },
            Observables { queue_bits: 4e6, ..obs(1e6, 0.2e6, 3e6) },
        ];
        let mut s = Scratch::default();
        let pick = |rule, s: &mut Scratch| {
            Scheduler::new(SchedulerParams { rule, ..Default::default() }).select(&cands, s)
        };
        assert_eq!(pick(Rule::Exp, &mut s), pick(Rule::PfShort, &mut s));
        assert_eq!(pick(Rule::LlExp, &mut s), pick(Rule::PfLong, &mut s));
    }
}
