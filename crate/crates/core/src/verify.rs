//! Monte Carlo checks of the distributional facts behind the learner's
//! analysis: the geometric law of epoch purchase counts, their stochastic
//! sandwich under drift, tail bounds for their averages, epoch lengths, and
//! the near-stationarity conditions on recorded runs.
//!
//! An epoch sample starts at round `s` with assortment `S` and counts the
//! purchases of item `j` until the first no-purchase. Parameters are frozen
//! after the reference round `t`: round `u` uses `ω(min(u, t))`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    expected_payoff, log_nt, variation_summary, Assortment, ItemCatalog, ParamSchedule, Rho, VariationSummary,
};
use crate::optimizer::optimal_assortment;
use crate::record::RunRecord;
use crate::rng::stream;
use crate::stats::{dkw_epsilon, geometric_cdf, integer_ecdf};

/// Samples drawn per RNG stream when sampling in parallel.
const CHUNK: usize = 4096;
/// Minimum sample size for a dominance check.
pub const MIN_DOMINANCE_SAMPLES: usize = 10_000;
/// Largest drift budget under which the sandwich is claimed.
pub const MAX_DRIFT: f64 = 0.5;

/// Where and how an epoch is sampled.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochSetup {
    /// Reference round `t`; parameters are frozen from here on.
    pub freeze_round: usize,
    /// First round `s` of the epoch.
    pub start: usize,
    pub assortment: Assortment,
    pub item: usize,
}

/// Per-round purchase weights of one item under one assortment.
#[derive(Debug, Clone)]
struct EpochProcess {
    /// `(ω_j(u), Σ_{k∈S} ω_k(u))` for `u = 1..=t`.
    weights: Vec<(f64, f64)>,
}

impl EpochProcess {
    fn new(schedule: &ParamSchedule, freeze_round: usize, s: &Assortment, item: usize) -> Self {
        let weights = (1..=freeze_round)
            .map(|u| {
                let omega = schedule.omega(u);
                (omega[item], s.items().iter().map(|&k| omega[k]).sum())
            })
            .collect();
        Self { weights }
    }

    /// Purchases of the item and number of rounds in an epoch starting at `start`.
    fn epoch<R: Rng + ?Sized>(&self, start: usize, rng: &mut R) -> (u64, u64) {
        let last = self.weights.len() - 1;
        let (mut count, mut len, mut u) = (0, 0, start);
        loop {
            let (wj, total) = self.weights[(u - 1).min(last)];
            len += 1;
            let x = rng.random::<f64>() * (1.0 + total);
            if x < 1.0 {
                return (count, len);
            }
            if x < 1.0 + wj {
                count += 1;
            }
            u += 1;
        }
    }
}

fn check_setup(schedule: &ParamSchedule, setup: &EpochSetup) -> Result<()> {
    let t = setup.freeze_round;
    if t == 0 || t > schedule.horizon() {
        return Err(Error::Domain(format!(
            "freeze round {t} is outside [1, {}]",
            schedule.horizon()
        )));
    }
    if setup.start == 0 {
        return Err(Error::Domain("epochs start at round 1 or later".into()));
    }
    if !setup.assortment.contains(setup.item) {
        return Err(Error::Domain(format!(
            "item {} is not in the assortment {{{}}}",
            setup.item + 1,
            setup.assortment.to_external()
        )));
    }
    if let Some(&k) = setup.assortment.items().last() {
        if k >= schedule.n_items() {
            return Err(Error::Domain(format!("item {} is not in the catalog", k + 1)));
        }
    }
    Ok(())
}

/// Runs `reps` parallel jobs, each on its own stream `(seed, label, chunk)`.
fn par_chunks<T: Send>(
    reps: usize,
    seed: u64,
    label: &str,
    job: impl Fn(&mut crate::rng::Stream) -> T + Sync,
) -> Vec<T> {
    let chunks = reps.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, label, c as u64);
            let n = CHUNK.min(reps - c * CHUNK);
            (0..n).map(|_| job(&mut rng)).collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// `reps` independent epoch purchase counts.
pub fn simulate_epoch_purchases(
    schedule: &ParamSchedule,
    setup: &EpochSetup,
    reps: usize,
    seed: u64,
) -> Result<Vec<u64>> {
    check_setup(schedule, setup)?;
    let process = EpochProcess::new(schedule, setup.freeze_round, &setup.assortment, setup.item);
    Ok(par_chunks(reps, seed, "epoch-purchases", |rng| {
        process.epoch(setup.start, rng).0
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichBounds {
    pub mu_minus: f64,
    pub mu_plus: f64,
}

/// `μ± = (ω_j(τ) ± δ_j^(t))^± (1 ± δ^(t)) / (1 ∓ δ^(t))`.
pub fn sandwich_bounds(
    summary: &VariationSummary,
    schedule: &ParamSchedule,
    t: usize,
    tau: usize,
    item: usize,
) -> Result<SandwichBounds> {
    if tau == 0 || tau > t || t > schedule.horizon() {
        return Err(Error::Domain(format!(
            "need 1 <= tau <= t <= T, got tau = {tau}, t = {t}"
        )));
    }
    let delta = summary.delta(t);
    if delta > MAX_DRIFT {
        return Err(Error::Refused(format!(
            "accumulated drift {delta} exceeds {MAX_DRIFT} at round {t}"
        )));
    }
    let (w, dj) = (schedule.omega(tau)[item], summary.delta_item(item, t));
    Ok(SandwichBounds {
        mu_minus: (w - dj).max(0.0) * (1.0 - delta) / (1.0 + delta),
        mu_plus: (w + dj) * (1.0 + delta) / (1.0 - delta),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    pub n_samples: usize,
    pub bounds: SandwichBounds,
    /// `max_a F_{μ+}(a) − F̂(a)`, floored at 0.
    pub max_violation_lower: f64,
    /// `max_a F̂(a) − F_{μ−}(a)`, floored at 0.
    pub max_violation_upper: f64,
    pub dkw_epsilon: f64,
    pub confidence: f64,
    /// Thresholds `a = 0..cells` examined.
    pub cells: usize,
    pub cell_pass_fraction: f64,
    pub pass: bool,
}

/// Compares the empirical CDF of `samples` with the geometric CDFs at `μ+`
/// and `μ−` over every integer threshold where either side can still move.
pub fn check_sandwich(samples: &[u64], bounds: SandwichBounds, confidence: f64) -> Result<DominanceReport> {
    if samples.len() < MIN_DOMINANCE_SAMPLES {
        return Err(Error::Refused(format!(
            "at least {MIN_DOMINANCE_SAMPLES} samples are needed, got {}",
            samples.len()
        )));
    }
    let eps = dkw_epsilon(samples.len(), confidence);
    let ecdf = integer_ecdf(samples);
    let mut last = ecdf.len() - 1;
    while geometric_cdf(bounds.mu_minus, last as u64) < 1.0 - eps && last < 1 << 24 {
        last += 1;
    }
    let (mut lower, mut upper, mut passing) = (0.0f64, 0.0f64, 0usize);
    for a in 0..=last {
        let f = ecdf.get(a).copied().unwrap_or(1.0);
        let lo = geometric_cdf(bounds.mu_plus, a as u64) - f;
        let hi = f - geometric_cdf(bounds.mu_minus, a as u64);
        lower = lower.max(lo);
        upper = upper.max(hi);
        if lo <= eps && hi <= eps {
            passing += 1;
        }
    }
    Ok(DominanceReport {
        n_samples: samples.len(),
        bounds,
        max_violation_lower: lower,
        max_violation_upper: upper,
        dkw_epsilon: eps,
        confidence,
        cells: last + 1,
        cell_pass_fraction: passing as f64 / (last + 1) as f64,
        pass: lower <= eps && upper <= eps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationCell {
    pub k: usize,
    pub eta: f64,
    pub lower_frequency: f64,
    pub lower_bound: f64,
    pub lower_threshold: f64,
    pub upper_frequency: f64,
    pub upper_bound: f64,
    pub upper_threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub bounds: SandwichBounds,
    pub reps: usize,
    pub cells: Vec<ConcentrationCell>,
    pub pass: bool,
}

/// `bound + 3√(bound(1 − bound)/reps) + 10/reps`.
pub fn tail_threshold(bound: f64, reps: usize) -> f64 {
    let b = bound.min(1.0);
    let n = reps as f64;
    b + 3.0 * (b * (1.0 - b) / n).sqrt() + 10.0 / n
}

/// Tail frequencies of the average of `k` consecutive epoch counts against
/// `exp(−kη²μ−/24)` below `(1 − η)μ−` and `exp(−k·min(η, η²)μ+/196)` above
/// `(1 + η)μ+`.
///
/// Each replication follows the purchase process from `setup.start`:
/// epochs starting at or before `t` offer `setup.assortment`, later ones offer
/// every item. All `k` values share the prefixes of one sequence per
/// replication.
#[allow(clippy::too_many_arguments)]
pub fn check_concentration(
    schedule: &ParamSchedule,
    summary: &VariationSummary,
    setup: &EpochSetup,
    tau: usize,
    k_values: &[usize],
    etas: &[f64],
    reps: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    check_setup(schedule, setup)?;
    let bounds = sandwich_bounds(summary, schedule, setup.freeze_round, tau, setup.item)?;
    let t = setup.freeze_round;
    let offered = EpochProcess::new(schedule, t, &setup.assortment, setup.item);
    let everything = Assortment::from_sorted((0..schedule.n_items()).collect());
    let all = EpochProcess::new(schedule, t, &everything, setup.item);
    let k_max = k_values.iter().copied().max().unwrap_or(0);

    // For each replication: the running sums at every requested k.
    let sums: Vec<Vec<u64>> = par_chunks(reps, seed, "concentration", |rng| {
        let (mut round, mut total) = (setup.start, 0u64);
        let mut at = Vec::with_capacity(k_values.len());
        let mut prefix = vec![0u64; k_max + 1];
        for slot in prefix.iter_mut().skip(1) {
            let process = if round <= t { &offered } else { &all };
            let (count, len) = process.epoch(round, rng);
            round += len as usize;
            total += count;
            *slot = total;
        }
        for &k in k_values {
            at.push(prefix[k]);
        }
        at
    });

    let mut cells = Vec::new();
    for (ki, &k) in k_values.iter().enumerate() {
        for &eta in etas {
            let kf = k as f64;
            let (mut below, mut above) = (0usize, 0usize);
            for s in &sums {
                let mean = s[ki] as f64 / kf;
                if mean < (1.0 - eta) * bounds.mu_minus {
                    below += 1;
                }
                if mean > (1.0 + eta) * bounds.mu_plus {
                    above += 1;
                }
            }
            let lower_bound = (-kf * eta * eta * bounds.mu_minus / 24.0).exp();
            let upper_bound = (-kf * eta.min(eta * eta) * bounds.mu_plus / 196.0).exp();
            let (lower_frequency, upper_frequency) = (below as f64 / reps as f64, above as f64 / reps as f64);
            let (lower_threshold, upper_threshold) = (
                tail_threshold(lower_bound, reps),
                tail_threshold(upper_bound, reps),
            );
            cells.push(ConcentrationCell {
                k,
                eta,
                lower_frequency,
                lower_bound,
                lower_threshold,
                upper_frequency,
                upper_bound,
                upper_threshold,
                pass: lower_frequency <= lower_threshold && upper_frequency <= upper_threshold,
            });
        }
    }
    let pass = cells.iter().all(|c| c.pass);
    Ok(ConcentrationReport {
        bounds,
        reps,
        cells,
        pass,
    })
}

/// One maximal run of rounds with the same assortment, closed by a
/// no-purchase, an assortment change, or the end of the log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoggedEpoch {
    pub start: usize,
    pub end: usize,
    pub assortment: Assortment,
}

impl LoggedEpoch {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn check_log(log: &[RunRecord], schedule: &ParamSchedule) -> Result<()> {
    if log.len() > schedule.horizon() {
        return Err(Error::Refused(format!(
            "log has {} rounds but the schedule only {}",
            log.len(),
            schedule.horizon()
        )));
    }
    for (i, r) in log.iter().enumerate() {
        if r.t != i + 1 {
            return Err(Error::Refused(format!(
                "log row {} has t = {}, expected {}",
                i + 1,
                r.t,
                i + 1
            )));
        }
        if let Some(j) = r.chosen {
            if !r.assortment.contains(j) {
                return Err(Error::Refused(format!(
                    "round {}: item {} was not offered",
                    r.t,
                    j + 1
                )));
            }
        }
        if r.assortment
            .items()
            .last()
            .is_some_and(|&k| k >= schedule.n_items())
        {
            return Err(Error::Refused(format!(
                "round {}: assortment refers to an unknown item",
                r.t
            )));
        }
    }
    Ok(())
}

pub fn split_epochs(log: &[RunRecord]) -> Vec<LoggedEpoch> {
    let mut epochs: Vec<LoggedEpoch> = Vec::new();
    let mut open = false;
    for r in log {
        match epochs.last_mut() {
            Some(e) if open && e.assortment == r.assortment => e.end = r.t,
            _ => epochs.push(LoggedEpoch {
                start: r.t,
                end: r.t,
                assortment: r.assortment.clone(),
            }),
        }
        open = r.chosen.is_some();
    }
    epochs
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLengthReport {
    pub multiplier: f64,
    pub epochs: usize,
    pub violations: usize,
    pub violation_frequency: f64,
    /// Violations tolerated: expected count plus three standard deviations.
    pub allowed: usize,
    /// Largest observed length relative to its bound.
    pub max_ratio: f64,
    pub pass: bool,
}

/// Flags epochs longer than
/// `multiplier · 5 log NT (1 + Σ_{k∈S} (ω_k(u) + δ_k^(t)))`
/// with `u` the first and `t` the last round of the epoch.
pub fn check_epoch_length(
    log: &[RunRecord],
    schedule: &ParamSchedule,
    k_cap: usize,
    multiplier: f64,
) -> Result<EpochLengthReport> {
    check_log(log, schedule)?;
    let summary = variation_summary(schedule, k_cap);
    let (n, horizon) = (schedule.n_items(), schedule.horizon());
    let scale = multiplier * 5.0 * log_nt(n, horizon)?;
    let epochs = split_epochs(log);
    let (mut violations, mut max_ratio) = (0usize, 0.0f64);
    for e in &epochs {
        let omega = schedule.omega(e.start);
        let mass: f64 = e
            .assortment
            .items()
            .iter()
            .map(|&k| omega[k] + summary.delta_item(k, e.end))
            .sum();
        let bound = scale * (1.0 + mass);
        let ratio = e.len() as f64 / bound;
        max_ratio = max_ratio.max(ratio);
        if ratio > 1.0 {
            violations += 1;
        }
    }
    let expected = epochs.len() as f64 / (n as f64 * (horizon as f64).powi(3));
    let allowed = (expected + 3.0 * expected.sqrt()).floor() as usize;
    Ok(EpochLengthReport {
        multiplier,
        epochs: epochs.len(),
        violations,
        violation_frequency: violations as f64 / epochs.len().max(1) as f64,
        allowed,
        max_ratio,
        pass: violations <= allowed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub rounds_checked: usize,
    pub cond1_fraction: f64,
    pub cond2_fraction: f64,
    pub first_cond1_violation: Option<usize>,
    pub first_cond2_violation: Option<usize>,
    pub pass: bool,
}

/// Optimal expected payoff for every round, solving once per distinct vector.
pub fn optimal_values(schedule: &ParamSchedule, catalog: &ItemCatalog) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(schedule.horizon());
    let mut prev: Option<(&[f64], f64)> = None;
    for omega in schedule.iter() {
        let value = match prev {
            Some((p, v)) if p == omega.as_slice() => v,
            _ => {
                let opt = optimal_assortment(omega, catalog)?;
                expected_payoff(omega, catalog, &opt.assortment)
            }
        };
        prev = Some((omega.as_slice(), value));
        out.push(value);
    }
    Ok(out)
}

/// On every near-stationary round `t`:
/// (1) `Ř_t ≥ min_{τ≤t} R*(τ) − Σ_{τ<t} Δ(τ)` and
/// (2) `(1/t) Σ_{τ≤t} (Ř_τ − r(τ)) ≤ ρ(t) + Σ_{τ<t} Δ(τ)`.
pub fn check_conditions(
    log: &[RunRecord],
    schedule: &ParamSchedule,
    catalog: &ItemCatalog,
    rho: &Rho,
) -> Result<ConditionReport> {
    check_log(log, schedule)?;
    let summary = variation_summary(schedule, catalog.capacity());
    let optimal = optimal_values(schedule, catalog)?;
    let (mut checked, mut ok1, mut ok2) = (0usize, 0usize, 0usize);
    let (mut first1, mut first2) = (None, None);
    let (mut min_opt, mut gap_sum) = (f64::INFINITY, 0.0);
    for r in log {
        let t = r.t;
        min_opt = min_opt.min(optimal[t - 1]);
        gap_sum += r.rhat - r.reward;
        let drift = summary.cumulative_delta(t);
        let tol = rho.eval(t as f64);
        if drift > tol {
            continue;
        }
        checked += 1;
        if r.rhat >= min_opt - drift {
            ok1 += 1;
        } else if first1.is_none() {
            first1 = Some(t);
        }
        if gap_sum / t as f64 <= tol + drift {
            ok2 += 1;
        } else if first2.is_none() {
            first2 = Some(t);
        }
    }
    let frac = |k: usize| {
        if checked == 0 {
            1.0
        } else {
            k as f64 / checked as f64
        }
    };
    Ok(ConditionReport {
        rounds_checked: checked,
        cond1_fraction: frac(ok1),
        cond2_fraction: frac(ok2),
        first_cond1_violation: first1,
        first_cond2_violation: first2,
        pass: ok1 == checked && ok2 == checked,
    })
}
