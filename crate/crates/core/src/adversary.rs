//! Hard instance families for non-stationary MNL-Bandit.
//!
//! Both families split the horizon into windows. In every window a fresh
//! uniformly random set of `K` "good" items gets attraction `(1 + η)/K` and
//! all other items get `1/K`; all payoffs are 1.
//!
//! * Switching family: `L` windows of `⌈T/L⌉` rounds with
//!   `η = min(1/2, √(N/⌈T/L⌉)/17)`.
//! * Variation family: windows of `M = ⌈N^{1/3} (T/Δ)^{2/3}⌉` rounds,
//!   `ε = min(√(N/M)/17, Δ·M/(2T))`, with `η = ε` in even windows and
//!   `η = ε/2` in odd ones (windows counted from 0).

use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::environment::ScheduleFile;
use crate::error::{Error, Result};
use crate::model::{variation_summary, AttractionVector, ItemCatalog, ParamSchedule};
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceMetadata {
    /// Window length.
    #[serde(rename = "M")]
    pub window: usize,
    /// Variation family only.
    pub epsilon: Option<f64>,
    /// Switching family only.
    pub eta: Option<f64>,
    /// Switch count recomputed on the emitted schedule.
    #[serde(rename = "L")]
    pub switches: usize,
    pub var_2k: f64,
    pub var_inf: f64,
    /// 1-based good items per window.
    pub good_subsets: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct AdversarialInstance {
    pub schedule: ParamSchedule,
    pub catalog: ItemCatalog,
    pub metadata: InstanceMetadata,
}

impl AdversarialInstance {
    /// Writes `schedule.json` and `metadata.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        ScheduleFile::from_schedule(&self.schedule).save(dir.join("schedule.json"))?;
        let path = dir.join("metadata.json");
        let text = serde_json::to_string_pretty(&self.metadata).expect("metadata serializes");
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }
}

fn check_shape(n_items: usize, k_cap: usize, horizon: usize) -> Result<()> {
    if k_cap < 2 {
        return Err(Error::Refused(format!(
            "K >= 2 is required so that (1 + eta)/K stays below 1, got K = {k_cap}"
        )));
    }
    if 4 * k_cap > n_items {
        return Err(Error::Refused(format!(
            "K <= N/4 is required, got K = {k_cap}, N = {n_items}"
        )));
    }
    if horizon == 0 {
        return Err(Error::Refused("T >= 1 is required".into()));
    }
    Ok(())
}

/// Builds the windowed schedule; `eta_of(window index)` gives the boost.
fn windowed(
    n_items: usize,
    k_cap: usize,
    horizon: usize,
    window: usize,
    seed: u64,
    eta_of: impl Fn(usize) -> f64,
) -> Result<(ParamSchedule, Vec<Vec<usize>>)> {
    let mut rng = Stream::seed_from_u64(seed);
    let base = 1.0 / k_cap as f64;
    let mut values = Vec::with_capacity(horizon);
    let mut good_subsets = Vec::new();
    for (w, start) in (0..horizon).step_by(window).enumerate() {
        let mut good = sample(&mut rng, n_items, k_cap).into_vec();
        good.sort_unstable();
        let mut omega = vec![base; n_items];
        let boosted = (1.0 + eta_of(w)) / k_cap as f64;
        for &j in &good {
            omega[j] = boosted;
        }
        let omega = AttractionVector::new(omega)?;
        values.extend(std::iter::repeat_n(omega, window.min(horizon - start)));
        good_subsets.push(good.into_iter().map(|j| j + 1).collect());
    }
    Ok((ParamSchedule::new(values)?, good_subsets))
}

pub fn switching_window(horizon: usize, switches: usize) -> usize {
    horizon.div_ceil(switches)
}

pub fn switching_eta(n_items: usize, window: usize) -> f64 {
    ((n_items as f64 / window as f64).sqrt() / 17.0).min(0.5)
}

/// Instance with at most `switches` changes of the parameter vector.
pub fn gen_switching_instance(
    n_items: usize,
    k_cap: usize,
    horizon: usize,
    switches: usize,
    seed: u64,
) -> Result<AdversarialInstance> {
    check_shape(n_items, k_cap, horizon)?;
    if switches == 0 {
        return Err(Error::Refused("L >= 1 is required".into()));
    }
    let window = switching_window(horizon, switches);
    let eta = switching_eta(n_items, window);
    let (schedule, good_subsets) = windowed(n_items, k_cap, horizon, window, seed, |_| eta)?;
    let summary = variation_summary(&schedule, k_cap);
    Ok(AdversarialInstance {
        catalog: ItemCatalog::uniform(n_items, k_cap)?,
        metadata: InstanceMetadata {
            window,
            epsilon: None,
            eta: Some(eta),
            switches: summary.switches,
            var_2k: summary.var_2k,
            var_inf: summary.var_inf,
            good_subsets,
        },
        schedule,
    })
}

/// `M = ⌈∛N · (T/Δ)^{2/3}⌉` in `f64`.
pub fn variation_window(n_items: usize, horizon: usize, budget: f64) -> usize {
    ((n_items as f64).cbrt() * (horizon as f64 / budget).powf(2.0 / 3.0)).ceil() as usize
}

/// `ε = min(√(N/M)/17, Δ·M/(2T))` in `f64`.
pub fn variation_epsilon(n_items: usize, horizon: usize, budget: f64, window: usize) -> f64 {
    let statistical = (n_items as f64 / window as f64).sqrt() / 17.0;
    let budgeted = 0.5 * budget * window as f64 / horizon as f64;
    statistical.min(budgeted)
}

/// Instance with `Δ∞^K ≤ budget` and `Δ∞^K ≥ (K/2)·Δ∞`, both verified on the
/// emitted schedule.
pub fn gen_variation_instance(
    n_items: usize,
    k_cap: usize,
    horizon: usize,
    budget: f64,
    seed: u64,
) -> Result<AdversarialInstance> {
    check_shape(n_items, k_cap, horizon)?;
    let (lo, hi) = (1.0 / n_items as f64, horizon as f64 / n_items as f64);
    if budget.is_nan() || budget < lo {
        return Err(Error::Refused(format!(
            "budget must be at least 1/N = {lo}, got {budget}"
        )));
    }
    if budget > hi {
        return Err(Error::Refused(format!(
            "budget must be at most T/N = {hi}, got {budget}"
        )));
    }
    let window = variation_window(n_items, horizon, budget);
    let epsilon = variation_epsilon(n_items, horizon, budget, window);
    let (schedule, good_subsets) = windowed(n_items, k_cap, horizon, window, seed, |w| {
        if w % 2 == 0 {
            epsilon
        } else {
            epsilon / 2.0
        }
    })?;
    let summary = variation_summary(&schedule, k_cap);
    if summary.var_2k > budget {
        return Err(Error::Refused(format!(
            "generated variation {} exceeds the budget {budget}",
            summary.var_2k
        )));
    }
    if summary.var_2k < k_cap as f64 / 2.0 * summary.var_inf {
        return Err(Error::Refused(format!(
            "generated variation {} is below (K/2)·{}",
            summary.var_2k, summary.var_inf
        )));
    }
    Ok(AdversarialInstance {
        catalog: ItemCatalog::uniform(n_items, k_cap)?,
        metadata: InstanceMetadata {
            window,
            epsilon: Some(epsilon),
            eta: None,
            switches: summary.switches,
            var_2k: summary.var_2k,
            var_inf: summary.var_inf,
            good_subsets,
        },
        schedule,
    })
}

/// Instance request as read from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSpec {
    Switching {
        n_items: usize,
        capacity: usize,
        horizon: usize,
        switches: usize,
    },
    Variation {
        n_items: usize,
        capacity: usize,
        horizon: usize,
        budget: f64,
    },
}

impl InstanceSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    pub fn generate(&self, seed: u64) -> Result<AdversarialInstance> {
        match *self {
            Self::Switching {
                n_items,
                capacity,
                horizon,
                switches,
            } => gen_switching_instance(n_items, capacity, horizon, switches, seed),
            Self::Variation {
                n_items,
                capacity,
                horizon,
                budget,
            } => gen_variation_instance(n_items, capacity, horizon, budget, seed),
        }
    }
}
