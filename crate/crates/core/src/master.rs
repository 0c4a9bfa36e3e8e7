//! Multi-scale scheduling and restart tests around a base learner.
//!
//! Time is cut into blocks of length `2^n` with `n = 0, 1, 2, …`, restarting
//! from `n = 0` after every detected change. At the start of a block, every
//! aligned sub-interval of length `2^m` (`m < n`) independently receives a
//! fresh base-learner instance with probability `ρ(2^n) / ρ(2^m)`; the
//! order-`n` instance spanning the block always exists. In each round the
//! shortest scheduled instance covering the round acts; longer ones pause.
//!
//! Two tests compare realized rewards with `u_min`, the running minimum of
//! the acting instances' reward upper bounds within the block:
//!
//! * test 1, when an order-`m` interval `I` ends: restart if the average
//!   reward over `I` is at least `u_min + c1·ρ(|I|)`;
//! * test 2, every round: restart if the average reward since the block start
//!   is at most `u_min − c2·ρ(elapsed)`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::environment::ChoiceOutcome;
use crate::error::{Error, Result};
use crate::learner::BaseLearner;
use crate::model::{Assortment, Rho};
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MasterConfig {
    pub c1: f64,
    pub c2: f64,
    pub enable_test1: bool,
    pub enable_test2: bool,
    /// Schedule only the block-length instance (no shorter ones).
    pub force_full_block_only: bool,
}

impl Default for MasterConfig {
    fn default() -> Self {
        Self {
            c1: 9.0,
            c2: 3.0,
            enable_test1: true,
            enable_test2: true,
            force_full_block_only: false,
        }
    }
}

impl MasterConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("master.c1", self.c1), ("master.c2", self.c2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(field, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// A scheduled instance slot, relative to its block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SlotSpec {
    pub order: u32,
    /// Offset of the first round from the block start.
    pub offset: usize,
}

impl SlotSpec {
    /// Number of rounds the slot spans.
    pub fn rounds(&self) -> usize {
        1 << self.order
    }
}

/// Probability that an order-`m` slot is scheduled inside an order-`n` block.
pub fn scheduling_probability(rho: &Rho, n: u32, m: u32) -> f64 {
    (rho.eval((1u64 << n) as f64) / rho.eval((1u64 << m) as f64)).min(1.0)
}

/// Draws the instance slots of an order-`n` block, sorted by `(order, offset)`.
/// Slots starting at or beyond `max_len` are dropped.
pub fn schedule_block<R: Rng + ?Sized>(
    n: u32,
    rho: &Rho,
    rng: &mut R,
    full_block_only: bool,
    max_len: usize,
) -> Vec<SlotSpec> {
    let mut slots = Vec::new();
    if !full_block_only {
        for m in 0..n {
            let p = scheduling_probability(rho, n, m);
            let len = 1usize << m;
            for i in 0..(1usize << (n - m)) {
                let offset = i * len;
                if offset >= max_len {
                    break;
                }
                if rng.random::<f64>() < p {
                    slots.push(SlotSpec { order: m, offset });
                }
            }
        }
    }
    slots.push(SlotSpec { order: n, offset: 0 });
    slots
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RestartTest {
    Test1,
    Test2,
}

/// What happened at the end of a round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundReport {
    pub restart: Option<RestartTest>,
}

#[derive(Debug, Clone)]
struct Slot<L> {
    spec: SlotSpec,
    learner: Option<L>,
}

#[derive(Debug, Clone)]
struct Block<L> {
    order: u32,
    /// Global round of the first block round.
    start: usize,
    /// Rounds in the block after truncation at the horizon.
    len: usize,
    slots: BTreeMap<(u32, usize), Slot<L>>,
    u_min: f64,
    /// `reward_prefix[i]` = reward collected in the first `i` block rounds.
    reward_prefix: Vec<f64>,
}

impl<L> Block<L> {
    fn active_key(&self, t: usize) -> (u32, usize) {
        let rel = t - self.start;
        (0..=self.order)
            .map(|m| (m, rel >> m << m))
            .find(|key| self.slots.contains_key(key))
            .expect("the block-length instance covers every round")
    }

    fn mean_reward(&self, from: usize, to: usize) -> f64 {
        (self.reward_prefix[to] - self.reward_prefix[from]) / (to - from) as f64
    }
}

/// Multi-scale scheduler state. `F` builds fresh base-learner instances.
pub struct Master<L, F> {
    config: MasterConfig,
    rho: Rho,
    horizon: usize,
    factory: F,
    rng: Stream,
    block: Option<Block<L>>,
    next_order: u32,
    restarts: Vec<usize>,
}

impl<L, F> Master<L, F>
where
    L: BaseLearner,
    F: FnMut() -> Result<L>,
{
    pub fn new(config: MasterConfig, rho: Rho, horizon: usize, factory: F, rng: Stream) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            rho,
            horizon,
            factory,
            rng,
            block: None,
            next_order: 0,
            restarts: Vec::new(),
        })
    }

    pub fn config(&self) -> &MasterConfig {
        &self.config
    }

    /// Rounds at which a restart test fired.
    pub fn restarts(&self) -> &[usize] {
        &self.restarts
    }

    pub fn block_order(&self) -> Option<u32> {
        self.block.as_ref().map(|b| b.order)
    }

    pub fn block_start(&self) -> Option<usize> {
        self.block.as_ref().map(|b| b.start)
    }

    pub fn u_min(&self) -> Option<f64> {
        self.block.as_ref().map(|b| b.u_min)
    }

    /// Slots of the current block.
    pub fn slots(&self) -> Vec<SlotSpec> {
        self.block
            .as_ref()
            .map(|b| b.slots.values().map(|s| s.spec).collect())
            .unwrap_or_default()
    }

    fn ensure_block(&mut self, t: usize) {
        if self.block.is_some() {
            return;
        }
        let order = self.next_order;
        let len = (1usize << order).min(self.horizon + 1 - t);
        let specs = schedule_block(
            order,
            &self.rho,
            &mut self.rng,
            self.config.force_full_block_only,
            len,
        );
        let slots = specs
            .into_iter()
            .map(|spec| ((spec.order, spec.offset), Slot { spec, learner: None }))
            .collect();
        self.block = Some(Block {
            order,
            start: t,
            len,
            slots,
            u_min: f64::INFINITY,
            reward_prefix: vec![0.0],
        });
    }

    /// The acting instance at round `t`: `(order, start round)`.
    pub fn active_instance(&mut self, t: usize) -> (u32, usize) {
        self.ensure_block(t);
        let block = self.block.as_ref().expect("block exists");
        let (order, offset) = block.active_key(t);
        (order, block.start + offset)
    }

    fn active_learner(&mut self, t: usize) -> Result<&mut L> {
        self.ensure_block(t);
        let block = self.block.as_mut().expect("block exists");
        let key = block.active_key(t);
        let slot = block.slots.get_mut(&key).expect("active slot exists");
        if slot.learner.is_none() {
            slot.learner = Some((self.factory)()?);
        }
        Ok(slot.learner.as_mut().expect("just created"))
    }

    /// Assortment and reward upper bound of the instance acting at round `t`.
    /// Also folds the upper bound into `u_min`.
    pub fn act(&mut self, t: usize) -> Result<(Assortment, f64)> {
        let learner = self.active_learner(t)?;
        let offered = learner.act().clone();
        let rhat = learner.reward_upper_bound();
        let block = self.block.as_mut().expect("block exists");
        block.u_min = block.u_min.min(rhat);
        Ok((offered, rhat))
    }

    /// Feeds the round-`t` outcome to the acting instance and runs the tests.
    pub fn observe(&mut self, t: usize, outcome: &ChoiceOutcome) -> Result<RoundReport> {
        self.active_learner(t)?.observe(outcome)?;
        let rho = self.rho;
        let config = self.config.clone();
        let block = self.block.as_mut().expect("block exists");
        let prev = *block.reward_prefix.last().expect("prefix starts at 0");
        block.reward_prefix.push(prev + outcome.reward);
        let elapsed = t - block.start + 1;

        let mut fired = None;
        if config.enable_test1 {
            for m in 0..=block.order {
                let offset = (elapsed - 1) >> m << m;
                let end = (offset + (1usize << m)).min(block.len);
                if end != elapsed || !block.slots.contains_key(&(m, offset)) {
                    continue;
                }
                let len = end - offset;
                if block.mean_reward(offset, end) >= block.u_min + config.c1 * rho.eval(len as f64) {
                    fired = Some(RestartTest::Test1);
                    break;
                }
            }
        }
        if fired.is_none()
            && config.enable_test2
            && block.mean_reward(0, elapsed) <= block.u_min - config.c2 * rho.eval(elapsed as f64)
        {
            fired = Some(RestartTest::Test2);
        }

        if fired.is_some() {
            self.restarts.push(t);
            self.block = None;
            self.next_order = 0;
        } else if elapsed == block.len {
            self.next_order = block.order + 1;
            self.block = None;
        }
        Ok(RoundReport { restart: fired })
    }
}
