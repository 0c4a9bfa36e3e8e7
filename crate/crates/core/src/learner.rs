//! Epoch-based UCB learner for near-stationary environments.
//!
//! An epoch keeps offering one assortment until the first no-purchase. At
//! the end of an epoch every offered item's purchase count for that epoch is
//! folded into a running mean, and its upper confidence bound becomes
//!
//! ```text
//! ω̂_j = ω̄_j + √(c·192 ω̄_j log NT / n_j) + c·192 log NT / n_j
//! ```
//!
//! with `c` the constant scale factor. The next assortment maximizes the
//! expected payoff under the UCBs.

use crate::environment::ChoiceOutcome;
use crate::error::{Error, Result};
use crate::model::{expected_payoff, log_nt, Assortment, ItemCatalog};
use crate::optimizer::optimal_assortment;

/// Exploration constant of the UCB before scaling.
pub const UCB_CONSTANT: f64 = 192.0;

/// What the multi-scale scheduler needs from a base learner.
pub trait BaseLearner {
    /// Assortment to offer this round.
    fn act(&self) -> &Assortment;
    /// Feeds back the outcome of the round in which [`act`](Self::act) was offered.
    fn observe(&mut self, outcome: &ChoiceOutcome) -> Result<()>;
    /// Optimistic estimate `Ř ∈ [0, 1]` of the achievable expected payoff.
    fn reward_upper_bound(&self) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochUcb {
    catalog: ItemCatalog,
    horizon: usize,
    c_scale: f64,
    /// `c · 192 · log NT`
    bonus: f64,
    epochs_completed: Vec<u64>,
    epoch_purchases: Vec<u64>,
    mean_purchases: Vec<f64>,
    ucb: Vec<f64>,
    current: Assortment,
    round: u64,
}

impl EpochUcb {
    pub fn new(catalog: ItemCatalog, horizon: usize, c_scale: f64) -> Result<Self> {
        if !(c_scale > 0.0 && c_scale.is_finite()) {
            return Err(Error::config(
                "learner.c_scale",
                format!("must be positive, got {c_scale}"),
            ));
        }
        let bonus = c_scale * UCB_CONSTANT * log_nt(catalog.n_items(), horizon)?;
        let n = catalog.n_items();
        let ucb = vec![bonus; n];
        let current = optimal_assortment(&ucb, &catalog)?.assortment;
        Ok(Self {
            catalog,
            horizon,
            c_scale,
            bonus,
            epochs_completed: vec![0; n],
            epoch_purchases: vec![0; n],
            mean_purchases: vec![0.0; n],
            ucb,
            current,
            round: 0,
        })
    }

    pub fn catalog(&self) -> &ItemCatalog {
        &self.catalog
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn c_scale(&self) -> f64 {
        self.c_scale
    }

    /// `ω̂`.
    pub fn ucb(&self) -> &[f64] {
        &self.ucb
    }

    /// `ω̄`.
    pub fn mean_purchases(&self) -> &[f64] {
        &self.mean_purchases
    }

    /// `n_j`.
    pub fn epochs_completed(&self) -> &[u64] {
        &self.epochs_completed
    }

    /// `ω̃`: purchases within the current epoch.
    pub fn epoch_purchases(&self) -> &[u64] {
        &self.epoch_purchases
    }

    /// Rounds observed so far.
    pub fn round(&self) -> u64 {
        self.round
    }

    /// UCB for an item with running mean `mean` after `epochs ≥ 1` epochs.
    pub fn ucb_value(&self, mean: f64, epochs: u64) -> f64 {
        let n = epochs as f64;
        mean + (self.bonus * mean / n).sqrt() + self.bonus / n
    }

    fn end_epoch(&mut self) -> Result<()> {
        for &j in self.current.items() {
            self.epochs_completed[j] += 1;
            let n = self.epochs_completed[j] as f64;
            self.mean_purchases[j] =
                (n - 1.0) / n * self.mean_purchases[j] + self.epoch_purchases[j] as f64 / n;
            self.ucb[j] = self.ucb_value(self.mean_purchases[j], self.epochs_completed[j]);
            self.epoch_purchases[j] = 0;
        }
        self.current = optimal_assortment(&self.ucb, &self.catalog)?.assortment;
        Ok(())
    }
}

impl BaseLearner for EpochUcb {
    fn act(&self) -> &Assortment {
        &self.current
    }

    fn observe(&mut self, outcome: &ChoiceOutcome) -> Result<()> {
        match outcome.chosen {
            Some(j) if !self.current.contains(j) => {
                return Err(Error::Protocol(format!(
                    "item {} was not offered (offered {{{}}})",
                    j + 1,
                    self.current.to_external()
                )))
            }
            Some(j) => self.epoch_purchases[j] += 1,
            None => self.end_epoch()?,
        }
        self.round += 1;
        Ok(())
    }

    fn reward_upper_bound(&self) -> f64 {
        expected_payoff(&self.ucb, &self.catalog, &self.current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::sample_choice;
    use crate::rng::stream;

    fn purchase(j: usize) -> ChoiceOutcome {
        ChoiceOutcome {
            chosen: Some(j),
            reward: 1.0,
        }
    }

    #[test]
    fn initial_ucbs() {
        let learner = EpochUcb::new(ItemCatalog::uniform(10, 3).unwrap(), 100, 1.0).unwrap();
        // 192 ln 1000 = 1326.289013564570...
        for &u in learner.ucb() {
            assert!((u - 1_326.289_013_564_570_3).abs() < 1e-9);
        }
        assert_eq!(learner.act().items(), &[0, 1, 2]);
        assert_eq!(
            learner,
            EpochUcb::new(ItemCatalog::uniform(10, 3).unwrap(), 100, 1.0).unwrap()
        );
    }

    #[test]
    fn initial_reward_upper_bound() {
        let learner = EpochUcb::new(ItemCatalog::uniform(10, 2).unwrap(), 100, 1.0).unwrap();
        // 2u/(1+2u) with u = 192 ln 1000: 0.99962315033144818...
        assert!((learner.reward_upper_bound() - 0.999_623_150_331_448_2).abs() < 1e-15);
    }

    #[test]
    fn ucb_update_reference_value() {
        let learner = EpochUcb::new(ItemCatalog::uniform(10, 2).unwrap(), 100, 1.0).unwrap();
        // 0.5 + √(192·0.5·ln1000/4) + 192·ln1000/4 = 344.94804954887866...
        assert!((learner.ucb_value(0.5, 4) - 344.948_049_548_878_66).abs() < 1e-9);
    }

    #[test]
    fn running_mean_over_epochs() {
        let mut l = EpochUcb::new(ItemCatalog::uniform(2, 2).unwrap(), 100, 1.0).unwrap();
        assert_eq!(l.act().items(), &[0, 1]);
        for _ in 0..3 {
            l.observe(&purchase(0)).unwrap();
        }
        l.observe(&ChoiceOutcome::NO_PURCHASE).unwrap();
        assert_eq!(l.mean_purchases()[0], 3.0);
        assert_eq!(l.epochs_completed(), &[1, 1]);
        assert_eq!(l.epoch_purchases(), &[0, 0]);
        l.observe(&purchase(0)).unwrap();
        l.observe(&ChoiceOutcome::NO_PURCHASE).unwrap();
        assert_eq!(l.mean_purchases()[0], 2.0);
        assert_eq!(l.mean_purchases()[1], 0.0);
        assert_eq!(l.round(), 6);
    }

    #[test]
    fn items_outside_the_assortment_are_untouched() {
        let mut l = EpochUcb::new(ItemCatalog::uniform(4, 2).unwrap(), 100, 1.0).unwrap();
        let before = l.ucb()[3];
        l.observe(&purchase(1)).unwrap();
        l.observe(&ChoiceOutcome::NO_PURCHASE).unwrap();
        assert_eq!(l.ucb()[3], before);
        assert_eq!(l.epochs_completed()[3], 0);
        // item 1 now leads; items 0, 2 and 3 tie at the initial bonus
        assert_eq!(l.act().items(), &[0, 1]);
    }

    #[test]
    fn unoffered_purchase_is_a_protocol_error() {
        let mut l = EpochUcb::new(ItemCatalog::uniform(4, 2).unwrap(), 100, 1.0).unwrap();
        assert!(matches!(l.observe(&purchase(3)), Err(Error::Protocol(_))));
    }

    #[test]
    fn invalid_constants_are_rejected() {
        let cat = ItemCatalog::uniform(1, 1).unwrap();
        assert!(EpochUcb::new(cat.clone(), 2, 1.0).is_err());
        assert!(EpochUcb::new(cat.clone(), 3, 0.0).is_err());
        assert!(EpochUcb::new(cat, 3, f64::NAN).is_err());
    }

    #[test]
    fn assortment_changes_only_after_no_purchase() {
        let cat = ItemCatalog::new(3, vec![0.9, 0.5, 0.7, 0.2, 1.0]).unwrap();
        let omega = [0.8, 0.3, 0.6, 0.9, 0.1];
        let mut l = EpochUcb::new(cat, 2000, 1.0 / 192.0).unwrap();
        let mut rng = stream(3, "learner", 0);
        let mut previous = l.act().clone();
        let mut last_was_no_purchase = true;
        for _ in 0..2000 {
            let s = l.act().clone();
            if s != previous {
                assert!(last_was_no_purchase);
            }
            let chosen = sample_choice(&omega, &s, &mut rng);
            l.observe(&ChoiceOutcome { chosen, reward: 0.0 }).unwrap();
            last_was_no_purchase = chosen.is_none();
            previous = s;
            for j in 0..5 {
                if l.epochs_completed()[j] >= 1 {
                    assert!(l.ucb()[j] >= l.mean_purchases()[j]);
                }
            }
            let r = l.reward_upper_bound();
            assert!((0.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn ucb_shrinks_with_more_epochs() {
        let l = EpochUcb::new(ItemCatalog::uniform(3, 1).unwrap(), 50, 1.0).unwrap();
        for mean in [0.0, 0.3, 1.0, 2.5] {
            let mut prev = f64::INFINITY;
            for n in 1..200 {
                let u = l.ucb_value(mean, n);
                assert!(u >= mean && u <= prev);
                prev = u;
            }
        }
    }
}
