//! Static problem data, MNL choice probabilities and payoffs, and the
//! non-stationarity metrics of a parameter schedule.
//!
//! Items are indexed from 0 inside the library. Everything that leaves the
//! process (CSV, JSON, Python) uses 1-based item indices with 0 reserved for
//! the no-purchase option.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constant in front of the per-step payoff-variation bound.
pub const DELTA_FACTOR: f64 = 26.0;

/// `N` items with payoffs in `[0, 1]` and at most `K` items per assortment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemCatalog {
    n_items: usize,
    capacity: usize,
    payoffs: Vec<f64>,
}

impl ItemCatalog {
    pub fn new(capacity: usize, payoffs: Vec<f64>) -> Result<Self> {
        let n_items = payoffs.len();
        if n_items == 0 {
            return Err(Error::config("catalog.payoffs", "at least one item is required"));
        }
        if capacity == 0 || capacity > n_items {
            return Err(Error::config(
                "catalog.capacity",
                format!("capacity must lie in [1, {n_items}], got {capacity}"),
            ));
        }
        if let Some((j, r)) = payoffs
            .iter()
            .enumerate()
            .find(|(_, r)| !(0.0..=1.0).contains(*r))
        {
            return Err(Error::config(
                format!("catalog.payoffs[{j}]"),
                format!("payoff {r} outside [0, 1]"),
            ));
        }
        Ok(Self {
            n_items,
            capacity,
            payoffs,
        })
    }

    /// Every item pays 1.
    pub fn uniform(n_items: usize, capacity: usize) -> Result<Self> {
        Self::new(capacity, vec![1.0; n_items])
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn payoffs(&self) -> &[f64] {
        &self.payoffs
    }

    pub fn payoff(&self, item: usize) -> f64 {
        self.payoffs[item]
    }

    pub fn max_payoff(&self) -> f64 {
        self.payoffs.iter().copied().fold(0.0, f64::max)
    }
}

/// True attraction parameters `ω_j ∈ [0, 1]`; the no-purchase weight is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AttractionVector(Vec<f64>);

impl AttractionVector {
    pub fn new(omega: Vec<f64>) -> Result<Self> {
        if let Some((j, w)) = omega.iter().enumerate().find(|(_, w)| !(0.0..=1.0).contains(*w)) {
            return Err(Error::Domain(format!(
                "attraction parameter {w} of item {} outside [0, 1]",
                j + 1
            )));
        }
        Ok(Self(omega))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Deref for AttractionVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for AttractionVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<AttractionVector> for Vec<f64> {
    fn from(v: AttractionVector) -> Self {
        v.0
    }
}

/// The adversary's parameter trajectory `ω(1), …, ω(T)`. Rounds are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSchedule {
    n_items: usize,
    values: Vec<AttractionVector>,
}

impl ParamSchedule {
    pub fn new(values: Vec<AttractionVector>) -> Result<Self> {
        let n_items = match values.first() {
            Some(v) => v.len(),
            None => return Err(Error::Domain("schedule must cover at least one round".into())),
        };
        if let Some(t) = values.iter().position(|v| v.len() != n_items) {
            return Err(Error::Domain(format!(
                "round {} has {} items, expected {n_items}",
                t + 1,
                values[t].len()
            )));
        }
        Ok(Self { n_items, values })
    }

    pub fn constant(omega: AttractionVector, horizon: usize) -> Result<Self> {
        Self::new(vec![omega; horizon])
    }

    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    /// `ω(t)` for `1 ≤ t ≤ T`. Panics outside that range.
    pub fn omega(&self, t: usize) -> &AttractionVector {
        assert!(
            (1..=self.values.len()).contains(&t),
            "round {t} outside [1, {}]",
            self.values.len()
        );
        &self.values[t - 1]
    }

    pub fn get(&self, t: usize) -> Result<&AttractionVector> {
        if t == 0 || t > self.values.len() {
            return Err(Error::Domain(format!(
                "round {t} outside [1, {}]",
                self.values.len()
            )));
        }
        Ok(&self.values[t - 1])
    }

    pub fn iter(&self) -> impl Iterator<Item = &AttractionVector> {
        self.values.iter()
    }

    /// Rounds at which the vector differs from the previous round's.
    pub fn change_points(&self) -> Vec<usize> {
        (2..=self.horizon())
            .filter(|&t| self.values[t - 2] != self.values[t - 1])
            .collect()
    }
}

/// A sorted set of distinct item indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Assortment(Vec<usize>);

impl Assortment {
    pub const fn empty() -> Self {
        Self(Vec::new())
    }

    /// Validates `items` against `catalog` (range, distinctness, capacity).
    pub fn new(mut items: Vec<usize>, catalog: &ItemCatalog) -> Result<Self> {
        items.sort_unstable();
        if items.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain(format!("duplicate items in assortment {items:?}")));
        }
        if let Some(&j) = items.iter().find(|&&j| j >= catalog.n_items()) {
            return Err(Error::Domain(format!(
                "item index {j} out of range for {} items",
                catalog.n_items()
            )));
        }
        if items.len() > catalog.capacity() {
            return Err(Error::Domain(format!(
                "assortment of size {} exceeds capacity {}",
                items.len(),
                catalog.capacity()
            )));
        }
        Ok(Self(items))
    }

    /// Caller guarantees `items` is strictly increasing.
    pub(crate) fn from_sorted(items: Vec<usize>) -> Self {
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]));
        Self(items)
    }

    pub fn items(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: usize) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    /// Semicolon-joined 1-based indices; empty string for the empty set.
    pub fn to_external(&self) -> String {
        self.0
            .iter()
            .map(|j| (j + 1).to_string())
            .collect::<Vec<_>>()
            .join(";")
    }
}

fn denominator(omega: &[f64], s: &Assortment) -> f64 {
    1.0 + s.items().iter().map(|&r| omega[r]).sum::<f64>()
}

/// MNL probability that `item` (or the no-purchase option, `None`) is chosen
/// when `s` is offered.
pub fn choice_prob(omega: &[f64], s: &Assortment, item: Option<usize>) -> Result<f64> {
    let denom = denominator(omega, s);
    match item {
        None => Ok(1.0 / denom),
        Some(j) if s.contains(j) => Ok(omega[j] / denom),
        Some(j) => Err(Error::Domain(format!(
            "item {} is not in the offered assortment",
            j + 1
        ))),
    }
}

/// `R(S, ω) = Σ_{j∈S} r_j ω_j / (1 + Σ_{j∈S} ω_j)`.
///
/// `omega` may hold any nonnegative weights, including UCB values above 1.
pub fn expected_payoff(omega: &[f64], catalog: &ItemCatalog, s: &Assortment) -> f64 {
    if s.is_empty() {
        return 0.0;
    }
    let num: f64 = s.items().iter().map(|&j| catalog.payoff(j) * omega[j]).sum();
    num / denominator(omega, s)
}

/// Sum of the `2K` largest absolute coordinates of `x`.
pub fn l2k_norm(x: &[f64], k_cap: usize) -> f64 {
    let mut abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let take = (2 * k_cap).min(abs.len());
    if take < abs.len() {
        abs.select_nth_unstable_by(take, |a, b| b.total_cmp(a));
    }
    abs[..take].iter().sum()
}

fn abs_diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect()
}

/// Switch count, total variation in the `L^{2K}_∞` and `L_∞` norms, and the
/// cumulative drift budgets of a schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationSummary {
    /// `L`: one plus the number of rounds at which ω changes.
    pub switches: usize,
    /// `Δ∞^K`.
    pub var_2k: f64,
    /// `Δ∞`.
    pub var_inf: f64,
    /// `Δ(t) = 26‖ω(t) − ω(t+1)‖` for `t = 1..T−1` (index `t − 1`).
    pub per_step_delta: Vec<f64>,
    /// `δ^(t)` for `t = 1..T` (index `t − 1`).
    pub delta_budget: Vec<f64>,
    /// `δ_j^(t)`, indexed `[j][t − 1]`.
    pub delta_budget_item: Vec<Vec<f64>>,
}

impl VariationSummary {
    /// `δ^(t)`.
    pub fn delta(&self, t: usize) -> f64 {
        self.delta_budget[t - 1]
    }

    /// `δ_j^(t)`.
    pub fn delta_item(&self, j: usize, t: usize) -> f64 {
        self.delta_budget_item[j][t - 1]
    }

    /// `Σ_{τ<t} Δ(τ)`.
    pub fn cumulative_delta(&self, t: usize) -> f64 {
        DELTA_FACTOR * self.delta_budget[t - 1]
    }
}

pub fn variation_summary(schedule: &ParamSchedule, k_cap: usize) -> VariationSummary {
    let horizon = schedule.horizon();
    let n = schedule.n_items();
    let mut per_step_delta = Vec::with_capacity(horizon.saturating_sub(1));
    let mut delta_budget = Vec::with_capacity(horizon);
    let mut delta_budget_item: Vec<Vec<f64>> = (0..n).map(|_| Vec::with_capacity(horizon)).collect();

    let mut switches = 1;
    let mut var_2k = 0.0;
    let mut var_inf = 0.0;
    delta_budget.push(0.0);
    for row in delta_budget_item.iter_mut() {
        row.push(0.0);
    }
    for t in 1..horizon {
        let (cur, next) = (schedule.omega(t), schedule.omega(t + 1));
        if cur != next {
            switches += 1;
        }
        let diff = abs_diff(cur, next);
        let norm = l2k_norm(&diff, k_cap);
        var_2k += norm;
        var_inf += diff.iter().copied().fold(0.0, f64::max);
        per_step_delta.push(DELTA_FACTOR * norm);
        delta_budget.push(var_2k);
        for (row, d) in delta_budget_item.iter_mut().zip(&diff) {
            let prev = *row.last().expect("row starts non-empty");
            row.push(prev + d);
        }
    }

    VariationSummary {
        switches,
        var_2k,
        var_inf,
        per_step_delta,
        delta_budget,
        delta_budget_item,
    }
}

/// `log(NT)`, natural base. Requires `NT ≥ 3` so that it is at least 1.
pub fn log_nt(n_items: usize, horizon: usize) -> Result<f64> {
    let nt = n_items as f64 * horizon as f64;
    if nt < 3.0 {
        return Err(Error::config(
            "horizon",
            format!("N·T must be at least 3, got {n_items}·{horizon}"),
        ));
    }
    Ok(nt.ln())
}

/// The tolerance function
/// `ρ(t) = (c·149 log NT)^{3/2} √(N/t) + (c·55 log NT)^3 N/t + √(2 log T / t)`,
/// where `c` is the constant scale factor (1 reproduces the original constants).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rho {
    n_items: f64,
    first: f64,
    second: f64,
    log_t: f64,
}

impl Rho {
    pub fn new(n_items: usize, horizon: usize, c_scale: f64) -> Result<Self> {
        let log_nt = log_nt(n_items, horizon)?;
        if !(c_scale >= 0.0 && c_scale.is_finite()) {
            return Err(Error::config(
                "c_scale",
                format!("must be finite and >= 0, got {c_scale}"),
            ));
        }
        Ok(Self {
            n_items: n_items as f64,
            first: (c_scale * 149.0 * log_nt).powf(1.5),
            second: (c_scale * 55.0 * log_nt).powi(3),
            log_t: (horizon as f64).ln(),
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        debug_assert!(t >= 1.0);
        self.first * (self.n_items / t).sqrt()
            + self.second * self.n_items / t
            + (2.0 * self.log_t / t).sqrt()
    }
}

/// Convenience wrapper around [`Rho`].
pub fn rho(t: usize, n_items: usize, horizon: usize, c_scale: f64) -> Result<f64> {
    if t == 0 {
        return Err(Error::Domain("rho is defined for t >= 1".into()));
    }
    Ok(Rho::new(n_items, horizon, c_scale)?.eval(t as f64))
}

/// Rounds `t` with `Σ_{τ<t} Δ(τ) ≤ ρ(t)`.
pub fn near_stationary_part(summary: &VariationSummary, rho: &Rho) -> Vec<usize> {
    (1..=summary.delta_budget.len())
        .filter(|&t| summary.cumulative_delta(t) <= rho.eval(t as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(items: &[usize]) -> Assortment {
        Assortment::from_sorted(items.to_vec())
    }

    fn vector(v: &[f64]) -> AttractionVector {
        AttractionVector::new(v.to_vec()).unwrap()
    }

    /// Brute-force `L^{2K}_∞` norm over every subset of size ≤ 2K.
    fn l2k_brute(x: &[f64], k_cap: usize) -> f64 {
        let n = x.len();
        (0u32..1 << n)
            .filter(|m| m.count_ones() as usize <= 2 * k_cap)
            .map(|m| {
                (0..n)
                    .filter(|i| m >> i & 1 == 1)
                    .map(|i| x[i].abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn choice_prob_examples() {
        let s = set(&[0, 1]);
        assert_eq!(choice_prob(&[0.5, 0.5], &s, Some(0)).unwrap(), 0.25);
        assert_eq!(choice_prob(&[0.5, 0.5], &s, None).unwrap(), 0.5);
        assert_eq!(choice_prob(&[0.3, 0.9], &Assortment::empty(), None).unwrap(), 1.0);
        assert!((choice_prob(&[0.2, 0.4], &s, Some(1)).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn choice_prob_rejects_items_outside_the_assortment() {
        let err = choice_prob(&[0.5, 0.5], &set(&[0]), Some(1)).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn expected_payoff_examples() {
        let one = ItemCatalog::new(1, vec![1.0]).unwrap();
        assert_eq!(expected_payoff(&[1.0], &one, &set(&[0])), 0.5);
        assert_eq!(expected_payoff(&[1.0], &one, &Assortment::empty()), 0.0);

        let cat = ItemCatalog::new(2, vec![1.0, 0.5]).unwrap();
        let omega = [0.2, 0.4];
        let s = set(&[0, 1]);
        // probability-weighted sum over outcomes
        let brute: f64 = s
            .items()
            .iter()
            .map(|&j| cat.payoff(j) * choice_prob(&omega, &s, Some(j)).unwrap())
            .sum();
        let r = expected_payoff(&omega, &cat, &s);
        assert!((r - brute).abs() < 1e-15);
        assert!((r - 0.25).abs() < 1e-15);
    }

    #[test]
    fn catalog_validation() {
        assert!(ItemCatalog::new(0, vec![1.0]).is_err());
        assert!(ItemCatalog::new(2, vec![1.0]).is_err());
        assert!(ItemCatalog::new(1, vec![1.5]).is_err());
        assert!(ItemCatalog::new(1, vec![-0.1]).is_err());
        assert!(AttractionVector::new(vec![1.01]).is_err());
    }

    #[test]
    fn assortment_validation() {
        let cat = ItemCatalog::uniform(4, 2).unwrap();
        assert_eq!(Assortment::new(vec![3, 1], &cat).unwrap().items(), &[1, 3]);
        assert!(Assortment::new(vec![1, 1], &cat).is_err());
        assert!(Assortment::new(vec![4], &cat).is_err());
        assert!(Assortment::new(vec![0, 1, 2], &cat).is_err());
        assert_eq!(Assortment::new(vec![0, 2], &cat).unwrap().to_external(), "1;3");
        assert_eq!(Assortment::empty().to_external(), "");
    }

    #[test]
    fn l2k_norm_examples() {
        assert_eq!(l2k_norm(&[0.0; 5], 1), 0.0);
        assert_eq!(l2k_norm(&[1.0, -2.0, 0.5], 2), 3.5);
        assert_eq!(l2k_norm(&[3.0, -1.0, 2.0, 0.5], 1), 5.0);
        assert_eq!(l2k_brute(&[3.0, -1.0, 2.0, 0.5], 1), 5.0);
    }

    #[test]
    fn variation_of_constant_schedule_is_zero() {
        let s = ParamSchedule::constant(vector(&[0.3, 0.3]), 10).unwrap();
        let v = variation_summary(&s, 1);
        assert_eq!(v.switches, 1);
        assert_eq!(v.var_2k, 0.0);
        assert_eq!(v.var_inf, 0.0);
        assert!(v.per_step_delta.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn variation_single_jump() {
        let before = vector(&[0.1, 0.1, 0.1, 0.1]);
        let after = vector(&[0.3, 0.1, 0.1, 0.2]);
        let mut values = vec![before; 5];
        values.extend(vec![after; 5]);
        let s = ParamSchedule::new(values).unwrap();
        let v = variation_summary(&s, 1);
        assert_eq!(v.switches, 2);
        assert!((v.var_2k - 0.3).abs() < 1e-15);
        assert!((v.var_inf - 0.2).abs() < 1e-15);
        // same value as the subset-enumeration oracle
        assert!((v.var_2k - l2k_brute(&[0.2, 0.0, 0.0, 0.1], 1)).abs() < 1e-15);
        for t in 1..=5 {
            assert_eq!(v.delta(t), 0.0);
        }
        for t in 6..=10 {
            assert_eq!(v.delta(t), v.var_2k);
        }
        assert!((v.delta_item(0, 10) - 0.2).abs() < 1e-15);
        assert!((v.per_step_delta[4] - 26.0 * 0.3).abs() < 1e-12);
    }

    #[test]
    fn rho_reference_value() {
        // 40-digit evaluation: 5494460.673471409420...
        let r = rho(100, 10, 100, 1.0).unwrap();
        assert!((r - 5_494_460.673_471_409).abs() / r < 1e-12, "{r}");
    }

    #[test]
    fn rho_without_scaled_terms() {
        let r = rho(7, 10, 100, 0.0).unwrap();
        assert!((r - (2.0 * 100f64.ln() / 7.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rho_requires_nt_at_least_three() {
        assert!(matches!(rho(1, 1, 2, 1.0), Err(Error::Config { .. })));
        assert!(rho(1, 1, 3, 1.0).is_ok());
        assert!(rho(0, 10, 10, 1.0).is_err());
    }

    #[test]
    fn rho_definition_requirements() {
        for &(n, horizon, c) in &[
            (10, 1_000_000, 1.0),
            (3, 1_000_000, 1.0 / 192.0),
            (50, 1_000_000, 0.01),
        ] {
            let rho = Rho::new(n, horizon, c).unwrap();
            let mut prev: Option<(f64, f64)> = None;
            for i in 0..=240 {
                let t = 10f64.powf(i as f64 / 40.0).round();
                let r = rho.eval(t);
                assert!(r >= 1.0 / t.sqrt(), "rho({t}) = {r}");
                if let Some((pt, pr)) = prev {
                    if t > pt {
                        assert!(r <= pr);
                        assert!(t * r >= pt * pr);
                    }
                }
                prev = Some((t, r));
            }
        }
    }

    #[test]
    fn near_stationary_part_examples() {
        let rho = Rho::new(10, 100, 1.0).unwrap();
        let flat = ParamSchedule::constant(vector(&[0.5; 10]), 100).unwrap();
        assert_eq!(
            near_stationary_part(&variation_summary(&flat, 2), &rho),
            (1..=100).collect::<Vec<_>>()
        );

        // one switch of Δ∞^K = 0.01
        let mut values = vec![vector(&[0.5; 10]); 50];
        let mut moved = vec![0.5; 10];
        moved[0] = 0.51;
        values.extend(vec![vector(&moved); 50]);
        let s = ParamSchedule::new(values).unwrap();
        let v = variation_summary(&s, 2);
        assert!((v.var_2k - 0.01).abs() < 1e-12);
        assert_eq!(near_stationary_part(&v, &rho).len(), 100);

        // with a tiny rho the post-switch rounds drop out
        let tight = Rho::new(10, 100, 0.0).unwrap();
        let mut values = vec![vector(&[0.0; 10]); 50];
        values.extend(vec![vector(&[1.0; 10]); 50]);
        let v = variation_summary(&ParamSchedule::new(values).unwrap(), 2);
        assert_eq!(near_stationary_part(&v, &tight), (1..=50).collect::<Vec<_>>());
    }

    fn schedule_strategy() -> impl Strategy<Value = (ParamSchedule, usize)> {
        (2usize..8, 2usize..12).prop_flat_map(|(n, horizon)| {
            (
                prop::collection::vec(prop::collection::vec(0.0f64..=1.0, n), horizon),
                1..=n,
            )
                .prop_map(|(rows, k)| {
                    let values = rows
                        .into_iter()
                        .map(|r| AttractionVector::new(r).unwrap())
                        .collect();
                    (ParamSchedule::new(values).unwrap(), k)
                })
        })
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(omega in prop::collection::vec(0.0f64..=1.0, 1..10), mask in any::<u16>()) {
            let items: Vec<usize> = (0..omega.len()).filter(|i| mask >> i & 1 == 1).collect();
            let s = set(&items);
            let total: f64 = choice_prob(&omega, &s, None).unwrap()
                + items.iter().map(|&j| choice_prob(&omega, &s, Some(j)).unwrap()).sum::<f64>();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn payoff_ignores_items_outside_the_assortment(
            omega in prop::collection::vec(0.0f64..=1.0, 4..8),
            payoffs in prop::collection::vec(0.0f64..=1.0, 8),
            other in 0.0f64..=1.0,
        ) {
            let n = omega.len();
            let cat = ItemCatalog::new(2, payoffs[..n].to_vec()).unwrap();
            let s = set(&[0, 1]);
            let mut perturbed = omega.clone();
            perturbed.swap(2, n - 1);
            perturbed[2] = other;
            prop_assert_eq!(expected_payoff(&omega, &cat, &s), expected_payoff(&perturbed, &cat, &s));
        }

        #[test]
        fn l2k_norm_matches_subset_enumeration(x in prop::collection::vec(-2.0f64..2.0, 1..=12), k in 1usize..=7) {
            prop_assert!((l2k_norm(&x, k) - l2k_brute(&x, k)).abs() < 1e-12);
        }

        #[test]
        fn variation_bounds((schedule, k) in schedule_strategy()) {
            let v = variation_summary(&schedule, k);
            prop_assert!(v.switches >= 1);
            prop_assert!(v.var_2k <= 2.0 * k as f64 * v.var_inf + 1e-12);
            for t in 1..schedule.horizon() {
                prop_assert!(v.delta(t) <= v.delta(t + 1));
                for j in 0..schedule.n_items() {
                    prop_assert!(v.delta_item(j, t) <= v.delta_item(j, t + 1));
                    prop_assert!(v.delta_item(j, t + 1) <= v.delta(t + 1) + 1e-12);
                }
            }
        }
    }
}
