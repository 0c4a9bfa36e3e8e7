//! Capacitated MNL assortment optimization.
//!
//! For a threshold `λ`, the best assortment of size at most `K` under the
//! linearized objective `Σ_{j∈S} ω_j (r_j − λ)` is the top-K set of positive
//! weights; call its value `f(λ)`. `f` is continuous and non-increasing and
//! the optimal expected payoff is the unique fixed point `f(λ*) = λ*`. We
//! bisect on `λ`, polish with a few Dinkelbach steps `λ ← R(S(λ))`, and then
//! pick the canonical maximizer among ties.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{expected_payoff, Assortment, ItemCatalog};

/// Payoffs within this distance are treated as equal when breaking ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

const BISECTION_STEPS: usize = 200;
const POLISH_STEPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptResult {
    pub assortment: Assortment,
    pub value: f64,
}

fn validate(omega: &[f64], catalog: &ItemCatalog) -> Result<()> {
    if omega.len() != catalog.n_items() {
        return Err(Error::Domain(format!(
            "expected {} weights, got {}",
            catalog.n_items(),
            omega.len()
        )));
    }
    if let Some((j, w)) = omega
        .iter()
        .enumerate()
        .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
    {
        return Err(Error::Domain(format!(
            "weight of item {} must be finite and nonnegative, got {w}",
            j + 1
        )));
    }
    Ok(())
}

struct Linearized<'a> {
    omega: &'a [f64],
    payoffs: &'a [f64],
    capacity: usize,
    scratch: Vec<(f64, usize)>,
}

impl<'a> Linearized<'a> {
    fn new(omega: &'a [f64], catalog: &'a ItemCatalog) -> Self {
        Self {
            omega,
            payoffs: catalog.payoffs(),
            capacity: catalog.capacity(),
            scratch: Vec::with_capacity(omega.len()),
        }
    }

    /// Positive weights at `lambda`, top-K first (order within the top-K is
    /// unspecified).
    fn top(&mut self, lambda: f64) -> &[(f64, usize)] {
        self.scratch.clear();
        for (j, (&w, &r)) in self.omega.iter().zip(self.payoffs).enumerate() {
            let v = w * (r - lambda);
            if v > 0.0 {
                self.scratch.push((v, j));
            }
        }
        let k = self.capacity;
        if self.scratch.len() > k {
            self.scratch
                .select_nth_unstable_by(k, |a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            self.scratch.truncate(k);
        }
        &self.scratch
    }

    fn value(&mut self, lambda: f64) -> f64 {
        self.top(lambda).iter().map(|p| p.0).sum()
    }

    fn set(&mut self, lambda: f64) -> Assortment {
        let mut items: Vec<usize> = self.top(lambda).iter().map(|p| p.1).collect();
        items.sort_unstable();
        Assortment::from_sorted(items)
    }
}

/// Smallest-then-lexicographic maximizer of `Σ_S ω_j (r_j − λ*)`.
fn canonical_set(omega: &[f64], catalog: &ItemCatalog, lambda: f64) -> Assortment {
    let mut positive: Vec<(f64, usize)> = omega
        .iter()
        .zip(catalog.payoffs())
        .enumerate()
        .map(|(j, (&w, &r))| (w * (r - lambda), j))
        .filter(|p| p.0 > TIE_TOLERANCE)
        .collect();
    let k = catalog.capacity();
    if positive.len() > k {
        positive.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let boundary = positive[k - 1].0;
        let mut chosen: Vec<usize> = positive
            .iter()
            .filter(|p| p.0 > boundary + TIE_TOLERANCE)
            .map(|p| p.1)
            .collect();
        let mut ties: Vec<usize> = positive
            .iter()
            .filter(|p| (p.0 - boundary).abs() <= TIE_TOLERANCE)
            .map(|p| p.1)
            .collect();
        ties.sort_unstable();
        chosen.extend(ties.into_iter().take(k.saturating_sub(chosen.len())));
        positive = chosen.into_iter().map(|j| (0.0, j)).collect();
    }
    let mut items: Vec<usize> = positive.into_iter().map(|p| p.1).collect();
    items.sort_unstable();
    Assortment::from_sorted(items)
}

/// `argmax_{|S| ≤ K} R(S, ω)`. Accepts any finite nonnegative weights.
///
/// Among payoff-equal optima (within [`TIE_TOLERANCE`]) the smallest set
/// wins, then the lexicographically smallest sorted index list.
pub fn optimal_assortment(omega: &[f64], catalog: &ItemCatalog) -> Result<OptResult> {
    validate(omega, catalog)?;
    let mut lin = Linearized::new(omega, catalog);

    let (mut lo, mut hi) = (0.0, catalog.max_payoff());
    if lin.value(lo) <= lo {
        return Ok(OptResult {
            assortment: Assortment::empty(),
            value: 0.0,
        });
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let gap = lin.value(mid) - mid;
        if gap.abs() <= TIE_TOLERANCE || mid <= lo || mid >= hi {
            lo = mid;
            break;
        }
        if gap > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // Dinkelbach from below: R(S(λ)) ≥ λ whenever λ ≤ λ*.
    let mut best_set = lin.set(lo);
    let mut best = expected_payoff(omega, catalog, &best_set);
    for _ in 0..POLISH_STEPS {
        let next_set = lin.set(best);
        let next = expected_payoff(omega, catalog, &next_set);
        if next <= best {
            break;
        }
        best = next;
        best_set = next_set;
    }

    let canonical = canonical_set(omega, catalog, best);
    let value = expected_payoff(omega, catalog, &canonical);
    if value >= best - TIE_TOLERANCE {
        Ok(OptResult {
            assortment: canonical,
            value,
        })
    } else {
        Ok(OptResult {
            assortment: best_set,
            value: best,
        })
    }
}

pub const BRUTE_FORCE_MAX_ITEMS: usize = 20;

/// Exhaustive search over all subsets of size at most `K`, with the same
/// tie-break as [`optimal_assortment`].
pub fn brute_force_assortment(omega: &[f64], catalog: &ItemCatalog) -> Result<OptResult> {
    let n = catalog.n_items();
    if n > BRUTE_FORCE_MAX_ITEMS {
        return Err(Error::Refused(format!(
            "exhaustive search limited to {BRUTE_FORCE_MAX_ITEMS} items, got {n}"
        )));
    }
    validate(omega, catalog)?;
    let k = catalog.capacity() as u32;
    let candidates: Vec<(Assortment, f64)> = (0u32..1 << n)
        .filter(|m| m.count_ones() <= k)
        .map(|m| {
            let s = Assortment::from_sorted((0..n).filter(|i| m >> i & 1 == 1).collect());
            let v = expected_payoff(omega, catalog, &s);
            (s, v)
        })
        .collect();
    let best = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let (assortment, value) = candidates
        .into_iter()
        .filter(|c| c.1 >= best - TIE_TOLERANCE)
        .min_by(|a, b| {
            a.0.len()
                .cmp(&b.0.len())
                .then_with(|| a.0.items().cmp(b.0.items()))
        })
        .expect("the empty set is always a candidate");
    Ok(OptResult { assortment, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    fn items(r: &OptResult) -> Vec<usize> {
        r.assortment.items().to_vec()
    }

    #[test]
    fn uniform_payoffs_pick_top_k() {
        let cat = ItemCatalog::uniform(3, 2).unwrap();
        let r = optimal_assortment(&[0.9, 0.5, 0.1], &cat).unwrap();
        assert_eq!(items(&r), vec![0, 1]);
        assert!((r.value - 1.4 / 2.4).abs() < 1e-15);
    }

    #[test]
    fn high_payoff_low_weight_item_wins() {
        let cat = ItemCatalog::new(1, vec![1.0, 0.1]).unwrap();
        let omega = [0.1, 1.0];
        let r = optimal_assortment(&omega, &cat).unwrap();
        assert_eq!(items(&r), vec![0]);
        assert!((r.value - 0.1 / 1.1).abs() < 1e-15);
        assert_eq!(brute_force_assortment(&omega, &cat).unwrap(), r);
    }

    #[test]
    fn all_zero_weights_give_the_empty_set() {
        let cat = ItemCatalog::uniform(4, 2).unwrap();
        for f in [optimal_assortment, brute_force_assortment] {
            let r = f(&[0.0; 4], &cat).unwrap();
            assert!(r.assortment.is_empty());
            assert_eq!(r.value, 0.0);
        }
    }

    #[test]
    fn full_capacity_uniform_payoffs_take_everything() {
        let cat = ItemCatalog::uniform(5, 5).unwrap();
        let r = brute_force_assortment(&[0.3, 0.1, 0.7, 0.2, 0.9], &cat).unwrap();
        assert_eq!(items(&r), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn equal_ucbs_break_ties_lexicographically() {
        let cat = ItemCatalog::uniform(6, 3).unwrap();
        let r = optimal_assortment(&[1326.29; 6], &cat).unwrap();
        assert_eq!(items(&r), vec![0, 1, 2]);
    }

    #[test]
    fn zero_payoff_items_are_left_out() {
        let cat = ItemCatalog::new(3, vec![1.0, 0.0, 1.0]).unwrap();
        let r = optimal_assortment(&[0.5, 0.5, 0.5], &cat).unwrap();
        assert_eq!(items(&r), vec![0, 2]);
        assert_eq!(r, brute_force_assortment(&[0.5, 0.5, 0.5], &cat).unwrap());
    }

    #[test]
    fn invalid_weights_are_rejected() {
        let cat = ItemCatalog::uniform(2, 1).unwrap();
        assert!(matches!(
            optimal_assortment(&[-0.1, 0.2], &cat),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            optimal_assortment(&[f64::NAN, 0.2], &cat),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            optimal_assortment(&[f64::INFINITY, 0.2], &cat),
            Err(Error::Domain(_))
        ));
        assert!(matches!(optimal_assortment(&[0.2], &cat), Err(Error::Domain(_))));
    }

    #[test]
    fn brute_force_refuses_large_catalogs() {
        let cat = ItemCatalog::uniform(21, 2).unwrap();
        assert!(matches!(
            brute_force_assortment(&[0.5; 21], &cat),
            Err(Error::Refused(_))
        ));
    }

    #[test]
    fn matches_exhaustive_search_on_random_instances() {
        let mut rng = stream(11, "optimizer", 0);
        for _ in 0..300 {
            let n = rng.random_range(1..=10);
            let k = rng.random_range(1..=n.min(6));
            let scale = if rng.random_bool(0.2) { 500.0 } else { 1.0 };
            let omega: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * scale).collect();
            let payoffs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let cat = ItemCatalog::new(k, payoffs).unwrap();
            let fast = optimal_assortment(&omega, &cat).unwrap();
            let slow = brute_force_assortment(&omega, &cat).unwrap();
            assert_eq!(fast.assortment, slow.assortment, "omega {omega:?} cat {cat:?}");
            assert!((fast.value - slow.value).abs() <= 1e-12);
        }
    }

    proptest! {
        #[test]
        fn optimum_dominates_feasible_sets(
            omega in prop::collection::vec(0.0f64..=2.0, 1..9),
            seed in any::<u64>(),
        ) {
            let n = omega.len();
            let mut rng = stream(seed, "feasible", 0);
            let k = rng.random_range(1..=n);
            let cat = ItemCatalog::new(k, (0..n).map(|_| rng.random::<f64>()).collect()).unwrap();
            let best = optimal_assortment(&omega, &cat).unwrap();
            prop_assert!((expected_payoff(&omega, &cat, &best.assortment) - best.value).abs() <= 1e-12);
            for _ in 0..50 {
                let mut s: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
                s.truncate(k);
                let s = Assortment::from_sorted(s);
                prop_assert!(expected_payoff(&omega, &cat, &s) <= best.value + 1e-12);
            }
        }
    }
}
