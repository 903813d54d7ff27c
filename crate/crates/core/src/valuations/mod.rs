//! Bidder valuations: additive, budget additive and explicit XOS.
//!
//! Every family answers exact value queries, exact demand queries and
//! supporting-price queries. Demand ties are broken by a fixed chain:
//! larger profit, then smaller price sum, then fewer items, then the
//! lexicographically smallest item list.

mod budget_dp;

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bundle::{Bundle, ItemId};
use crate::error::{input, Error, Result};
use crate::limits::BruteLimits;
use crate::rational::Rational;

pub use budget_dp::DP_WORK_LIMIT;

/// One additive function: a nonnegative weight per item.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AdditiveClause(pub Vec<Rational>);

impl AdditiveClause {
    pub fn weights(&self) -> &[Rational] {
        &self.0
    }

    pub fn sum_over(&self, s: &Bundle) -> Rational {
        s.iter().map(|j| self.0[j]).sum()
    }
}

impl From<Vec<Rational>> for AdditiveClause {
    fn from(v: Vec<Rational>) -> Self {
        AdditiveClause(v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Valuation {
    Additive {
        weights: AdditiveClause,
    },
    BudgetAdditive {
        weights: Vec<Rational>,
        budget: Rational,
    },
    #[serde(rename = "xos")]
    Xos {
        clauses: Vec<AdditiveClause>,
    },
}

/// Supporting prices `q_j` of one bundle, keyed by item.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SupportingPriceMap(pub BTreeMap<ItemId, Rational>);

impl SupportingPriceMap {
    pub fn get(&self, item: ItemId) -> Option<Rational> {
        self.0.get(&item).copied()
    }

    pub fn total(&self) -> Rational {
        self.0.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ItemId, Rational)> + '_ {
        self.0.iter().map(|(&j, &q)| (j, q))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Ordering key of a candidate demand bundle; the smaller key wins.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct DemandRank {
    profit: Reverse<Rational>,
    price_sum: Rational,
    len: usize,
    bundle: Bundle,
}

impl DemandRank {
    pub fn new(profit: Rational, price_sum: Rational, bundle: Bundle) -> Self {
        DemandRank { profit: Reverse(profit), price_sum, len: bundle.len(), bundle }
    }

    pub fn of(v: &Valuation, prices: &[Rational], bundle: Bundle) -> Self {
        let price_sum = price_of(prices, &bundle);
        let profit = v.value_unchecked(&bundle) - price_sum;
        DemandRank::new(profit, price_sum, bundle)
    }

    pub fn profit(&self) -> Rational {
        self.profit.0
    }

    pub fn into_bundle(self) -> Bundle {
        self.bundle
    }
}

pub fn price_of(prices: &[Rational], s: &Bundle) -> Rational {
    s.iter().map(|j| prices[j]).sum()
}

impl Valuation {
    pub fn additive(weights: Vec<Rational>) -> Self {
        Valuation::Additive { weights: AdditiveClause(weights) }
    }

    pub fn budget_additive(weights: Vec<Rational>, budget: Rational) -> Self {
        Valuation::BudgetAdditive { weights, budget }
    }

    pub fn xos(clauses: Vec<Vec<Rational>>) -> Self {
        Valuation::Xos { clauses: clauses.into_iter().map(AdditiveClause).collect() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Valuation::Additive { .. } => "additive",
            Valuation::BudgetAdditive { .. } => "budget_additive",
            Valuation::Xos { .. } => "xos",
        }
    }

    /// Number of items the valuation is defined over.
    pub fn items(&self) -> usize {
        match self {
            Valuation::Additive { weights } => weights.0.len(),
            Valuation::BudgetAdditive { weights, .. } => weights.len(),
            Valuation::Xos { clauses } => clauses.first().map_or(0, |c| c.0.len()),
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        let check = |w: &[Rational]| -> Result<()> {
            if w.len() != m {
                return input(format!("expected {m} weights, got {}", w.len()));
            }
            if w.iter().any(Rational::is_negative) {
                return input("weights must be nonnegative");
            }
            Ok(())
        };
        match self {
            Valuation::Additive { weights } => check(&weights.0),
            Valuation::BudgetAdditive { weights, budget } => {
                check(weights)?;
                if budget.is_negative() {
                    return input("budget must be nonnegative");
                }
                Ok(())
            }
            Valuation::Xos { clauses } => {
                if clauses.is_empty() {
                    return input("xos valuation needs at least one clause");
                }
                clauses.iter().try_for_each(|c| check(&c.0))
            }
        }
    }

    fn check_bundle(&self, s: &Bundle) -> Result<()> {
        match s.max_item() {
            Some(j) if j >= self.items() => input(format!("item {j} out of range for {} items", self.items())),
            _ => Ok(()),
        }
    }

    fn check_prices(&self, prices: &[Rational]) -> Result<()> {
        if prices.len() != self.items() {
            return input(format!("expected {} prices, got {}", self.items(), prices.len()));
        }
        if prices.iter().any(Rational::is_negative) {
            return input("prices must be nonnegative");
        }
        Ok(())
    }

    pub fn value(&self, s: &Bundle) -> Result<Rational> {
        self.check_bundle(s)?;
        Ok(self.value_unchecked(s))
    }

    pub(crate) fn value_unchecked(&self, s: &Bundle) -> Rational {
        match self {
            Valuation::Additive { weights } => weights.sum_over(s),
            Valuation::BudgetAdditive { weights, budget } => {
                let total: Rational = s.iter().map(|j| weights[j]).sum();
                total.min(*budget)
            }
            Valuation::Xos { clauses } => clauses.iter().map(|c| c.sum_over(s)).max().unwrap_or_default(),
        }
    }

    /// `v(M)`.
    pub fn grand_value(&self) -> Rational {
        self.value_unchecked(&Bundle::full(self.items()))
    }

    /// A profit-maximizing bundle at `prices`, under the fixed tie chain.
    pub fn demand(&self, prices: &[Rational]) -> Result<Bundle> {
        self.check_prices(prices)?;
        match self {
            Valuation::Additive { weights } => Ok(clause_demand(&weights.0, prices)),
            Valuation::Xos { clauses } => Ok(clauses
                .iter()
                .map(|c| DemandRank::of(self, prices, clause_demand(&c.0, prices)))
                .min()
                .expect("validated xos has a clause")
                .into_bundle()),
            Valuation::BudgetAdditive { weights, budget } => budget_additive_demand(self, weights, budget, prices),
        }
    }

    /// Supporting prices of `s`: the entries of a maximizing clause of `s`.
    ///
    /// XOS ties between clauses go to the lowest clause index. Budget
    /// additive valuations fill the budget greedily in ascending item order.
    pub fn supporting_prices(&self, s: &Bundle) -> Result<SupportingPriceMap> {
        self.check_bundle(s)?;
        let clause = self.maximizing_clause(s);
        Ok(SupportingPriceMap(s.iter().map(|j| (j, clause[j])).collect()))
    }

    /// Full weight vector of a maximizing clause of `s` (zero off `s` for
    /// budget additive valuations).
    fn maximizing_clause(&self, s: &Bundle) -> Vec<Rational> {
        match self {
            Valuation::Additive { weights } => weights.0.clone(),
            Valuation::BudgetAdditive { weights, budget } => greedy_fill(weights, *budget, s),
            Valuation::Xos { clauses } => {
                let mut best = &clauses[0];
                let mut best_value = best.sum_over(s);
                for c in &clauses[1..] {
                    let v = c.sum_over(s);
                    if v > best_value {
                        best = c;
                        best_value = v;
                    }
                }
                best.0.clone()
            }
        }
    }

    /// Value-equivalent explicit XOS form, expanding at most `cap` clauses.
    pub fn to_xos(&self, cap: usize) -> Result<Valuation> {
        match self {
            Valuation::Xos { .. } => Ok(self.clone()),
            Valuation::Additive { weights } => Ok(Valuation::Xos { clauses: vec![weights.clone()] }),
            Valuation::BudgetAdditive { weights, budget } => {
                let total: Rational = weights.iter().sum();
                if total <= *budget {
                    return Ok(Valuation::xos(vec![weights.clone()]));
                }
                let m = weights.len();
                if m >= 32 {
                    return Err(Error::Size(format!("cannot expand {m} items")));
                }
                let mut seen = BTreeSet::new();
                let mut clauses = Vec::new();
                for mask in 0..1u64 << m {
                    let clause = greedy_fill(weights, *budget, &Bundle::from_mask(mask));
                    if seen.insert(clause.clone()) {
                        if clauses.len() == cap {
                            return Err(Error::Size(format!("xos expansion exceeds {cap} clauses")));
                        }
                        clauses.push(AdditiveClause(clause));
                    }
                }
                Ok(Valuation::Xos { clauses })
            }
        }
    }
}

/// Per-item threshold demand of one additive clause; ties exclude the item.
fn clause_demand(weights: &[Rational], prices: &[Rational]) -> Bundle {
    Bundle::new((0..weights.len()).filter(|&j| weights[j] > prices[j]).collect())
}

fn greedy_fill(weights: &[Rational], budget: Rational, s: &Bundle) -> Vec<Rational> {
    let mut clause = vec![Rational::zero(); weights.len()];
    let mut left = budget;
    for j in s.iter() {
        let take = weights[j].min(left);
        clause[j] = take;
        left -= take;
    }
    clause
}

fn budget_additive_demand(
    v: &Valuation,
    weights: &[Rational],
    budget: &Rational,
    prices: &[Rational],
) -> Result<Bundle> {
    // An item with p_j >= min(b, w_j) never belongs to the tie-chain winner:
    // dropping it loses at most min(b, w_j) of value and saves p_j.
    let candidates: Vec<ItemId> = (0..weights.len()).filter(|&j| prices[j] < weights[j].min(*budget)).collect();
    if candidates.is_empty() {
        return Ok(Bundle::empty());
    }
    let unit = Rational::gcd_of(candidates.iter().map(|&j| &prices[j])).unwrap_or(Rational::one());
    let items: Vec<budget_dp::GridItem> = candidates
        .iter()
        .map(|&j| {
            let ticks = prices[j] / unit;
            debug_assert!(ticks.is_integer());
            budget_dp::GridItem { index: j, weight: weights[j], ticks: ticks.numer() }
        })
        .collect();
    match budget_dp::solve(&items, budget, &unit, DP_WORK_LIMIT) {
        Ok(b) => Ok(b),
        Err(Error::Size(why)) => {
            if candidates.len() > BruteLimits::current().demand_items {
                return Err(Error::Unsupported(format!(
                    "budget-additive demand off a tractable price grid ({why}); \
                     supply grid prices"
                )));
            }
            Ok(exhaustive_demand(v, prices, &candidates))
        }
        Err(e) => Err(e),
    }
}

/// Exhaustive demand over subsets of `items`.
fn exhaustive_demand(v: &Valuation, prices: &[Rational], items: &[ItemId]) -> Bundle {
    let k = items.len();
    (0..1u64 << k)
        .map(|mask| {
            let s: Bundle = (0..k).filter(|b| mask >> b & 1 == 1).map(|b| items[b]).collect();
            DemandRank::of(v, prices, s)
        })
        .min()
        .expect("at least the empty bundle")
        .into_bundle()
}

/// Ground-truth demand by scanning all `2^m` bundles.
pub fn demand_bruteforce(v: &Valuation, prices: &[Rational]) -> Result<Bundle> {
    v.check_prices(prices)?;
    let m = v.items();
    let cap = BruteLimits::current().demand_items;
    if m > cap {
        return Err(Error::Size(format!("brute-force demand over {m} items exceeds cap {cap}")));
    }
    let all: Vec<ItemId> = (0..m).collect();
    Ok(exhaustive_demand(v, prices, &all))
}

/// Exact demand of a budget-additive valuation at prices `unit * ticks[j]`.
pub fn budget_additive_demand_dp(v: &Valuation, ticks: &[i128], unit: &Rational) -> Result<Bundle> {
    let Valuation::BudgetAdditive { weights, budget } = v else {
        return input("grid demand needs a budget-additive valuation");
    };
    if ticks.len() != weights.len() {
        return input(format!("expected {} grid entries, got {}", weights.len(), ticks.len()));
    }
    if let Some(t) = ticks.iter().find(|&&t| t <= 0) {
        return input(format!("grid entries must be positive, got {t}"));
    }
    if !unit.is_positive() {
        return input("grid unit must be positive");
    }
    let items: Vec<budget_dp::GridItem> =
        (0..weights.len()).map(|j| budget_dp::GridItem { index: j, weight: weights[j], ticks: ticks[j] }).collect();
    budget_dp::solve(&items, budget, unit, DP_WORK_LIMIT)
}

/// Compares two bundles under the demand tie chain at `prices`.
pub fn compare_demand(v: &Valuation, prices: &[Rational], a: &Bundle, b: &Bundle) -> Ordering {
    DemandRank::of(v, prices, a.clone()).cmp(&DemandRank::of(v, prices, b.clone()))
}

#[cfg(test)]
mod tests;
