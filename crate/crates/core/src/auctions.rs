//! Auction subroutines composed by the mechanism.

use serde::{Deserialize, Serialize};

use crate::bundle::{Bundle, ItemId};
use crate::error::{input, Result};
use crate::instance::Instance;
use crate::rational::Rational;
use crate::valuations::Valuation;

/// Answers demand queries on behalf of bidders.
pub trait DemandOracle {
    fn demand(&self, v: &Valuation, prices: &[Rational]) -> Result<Bundle>;
}

/// The family-exact demand oracle.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactDemand;

impl DemandOracle for ExactDemand {
    fn demand(&self, v: &Valuation, prices: &[Rational]) -> Result<Bundle> {
        v.demand(prices)
    }
}

/// One bundle per bidder, pairwise disjoint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation(pub Vec<Bundle>);

impl Allocation {
    pub fn empty(n: usize) -> Self {
        Allocation(vec![Bundle::empty(); n])
    }

    pub fn bundle(&self, i: usize) -> &Bundle {
        &self.0[i]
    }

    pub fn bundles(&self) -> &[Bundle] {
        &self.0
    }

    pub fn welfare(&self, instance: &Instance) -> Rational {
        self.0.iter().enumerate().map(|(i, s)| instance.valuation(i).value_unchecked(s)).sum()
    }

    /// Union of all bundles.
    pub fn allocated(&self) -> Bundle {
        self.0.iter().flat_map(|b| b.iter()).collect()
    }

    /// Bundles are pairwise disjoint and use only items below `m`.
    pub fn is_feasible(&self, m: usize) -> bool {
        let mut seen = vec![false; m];
        for b in &self.0 {
            for j in b.iter() {
                if j >= m || seen[j] {
                    return false;
                }
                seen[j] = true;
            }
        }
        true
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuctionEvent {
    pub bidder: usize,
    /// Prices the bidder was queried at; unavailable items carry an
    /// inflated price. Empty for the second-price auction.
    pub prices: Vec<Rational>,
    pub taken: Bundle,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuctionResult {
    pub allocation: Allocation,
    pub payments: Vec<Rational>,
    pub events: Vec<AuctionEvent>,
}

impl AuctionResult {
    fn empty(n: usize) -> Self {
        AuctionResult { allocation: Allocation::empty(n), payments: vec![Rational::zero(); n], events: Vec::new() }
    }
}

fn check_participants(instance: &Instance, participants: &[usize]) -> Result<()> {
    let mut seen = vec![false; instance.n()];
    for &i in participants {
        if i >= instance.n() {
            return input(format!("bidder {i} out of range"));
        }
        if std::mem::replace(&mut seen[i], true) {
            return input(format!("bidder {i} listed twice"));
        }
    }
    Ok(())
}

/// Sequential posted-price auction with the exact demand oracle.
pub fn fixed_price_auction(
    instance: &Instance,
    participants: &[usize],
    prices: &[Rational],
    available: &Bundle,
) -> Result<AuctionResult> {
    fixed_price_auction_with(&ExactDemand, instance, participants, prices, available)
}

/// Bidders arrive in `participants` order; each takes its demanded bundle
/// among the items still available and pays the posted prices.
///
/// Unavailable items are priced at `v_i(M) + 1`, which no bidder demands.
pub fn fixed_price_auction_with(
    oracle: &dyn DemandOracle,
    instance: &Instance,
    participants: &[usize],
    prices: &[Rational],
    available: &Bundle,
) -> Result<AuctionResult> {
    check_participants(instance, participants)?;
    if prices.len() != instance.m {
        return input(format!("expected {} prices, got {}", instance.m, prices.len()));
    }
    if let Some(j) = available.max_item().filter(|&j| j >= instance.m) {
        return input(format!("available item {j} out of range"));
    }
    let mut free = vec![false; instance.m];
    for j in available.iter() {
        free[j] = true;
    }
    let mut result = AuctionResult::empty(instance.n());
    for &i in participants {
        let v = instance.valuation(i);
        let blocked = v.grand_value() + Rational::one();
        let queried: Vec<Rational> = (0..instance.m).map(|j| if free[j] { prices[j] } else { blocked }).collect();
        let taken = oracle.demand(v, &queried)?;
        for j in taken.iter() {
            debug_assert!(free[j], "demanded an unavailable item");
            free[j] = false;
        }
        result.payments[i] = taken.iter().map(|j| prices[j]).sum();
        result.allocation.0[i] = taken.clone();
        result.events.push(AuctionEvent { bidder: i, prices: queried, taken });
    }
    Ok(result)
}

/// Second-price auction of the grand bundle `M`. Ties go to the lowest index.
pub fn second_price_grand_bundle(instance: &Instance, participants: &[usize]) -> Result<AuctionResult> {
    check_participants(instance, participants)?;
    let bids: Vec<(usize, Rational)> = participants.iter().map(|&i| (i, instance.valuation(i).grand_value())).collect();
    let Some(&(winner, top)) = bids.iter().min_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0))) else {
        return input("second-price auction needs a participant");
    };
    let second = bids.iter().filter(|(i, _)| *i != winner).map(|(_, b)| *b).max().unwrap_or_default();
    debug_assert!(second <= top);
    let mut result = AuctionResult::empty(instance.n());
    result.allocation.0[winner] = instance.all_items();
    result.payments[winner] = second;
    result.events.push(AuctionEvent { bidder: winner, prices: Vec::new(), taken: instance.all_items() });
    Ok(result)
}

/// Single-item marginal greedy over items in ascending order.
///
/// Each item goes to the participant with the largest marginal value
/// (lowest index on ties); items nobody values at the margin stay unsold.
pub fn greedy_allocation(instance: &Instance, participants: &[usize]) -> Allocation {
    let mut alloc = Allocation::empty(instance.n());
    let mut current: Vec<Rational> = vec![Rational::zero(); instance.n()];
    let mut order = participants.to_vec();
    order.sort_unstable();
    order.dedup();
    for j in 0..instance.m as ItemId {
        let mut best: Option<(usize, Rational, Rational)> = None;
        for &i in &order {
            let with = alloc.0[i].union(&Bundle::new(vec![j]));
            let value = instance.valuation(i).value_unchecked(&with);
            let gain = value - current[i];
            if gain.is_positive() && best.as_ref().is_none_or(|b| gain > b.1) {
                best = Some((i, gain, value));
            }
        }
        if let Some((i, _, value)) = best {
            alloc.0[i] = alloc.0[i].union(&Bundle::new(vec![j]));
            current[i] = value;
        }
    }
    alloc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: i128) -> Rational {
        Rational::from_int(v)
    }

    fn rv(v: &[i128]) -> Vec<Rational> {
        v.iter().copied().map(r).collect()
    }

    fn additive(rows: &[&[i128]]) -> Instance {
        let m = rows[0].len();
        Instance::new(m, rows.iter().map(|w| Valuation::additive(rv(w))).collect()).unwrap()
    }

    #[test]
    fn fixed_price_two_bidders() {
        let inst = additive(&[&[3, 0], &[2, 2]]);
        let res = fixed_price_auction(&inst, &[0, 1], &rv(&[1, 1]), &inst.all_items()).unwrap();
        assert_eq!(res.allocation.bundle(0).items(), &[0]);
        assert_eq!(res.allocation.bundle(1).items(), &[1]);
        assert_eq!(res.payments, rv(&[1, 1]));
        // Bidder 1 saw item 0 priced out of reach.
        assert!(res.events[1].prices[0] > inst.valuation(1).grand_value());
    }

    #[test]
    fn fixed_price_high_prices_sell_nothing() {
        let inst = additive(&[&[3, 1], &[2, 2]]);
        let res = fixed_price_auction(&inst, &[1, 0], &rv(&[5, 5]), &inst.all_items()).unwrap();
        assert!(res.allocation.bundles().iter().all(Bundle::is_empty));
        assert!(res.payments.iter().all(Rational::is_zero));
    }

    #[test]
    fn fixed_price_zero_prices_single_bidder() {
        let inst = additive(&[&[3, 0, 1]]);
        let res = fixed_price_auction(&inst, &[0], &rv(&[0, 0, 0]), &inst.all_items()).unwrap();
        assert_eq!(res.allocation.bundle(0).items(), &[0, 2]);
        assert_eq!(res.payments[0], r(0));
    }

    #[test]
    fn fixed_price_respects_availability_and_non_participants() {
        let inst = additive(&[&[3, 3], &[3, 3]]);
        let avail = Bundle::new(vec![1]);
        let res = fixed_price_auction(&inst, &[1], &rv(&[1, 1]), &avail).unwrap();
        assert_eq!(res.allocation.bundle(1).items(), &[1]);
        assert!(res.allocation.bundle(0).is_empty());
        assert!(fixed_price_auction(&inst, &[], &rv(&[1, 1]), &avail).unwrap().events.is_empty());
        assert!(fixed_price_auction(&inst, &[0, 0], &rv(&[1, 1]), &avail).is_err());
    }

    #[test]
    fn second_price_examples() {
        let inst = additive(&[&[10], &[7], &[3]]);
        let res = second_price_grand_bundle(&inst, &[0, 1, 2]).unwrap();
        assert_eq!(res.allocation.bundle(0).items(), &[0]);
        assert_eq!(res.payments, rv(&[7, 0, 0]));

        let solo = additive(&[&[5]]);
        assert_eq!(second_price_grand_bundle(&solo, &[0]).unwrap().payments, rv(&[0]));

        let tie = additive(&[&[4], &[4]]);
        let res = second_price_grand_bundle(&tie, &[0, 1]).unwrap();
        assert_eq!(res.allocation.bundle(0).items(), &[0]);
        assert_eq!(res.payments[0], r(4));

        assert!(second_price_grand_bundle(&tie, &[]).is_err());
    }

    #[test]
    fn greedy_examples() {
        let diag = additive(&[&[2, 0, 0], &[0, 4, 0], &[0, 0, 1]]);
        let a = greedy_allocation(&diag, &[0, 2]);
        assert_eq!(a.bundle(0).items(), &[0]);
        assert!(a.bundle(1).is_empty());
        assert_eq!(a.bundle(2).items(), &[2]);

        let one = additive(&[&[5, 2]]);
        assert_eq!(greedy_allocation(&one, &[0]).bundle(0).items(), &[0, 1]);

        let ba = Instance::new(
            2,
            vec![Valuation::budget_additive(rv(&[4, 4]), r(4)), Valuation::budget_additive(rv(&[4, 4]), r(4))],
        )
        .unwrap();
        let a = greedy_allocation(&ba, &[0, 1]);
        assert_eq!(a.bundle(0).items(), &[0]);
        assert_eq!(a.bundle(1).items(), &[1]);
        assert_eq!(a.welfare(&ba), r(8));
    }

    #[test]
    fn feasibility() {
        let ok = Allocation(vec![Bundle::new(vec![0]), Bundle::new(vec![1])]);
        assert!(ok.is_feasible(2));
        let clash = Allocation(vec![Bundle::new(vec![0]), Bundle::new(vec![0])]);
        assert!(!clash.is_feasible(2));
        assert!(!ok.is_feasible(1));
    }
}
