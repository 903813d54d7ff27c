//! Exact welfare maximization by subset dynamic programming.

use num_integer::Integer;

use crate::auctions::Allocation;
use crate::bundle::Bundle;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::limits::BruteLimits;
use crate::rational::Rational;

/// Every bidder's value of every bundle, scaled to a common integer unit.
struct ValueTable {
    values: Vec<Vec<i128>>,
    unit: i128,
    m: usize,
}

impl ValueTable {
    fn build(instance: &Instance) -> Result<Self> {
        let limits = BruteLimits::current();
        let (n, m) = (instance.n(), instance.m);
        if m > limits.opt_items || n > limits.opt_bidders {
            return Err(Error::Size(format!(
                "welfare oracle limited to {} items and {} bidders, got {m} and {n}",
                limits.opt_items, limits.opt_bidders
            )));
        }
        let exact: Vec<Vec<Rational>> = instance
            .bidders
            .iter()
            .map(|v| (0..1u64 << m).map(|mask| v.value_unchecked(&Bundle::from_mask(mask))).collect())
            .collect();
        let unit = exact.iter().flatten().fold(1i128, |acc, r| acc.lcm(&r.denom()));
        let values = exact.iter().map(|row| row.iter().map(|r| r.numer() * (unit / r.denom())).collect()).collect();
        Ok(ValueTable { values, unit, m })
    }

    /// Best welfare when bidder `i` already holds `fixed[i]` and the items
    /// of `free` may still go to anyone or stay unsold.
    fn best(&self, fixed: &[u64], free: u64) -> i128 {
        let size = 1usize << self.m;
        let mut next = vec![0i128; size];
        for i in (0..self.values.len()).rev() {
            let row = &self.values[i];
            let mut cur = vec![0i128; size];
            let mut rest = free;
            loop {
                // max over S ⊆ rest of v_i(fixed_i ∪ S) + next(rest \ S)
                let mut best = i128::MIN;
                let mut s = rest;
                loop {
                    let cand = row[(fixed[i] | s) as usize] + next[(rest & !s) as usize];
                    best = best.max(cand);
                    if s == 0 {
                        break;
                    }
                    s = (s - 1) & rest;
                }
                cur[rest as usize] = best;
                if rest == 0 {
                    break;
                }
                rest = (rest - 1) & free;
            }
            next = cur;
        }
        next[free as usize]
    }
}

/// Optimal social welfare.
pub fn opt_welfare(instance: &Instance) -> Result<Rational> {
    let table = ValueTable::build(instance)?;
    let full = (1u64 << instance.m) - 1;
    let best = table.best(&vec![0; instance.n()], full);
    Ok(Rational::new(best, table.unit))
}

/// A welfare-maximizing allocation and its welfare.
///
/// Among optimal allocations the one with the lexicographically smallest
/// assignment vector wins, where item `j` maps to its bidder and unsold
/// items map to `n`.
pub fn brute_force_opt(instance: &Instance) -> Result<(Allocation, Rational)> {
    let table = ValueTable::build(instance)?;
    let n = instance.n();
    let full = (1u64 << instance.m) - 1;
    let mut fixed = vec![0u64; n];
    let target = table.best(&fixed, full);
    for j in 0..instance.m {
        let free = full & !((1u64 << (j + 1)) - 1);
        let mut placed = false;
        for i in 0..n {
            fixed[i] |= 1 << j;
            if table.best(&fixed, free) == target {
                placed = true;
                break;
            }
            fixed[i] &= !(1 << j);
        }
        if !placed {
            debug_assert_eq!(table.best(&fixed, free), target);
        }
    }
    let alloc = Allocation(fixed.iter().map(|&mask| Bundle::from_mask(mask)).collect());
    Ok((alloc, Rational::new(target, table.unit)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuations::Valuation;

    fn r(v: i128) -> Rational {
        Rational::from_int(v)
    }

    #[test]
    fn diagonal_opt() {
        let w = |i: usize, x: i128| {
            let mut v = vec![r(0); 3];
            v[i] = r(x);
            Valuation::additive(v)
        };
        let inst = Instance::new(3, vec![w(0, 2), w(1, 5), w(2, 7)]).unwrap();
        let (alloc, opt) = brute_force_opt(&inst).unwrap();
        assert_eq!(opt, r(14));
        for i in 0..3 {
            assert_eq!(alloc.bundle(i).items(), &[i]);
        }
    }

    #[test]
    fn single_bidder_gets_grand_value() {
        let inst = Instance::new(3, vec![Valuation::budget_additive(vec![r(2), r(3), r(4)], r(6))]).unwrap();
        assert_eq!(opt_welfare(&inst).unwrap(), r(6));
    }

    #[test]
    fn budget_split() {
        // Assignments of 2 items to {none, 0, 1}: 9 in total; the split
        // ones reach 4 + 4.
        let ba = || Valuation::budget_additive(vec![r(4), r(4)], r(4));
        let inst = Instance::new(2, vec![ba(), ba()]).unwrap();
        let (alloc, opt) = brute_force_opt(&inst).unwrap();
        assert_eq!(opt, r(8));
        assert_eq!(alloc.bundle(0).items(), &[0]);
        assert_eq!(alloc.bundle(1).items(), &[1]);
    }

    #[test]
    fn fractional_values_and_unsold_items() {
        let inst = Instance::new(
            2,
            vec![
                Valuation::additive(vec![Rational::new(1, 2), r(0)]),
                Valuation::additive(vec![Rational::new(1, 3), r(0)]),
            ],
        )
        .unwrap();
        let (alloc, opt) = brute_force_opt(&inst).unwrap();
        assert_eq!(opt, Rational::new(1, 2));
        assert_eq!(alloc.bundle(0).items(), &[0, 1]);
    }

    #[test]
    fn size_guard() {
        let inst = Instance::new(11, vec![Valuation::additive(vec![r(1); 11])]).unwrap();
        assert!(matches!(opt_welfare(&inst), Err(Error::Size(_))));
    }
}
