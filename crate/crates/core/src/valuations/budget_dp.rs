//! Exact budget-additive demand for prices on an integer grid.
//!
//! Prices are `unit * ticks[j]`. Dividing by the unit turns the query into
//! one over integer price sums `k`, and profit is `min(b, w(S)) - k`.
//!
//! The solve runs in two passes:
//!
//! 1. a knapsack over exact price sums keeps the heaviest subset for each
//!    sum `k`, which fixes the best profit and the smallest price sum `k*`
//!    reaching it;
//! 2. a suffix table over `(price sum, item count)` holding the heaviest
//!    (budget-capped) weight selects, among subsets priced exactly `k*`
//!    and reaching the required weight, the fewest items and then the
//!    lexicographically smallest item list.
//!
//! Pass 2 keeps suffix tables only at `sqrt(n)` checkpoints and recomputes
//! each block during reconstruction.

use num_integer::Integer;

use crate::bundle::{Bundle, ItemId};
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Upper bound on elementary table updates across both passes.
pub const DP_WORK_LIMIT: u128 = 4_000_000_000;

/// Upper bound on table entries held at once in the count pass.
const MEMORY_LIMIT_ENTRIES: u128 = 1 << 27;

const INFEASIBLE: i64 = -1;

#[derive(Clone, Debug)]
pub(crate) struct GridItem {
    pub index: ItemId,
    pub weight: Rational,
    /// Price in grid units; zero is allowed here.
    pub ticks: i128,
}

struct Scaled {
    index: ItemId,
    weight: i64,
    ticks: usize,
}

pub(crate) fn solve(items: &[GridItem], budget: &Rational, unit: &Rational, work_limit: u128) -> Result<Bundle> {
    let size = |what: &str| Error::Size(what.to_string());

    // Common denominator of w_j / unit and b / unit.
    let scaled_budget = *budget / *unit;
    let mut lcm: i128 = scaled_budget.denom();
    for it in items {
        lcm = lcm.lcm(&(it.weight / *unit).denom());
    }
    let to_int = |r: Rational| -> Result<i64> {
        let v = r.numer().checked_mul(lcm / r.denom()).ok_or_else(|| size("weight overflow"))?;
        i64::try_from(v).map_err(|_| size("weight overflow"))
    };
    let cap = to_int(scaled_budget)?;

    let mut scaled = Vec::with_capacity(items.len());
    for it in items {
        let weight = to_int(it.weight / *unit)?;
        let price = it.ticks.checked_mul(lcm).ok_or_else(|| size("price overflow"))?;
        // Items with price >= min(b, w) are never in the winner.
        if price >= cap.min(weight) as i128 {
            continue;
        }
        let ticks = usize::try_from(it.ticks).map_err(|_| size("price overflow"))?;
        scaled.push(Scaled { index: it.index, weight, ticks });
    }
    scaled.sort_by_key(|s| s.index);
    if scaled.is_empty() {
        return Ok(Bundle::empty());
    }

    // Price sums with nonnegative profit satisfy k * lcm <= cap.
    let tick_total: u128 = scaled.iter().map(|s| s.ticks as u128).sum();
    let k_max = tick_total.min((cap as i128 / lcm) as u128);
    let len = scaled.len() as u128;
    if len * (k_max + 1) > work_limit {
        return Err(size("price grid too fine for the table pass"));
    }
    let k_max = k_max as usize;

    // Pass 1: heaviest subset per exact price sum, fewest items on weight ties.
    let mut best: Vec<Option<(i128, u32)>> = vec![None; k_max + 1];
    best[0] = Some((0, 0));
    for s in &scaled {
        if s.ticks > k_max {
            continue;
        }
        for k in (s.ticks..=k_max).rev() {
            if let Some((w, c)) = best[k - s.ticks] {
                let cand = (w + s.weight as i128, c + 1);
                let better = match best[k] {
                    None => true,
                    Some((bw, bc)) => cand.0 > bw || (cand.0 == bw && cand.1 < bc),
                };
                if better {
                    best[k] = Some(cand);
                }
            }
        }
    }
    let lcm_i = lcm;
    let mut target: Option<(i128, usize, i128, u32)> = None; // (profit, k, weight, count)
    for (k, cell) in best.iter().enumerate() {
        if let Some((w, c)) = *cell {
            let profit = w.min(cap as i128) - k as i128 * lcm_i;
            if target.is_none_or(|t| profit > t.0) {
                target = Some((profit, k, w, c));
            }
        }
    }
    let (_, k_star, w_star, count_bound) = target.expect("empty bundle is feasible");
    let need = w_star.min(cap as i128) as i64;
    if need == 0 && k_star == 0 {
        return Ok(Bundle::empty());
    }

    // Pass 2 over (k <= k*, count <= count_bound).
    let width = count_bound as usize + 1;
    let entries = (k_star as u128 + 1) * width as u128;
    let block = (scaled.len() as f64).sqrt().ceil().max(1.0) as usize;
    let held = (scaled.len().div_ceil(block) + block + 1) as u128;
    if entries * held > MEMORY_LIMIT_ENTRIES || 2 * entries * len > work_limit {
        return Err(size("count table too large"));
    }
    let table = Table { k_max: k_star, width, cap };

    // Checkpoints: suffix tables G_j for j % block == 0 and j == len.
    let n = scaled.len();
    let mut checkpoints: Vec<Option<Vec<i64>>> = vec![None; n + 1];
    let mut cur = table.base();
    checkpoints[n] = Some(cur.clone());
    for j in (0..n).rev() {
        cur = table.step(&cur, &scaled[j]);
        if j % block == 0 {
            checkpoints[j] = Some(cur.clone());
        }
    }
    let head = checkpoints[0].as_ref().expect("checkpoint at 0");
    let count = (0..width).find(|&c| head[table.at(k_star, c)] >= need).expect("pass 1 solution fits the count bound");

    let mut chosen = Vec::with_capacity(count);
    let mut k_left = k_star;
    let mut c_left = count;
    let mut need_left = need;
    let mut start = 0;
    while start < n {
        let end = (start + block).min(n);
        // suffix[t] = G_{start + 1 + t} for t in 0..end - start.
        let mut suffix: Vec<Vec<i64>> = Vec::with_capacity(end - start);
        let mut g = checkpoints[end].clone().expect("block checkpoint");
        suffix.push(g.clone());
        for j in (start + 1..end).rev() {
            g = table.step(&g, &scaled[j]);
            suffix.push(g.clone());
        }
        suffix.reverse();
        for j in start..end {
            let next = &suffix[j - start];
            let s = &scaled[j];
            let take = s.ticks <= k_left && c_left >= 1 && {
                let g = next[table.at(k_left - s.ticks, c_left - 1)];
                g != INFEASIBLE && g + s.weight >= need_left
            };
            if take {
                chosen.push(s.index);
                k_left -= s.ticks;
                c_left -= 1;
                need_left -= s.weight;
            } else {
                debug_assert!(next[table.at(k_left, c_left)] >= need_left.max(0));
            }
        }
        start = end;
    }
    debug_assert_eq!((k_left, c_left), (0, 0));
    Ok(Bundle::new(chosen))
}

struct Table {
    k_max: usize,
    width: usize,
    cap: i64,
}

impl Table {
    fn at(&self, k: usize, c: usize) -> usize {
        k * self.width + c
    }

    fn base(&self) -> Vec<i64> {
        let mut t = vec![INFEASIBLE; (self.k_max + 1) * self.width];
        t[0] = 0;
        t
    }

    /// `G_j` from `G_{j+1}`: best capped weight using items `j..`.
    fn step(&self, next: &[i64], item: &Scaled) -> Vec<i64> {
        let mut cur = next.to_vec();
        if item.ticks > self.k_max {
            return cur;
        }
        for k in item.ticks..=self.k_max {
            let from = (k - item.ticks) * self.width;
            let to = k * self.width;
            for c in 1..self.width {
                let g = next[from + c - 1];
                if g != INFEASIBLE {
                    let w = (g + item.weight).min(self.cap);
                    if w > cur[to + c] {
                        cur[to + c] = w;
                    }
                }
            }
        }
        cur
    }
}
