//! Supported allocations and executable checks of the posted-price lemmas.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::auctions::{fixed_price_auction, Allocation};
use crate::bundle::Bundle;
use crate::error::{input, Result};
use crate::instance::Instance;
use crate::rational::Rational;
use crate::valuations::SupportingPriceMap;

use super::stats::{bernoulli, MeanAcc};

/// An allocation `T` together with reference prices `p'` it is supported by:
/// every allocated item's supporting price is at least its reference price.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportedAllocation {
    pub allocation: Allocation,
    pub support: Vec<Rational>,
    /// Supporting prices of each bidder's bundle under its own valuation.
    pub q: Vec<SupportingPriceMap>,
}

impl SupportedAllocation {
    /// Derives `q` from the valuations and checks `q_j >= p'_j`.
    pub fn new(instance: &Instance, allocation: Allocation, support: Vec<Rational>) -> Result<Self> {
        if allocation.bundles().len() != instance.n() || !allocation.is_feasible(instance.m) {
            return input("allocation is not feasible for the instance");
        }
        if support.len() != instance.m || support.iter().any(Rational::is_negative) {
            return input("support prices must be m nonnegative rationals");
        }
        let q = allocation
            .bundles()
            .iter()
            .enumerate()
            .map(|(i, s)| instance.valuation(i).supporting_prices(s))
            .collect::<Result<Vec<_>>>()?;
        for qi in &q {
            if let Some((j, qj)) = qi.iter().find(|&(j, qj)| qj < support[j]) {
                return input(format!("item {j}: supporting price {qj} below support {}", support[j]));
            }
        }
        Ok(SupportedAllocation { allocation, support, q })
    }

    pub fn empty(instance: &Instance) -> Self {
        SupportedAllocation::new(instance, Allocation::empty(instance.n()), vec![Rational::zero(); instance.m])
            .expect("empty allocation is supported")
    }

    /// A random allocation with support prices drawn below the supporting
    /// prices (in quarter steps) on allocated items and arbitrary elsewhere.
    pub fn random(instance: &Instance, rng: &mut impl Rng) -> Self {
        let n = instance.n();
        let mut bundles = vec![Vec::new(); n];
        for j in 0..instance.m {
            let owner = rng.gen_range(0..=n);
            if owner < n {
                bundles[owner].push(j);
            }
        }
        let allocation = Allocation(bundles.into_iter().map(Bundle::new).collect());
        let mut support = vec![Rational::zero(); instance.m];
        let top = instance.bidders.iter().map(|v| v.grand_value()).max().unwrap_or_default();
        for (i, s) in allocation.bundles().iter().enumerate() {
            let q = instance.valuation(i).supporting_prices(s).expect("in range");
            for (j, qj) in q.iter() {
                support[j] = qj * Rational::new(rng.gen_range(0..=4), 4);
            }
        }
        let allocated = allocation.allocated();
        for (j, p) in support.iter_mut().enumerate() {
            if !allocated.contains(j) {
                *p = top * Rational::new(rng.gen_range(0..=4), 4);
            }
        }
        SupportedAllocation::new(instance, allocation, support).expect("constructed supported")
    }

    /// `sum_{j in ∪T} p'_j`.
    pub fn supported_value(&self) -> Rational {
        self.allocation.allocated().iter().map(|j| self.support[j]).sum()
    }

    /// `o = sum of q_j over allocated items`.
    pub fn supporting_total(&self) -> Rational {
        self.q.iter().map(SupportingPriceMap::total).sum()
    }

    fn half_support(&self) -> Vec<Rational> {
        self.support.iter().map(|p| *p / Rational::from_int(2)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevenueCheck {
    pub holds: bool,
    pub welfare: Rational,
    pub bound: Rational,
    pub slack: Rational,
}

/// A fixed-price auction at `p'/2` in `order` yields welfare at least half
/// the support value of `sa`.
pub fn check_lemma_revenue(instance: &Instance, sa: &SupportedAllocation, order: &[usize]) -> Result<RevenueCheck> {
    // Rebuild so q always comes from the valuations themselves.
    let sa = SupportedAllocation::new(instance, sa.allocation.clone(), sa.support.clone())?;
    let res = fixed_price_auction(instance, order, &sa.half_support(), &instance.all_items())?;
    let welfare = res.allocation.welfare(instance);
    let bound = sa.supported_value() / Rational::from_int(2);
    Ok(RevenueCheck { holds: welfare >= bound, welfare, bound, slack: welfare - bound })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomOrderReport {
    pub trials: usize,
    pub o: Rational,
    pub mean_welfare: f64,
    pub welfare_stderr: f64,
    pub mean_c: f64,
    /// `o * E[c] * r / 4` with `E[c]` estimated.
    pub rhs: f64,
    /// `(mean_welfare - rhs) / stderr`; infinite when the stderr is zero.
    pub z: f64,
    pub holds: bool,
}

/// Monte Carlo check of the random-order bound
/// `E[welfare] >= o * E[c] * r / 4` where bidders join with probability `r`
/// and arrive in uniformly random order, at prices `p'/2`.
pub fn check_lemma_random_order(
    instance: &Instance,
    sa: &SupportedAllocation,
    r_prob: &Rational,
    trials: usize,
    seed: u64,
) -> Result<RandomOrderReport> {
    if trials == 0 {
        return input("trials must be positive");
    }
    if r_prob.is_negative() || *r_prob > Rational::one() {
        return input("participation probability outside [0, 1]");
    }
    let sa = SupportedAllocation::new(instance, sa.allocation.clone(), sa.support.clone())?;
    let prices = sa.half_support();
    let o = sa.supporting_total();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut welfare = MeanAcc::default();
    let mut sum_w = Rational::zero();
    let mut sum_c = Rational::zero();
    for _ in 0..trials {
        let mut joined: Vec<usize> = (0..instance.n()).filter(|_| bernoulli(&mut rng, r_prob)).collect();
        joined.shuffle(&mut rng);
        let res = fixed_price_auction(instance, &joined, &prices, &instance.all_items())?;
        let w = res.allocation.welfare(instance);
        let sold = res.allocation.allocated();
        let c = if o.is_zero() {
            Rational::zero()
        } else {
            let covered: Rational =
                sa.q.iter().flat_map(|qi| qi.iter()).filter(|(j, _)| sold.contains(*j)).map(|(_, qj)| qj).sum();
            Rational::one() - covered / o
        };
        welfare.push(w.to_f64());
        sum_w += w;
        sum_c += c;
    }
    let t = Rational::from(trials);
    let mean_c_exact = sum_c / t;
    let rhs_exact = o * mean_c_exact * *r_prob / Rational::from_int(4);
    let mean_exact = sum_w / t;
    let stderr = welfare.stderr();
    let mean = welfare.mean();
    let rhs = rhs_exact.to_f64();
    let z = if stderr > 0.0 {
        (mean - rhs) / stderr
    } else if mean >= rhs {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    let holds = mean_exact >= rhs_exact || mean + 3.0 * stderr >= rhs;
    Ok(RandomOrderReport {
        trials,
        o,
        mean_welfare: mean,
        welfare_stderr: stderr,
        mean_c: mean_c_exact.to_f64(),
        rhs,
        z,
        holds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub trials: usize,
    /// `sum / max`, the spread parameter of the bound.
    pub spread: f64,
    pub bound: f64,
    pub failures: usize,
    pub frequency: f64,
    pub stderr: f64,
    pub holds: bool,
}

/// Samples `S` with each index kept with probability `p` and counts how
/// often `sum_{i in S} values_i < p * sum / 2`, against `2 exp(-p R / 2)`.
pub fn check_sampling_concentration(
    values: &[Rational],
    p: &Rational,
    trials: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    if trials == 0 {
        return input("trials must be positive");
    }
    if values.iter().any(Rational::is_negative) {
        return input("values must be nonnegative");
    }
    if p.is_negative() || *p > Rational::one() {
        return input("probability outside [0, 1]");
    }
    let total: Rational = values.iter().sum();
    let max = values.iter().copied().max().unwrap_or_default();
    if total.is_zero() {
        return Ok(ConcentrationReport {
            trials,
            spread: 0.0,
            bound: 2.0,
            failures: 0,
            frequency: 0.0,
            stderr: 0.0,
            holds: true,
        });
    }
    let spread = (total / max).to_f64();
    let bound = 2.0 * (-p.to_f64() * spread / 2.0).exp();
    let threshold = *p * total / Rational::from_int(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0usize;
    for _ in 0..trials {
        let kept: Rational = values.iter().filter(|_| bernoulli(&mut rng, p)).sum();
        if kept < threshold {
            failures += 1;
        }
    }
    let frequency = failures as f64 / trials as f64;
    let stderr = (frequency * (1.0 - frequency) / trials as f64).sqrt();
    Ok(ConcentrationReport {
        trials,
        spread,
        bound,
        failures,
        frequency,
        stderr,
        holds: frequency <= bound + 3.0 * stderr,
    })
}
