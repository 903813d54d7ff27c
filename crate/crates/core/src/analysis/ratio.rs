//! Seeded welfare experiments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bundle::Bundle;
use crate::error::{input, Error, Result};
use crate::instance::Instance;
use crate::mechanism::{draw_coins, run_mechanism, run_seeded, Branch, MechanismOutcome, MechanismParams};
use crate::random::trial_seed;
use crate::rational::Rational;

use super::opt::opt_welfare;
use super::stats::MeanAcc;

/// One CSV row per trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub seed: u64,
    pub branch: String,
    pub welfare_num: i128,
    pub welfare_den: i128,
    pub opt: Rational,
    pub ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptKind {
    /// Computed by the exact welfare oracle.
    Exact,
    /// Supplied by the caller.
    Supplied,
    /// `sum_j max_i v_i({j})`, an upper bound for subadditive valuations,
    /// used when the exact oracle is out of range.
    ItemBound,
}

/// `sum_j max_i v_i({j})`. Every supported family is subadditive, so this
/// bounds the optimal welfare from above.
pub fn item_bound(instance: &Instance) -> Rational {
    (0..instance.m)
        .map(|j| {
            let single = Bundle::new(vec![j]);
            instance.bidders.iter().map(|v| v.value_unchecked(&single)).max().unwrap_or_default()
        })
        .sum()
}

/// Exact welfare when the oracle's size guard allows it, the item bound
/// otherwise.
pub fn opt_or_bound(instance: &Instance) -> Result<(Rational, OptKind)> {
    match opt_welfare(instance) {
        Ok(o) => Ok((o, OptKind::Exact)),
        Err(Error::Size(_)) => Ok((item_bound(instance), OptKind::ItemBound)),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub opt: Rational,
    pub opt_kind: OptKind,
    pub trials: usize,
    pub seed: u64,
    pub mean_welfare: Rational,
    pub welfare_stderr: f64,
    /// `mean_welfare / opt`, 1 when `opt` is zero.
    pub ratio: f64,
    pub branch_histogram: BTreeMap<String, usize>,
    /// `grand_bundle_prob * max_i v_i(M)`.
    pub floor: Rational,
    /// `mean_welfare + 3 stderr >= floor`.
    pub floor_holds: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub rows: Vec<TrialRow>,
}

/// Mean welfare of `trials` runs seeded `seed, seed + 1, ...`.
///
/// `opt` defaults to the exact welfare oracle (subject to its size guard).
pub fn empirical_ratio(
    instance: &Instance,
    params: &MechanismParams,
    trials: usize,
    seed: u64,
    opt: Option<Rational>,
    keep_rows: bool,
) -> Result<RatioReport> {
    let opt = match opt {
        Some(o) => (o, OptKind::Supplied),
        None => (opt_welfare(instance)?, OptKind::Exact),
    };
    empirical_ratio_observed(instance, params, trials, seed, opt, keep_rows, |_, _| {})
}

/// As [`empirical_ratio`] with a known optimum, calling `observe` with each
/// trial's seed and outcome in order.
pub fn empirical_ratio_observed(
    instance: &Instance,
    params: &MechanismParams,
    trials: usize,
    seed: u64,
    (opt, opt_kind): (Rational, OptKind),
    keep_rows: bool,
    mut observe: impl FnMut(u64, &MechanismOutcome),
) -> Result<RatioReport> {
    if trials == 0 {
        return input("trials must be positive");
    }
    let ratio_of = |w: &Rational| if opt.is_zero() { 1.0 } else { (*w / opt).to_f64() };
    let mut acc = MeanAcc::default();
    let mut total = Rational::zero();
    let mut histogram = BTreeMap::new();
    let mut rows = Vec::new();
    for t in 0..trials {
        let s = trial_seed(seed, t);
        let out = run_seeded(instance, params, s)?;
        let w = out.welfare(instance);
        acc.push(w.to_f64());
        total += w;
        *histogram.entry(out.branch.label()).or_insert(0) += 1;
        observe(s, &out);
        if keep_rows {
            rows.push(TrialRow {
                seed: s,
                branch: out.branch.label(),
                welfare_num: w.numer(),
                welfare_den: w.denom(),
                opt,
                ratio: ratio_of(&w),
            });
        }
    }
    let mean = total / Rational::from(trials);
    let top = instance.bidders.iter().map(|v| v.grand_value()).max().unwrap_or_default();
    let floor = params.grand_bundle_prob * top;
    let stderr = acc.stderr();
    Ok(RatioReport {
        opt,
        opt_kind,
        trials,
        seed,
        mean_welfare: mean,
        welfare_stderr: stderr,
        ratio: ratio_of(&mean),
        branch_histogram: histogram,
        floor,
        floor_holds: mean >= floor || mean.to_f64() + 3.0 * stderr >= floor.to_f64(),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChunkReachReport {
    pub alpha: usize,
    /// Non-grand-bundle runs that entered the chunk loop.
    pub runs: usize,
    /// Non-grand-bundle runs skipped because the scale estimate was zero.
    pub degenerate_runs: usize,
    pub final_reached: usize,
    pub frequency: f64,
    pub stderr: f64,
    /// `(1 - termination_prob)^alpha`.
    pub expected: Rational,
    pub within_3_sigma: bool,
}

/// Runs the mechanism on successive seeds until `runs` of them skip the
/// grand-bundle branch with a nonzero scale estimate, and counts how many
/// reach the final auction.
pub fn chunk_reach(instance: &Instance, params: &MechanismParams, runs: usize, seed: u64) -> Result<ChunkReachReport> {
    if runs == 0 {
        return input("runs must be positive");
    }
    let mut seen = 0usize;
    let mut reached = 0usize;
    let mut degenerate = 0usize;
    let mut t = 0usize;
    while seen < runs {
        if degenerate > 100 * runs {
            return Err(Error::Degenerate("scale estimate is almost always zero".into()));
        }
        let coins = draw_coins(instance.n(), params, trial_seed(seed, t));
        t += 1;
        if coins.grand_bundle_coin {
            continue;
        }
        let out = run_mechanism(instance, params, &coins)?;
        if out.transcript.scale.is_none() {
            degenerate += 1;
            continue;
        }
        seen += 1;
        if out.branch == Branch::FinalAuction {
            reached += 1;
        }
    }
    let mut expected = Rational::one();
    for _ in 0..params.alpha {
        expected = expected * (Rational::one() - params.termination_prob);
    }
    let frequency = reached as f64 / runs as f64;
    let e = expected.to_f64();
    let stderr = (e * (1.0 - e) / runs as f64).sqrt();
    Ok(ChunkReachReport {
        alpha: params.alpha,
        runs,
        degenerate_runs: degenerate,
        final_reached: reached,
        frequency,
        stderr,
        expected,
        within_3_sigma: (frequency - e).abs() <= 3.0 * stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuations::Valuation;

    fn r(v: i128) -> Rational {
        Rational::from_int(v)
    }

    #[test]
    fn zero_instance_ratio_is_one() {
        let inst = Instance::new(2, vec![Valuation::additive(vec![r(0), r(0)]); 2]).unwrap();
        let rep = empirical_ratio(&inst, &MechanismParams::for_items(2), 20, 0, None, true).unwrap();
        assert_eq!(rep.opt, r(0));
        assert_eq!(rep.ratio, 1.0);
        assert_eq!(rep.rows.len(), 20);
        assert_eq!(rep.branch_histogram.values().sum::<usize>(), 20);
    }

    #[test]
    fn single_bidder_grand_bundle_floor() {
        let inst = Instance::new(3, vec![Valuation::additive(vec![r(1), r(2), r(3)])]).unwrap();
        let rep = empirical_ratio(&inst, &MechanismParams::for_items(3), 400, 9, None, false).unwrap();
        assert_eq!(rep.opt, r(6));
        assert!(rep.floor_holds);
        assert!(rep.ratio >= 0.4, "{}", rep.ratio);
        assert!(rep.ratio <= 1.0);
    }

    #[test]
    fn item_bound_dominates_opt() {
        let inst = Instance::new(
            2,
            vec![Valuation::budget_additive(vec![r(4), r(4)], r(4)), Valuation::additive(vec![r(1), r(3)])],
        )
        .unwrap();
        assert_eq!(item_bound(&inst), r(8));
        assert_eq!(opt_or_bound(&inst).unwrap(), (r(7), OptKind::Exact));
    }

    #[test]
    fn reach_expected_value() {
        let inst = Instance::new(8, vec![Valuation::additive(vec![r(1); 8]); 2]).unwrap();
        let params = MechanismParams::for_items(8);
        let rep = chunk_reach(&inst, &params, 2000, 1).unwrap();
        assert_eq!(rep.expected, Rational::new(1, 4));
        assert!(rep.degenerate_runs > 0);
        assert!(rep.within_3_sigma, "{rep:?}");

        let zero = Instance::new(2, vec![Valuation::additive(vec![r(0); 2])]).unwrap();
        assert!(chunk_reach(&zero, &MechanismParams::for_items(2), 10, 0).is_err());
    }
}
