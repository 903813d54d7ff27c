//! Counterfactual deviation sweeps under fixed coins.

use serde::{Deserialize, Serialize};

use crate::auctions::{DemandOracle, ExactDemand};
use crate::bundle::Bundle;
use crate::error::Result;
use crate::instance::Instance;
use crate::mechanism::{draw_coins, run_mechanism_with, utility, MechanismParams};
use crate::rational::Rational;
use crate::valuations::{AdditiveClause, Valuation};

/// A misreport generator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deviation {
    Truthful,
    /// Every weight and the budget multiplied by a factor.
    Scale(Rational),
    /// Values nothing.
    Zero,
    /// XOS: drop clause `k mod t` (when more than one). Other families:
    /// zero the weight of item `k mod m`.
    DropPart(usize),
    /// Budget multiplied by a factor. Additive and XOS reports become
    /// budget additive over their pointwise-max weights, with the budget
    /// set to the factor times `v(M)`.
    BudgetScale(Rational),
    /// Exchanges the weights of two items (indices taken mod m).
    SwapItems(usize, usize),
    /// Additive with weight one on every item.
    AllOnes,
}

impl Deviation {
    pub fn id(&self) -> String {
        match self {
            Deviation::Truthful => "truthful".into(),
            Deviation::Scale(f) => format!("scale_{f}"),
            Deviation::Zero => "zero".into(),
            Deviation::DropPart(k) => format!("drop_{k}"),
            Deviation::BudgetScale(f) => format!("budget_{f}"),
            Deviation::SwapItems(a, b) => format!("swap_{a}_{b}"),
            Deviation::AllOnes => "all_ones".into(),
        }
    }

    pub fn apply(&self, v: &Valuation) -> Valuation {
        let m = v.items();
        let map_weights = |f: &dyn Fn(&[Rational]) -> Vec<Rational>| -> Valuation {
            match v {
                Valuation::Additive { weights } => Valuation::additive(f(&weights.0)),
                Valuation::BudgetAdditive { weights, budget } => Valuation::budget_additive(f(weights), *budget),
                Valuation::Xos { clauses } => {
                    Valuation::Xos { clauses: clauses.iter().map(|c| AdditiveClause(f(&c.0))).collect() }
                }
            }
        };
        match self {
            Deviation::Truthful => v.clone(),
            Deviation::Scale(factor) => {
                let scaled = map_weights(&|w| w.iter().map(|x| x * factor).collect());
                match scaled {
                    Valuation::BudgetAdditive { weights, budget } => {
                        Valuation::budget_additive(weights, budget * *factor)
                    }
                    other => other,
                }
            }
            Deviation::Zero => map_weights(&|w| vec![Rational::zero(); w.len()]),
            Deviation::DropPart(k) => match v {
                Valuation::Xos { clauses } if clauses.len() > 1 => {
                    let mut c = clauses.clone();
                    c.remove(k % c.len());
                    Valuation::Xos { clauses: c }
                }
                _ if m == 0 => v.clone(),
                _ => map_weights(&|w| {
                    let mut w = w.to_vec();
                    w[k % m] = Rational::zero();
                    w
                }),
            },
            Deviation::BudgetScale(factor) => match v {
                Valuation::BudgetAdditive { weights, budget } => {
                    Valuation::budget_additive(weights.clone(), *budget * *factor)
                }
                Valuation::Additive { weights } => {
                    Valuation::budget_additive(weights.0.clone(), v.grand_value() * *factor)
                }
                Valuation::Xos { clauses } => {
                    let top = (0..m).map(|j| clauses.iter().map(|c| c.0[j]).max().unwrap_or_default()).collect();
                    Valuation::budget_additive(top, v.grand_value() * *factor)
                }
            },
            Deviation::SwapItems(a, b) if m > 0 => map_weights(&|w| {
                let mut w = w.to_vec();
                w.swap(a % m, b % m);
                w
            }),
            Deviation::SwapItems(..) => v.clone(),
            Deviation::AllOnes => Valuation::additive(vec![Rational::one(); m]),
        }
    }
}

/// The eight-deviation corpus used by the checks.
pub fn standard_deviations() -> Vec<Deviation> {
    vec![
        Deviation::Scale(Rational::from_int(2)),
        Deviation::Scale(Rational::new(1, 2)),
        Deviation::Zero,
        Deviation::DropPart(0),
        Deviation::BudgetScale(Rational::new(1, 2)),
        Deviation::BudgetScale(Rational::from_int(2)),
        Deviation::SwapItems(0, 1),
        Deviation::AllOnes,
    ]
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub seed: u64,
    pub bidder: usize,
    pub deviation: String,
    pub truthful_utility: Rational,
    pub deviant_utility: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrViolation {
    pub seed: u64,
    pub bidder: usize,
    pub utility: Rational,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub seeds: usize,
    /// Mechanism runs including the truthful ones.
    pub runs: usize,
    pub violations: Vec<Violation>,
    /// Truthful bidders (in every run) that ended with negative utility.
    pub ir_violations: Vec<IrViolation>,
    /// Runs (truthful or deviant) whose allocation was not disjoint.
    pub infeasible_runs: usize,
}

impl DeviationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.ir_violations.is_empty() && self.infeasible_runs == 0
    }

    pub fn merge(&mut self, other: DeviationReport) {
        self.seeds += other.seeds;
        self.runs += other.runs;
        self.violations.extend(other.violations);
        self.ir_violations.extend(other.ir_violations);
        self.infeasible_runs += other.infeasible_runs;
    }
}

pub fn truthfulness_sweep(
    instance: &Instance,
    params: &MechanismParams,
    deviations: &[Deviation],
    seeds: impl IntoIterator<Item = u64>,
) -> Result<DeviationReport> {
    truthfulness_sweep_with(&ExactDemand, instance, params, deviations, seeds)
}

/// For each seed: draw the coins once, run truthfully, then rerun with the
/// same coins once per (bidder, deviation) with that bidder's report
/// replaced. Utilities are always measured with the true valuation.
pub fn truthfulness_sweep_with(
    oracle: &dyn DemandOracle,
    instance: &Instance,
    params: &MechanismParams,
    deviations: &[Deviation],
    seeds: impl IntoIterator<Item = u64>,
) -> Result<DeviationReport> {
    let mut report = DeviationReport::default();
    for seed in seeds {
        report.seeds += 1;
        let coins = draw_coins(instance.n(), params, seed);
        let truthful = run_mechanism_with(oracle, instance, params, &coins)?;
        report.runs += 1;
        if !truthful.allocation.is_feasible(instance.m) {
            report.infeasible_runs += 1;
        }
        for i in 0..instance.n() {
            let honest = utility(instance, i, &truthful);
            if honest.is_negative() {
                report.ir_violations.push(IrViolation { seed, bidder: i, utility: honest });
            }
            for dev in deviations {
                let reported = instance.with_report(i, dev.apply(instance.valuation(i)));
                let out = run_mechanism_with(oracle, &reported, params, &coins)?;
                report.runs += 1;
                if !out.allocation.is_feasible(instance.m) {
                    report.infeasible_runs += 1;
                }
                for k in (0..instance.n()).filter(|&k| k != i) {
                    let u = utility(instance, k, &out);
                    if u.is_negative() {
                        report.ir_violations.push(IrViolation { seed, bidder: k, utility: u });
                    }
                }
                let gained = utility(instance, i, &out);
                if gained > honest {
                    report.violations.push(Violation {
                        seed,
                        bidder: i,
                        deviation: dev.id(),
                        truthful_utility: honest,
                        deviant_utility: gained,
                    });
                }
            }
        }
    }
    Ok(report)
}

/// A deliberately broken oracle: evaluates profit as if every price were
/// doubled. Used to confirm the truthfulness checks catch oracle bugs.
#[derive(Clone, Copy, Debug, Default)]
pub struct DoubledPriceOracle;

impl DemandOracle for DoubledPriceOracle {
    fn demand(&self, v: &Valuation, prices: &[Rational]) -> Result<Bundle> {
        let doubled: Vec<Rational> = prices.iter().map(|p| *p * Rational::from_int(2)).collect();
        v.demand(&doubled)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::{run_mechanism, Branch};

    fn r(v: i128) -> Rational {
        Rational::from_int(v)
    }

    fn rv(v: &[i128]) -> Vec<Rational> {
        v.iter().copied().map(r).collect()
    }

    #[test]
    fn deviations_produce_valid_reports() {
        let vals = [
            Valuation::additive(rv(&[3, 1, 2])),
            Valuation::budget_additive(rv(&[3, 1, 2]), r(4)),
            Valuation::xos(vec![rv(&[3, 0, 1]), rv(&[0, 2, 2])]),
        ];
        for v in &vals {
            for d in standard_deviations().iter().chain([&Deviation::Truthful]) {
                d.apply(v).validate(3).unwrap();
            }
        }
        assert_eq!(Deviation::Scale(r(2)).apply(&vals[1]), Valuation::budget_additive(rv(&[6, 2, 4]), r(8)));
        assert_eq!(Deviation::DropPart(1).apply(&vals[2]), Valuation::xos(vec![rv(&[3, 0, 1])]));
        assert_eq!(Deviation::SwapItems(0, 2).apply(&vals[0]), Valuation::additive(rv(&[2, 1, 3])));
        assert_eq!(Deviation::BudgetScale(Rational::new(1, 2)).apply(&vals[0]).grand_value(), r(3));
    }

    #[test]
    fn truthful_deviation_changes_nothing() {
        let inst = Instance::new(
            3,
            vec![
                Valuation::additive(rv(&[3, 1, 2])),
                Valuation::xos(vec![rv(&[3, 0, 1]), rv(&[0, 2, 2])]),
                Valuation::budget_additive(rv(&[2, 2, 2]), r(3)),
            ],
        )
        .unwrap();
        let params = MechanismParams::for_items(3);
        let rep = truthfulness_sweep(&inst, &params, &[Deviation::Truthful], 0..30).unwrap();
        assert!(rep.is_clean(), "{rep:?}");
        assert_eq!(rep.runs, 30 * (1 + 3));
    }

    #[test]
    fn grand_bundle_underreport_never_gains() {
        let inst = Instance::new(
            2,
            vec![Valuation::additive(rv(&[5, 5])), Valuation::additive(rv(&[3, 4])), Valuation::additive(rv(&[1, 1]))],
        )
        .unwrap();
        let params = MechanismParams::for_items(2);
        let seeds: Vec<u64> = (0..200).filter(|&s| draw_coins(3, &params, s).grand_bundle_coin).take(10).collect();
        assert_eq!(seeds.len(), 10);
        for &s in &seeds {
            let out = run_mechanism(&inst, &params, &draw_coins(3, &params, s)).unwrap();
            assert_eq!(out.branch, Branch::GrandBundle);
        }
        let devs = [Deviation::Scale(Rational::new(1, 2)), Deviation::Zero, Deviation::Scale(Rational::new(3, 5))];
        let rep = truthfulness_sweep(&inst, &params, &devs, seeds).unwrap();
        assert!(rep.is_clean(), "{rep:?}");
    }

    #[test]
    fn doubled_price_oracle_is_caught() {
        let inst = Instance::new(
            4,
            vec![
                Valuation::additive(rv(&[3, 1, 2, 2])),
                Valuation::additive(rv(&[1, 3, 2, 1])),
                Valuation::additive(rv(&[2, 2, 3, 1])),
                Valuation::additive(rv(&[1, 2, 1, 3])),
            ],
        )
        .unwrap();
        let params = MechanismParams::for_items(4);
        let rep = truthfulness_sweep_with(&DoubledPriceOracle, &inst, &params, &standard_deviations(), 0..40).unwrap();
        assert!(!rep.violations.is_empty());
        assert!(rep.violations.iter().all(|v| v.deviant_utility > v.truthful_utility));
    }
}
