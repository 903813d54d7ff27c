//! Seeded instance generators. All values are integers.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::instance::Instance;
use crate::mechanism::MechanismParams;
use crate::rational::Rational;
use crate::valuations::Valuation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `n = m`; bidder `i` values only item `i`, at a power of two `<= m`.
    Diagonal,
    RandomAdditive,
    RandomXos,
    RandomBudgetAdditive,
    /// Bidder 0 outweighs everyone else together by a factor `alpha`.
    Dominant,
}

impl Family {
    pub const ALL: [Family; 5] =
        [Family::Diagonal, Family::RandomAdditive, Family::RandomXos, Family::RandomBudgetAdditive, Family::Dominant];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Diagonal => "diagonal",
            Family::RandomAdditive => "random_additive",
            Family::RandomXos => "random_xos",
            Family::RandomBudgetAdditive => "random_budget_additive",
            Family::Dominant => "dominant",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| Error::Input(format!("unknown family `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: Family,
    pub n: usize,
    pub m: usize,
    /// Inclusive integer range of random weights.
    pub value_range: (u32, u32),
    pub clause_count: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(family: Family, n: usize, m: usize, seed: u64) -> Self {
        GeneratorSpec { family, n, m, value_range: (0, 10), clause_count: 3, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return input("n and m must be at least 1");
        }
        if self.m > 64 && matches!(self.family, Family::RandomXos) && self.clause_count > 1_000 {
            return input("xos instance too large");
        }
        if self.value_range.0 > self.value_range.1 {
            return input("value range must satisfy lo <= hi");
        }
        if self.family == Family::RandomXos && self.clause_count == 0 {
            return input("clause count must be at least 1");
        }
        if self.family == Family::Diagonal && self.n != self.m {
            return input("diagonal instances need n == m");
        }
        Ok(())
    }
}

fn weights(rng: &mut ChaCha8Rng, m: usize, (lo, hi): (u32, u32)) -> Vec<Rational> {
    (0..m).map(|_| Rational::from(rng.gen_range(lo..=hi) as u64)).collect()
}

pub fn generate(spec: &GeneratorSpec) -> Result<Instance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (n, m) = (spec.n, spec.m);
    let bidders = match spec.family {
        Family::Diagonal => {
            let top = (0..).take_while(|e| 1usize << e <= m).last().unwrap_or(0);
            (0..n)
                .map(|i| {
                    let mut w = vec![Rational::zero(); m];
                    w[i] = Rational::pow2(rng.gen_range(0..=top));
                    Valuation::additive(w)
                })
                .collect()
        }
        Family::RandomAdditive => (0..n).map(|_| Valuation::additive(weights(&mut rng, m, spec.value_range))).collect(),
        Family::RandomXos => (0..n)
            .map(|_| Valuation::xos((0..spec.clause_count).map(|_| weights(&mut rng, m, spec.value_range)).collect()))
            .collect(),
        Family::RandomBudgetAdditive => (0..n)
            .map(|_| {
                let w = weights(&mut rng, m, spec.value_range);
                let total: Rational = w.iter().sum();
                let budget = Rational::from_int(rng.gen_range(0..=total.numer()));
                Valuation::budget_additive(w, budget)
            })
            .collect(),
        Family::Dominant => {
            let rest: Vec<Vec<Rational>> = (1..n).map(|_| weights(&mut rng, m, spec.value_range)).collect();
            let factor = Rational::from(MechanismParams::for_items(m).alpha);
            let lead: Vec<Rational> =
                (0..m).map(|j| factor * rest.iter().map(|w| w[j]).sum::<Rational>() + Rational::one()).collect();
            std::iter::once(lead).chain(rest).map(Valuation::additive).collect()
        }
    };
    Instance::new(m, bidders)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::Bundle;

    #[test]
    fn diagonal_values_are_powers_of_two_up_to_m() {
        for seed in 0..20 {
            let inst = generate(&GeneratorSpec::new(Family::Diagonal, 4, 4, seed)).unwrap();
            for (i, v) in inst.bidders.iter().enumerate() {
                for j in 0..4 {
                    let x = v.value(&Bundle::new(vec![j])).unwrap();
                    if i == j {
                        assert!([1, 2, 4].contains(&x.numer()) && x.is_integer(), "{x}");
                    } else {
                        assert!(x.is_zero());
                    }
                }
            }
        }
        assert!(generate(&GeneratorSpec::new(Family::Diagonal, 3, 4, 0)).is_err());
    }

    #[test]
    fn zero_range_gives_zero_instance() {
        let mut spec = GeneratorSpec::new(Family::RandomAdditive, 2, 3, 1);
        spec.value_range = (0, 0);
        let inst = generate(&spec).unwrap();
        assert!(inst.bidders.iter().all(|v| v.grand_value().is_zero()));
    }

    #[test]
    fn single_clause_xos_is_additive() {
        let mut spec = GeneratorSpec::new(Family::RandomXos, 3, 4, 2);
        spec.clause_count = 1;
        let inst = generate(&spec).unwrap();
        for v in &inst.bidders {
            let Valuation::Xos { clauses } = v else { panic!() };
            assert_eq!(clauses.len(), 1);
            let add = Valuation::Additive { weights: clauses[0].clone() };
            for mask in 0..16 {
                let s = Bundle::from_mask(mask);
                assert_eq!(v.value(&s).unwrap(), add.value(&s).unwrap());
            }
        }
    }

    #[test]
    fn dominant_bidder_outweighs_the_rest() {
        let inst = generate(&GeneratorSpec::new(Family::Dominant, 4, 8, 3)).unwrap();
        let lead = inst.valuation(0).grand_value();
        let rest: Rational = inst.bidders[1..].iter().map(|v| v.grand_value()).sum();
        assert!(lead >= Rational::from_int(2) * rest);
    }

    #[test]
    fn deterministic_and_parseable_names() {
        let spec = GeneratorSpec::new(Family::RandomBudgetAdditive, 3, 5, 11);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!("nope".parse::<Family>().is_err());
    }
}
