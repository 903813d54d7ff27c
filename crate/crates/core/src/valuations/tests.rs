use proptest::prelude::*;

use super::*;

fn r(v: i128) -> Rational {
    Rational::from_int(v)
}

fn rv(v: &[i128]) -> Vec<Rational> {
    v.iter().copied().map(r).collect()
}

fn b(items: &[usize]) -> Bundle {
    Bundle::new(items.to_vec())
}

#[test]
fn value_examples() {
    let add = Valuation::additive(rv(&[3, 1]));
    assert_eq!(add.value(&b(&[0, 1])).unwrap(), r(4));
    let ba = Valuation::budget_additive(rv(&[3, 3]), r(4));
    assert_eq!(ba.value(&b(&[0, 1])).unwrap(), r(4));
    let xos = Valuation::xos(vec![rv(&[2, 0]), rv(&[0, 3])]);
    assert_eq!(xos.value(&b(&[0, 1])).unwrap(), r(3));
    for v in [&add, &ba, &xos] {
        assert_eq!(v.value(&Bundle::empty()).unwrap(), r(0));
    }
}

#[test]
fn value_rejects_out_of_range_items() {
    let add = Valuation::additive(rv(&[3, 1]));
    assert!(matches!(add.value(&b(&[2])), Err(Error::Input(_))));
}

#[test]
fn validate_rejects_bad_valuations() {
    assert!(Valuation::additive(rv(&[1, -1])).validate(2).is_err());
    assert!(Valuation::additive(rv(&[1])).validate(2).is_err());
    assert!(Valuation::budget_additive(rv(&[1, 1]), r(-1)).validate(2).is_err());
    assert!(Valuation::Xos { clauses: vec![] }.validate(2).is_err());
    assert!(Valuation::xos(vec![rv(&[1, 1])]).validate(2).is_ok());
}

#[test]
fn demand_examples() {
    let add = Valuation::additive(rv(&[3, 1]));
    assert_eq!(add.demand(&rv(&[1, 2])).unwrap(), b(&[0]));

    let xos = Valuation::xos(vec![rv(&[2, 0]), rv(&[0, 2])]);
    assert_eq!(xos.demand(&rv(&[1, 1])).unwrap(), b(&[0]));

    let ba = Valuation::budget_additive(rv(&[3, 3]), r(4));
    assert_eq!(ba.demand(&rv(&[1, 1])).unwrap(), b(&[0]));
}

#[test]
fn demand_excludes_items_priced_at_their_weight() {
    let add = Valuation::additive(rv(&[2, 0, 5]));
    assert_eq!(add.demand(&rv(&[2, 0, 1])).unwrap(), b(&[2]));
}

#[test]
fn demand_rejects_bad_prices() {
    let add = Valuation::additive(rv(&[3, 1]));
    assert!(add.demand(&rv(&[1])).is_err());
    assert!(add.demand(&rv(&[1, -1])).is_err());
}

#[test]
fn bruteforce_examples() {
    let xos = Valuation::xos(vec![rv(&[5, 1]), rv(&[1, 5])]);
    assert_eq!(demand_bruteforce(&xos, &rv(&[2, 2])).unwrap(), b(&[0]));

    let ba = Valuation::budget_additive(rv(&[3, 3]), r(4));
    assert_eq!(demand_bruteforce(&ba, &rv(&[5, 5])).unwrap(), Bundle::empty());

    let add = Valuation::additive(rv(&[4, 0, 2]));
    assert_eq!(demand_bruteforce(&add, &rv(&[1, 1, 1])).unwrap(), add.demand(&rv(&[1, 1, 1])).unwrap());
}

#[test]
fn bruteforce_size_guard() {
    let add = Valuation::additive(vec![r(1); 21]);
    assert!(matches!(demand_bruteforce(&add, &vec![r(0); 21]), Err(Error::Size(_))));
}

#[test]
fn grid_dp_examples() {
    let ba = Valuation::budget_additive(rv(&[3, 3]), r(4));
    assert_eq!(budget_additive_demand_dp(&ba, &[1, 1], &r(1)).unwrap(), b(&[0]));

    let zero = Valuation::budget_additive(rv(&[0, 0, 0]), r(7));
    assert_eq!(budget_additive_demand_dp(&zero, &[1, 2, 3], &Rational::new(1, 3)).unwrap(), Bundle::empty());

    let slack = Valuation::budget_additive(rv(&[5, 4, 3]), r(100));
    assert_eq!(budget_additive_demand_dp(&slack, &[2, 3, 1], &r(1)).unwrap(), b(&[0, 1, 2]));
}

#[test]
fn grid_dp_input_errors() {
    let ba = Valuation::budget_additive(rv(&[3, 3]), r(4));
    assert!(matches!(budget_additive_demand_dp(&ba, &[0, 1], &r(1)), Err(Error::Input(_))));
    assert!(matches!(budget_additive_demand_dp(&ba, &[1], &r(1)), Err(Error::Input(_))));
    let add = Valuation::additive(rv(&[3, 3]));
    assert!(budget_additive_demand_dp(&add, &[1, 1], &r(1)).is_err());
}

#[test]
fn grid_dp_rescales_by_unit() {
    let ba = Valuation::budget_additive(rv(&[3, 2, 2]), r(4));
    let unit = Rational::new(1, 4);
    let ticks = [4, 2, 6];
    let prices: Vec<Rational> = ticks.iter().map(|&t| unit * Rational::from_int(t)).collect();
    assert_eq!(budget_additive_demand_dp(&ba, &ticks, &unit).unwrap(), demand_bruteforce(&ba, &prices).unwrap());
}

#[test]
fn zero_priced_budget_items_are_handled() {
    // Budget binds with zero-priced items: fewest items wins.
    let ba = Valuation::budget_additive(rv(&[2, 2, 4, 1]), r(4));
    let p = rv(&[0, 0, 0, 0]);
    assert_eq!(ba.demand(&p).unwrap(), b(&[2]));
    assert_eq!(ba.demand(&p).unwrap(), demand_bruteforce(&ba, &p).unwrap());
}

#[test]
fn supporting_price_examples() {
    let xos = Valuation::xos(vec![rv(&[2, 0]), rv(&[0, 3])]);
    let q = xos.supporting_prices(&b(&[0, 1])).unwrap();
    assert_eq!(q.get(0), Some(r(0)));
    assert_eq!(q.get(1), Some(r(3)));
    assert!(xos.supporting_prices(&Bundle::empty()).unwrap().is_empty());

    let single = Valuation::xos(vec![rv(&[1, 1])]);
    let q = single.supporting_prices(&b(&[0, 1])).unwrap();
    assert_eq!(q.total(), r(2));
    assert_eq!(q.get(0), Some(r(1)));
}

#[test]
fn xos_supporting_ties_go_to_lowest_clause() {
    let xos = Valuation::xos(vec![rv(&[1, 2]), rv(&[2, 1])]);
    let q = xos.supporting_prices(&b(&[0, 1])).unwrap();
    assert_eq!(q.get(0), Some(r(1)));
}

#[test]
fn to_xos_examples() {
    let add = Valuation::additive(rv(&[3, 1]));
    assert_eq!(add.to_xos(1).unwrap(), Valuation::xos(vec![rv(&[3, 1])]));

    let ba = Valuation::budget_additive(rv(&[3, 3]), r(4));
    let q = ba.supporting_prices(&b(&[0, 1])).unwrap();
    assert_eq!((q.get(0), q.get(1)), (Some(r(3)), Some(r(1))));
    assert_eq!(q.total(), ba.value(&b(&[0, 1])).unwrap());

    let slack = Valuation::budget_additive(rv(&[1, 2]), r(5));
    assert_eq!(slack.to_xos(1).unwrap(), Valuation::xos(vec![rv(&[1, 2])]));
}

#[test]
fn to_xos_expansion_is_value_equivalent() {
    let ba = Valuation::budget_additive(rv(&[3, 1, 2, 2]), r(4));
    let xos = ba.to_xos(64).unwrap();
    for mask in 0..16u64 {
        let s = Bundle::from_mask(mask);
        assert_eq!(xos.value(&s).unwrap(), ba.value(&s).unwrap(), "bundle {s:?}");
    }
    assert!(matches!(ba.to_xos(2), Err(Error::Size(_))));
}

#[test]
fn json_schema() {
    let v: Valuation = serde_json::from_str(r#"{"kind":"budget_additive","weights":[1,"1/2"],"budget":1}"#).unwrap();
    assert_eq!(v, Valuation::budget_additive(vec![r(1), Rational::new(1, 2)], r(1)));
    let x: Valuation = serde_json::from_str(r#"{"kind":"xos","clauses":[[1,0],[0,1]]}"#).unwrap();
    assert_eq!(x.kind(), "xos");
    let s = serde_json::to_string(&Valuation::additive(rv(&[2]))).unwrap();
    assert_eq!(s, r#"{"kind":"additive","weights":[2]}"#);
}

// Strategies ---------------------------------------------------------------

fn small_rational() -> impl Strategy<Value = Rational> {
    (0i128..8, prop_oneof![Just(1i128), Just(2), Just(3)]).prop_map(|(n, d)| Rational::new(n, d))
}

fn valuation(m: usize) -> impl Strategy<Value = Valuation> {
    let w = move || proptest::collection::vec(small_rational(), m);
    prop_oneof![
        w().prop_map(Valuation::additive),
        (w(), 0i128..20).prop_map(|(w, b)| Valuation::budget_additive(w, Rational::new(b, 2))),
        proptest::collection::vec(proptest::collection::vec(small_rational(), m), 1..4).prop_map(Valuation::xos),
    ]
}

fn case() -> impl Strategy<Value = (Valuation, Vec<Rational>)> {
    (1usize..=8).prop_flat_map(|m| (valuation(m), proptest::collection::vec(small_rational(), m)))
}

fn subset_pair(m: usize) -> impl Strategy<Value = (Bundle, Bundle)> {
    let full = if m == 0 { 0 } else { (1u64 << m) - 1 };
    (0..=full, 0..=full).prop_map(|(a, b)| (Bundle::from_mask(a & b), Bundle::from_mask(a)))
}

proptest! {
    #[test]
    fn demand_matches_bruteforce((v, p) in case()) {
        prop_assert_eq!(v.demand(&p).unwrap(), demand_bruteforce(&v, &p).unwrap());
    }

    #[test]
    fn demand_profit_nonnegative((v, p) in case()) {
        let s = v.demand(&p).unwrap();
        prop_assert!(v.value(&s).unwrap() >= price_of(&p, &s));
    }

    #[test]
    fn monotone_and_normalized(
        (v, (s, t)) in (1usize..=8).prop_flat_map(|m| (valuation(m), subset_pair(m)))
    ) {
        prop_assert_eq!(v.value(&Bundle::empty()).unwrap(), Rational::zero());
        prop_assert!(s.is_subset(&t));
        prop_assert!(v.value(&s).unwrap() <= v.value(&t).unwrap());
    }

    #[test]
    fn supporting_prices_witness_fractional_subadditivity(
        (v, (t, s)) in (1usize..=8).prop_flat_map(|m| (valuation(m), subset_pair(m)))
    ) {
        let q = v.supporting_prices(&s).unwrap();
        prop_assert_eq!(q.total(), v.value(&s).unwrap());
        prop_assert!(q.iter().all(|(_, x)| !x.is_negative()));
        let on_t: Rational = t.iter().map(|j| q.get(j).unwrap()).sum();
        prop_assert!(on_t <= v.value(&t).unwrap());
    }

    #[test]
    fn xos_value_dominates_every_clause(
        (v, s) in (1usize..=6).prop_flat_map(|m| (
            proptest::collection::vec(proptest::collection::vec(small_rational(), m), 1..4),
            (0..1u64 << m).prop_map(Bundle::from_mask),
        ))
    ) {
        let x = Valuation::xos(v.clone());
        let value = x.value(&s).unwrap();
        let best = v.iter().map(|c| s.iter().map(|j| c[j]).sum::<Rational>()).max().unwrap();
        prop_assert_eq!(value, best);
    }

    #[test]
    fn zero_prices_additive_takes_positive_items(w in proptest::collection::vec(small_rational(), 1..10)) {
        let v = Valuation::additive(w.clone());
        let s = v.demand(&vec![Rational::zero(); w.len()]).unwrap();
        let expected: Bundle = (0..w.len()).filter(|&j| w[j].is_positive()).collect();
        prop_assert_eq!(s, expected);
    }
}
