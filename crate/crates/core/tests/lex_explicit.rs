//! Properties of the lexicographic cost order: agreement with explicit
//! rational evaluation below the root-free bound, and the ordered-group laws.

use catfair_core::arith::{rat, ratio, LexCost, Rational};
use num_bigint::BigInt;
use num_traits::Zero;
use proptest::prelude::*;

const D: usize = 8;
const COEFF_BOUND: i64 = 60;

fn lex_value(base: i64, coeffs: Vec<(u32, i64)>) -> LexCost {
    let mut v = LexCost::from_base(ratio(base, 7));
    for (rank, c) in coeffs {
        v = v + LexCost::epsilon(rank % D as u32).scale(&rat(c));
    }
    v
}

fn arb_cost() -> impl Strategy<Value = LexCost> {
    (
        -20i64..=20,
        proptest::collection::vec((0u32..D as u32, -COEFF_BOUND..=COEFF_BOUND), 0..D),
    )
        .prop_map(|(base, coeffs)| lex_value(base, coeffs))
}

/// ε_s = x^s for x below the polynomial root-free interval: with integer
/// coefficients bounded by θ and ρ = 1 scaled by the shared denominator,
/// signs at x agree with the lexicographic sign.
fn explicit_eps(d: usize) -> Vec<Rational> {
    // coefficients here are multiples of 1/7 with |numerator| ≤ 7*(20+D*60);
    // take θ comfortably above that and x = 1/(dθ+1) < ρ/(dθ).
    let theta: i64 = 7 * (20 + (D as i64) * COEFF_BOUND) + 1;
    let x = Rational::new(BigInt::from(1), BigInt::from(d as i64 * theta + 1));
    let mut eps = Vec::new();
    let mut cur = Rational::new(BigInt::from(1), BigInt::from(1));
    for _ in 0..d {
        cur *= &x;
        eps.push(cur.clone());
    }
    eps
}

proptest! {
    #[test]
    fn compare_agrees_with_explicit_evaluation(a in arb_cost(), b in arb_cost()) {
        let eps = explicit_eps(D);
        let diff = &a - &b;
        let value = diff.eval(&eps);
        let expected = if value.is_zero() {
            std::cmp::Ordering::Equal
        } else if value > Rational::zero() {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Less
        };
        prop_assert_eq!(a.cmp(&b), expected);
    }

    #[test]
    fn order_is_translation_invariant(a in arb_cost(), b in arb_cost(), c in arb_cost()) {
        let before = a.cmp(&b);
        let after = (&a + &c).cmp(&(&b + &c));
        prop_assert_eq!(before, after);
    }

    #[test]
    fn order_is_antisymmetric_and_consistent_with_sub(a in arb_cost(), b in arb_cost()) {
        let ab = a.cmp(&b);
        let ba = b.cmp(&a);
        prop_assert_eq!(ab, ba.reverse());
        prop_assert_eq!((&a - &b).sign(), ab);
    }

    #[test]
    fn order_is_transitive(a in arb_cost(), b in arb_cost(), c in arb_cost()) {
        let mut v = [a, b, c];
        v.sort();
        prop_assert!(v[0] <= v[1] && v[1] <= v[2] && v[0] <= v[2]);
    }

    #[test]
    fn addition_is_commutative_and_cancels(a in arb_cost(), b in arb_cost()) {
        prop_assert_eq!(&a + &b, &b + &a);
        let round_trip = (&a + &b) - b.clone();
        prop_assert_eq!(round_trip, a);
    }
}
