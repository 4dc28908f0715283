use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use unipolar::compound::*;
use unipolar::measures::{entropy_a, Dist};
use unipolar::storage::{storage_set_exact, union_storage};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn binary_sandwich(t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let (p, q) = (Dist::bernoulli(t1).unwrap(), Dist::bernoulli(t2).unwrap());
        let mut prev = 0.0;
        for level in 0..=4 {
            let lo = compound_lower_bound(&p, &q, level).unwrap();
            let hi = compound_upper_bound_bec(&p, &q, level).unwrap();
            prop_assert!(lo <= hi + 1e-9, "level {}: {} > {}", level, lo, hi);
            prop_assert!(lo >= prev - 1e-9);
            prev = lo;
        }
    }

    #[test]
    fn ternary_lower_bound_grows(w in prop::collection::vec(0.01f64..1.0, 6)) {
        let norm = |v: &[f64]| {
            let s: f64 = v.iter().sum();
            Dist::new(v.iter().map(|x| x / s).collect()).unwrap()
        };
        let (p, q) = (norm(&w[..3]), norm(&w[3..]));
        let c = entropy_a(&p).max(entropy_a(&q));
        let mut prev = c;
        for level in 0..=3 {
            let lo = compound_lower_bound(&p, &q, level).unwrap();
            prop_assert!(lo >= prev - 1e-9);
            prev = lo;
        }
    }

    #[test]
    fn union_covers_the_lower_bound(t1 in 0.0f64..1.0, t2 in 0.0f64..1.0, d in 0.01f64..0.5) {
        let (p, q) = (Dist::bernoulli(t1).unwrap(), Dist::bernoulli(t2).unwrap());
        let sp = storage_set_exact(&p, 16, d).unwrap();
        let sq = storage_set_exact(&q, 16, d).unwrap();
        let u = union_storage(&[sp, sq]).unwrap();
        let lb = compound_lower_bound(&p, &q, 4).unwrap();
        prop_assert!(u.rate() >= lb - d - 1e-9);
    }
}

#[test]
fn level_zero_is_the_compound_capacity() {
    let (p, q) = counterexample_pair();
    assert_abs_diff_eq!(
        compound_lower_bound(&p, &q, 0).unwrap(),
        entropy_a(&p).max(entropy_a(&q)),
        epsilon = 1e-12
    );
}

#[test]
fn tree_children_average_to_parent() {
    let (p, _) = counterexample_pair();
    for level in 1..=3 {
        let t = synthesized_entropies(&p, level).unwrap();
        assert_abs_diff_eq!(t.mean(), entropy_a(&p), epsilon = 1e-9);
    }
}

#[test]
fn binary_pairs_never_exceed_capacity_at_level_one() {
    // Binary sources are totally ordered, so their trees are nested.
    for (a, b) in [(0.1, 0.3), (0.05, 0.45), (0.2, 0.8)] {
        let r = compound_report(&Dist::bernoulli(a).unwrap(), &Dist::bernoulli(b).unwrap(), 3).unwrap();
        assert!(!r.exceeds);
        assert!(r.upper_bound.is_some());
    }
}

#[test]
fn counterexample_exceeds_capacity() {
    let r = counterexample_report();
    assert!(r.lower_bound > r.c);
    assert!(r.upper_bound.is_none());
    let csv = r.to_csv("{}");
    assert_eq!(csv.lines().nth(1), Some("H_p,H_q,C,lower_bound_l1,exceeds_C"));
    assert!(csv.lines().nth(2).unwrap().ends_with(",true"));
}

#[test]
fn mismatched_alphabets_are_rejected() {
    let (p, _) = counterexample_pair();
    assert!(compound_lower_bound(&p, &Dist::bernoulli(0.1).unwrap(), 1).is_err());
}
