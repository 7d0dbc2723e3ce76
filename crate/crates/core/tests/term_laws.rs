use proptest::prelude::*;

use magicforge::term::{generalize, normalized};
use magicforge::{parse_query, restrict, subsumes, unify, variant, Term, Var};

fn term(depth: u32) -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (0u64..4).prop_map(|v| Term::Var(Var(1_000_000 + v))),
        prop::sample::select(vec!["a", "b", "c"]).prop_map(Term::constant),
    ];
    leaf.prop_recursive(depth, 24, 3, |inner| {
        (prop::sample::select(vec!["f", "g"]), prop::collection::vec(inner, 1..3))
            .prop_map(|(f, args)| Term::app(f, args))
    })
}

proptest! {
    #[test]
    fn mgu_unifies(a in term(3), b in term(3)) {
        if let Some(s) = unify(&a, &b, true) {
            prop_assert_eq!(s.apply(&a), s.apply(&b));
        }
    }

    #[test]
    fn unification_is_symmetric(a in term(3), b in term(3)) {
        let ab = unify(&a, &b, true).map(|s| s.apply(&a));
        let ba = unify(&b, &a, true).map(|s| s.apply(&a));
        prop_assert_eq!(ab.is_some(), ba.is_some());
        if let (Some(x), Some(y)) = (ab, ba) {
            prop_assert!(variant(&x, &y));
        }
    }

    #[test]
    fn instances_are_subsumed(a in term(3), b in term(2)) {
        let bound = Var(1_000_000);
        let inst = a.map_vars(&mut |v| if v == bound { b.clone() } else { Term::Var(v) });
        if !b.occurs(bound) {
            prop_assert!(subsumes(&a, &inst));
            prop_assert!(unify(&a, &inst, true).is_some());
        }
    }

    #[test]
    fn subsumption_is_a_preorder(a in term(3), b in term(3), c in term(3)) {
        prop_assert!(subsumes(&a, &a));
        if subsumes(&a, &b) && subsumes(&b, &c) {
            prop_assert!(subsumes(&a, &c));
        }
        if subsumes(&a, &b) && subsumes(&b, &a) {
            prop_assert!(variant(&a, &b));
        }
    }

    #[test]
    fn restriction_generalizes(t in term(4), d in 1usize..4) {
        let r = restrict(&t, d);
        prop_assert!(subsumes(&r, &t));
        prop_assert!(r.depth() <= d);
        prop_assert!(variant(&restrict(&r, d), &r));
        if t.depth() < d {
            prop_assert!(variant(&r, &t));
        }
    }

    #[test]
    fn lgg_is_general(a in term(3), b in term(3)) {
        let g = generalize(&a, &b);
        prop_assert!(subsumes(&g, &a));
        prop_assert!(subsumes(&g, &b));
    }

    #[test]
    fn printing_round_trips(t in term(4)) {
        let t = Term::app("p", vec![t]);
        let back = parse_query(&normalized(&t)).unwrap();
        prop_assert!(variant(&back, &t));
    }
}
