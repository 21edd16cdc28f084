use proptest::prelude::*;

use super::*;
use crate::fixtures;
use crate::syntax::{parse_hom, parse_wtah, parse_wtg};
use crate::terms::enumerate_trees;
use crate::testgen;
use crate::wta::Wtg;

fn t(text: &str) -> Tree {
    Tree::parse(text).unwrap()
}

fn r(n: i64) -> Rational {
    Rational::from_integer(n)
}

fn bind<'t>(pattern: &Tree, t: &'t Tree, out: &mut Vec<(Position, Label, &'t Tree)>, at: Position) -> bool {
    if pattern.is_leaf() && pattern.label().is_state_like() {
        out.push((at, pattern.label().clone(), t));
        return true;
    }
    pattern.label() == t.label()
        && pattern.arity() == t.arity()
        && pattern.children().iter().zip(t.children()).enumerate().all(|(i, (p, c))| bind(p, c, out, at.child(i + 1)))
}

/// Weighted sum over rules by recursion, with constraints checked by
/// comparing subtrees.
fn oracle_state(m: &Wtah, t: &Tree, q: &Label) -> Rational {
    let mut total = Rational::zero();
    for rule in m.rules() {
        let target = match &rule.target {
            Target::State(s) => Label::State(s.clone()),
            Target::Bot => Label::Bot,
        };
        if &target != q {
            continue;
        }
        let mut leaves = Vec::new();
        if !bind(&rule.lhs, t, &mut leaves, Position::root()) {
            continue;
        }
        let subtree = |p: &Position| leaves.iter().find(|(x, _, _)| x == p).map(|(_, _, s)| *s).unwrap();
        if !rule.constraints().iter().all(|class| class.iter().all(|p| subtree(p) == subtree(&class[0]))) {
            continue;
        }
        let mut w = rule.weight.clone();
        for (_, label, sub) in &leaves {
            w *= oracle_state(m, sub, label);
        }
        total += w;
    }
    total
}

fn oracle(m: &Wtah, t: &Tree) -> Rational {
    m.final_weights().iter().map(|(q, f)| f * &oracle_state(m, t, &Label::State(q.clone()))).sum()
}

/// Some run exists, weights ignored.
fn reachable(m: &Wtah, t: &Tree, q: &Label) -> bool {
    m.rules().iter().any(|rule| {
        let target = match &rule.target {
            Target::State(s) => Label::State(s.clone()),
            Target::Bot => Label::Bot,
        };
        let mut leaves = Vec::new();
        &target == q
            && bind(&rule.lhs, t, &mut leaves, Position::root())
            && rule.constraints().iter().all(|class| {
                let sub = |p: &Position| leaves.iter().find(|(x, _, _)| x == p).map(|(_, _, s)| *s).unwrap();
                class.iter().all(|p| sub(p) == sub(&class[0]))
            })
            && leaves.iter().all(|(_, l, s)| reachable(m, s, l))
    })
}

#[test]
fn first_example_values() {
    let m = parse_wtah(fixtures::FIRST_EX_WTAH).unwrap();
    assert!(m.validate_eq_restricted().is_ok());
    let tree = t("f(a,g(a,a),g(a,a))");
    assert_eq!(m.evaluate(&tree), r(2));
    let runs = m.accepting_runs(&tree, 10).unwrap();
    assert_eq!(runs.len(), 1);
    assert!(runs[0].is_valid(&m));
    assert_eq!(runs[0].weight(&m), r(2));
    assert_eq!(runs[0].tree(&m), tree);
    // the constraint fails when the copies differ
    assert!(m.evaluate(&t("f(a,g(a,a),a)")).is_zero());
    assert_eq!(m.state_weight(&t("g(a,g(a,a))"), &Target::Bot), r(1));
}

#[test]
fn two_leader_class_is_not_eq_restricted() {
    let m = parse_wtah(fixtures::FIRST_EX_NOT_EQ_WTAH).unwrap();
    let validation = m.validate_eq_restricted();
    assert!(!validation.is_ok());
    assert!(validation.diagnostics.iter().any(|d| d.clause == Clause::SingleLeader && d.rule == Some(2)));
    let missing =
        parse_wtah("wtah M over Q { states q; final q; rule f(q) -> q; rule a -> q; rule a -> BOT; }").unwrap();
    let v = missing.validate_eq_restricted();
    assert!(v.diagnostics.iter().any(|d| d.clause == Clause::Sink && d.message.contains("f(BOT)")));
}

#[test]
fn cancellation_and_final_example() {
    let b = parse_wtah(fixtures::B_PRIME_WTAH).unwrap();
    let tree = t("f(a,g(a,a),g(a,a))");
    assert!(b.evaluate(&tree).is_zero());
    let weights: Vec<Rational> = b.accepting_runs(&tree, 10).unwrap().iter().map(|run| run.weight(&b)).collect();
    assert_eq!(weights.len(), 2);
    assert!(weights.contains(&r(2)) && weights.contains(&r(-2)));
    let f = parse_wtah(fixtures::FINAL_EXAMPLE_WTAH).unwrap();
    let chain = |n: usize| (0..n).fold(Tree::constant("a"), |t, _| Tree::sym("g", vec![t]));
    for i in 0..=3 {
        for j in 0..=3 {
            assert_eq!(f.evaluate(&Tree::sym("f", vec![chain(i), chain(j)])), r(3));
        }
    }
}

#[test]
fn image_of_fixture_is_first_example() {
    let a = parse_wtg(fixtures::HOM_IMAGE_WTA).unwrap();
    let h = parse_hom(fixtures::HOM_IMAGE_HOM).unwrap();
    let m = hom_image(&a, &h).unwrap();
    let expected = parse_wtah(fixtures::FIRST_EX_WTAH).unwrap();
    assert_eq!(m.sorted().rules(), expected.sorted().rules());
    assert_eq!(m.final_weights(), expected.final_weights());
    let rule = h_r_rule(&a.rules()[2], &h).unwrap();
    assert_eq!(rule.to_string(), "f(q,q,BOT) [2=3] -> qf @ 1");
    let annotated = hom_image_annotated(&a, &h).unwrap();
    assert!(annotated.alphabet().contains(&Symbol::new("<g,2>")));
}

#[test]
fn sub_fixtures_match_their_sources() {
    for (wta, hom, wtah) in [
        (fixtures::SUBSEQUENCE_WTA, fixtures::SUBSEQUENCE_HOM, fixtures::SUBSEQUENCE_WTAH),
        (fixtures::FIN_WTA, fixtures::FIN_HOM, fixtures::FIN_WTAH),
        (fixtures::B_WTA, fixtures::HOM_PHI_HOM, fixtures::B_PRIME_WTAH),
        (fixtures::C_WTA, fixtures::HOM_KAPPA_HOM, fixtures::C_PRIME_WTAH),
    ] {
        let m = hom_image(&parse_wtg(wta).unwrap(), &parse_hom(hom).unwrap()).unwrap();
        let expected = parse_wtah(wtah).unwrap();
        assert_eq!(m.sorted().rules(), expected.sorted().rules(), "{wtah}");
    }
}

#[test]
fn run_domain_of_small_fixture() {
    let m = parse_wtah(fixtures::FIN_WTAH).unwrap();
    let domain = m.run_domain(3).unwrap();
    let shown: Vec<String> = domain[&State::new("qf")].iter().map(ToString::to_string).collect();
    assert_eq!(shown, ["f(a,a)"]);
    assert_eq!(domain[&State::new("q")].len(), 1);
}

#[test]
fn bad_constraints_are_rejected() {
    let err = parse_wtah("wtah M over Q { states q; rule f(q, a) [1=2] -> q; }").unwrap_err();
    assert!(err.to_string().contains("constraint position 2"));
}

fn random_image() -> impl Strategy<Value = (Wtg, crate::hom::Homomorphism)> {
    (testgen::wta(testgen::sigma(), 2), testgen::hom())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn evaluation_matches_oracle((a, h) in random_image(), s in testgen::tree(testgen::sigma(), 2)) {
        let m = hom_image(&a, &h).unwrap();
        let tree = h.apply(&s).unwrap();
        prop_assert_eq!(m.evaluate(&tree), oracle(&m, &tree));
        let total: Rational = m.accepting_runs(&tree, 10_000).unwrap().iter()
            .map(|run| run.weight(&m) * m.final_weights()[run.target(&m).as_state().unwrap()].clone())
            .sum();
        prop_assert_eq!(total, m.evaluate(&tree));
    }

    #[test]
    fn image_is_eq_restricted_and_sums_preimages(
        (a, h) in random_image(),
        s in testgen::tree(testgen::sigma(), 2),
        other in testgen::tree(testgen::delta(), 3),
    ) {
        let m = hom_image(&a, &h).unwrap();
        prop_assert!(m.validate_eq_restricted().is_ok());
        for tree in [h.apply(&s).unwrap(), other] {
            let expected: Rational = h.preimages(&tree).unwrap().iter().map(|p| a.evaluate(p)).sum();
            prop_assert_eq!(m.evaluate(&tree), expected, "{}", tree);
        }
    }

    #[test]
    fn traced_runs_keep_weight((a, h) in random_image(), s in testgen::tree(testgen::sigma(), 2)) {
        let m = hom_image(&a, &h).unwrap();
        for q in a.states() {
            for run in a.runs(&s, q, 1000).unwrap() {
                match h_r_run(&a, &h, &m, &run) {
                    Ok(traced) => {
                        prop_assert!(traced.is_valid(&m));
                        prop_assert_eq!(traced.tree(&m), h.apply(&s).unwrap());
                        prop_assert_eq!(traced.weight(&m), run.weight(&a));
                        prop_assert_eq!(traced.target(&m), &Target::State(q.clone()));
                    }
                    // merged rules can cancel when distinct symbols share an image
                    Err(WtahError::CancelledRule(_)) => {}
                    Err(e) => prop_assert!(false, "{}", e),
                }
            }
        }
    }

    #[test]
    fn run_domain_is_exact((a, h) in random_image()) {
        let m = hom_image(&a, &h).unwrap();
        let domain = m.run_domain(2).unwrap();
        for tree in enumerate_trees(&testgen::delta(), 2) {
            for q in m.states() {
                let listed = domain.get(q).is_some_and(|set| set.contains(&tree));
                prop_assert_eq!(listed, reachable(&m, &tree, &Label::State(q.clone())), "{} {}", tree, q);
            }
        }
    }

    #[test]
    fn text_format_round_trips((a, h) in random_image()) {
        let m = hom_image(&a, &h).unwrap();
        let again = parse_wtah(&m.to_string()).unwrap();
        prop_assert_eq!(again.rules(), m.rules());
        prop_assert_eq!(again.final_weights(), m.final_weights());
    }
}
