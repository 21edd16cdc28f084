//! Random inputs for the property tests.

use std::collections::BTreeMap;

use proptest::prelude::*;

use crate::field::Rational;
use crate::hom::Homomorphism;
use crate::terms::{Label, RankedAlphabet, State, Symbol, Tree};
use crate::wta::{GrammarRule, Wtg};

pub fn alphabet(pairs: &[(&str, usize)]) -> RankedAlphabet {
    RankedAlphabet::from_pairs(pairs.iter().copied()).unwrap()
}

/// `a:0, b:0, g:1, f:2`.
pub fn delta() -> RankedAlphabet {
    alphabet(&[("a", 0), ("b", 0), ("g", 1), ("f", 2)])
}

pub fn nonzero_rational() -> impl Strategy<Value = Rational> {
    (-3i64..=3, 1i64..=2).prop_filter("nonzero", |(n, _)| *n != 0).prop_map(|(n, d)| Rational::new(n, d).unwrap())
}

pub fn tree(alphabet: RankedAlphabet, max_height: usize) -> BoxedStrategy<Tree> {
    let leaves: Vec<Symbol> = alphabet.symbols_of_rank(0).cloned().collect();
    let leaf = proptest::sample::select(leaves).prop_map(|s| Tree::new(Label::Sym(s), vec![])).boxed();
    let inner: Vec<(Symbol, usize)> = alphabet.iter().filter(|(_, r)| *r > 0).map(|(s, r)| (s.clone(), r)).collect();
    if inner.is_empty() || max_height == 0 {
        return leaf;
    }
    leaf.prop_recursive(max_height as u32, 32, 3, move |sub| {
        let inner = inner.clone();
        proptest::sample::select(inner)
            .prop_flat_map(move |(s, r)| {
                proptest::collection::vec(sub.clone(), r).prop_map(move |cs| Tree::new(Label::Sym(s.clone()), cs))
            })
            .boxed()
    })
    .boxed()
}

fn states(n: usize) -> Vec<State> {
    (0..n).map(|i| State::new(format!("q{i}"))).collect()
}

/// A WTA over `alphabet` with up to `n` states and a random rule subset.
pub fn wta(alphabet: RankedAlphabet, n: usize) -> BoxedStrategy<Wtg> {
    let qs = states(n);
    let mut shapes: Vec<(Symbol, Vec<usize>, usize)> = Vec::new();
    for (s, rank) in alphabet.iter() {
        let mut children = vec![0usize; rank];
        loop {
            for target in 0..n {
                shapes.push((s.clone(), children.clone(), target));
            }
            let mut k = rank;
            let mut done = true;
            while k > 0 {
                k -= 1;
                children[k] += 1;
                if children[k] < n {
                    done = false;
                    break;
                }
                children[k] = 0;
            }
            if done {
                break;
            }
        }
    }
    let count = shapes.len();
    (
        proptest::collection::vec(proptest::option::weighted(0.4, nonzero_rational()), count),
        proptest::collection::vec(proptest::option::of(nonzero_rational()), n),
    )
        .prop_map(move |(weights, finals)| {
            let rules = shapes
                .iter()
                .zip(weights)
                .filter_map(|((s, cs, target), w)| {
                    let lhs = Tree::new(
                        Label::Sym(s.clone()),
                        cs.iter().map(|&c| Tree::leaf(Label::State(qs[c].clone()))).collect(),
                    );
                    w.map(|w| GrammarRule::new(lhs, qs[*target].clone(), w))
                })
                .collect();
            let finals: BTreeMap<State, Rational> =
                qs.iter().cloned().zip(finals).filter_map(|(q, w)| w.map(|w| (q, w))).collect();
            Wtg::new("G", alphabet.clone(), qs.clone(), rules, finals).unwrap()
        })
        .boxed()
}

/// A term over `alphabet` whose leaves may also be states `q0..q{n-1}`.
fn pattern(alphabet: RankedAlphabet, n: usize) -> BoxedStrategy<Tree> {
    let qs = states(n);
    let base = tree(alphabet, 2);
    (base, proptest::collection::vec((any::<bool>(), 0..n), 8))
        .prop_map(move |(t, picks)| {
            let mut i = 0;
            t.replace_leaves(&mut |_| {
                let (swap, q) = picks[i % picks.len()];
                i += 1;
                swap.then(|| Tree::leaf(Label::State(qs[q].clone())))
            })
        })
        .prop_filter("not a bare state", |t| !t.label().is_state_like())
        .boxed()
}

/// A WTG whose left-hand sides may span several symbols.
pub fn wtg(alphabet: RankedAlphabet, n: usize) -> BoxedStrategy<Wtg> {
    let qs = states(n);
    (
        proptest::collection::vec((pattern(alphabet.clone(), n), 0..n, nonzero_rational()), 1..8),
        proptest::collection::vec(proptest::option::of(nonzero_rational()), n),
    )
        .prop_map(move |(raw, finals)| {
            let rules = raw.into_iter().map(|(lhs, q, w)| GrammarRule::new(lhs, qs[q].clone(), w)).collect();
            let finals: BTreeMap<State, Rational> =
                qs.iter().cloned().zip(finals).filter_map(|(q, w)| w.map(|w| (q, w))).collect();
            Wtg::new("G", alphabet.clone(), qs.clone(), rules, finals).unwrap()
        })
        .boxed()
}

/// `alpha:0, beta:0, gamma:1, psi:2`.
pub fn sigma() -> RankedAlphabet {
    alphabet(&[("alpha", 0), ("beta", 0), ("gamma", 1), ("psi", 2)])
}

/// Image of a rank-`k` symbol: a tree over `delta()` of height at most 2
/// whose holes hold every variable `x1..xk` at least once.
fn image(k: usize) -> BoxedStrategy<Tree> {
    let mut with_hole = delta();
    with_hole.insert(Symbol::new("hole"), 0).unwrap();
    (tree(with_hole, 2), proptest::collection::vec(1..=k.max(1) as u32, 6))
        .prop_filter_map("too few holes", move |(t, extra)| {
            let holes = t.positions_where(|l| l == &Label::sym("hole")).len();
            if holes < k || (k == 0 && holes > 0) || t.label() == &Label::sym("hole") {
                return None;
            }
            let mut i = 0;
            Some(t.replace_leaves(&mut |l| {
                (l == &Label::sym("hole")).then(|| {
                    let var = if i < k { i as u32 + 1 } else { extra[i % extra.len()] };
                    i += 1;
                    Tree::var(var)
                })
            }))
        })
        .boxed()
}

/// A nondeleting, nonerasing homomorphism from `sigma()` to `delta()`.
pub fn hom() -> BoxedStrategy<Homomorphism> {
    let source = sigma();
    let ranks: Vec<(Symbol, usize)> = source.iter().map(|(s, r)| (s.clone(), r)).collect();
    let images: Vec<BoxedStrategy<Tree>> = ranks.iter().map(|(_, r)| image(*r)).collect();
    images
        .prop_map(move |imgs| {
            let images = ranks.iter().map(|(s, _)| s.clone()).zip(imgs).collect();
            Homomorphism::new("h", source.clone(), delta(), images).unwrap()
        })
        .boxed()
}
