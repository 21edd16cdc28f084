//! Benchmark inputs.

use treehom_core::{fixtures, parse_hom, parse_wtah, parse_wtg, Homomorphism, Tree, Wtah, Wtg};

/// A source grammar paired with a homomorphism.
pub struct Pair {
    pub name: &'static str,
    pub wta: Wtg,
    pub hom: Homomorphism,
}

pub fn pairs() -> Vec<Pair> {
    [
        ("hom_image", fixtures::HOM_IMAGE_WTA, fixtures::HOM_IMAGE_HOM),
        ("relabel", fixtures::HOM_IMAGE_WTA, fixtures::RELABEL_HOM),
        ("subsequence", fixtures::SUBSEQUENCE_WTA, fixtures::SUBSEQUENCE_HOM),
        ("fin", fixtures::FIN_WTA, fixtures::FIN_HOM),
    ]
    .into_iter()
    .map(|(name, wta, hom)| Pair { name, wta: parse_wtg(wta).unwrap(), hom: parse_hom(hom).unwrap() })
    .collect()
}

pub fn first_example() -> Wtah {
    parse_wtah(fixtures::FIRST_EX_WTAH).unwrap()
}

/// `f(a, g(a,…), g(a,…))` with `n` nested `g` in each copy, accepted by
/// the first example automaton.
pub fn duplicated_chain(n: usize) -> Tree {
    let copy = (0..n).fold(Tree::constant("a"), |t, _| Tree::sym("g", vec![Tree::constant("a"), t]));
    Tree::sym("f", vec![Tree::constant("a"), copy.clone(), copy])
}
