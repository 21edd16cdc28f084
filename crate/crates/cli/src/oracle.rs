//! Brute-force check of a hom-image automaton against preimage sums.

use std::collections::{BTreeMap, BTreeSet};

use treehom_core::terms::{count_trees, enumerate_trees, tree_key};
use treehom_core::{Homomorphism, Rational, Tree, Wtah, Wtg};

use crate::CliError;

/// Largest number of trees enumerated exhaustively per height.
pub const FULL_ENUMERATION_LIMIT: u128 = 2_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub tree: Tree,
    pub automaton: Rational,
    pub preimage_sum: Rational,
}

#[derive(Clone, Debug)]
pub struct ImageOracle {
    pub max_height: usize,
    /// Every tree up to this height was enumerated.
    pub exhaustive_height: Option<usize>,
    pub exhaustive_trees: usize,
    /// Support trees of the source series up to `max_height`.
    pub source_support: usize,
    /// Trees with an accepting run in the image automaton.
    pub accepted_trees: usize,
    pub checked: usize,
    pub mismatch: Option<Mismatch>,
}

impl ImageOracle {
    pub fn passed(&self) -> bool {
        self.mismatch.is_none()
    }
}

/// Compares `m` with `t ↦ Σ_{h(s)=t} a(s)` on every tree of height at most
/// `max_height` over the target alphabet.
///
/// A tree outside `h(supp a)` and without an accepting run of `m` is zero on
/// both sides, and a preimage is never taller than its image, so only those
/// trees need checking once full enumeration gets too large. Each tree is
/// checked both against the source support grouped by image and against
/// the sum over `h.preimages`.
pub fn check_image(a: &Wtg, h: &Homomorphism, m: &Wtah, max_height: usize) -> Result<ImageOracle, CliError> {
    h.require_nondeleting_nonerasing()?;
    let mut grouped: BTreeMap<Tree, Rational> = BTreeMap::new();
    let support = a.enumerate_support(max_height);
    for (s, w) in &support {
        let t = h.apply(s)?;
        if t.height() <= max_height {
            *grouped.entry(t).or_insert_with(Rational::zero) += w.clone();
        }
    }
    let mut alphabet = h.target().clone();
    alphabet.merge(m.alphabet()).map_err(treehom_core::HomError::from)?;
    let exhaustive_height =
        (0..=max_height).take_while(|&k| count_trees(&alphabet, k) <= FULL_ENUMERATION_LIMIT).last();
    let mut domain: BTreeSet<Tree> = BTreeSet::new();
    let mut exhaustive_trees = 0;
    if let Some(k) = exhaustive_height {
        let all = enumerate_trees(&alphabet, k);
        exhaustive_trees = all.len();
        domain.extend(all);
    }
    let mut accepted = BTreeSet::new();
    if exhaustive_height != Some(max_height) {
        let runs = m.run_domain(max_height)?;
        for q in m.final_weights().keys() {
            if let Some(set) = runs.get(q) {
                accepted.extend(set.iter().cloned());
            }
        }
        domain.extend(accepted.iter().cloned());
    }
    domain.extend(grouped.keys().cloned());
    let mut ordered: Vec<Tree> = domain.into_iter().collect();
    ordered.sort_by(|x, y| tree_key(x).cmp(&tree_key(y)));
    let mut checked = 0;
    let mut mismatch = None;
    for t in ordered {
        checked += 1;
        let value = m.evaluate(&t);
        let by_source = grouped.get(&t).cloned().unwrap_or_else(Rational::zero);
        let by_preimages: Rational = h.preimages(&t)?.iter().map(|s| a.evaluate(s)).sum();
        if value != by_source || value != by_preimages {
            let preimage_sum = if value != by_source { by_source } else { by_preimages };
            mismatch = Some(Mismatch { tree: t, automaton: value, preimage_sum });
            break;
        }
    }
    Ok(ImageOracle {
        max_height,
        exhaustive_height,
        exhaustive_trees,
        source_support: support.len(),
        accepted_trees: accepted.len(),
        checked,
        mismatch,
    })
}
