//! Zeroness by forward closure of the span of reachable weight vectors.

use std::collections::BTreeMap;

use super::{WtaError, Wtg};
use crate::field::Rational;
use crate::terms::{for_each_tuple, tree_key, Label, Symbol, Tree};

/// Outcome of [`Wtg::is_zero`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZeroCheck {
    pub is_zero: bool,
    /// Minimal-height tree with nonzero value, when there is one.
    pub witness: Option<Tree>,
    /// Dimension of the span of `{(wt^q(t))_q | t ∈ T_Σ}`.
    pub dimension: usize,
}

/// Incrementally maintained reduced row echelon basis.
struct Echelon {
    rows: Vec<(usize, Vec<Rational>)>,
}

impl Echelon {
    fn new() -> Self {
        Echelon { rows: Vec::new() }
    }

    /// Inserts `v` if it is independent of the current rows.
    fn insert(&mut self, v: &[Rational]) -> bool {
        let mut r = v.to_vec();
        for (pivot, row) in &self.rows {
            if !r[*pivot].is_zero() {
                let c = r[*pivot].clone();
                for (x, y) in r.iter_mut().zip(row) {
                    if !y.is_zero() {
                        *x -= &c * y;
                    }
                }
            }
        }
        let Some(pivot) = r.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let scale = r[pivot].inv().expect("pivot is nonzero");
        for x in r.iter_mut() {
            *x *= &scale;
        }
        for (_, row) in self.rows.iter_mut() {
            if !row[pivot].is_zero() {
                let c = row[pivot].clone();
                for (x, y) in row.iter_mut().zip(&r) {
                    if !y.is_zero() {
                        *x -= &c * y;
                    }
                }
            }
        }
        self.rows.push((pivot, r));
        true
    }
}

struct FlatRule {
    target: usize,
    children: Vec<usize>,
    weight: Rational,
}

impl Wtg {
    /// Decides `⟦G⟧ = 0`. Requires a WTA.
    ///
    /// Candidate vectors are generated round by round (round `d` combines
    /// basis vectors of which at least one was added in round `d-1`) and
    /// inserted in `(height, size, term)` order of their representative trees,
    /// so representatives have minimal height and every vector in the span
    /// of all `wt(t)` is in the span of the basis.
    pub fn is_zero(&self) -> Result<ZeroCheck, WtaError> {
        if !self.is_wta() {
            return Err(WtaError::NotWta);
        }
        let index = self.state_index();
        let mut by_symbol: BTreeMap<(&Symbol, usize), Vec<FlatRule>> = BTreeMap::new();
        for rule in &self.rules {
            let Label::Sym(s) = rule.lhs.label() else { continue };
            by_symbol.entry((s, rule.lhs.arity())).or_default().push(FlatRule {
                target: index[&rule.target],
                children: rule.child_states().iter().map(|q| index[q]).collect(),
                weight: rule.weight.clone(),
            });
        }
        let n = self.states.len();
        let mut echelon = Echelon::new();
        let mut basis: Vec<(Tree, Vec<Rational>)> = Vec::new();
        let mut previous_round = 0..0;
        let mut round = 0usize;
        loop {
            let mut candidates: Vec<(Tree, Vec<Rational>)> = Vec::new();
            let indices: Vec<usize> = (0..basis.len()).collect();
            for ((symbol, rank), rules) in &by_symbol {
                if (*rank == 0) != (round == 0) {
                    continue;
                }
                for_each_tuple(&indices, *rank, &mut |tuple| {
                    if *rank > 0 && !tuple.iter().any(|i| previous_round.contains(i)) {
                        return;
                    }
                    let mut vector = vec![Rational::zero(); n];
                    for rule in rules {
                        let mut w = rule.weight.clone();
                        for (&i, &q) in tuple.iter().zip(&rule.children) {
                            if w.is_zero() {
                                break;
                            }
                            w *= &basis[i].1[q];
                        }
                        vector[rule.target] += w;
                    }
                    if vector.iter().any(|x| !x.is_zero()) {
                        let children = tuple.iter().map(|&i| basis[i].0.clone()).collect();
                        candidates.push((Tree::new(Label::Sym((*symbol).clone()), children), vector));
                    }
                });
            }
            candidates.sort_by(|a, b| tree_key(&a.0).cmp(&tree_key(&b.0)));
            let start = basis.len();
            for (tree, vector) in candidates {
                if echelon.insert(&vector) {
                    basis.push((tree, vector));
                }
            }
            if basis.len() == start {
                break;
            }
            previous_round = start..basis.len();
            round += 1;
        }
        let witness = basis.iter().find(|(_, v)| !self.pair_with_finals(v).is_zero()).map(|(t, _)| t.clone());
        Ok(ZeroCheck { is_zero: witness.is_none(), witness, dimension: basis.len() })
    }
}
