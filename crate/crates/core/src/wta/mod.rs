//! Weighted tree grammars and automata over the rationals.
//!
//! A [`Wtg`] has rules whose left-hand sides are arbitrary trees over the
//! alphabet with state leaves; it is a WTA when every left-hand side reads
//! exactly one symbol. Final states carry weights (weight 1 encodes an
//! ordinary final state) so that differences of series stay expressible.

mod transform;
mod zero;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::field::Rational;
use crate::terms::{for_each_tuple, tree_key, IndexedTree, Label, Position, RankedAlphabet, State, TermError, Tree};

pub use zero::ZeroCheck;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WtaError {
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("rule {rule}: weight must be nonzero")]
    ZeroWeight { rule: usize },
    #[error("rule {rule}: left-hand side is a bare state")]
    BareStateLhs { rule: usize },
    #[error("rule {rule}: label `{label}` is not allowed in a grammar left-hand side")]
    ForeignLabel { rule: usize, label: String },
    #[error("undeclared state `{0}`")]
    UnknownState(String),
    #[error("state `{0}` declared twice")]
    DuplicateState(String),
    #[error("operation requires a WTA (one symbol per left-hand side); call to_wta first")]
    NotWta,
    #[error("alphabets differ")]
    AlphabetMismatch,
    #[error("relabeling maps `{from}` (rank {from_rank}) to `{to}` (rank {to_rank})")]
    RankMismatch { from: String, from_rank: usize, to: String, to_rank: usize },
    #[error("run enumeration exceeded {0} runs")]
    TooManyRuns(usize),
}

/// `lhs ->_weight target`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct GrammarRule {
    pub lhs: Tree,
    pub target: State,
    pub weight: Rational,
}

impl GrammarRule {
    pub fn new(lhs: Tree, target: impl Into<State>, weight: Rational) -> Self {
        GrammarRule { lhs, target: target.into(), weight }
    }

    /// State leaves of the left-hand side in lexicographic order.
    pub fn child_states(&self) -> Vec<State> {
        let mut out = Vec::new();
        self.lhs.visit(&mut |t| {
            if let Label::State(q) = t.label() {
                out.push(q.clone());
            }
        });
        out
    }

    pub fn is_flat(&self) -> bool {
        self.lhs.children().iter().all(|c| matches!(c.label(), Label::State(_)))
    }
}

impl fmt::Display for GrammarRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} @ {}", self.lhs, self.target, self.weight)
    }
}

/// Weighted tree grammar; a WTA when [`Wtg::is_wta`] holds.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Wtg {
    name: String,
    alphabet: RankedAlphabet,
    states: Vec<State>,
    rules: Vec<GrammarRule>,
    final_weights: BTreeMap<State, Rational>,
}

impl Wtg {
    /// Validates and builds a grammar. Symbols used in rules are added to
    /// the alphabet; zero final weights are dropped.
    pub fn new(
        name: impl Into<String>,
        alphabet: RankedAlphabet,
        states: Vec<State>,
        rules: Vec<GrammarRule>,
        final_weights: BTreeMap<State, Rational>,
    ) -> Result<Self, WtaError> {
        let mut alphabet = alphabet;
        let mut seen = BTreeSet::new();
        for q in &states {
            if !seen.insert(q.clone()) {
                return Err(WtaError::DuplicateState(q.to_string()));
            }
        }
        for (i, rule) in rules.iter().enumerate() {
            if rule.weight.is_zero() {
                return Err(WtaError::ZeroWeight { rule: i });
            }
            if matches!(rule.lhs.label(), Label::State(_)) {
                return Err(WtaError::BareStateLhs { rule: i });
            }
            if !seen.contains(&rule.target) {
                return Err(WtaError::UnknownState(rule.target.to_string()));
            }
            let mut problem = None;
            rule.lhs.visit(&mut |t| match t.label() {
                Label::Sym(_) => {}
                Label::State(q) if t.is_leaf() => {
                    if !seen.contains(q) && problem.is_none() {
                        problem = Some(WtaError::UnknownState(q.to_string()));
                    }
                }
                other => {
                    if problem.is_none() {
                        problem = Some(WtaError::ForeignLabel { rule: i, label: other.to_string() });
                    }
                }
            });
            if let Some(p) = problem {
                return Err(p);
            }
            alphabet.merge(&rule.lhs.symbol_alphabet()?)?;
            rule.lhs.check_ranked(&alphabet)?;
        }
        let mut finals = BTreeMap::new();
        for (q, w) in final_weights {
            if !seen.contains(&q) {
                return Err(WtaError::UnknownState(q.to_string()));
            }
            if !w.is_zero() {
                finals.insert(q, w);
            }
        }
        Ok(Wtg { name: name.into(), alphabet, states, rules, final_weights: finals })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn alphabet(&self) -> &RankedAlphabet {
        &self.alphabet
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn rules(&self) -> &[GrammarRule] {
        &self.rules
    }

    pub fn final_weights(&self) -> &BTreeMap<State, Rational> {
        &self.final_weights
    }

    pub fn final_weight(&self, q: &State) -> Rational {
        self.final_weights.get(q).cloned().unwrap_or_else(Rational::zero)
    }

    /// Every left-hand side reads exactly one symbol.
    pub fn is_wta(&self) -> bool {
        self.rules.iter().all(GrammarRule::is_flat)
    }

    pub(crate) fn state_index(&self) -> HashMap<&State, usize> {
        self.states.iter().enumerate().map(|(i, q)| (q, i)).collect()
    }

    fn compile(&self) -> Compiled<'_> {
        let index = self.state_index();
        let mut by_root: HashMap<&Label, Vec<CompiledRule<'_>>> = HashMap::new();
        for rule in &self.rules {
            let children = rule.child_states().iter().map(|q| index[q]).collect();
            by_root.entry(rule.lhs.label()).or_default().push(CompiledRule {
                lhs: &rule.lhs,
                target: index[&rule.target],
                children,
                weight: &rule.weight,
            });
        }
        Compiled { by_root }
    }

    /// `wt^q(t')` for every state `q` and every subtree `t'` of `t`, indexed
    /// by the postorder node index of `t`.
    fn weight_table(&self, indexed: &IndexedTree<'_>) -> Vec<Vec<Rational>> {
        let compiled = self.compile();
        let n = self.states.len();
        let mut table: Vec<Vec<Rational>> = Vec::with_capacity(indexed.len());
        let mut bindings = Vec::new();
        for node in 0..indexed.len() {
            let mut row = vec![Rational::zero(); n];
            if let Some(rules) = compiled.by_root.get(indexed.node(node).tree.label()) {
                for rule in rules {
                    bindings.clear();
                    if !indexed.match_pattern(rule.lhs, node, &mut bindings) {
                        continue;
                    }
                    let mut w = rule.weight.clone();
                    for (&bound, &q) in bindings.iter().zip(&rule.children) {
                        let child = &table[bound][q];
                        if child.is_zero() {
                            w = Rational::zero();
                            break;
                        }
                        w *= child;
                    }
                    if !w.is_zero() {
                        row[rule.target] += w;
                    }
                }
            }
            table.push(row);
        }
        table
    }

    /// `(wt^q(t))_q` in state order.
    pub fn state_weights(&self, t: &Tree) -> Vec<Rational> {
        let indexed = IndexedTree::new(t);
        let mut table = self.weight_table(&indexed);
        table.swap_remove(indexed.root())
    }

    /// `wt^q(t)`: sum over all runs for `t` to `q`. Zero for unknown states.
    pub fn state_weight(&self, t: &Tree, q: &State) -> Rational {
        match self.states.iter().position(|s| s == q) {
            Some(i) => self.state_weights(t).swap_remove(i),
            None => Rational::zero(),
        }
    }

    /// `⟦G⟧(t) = Σ_q final(q)·wt^q(t)`.
    pub fn evaluate(&self, t: &Tree) -> Rational {
        if self.final_weights.is_empty() {
            return Rational::zero();
        }
        let weights = self.state_weights(t);
        self.pair_with_finals(&weights)
    }

    pub(crate) fn pair_with_finals(&self, weights: &[Rational]) -> Rational {
        self.states.iter().zip(weights).filter_map(|(q, w)| self.final_weights.get(q).map(|f| f * w)).sum()
    }

    /// Explicit runs for `t` to `q`; fails once more than `limit` are found.
    pub fn runs(&self, t: &Tree, q: &State, limit: usize) -> Result<Vec<Run>, WtaError> {
        let indexed = IndexedTree::new(t);
        let Some(target) = self.states.iter().position(|s| s == q) else {
            return Ok(Vec::new());
        };
        let compiled = self.compile();
        let mut memo: HashMap<(usize, usize), Vec<Run>> = HashMap::new();
        self.runs_at(&indexed, &compiled, indexed.root(), target, limit, &mut memo)
    }

    fn runs_at(
        &self,
        indexed: &IndexedTree<'_>,
        compiled: &Compiled<'_>,
        node: usize,
        target: usize,
        limit: usize,
        memo: &mut HashMap<(usize, usize), Vec<Run>>,
    ) -> Result<Vec<Run>, WtaError> {
        if let Some(found) = memo.get(&(node, target)) {
            return Ok(found.clone());
        }
        let mut out = Vec::new();
        if let Some(rules) = compiled.by_root.get(indexed.node(node).tree.label()) {
            for rule in rules.iter().filter(|r| r.target == target) {
                let mut bindings = Vec::new();
                if !indexed.match_pattern(rule.lhs, node, &mut bindings) {
                    continue;
                }
                let rule_index = self
                    .rules
                    .iter()
                    .position(|r| std::ptr::eq(&r.lhs, rule.lhs))
                    .expect("compiled rule belongs to grammar");
                let mut partial: Vec<Vec<Run>> = vec![Vec::new()];
                for (&bound, &q) in bindings.iter().zip(&rule.children) {
                    let sub = self.runs_at(indexed, compiled, bound, q, limit, memo)?;
                    let mut next = Vec::new();
                    for prefix in &partial {
                        for run in &sub {
                            let mut p = prefix.clone();
                            p.push(run.clone());
                            next.push(p);
                            if next.len() > limit {
                                return Err(WtaError::TooManyRuns(limit));
                            }
                        }
                    }
                    partial = next;
                }
                for children in partial {
                    out.push(Run { rule: rule_index, children });
                    if out.len() > limit {
                        return Err(WtaError::TooManyRuns(limit));
                    }
                }
            }
        }
        memo.insert((node, target), out.clone());
        Ok(out)
    }

    /// All trees of height at most `max_height` with nonzero value, sorted
    /// by height, size and term order.
    pub fn enumerate_support(&self, max_height: usize) -> Vec<(Tree, Rational)> {
        let flat = self.to_wta();
        let mut support: Vec<(Tree, Rational)> = flat
            .live_trees(max_height)
            .into_iter()
            .filter_map(|(t, v)| {
                let value = flat.pair_with_finals(&v);
                (!value.is_zero()).then_some((t, value))
            })
            .collect();
        support.sort_by(|a, b| tree_key(&a.0).cmp(&tree_key(&b.0)));
        support
    }

    /// Trees of height at most `max_height` whose state vector is nonzero,
    /// with that vector. Requires a WTA: a tree whose vector vanishes cannot
    /// contribute to any larger tree.
    pub(crate) fn live_trees(&self, max_height: usize) -> Vec<(Tree, Vec<Rational>)> {
        debug_assert!(self.is_wta());
        let mut by_symbol: BTreeMap<(&crate::terms::Symbol, usize), Vec<CompiledFlat>> = BTreeMap::new();
        let index = self.state_index();
        for rule in &self.rules {
            let Label::Sym(s) = rule.lhs.label() else { continue };
            by_symbol.entry((s, rule.lhs.arity())).or_default().push(CompiledFlat {
                target: index[&rule.target],
                children: rule.child_states().iter().map(|q| index[q]).collect(),
                weight: rule.weight.clone(),
            });
        }
        let n = self.states.len();
        let mut all: Vec<(Tree, Vec<Rational>)> = Vec::new();
        for h in 0..=max_height {
            let mut level = Vec::new();
            for ((symbol, rank), rules) in &by_symbol {
                if (*rank == 0) != (h == 0) {
                    continue;
                }
                let indices: Vec<usize> = (0..all.len()).collect();
                for_each_tuple(&indices, *rank, &mut |tuple| {
                    if *rank > 0 && !tuple.iter().any(|&i| all[i].0.height() + 1 == h) {
                        return;
                    }
                    let mut vector = vec![Rational::zero(); n];
                    for rule in rules {
                        let mut w = rule.weight.clone();
                        for (&i, &q) in tuple.iter().zip(&rule.children) {
                            w *= &all[i].1[q];
                            if w.is_zero() {
                                break;
                            }
                        }
                        vector[rule.target] += w;
                    }
                    if vector.iter().any(|x| !x.is_zero()) {
                        let children = tuple.iter().map(|&i| all[i].0.clone()).collect();
                        level.push((Tree::new(Label::Sym((*symbol).clone()), children), vector));
                    }
                });
            }
            all.extend(level);
        }
        all
    }
}

struct CompiledRule<'a> {
    lhs: &'a Tree,
    target: usize,
    children: Vec<usize>,
    weight: &'a Rational,
}

struct Compiled<'a> {
    by_root: HashMap<&'a Label, Vec<CompiledRule<'a>>>,
}

struct CompiledFlat {
    target: usize,
    children: Vec<usize>,
    weight: Rational,
}

/// A run as a tree of rule applications: `children[i]` is the run for the
/// subtree at the `i`-th state leaf (lexicographic) of the rule's lhs.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Run {
    pub rule: usize,
    pub children: Vec<Run>,
}

impl Run {
    pub fn target<'g>(&self, g: &'g Wtg) -> &'g State {
        &g.rules[self.rule].target
    }

    pub fn weight(&self, g: &Wtg) -> Rational {
        let own = g.rules[self.rule].weight.clone();
        self.children.iter().fold(own, |acc, c| acc * c.weight(g))
    }

    /// The tree this run processes.
    pub fn tree(&self, g: &Wtg) -> Tree {
        let mut next = self.children.iter();
        g.rules[self.rule].lhs.replace_leaves(&mut |label| match label {
            Label::State(_) => next.next().map(|c| c.tree(g)),
            _ => None,
        })
    }

    /// Checks that child targets match the rule's state leaves.
    pub fn is_consistent(&self, g: &Wtg) -> bool {
        let rule = &g.rules[self.rule];
        let states = rule.child_states();
        states.len() == self.children.len()
            && states.iter().zip(&self.children).all(|(q, c)| c.target(g) == q && c.is_consistent(g))
    }

    /// `(rule, position)` pairs, positions ordered lexicographically except
    /// that a prefix comes after its extensions (the root is last).
    pub fn listing(&self, g: &Wtg) -> Vec<(usize, Position)> {
        let mut out = Vec::new();
        self.collect_listing(g, &Position::root(), &mut out);
        out.sort_by(|a, b| listing_order(&a.1, &b.1));
        out
    }

    fn collect_listing(&self, g: &Wtg, at: &Position, out: &mut Vec<(usize, Position)>) {
        out.push((self.rule, at.clone()));
        let leaves = g.rules[self.rule].lhs.positions_where(|l| matches!(l, Label::State(_)));
        for (child, p) in self.children.iter().zip(leaves) {
            child.collect_listing(g, &at.concat(&p), out);
        }
    }
}

/// Lexicographic, except prefixes are larger.
pub fn listing_order(a: &Position, b: &Position) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    if a == b {
        Ordering::Equal
    } else if a.is_prefix_of(b) {
        Ordering::Greater
    } else if b.is_prefix_of(a) {
        Ordering::Less
    } else {
        a.cmp(b)
    }
}

impl fmt::Display for Wtg {
    /// Block file format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "wtg {} over Q {{", self.name)?;
        let symbols: Vec<String> = self.alphabet.iter().map(|(s, r)| format!("{s}:{r}")).collect();
        if !symbols.is_empty() {
            writeln!(f, "  alphabet {};", symbols.join(", "))?;
        }
        let states: Vec<String> = self.states.iter().map(State::to_string).collect();
        if !states.is_empty() {
            writeln!(f, "  states {};", states.join(", "))?;
        }
        if !self.final_weights.is_empty() {
            let finals: Vec<String> = self.final_weights.iter().map(|(q, w)| format!("{q}: {w}")).collect();
            writeln!(f, "  final {};", finals.join(", "))?;
        }
        for rule in &self.rules {
            writeln!(f, "  rule {rule};")?;
        }
        write!(f, "}}")
    }
}
