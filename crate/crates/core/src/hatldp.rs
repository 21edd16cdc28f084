//! Δ-parts, the constraint-free automaton Â, the translation `t ↦ t̂`, the
//! counter automaton B̂ and the large duplication property (LDP).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::field::Rational;
use crate::terms::{IndexedTree, Label, Position, RankedAlphabet, State, Symbol, Tree};
use crate::wta::{GrammarRule, WtaError, Wtg};
use crate::wtah::{ConstrainedRule, Target, Wtah, WtahError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HatError {
    #[error(transparent)]
    Wta(#[from] WtaError),
    #[error(transparent)]
    Wtah(#[from] WtahError),
    #[error("sink rules have no Δ-part")]
    SinkRule,
    #[error("automaton violates the Â preconditions: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Preconditions(Vec<HatDiagnostic>),
    #[error("`{0}` has no run to a non-sink state")]
    NoRun(Tree),
    #[error("`{0}` decomposes into Δ-parts in more than one way")]
    Ambiguous(Tree),
    #[error("`{0}` is not a symbol of the hat alphabet")]
    UnknownSymbol(String),
}

/// `ℓ̂` together with how the state positions of `ℓ` sit in it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeltaPart {
    /// `ℓ` with every state position overwritten by the sink.
    pub shape: Tree,
    /// Non-sink state positions of `ℓ`, lexicographically: the children of
    /// the hat symbol.
    pub leaders: Vec<Position>,
    /// Sink positions with the index of the leader they copy.
    pub copies: Vec<(Position, usize)>,
    /// Per leader: lies in a nontrivial constraint class.
    pub constrained: Vec<bool>,
}

impl DeltaPart {
    pub fn arity(&self) -> usize {
        self.leaders.len()
    }

    /// Name of the hat symbol: bare for a leaf shape, else `[shape]`.
    pub fn symbol(&self) -> Symbol {
        if self.shape.is_leaf() {
            Symbol::new(self.shape.to_string())
        } else {
            Symbol::new(format!("[{}]", self.shape))
        }
    }

    /// Length of the longest root path to a symbol node of the shape.
    pub fn symbol_depth(&self) -> usize {
        self.shape.positions_where(|l| matches!(l, Label::Sym(_))).iter().map(Position::len).max().unwrap_or(0)
    }

    /// `ℓ̂[t1, …, tk]` with copies filled from their leaders.
    pub fn fill(&self, leaders: &[Tree]) -> Result<Tree, crate::terms::TermError> {
        let mut t = self.shape.clone();
        for (p, tree) in self.leaders.iter().zip(leaders) {
            t = t.substitute(p, tree)?;
        }
        for (p, leader) in &self.copies {
            t = t.substitute(p, &leaders[*leader])?;
        }
        Ok(t)
    }
}

impl fmt::Display for DeltaPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^({})", self.symbol(), self.arity())
    }
}

/// Δ-part of a non-sink rule. Sink positions outside any class with a
/// leader are reported as copies of leader `usize::MAX`.
pub fn delta_part(rule: &ConstrainedRule) -> Result<DeltaPart, HatError> {
    if rule.target.is_bot() {
        return Err(HatError::SinkRule);
    }
    let positions = rule.state_positions();
    let labels = rule.state_labels();
    let leaders: Vec<Position> =
        positions.iter().zip(&labels).filter(|(_, l)| matches!(l, Label::State(_))).map(|(p, _)| p.clone()).collect();
    let mut copies = Vec::new();
    for (p, l) in positions.iter().zip(&labels) {
        if *l != Label::Bot {
            continue;
        }
        let leader = rule
            .class_of(p)
            .and_then(|class| class.iter().find_map(|m| leaders.iter().position(|x| x == m)))
            .unwrap_or(usize::MAX);
        copies.push((p.clone(), leader));
    }
    let constrained = leaders.iter().map(|p| rule.is_constrained(p)).collect();
    let shape = rule.lhs.replace_leaves(&mut |l| match l {
        Label::State(_) => Some(Tree::bot()),
        _ => None,
    });
    Ok(DeltaPart { shape, leaders, copies, constrained })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HatCondition {
    /// Equal Δ-parts must have equal constraint sets.
    ConstraintsUnique,
    /// Equal Δ-parts must place their non-sink positions alike.
    LeaderPlacement,
    /// Every sink position must copy a leader.
    TiedSink,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HatDiagnostic {
    pub condition: HatCondition,
    pub rules: Vec<usize>,
    pub message: String,
}

impl fmt::Display for HatDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rules: Vec<String> = self.rules.iter().map(usize::to_string).collect();
        write!(f, "{:?} (rules {}): {}", self.condition, rules.join(", "), self.message)
    }
}

/// Checks that Δ-parts determine constraints and leader placement.
pub fn validate_hat_preconditions(m: &Wtah) -> Vec<HatDiagnostic> {
    let mut diagnostics = Vec::new();
    let mut by_shape: BTreeMap<Tree, (usize, DeltaPart, Vec<Vec<Position>>)> = BTreeMap::new();
    for (i, rule) in m.non_sink_rules() {
        let part = delta_part(rule).expect("non-sink rule");
        if part.copies.iter().any(|(_, l)| *l == usize::MAX) {
            diagnostics.push(HatDiagnostic {
                condition: HatCondition::TiedSink,
                rules: vec![i],
                message: format!("`{rule}` has a sink position without a leading copy"),
            });
        }
        match by_shape.get(&part.shape) {
            None => {
                by_shape.insert(part.shape.clone(), (i, part, rule.constraints().to_vec()));
            }
            Some((j, first, constraints)) => {
                if constraints.as_slice() != rule.constraints() {
                    diagnostics.push(HatDiagnostic {
                        condition: HatCondition::ConstraintsUnique,
                        rules: vec![*j, i],
                        message: format!("Δ-part {} occurs with different constraint sets", part.symbol()),
                    });
                } else if first.leaders != part.leaders || first.copies != part.copies {
                    diagnostics.push(HatDiagnostic {
                        condition: HatCondition::LeaderPlacement,
                        rules: vec![*j, i],
                        message: format!("Δ-part {} occurs with different leader positions", part.symbol()),
                    });
                }
            }
        }
    }
    diagnostics
}

/// Â together with the Δ-part behind each of its symbols.
#[derive(Clone, Debug)]
pub struct HatAutomaton {
    pub wta: Wtg,
    pub parts: BTreeMap<Symbol, DeltaPart>,
    /// Largest height of a non-sink left-hand side of the source automaton.
    pub max_lhs_height: usize,
}

/// Builds Â; fails with diagnostics when the preconditions do not hold.
pub fn build_hat_wta(m: &Wtah) -> Result<HatAutomaton, HatError> {
    let diagnostics = validate_hat_preconditions(m);
    if !diagnostics.is_empty() {
        return Err(HatError::Preconditions(diagnostics));
    }
    let mut parts = BTreeMap::new();
    let mut alphabet = RankedAlphabet::new();
    let mut rules = Vec::new();
    let mut max_lhs_height = 0;
    for (_, rule) in m.non_sink_rules() {
        let part = delta_part(rule)?;
        let symbol = part.symbol();
        alphabet.insert(symbol.clone(), part.arity()).map_err(WtaError::from)?;
        let children: Vec<Tree> =
            rule.state_labels().into_iter().filter(|l| matches!(l, Label::State(_))).map(Tree::leaf).collect();
        let target = rule.target.as_state().expect("non-sink rule").clone();
        rules.push(GrammarRule::new(Tree::new(Label::Sym(symbol.clone()), children), target, rule.weight.clone()));
        max_lhs_height = max_lhs_height.max(rule.lhs.height());
        parts.insert(symbol, part);
    }
    let wta = Wtg::new(format!("{}_hat", m.name()), alphabet, m.states().to_vec(), rules, m.final_weights().clone())?
        .merged();
    Ok(HatAutomaton { wta, parts, max_lhs_height })
}

impl HatAutomaton {
    /// `N̂`: the number of states of Â.
    pub fn n_hat(&self) -> usize {
        self.wta.states().len()
    }

    /// `N = N̂ · max he(ℓ)`, at least 1.
    pub fn pumping_constant(&self) -> usize {
        (self.n_hat() * self.max_lhs_height.max(1)).max(1)
    }

    /// `t̂`; every run of `m` for `t` to a non-sink state must use the same
    /// Δ-part at the root.
    pub fn hat_tree(&self, m: &Wtah, t: &Tree) -> Result<Tree, HatError> {
        let indexed = IndexedTree::new(t);
        let reachable = run_table(m, &indexed);
        self.hat_at(m, &indexed, &reachable, indexed.root())
    }

    fn hat_at(
        &self,
        m: &Wtah,
        indexed: &IndexedTree<'_>,
        reachable: &[Vec<bool>],
        node: usize,
    ) -> Result<Tree, HatError> {
        let here = indexed.node(node).tree;
        let mut found: Option<(Symbol, Vec<usize>)> = None;
        let index = label_index(m);
        for (_, rule) in m.non_sink_rules() {
            let mut bindings = Vec::new();
            if !indexed.match_pattern(&rule.lhs, node, &mut bindings) || !holds(rule, indexed, &bindings) {
                continue;
            }
            let labels = rule.state_labels();
            if !bindings.iter().zip(&labels).all(|(&b, l)| reachable[b][index[l]]) {
                continue;
            }
            let part = delta_part(rule)?;
            let leaders: Vec<usize> =
                bindings.iter().zip(&labels).filter(|(_, l)| matches!(l, Label::State(_))).map(|(&b, _)| b).collect();
            let symbol = part.symbol();
            match &found {
                None => found = Some((symbol, leaders)),
                Some((s, _)) if *s == symbol => {}
                Some(_) => return Err(HatError::Ambiguous(here.clone())),
            }
        }
        let (symbol, leaders) = found.ok_or_else(|| HatError::NoRun(here.clone()))?;
        let children = leaders.iter().map(|&b| self.hat_at(m, indexed, reachable, b)).collect::<Result<Vec<_>, _>>()?;
        Ok(Tree::new(Label::Sym(symbol), children))
    }

    /// Inverse of [`Self::hat_tree`].
    pub fn unhat_tree(&self, hat: &Tree) -> Result<Tree, HatError> {
        let Label::Sym(symbol) = hat.label() else {
            return Err(HatError::UnknownSymbol(hat.label().to_string()));
        };
        let part = self.parts.get(symbol).ok_or_else(|| HatError::UnknownSymbol(symbol.to_string()))?;
        if part.arity() != hat.arity() {
            return Err(HatError::UnknownSymbol(symbol.to_string()));
        }
        let children = hat.children().iter().map(|c| self.unhat_tree(c)).collect::<Result<Vec<_>, _>>()?;
        part.fill(&children).map_err(|e| HatError::Wta(e.into()))
    }

    /// B̂: Â with a height counter in `0..=n` per state. A state `⟨q,c⟩`
    /// (printed `q#c`) is reached exactly by trees whose Δ-counterpart has
    /// height `min(he, n)`; constrained leaders need `c < n`.
    pub fn counter_wta(&self, n: usize) -> Result<Wtg, HatError> {
        let counter = |q: &State, c: usize| State::new(format!("{q}#{c}"));
        let mut states = Vec::new();
        for q in self.wta.states() {
            for c in 0..=n {
                states.push(counter(q, c));
            }
        }
        let mut rules = Vec::new();
        for rule in self.wta.rules() {
            let Label::Sym(symbol) = rule.lhs.label() else { continue };
            let part = &self.parts[symbol];
            let children = rule.child_states();
            let depth = part.symbol_depth();
            let mut counters = vec![0usize; children.len()];
            loop {
                let admissible = counters.iter().zip(&part.constrained).all(|(&c, &con)| !con || c < n);
                if admissible {
                    let mut height = depth;
                    for (c, p) in counters.iter().zip(&part.leaders) {
                        height = height.max(c + p.len());
                    }
                    for (p, leader) in &part.copies {
                        height = height.max(counters[*leader] + p.len());
                    }
                    let lhs = Tree::new(
                        Label::Sym(symbol.clone()),
                        children.iter().zip(&counters).map(|(q, &c)| Tree::leaf(Label::State(counter(q, c)))).collect(),
                    );
                    rules.push(GrammarRule::new(lhs, counter(&rule.target, height.min(n)), rule.weight.clone()));
                }
                // odometer over 0..=n per child
                let mut k = counters.len();
                loop {
                    if k == 0 {
                        break;
                    }
                    k -= 1;
                    counters[k] += 1;
                    if counters[k] <= n {
                        break;
                    }
                    counters[k] = 0;
                }
                if counters.iter().all(|&c| c == 0) {
                    break;
                }
            }
        }
        let mut finals = BTreeMap::new();
        for (q, w) in self.wta.final_weights() {
            for c in 0..=n {
                finals.insert(counter(q, c), w.clone());
            }
        }
        Ok(Wtg::new(format!("{}_counter", self.wta.name()), self.wta.alphabet().clone(), states, rules, finals)?)
    }
}

/// Label → row index of [`run_table`] (the sink is last).
fn label_index(m: &Wtah) -> HashMap<Label, usize> {
    let mut index: HashMap<Label, usize> =
        m.states().iter().enumerate().map(|(i, q)| (Label::State(q.clone()), i)).collect();
    index.insert(Label::Bot, m.states().len());
    index
}

fn holds(rule: &ConstrainedRule, indexed: &IndexedTree<'_>, bindings: &[usize]) -> bool {
    let positions = rule.state_positions();
    rule.constraints().iter().all(|class| {
        let ids: BTreeSet<usize> = class
            .iter()
            .map(|p| indexed.node(bindings[positions.iter().position(|x| x == p).expect("state position")]).class)
            .collect();
        ids.len() == 1
    })
}

/// `reachable[node][state]`: the subtree has some run to the state,
/// regardless of weights.
fn run_table(m: &Wtah, indexed: &IndexedTree<'_>) -> Vec<Vec<bool>> {
    let index = label_index(m);
    let n = m.states().len() + 1;
    let mut table: Vec<Vec<bool>> = Vec::with_capacity(indexed.len());
    for node in 0..indexed.len() {
        let mut row = vec![false; n];
        for rule in m.rules() {
            let mut bindings = Vec::new();
            if !indexed.match_pattern(&rule.lhs, node, &mut bindings) || !holds(rule, indexed, &bindings) {
                continue;
            }
            if bindings.iter().zip(rule.state_labels()).all(|(&b, l)| table[b][index[&l]]) {
                let target = match &rule.target {
                    Target::State(q) => index[&Label::State(q.clone())],
                    Target::Bot => n - 1,
                };
                row[target] = true;
            }
        }
        table.push(row);
    }
    table
}

/// Witness of the LDP.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LdpWitness {
    pub tree: Tree,
    /// Position of the rule application with the nontrivial constraint.
    pub rule_position: Position,
    /// Constrained position inside that rule's left-hand side.
    pub constrained_position: Position,
    /// `he(t|_{p·p'})`, at least `N`.
    pub subtree_height: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LdpReport {
    pub has_ldp: bool,
    pub witness: Option<LdpWitness>,
    pub pumping_constant: usize,
    pub n_hat: usize,
    /// Dimension found by the zeroness check of `Â − B̂`.
    pub dimension: usize,
    pub hat_rules: usize,
    pub counter_rules: usize,
}

/// Decides the LDP via zeroness of `⟦Â⟧ − ⟦B̂⟧`.
pub fn decide_ldp(m: &Wtah) -> Result<LdpReport, HatError> {
    let hat = build_hat_wta(m)?;
    let n = hat.pumping_constant();
    let counter = hat.counter_wta(n)?;
    let difference =
        Wtg::linear_combination("hat_minus_counter", &[(Rational::one(), &hat.wta), (-Rational::one(), &counter)])?;
    let zero = difference.is_zero()?;
    let mut report = LdpReport {
        has_ldp: false,
        witness: None,
        pumping_constant: n,
        n_hat: hat.n_hat(),
        dimension: zero.dimension,
        hat_rules: hat.wta.rules().len(),
        counter_rules: counter.rules().len(),
    };
    if let Some(hat_witness) = zero.witness {
        let tree = hat.unhat_tree(&hat_witness)?;
        report.has_ldp = true;
        report.witness = locate_duplication(&hat, &hat_witness, &tree, n);
    }
    Ok(report)
}

/// Length-lexicographically least `(p, p')` with `he(t|_{pp'}) ≥ n` and
/// `p'` in a nontrivial class of the Δ-part applied at `p`.
fn locate_duplication(hat: &HatAutomaton, hat_tree: &Tree, tree: &Tree, n: usize) -> Option<LdpWitness> {
    let mut candidates = Vec::new();
    let mut stack = vec![(hat_tree, Position::root())];
    while let Some((node, at)) = stack.pop() {
        let Label::Sym(symbol) = node.label() else { continue };
        let part = &hat.parts[symbol];
        let mut constrained: Vec<Position> =
            part.leaders.iter().zip(&part.constrained).filter(|(_, c)| **c).map(|(p, _)| p.clone()).collect();
        constrained.extend(part.copies.iter().map(|(p, _)| p.clone()));
        for p in constrained {
            let full = at.concat(&p);
            let height = tree.get(&full).map(Tree::height).unwrap_or(0);
            if height >= n {
                candidates.push((at.clone(), p, height));
            }
        }
        for (child, p) in node.children().iter().zip(&part.leaders) {
            stack.push((child, at.concat(p)));
        }
    }
    candidates.sort_by(|a, b| a.0.length_lex_cmp(&b.0).then_with(|| a.1.length_lex_cmp(&b.1)));
    candidates.into_iter().next().map(|(rule_position, constrained_position, subtree_height)| LdpWitness {
        tree: tree.clone(),
        rule_position,
        constrained_position,
        subtree_height,
    })
}

/// Checks the LDP witness conditions directly on `m`: support membership,
/// a nontrivial class at the rule position in every accepting run, and the
/// subtree height.
pub fn verify_ldp_witness(m: &Wtah, witness: &LdpWitness, n: usize, run_limit: usize) -> Result<bool, WtahError> {
    if m.evaluate(&witness.tree).is_zero() || witness.subtree_height < n {
        return Ok(false);
    }
    let full = witness.rule_position.concat(&witness.constrained_position);
    if witness.tree.get(&full).map(Tree::height) != Some(witness.subtree_height) {
        return Ok(false);
    }
    let runs = m.accepting_runs(&witness.tree, run_limit)?;
    let accepting: Vec<_> = runs.iter().filter(|r| !r.weight(m).is_zero()).collect();
    if accepting.is_empty() {
        return Ok(false);
    }
    Ok(accepting.iter().all(|run| {
        run.rule_positions(m).iter().any(|(rule, p)| {
            *p == witness.rule_position && m.rules()[*rule].is_constrained(&witness.constrained_position)
        })
    }))
}
