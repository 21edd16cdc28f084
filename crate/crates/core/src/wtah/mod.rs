//! Weighted tree automata with hom-constraints (WTAh).
//!
//! Rules carry an equivalence relation on their state positions; a rule
//! applies only when all positions of a class carry equal subtrees. The sink
//! state is the reserved [`Label::Bot`] and never appears among the ordinary
//! states.

mod image;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::field::Rational;
use crate::hom::HomError;
use crate::terms::{IndexedTree, Label, Position, RankedAlphabet, State, Symbol, TermError, Tree, BOT};
use crate::wta::WtaError;

pub use image::{bot_run, h_r_rule, h_r_run, hom_image, hom_image_annotated};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WtahError {
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Wta(#[from] WtaError),
    #[error(transparent)]
    Hom(#[from] HomError),
    #[error("rule {rule}: weight must be nonzero")]
    ZeroWeight { rule: usize },
    #[error("rule {rule}: left-hand side is a bare state")]
    BareStateLhs { rule: usize },
    #[error("rule {rule}: label `{label}` is not allowed in a left-hand side")]
    ForeignLabel { rule: usize, label: String },
    #[error("undeclared state `{0}`")]
    UnknownState(String),
    #[error("state `{0}` declared twice")]
    DuplicateState(String),
    #[error("constraint position {position} is not a state position of `{lhs}`")]
    BadConstraint { position: Position, lhs: String },
    #[error("symbol `{0}` has no image under the homomorphism")]
    MissingImage(String),
    #[error("symbol `{symbol}` has rank {wta} in the automaton but rank {hom} under the homomorphism")]
    RankMismatch { symbol: String, wta: usize, hom: usize },
    #[error("run enumeration exceeded {0} runs")]
    TooManyRuns(usize),
    #[error("rule {rule}: sink position {position} is not tied to a leading copy")]
    UntiedSink { rule: usize, position: Position },
    #[error("image of rule {0} was cancelled while merging")]
    CancelledRule(usize),
    #[error("no sink rule for symbol `{0}`")]
    MissingSinkRule(String),
}

/// Target of a constrained rule.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Target {
    State(State),
    Bot,
}

impl Target {
    pub fn as_state(&self) -> Option<&State> {
        match self {
            Target::State(q) => Some(q),
            Target::Bot => None,
        }
    }

    pub fn is_bot(&self) -> bool {
        matches!(self, Target::Bot)
    }
}

impl From<State> for Target {
    fn from(q: State) -> Self {
        Target::State(q)
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::State(q) => write!(f, "{q}"),
            Target::Bot => f.write_str(BOT),
        }
    }
}

/// `lhs --E-->_weight target` with `E` stored as its nontrivial classes,
/// each sorted, classes sorted.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ConstrainedRule {
    pub lhs: Tree,
    pub target: Target,
    constraints: Vec<Vec<Position>>,
    pub weight: Rational,
}

impl ConstrainedRule {
    /// Builds a rule; `classes` may overlap and are closed into an
    /// equivalence. Every position must be a state or sink leaf of `lhs`.
    pub fn new(lhs: Tree, target: Target, classes: Vec<Vec<Position>>, weight: Rational) -> Result<Self, WtahError> {
        for p in classes.iter().flatten() {
            match lhs.get(p) {
                Some(t) if t.is_leaf() && t.label().is_state_like() => {}
                _ => return Err(WtahError::BadConstraint { position: p.clone(), lhs: lhs.to_string() }),
            }
        }
        Ok(ConstrainedRule { lhs, target, constraints: canonical_partition(classes), weight })
    }

    pub fn unconstrained(lhs: Tree, target: Target, weight: Rational) -> Self {
        ConstrainedRule { lhs, target, constraints: Vec::new(), weight }
    }

    pub fn constraints(&self) -> &[Vec<Position>] {
        &self.constraints
    }

    pub fn has_constraints(&self) -> bool {
        !self.constraints.is_empty()
    }

    /// `pos_Q(ℓ)` including sink positions, lexicographically.
    pub fn state_positions(&self) -> Vec<Position> {
        self.lhs.positions_where(Label::is_state_like)
    }

    /// Labels at [`Self::state_positions`].
    pub fn state_labels(&self) -> Vec<Label> {
        let mut out = Vec::new();
        self.lhs.visit(&mut |t| {
            if t.label().is_state_like() {
                out.push(t.label().clone());
            }
        });
        out
    }

    /// Nontrivial class containing `p`.
    pub fn class_of(&self, p: &Position) -> Option<&[Position]> {
        self.constraints.iter().find(|c| c.contains(p)).map(Vec::as_slice)
    }

    pub fn is_constrained(&self, p: &Position) -> bool {
        self.class_of(p).is_some()
    }

    fn with_lhs(&self, lhs: Tree) -> Self {
        ConstrainedRule { lhs, ..self.clone() }
    }
}

impl fmt::Display for ConstrainedRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.lhs)?;
        if !self.constraints.is_empty() {
            let classes: Vec<String> = self
                .constraints
                .iter()
                .map(|c| c.iter().map(Position::to_string).collect::<Vec<_>>().join("="))
                .collect();
            write!(f, " [{}]", classes.join(", "))?;
        }
        write!(f, " -> {} @ {}", self.target, self.weight)
    }
}

/// Union of possibly overlapping classes, dropping singletons.
pub(crate) fn canonical_partition(classes: Vec<Vec<Position>>) -> Vec<Vec<Position>> {
    let mut merged: Vec<BTreeSet<Position>> = Vec::new();
    for class in classes {
        let mut current: BTreeSet<Position> = class.into_iter().collect();
        let mut rest = Vec::new();
        for existing in merged {
            if existing.is_disjoint(&current) {
                rest.push(existing);
            } else {
                current.extend(existing);
            }
        }
        rest.push(current);
        merged = rest;
    }
    let mut out: Vec<Vec<Position>> =
        merged.into_iter().filter(|c| c.len() > 1).map(|c| c.into_iter().collect()).collect();
    out.sort();
    out
}

/// Which clause of the eq-restriction a diagnostic refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Clause {
    /// Sink rules: `δ(⊥,…,⊥) →₁ ⊥` for every symbol and nothing else targets `⊥`.
    Sink,
    /// Per class, the set of non-sink states is a singleton.
    SingleState,
    /// Per class, exactly one position carries a non-sink state.
    SingleLeader,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Clause::Sink => "(i)",
            Clause::SingleState => "(ii).1",
            Clause::SingleLeader => "(ii).2",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub clause: Clause,
    pub rule: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rule {
            Some(r) => write!(f, "clause {}, rule {}: {}", self.clause, r, self.message),
            None => write!(f, "clause {}: {}", self.clause, self.message),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Validation {
    pub diagnostics: Vec<Diagnostic>,
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

/// Weighted tree automaton with hom-constraints over `Q ∪ {⊥}`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Wtah {
    name: String,
    alphabet: RankedAlphabet,
    states: Vec<State>,
    final_weights: BTreeMap<State, Rational>,
    rules: Vec<ConstrainedRule>,
}

impl Wtah {
    pub fn new(
        name: impl Into<String>,
        alphabet: RankedAlphabet,
        states: Vec<State>,
        final_weights: BTreeMap<State, Rational>,
        rules: Vec<ConstrainedRule>,
    ) -> Result<Self, WtahError> {
        let mut alphabet = alphabet;
        let mut seen = BTreeSet::new();
        for q in &states {
            if !seen.insert(q.clone()) {
                return Err(WtahError::DuplicateState(q.to_string()));
            }
        }
        for (i, rule) in rules.iter().enumerate() {
            if rule.weight.is_zero() {
                return Err(WtahError::ZeroWeight { rule: i });
            }
            if rule.lhs.label().is_state_like() {
                return Err(WtahError::BareStateLhs { rule: i });
            }
            if let Target::State(q) = &rule.target {
                if !seen.contains(q) {
                    return Err(WtahError::UnknownState(q.to_string()));
                }
            }
            let mut problem = None;
            rule.lhs.visit(&mut |t| match t.label() {
                Label::Sym(_) => {}
                Label::Bot if t.is_leaf() => {}
                Label::State(q) if t.is_leaf() => {
                    if !seen.contains(q) {
                        problem.get_or_insert(WtahError::UnknownState(q.to_string()));
                    }
                }
                other => {
                    problem.get_or_insert(WtahError::ForeignLabel { rule: i, label: other.to_string() });
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
                return Err(WtahError::UnknownState(q.to_string()));
            }
            if !w.is_zero() {
                finals.insert(q, w);
            }
        }
        Ok(Wtah { name: name.into(), alphabet, states, final_weights: finals, rules })
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

    /// Ordinary states; the sink is implicit.
    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn final_weights(&self) -> &BTreeMap<State, Rational> {
        &self.final_weights
    }

    pub fn rules(&self) -> &[ConstrainedRule] {
        &self.rules
    }

    /// Rules not targeting the sink.
    pub fn non_sink_rules(&self) -> impl Iterator<Item = (usize, &ConstrainedRule)> + '_ {
        self.rules.iter().enumerate().filter(|(_, r)| !r.target.is_bot())
    }

    pub fn is_constraint_free(&self) -> bool {
        self.rules.iter().all(|r| !r.has_constraints())
    }

    /// Checks the eq-restriction clause by clause.
    pub fn validate_eq_restricted(&self) -> Validation {
        let mut diagnostics = Vec::new();
        for (symbol, rank) in self.alphabet.iter() {
            let sink_lhs = Tree::new(Label::Sym(symbol.clone()), vec![Tree::bot(); rank]);
            let found = self
                .rules
                .iter()
                .any(|r| r.target.is_bot() && r.lhs == sink_lhs && r.weight.is_one() && !r.has_constraints());
            if !found {
                diagnostics.push(Diagnostic {
                    clause: Clause::Sink,
                    rule: None,
                    message: format!("missing sink rule {sink_lhs} -> BOT @ 1"),
                });
            }
        }
        for (i, rule) in self.rules.iter().enumerate() {
            if rule.target.is_bot() {
                let is_sink = rule.lhs.children().iter().all(|c| c.label() == &Label::Bot)
                    && rule.weight.is_one()
                    && !rule.has_constraints();
                if !is_sink {
                    diagnostics.push(Diagnostic {
                        clause: Clause::Sink,
                        rule: Some(i),
                        message: format!("`{rule}` targets BOT but is not a sink rule"),
                    });
                }
                continue;
            }
            let positions = rule.state_positions();
            let labels = rule.state_labels();
            let mut classes: Vec<Vec<Position>> = rule.constraints.clone();
            for p in &positions {
                if !rule.is_constrained(p) {
                    classes.push(vec![p.clone()]);
                }
            }
            for class in classes {
                let members: Vec<&Label> = class
                    .iter()
                    .map(|p| &labels[positions.iter().position(|x| x == p).expect("state position")])
                    .collect();
                let non_sink: BTreeSet<&Label> = members.iter().copied().filter(|l| **l != Label::Bot).collect();
                let class_text = class.iter().map(Position::to_string).collect::<Vec<_>>().join("=");
                if non_sink.len() != 1 {
                    diagnostics.push(Diagnostic {
                        clause: Clause::SingleState,
                        rule: Some(i),
                        message: format!("class {{{class_text}}} has {} distinct non-sink states", non_sink.len()),
                    });
                }
                let leaders = members.iter().filter(|l| ***l != Label::Bot).count();
                if leaders != 1 {
                    diagnostics.push(Diagnostic {
                        clause: Clause::SingleLeader,
                        rule: Some(i),
                        message: format!("class {{{class_text}}} has {leaders} non-sink positions"),
                    });
                }
            }
        }
        Validation { diagnostics }
    }

    /// Index `n` is the sink.
    fn state_index(&self) -> HashMap<Label, usize> {
        let mut index: HashMap<Label, usize> =
            self.states.iter().enumerate().map(|(i, q)| (Label::State(q.clone()), i)).collect();
        index.insert(Label::Bot, self.states.len());
        index
    }

    fn target_index(&self, index: &HashMap<Label, usize>, target: &Target) -> usize {
        match target {
            Target::State(q) => index[&Label::State(q.clone())],
            Target::Bot => self.states.len(),
        }
    }

    fn weight_table(&self, indexed: &IndexedTree<'_>) -> Vec<Vec<Rational>> {
        let index = self.state_index();
        // rule index, target index, child indices
        type Entry = (usize, usize, Vec<usize>);
        let mut by_root: HashMap<&Label, Vec<Entry>> = HashMap::new();
        for (i, rule) in self.rules.iter().enumerate() {
            let children = rule.state_labels().iter().map(|l| index[l]).collect();
            by_root.entry(rule.lhs.label()).or_default().push((i, self.target_index(&index, &rule.target), children));
        }
        let n = self.states.len() + 1;
        let mut table: Vec<Vec<Rational>> = Vec::with_capacity(indexed.len());
        let mut bindings = Vec::new();
        for node in 0..indexed.len() {
            let mut row = vec![Rational::zero(); n];
            if let Some(rules) = by_root.get(indexed.node(node).tree.label()) {
                for (rule_index, target, children) in rules {
                    let rule = &self.rules[*rule_index];
                    bindings.clear();
                    if !indexed.match_pattern(&rule.lhs, node, &mut bindings) {
                        continue;
                    }
                    if !constraints_hold(rule, indexed, &bindings) {
                        continue;
                    }
                    let mut w = rule.weight.clone();
                    for (&bound, &q) in bindings.iter().zip(children) {
                        if w.is_zero() {
                            break;
                        }
                        w *= &table[bound][q];
                    }
                    if !w.is_zero() {
                        row[*target] += w;
                    }
                }
            }
            table.push(row);
        }
        table
    }

    /// `wt^q(t)`; `Target::Bot` gives the sink weight.
    pub fn state_weight(&self, t: &Tree, q: &Target) -> Rational {
        let indexed = IndexedTree::new(t);
        let mut table = self.weight_table(&indexed);
        let row = table.swap_remove(indexed.root());
        match q {
            Target::Bot => row[self.states.len()].clone(),
            Target::State(s) => match self.states.iter().position(|x| x == s) {
                Some(i) => row[i].clone(),
                None => Rational::zero(),
            },
        }
    }

    /// Weights of `t` for every ordinary state, in state order.
    pub fn state_weights(&self, t: &Tree) -> Vec<Rational> {
        let indexed = IndexedTree::new(t);
        let mut table = self.weight_table(&indexed);
        let mut row = table.swap_remove(indexed.root());
        row.truncate(self.states.len());
        row
    }

    pub fn evaluate(&self, t: &Tree) -> Rational {
        if self.final_weights.is_empty() {
            return Rational::zero();
        }
        let weights = self.state_weights(t);
        self.states.iter().zip(&weights).filter_map(|(q, w)| self.final_weights.get(q).map(|f| f * w)).sum()
    }

    /// Explicit constrained runs for `t` to `target`.
    pub fn runs(&self, t: &Tree, target: &Target, limit: usize) -> Result<Vec<ConstrainedRun>, WtahError> {
        let indexed = IndexedTree::new(t);
        let index = self.state_index();
        let wanted = match target {
            Target::State(q) if !self.states.contains(q) => return Ok(Vec::new()),
            other => self.target_index(&index, other),
        };
        let mut memo = HashMap::new();
        self.runs_at(&indexed, &index, indexed.root(), wanted, limit, &mut memo)
    }

    /// Runs for `t` to any final state.
    pub fn accepting_runs(&self, t: &Tree, limit: usize) -> Result<Vec<ConstrainedRun>, WtahError> {
        let mut out = Vec::new();
        for q in self.final_weights.keys() {
            out.extend(self.runs(t, &Target::State(q.clone()), limit)?);
            if out.len() > limit {
                return Err(WtahError::TooManyRuns(limit));
            }
        }
        Ok(out)
    }

    fn runs_at(
        &self,
        indexed: &IndexedTree<'_>,
        index: &HashMap<Label, usize>,
        node: usize,
        target: usize,
        limit: usize,
        memo: &mut HashMap<(usize, usize), Vec<ConstrainedRun>>,
    ) -> Result<Vec<ConstrainedRun>, WtahError> {
        let key = (indexed.node(node).class, target);
        if let Some(found) = memo.get(&key) {
            return Ok(found.clone());
        }
        let mut out = Vec::new();
        for (rule_index, rule) in self.rules.iter().enumerate() {
            if self.target_index(index, &rule.target) != target {
                continue;
            }
            let mut bindings = Vec::new();
            if !indexed.match_pattern(&rule.lhs, node, &mut bindings) || !constraints_hold(rule, indexed, &bindings) {
                continue;
            }
            let mut partial: Vec<Vec<ConstrainedRun>> = vec![Vec::new()];
            for (&bound, label) in bindings.iter().zip(rule.state_labels()) {
                let sub = self.runs_at(indexed, index, bound, index[&label], limit, memo)?;
                let mut next = Vec::new();
                for prefix in &partial {
                    for run in &sub {
                        let mut p = prefix.clone();
                        p.push(run.clone());
                        next.push(p);
                        if next.len() > limit {
                            return Err(WtahError::TooManyRuns(limit));
                        }
                    }
                }
                partial = next;
            }
            for children in partial {
                out.push(ConstrainedRun { rule: rule_index, children });
                if out.len() > limit {
                    return Err(WtahError::TooManyRuns(limit));
                }
            }
        }
        memo.insert(key, out.clone());
        Ok(out)
    }

    /// For every ordinary state, the trees of height at most `max_height`
    /// that admit some run to it (ignoring weights). Every sink position must
    /// be tied to a class with a leading non-sink copy.
    pub fn run_domain(&self, max_height: usize) -> Result<BTreeMap<State, BTreeSet<Tree>>, WtahError> {
        struct Plan<'a> {
            rule: &'a ConstrainedRule,
            target: State,
            /// Per state position: index of the class leader's slot.
            slot_of: Vec<usize>,
            /// Per slot: states all positions of the slot must reach and the
            /// depth bound on the subtree height.
            slots: Vec<(Vec<State>, usize)>,
        }
        let mut plans = Vec::new();
        for (i, rule) in self.non_sink_rules() {
            let Target::State(target) = &rule.target else { continue };
            let positions = rule.state_positions();
            let labels = rule.state_labels();
            let mut slot_of = vec![usize::MAX; positions.len()];
            let mut slots: Vec<(Vec<State>, usize)> = Vec::new();
            for (k, p) in positions.iter().enumerate() {
                if slot_of[k] != usize::MAX {
                    continue;
                }
                let class: Vec<Position> =
                    rule.class_of(p).map(<[Position]>::to_vec).unwrap_or_else(|| vec![p.clone()]);
                let mut states = Vec::new();
                let mut bound = usize::MAX;
                for member in &class {
                    let m = positions.iter().position(|x| x == member).expect("state position");
                    slot_of[m] = slots.len();
                    bound = bound.min(max_height.saturating_sub(member.len()));
                    if let Label::State(q) = &labels[m] {
                        states.push(q.clone());
                    }
                }
                if states.is_empty() {
                    return Err(WtahError::UntiedSink { rule: i, position: p.clone() });
                }
                states.sort();
                states.dedup();
                slots.push((states, bound));
            }
            if rule.lhs.height() > max_height {
                continue;
            }
            plans.push(Plan { rule, target: target.clone(), slot_of, slots });
        }
        let mut domain: BTreeMap<State, BTreeSet<Tree>> =
            self.states.iter().map(|q| (q.clone(), BTreeSet::new())).collect();
        loop {
            let mut added = Vec::new();
            for plan in &plans {
                let choices: Vec<Vec<Tree>> = plan
                    .slots
                    .iter()
                    .map(|(states, bound)| {
                        domain[&states[0]]
                            .iter()
                            .filter(|t| t.height() <= *bound && states[1..].iter().all(|q| domain[q].contains(*t)))
                            .cloned()
                            .collect()
                    })
                    .collect();
                for_each_choice(&choices, &mut |picked| {
                    let mut k = 0;
                    let t = plan.rule.lhs.replace_leaves(&mut |l| {
                        if l.is_state_like() {
                            let slot = plan.slot_of[k];
                            k += 1;
                            Some(picked[slot].clone())
                        } else {
                            None
                        }
                    });
                    if t.height() <= max_height && !domain[&plan.target].contains(&t) {
                        added.push((plan.target.clone(), t));
                    }
                });
            }
            if added.is_empty() {
                return Ok(domain);
            }
            for (q, t) in added {
                domain.get_mut(&q).expect("declared state").insert(t);
            }
        }
    }

    /// Renames symbols by `pi`, then sums identical rules (same lhs, target
    /// and constraints) and drops zero sums.
    pub fn relabel_and_merge(&self, pi: &BTreeMap<Symbol, Symbol>) -> Result<Wtah, WtahError> {
        let mut alphabet = RankedAlphabet::new();
        for (s, rank) in self.alphabet.iter() {
            let image = pi.get(s).unwrap_or(s);
            if let Some(existing) = alphabet.rank(image) {
                if existing != rank {
                    return Err(WtaError::RankMismatch {
                        from: s.to_string(),
                        from_rank: rank,
                        to: image.to_string(),
                        to_rank: existing,
                    }
                    .into());
                }
            }
            alphabet.insert(image.clone(), rank)?;
        }
        let mut order: Vec<ConstrainedRule> = Vec::new();
        let mut sums: HashMap<(Tree, Target, Vec<Vec<Position>>), usize> = HashMap::new();
        for rule in &self.rules {
            let lhs = rule.lhs.map_labels(&mut |l| match l {
                Label::Sym(s) => Label::Sym(pi.get(s).unwrap_or(s).clone()),
                other => other.clone(),
            });
            let key = (lhs.clone(), rule.target.clone(), rule.constraints.clone());
            match sums.get(&key) {
                Some(&at) => order[at].weight += &rule.weight,
                None => {
                    sums.insert(key, order.len());
                    order.push(rule.with_lhs(lhs));
                }
            }
        }
        order.retain(|r| !r.weight.is_zero());
        Ok(Wtah { alphabet, rules: order, ..self.clone() })
    }

    /// Rules in canonical order.
    pub fn sorted(&self) -> Wtah {
        let mut rules = self.rules.clone();
        rules.sort();
        Wtah { rules, ..self.clone() }
    }
}

fn constraints_hold(rule: &ConstrainedRule, indexed: &IndexedTree<'_>, bindings: &[usize]) -> bool {
    if rule.constraints.is_empty() {
        return true;
    }
    let positions = rule.state_positions();
    rule.constraints.iter().all(|class| {
        let mut classes = class.iter().map(|p| {
            let k = positions.iter().position(|x| x == p).expect("constraint on state position");
            indexed.node(bindings[k]).class
        });
        let first = classes.next();
        classes.all(|c| Some(c) == first)
    })
}

fn for_each_choice(choices: &[Vec<Tree>], f: &mut impl FnMut(&[Tree])) {
    fn go(choices: &[Vec<Tree>], acc: &mut Vec<Tree>, f: &mut impl FnMut(&[Tree])) {
        match choices.split_first() {
            None => f(acc),
            Some((first, rest)) => {
                for t in first {
                    acc.push(t.clone());
                    go(rest, acc, f);
                    acc.pop();
                }
            }
        }
    }
    go(choices, &mut Vec::new(), f);
}

/// A run as a tree of rule applications; `children[i]` processes the
/// subtree at the `i`-th state position (lexicographic, sink included).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ConstrainedRun {
    pub rule: usize,
    pub children: Vec<ConstrainedRun>,
}

impl ConstrainedRun {
    pub fn target<'m>(&self, m: &'m Wtah) -> &'m Target {
        &m.rules[self.rule].target
    }

    pub fn weight(&self, m: &Wtah) -> Rational {
        let own = m.rules[self.rule].weight.clone();
        self.children.iter().fold(own, |acc, c| acc * c.weight(m))
    }

    pub fn tree(&self, m: &Wtah) -> Tree {
        let mut next = self.children.iter();
        m.rules[self.rule].lhs.replace_leaves(&mut |l| {
            if l.is_state_like() {
                next.next().map(|c| c.tree(m))
            } else {
                None
            }
        })
    }

    /// Checks child targets and constraints at every rule application.
    pub fn is_valid(&self, m: &Wtah) -> bool {
        let rule = &m.rules[self.rule];
        let labels = rule.state_labels();
        if labels.len() != self.children.len() {
            return false;
        }
        let targets_match = labels.iter().zip(&self.children).all(|(l, c)| match (l, c.target(m)) {
            (Label::Bot, Target::Bot) => true,
            (Label::State(q), Target::State(p)) => q == p,
            _ => false,
        });
        if !targets_match || !self.children.iter().all(|c| c.is_valid(m)) {
            return false;
        }
        let positions = rule.state_positions();
        rule.constraints.iter().all(|class| {
            let trees: Vec<Tree> = class
                .iter()
                .map(|p| self.children[positions.iter().position(|x| x == p).expect("state position")].tree(m))
                .collect();
            trees.windows(2).all(|w| w[0] == w[1])
        })
    }

    /// `(rule, position)` for every rule application, lexicographically.
    pub fn rule_positions(&self, m: &Wtah) -> Vec<(usize, Position)> {
        let mut out = Vec::new();
        self.collect(m, &Position::root(), &mut out);
        out.sort_by(|a, b| a.1.cmp(&b.1));
        out
    }

    fn collect(&self, m: &Wtah, at: &Position, out: &mut Vec<(usize, Position)>) {
        out.push((self.rule, at.clone()));
        for (child, p) in self.children.iter().zip(m.rules[self.rule].state_positions()) {
            child.collect(m, &at.concat(&p), out);
        }
    }

    /// Text rendering: `rule(child, …)`.
    pub fn render(&self, m: &Wtah) -> String {
        let own = format!("[{}]", m.rules[self.rule]);
        if self.children.is_empty() {
            own
        } else {
            let children: Vec<String> = self.children.iter().map(|c| c.render(m)).collect();
            format!("{own}({})", children.join(", "))
        }
    }
}

impl fmt::Display for Wtah {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "wtah {} over Q {{", self.name)?;
        let symbols: Vec<String> = self.alphabet.iter().map(|(s, r)| format!("{s}:{r}")).collect();
        if !symbols.is_empty() {
            writeln!(f, "  alphabet {};", symbols.join(", "))?;
        }
        let states: Vec<String> = self.states.iter().map(State::to_string).collect();
        if !states.is_empty() {
            writeln!(f, "  states {};", states.join(", "))?;
        }
        writeln!(f, "  sink {BOT};")?;
        if !self.final_weights.is_empty() {
            let finals: Vec<String> = self
                .final_weights
                .iter()
                .map(|(q, w)| if w.is_one() { q.to_string() } else { format!("{q}: {w}") })
                .collect();
            writeln!(f, "  final {};", finals.join(", "))?;
        }
        for rule in &self.rules {
            writeln!(f, "  rule {rule};")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests;
