use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{GrammarRule, WtaError, Wtg};
use crate::field::Rational;
use crate::terms::{Label, Position, RankedAlphabet, State, Symbol, Tree};

impl Wtg {
    /// Equivalent WTA: every non-root symbol node of a left-hand side gets a
    /// fresh state reached with weight 1. Returns a clone when already flat.
    pub fn to_wta(&self) -> Wtg {
        if self.is_wta() {
            return self.clone();
        }
        let mut taken: BTreeSet<State> = self.states.iter().cloned().collect();
        let mut states = self.states.clone();
        let mut rules = Vec::new();
        for (index, rule) in self.rules.iter().enumerate() {
            if rule.is_flat() {
                rules.push(rule.clone());
                continue;
            }
            let mut fresh = |p: &Position| {
                let steps: Vec<String> = p.path().iter().map(usize::to_string).collect();
                let mut name = format!("p{}_{}", index + 1, steps.join("_"));
                while taken.contains(&State::new(&name)) {
                    name.push('\'');
                }
                let q = State::new(name);
                taken.insert(q.clone());
                states.push(q.clone());
                q
            };
            let lhs = flatten(&rule.lhs, &Position::root(), &mut fresh, &mut rules);
            rules.push(GrammarRule::new(lhs, rule.target.clone(), rule.weight.clone()));
        }
        Wtg {
            name: self.name.clone(),
            alphabet: self.alphabet.clone(),
            states,
            rules,
            final_weights: self.final_weights.clone(),
        }
    }

    /// `Σ cᵢ·⟦Gᵢ⟧` as a disjoint union; state `q` of the `i`-th grammar
    /// becomes `q~i` (1-based).
    pub fn linear_combination(name: &str, parts: &[(Rational, &Wtg)]) -> Result<Wtg, WtaError> {
        let alphabet = parts.first().map(|(_, g)| g.alphabet.clone()).unwrap_or_default();
        if parts.iter().any(|(_, g)| g.alphabet != alphabet) {
            return Err(WtaError::AlphabetMismatch);
        }
        let mut states = Vec::new();
        let mut rules = Vec::new();
        let mut finals = BTreeMap::new();
        for (i, (c, g)) in parts.iter().enumerate() {
            let rename = |q: &State| State::new(format!("{q}~{}", i + 1));
            states.extend(g.states.iter().map(rename));
            for rule in &g.rules {
                rules.push(GrammarRule {
                    lhs: rename_in(&rule.lhs, &rename),
                    target: rename(&rule.target),
                    weight: rule.weight.clone(),
                });
            }
            for (q, w) in &g.final_weights {
                let scaled = c * w;
                if !scaled.is_zero() {
                    finals.insert(rename(q), scaled);
                }
            }
        }
        Ok(Wtg { name: name.to_string(), alphabet, states, rules, final_weights: finals })
    }

    /// Renames symbols by `pi` (unmapped symbols stay), then sums the weights
    /// of identical rules and drops those summing to zero.
    pub fn relabel_and_merge(&self, pi: &BTreeMap<Symbol, Symbol>) -> Result<Wtg, WtaError> {
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
                    });
                }
            }
            alphabet.insert(image.clone(), rank)?;
        }
        let rules = self
            .rules
            .iter()
            .map(|r| GrammarRule {
                lhs: r.lhs.map_labels(&mut |l| match l {
                    Label::Sym(s) => Label::Sym(pi.get(s).unwrap_or(s).clone()),
                    other => other.clone(),
                }),
                target: r.target.clone(),
                weight: r.weight.clone(),
            })
            .collect();
        Ok(Wtg { rules: merge_rules(rules), alphabet, ..self.clone() })
    }

    /// Sums identical rules (first occurrence keeps its place) and drops
    /// zero sums.
    pub fn merged(&self) -> Wtg {
        Wtg { rules: merge_rules(self.rules.clone()), ..self.clone() }
    }

    /// Rules sorted by left-hand side, target, weight.
    pub fn sorted(&self) -> Wtg {
        let mut rules = self.rules.clone();
        rules.sort();
        Wtg { rules, ..self.clone() }
    }

    /// Applies `f` to every state name. `f` must be injective.
    pub fn rename_states(&self, f: &impl Fn(&State) -> State) -> Wtg {
        Wtg {
            name: self.name.clone(),
            alphabet: self.alphabet.clone(),
            states: self.states.iter().map(f).collect(),
            rules: self
                .rules
                .iter()
                .map(|r| GrammarRule { lhs: rename_in(&r.lhs, f), target: f(&r.target), weight: r.weight.clone() })
                .collect(),
            final_weights: self.final_weights.iter().map(|(q, w)| (f(q), w.clone())).collect(),
        }
    }

    /// Drops states that no rule targets and that are not final, together
    /// with rules reading them.
    pub fn trimmed(&self) -> Wtg {
        let mut productive: BTreeSet<&State> = BTreeSet::new();
        loop {
            let before = productive.len();
            for rule in &self.rules {
                if rule.child_states().iter().all(|q| productive.contains(q)) {
                    productive.insert(&rule.target);
                }
            }
            if productive.len() == before {
                break;
            }
        }
        let rules: Vec<GrammarRule> = self
            .rules
            .iter()
            .filter(|r| productive.contains(&r.target) && r.child_states().iter().all(|q| productive.contains(q)))
            .cloned()
            .collect();
        Wtg {
            name: self.name.clone(),
            alphabet: self.alphabet.clone(),
            states: self.states.iter().filter(|q| productive.contains(q)).cloned().collect(),
            final_weights: self
                .final_weights
                .iter()
                .filter(|(q, _)| productive.contains(q))
                .map(|(q, w)| (q.clone(), w.clone()))
                .collect(),
            rules,
        }
    }
}

fn flatten(
    node: &Tree,
    at: &Position,
    fresh: &mut impl FnMut(&Position) -> State,
    rules: &mut Vec<GrammarRule>,
) -> Tree {
    let children = node
        .children()
        .iter()
        .enumerate()
        .map(|(i, child)| {
            if child.is_leaf() && matches!(child.label(), Label::State(_)) {
                return child.clone();
            }
            let p = at.child(i + 1);
            let lhs = flatten(child, &p, fresh, rules);
            let q = fresh(&p);
            rules.push(GrammarRule::new(lhs, q.clone(), Rational::one()));
            Tree::leaf(Label::State(q))
        })
        .collect();
    Tree::new(node.label().clone(), children)
}

fn rename_in(t: &Tree, f: &impl Fn(&State) -> State) -> Tree {
    t.replace_leaves(&mut |l| match l {
        Label::State(q) => Some(Tree::leaf(Label::State(f(q)))),
        _ => None,
    })
}

pub(crate) fn merge_rules(rules: Vec<GrammarRule>) -> Vec<GrammarRule> {
    let mut order: Vec<(Tree, State)> = Vec::new();
    let mut sums: HashMap<(Tree, State), Rational> = HashMap::new();
    for rule in rules {
        let key = (rule.lhs, rule.target);
        match sums.get_mut(&key) {
            Some(w) => *w += rule.weight,
            None => {
                order.push(key.clone());
                sums.insert(key, rule.weight);
            }
        }
    }
    order
        .into_iter()
        .filter_map(|key| {
            let weight = sums.remove(&key).expect("key recorded");
            (!weight.is_zero()).then_some(GrammarRule { lhs: key.0, target: key.1, weight })
        })
        .collect()
}
