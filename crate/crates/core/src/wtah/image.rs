//! The WTAh for a homomorphic image and the run-tracing map `h^R`.

use std::collections::BTreeMap;

use super::{ConstrainedRule, ConstrainedRun, Target, Wtah, WtahError};
use crate::field::Rational;
use crate::hom::Homomorphism;
use crate::terms::{Label, Position, RankedAlphabet, Symbol, Tree};
use crate::wta::{GrammarRule, Run, WtaError, Wtg};

/// Left-hand side and constraints of `h^R(r)`: the lexicographically first
/// occurrence of `x_i` becomes `q_i`, the others the sink, and all
/// occurrences of `x_i` form one class.
fn traced_lhs(rule: &GrammarRule, h: &Homomorphism) -> Result<(Tree, Vec<Vec<Position>>), WtahError> {
    let Label::Sym(symbol) = rule.lhs.label() else {
        return Err(WtaError::NotWta.into());
    };
    if !rule.is_flat() {
        return Err(WtaError::NotWta.into());
    }
    let image = h.image(symbol).ok_or_else(|| WtahError::MissingImage(symbol.to_string()))?;
    let states = rule.child_states();
    let rank = h.source().rank(symbol).unwrap_or(0);
    if rank != states.len() {
        return Err(WtahError::RankMismatch { symbol: symbol.to_string(), wta: states.len(), hom: rank });
    }
    let mut classes: BTreeMap<u32, Vec<Position>> = BTreeMap::new();
    for p in image.positions_where(|l| matches!(l, Label::Var(_))) {
        if let Some(Label::Var(i)) = image.get(&p).map(Tree::label) {
            classes.entry(*i).or_default().push(p);
        }
    }
    let mut seen = vec![false; states.len()];
    let lhs = image.replace_leaves(&mut |l| match l {
        Label::Var(i) => {
            let k = *i as usize - 1;
            if seen[k] {
                Some(Tree::bot())
            } else {
                seen[k] = true;
                Some(Tree::leaf(Label::State(states[k].clone())))
            }
        }
        _ => None,
    });
    Ok((lhs, classes.into_values().collect()))
}

/// `h^R(r)` for a WTA rule `σ(q1,…,qk) → q`.
pub fn h_r_rule(rule: &GrammarRule, h: &Homomorphism) -> Result<ConstrainedRule, WtahError> {
    let (lhs, classes) = traced_lhs(rule, h)?;
    ConstrainedRule::new(lhs, Target::State(rule.target.clone()), classes, rule.weight.clone())
}

fn annotation(delta: &Symbol, rule: usize) -> Symbol {
    Symbol::new(format!("<{delta},{}>", rule + 1))
}

fn sink_rules(alphabet: &RankedAlphabet) -> Vec<ConstrainedRule> {
    alphabet
        .iter()
        .map(|(s, rank)| {
            ConstrainedRule::unconstrained(
                Tree::new(Label::Sym(s.clone()), vec![Tree::bot(); rank]),
                Target::Bot,
                Rational::one(),
            )
        })
        .collect()
}

/// The annotated automaton over `Δ ∪ (Δ × R)`: the root symbol `δ` of
/// `h^R(r)` becomes `<δ,i>` for the `i`-th rule (1-based).
pub fn hom_image_annotated(a: &Wtg, h: &Homomorphism) -> Result<Wtah, WtahError> {
    if !a.is_wta() {
        return Err(WtaError::NotWta.into());
    }
    h.require_nondeleting_nonerasing()?;
    let mut rules = Vec::new();
    let mut alphabet = h.target().clone();
    for (i, rule) in a.rules().iter().enumerate() {
        let traced = h_r_rule(rule, h)?;
        let Label::Sym(delta) = traced.lhs.label() else { unreachable!("nonerasing image has a symbol root") };
        let annotated = annotation(delta, i);
        alphabet.insert(annotated.clone(), traced.lhs.arity())?;
        let lhs = Tree::new(Label::Sym(annotated), traced.lhs.children().to_vec());
        rules.push(ConstrainedRule { lhs, ..traced });
    }
    rules.extend(sink_rules(h.target()));
    Wtah::new(format!("{}_{}", h.name(), a.name()), alphabet, a.states().to_vec(), a.final_weights().clone(), rules)
}

/// Eq-restricted WTAh recognizing `h(⟦A⟧)`: the annotated automaton with
/// annotations erased and identical rules merged.
pub fn hom_image(a: &Wtg, h: &Homomorphism) -> Result<Wtah, WtahError> {
    let annotated = hom_image_annotated(a, h)?;
    let mut erase = BTreeMap::new();
    for (i, rule) in a.rules().iter().enumerate() {
        let traced = h_r_rule(rule, h)?;
        if let Label::Sym(delta) = traced.lhs.label() {
            erase.insert(annotation(delta, i), delta.clone());
        }
    }
    let mut merged = annotated.relabel_and_merge(&erase)?;
    merged.alphabet = h.target().clone();
    Ok(merged)
}

/// The unique run of the sink for `t`.
pub fn bot_run(m: &Wtah, t: &Tree) -> Result<ConstrainedRun, WtahError> {
    let Label::Sym(symbol) = t.label() else {
        return Err(WtahError::MissingSinkRule(t.label().to_string()));
    };
    let sink_lhs = Tree::new(Label::Sym(symbol.clone()), vec![Tree::bot(); t.arity()]);
    let rule = m
        .rules()
        .iter()
        .position(|r| r.target.is_bot() && r.lhs == sink_lhs)
        .ok_or_else(|| WtahError::MissingSinkRule(symbol.to_string()))?;
    let children = t.children().iter().map(|c| bot_run(m, c)).collect::<Result<Vec<_>, _>>()?;
    Ok(ConstrainedRun { rule, children })
}

/// `h^R(ϑ)` as a run of `m = hom_image(a, h)`.
pub fn h_r_run(a: &Wtg, h: &Homomorphism, m: &Wtah, run: &Run) -> Result<ConstrainedRun, WtahError> {
    let rule = &a.rules()[run.rule];
    let traced = h_r_rule(rule, h)?;
    let index = m
        .rules()
        .iter()
        .position(|r| r.lhs == traced.lhs && r.target == traced.target && r.constraints == traced.constraints)
        .ok_or(WtahError::CancelledRule(run.rule))?;
    let Label::Sym(symbol) = rule.lhs.label() else {
        return Err(WtaError::NotWta.into());
    };
    let image = h.image(symbol).ok_or_else(|| WtahError::MissingImage(symbol.to_string()))?;
    let mut seen = vec![false; run.children.len()];
    let mut children = Vec::new();
    for p in image.positions_where(|l| matches!(l, Label::Var(_))) {
        let Some(Label::Var(i)) = image.get(&p).map(Tree::label) else { continue };
        let k = *i as usize - 1;
        let child = &run.children[k];
        if seen[k] {
            children.push(bot_run(m, &h.apply(&child.tree(a))?)?);
        } else {
            seen[k] = true;
            children.push(h_r_run(a, h, m, child)?);
        }
    }
    Ok(ConstrainedRun { rule: index, children })
}
