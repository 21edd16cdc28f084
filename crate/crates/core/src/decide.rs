//! Regularity of `h(⟦A⟧)`: image construction, LDP, and linearization.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::field::Rational;
use crate::hatldp::{decide_ldp, HatError, LdpReport, LdpWitness};
use crate::hom::{HomError, Homomorphism};
use crate::terms::{Label, Position, State, Tree};
use crate::wta::{GrammarRule, WtaError, Wtg};
use crate::wtah::{hom_image, Diagnostic, Target, Wtah, WtahError};

type Weighted = (Tree, Rational);

pub const DEFAULT_LINEARIZE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecideError {
    #[error(transparent)]
    Hom(#[from] HomError),
    #[error(transparent)]
    Wta(#[from] WtaError),
    #[error(transparent)]
    Wtah(#[from] WtahError),
    #[error(transparent)]
    Hat(#[from] HatError),
    #[error("homomorphism is not tetris-free: h({}) = h({})", .0 .0, .0 .1)]
    NotTetrisFree((Tree, Tree)),
    #[error("tetris-freeness could not be established within the search bound")]
    TetrisUndetermined,
    #[error("image automaton is not eq-restricted: {}", .0.iter().map(|d| d.message.clone()).collect::<Vec<_>>().join("; "))]
    NotEqRestricted(Vec<Diagnostic>),
    #[error("automaton has the large duplication property (witness {})", .0.tree)]
    HasLdp(LdpWitness),
    #[error("rule {rule}: sink position {position} has no leader")]
    UntiedSink { rule: usize, position: Position },
    #[error("linearization needs {count} rules, more than the cap {cap}")]
    TooLarge { count: u128, cap: usize },
}

/// Why the answer is what it is.
#[derive(Clone, Debug)]
pub enum Certificate {
    /// Unconstrained grammar for the image.
    Grammar(Wtg),
    /// Large duplication in the image automaton.
    Ldp(LdpWitness),
}

/// One pipeline step with counts and wall time.
#[derive(Clone, Debug)]
pub struct Stage {
    pub name: &'static str,
    pub facts: Vec<(&'static str, String)>,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct Decision {
    pub regular: bool,
    pub certificate: Certificate,
    pub image: Wtah,
    pub ldp: LdpReport,
    pub trace: Vec<Stage>,
}

impl Decision {
    /// Flattened `key=value` facts of all stages, in pipeline order.
    pub fn summary(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for stage in &self.trace {
            for (k, v) in &stage.facts {
                out.push((format!("{}.{k}", stage.name), v.clone()));
            }
            out.push((format!("{}.ms", stage.name), format!("{:.3}", stage.elapsed.as_secs_f64() * 1e3)));
        }
        out
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.name)?;
        for (k, v) in &self.facts {
            write!(f, " {k}={v}")?;
        }
        write!(f, " ({:.3} ms)", self.elapsed.as_secs_f64() * 1e3)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DecideOptions {
    pub linearize_cap: usize,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions { linearize_cap: DEFAULT_LINEARIZE_CAP }
    }
}

fn timed<T>(
    trace: &mut Vec<Stage>,
    name: &'static str,
    f: impl FnOnce() -> Result<(T, Vec<(&'static str, String)>), DecideError>,
) -> Result<T, DecideError> {
    let start = Instant::now();
    let (value, facts) = f()?;
    trace.push(Stage { name, facts, elapsed: start.elapsed() });
    Ok(value)
}

/// Decides whether `h(⟦A⟧)` is regular for nondeleting, nonerasing,
/// tetris-free `h`. A grammar with non-flat rules is normalized first.
pub fn decide_hom(a: &Wtg, h: &Homomorphism, options: &DecideOptions) -> Result<Decision, DecideError> {
    let mut trace = Vec::new();
    timed(&mut trace, "hom", || {
        h.require_nondeleting_nonerasing()?;
        let check = h.is_tetris_free()?;
        if !check.tetris_free {
            return Err(match check.witness {
                Some(pair) => DecideError::NotTetrisFree(pair),
                None => DecideError::TetrisUndetermined,
            });
        }
        Ok(((), vec![("symbols", h.source().len().to_string()), ("tetris_free", "yes".into())]))
    })?;
    let a = if a.is_wta() { a.clone() } else { a.to_wta() };
    let image = timed(&mut trace, "image", || {
        let m = hom_image(&a, h)?;
        let validation = m.validate_eq_restricted();
        if !validation.is_ok() {
            return Err(DecideError::NotEqRestricted(validation.diagnostics));
        }
        let constrained = m.rules().iter().filter(|r| r.has_constraints()).count();
        let facts = vec![
            ("source_rules", a.rules().len().to_string()),
            ("rules", m.rules().len().to_string()),
            ("constrained_rules", constrained.to_string()),
            ("states", m.states().len().to_string()),
        ];
        Ok((m, facts))
    })?;
    let ldp = timed(&mut trace, "ldp", || {
        let report = decide_ldp(&image)?;
        let facts = vec![
            ("n_hat", report.n_hat.to_string()),
            ("pumping_constant", report.pumping_constant.to_string()),
            ("hat_rules", report.hat_rules.to_string()),
            ("counter_rules", report.counter_rules.to_string()),
            ("dimension", report.dimension.to_string()),
            ("has_ldp", if report.has_ldp { "yes" } else { "no" }.into()),
        ];
        Ok((report, facts))
    })?;
    if ldp.has_ldp {
        let witness = ldp.witness.clone().ok_or(HatError::NoRun(Tree::bot()))?;
        return Ok(Decision { regular: false, certificate: Certificate::Ldp(witness), image, ldp, trace });
    }
    let grammar = timed(&mut trace, "linearize", || {
        let g = linearize(&image, ldp.pumping_constant, options.linearize_cap)?;
        let facts = vec![("rules", g.rules().len().to_string())];
        Ok((g, facts))
    })?;
    Ok(Decision { regular: true, certificate: Certificate::Grammar(grammar), image, ldp, trace })
}

/// Replaces every constrained class by all trees of height below `n` with
/// nonzero weight for the class leader. Equals `⟦m⟧` when `m` lacks the LDP
/// for pumping constant `n`; see [`linearize_checked`].
pub fn linearize(m: &Wtah, n: usize, cap: usize) -> Result<Wtg, DecideError> {
    let domain = m.run_domain(n.saturating_sub(1))?;
    let mut support: BTreeMap<State, Vec<(Tree, Rational)>> = BTreeMap::new();
    for (q, trees) in &domain {
        let target = Target::State(q.clone());
        let weighted: Vec<(Tree, Rational)> = trees
            .iter()
            .filter(|t| t.height() < n)
            .map(|t| (t.clone(), m.state_weight(t, &target)))
            .filter(|(_, w)| !w.is_zero())
            .collect();
        support.insert(q.clone(), weighted);
    }
    let mut total: u128 = 0;
    let mut rules = Vec::new();
    for (i, rule) in m.non_sink_rules() {
        let Target::State(target) = &rule.target else { continue };
        let labels = rule.state_labels();
        for (p, l) in rule.state_positions().iter().zip(&labels) {
            if *l == Label::Bot && !rule.is_constrained(p) {
                return Err(DecideError::UntiedSink { rule: i, position: p.clone() });
            }
        }
        let mut classes: Vec<(&[Position], &[Weighted])> = Vec::new();
        for class in rule.constraints() {
            let leader = class.iter().find_map(|p| match rule.lhs.get(p).map(Tree::label) {
                Some(Label::State(q)) => Some(q.clone()),
                _ => None,
            });
            let Some(leader) = leader else {
                return Err(DecideError::UntiedSink { rule: i, position: class[0].clone() });
            };
            classes.push((class, support.get(&leader).map_or(&[][..], Vec::as_slice)));
        }
        let count = classes.iter().fold(1u128, |acc, (_, s)| acc.saturating_mul(s.len() as u128));
        total = total.saturating_add(count);
        if total > cap as u128 {
            return Err(DecideError::TooLarge { count: total, cap });
        }
        if count == 0 {
            continue;
        }
        let mut choice = vec![0usize; classes.len()];
        loop {
            let mut lhs = rule.lhs.clone();
            let mut weight = rule.weight.clone();
            for ((class, trees), &c) in classes.iter().zip(&choice) {
                let (t, w) = &trees[c];
                weight *= w;
                for p in class.iter() {
                    if rule.lhs.get(p).map(Tree::label) == Some(&Label::Bot) {
                        weight *= m.state_weight(t, &Target::Bot);
                    }
                    lhs = lhs.substitute(p, t).map_err(WtaError::from)?;
                }
            }
            rules.push(GrammarRule::new(lhs, target.clone(), weight));
            let mut k = choice.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                choice[k] += 1;
                if choice[k] < classes[k].1.len() {
                    break;
                }
                choice[k] = 0;
            }
            if choice.iter().all(|&c| c == 0) {
                break;
            }
        }
    }
    let rules: Vec<GrammarRule> = rules.into_iter().filter(|r| !r.weight.is_zero()).collect();
    let g = Wtg::new(
        format!("{}_lin", m.name()),
        m.alphabet().clone(),
        m.states().to_vec(),
        rules,
        m.final_weights().clone(),
    )?;
    Ok(g.merged().sorted())
}

/// [`linearize`] after checking that `m` lacks the LDP.
pub fn linearize_checked(m: &Wtah, cap: usize) -> Result<Wtg, DecideError> {
    let report = decide_ldp(m)?;
    if let Some(witness) = report.witness {
        return Err(DecideError::HasLdp(witness));
    }
    linearize(m, report.pumping_constant, cap)
}
