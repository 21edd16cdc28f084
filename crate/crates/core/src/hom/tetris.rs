//! Tetris-freeness.
//!
//! `h` is tetris-free iff the induced map on *class trees* (symbols replaced
//! by their image class) is injective. Three stages:
//!
//! 1. The tiling grammar (one rule per image, variables as a single
//!    nonterminal) is checked for ambiguity by a product construction with a
//!    divergence flag. Unambiguous implies tetris-free.
//! 2. Otherwise a narrowing search looks for distinct root classes `u ≠ v`
//!    and image-valued unknowns with `h(u)[X] = h(v)[Y]`. Every solution is
//!    turned into a concrete violating pair; exhausting the search space
//!    proves tetris-freeness (the grammar ignores that repeated variables
//!    carry equal subtrees, so it over-approximates).
//! 3. If the search hits its depth or work bound, the answer is "not
//!    tetris-free" without a verified pair.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{HomError, Homomorphism, ImageClass};
use crate::terms::{count_trees, enumerate_trees, size_key, Label, Position, Tree};

/// Outcome of a tetris-freeness check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TetrisCheck {
    pub tetris_free: bool,
    /// A pair `(s, s')` with `h(s) = h(s')` whose class trees differ.
    pub witness: Option<(Tree, Tree)>,
    /// False when the answer rests on an exhausted search bound (exact
    /// check) or on a height bound (oracle).
    pub conclusive: bool,
}

const NARROWING_DEPTH: usize = 12;
const NARROWING_BUDGET: usize = 200_000;
const REFINE_LIMIT: u128 = 20_000;

impl Homomorphism {
    pub fn is_tetris_free(&self) -> Result<TetrisCheck, HomError> {
        self.require_nondeleting_nonerasing()?;
        let classes = self.image_classes();
        let Some(ground) =
            classes.iter().filter(|c| c.rank == 0).map(|c| &c.image).min_by(|a, b| size_key(a).cmp(&size_key(b)))
        else {
            // T_Σ is empty
            return Ok(TetrisCheck { tetris_free: true, witness: None, conclusive: true });
        };
        if !tiling_grammar_ambiguous(&classes) {
            return Ok(TetrisCheck { tetris_free: true, witness: None, conclusive: true });
        }
        let mut exhausted = false;
        for (i, u) in classes.iter().enumerate() {
            for v in &classes[i + 1..] {
                let mut search = Narrowing { classes: &classes, budget: NARROWING_BUDGET, exhausted: false };
                let found = search.solve(u, v);
                exhausted |= search.exhausted;
                if let Some(solution) = found {
                    if let Some(pair) = self.realize(u, v, &solution, ground)? {
                        let pair = self.refine(pair)?;
                        return Ok(TetrisCheck { tetris_free: false, witness: Some(pair), conclusive: true });
                    }
                }
            }
        }
        Ok(TetrisCheck { tetris_free: !exhausted, witness: None, conclusive: !exhausted })
    }

    /// Exhaustive check over all pairs of trees of height at most
    /// `max_height`. The witness minimizes total size, then term order.
    pub fn tetris_free_bounded_oracle(&self, max_height: usize) -> Result<TetrisCheck, HomError> {
        self.require_nondeleting_nonerasing()?;
        let representative: HashMap<_, _> = self
            .image_classes()
            .into_iter()
            .flat_map(|c| {
                let rep = c.symbols[0].clone();
                c.symbols.into_iter().map(move |s| (s, rep.clone()))
            })
            .collect();
        // image -> class tree -> smallest tree with that class tree
        let mut groups: HashMap<Tree, BTreeMap<Tree, Tree>> = HashMap::new();
        for s in enumerate_trees(&self.source, max_height) {
            let image = self.apply(&s)?;
            let class_tree = s.map_labels(&mut |l| match l {
                Label::Sym(x) => Label::Sym(representative[x].clone()),
                other => other.clone(),
            });
            let slot = groups.entry(image).or_default();
            match slot.get(&class_tree) {
                Some(existing) if size_key(existing) <= size_key(&s) => {}
                _ => {
                    slot.insert(class_tree, s);
                }
            }
        }
        let mut best: Option<(Tree, Tree)> = None;
        for reps in groups.values() {
            let reps: Vec<&Tree> = reps.values().collect();
            for (i, a) in reps.iter().enumerate() {
                for b in &reps[i + 1..] {
                    let pair = ordered_pair((*a).clone(), (*b).clone());
                    if best.as_ref().is_none_or(|current| pair_key(&pair) < pair_key(current)) {
                        best = Some(pair);
                    }
                }
            }
        }
        Ok(match best {
            Some(pair) => TetrisCheck { tetris_free: false, witness: Some(pair), conclusive: true },
            None => TetrisCheck { tetris_free: true, witness: None, conclusive: false },
        })
    }

    fn realize(
        &self,
        u: &ImageClass,
        v: &ImageClass,
        solution: &Solution,
        ground: &Tree,
    ) -> Result<Option<(Tree, Tree)>, HomError> {
        let build = |class: &ImageClass, vars: &[u32]| -> Result<Option<Tree>, HomError> {
            let mut children = Vec::new();
            for &x in vars {
                let value = solution.value(x, ground);
                match self.preimages(&value)?.into_iter().next() {
                    Some(s) => children.push(s),
                    None => return Ok(None),
                }
            }
            Ok(Some(Tree::new(Label::Sym(class.symbols[0].clone()), children)))
        };
        let (Some(s), Some(s2)) = (build(u, &solution.left)?, build(v, &solution.right)?) else {
            return Ok(None);
        };
        if s == s2 || self.apply(&s)? != self.apply(&s2)? {
            return Ok(None);
        }
        Ok(Some(ordered_pair(s, s2)))
    }

    /// Replaces a witness by the minimal one when the trees up to its height
    /// are few enough to enumerate.
    fn refine(&self, pair: (Tree, Tree)) -> Result<(Tree, Tree), HomError> {
        let height = pair.0.height().max(pair.1.height());
        if count_trees(&self.source, height) > REFINE_LIMIT {
            return Ok(pair);
        }
        let check = self.tetris_free_bounded_oracle(height)?;
        Ok(match check.witness {
            Some(better) if pair_key(&better) <= pair_key(&pair) => better,
            _ => pair,
        })
    }
}

/// Larger tree first.
fn ordered_pair(a: Tree, b: Tree) -> (Tree, Tree) {
    if size_key(&a) >= size_key(&b) {
        (a, b)
    } else {
        (b, a)
    }
}

fn pair_key(pair: &(Tree, Tree)) -> (usize, &Tree, &Tree) {
    (pair.0.size() + pair.1.size(), &pair.0, &pair.1)
}

/// Ambiguity of the tiling grammar via the symbol-split automaton.
fn tiling_grammar_ambiguous(classes: &[ImageClass]) -> bool {
    const ROOT: usize = 0;
    struct SplitRule {
        label: Label,
        children: Vec<usize>,
        target: usize,
    }
    let mut rules = Vec::new();
    let mut next_state = 1;
    for class in classes {
        let mut ids: HashMap<Position, usize> = HashMap::new();
        for p in class.image.positions() {
            if !p.is_root() && !matches!(class.image.get(&p).map(Tree::label), Some(Label::Var(_))) {
                ids.insert(p, next_state);
                next_state += 1;
            }
        }
        for p in class.image.positions() {
            let node = class.image.get(&p).expect("own position");
            if matches!(node.label(), Label::Var(_)) {
                continue;
            }
            let children = (1..=node.arity()).map(|i| ids.get(&p.child(i)).copied().unwrap_or(ROOT)).collect();
            let target = if p.is_root() { ROOT } else { ids[&p] };
            rules.push(SplitRule { label: node.label().clone(), children, target });
        }
    }
    let mut reached: BTreeSet<(usize, usize, bool)> = BTreeSet::new();
    loop {
        let before = reached.len();
        for (i, r1) in rules.iter().enumerate() {
            for (j, r2) in rules.iter().enumerate() {
                if r1.label != r2.label || r1.children.len() != r2.children.len() {
                    continue;
                }
                let mut all_plain = true;
                let mut all_available = true;
                let mut some_diverged = false;
                for (&a, &b) in r1.children.iter().zip(&r2.children) {
                    let plain = reached.contains(&(a, b, false));
                    let diverged = reached.contains(&(a, b, true));
                    all_plain &= plain;
                    all_available &= plain || diverged;
                    some_diverged |= diverged;
                }
                if !all_available {
                    continue;
                }
                if i == j && all_plain {
                    reached.insert((r1.target, r2.target, false));
                }
                if i != j || some_diverged {
                    reached.insert((r1.target, r2.target, true));
                }
            }
        }
        if reached.contains(&(ROOT, ROOT, true)) {
            return true;
        }
        if reached.len() == before {
            return false;
        }
    }
}

#[derive(Clone)]
struct NarrowingState {
    subst: HashMap<u32, Tree>,
    resolved: Vec<u32>,
    vars: Vec<u32>,
    next: u32,
}

struct Solution {
    state: NarrowingState,
    left: Vec<u32>,
    right: Vec<u32>,
}

impl Solution {
    fn value(&self, var: u32, ground: &Tree) -> Tree {
        resolve(&self.state.subst, &Tree::var(var)).replace_leaves(&mut |l| match l {
            Label::Var(_) => Some(ground.clone()),
            _ => None,
        })
    }
}

struct Narrowing<'a> {
    classes: &'a [ImageClass],
    budget: usize,
    exhausted: bool,
}

impl Narrowing<'_> {
    fn solve(&mut self, u: &ImageClass, v: &ImageClass) -> Option<Solution> {
        let mut state = NarrowingState { subst: HashMap::new(), resolved: Vec::new(), vars: Vec::new(), next: 1 };
        let (left_term, left) = instantiate(&u.image, u.rank, &mut state);
        let (right_term, right) = instantiate(&v.image, v.rank, &mut state);
        if !unify(&left_term, &right_term, &mut state.subst) {
            return None;
        }
        self.search(state, 0).map(|state| Solution { state, left, right })
    }

    fn search(&mut self, state: NarrowingState, depth: usize) -> Option<NarrowingState> {
        if self.budget == 0 {
            self.exhausted = true;
            return None;
        }
        self.budget -= 1;
        let Some((var, value)) = pending(&state) else {
            return Some(state);
        };
        if depth == NARROWING_DEPTH {
            self.exhausted = true;
            return None;
        }
        for class in self.classes {
            if class.image.label() != value.label() || class.image.arity() != value.arity() {
                continue;
            }
            let mut next = state.clone();
            let (pattern, _) = instantiate(&class.image, class.rank, &mut next);
            if unify(&value, &pattern, &mut next.subst) {
                next.resolved.push(var);
                if let Some(found) = self.search(next, depth + 1) {
                    return Some(found);
                }
            }
        }
        None
    }
}

/// First unknown bound to a non-variable term whose membership in `h(T_Σ)`
/// is not yet established.
fn pending(state: &NarrowingState) -> Option<(u32, Tree)> {
    let resolved_values: Vec<Tree> = state.resolved.iter().map(|&w| resolve(&state.subst, &Tree::var(w))).collect();
    state.vars.iter().find_map(|&v| {
        if state.resolved.contains(&v) {
            return None;
        }
        let value = resolve(&state.subst, &Tree::var(v));
        if matches!(value.label(), Label::Var(_)) || resolved_values.contains(&value) {
            return None;
        }
        Some((v, value))
    })
}

/// Renames `x1..xk` of an image to fresh unknowns.
fn instantiate(image: &Tree, rank: usize, state: &mut NarrowingState) -> (Tree, Vec<u32>) {
    let fresh: Vec<u32> = (0..rank as u32).map(|i| state.next + i).collect();
    state.next += rank as u32;
    state.vars.extend(&fresh);
    let term = image.replace_leaves(&mut |l| match l {
        Label::Var(i) => Some(Tree::var(fresh[*i as usize - 1])),
        _ => None,
    });
    (term, fresh)
}

fn walk<'a>(subst: &'a HashMap<u32, Tree>, t: &'a Tree) -> &'a Tree {
    let mut current = t;
    while let Label::Var(v) = current.label() {
        match subst.get(v) {
            Some(next) => current = next,
            None => break,
        }
    }
    current
}

fn resolve(subst: &HashMap<u32, Tree>, t: &Tree) -> Tree {
    let t = walk(subst, t);
    if t.is_leaf() {
        return t.clone();
    }
    Tree::new(t.label().clone(), t.children().iter().map(|c| resolve(subst, c)).collect())
}

fn occurs(subst: &HashMap<u32, Tree>, var: u32, t: &Tree) -> bool {
    let t = walk(subst, t);
    match t.label() {
        Label::Var(v) => *v == var,
        _ => t.children().iter().any(|c| occurs(subst, var, c)),
    }
}

fn unify(a: &Tree, b: &Tree, subst: &mut HashMap<u32, Tree>) -> bool {
    let a = walk(subst, a).clone();
    let b = walk(subst, b).clone();
    match (a.label(), b.label()) {
        (Label::Var(x), Label::Var(y)) if x == y => true,
        (Label::Var(x), _) => {
            if occurs(subst, *x, &b) {
                return false;
            }
            subst.insert(*x, b.clone());
            true
        }
        (_, Label::Var(_)) => unify(&b, &a, subst),
        (la, lb) => {
            la == lb && a.arity() == b.arity() && a.children().iter().zip(b.children()).all(|(c, d)| unify(c, d, subst))
        }
    }
}
