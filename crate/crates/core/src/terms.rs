//! Ranked alphabets, trees, positions and substitution.
//!
//! A single [`Tree`] type serves every layer of the crate: ground trees over
//! an alphabet, rule left-hand sides (leaves labelled by states or the sink),
//! homomorphism images (leaves labelled by variables) and multi-contexts
//! (leaves labelled by the hole). The [`Label`] enum keeps these namespaces
//! apart so a state can never be confused with a nullary symbol.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

/// Reserved spelling of the sink state.
pub const BOT: &str = "BOT";
/// Reserved spelling of the multi-context hole.
pub const BOX: &str = "BOX";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("position {position} is not a position of {tree}")]
    InvalidPosition { position: Position, tree: String },
    #[error("symbol `{0}` is reserved")]
    ReservedName(String),
    #[error("empty symbol name")]
    EmptyName,
    #[error("symbol `{name}` declared with rank {first} and {second}")]
    RankConflict { name: String, first: usize, second: usize },
    #[error("symbol `{0}` is not in the alphabet")]
    UnknownSymbol(String),
    #[error("symbol `{name}` has rank {rank} but is applied to {found} children")]
    ArityMismatch { name: String, rank: usize, found: usize },
    #[error("expected {expected} trees to fill the holes, got {found}")]
    HoleCount { expected: usize, found: usize },
    #[error("malformed position `{0}`")]
    MalformedPosition(String),
}

fn is_variable_name(name: &str) -> bool {
    name.strip_prefix('x').is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

/// True for names no alphabet may use.
pub fn is_reserved_name(name: &str) -> bool {
    name == BOT || name == BOX || is_variable_name(name)
}

macro_rules! name_type {
    ($(#[$meta:meta])* $Name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $Name(Arc<str>);

        impl $Name {
            pub fn new(name: impl AsRef<str>) -> Self {
                $Name(Arc::from(name.as_ref()))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl From<&str> for $Name {
            fn from(s: &str) -> Self {
                $Name::new(s)
            }
        }

        impl From<String> for $Name {
            fn from(s: String) -> Self {
                $Name(Arc::from(s))
            }
        }

        impl fmt::Display for $Name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $Name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

name_type!(
    /// An alphabet symbol.
    Symbol
);
name_type!(
    /// An automaton state (never the sink, which is [`Label::Bot`]).
    State
);

/// Node label of a [`Tree`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Sym(Symbol),
    State(State),
    /// Variable `x_i`, 1-based.
    Var(u32),
    /// The sink state.
    Bot,
    /// The hole of a (multi-)context.
    Hole,
}

impl Label {
    pub fn sym(name: impl AsRef<str>) -> Self {
        Label::Sym(Symbol::new(name))
    }

    pub fn state(name: impl AsRef<str>) -> Self {
        Label::State(State::new(name))
    }

    pub fn as_symbol(&self) -> Option<&Symbol> {
        match self {
            Label::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_state(&self) -> Option<&State> {
        match self {
            Label::State(q) => Some(q),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<u32> {
        match self {
            Label::Var(i) => Some(*i),
            _ => None,
        }
    }

    /// States and the sink.
    pub fn is_state_like(&self) -> bool {
        matches!(self, Label::State(_) | Label::Bot)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Sym(s) => write!(f, "{s}"),
            Label::State(q) => write!(f, "{q}"),
            Label::Var(i) => write!(f, "x{i}"),
            Label::Bot => f.write_str(BOT),
            Label::Hole => f.write_str(BOX),
        }
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A tree address: 1-based child indices from the root. `ε` is the empty path.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Position(Vec<usize>);

impl Position {
    pub fn root() -> Self {
        Position(Vec::new())
    }

    pub fn from_path(path: impl Into<Vec<usize>>) -> Self {
        Position(path.into())
    }

    pub fn path(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, index: usize) -> Self {
        let mut path = self.0.clone();
        path.push(index);
        Position(path)
    }

    /// `self · other`.
    pub fn concat(&self, other: &Position) -> Self {
        let mut path = self.0.clone();
        path.extend_from_slice(&other.0);
        Position(path)
    }

    pub fn is_prefix_of(&self, other: &Position) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Orders by length first, then lexicographically.
    pub fn length_lex_cmp(&self, other: &Position) -> std::cmp::Ordering {
        self.len().cmp(&other.len()).then_with(|| self.cmp(other))
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("e");
        }
        for (i, step) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{step}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Position {
    type Err = TermError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text = s.trim();
        if text == "e" || text.is_empty() {
            return Ok(Position::root());
        }
        text.split('.')
            .map(|part| match part.parse::<usize>() {
                Ok(i) if i >= 1 => Ok(i),
                _ => Err(TermError::MalformedPosition(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Position)
    }
}

/// Finite map from symbol to rank.
#[derive(Clone, PartialEq, Eq, Hash, Default, Debug)]
pub struct RankedAlphabet {
    ranks: BTreeMap<Symbol, usize>,
}

impl RankedAlphabet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, usize)>) -> Result<Self, TermError> {
        let mut alphabet = Self::new();
        for (name, rank) in pairs {
            alphabet.insert(Symbol::new(name), rank)?;
        }
        Ok(alphabet)
    }

    /// Adds a symbol, rejecting reserved names and rank conflicts.
    pub fn insert(&mut self, symbol: Symbol, rank: usize) -> Result<(), TermError> {
        if symbol.as_str().is_empty() {
            return Err(TermError::EmptyName);
        }
        if is_reserved_name(symbol.as_str()) {
            return Err(TermError::ReservedName(symbol.to_string()));
        }
        match self.ranks.get(&symbol) {
            Some(&existing) if existing != rank => {
                Err(TermError::RankConflict { name: symbol.to_string(), first: existing, second: rank })
            }
            Some(_) => Ok(()),
            None => {
                self.ranks.insert(symbol, rank);
                Ok(())
            }
        }
    }

    pub fn rank(&self, symbol: &Symbol) -> Option<usize> {
        self.ranks.get(symbol).copied()
    }

    pub fn contains(&self, symbol: &Symbol) -> bool {
        self.ranks.contains_key(symbol)
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, usize)> + '_ {
        self.ranks.iter().map(|(s, &r)| (s, r))
    }

    pub fn symbols_of_rank(&self, rank: usize) -> impl Iterator<Item = &Symbol> + '_ {
        self.ranks.iter().filter(move |(_, &r)| r == rank).map(|(s, _)| s)
    }

    pub fn max_rank(&self) -> usize {
        self.ranks.values().copied().max().unwrap_or(0)
    }

    /// Adds every symbol of `other`.
    pub fn merge(&mut self, other: &RankedAlphabet) -> Result<(), TermError> {
        for (s, r) in other.iter() {
            self.insert(s.clone(), r)?;
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Node {
    label: Label,
    children: Vec<Tree>,
    height: usize,
    size: usize,
}

/// Immutable ranked tree with cheap clones.
///
/// Ordering is the lexicographic term order: label first, then children left
/// to right.
#[derive(Clone, Eq, PartialOrd, Ord)]
pub struct Tree(Arc<Node>);

impl std::hash::Hash for Tree {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

impl PartialEq for Tree {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Tree {
    pub fn new(label: Label, children: Vec<Tree>) -> Self {
        let height = children.iter().map(|c| c.height() + 1).max().unwrap_or(0);
        let size = 1 + children.iter().map(Tree::size).sum::<usize>();
        Tree(Arc::new(Node { label, children, height, size }))
    }

    pub fn leaf(label: Label) -> Self {
        Tree::new(label, Vec::new())
    }

    pub fn sym(name: impl AsRef<str>, children: Vec<Tree>) -> Self {
        Tree::new(Label::sym(name), children)
    }

    pub fn constant(name: impl AsRef<str>) -> Self {
        Tree::leaf(Label::sym(name))
    }

    pub fn state(name: impl AsRef<str>) -> Self {
        Tree::leaf(Label::state(name))
    }

    pub fn var(index: u32) -> Self {
        Tree::leaf(Label::Var(index))
    }

    pub fn bot() -> Self {
        Tree::leaf(Label::Bot)
    }

    pub fn hole() -> Self {
        Tree::leaf(Label::Hole)
    }

    /// Parses term syntax such as `f(a,g(a,a))`.
    pub fn parse(text: &str) -> Result<Tree, crate::syntax::ParseError> {
        crate::syntax::parse_term(text)
    }

    pub fn label(&self) -> &Label {
        &self.0.label
    }

    pub fn children(&self) -> &[Tree] {
        &self.0.children
    }

    pub fn arity(&self) -> usize {
        self.0.children.len()
    }

    pub fn is_leaf(&self) -> bool {
        self.0.children.is_empty()
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    pub fn size(&self) -> usize {
        self.0.size
    }

    /// Same pointer; a fast sufficient test for equality.
    pub fn ptr_eq(&self, other: &Tree) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// All positions in lexicographic order.
    pub fn positions(&self) -> Vec<Position> {
        let mut out = Vec::with_capacity(self.size());
        let mut path = Vec::new();
        self.collect_positions(&mut path, &mut |p, _| out.push(Position(p.to_vec())));
        out
    }

    /// Positions whose label satisfies `pred`, lexicographically ordered.
    pub fn positions_where(&self, mut pred: impl FnMut(&Label) -> bool) -> Vec<Position> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.collect_positions(&mut path, &mut |p, t| {
            if pred(t.label()) {
                out.push(Position(p.to_vec()));
            }
        });
        out
    }

    fn collect_positions(&self, path: &mut Vec<usize>, visit: &mut impl FnMut(&[usize], &Tree)) {
        visit(path, self);
        for (i, child) in self.children().iter().enumerate() {
            path.push(i + 1);
            child.collect_positions(path, visit);
            path.pop();
        }
    }

    pub fn get(&self, position: &Position) -> Option<&Tree> {
        let mut node = self;
        for &step in position.path() {
            node = node.children().get(step.checked_sub(1)?)?;
        }
        Some(node)
    }

    /// `t|_p`.
    pub fn subtree(&self, position: &Position) -> Result<&Tree, TermError> {
        self.get(position)
            .ok_or_else(|| TermError::InvalidPosition { position: position.clone(), tree: self.to_string() })
    }

    pub fn label_at(&self, position: &Position) -> Result<&Label, TermError> {
        self.subtree(position).map(Tree::label)
    }

    /// `t[t']_p`.
    pub fn substitute(&self, position: &Position, replacement: &Tree) -> Result<Tree, TermError> {
        self.substitute_path(position.path(), replacement)
            .ok_or_else(|| TermError::InvalidPosition { position: position.clone(), tree: self.to_string() })
    }

    fn substitute_path(&self, path: &[usize], replacement: &Tree) -> Option<Tree> {
        let Some((&first, rest)) = path.split_first() else {
            return Some(replacement.clone());
        };
        let index = first.checked_sub(1)?;
        let child = self.children().get(index)?;
        let new_child = child.substitute_path(rest, replacement)?;
        let mut children = self.children().to_vec();
        children[index] = new_child;
        Some(Tree::new(self.label().clone(), children))
    }

    /// Simultaneous replacement of variables; unmapped variables stay.
    pub fn apply_var_substitution(&self, theta: &BTreeMap<u32, Tree>) -> Tree {
        self.replace_leaves(&mut |label| match label {
            Label::Var(i) => theta.get(i).cloned(),
            _ => None,
        })
    }

    /// Rebuilds the tree, replacing every leaf for which `f` returns a tree.
    pub fn replace_leaves(&self, f: &mut impl FnMut(&Label) -> Option<Tree>) -> Tree {
        if self.is_leaf() {
            return f(self.label()).unwrap_or_else(|| self.clone());
        }
        let children = self.children().iter().map(|c| c.replace_leaves(f)).collect();
        Tree::new(self.label().clone(), children)
    }

    /// Relabels every node.
    pub fn map_labels(&self, f: &mut impl FnMut(&Label) -> Label) -> Tree {
        let children = self.children().iter().map(|c| c.map_labels(f)).collect();
        Tree::new(f(self.label()), children)
    }

    pub fn vars(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| {
            if let Label::Var(i) = t.label() {
                out.insert(*i);
            }
        });
        out
    }

    /// Preorder traversal.
    pub fn visit(&self, f: &mut impl FnMut(&Tree)) {
        f(self);
        for child in self.children() {
            child.visit(f);
        }
    }

    pub fn any_label(&self, pred: &mut impl FnMut(&Label) -> bool) -> bool {
        pred(self.label()) || self.children().iter().any(|c| c.any_label(pred))
    }

    /// Number of hole leaves.
    pub fn hole_count(&self) -> usize {
        self.positions_where(|l| matches!(l, Label::Hole)).len()
    }

    /// `C[t1,...,tn]`: fills the holes in lexicographic order.
    pub fn fill_holes(&self, fillers: &[Tree]) -> Result<Tree, TermError> {
        let expected = self.hole_count();
        if fillers.len() != expected {
            return Err(TermError::HoleCount { expected, found: fillers.len() });
        }
        let mut next = fillers.iter();
        Ok(self.replace_leaves(&mut |label| match label {
            Label::Hole => next.next().cloned(),
            _ => None,
        }))
    }

    /// `C[t]`: every hole receives the same tree.
    pub fn fill_holes_with(&self, filler: &Tree) -> Tree {
        self.replace_leaves(&mut |label| match label {
            Label::Hole => Some(filler.clone()),
            _ => None,
        })
    }

    /// Checks that every symbol node matches its rank. States, variables,
    /// the sink and holes must be leaves.
    pub fn check_ranked(&self, alphabet: &RankedAlphabet) -> Result<(), TermError> {
        match self.label() {
            Label::Sym(s) => {
                let rank = alphabet.rank(s).ok_or_else(|| TermError::UnknownSymbol(s.to_string()))?;
                if rank != self.arity() {
                    return Err(TermError::ArityMismatch { name: s.to_string(), rank, found: self.arity() });
                }
            }
            other => {
                if !self.is_leaf() {
                    return Err(TermError::ArityMismatch { name: other.to_string(), rank: 0, found: self.arity() });
                }
            }
        }
        self.children().iter().try_for_each(|c| c.check_ranked(alphabet))
    }

    /// Collects the symbols used, with the arity they are used at.
    pub fn symbol_alphabet(&self) -> Result<RankedAlphabet, TermError> {
        let mut alphabet = RankedAlphabet::new();
        let mut result = Ok(());
        self.visit(&mut |t| {
            if let Label::Sym(s) = t.label() {
                if let Err(e) = alphabet.insert(s.clone(), t.arity()) {
                    if result.is_ok() {
                        result = Err(e);
                    }
                }
            }
        });
        result.map(|_| alphabet)
    }

    /// Ground: only symbol labels.
    pub fn is_ground(&self) -> bool {
        !self.any_label(&mut |l| !matches!(l, Label::Sym(_)))
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())?;
        if !self.is_leaf() {
            f.write_str("(")?;
            for (i, child) in self.children().iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{child}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Sort key used wherever a canonical minimum is chosen: height, size, then
/// term order.
pub fn tree_key(t: &Tree) -> (usize, usize, &Tree) {
    (t.height(), t.size(), t)
}

/// Sort key by size, then term order.
pub fn size_key(t: &Tree) -> (usize, &Tree) {
    (t.size(), t)
}

/// Number of ground trees of height at most `max_height`, saturating.
pub fn count_trees(alphabet: &RankedAlphabet, max_height: usize) -> u128 {
    // up_to[h] = number of trees of height <= h
    let mut up_to: u128 = alphabet.symbols_of_rank(0).count() as u128;
    for _ in 0..max_height {
        let mut next: u128 = 0;
        for (_, rank) in alphabet.iter() {
            let mut term: u128 = 1;
            for _ in 0..rank {
                term = term.saturating_mul(up_to);
            }
            next = next.saturating_add(term);
        }
        up_to = next;
    }
    up_to
}

/// All ground trees of height at most `max_height`, ordered by height and
/// then by generation order (deterministic).
pub fn enumerate_trees(alphabet: &RankedAlphabet, max_height: usize) -> Vec<Tree> {
    let mut by_height: Vec<Vec<Tree>> = Vec::new();
    let mut all: Vec<Tree> = alphabet.symbols_of_rank(0).map(|s| Tree::leaf(Label::Sym(s.clone()))).collect();
    by_height.push(all.clone());
    for h in 1..=max_height {
        let mut level = Vec::new();
        for (symbol, rank) in alphabet.iter() {
            if rank == 0 {
                continue;
            }
            for_each_tuple(&all, rank, &mut |tuple| {
                // keep only tuples with a child of height exactly h - 1
                if tuple.iter().any(|c| c.height() == h - 1) {
                    level.push(Tree::new(Label::Sym(symbol.clone()), tuple.to_vec()));
                }
            });
        }
        all.extend(level.iter().cloned());
        by_height.push(level);
    }
    all
}

/// Calls `f` on every `k`-tuple over `items` in odometer order.
pub fn for_each_tuple<T: Clone>(items: &[T], k: usize, f: &mut impl FnMut(&[T])) {
    if k == 0 {
        f(&[]);
        return;
    }
    if items.is_empty() {
        return;
    }
    let mut idx = vec![0usize; k];
    let mut buf: Vec<T> = idx.iter().map(|&i| items[i].clone()).collect();
    loop {
        f(&buf);
        let mut pos = k;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < items.len() {
                buf[pos] = items[idx[pos]].clone();
                break;
            }
            idx[pos] = 0;
            buf[pos] = items[0].clone();
        }
    }
}

/// Postorder-indexed view of a tree with structural subtree identifiers, so
/// that subtree equality is an integer comparison.
pub(crate) struct IndexedTree<'a> {
    nodes: Vec<IndexedNode<'a>>,
}

pub(crate) struct IndexedNode<'a> {
    pub tree: &'a Tree,
    pub children: Vec<usize>,
    /// Equal for structurally equal subtrees.
    pub class: usize,
}

impl<'a> IndexedTree<'a> {
    pub fn new(tree: &'a Tree) -> Self {
        let mut nodes = Vec::with_capacity(tree.size());
        let mut classes: HashMap<(&'a Label, Vec<usize>), usize> = HashMap::new();
        Self::build(tree, &mut nodes, &mut classes);
        IndexedTree { nodes }
    }

    fn build(
        tree: &'a Tree,
        nodes: &mut Vec<IndexedNode<'a>>,
        classes: &mut HashMap<(&'a Label, Vec<usize>), usize>,
    ) -> usize {
        let children: Vec<usize> = tree.children().iter().map(|c| Self::build(c, nodes, classes)).collect();
        let key = (tree.label(), children.iter().map(|&c| nodes[c].class).collect::<Vec<_>>());
        let next = classes.len();
        let class = *classes.entry(key).or_insert(next);
        nodes.push(IndexedNode { tree, children, class });
        nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn node(&self, index: usize) -> &IndexedNode<'a> {
        &self.nodes[index]
    }

    /// Matches `pattern` (symbols must agree, state-like leaves bind) at
    /// `index`. Bound node indices are pushed in lexicographic order of the
    /// pattern's state-like positions.
    pub fn match_pattern(&self, pattern: &Tree, index: usize, bindings: &mut Vec<usize>) -> bool {
        let node = &self.nodes[index];
        match pattern.label() {
            Label::State(_) | Label::Bot => {
                bindings.push(index);
                true
            }
            label => {
                if label != node.tree.label() || pattern.arity() != node.children.len() {
                    return false;
                }
                pattern.children().iter().zip(&node.children).all(|(p, &c)| self.match_pattern(p, c, bindings))
            }
        }
    }
}
