//! Tree homomorphisms `h : T_Σ → T_Δ` given by images `h(σ) ∈ T_Δ(X_k)`.

mod tetris;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::terms::{size_key, Label, RankedAlphabet, Symbol, TermError, Tree};

pub use tetris::TetrisCheck;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HomError {
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("no image given for symbol `{0}`")]
    MissingImage(String),
    #[error("image of `{0}` given but the symbol is not in the source alphabet")]
    UnknownSymbol(String),
    #[error("image of `{symbol}` (rank {rank}) uses variable x{var}")]
    VariableOutOfRange { symbol: String, var: u32, rank: usize },
    #[error("image of `{symbol}` contains `{label}`")]
    ForeignLabel { symbol: String, label: String },
    #[error("homomorphism is erasing: image of `{0}` is a variable")]
    Erasing(String),
    #[error("homomorphism is deleting: image of `{0}` does not use every variable")]
    Deleting(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HomProperties {
    pub nonerasing: bool,
    pub nondeleting: bool,
}

/// Symbols sharing one image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageClass {
    pub image: Tree,
    pub rank: usize,
    /// Sorted; the first one is the class representative.
    pub symbols: Vec<Symbol>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Homomorphism {
    name: String,
    source_name: String,
    target_name: String,
    source: RankedAlphabet,
    target: RankedAlphabet,
    images: BTreeMap<Symbol, Tree>,
}

impl Homomorphism {
    /// Builds `h` from images. The target alphabet is `target` extended by
    /// the symbols the images use.
    pub fn new(
        name: impl Into<String>,
        source: RankedAlphabet,
        target: RankedAlphabet,
        images: BTreeMap<Symbol, Tree>,
    ) -> Result<Self, HomError> {
        let mut target = target;
        for symbol in images.keys() {
            if !source.contains(symbol) {
                return Err(HomError::UnknownSymbol(symbol.to_string()));
            }
        }
        for (symbol, rank) in source.iter() {
            let image = images.get(symbol).ok_or_else(|| HomError::MissingImage(symbol.to_string()))?;
            let mut problem = None;
            image.visit(&mut |t| match t.label() {
                Label::Sym(_) => {}
                Label::Var(i) if t.is_leaf() => {
                    if (*i as usize) < 1 || *i as usize > rank {
                        problem.get_or_insert(HomError::VariableOutOfRange {
                            symbol: symbol.to_string(),
                            var: *i,
                            rank,
                        });
                    }
                }
                other => {
                    problem
                        .get_or_insert(HomError::ForeignLabel { symbol: symbol.to_string(), label: other.to_string() });
                }
            });
            if let Some(p) = problem {
                return Err(p);
            }
            target.merge(&image.symbol_alphabet()?)?;
            image.check_ranked(&target)?;
        }
        Ok(Homomorphism {
            name: name.into(),
            source_name: "Sigma".into(),
            target_name: "Delta".into(),
            source,
            target,
            images,
        })
    }

    pub fn with_alphabet_names(mut self, source: impl Into<String>, target: impl Into<String>) -> Self {
        self.source_name = source.into();
        self.target_name = target.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn source(&self) -> &RankedAlphabet {
        &self.source
    }

    pub fn target(&self) -> &RankedAlphabet {
        &self.target
    }

    pub fn images(&self) -> &BTreeMap<Symbol, Tree> {
        &self.images
    }

    pub fn image(&self, symbol: &Symbol) -> Option<&Tree> {
        self.images.get(symbol)
    }

    /// `h(s)`.
    pub fn apply(&self, s: &Tree) -> Result<Tree, HomError> {
        let Label::Sym(symbol) = s.label() else {
            return Err(HomError::Term(TermError::UnknownSymbol(s.label().to_string())));
        };
        let image = self.images.get(symbol).ok_or_else(|| TermError::UnknownSymbol(symbol.to_string()))?;
        if self.source.rank(symbol) != Some(s.arity()) {
            return Err(TermError::ArityMismatch {
                name: symbol.to_string(),
                rank: self.source.rank(symbol).unwrap_or(0),
                found: s.arity(),
            }
            .into());
        }
        let children = s.children().iter().map(|c| self.apply(c)).collect::<Result<Vec<_>, _>>()?;
        Ok(image.replace_leaves(&mut |l| match l {
            Label::Var(i) => children.get(*i as usize - 1).cloned(),
            _ => None,
        }))
    }

    pub fn properties(&self) -> HomProperties {
        let nonerasing = self.images.values().all(|u| !matches!(u.label(), Label::Var(_)));
        let nondeleting = self.source.iter().all(|(s, rank)| {
            let vars = self.images[s].vars();
            vars.len() == rank && vars.iter().all(|&i| i as usize <= rank)
        });
        HomProperties { nonerasing, nondeleting }
    }

    /// Fails unless `h` is nondeleting and nonerasing.
    pub fn require_nondeleting_nonerasing(&self) -> Result<(), HomError> {
        for (s, rank) in self.source.iter() {
            let u = &self.images[s];
            if matches!(u.label(), Label::Var(_)) {
                return Err(HomError::Erasing(s.to_string()));
            }
            if u.vars().len() != rank {
                return Err(HomError::Deleting(s.to_string()));
            }
        }
        Ok(())
    }

    /// True when every image is a single symbol applied to `x1, …, xk` in order.
    pub fn is_symbol_to_symbol(&self) -> bool {
        self.images.values().all(|u| {
            matches!(u.label(), Label::Sym(_))
                && u.children().iter().enumerate().all(|(i, c)| c.label() == &Label::Var(i as u32 + 1))
        })
    }

    /// Groups symbols by image, ordered by image.
    pub fn image_classes(&self) -> Vec<ImageClass> {
        let mut classes: BTreeMap<&Tree, ImageClass> = BTreeMap::new();
        for (symbol, image) in &self.images {
            classes
                .entry(image)
                .or_insert_with(|| ImageClass {
                    image: image.clone(),
                    rank: self.source.rank(symbol).unwrap_or(0),
                    symbols: Vec::new(),
                })
                .symbols
                .push(symbol.clone());
        }
        classes.into_values().collect()
    }

    /// `h⁻¹(t)`, sorted by size and term order.
    pub fn preimages(&self, t: &Tree) -> Result<Vec<Tree>, HomError> {
        self.require_nondeleting_nonerasing()?;
        let classes = self.image_classes();
        let mut memo = HashMap::new();
        let mut out = preimages_memo(&classes, t, &mut memo);
        out.sort_by(|a, b| size_key(a).cmp(&size_key(b)));
        Ok(out)
    }
}

/// Matches an image against `t`, binding variables; repeated variables must
/// bind equal subtrees.
pub(crate) fn match_image<'t>(image: &Tree, t: &'t Tree, bound: &mut BTreeMap<u32, &'t Tree>) -> bool {
    match image.label() {
        Label::Var(i) => match bound.get(i) {
            Some(existing) => *existing == t,
            None => {
                bound.insert(*i, t);
                true
            }
        },
        label => {
            label == t.label()
                && image.arity() == t.arity()
                && image.children().iter().zip(t.children()).all(|(u, c)| match_image(u, c, bound))
        }
    }
}

fn preimages_memo(classes: &[ImageClass], t: &Tree, memo: &mut HashMap<Tree, Vec<Tree>>) -> Vec<Tree> {
    if let Some(found) = memo.get(t) {
        return found.clone();
    }
    let mut out = Vec::new();
    for class in classes {
        let mut bound = BTreeMap::new();
        if !match_image(&class.image, t, &mut bound) {
            continue;
        }
        let mut tuples: Vec<Vec<Tree>> = vec![Vec::new()];
        for i in 1..=class.rank as u32 {
            let sub = preimages_memo(classes, bound[&i], memo);
            let mut next = Vec::with_capacity(tuples.len() * sub.len());
            for prefix in &tuples {
                for s in &sub {
                    let mut v = prefix.clone();
                    v.push(s.clone());
                    next.push(v);
                }
            }
            tuples = next;
        }
        for symbol in &class.symbols {
            for children in &tuples {
                out.push(Tree::new(Label::Sym(symbol.clone()), children.clone()));
            }
        }
    }
    memo.insert(t.clone(), out.clone());
    out
}

impl fmt::Display for Homomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "hom {} : {} -> {} {{", self.name, self.source_name, self.target_name)?;
        for (symbol, image) in &self.images {
            let rank = self.source.rank(symbol).unwrap_or(0);
            let implied = image.vars().iter().next_back().copied().unwrap_or(0) as usize;
            if rank == implied {
                writeln!(f, "  {symbol} -> {image};")?;
            } else {
                writeln!(f, "  {symbol}/{rank} -> {image};")?;
            }
        }
        write!(f, "}}")
    }
}
