//! Parsed input files, keyed by object name.

use std::collections::BTreeMap;
use std::path::Path;

use treehom_core::{parse_document, Document, Homomorphism, Wtah, Wtg};

use crate::CliError;

fn kind(doc: &Document) -> &'static str {
    match doc {
        Document::Wtg(_) => "wtg",
        Document::Wtah(_) => "wtah",
        Document::Hom(_) => "hom",
    }
}

#[derive(Default, Debug)]
pub struct Workspace {
    pub grammars: BTreeMap<String, Wtg>,
    pub automata: BTreeMap<String, Wtah>,
    pub homs: BTreeMap<String, Homomorphism>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn read(path: &Path) -> Result<Document, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        parse_document(&text).map_err(|source| CliError::Parse { path: path.into(), source })
    }

    fn claim(&self, name: &str) -> Result<(), CliError> {
        if self.grammars.contains_key(name) || self.automata.contains_key(name) || self.homs.contains_key(name) {
            return Err(CliError::DuplicateName { name: name.to_string() });
        }
        Ok(())
    }

    /// Loads any block kind.
    pub fn load(&mut self, path: &Path) -> Result<String, CliError> {
        let doc = Self::read(path)?;
        let name = match &doc {
            Document::Wtg(g) => g.name().to_string(),
            Document::Wtah(m) => m.name().to_string(),
            Document::Hom(h) => h.name().to_string(),
        };
        self.claim(&name)?;
        match doc {
            Document::Wtg(g) => self.grammars.insert(name.clone(), g).map(|_| ()),
            Document::Wtah(m) => self.automata.insert(name.clone(), m).map(|_| ()),
            Document::Hom(h) => self.homs.insert(name.clone(), h).map(|_| ()),
        };
        Ok(name)
    }

    pub fn load_wtg(&mut self, path: &Path) -> Result<Wtg, CliError> {
        match Self::read(path)? {
            Document::Wtg(g) => {
                self.claim(g.name())?;
                self.grammars.insert(g.name().to_string(), g.clone());
                Ok(g)
            }
            other => Err(CliError::WrongKind { path: path.into(), expected: "wtg", found: kind(&other) }),
        }
    }

    pub fn load_wtah(&mut self, path: &Path) -> Result<Wtah, CliError> {
        match Self::read(path)? {
            Document::Wtah(m) => {
                self.claim(m.name())?;
                self.automata.insert(m.name().to_string(), m.clone());
                Ok(m)
            }
            other => Err(CliError::WrongKind { path: path.into(), expected: "wtah", found: kind(&other) }),
        }
    }

    pub fn load_hom(&mut self, path: &Path) -> Result<Homomorphism, CliError> {
        match Self::read(path)? {
            Document::Hom(h) => {
                self.claim(h.name())?;
                self.homs.insert(h.name().to_string(), h.clone());
                Ok(h)
            }
            other => Err(CliError::WrongKind { path: path.into(), expected: "hom", found: kind(&other) }),
        }
    }

    /// Every symbol of `a` must be a source symbol of `h` with the same rank.
    pub fn check_pair(a: &Wtg, h: &Homomorphism) -> Result<(), CliError> {
        for (symbol, rank) in a.alphabet().iter() {
            match h.source().rank(symbol) {
                Some(r) if r == rank => {}
                Some(r) => {
                    return Err(CliError::AlphabetMismatch(format!(
                        "`{symbol}` has rank {rank} in {} but rank {r} in {}",
                        a.name(),
                        h.name()
                    )))
                }
                None => {
                    return Err(CliError::AlphabetMismatch(format!(
                        "`{symbol}` of {} has no image under {}",
                        a.name(),
                        h.name()
                    )))
                }
            }
        }
        Ok(())
    }
}
