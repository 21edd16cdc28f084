//! Text formats: terms, `wtg`, `wtah` and `hom` blocks.
//!
//! ```text
//! wtg A over Q {
//!   alphabet alpha:0, psi:2;
//!   states q, qf;
//!   final qf: 1;
//!   rule alpha -> q @ 1;
//!   rule psi(q,q) -> qf @ 1/2;
//! }
//! ```
//!
//! `#` at a token boundary starts a line comment. A symbol may be written
//! raw as `[...]` or `<...>`; whitespace inside is dropped.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::field::Rational;
use crate::hom::{HomError, Homomorphism};
use crate::terms::{Label, Position, RankedAlphabet, State, Symbol, TermError, Tree, BOT, BOX};
use crate::wta::{GrammarRule, WtaError, Wtg};
use crate::wtah::{ConstrainedRule, Target, Wtah, WtahError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Wta(#[from] WtaError),
    #[error(transparent)]
    Hom(#[from] HomError),
    #[error(transparent)]
    Wtah(#[from] WtahError),
}

/// Any of the three block kinds.
#[derive(Clone, Debug)]
pub enum Document {
    Wtg(Wtg),
    Wtah(Wtah),
    Hom(Homomorphism),
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '\'' | '#' | '~' | '.')
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor { text, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let before = &self.text[..self.pos];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        ParseError::Syntax { line, column, message: message.into() }
    }

    fn skip_ws(&mut self) {
        loop {
            let rest = self.rest();
            let trimmed = rest.trim_start();
            self.pos += rest.len() - trimmed.len();
            if trimmed.starts_with('#') {
                self.pos += trimmed.find('\n').unwrap_or(trimmed.len());
            } else {
                return;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), ParseError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{token}`")))
        }
    }

    fn peek_word(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let end = rest.find(|c: char| !is_word_char(c)).unwrap_or(rest.len());
        (end > 0).then(|| &rest[..end])
    }

    fn word(&mut self) -> Result<&'a str, ParseError> {
        let w = self.peek_word().ok_or_else(|| self.error("expected a name"))?;
        self.pos += w.len();
        Ok(w)
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if self.peek_word() == Some(kw) {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    /// A symbol name: a word or a raw bracketed token.
    fn name(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(open @ ('[' | '<')) => {
                let close = if open == '[' { ']' } else { '>' };
                let mut depth = 0usize;
                let rest = self.rest();
                for (i, c) in rest.char_indices() {
                    if c == open {
                        depth += 1;
                    } else if c == close {
                        depth -= 1;
                        if depth == 0 {
                            let raw: String = rest[..=i].chars().filter(|c| !c.is_whitespace()).collect();
                            self.pos += i + 1;
                            return Ok(raw);
                        }
                    }
                }
                Err(self.error(format!("unclosed `{open}`")))
            }
            _ => Ok(self.word()?.to_string()),
        }
    }

    fn term(&mut self) -> Result<Tree, ParseError> {
        let name = self.name()?;
        let mut children = Vec::new();
        if self.eat("(") {
            loop {
                children.push(self.term()?);
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        let label = match name.as_str() {
            BOT => Label::Bot,
            BOX => Label::Hole,
            _ => match name.strip_prefix('x').and_then(|d| d.parse::<u32>().ok()) {
                Some(i) if name[1..].bytes().all(|b| b.is_ascii_digit()) => Label::Var(i),
                _ => Label::Sym(Symbol::new(&name)),
            },
        };
        if !children.is_empty() && !matches!(label, Label::Sym(_)) {
            return Err(self.error(format!("`{name}` cannot have children")));
        }
        Ok(Tree::new(label, children))
    }

    fn weight(&mut self) -> Result<Rational, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let negative = self.eat("-");
        if !negative {
            self.eat("+");
        }
        let numer = self.word()?;
        let mut text = format!("{}{numer}", if negative { "-" } else { "" });
        if self.eat("/") {
            text.push('/');
            text.push_str(self.word()?);
        }
        text.parse().map_err(|e| {
            self.pos = start;
            self.error(format!("bad weight `{text}`: {e}"))
        })
    }

    fn name_list(&mut self) -> Result<Vec<String>, ParseError> {
        let mut names = vec![self.name()?];
        while self.eat(",") {
            names.push(self.name()?);
        }
        Ok(names)
    }

    fn alphabet(&mut self, into: &mut RankedAlphabet) -> Result<(), ParseError> {
        loop {
            let symbol = self.name()?;
            self.expect(":")?;
            let rank = self.word()?;
            let rank: usize = rank.parse().map_err(|_| self.error(format!("bad rank `{rank}`")))?;
            into.insert(Symbol::new(symbol), rank)?;
            if !self.eat(",") {
                return Ok(());
            }
        }
    }

    fn finals(&mut self, into: &mut BTreeMap<State, Rational>) -> Result<(), ParseError> {
        loop {
            let q = State::new(self.name()?);
            let w = if self.eat(":") { self.weight()? } else { Rational::one() };
            into.insert(q, w);
            if !self.eat(",") {
                return Ok(());
            }
        }
    }

    fn header(&mut self, kind: &str) -> Result<String, ParseError> {
        if !self.keyword(kind) {
            return Err(self.error(format!("expected `{kind}`")));
        }
        let name = self.name()?;
        if !self.keyword("over") {
            return Err(self.error("expected `over`"));
        }
        self.word()?;
        self.expect("{")?;
        Ok(name)
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error("unexpected trailing input"))
        }
    }
}

/// Turns leaves named after declared states into state labels.
fn resolve_states(t: &Tree, states: &BTreeSet<State>) -> Tree {
    t.replace_leaves(&mut |l| match l {
        Label::Sym(s) if states.contains(&State::new(s.as_str())) => Some(Tree::leaf(Label::state(s.as_str()))),
        _ => None,
    })
}

/// Parses a single tree.
pub fn parse_term(text: &str) -> Result<Tree, ParseError> {
    let mut c = Cursor::new(text);
    let t = c.term()?;
    c.finish()?;
    Ok(t)
}

pub fn parse_wtg(text: &str) -> Result<Wtg, ParseError> {
    let mut c = Cursor::new(text);
    let g = wtg_block(&mut c)?;
    c.finish()?;
    Ok(g)
}

fn wtg_block(c: &mut Cursor<'_>) -> Result<Wtg, ParseError> {
    let name = c.header("wtg")?;
    let mut alphabet = RankedAlphabet::new();
    let mut states = Vec::new();
    let mut finals = BTreeMap::new();
    let mut raw = Vec::new();
    while !c.eat("}") {
        if c.keyword("alphabet") {
            c.alphabet(&mut alphabet)?;
        } else if c.keyword("states") {
            states.extend(c.name_list()?.into_iter().map(State::new));
        } else if c.keyword("final") {
            c.finals(&mut finals)?;
        } else if c.keyword("rule") {
            let lhs = c.term()?;
            c.expect("->")?;
            let target = State::new(c.name()?);
            let weight = if c.eat("@") { c.weight()? } else { Rational::one() };
            raw.push((lhs, target, weight));
        } else {
            return Err(c.error("expected `alphabet`, `states`, `final`, `rule` or `}`"));
        }
        c.expect(";")?;
    }
    let declared: BTreeSet<State> = states.iter().cloned().collect();
    let rules = raw
        .into_iter()
        .map(|(lhs, target, weight)| GrammarRule::new(resolve_states(&lhs, &declared), target, weight))
        .collect();
    Ok(Wtg::new(name, alphabet, states, rules, finals)?)
}

pub fn parse_wtah(text: &str) -> Result<Wtah, ParseError> {
    let mut c = Cursor::new(text);
    let m = wtah_block(&mut c)?;
    c.finish()?;
    Ok(m)
}

fn wtah_block(c: &mut Cursor<'_>) -> Result<Wtah, ParseError> {
    let name = c.header("wtah")?;
    let mut alphabet = RankedAlphabet::new();
    let mut states = Vec::new();
    let mut finals = BTreeMap::new();
    let mut raw = Vec::new();
    while !c.eat("}") {
        if c.keyword("alphabet") {
            c.alphabet(&mut alphabet)?;
        } else if c.keyword("states") {
            states.extend(c.name_list()?.into_iter().map(State::new));
        } else if c.keyword("sink") {
            let sink = c.name()?;
            if sink != BOT {
                return Err(c.error(format!("the sink is spelled `{BOT}`")));
            }
        } else if c.keyword("final") {
            c.finals(&mut finals)?;
        } else if c.keyword("rule") {
            let lhs = c.term()?;
            let mut classes = Vec::new();
            if c.eat("[") {
                loop {
                    let mut class = Vec::new();
                    loop {
                        let w = c.word()?;
                        class.push(w.parse::<Position>().map_err(|e| c.error(e.to_string()))?);
                        if !c.eat("=") {
                            break;
                        }
                    }
                    classes.push(class);
                    if c.eat("]") {
                        break;
                    }
                    c.expect(",")?;
                }
            }
            c.expect("->")?;
            let target = match c.name()?.as_str() {
                BOT => Target::Bot,
                q => Target::State(State::new(q)),
            };
            let weight = if c.eat("@") { c.weight()? } else { Rational::one() };
            raw.push((lhs, classes, target, weight));
        } else {
            return Err(c.error("expected `alphabet`, `states`, `sink`, `final`, `rule` or `}`"));
        }
        c.expect(";")?;
    }
    let declared: BTreeSet<State> = states.iter().cloned().collect();
    let rules = raw
        .into_iter()
        .map(|(lhs, classes, target, weight)| {
            ConstrainedRule::new(resolve_states(&lhs, &declared), target, classes, weight)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Wtah::new(name, alphabet, states, finals, rules)?)
}

pub fn parse_hom(text: &str) -> Result<Homomorphism, ParseError> {
    let mut c = Cursor::new(text);
    let h = hom_block(&mut c)?;
    c.finish()?;
    Ok(h)
}

fn hom_block(c: &mut Cursor<'_>) -> Result<Homomorphism, ParseError> {
    if !c.keyword("hom") {
        return Err(c.error("expected `hom`"));
    }
    let name = c.name()?;
    c.expect(":")?;
    let source_name = c.name()?;
    c.expect("->")?;
    let target_name = c.name()?;
    c.expect("{")?;
    let mut declared_source = RankedAlphabet::new();
    let mut target = RankedAlphabet::new();
    let mut ranks = RankedAlphabet::new();
    let mut images = BTreeMap::new();
    while !c.eat("}") {
        let save = c.pos;
        let kw = c.peek_word();
        if matches!(kw, Some("source" | "target")) {
            c.word()?;
            if c.peek() != Some('-') && c.peek() != Some('/') {
                if kw == Some("source") {
                    c.alphabet(&mut declared_source)?;
                } else {
                    c.alphabet(&mut target)?;
                }
                c.expect(";")?;
                continue;
            }
            c.pos = save;
        }
        let symbol = Symbol::new(c.name()?);
        let explicit = if c.eat("/") {
            let w = c.word()?;
            Some(w.parse::<usize>().map_err(|_| c.error(format!("bad rank `{w}`")))?)
        } else {
            None
        };
        c.expect("->")?;
        let image = c.term()?;
        let rank = explicit.unwrap_or_else(|| image.vars().iter().next_back().copied().unwrap_or(0) as usize);
        ranks.insert(symbol.clone(), rank)?;
        if images.insert(symbol.clone(), image).is_some() {
            return Err(c.error(format!("second image for `{symbol}`")));
        }
        c.expect(";")?;
    }
    for (symbol, rank) in declared_source.iter() {
        ranks.insert(symbol.clone(), rank)?;
    }
    Ok(Homomorphism::new(name, ranks, target, images)?.with_alphabet_names(source_name, target_name))
}

pub fn parse_document(text: &str) -> Result<Document, ParseError> {
    let mut c = Cursor::new(text);
    let doc = match c.peek_word() {
        Some("wtg") => Document::Wtg(wtg_block(&mut c)?),
        Some("wtah") => Document::Wtah(wtah_block(&mut c)?),
        Some("hom") => Document::Hom(hom_block(&mut c)?),
        _ => return Err(c.error("expected `wtg`, `wtah` or `hom`")),
    };
    c.finish()?;
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terms_and_raw_symbols() {
        let t = parse_term("[f(BOT, BOT,BOT)](a,[g(a,BOT)](a))").unwrap();
        assert_eq!(t.to_string(), "[f(BOT,BOT,BOT)](a,[g(a,BOT)](a))");
        assert_eq!(t.arity(), 2);
        assert_eq!(parse_term("f(x2, BOX)").unwrap().children()[0].label(), &Label::Var(2));
        assert!(parse_term("f(a,").is_err());
        assert!(parse_term("BOT(a)").is_err());
    }

    #[test]
    fn error_location() {
        let err = parse_wtg("wtg A over Q {\n  states q;\n  rule a => q;\n}").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 3, .. }), "{err}");
    }

    #[test]
    fn comments_only_at_boundaries() {
        let g = parse_wtg("wtg A over Q { # header\n states q#1; final q#1: -1/2; rule a -> q#1 @ 3; }").unwrap();
        assert_eq!(g.states()[0].as_str(), "q#1");
        assert_eq!(g.final_weight(&State::new("q#1")), Rational::new(-1, 2).unwrap());
    }

    #[test]
    fn wtg_roundtrip() {
        let text = "wtg A over Q { alphabet alpha:0, psi:2; states q, qf; final qf: 1;
                    rule alpha -> q @ 1; rule psi(q,q) -> qf @ 2/3; }";
        let g = parse_wtg(text).unwrap();
        let again = parse_wtg(&g.to_string()).unwrap();
        assert_eq!(g.to_string(), again.to_string());
        assert_eq!(g.rules()[1].lhs.children()[0].label(), &Label::state("q"));
    }

    #[test]
    fn wtah_roundtrip() {
        let text = "wtah M over Q { states q, qf; sink BOT; final qf, q: 2;
                    rule f(q, g(a,q), g(a,BOT)) [1=3.2] -> qf @ -2; rule a -> q; rule a -> BOT @ 1; }";
        let m = parse_wtah(text).unwrap();
        assert_eq!(m.rules()[0].constraints(), &[vec!["1".parse().unwrap(), "3.2".parse().unwrap()]]);
        let again = parse_wtah(&m.to_string()).unwrap();
        assert_eq!(m.to_string(), again.to_string());
    }

    #[test]
    fn hom_ranks_and_keywords() {
        let h = parse_hom(
            "hom h : Sigma -> Delta { source c:1; target a:0; alpha -> a; psi/2 -> f(x2, x1, x1); c -> g(x1); }",
        )
        .unwrap();
        assert_eq!(h.source().rank(&Symbol::new("psi")), Some(2));
        assert_eq!(h.source().rank(&Symbol::new("alpha")), Some(0));
        let text = h.to_string();
        assert_eq!(parse_hom(&text).unwrap(), h);
        let named = parse_hom("hom h : S -> D { source -> a; }").unwrap();
        assert!(named.source().contains(&Symbol::new("source")));
    }

    #[test]
    fn documents() {
        assert!(matches!(parse_document("hom h : S -> D { a -> b; }"), Ok(Document::Hom(_))));
        assert!(matches!(parse_document("wtah m over Q { }"), Ok(Document::Wtah(_))));
        assert!(parse_document("automaton").is_err());
    }
}
