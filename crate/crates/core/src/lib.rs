//! Weighted tree automata over the rationals, tree homomorphisms, and a
//! decision procedure for regularity of homomorphic images of weighted tree
//! languages under tetris-free homomorphisms.

pub mod decide;
pub mod field;
pub mod fixtures;
pub mod hatldp;
pub mod hom;
pub mod syntax;
pub mod terms;
pub mod wta;
pub mod wtah;

#[cfg(test)]
mod testgen;

pub use decide::{decide_hom, linearize, linearize_checked, Certificate, DecideError, DecideOptions, Decision};
pub use field::{FieldError, Rational};
pub use hatldp::{
    build_hat_wta, decide_ldp, validate_hat_preconditions, HatAutomaton, HatError, LdpReport, LdpWitness,
};
pub use hom::{HomError, Homomorphism, TetrisCheck};
pub use syntax::{parse_document, parse_hom, parse_term, parse_wtah, parse_wtg, Document, ParseError};
pub use terms::{Label, Position, RankedAlphabet, State, Symbol, TermError, Tree};
pub use wta::{GrammarRule, WtaError, Wtg, ZeroCheck};
pub use wtah::{hom_image, ConstrainedRule, Target, Wtah, WtahError};
