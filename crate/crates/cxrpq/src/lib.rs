//! Conjunctive xregex path queries over edge-labelled graph databases.
//!
//! Layering, bottom to top: [`automaton`] (classical regexes and NFAs),
//! [`xregex`] (syntax and classification), [`refwords`] (ref-word semantics),
//! [`conjunctive`] (conjunctive matches), [`normalform`], [`graphdb`]
//! (databases, CRPQ evaluation), [`eval`] (fragment evaluators and the
//! brute-force oracle), [`translate`] and [`reductions`].

pub mod automaton;
pub mod conjunctive;
pub mod eval;
pub mod graphdb;
pub mod normalform;
pub mod par;
pub mod reductions;
pub mod refwords;
pub mod translate;
pub mod xregex;

pub use conjunctive::{ConjunctiveMatch, SEPARATOR};
pub use graphdb::{AnswerSet, GraphDb, Mode, Query};
pub use refwords::{RefSymbol, RefWord, VariableMapping};
pub use xregex::{Alphabet, ConjunctiveXregex, VarId, Xregex};
