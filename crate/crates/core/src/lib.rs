//! Decision procedures for WS2S, the weak monadic second-order theory of
//! two successors.

pub mod classical;
pub mod crosscheck;
pub mod error;
pub mod families;
pub mod formula;
pub mod lazy;
pub mod parser;
pub mod random;
pub mod semantics;
pub mod terms;
pub mod tautomata;
pub mod trees;

use std::fmt;

pub use error::{Error, Result};
pub use formula::{Formula, Var, VarSet};
pub use trees::{Alphabet, Assignment, Position, Symbol, Tree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Sat,
    Unsat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Validity {
    Valid,
    Invalid,
}

impl Verdict {
    /// Validity of `φ` given the satisfiability verdict of `¬φ`.
    pub fn negated_validity(self) -> Validity {
        match self {
            Verdict::Sat => Validity::Invalid,
            Verdict::Unsat => Validity::Valid,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Sat => "SAT",
            Verdict::Unsat => "UNSAT",
        })
    }
}

impl fmt::Display for Validity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Validity::Valid => "VALID",
            Validity::Invalid => "INVALID",
        })
    }
}
