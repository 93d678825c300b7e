//! Parametric benchmark families.
//!
//! Each family is produced twice: as surface text for the CLI and as an AST
//! built directly with the formula constructors. The two are checked against
//! each other in tests.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::formula::{Formula, Var};
use crate::trees::Position;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Pt,
    Cnst,
    Sub,
    Horn,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Pt, Family::Cnst, Family::Sub, Family::Horn];

    pub fn min_n(self) -> usize {
        match self {
            Family::Sub => 2,
            _ => 1,
        }
    }

    fn check(self, n: usize) -> Result<()> {
        if n < self.min_n() {
            return Err(Error::InvalidArgument(format!("{self} needs n >= {}", self.min_n())));
        }
        Ok(())
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Pt => "pt",
            Family::Cnst => "cnst",
            Family::Sub => "sub",
            Family::Horn => "horn",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Family> {
        Family::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown family {s:?}")))
    }
}

fn lr(n: usize) -> String {
    "LR".repeat(n)
}

fn names(prefix: &str, range: std::ops::RangeInclusive<usize>) -> Vec<String> {
    range.map(|i| format!("{prefix}{i}")).collect()
}

fn edge_text(a: &str, b: &str) -> String {
    format!("((ex2 Z: Z = S1({a}) & Z sub {b}) | (ex2 Z: Z = S2({a}) & Z sub {b}))")
}

/// Surface text of the `n`-th member of `family`.
pub fn gen_text(family: Family, n: usize) -> Result<String> {
    family.check(n)?;
    Ok(match family {
        Family::Pt => {
            let xs = names("X", 1..=n);
            let mut parts = vec![edge_text("Z1", &xs[0])];
            parts.extend(xs.windows(2).map(|w| edge_text(&w[0], &w[1])));
            parts.push(edge_text(&xs[n - 1], "Z2"));
            format!("all2 Z1, Z2: ex2 {}: {}", xs.join(", "), parts.join(" & "))
        }
        Family::Cnst => format!("ex2 X: X = {{{}}} & X = {{{}}}", lr(4), lr(n)),
        Family::Sub => {
            let xs = names("X", 1..=n);
            let parts: Vec<String> = xs
                .windows(2)
                .map(|w| format!("({} sub X => ({} = S1(X) | {} = S2(X)))", w[0], w[1], w[1]))
                .collect();
            format!("all2 {}: ex2 X: {}", xs.join(", "), parts.join(" & "))
        }
        Family::Horn => {
            if n == 1 {
                "ex2 X: all2 X1: X1 sub X1".to_string()
            } else {
                let xs = names("X", 1..=n);
                let parts: Vec<String> = xs
                    .windows(2)
                    .map(|w| format!("(({a} sub X & {a} ~= {b}) => {b} sub X)", a = w[0], b = w[1]))
                    .collect();
                format!("ex2 X: all2 X1: ex2 {}: {}", xs[1..].join(", "), parts.join(" & "))
            }
        }
    })
}

fn fresh(prefix: &str, range: std::ops::RangeInclusive<usize>) -> Vec<Var> {
    names(prefix, range).iter().map(|s| Var::fresh(s)).collect()
}

/// `edge(X, Y)`: some successor of an element of `X` lies in `Y`.
pub fn edge(a: &Var, b: &Var) -> Formula {
    let side = |right: bool| {
        let z = Var::fresh("Z");
        let succ = if right {
            Formula::SuccRight(z.clone(), a.clone())
        } else {
            Formula::SuccLeft(z.clone(), a.clone())
        };
        Formula::exists([z.clone()], Formula::and(succ, Formula::Subseteq(z, b.clone())))
    };
    Formula::or(side(false), side(true))
}

fn conj(parts: Vec<Formula>) -> Formula {
    Formula::conjunction(parts).expect("at least one conjunct")
}

/// The `n`-th member of `family` as a (sugared) AST.
pub fn gen_family(family: Family, n: usize) -> Result<Formula> {
    family.check(n)?;
    let pos = |k: usize| lr(k).parse::<Position>().expect("valid position");
    Ok(match family {
        Family::Pt => {
            let zs = fresh("Z", 1..=2);
            let xs = fresh("X", 1..=n);
            let mut parts = vec![edge(&zs[0], &xs[0])];
            parts.extend(xs.windows(2).map(|w| edge(&w[0], &w[1])));
            parts.push(edge(&xs[n - 1], &zs[1]));
            Formula::forall(zs, Formula::exists(xs, conj(parts)))
        }
        Family::Cnst => {
            let x = Var::fresh("X");
            Formula::exists(
                [x.clone()],
                Formula::and(Formula::EqPos(x.clone(), pos(4)), Formula::EqPos(x, pos(n))),
            )
        }
        Family::Sub => {
            let xs = fresh("X", 1..=n);
            let x = Var::fresh("X");
            let parts = xs
                .windows(2)
                .map(|w| {
                    Formula::implies(
                        Formula::Subseteq(w[0].clone(), x.clone()),
                        Formula::or(
                            Formula::SuccLeft(w[1].clone(), x.clone()),
                            Formula::SuccRight(w[1].clone(), x.clone()),
                        ),
                    )
                })
                .collect();
            Formula::forall(xs, Formula::exists([x], conj(parts)))
        }
        Family::Horn => {
            let x = Var::fresh("X");
            let xs = fresh("X", 1..=n);
            let body = if n == 1 {
                Formula::Subseteq(xs[0].clone(), xs[0].clone())
            } else {
                let parts = xs
                    .windows(2)
                    .map(|w| {
                        Formula::implies(
                            Formula::and(
                                Formula::Subseteq(w[0].clone(), x.clone()),
                                Formula::SetNeq(w[0].clone(), w[1].clone()),
                            ),
                            Formula::Subseteq(w[1].clone(), x.clone()),
                        )
                    })
                    .collect();
                Formula::exists(xs[1..].to_vec(), conj(parts))
            };
            Formula::exists([x], Formula::forall([xs[0].clone()], body))
        }
    })
}
