//! Complete deterministic automata for the atomic predicates.

use super::{State, TreeAutomaton};
use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::trees::Alphabet;

fn named(a: TreeAutomaton, names: &[&str]) -> TreeAutomaton {
    a.with_names(names.iter().map(|s| s.to_string()).collect())
}

/// Returns a fresh automaton for `atom` over `alphabet`.
pub fn base_automaton(atom: &Formula, alphabet: &Alphabet) -> Result<TreeAutomaton> {
    let bit = |v| {
        let b = alphabet.bit(v);
        if b == 0 {
            return Err(Error::InvalidArgument(format!("variable {v} not in alphabet")));
        }
        Ok(b)
    };
    let ab = alphabet.clone();
    match atom {
        Formula::Sing(x) => {
            // q0 = 0, q1 = 1, qs = 2
            let x = bit(x)?;
            let a = TreeAutomaton::from_fn(ab, x, 3, vec![0], vec![false, true, false], |q, r, s| {
                let on = s & x != 0;
                vec![match (q, r, on) {
                    (0, 0, true) => 1,
                    (0, 0, false) => 0,
                    (0, 1, false) | (1, 0, false) => 1,
                    _ => 2,
                }]
            })?;
            Ok(named(a, &["q0", "q1", "qs"]))
        }
        Formula::EqEpsilon(x) => {
            // p0 = 0, p1 = 1, ps = 2
            let x = bit(x)?;
            let a = TreeAutomaton::from_fn(ab, x, 3, vec![0], vec![false, true, false], |q, r, s| {
                vec![match (q, r, s & x != 0) {
                    (0, 0, false) => 0,
                    (0, 0, true) => 1,
                    _ => 2,
                }]
            })?;
            Ok(named(a, &["p0", "p1", "ps"]))
        }
        Formula::Subseteq(x, y) => {
            let (x, y) = (bit(x)?, bit(y)?);
            let a = TreeAutomaton::from_fn(ab, x | y, 2, vec![0], vec![true, false], |q, r, s| {
                let bad = s & x != 0 && s & y == 0;
                vec![if q == 0 && r == 0 && !bad { 0 } else { 1 }]
            })?;
            Ok(named(a, &["ok", "sink"]))
        }
        Formula::SuccLeft(x, y) | Formula::SuccRight(x, y) => {
            // z0/z1 record whether the subtree root carries X
            let right = matches!(atom, Formula::SuccRight(..));
            let (x, y) = (bit(x)?, bit(y)?);
            let a = TreeAutomaton::from_fn(ab, x | y, 3, vec![0], vec![true, false, false], |q, r, s| {
                let (succ, other) = if right { (r, q) } else { (q, r) };
                let want = (s & y != 0) as State;
                vec![if succ == want && other == 0 { (s & x != 0) as State } else { 2 }]
            })?;
            Ok(named(a, &["z0", "z1", "sink"]))
        }
        Formula::EqPos(x, p) => {
            // zero = 0, f(i) = 1 + i after matching the last i steps of p, sink
            let x = bit(x)?;
            let path = p.as_bytes().to_vec();
            let len = path.len();
            let sink = len as State + 2;
            let mut roots = vec![false; len + 3];
            roots[len + 1] = true;
            let mut names = vec!["zero".to_string()];
            names.extend((0..=len).map(|i| format!("f{i}")));
            names.push("sink".into());
            let a = TreeAutomaton::from_fn(ab, x, len + 3, vec![0], roots, |q, r, s| {
                let on = s & x != 0;
                vec![match (q, r, on) {
                    (0, 0, false) => 0,
                    (0, 0, true) => 1,
                    (f, 0, false) if f >= 1 && f < sink && (f as usize) <= len => {
                        let i = f as usize - 1;
                        if path[len - 1 - i] == b'L' { f + 1 } else { sink }
                    }
                    (0, f, false) if f >= 1 && f < sink && (f as usize) <= len => {
                        let i = f as usize - 1;
                        if path[len - 1 - i] == b'R' { f + 1 } else { sink }
                    }
                    _ => sink,
                }]
            })?;
            Ok(a.with_names(names))
        }
        other => Err(Error::InvalidArgument(format!("not an atomic formula: {other}"))),
    }
}
