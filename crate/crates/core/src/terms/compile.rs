use super::{Engine, Saturator, TermId};
use crate::error::Result;
use crate::tautomata::{pext, State, TreeAutomaton};
use crate::trees::subsets_of;
use rustc_hash::FxHashMap;

/// The explicit automaton denoted by a set term: states are the terms
/// reachable from its elements, leaves are the elements and roots are the
/// terms satisfying `rt`.
pub fn compile<S: Saturator>(e: &mut Engine<S>, a: TermId) -> Result<TreeAutomaton> {
    let elems = e.store().elems(a).to_vec();
    let support = e.store().support(a);
    let symbols: Vec<u64> = subsets_of(support).collect();
    let states = e.reach(&elems, &symbols)?;
    let index: FxHashMap<TermId, State> = states.iter().enumerate().map(|(i, &t)| (t, i as State)).collect();
    let n = states.len();
    let mut table = Vec::with_capacity(n * n * symbols.len());
    for &q in &states {
        for &r in &states {
            for &sym in &symbols {
                let succ: Vec<State> = e.delta(q, r, sym)?.iter().map(|t| index[t]).collect();
                table.push(succ);
            }
        }
    }
    let mut roots = Vec::with_capacity(n);
    for &t in &states {
        roots.push(e.rt(t)?);
    }
    let leaves = elems.iter().map(|t| index[t]).collect();
    let names = states.iter().map(|&t| e.store().display(t)).collect();
    let k = symbols.len();
    let a = TreeAutomaton::from_fn(e.store().alphabet().clone(), support, n, leaves, roots, |q, r, sym| {
        table[(q as usize * n + r as usize) * k + pext(sym, support) as usize].clone()
    })?;
    Ok(a.with_names(names))
}
