use super::*;
use crate::formula::{Formula, Var};
use crate::semantics::satisfies;
use crate::trees::{decode, enumerate_trees, Position};

fn xy() -> (Var, Var, Alphabet) {
    let (x, y) = (Var::fresh("X"), Var::fresh("Y"));
    let ab = Alphabet::new([x.clone(), y.clone()]).unwrap();
    (x, y, ab)
}

fn sym(ab: &Alphabet, on: &[&Var]) -> Symbol {
    Symbol(ab.mask(on.iter().copied()))
}

fn agrees_with_oracle(a: &TreeAutomaton, f: &Formula, depth: usize) -> usize {
    let trees = enumerate_trees(a.alphabet(), depth, 1_000_000).unwrap();
    for t in &trees {
        let alpha = decode(t, a.alphabet());
        assert_eq!(
            a.membership(t),
            satisfies(&alpha, f, depth).unwrap(),
            "{f} on\n{}",
            t.to_debug_string(a.alphabet())
        );
    }
    trees.len()
}

#[test]
fn sing_matches_example_table() {
    let (x, _, ab) = xy();
    let a = base_automaton(&Formula::Sing(x.clone()), &ab).unwrap();
    let st = |n| a.state_by_name(n).unwrap();
    let (q0, q1, qs) = (st("q0"), st("q1"), st("qs"));
    let x1 = sym(&ab, &[&x]);
    assert_eq!(a.delta(q0, q0, x1), &[q1]);
    assert_eq!(a.delta(q0, q0, Symbol::ZERO), &[q0]);
    assert_eq!(a.delta(q0, q1, Symbol::ZERO), &[q1]);
    assert_eq!(a.delta(q1, q0, Symbol::ZERO), &[q1]);
    assert_eq!(a.delta(q1, q1, Symbol::ZERO), &[qs]);
    assert_eq!(a.delta(q0, q1, x1), &[qs]);
    assert_eq!(a.leaves(), &[q0]);
    assert_eq!(a.roots().collect::<Vec<_>>(), vec![q1]);
    assert!(a.is_deterministic() && a.is_complete());
}

#[test]
fn epsilon_matches_example_table() {
    let (x, y, ab) = xy();
    let a = base_automaton(&Formula::EqEpsilon(x.clone()), &ab).unwrap();
    let st = |n| a.state_by_name(n).unwrap();
    let (p0, p1, ps) = (st("p0"), st("p1"), st("ps"));
    assert_eq!(a.delta(p0, p0, Symbol::ZERO), &[p0]);
    assert_eq!(a.delta(p0, p0, sym(&ab, &[&x])), &[p1]);
    assert_eq!(a.delta(p0, p0, sym(&ab, &[&x, &y])), &[p1]);
    assert_eq!(a.delta(p1, p0, Symbol::ZERO), &[ps]);
    assert_eq!(a.roots().collect::<Vec<_>>(), vec![p1]);
}

#[test]
fn base_automata_agree_with_oracle() {
    let (x, y, ab) = xy();
    let atoms = [
        Formula::Sing(x.clone()),
        Formula::EqEpsilon(x.clone()),
        Formula::Subseteq(x.clone(), y.clone()),
        Formula::SuccLeft(x.clone(), y.clone()),
        Formula::SuccRight(x.clone(), y.clone()),
        Formula::EqPos(x.clone(), "LR".parse().unwrap()),
        Formula::EqPos(x.clone(), "R".parse().unwrap()),
        Formula::Subseteq(x.clone(), x.clone()),
        Formula::SuccLeft(x.clone(), x.clone()),
    ];
    for f in &atoms {
        let a = base_automaton(f, &ab).unwrap();
        assert!(a.is_deterministic() && a.is_complete(), "{f}");
        assert!(agrees_with_oracle(&a, f, 2) > 100);
    }
}

#[test]
fn product_sizes_and_example_composition() {
    let (x, _, ab) = xy();
    let s = base_automaton(&Formula::Sing(x.clone()), &ab).unwrap();
    let e = base_automaton(&Formula::EqEpsilon(x.clone()), &ab).unwrap();
    let i = s.intersect(&e).unwrap();
    assert_eq!(i.num_states(), 9);
    assert!(!i.membership(&Tree::Leaf));
    let u = s.union(&s).unwrap();
    let f = Formula::Sing(x.clone());
    agrees_with_oracle(&u, &f, 2);
    let trees = enumerate_trees(&ab, 2, 10_000).unwrap();
    // De Morgan: ¬(A ∩ B) = ¬A ∪ ¬B
    let lhs = i.complement().unwrap();
    let rhs = s.complement().unwrap().union(&e.complement().unwrap()).unwrap();
    for t in &trees {
        assert_eq!(lhs.membership(t), rhs.membership(t));
    }
}

#[test]
fn mismatched_alphabets_are_rejected() {
    let (x, _, ab) = xy();
    let other = Alphabet::new([x.clone()]).unwrap();
    let a = base_automaton(&Formula::Sing(x.clone()), &ab).unwrap();
    let b = base_automaton(&Formula::Sing(x.clone()), &other).unwrap();
    assert_eq!(a.intersect(&b), Err(Error::AlphabetMismatch));
}

#[test]
fn complement_properties() {
    let (x, _, ab) = xy();
    let s = base_automaton(&Formula::Sing(x.clone()), &ab).unwrap();
    assert_eq!(s.complement().unwrap().complement().unwrap(), s);
    assert!(s.complement().unwrap().membership(&Tree::Leaf));
    agrees_with_oracle(&s.complement().unwrap(), &Formula::not(Formula::Sing(x.clone())), 2);
    let p = s.project(ab.bit(&x)).unwrap();
    assert_eq!(p.complement(), Err(Error::Precondition("deterministic")));
}

#[test]
fn projection_of_epsilon() {
    let (x, _, ab) = xy();
    let e = base_automaton(&Formula::EqEpsilon(x.clone()), &ab).unwrap();
    assert_eq!(e.project(0).unwrap(), e);
    let p = e.project(ab.bit(&x)).unwrap();
    let (p0, p1) = (p.state_by_name("p0").unwrap(), p.state_by_name("p1").unwrap());
    assert_eq!(p.delta(p0, p0, Symbol::ZERO), &[p0, p1]);
    assert_eq!(p.support(), 0);
}

#[test]
fn projection_language() {
    // π_X(X = S1(Y)) accepts exactly the trees where some X works, i.e.
    // those where every Y-position's left child exists
    let (x, y, ab) = xy();
    let f = Formula::SuccLeft(x.clone(), y.clone());
    let a = base_automaton(&f, &ab).unwrap();
    let d = a.project(ab.bit(&x)).unwrap().determinize().unwrap();
    assert!(d.is_deterministic() && d.is_complete());
    let g = Formula::exists([x.clone()], f);
    for t in enumerate_trees(&ab, 2, 10_000).unwrap() {
        // witnesses may need one level below the tree
        let alpha = decode(&t, &ab);
        let sat = satisfies(&alpha, &g, t.depth() + 1).unwrap();
        assert_eq!(d.zero_derivative().membership(&t), sat);
    }
}

#[test]
fn determinize_deterministic_input() {
    let (x, y, ab) = xy();
    let a = base_automaton(&Formula::Subseteq(x, y), &ab).unwrap();
    let d = a.determinize().unwrap();
    assert_eq!(d.num_states(), 2);
    assert!(d.is_deterministic() && d.is_complete());
}

#[test]
fn empty_subset_is_a_sink() {
    let (x, _, ab) = xy();
    let a = TreeAutomaton::from_fn(ab.clone(), ab.bit(&x), 2, vec![0], vec![false, true], |q, r, s| {
        if q == 0 && r == 0 && s != 0 { vec![1] } else { vec![] }
    })
    .unwrap();
    assert!(!a.is_complete());
    let d = a.determinize().unwrap();
    assert!(d.is_complete());
    let t = Tree::node(Symbol::ZERO, Tree::Leaf, Tree::Leaf);
    let empty = d.run(&t)[0];
    for s in 0..d.num_states() as State {
        assert_eq!(d.delta(empty, s, Symbol::ZERO), &[empty]);
        assert_eq!(d.delta(s, empty, Symbol(ab.bit(&x))), &[empty]);
    }
}

#[test]
fn zero_derivative_of_example() {
    let (x, _, ab) = xy();
    let s = base_automaton(&Formula::Sing(x.clone()), &ab).unwrap();
    let e = base_automaton(&Formula::EqEpsilon(x.clone()), &ab).unwrap();
    let p = s.intersect(&e).unwrap().project(ab.bit(&x)).unwrap();
    let z = p.zero_derivative();
    // pairs are numbered q·3 + p
    assert!(z.leaves().contains(&0));
    assert!(z.leaves().contains(&(3 + 1)));
    assert_eq!(z.zero_derivative(), z);
    assert!(!z.is_empty());
}

#[test]
fn zero_derivative_without_zero_moves() {
    let (x, _, ab) = xy();
    let a = TreeAutomaton::from_fn(ab.clone(), ab.bit(&x), 2, vec![0], vec![true, false], |_, _, _| vec![1])
        .unwrap();
    assert_eq!(a.zero_derivative().leaves(), a.reach_by(a.leaves(), Some(0)).as_slice());
    assert_eq!(a.zero_derivative().leaves(), &[0, 1]);
    let b = TreeAutomaton::from_fn(ab.clone(), ab.bit(&x), 2, vec![0], vec![true, false], |_, _, s| {
        if s == 0 { vec![] } else { vec![1] }
    })
    .unwrap();
    assert_eq!(b.zero_derivative().leaves(), &[0]);
}

#[test]
fn emptiness_matches_enumeration() {
    use rand::{Rng, SeedableRng};
    let x = Var::fresh("X");
    let ab = Alphabet::new([x.clone()]).unwrap();
    let trees = enumerate_trees(&ab, 3, 1_000_000).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    for _ in 0..200 {
        let n = rng.gen_range(1..4usize);
        let table: Vec<Vec<State>> = (0..n * n * 2)
            .map(|_| (0..n as State).filter(|_| rng.gen_bool(0.3)).collect())
            .collect();
        let roots = (0..n).map(|_| rng.gen_bool(0.3)).collect();
        let a = TreeAutomaton::from_fn(ab.clone(), ab.full_mask(), n, vec![0], roots, |q, r, s| {
            table[(q as usize * n + r as usize) * 2 + s as usize].clone()
        })
        .unwrap();
        // with at most 3 states every non-empty language has a witness of depth <= 3
        let found = trees.iter().any(|t| a.membership(t));
        assert_eq!(!a.is_empty(), found);
    }
}

#[test]
fn reach_is_monotone_and_bounded() {
    let (x, y, ab) = xy();
    let a = base_automaton(&Formula::EqPos(x, "LRL".parse::<Position>().unwrap()), &ab).unwrap();
    let all = a.reach(a.leaves());
    assert!(all.len() <= a.num_states());
    assert_eq!(a.reach(&all), all);
    let _ = y;
}

#[test]
fn trim_keeps_language() {
    let (x, y, ab) = xy();
    let s = base_automaton(&Formula::Sing(x.clone()), &ab).unwrap();
    let i = base_automaton(&Formula::Subseteq(x.clone(), y.clone()), &ab).unwrap();
    let full = s.intersect(&i).unwrap();
    let trimmed = full.trim().unwrap();
    let reach = s.product_reachable(&i, true, Limits::default()).unwrap();
    assert!(trimmed.num_states() <= full.num_states());
    assert_eq!(reach.num_states(), trimmed.num_states());
    for t in enumerate_trees(&ab, 2, 10_000).unwrap() {
        assert_eq!(full.membership(&t), trimmed.membership(&t));
        assert_eq!(full.membership(&t), reach.membership(&t));
    }
}

#[test]
fn limits_are_enforced() {
    let (x, _, ab) = xy();
    let s = base_automaton(&Formula::Sing(x.clone()), &ab).unwrap();
    let tiny = Limits { max_states: 2, max_transitions: 1000, deadline: None };
    assert!(matches!(s.product_reachable(&s, true, tiny), Err(Error::ResourceLimit(_))));
}

#[test]
fn dump_format() {
    let (x, _, ab) = xy();
    let s = base_automaton(&Formula::Sing(x.clone()), &ab).unwrap();
    let d = s.dump();
    let lines: Vec<&str> = d.lines().collect();
    assert_eq!(lines[0], "support X");
    assert_eq!(lines[1], "states q0 q1 qs");
    assert_eq!(lines[2], "leaves q0");
    assert_eq!(lines[3], "roots q1");
    assert_eq!(lines[4], "q0 q0 0 -> q0");
    assert_eq!(lines[5], "q0 q0 1 -> q1");
    assert_eq!(lines.len(), 4 + 9 * 2);
}

#[test]
fn bit_scatter_roundtrip() {
    for mask in [0u64, 0b1011, 0xF0F0, 0x3F00_0000_0000_0001] {
        for local in 0..16u32 {
            let local = local & ((1u32 << mask.count_ones()) - 1);
            assert_eq!(pext(pdep(local, mask), mask), local);
        }
    }
}

#[test]
fn minimize_keeps_language() {
    use rand::{Rng, SeedableRng};
    let x = Var::fresh("X");
    let ab = Alphabet::new([x.clone()]).unwrap();
    let trees = enumerate_trees(&ab, 3, 1_000_000).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    for _ in 0..200 {
        let n = rng.gen_range(1..6usize);
        let table: Vec<State> = (0..n * n * 2).map(|_| rng.gen_range(0..n as State)).collect();
        let roots = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        let leaves = vec![rng.gen_range(0..n as State), rng.gen_range(0..n as State)];
        let a = TreeAutomaton::from_fn(ab.clone(), ab.full_mask(), n, leaves, roots, |q, r, s| {
            vec![table[(q as usize * n + r as usize) * 2 + s as usize]]
        })
        .unwrap();
        let m = a.minimize().unwrap();
        assert!(m.num_states() <= n && m.is_functional());
        assert_eq!(m.minimize().unwrap().num_states(), m.num_states());
        for t in &trees {
            assert_eq!(a.membership(t), m.membership(t));
        }
    }
}

#[test]
fn minimize_collapses_products() {
    let (x, y, ab) = xy();
    let s = base_automaton(&Formula::Subseteq(x.clone(), y.clone()), &ab).unwrap();
    let p = s.intersect(&s).unwrap();
    assert_eq!(p.num_states(), 4);
    assert_eq!(p.minimize().unwrap().num_states(), 2);
    let sing = base_automaton(&Formula::Sing(x), &ab).unwrap();
    let nd = sing.project(ab.full_mask()).unwrap();
    assert!(matches!(nd.minimize(), Err(Error::Precondition(_))));
}

#[test]
fn accepted_trees_are_accepted_and_minimal() {
    let (x, y, ab) = xy();
    for f in [
        Formula::Sing(x.clone()),
        Formula::SuccLeft(x.clone(), y.clone()),
        Formula::EqPos(x.clone(), "LR".parse().unwrap()),
        Formula::Subseteq(x.clone(), y.clone()),
    ] {
        let a = base_automaton(&f, &ab).unwrap();
        let t = a.accepted_tree().unwrap();
        assert!(a.membership(&t), "{f}");
        // nothing lower is accepted
        if t.depth() > 0 {
            let lower = enumerate_trees(&ab, t.depth() - 1, 1_000_000).unwrap();
            assert!(lower.iter().all(|s| !a.membership(s)), "{f}");
        }
    }
    let none = base_automaton(&Formula::Sing(x), &ab).unwrap().complement().unwrap();
    let both = base_automaton(&Formula::Sing(y), &ab).unwrap().intersect(&none).unwrap();
    assert!(both.accepted_tree().is_some());
    let empty = none.intersect(&none.complement().unwrap()).unwrap();
    assert_eq!(empty.accepted_tree(), None);
}
