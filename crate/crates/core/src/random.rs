//! Random formulae for differential testing.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::formula::{Formula, Var};
use crate::trees::Position;

#[derive(Clone, Copy, Debug)]
pub struct RandomConfig {
    /// Total number of variables, free and bound.
    pub vars: usize,
    pub max_quantifiers: usize,
    /// Upper bound on [`Formula::size`] of the result.
    pub max_size: usize,
    /// Longest position in `X = {p}` atoms.
    pub max_pos_len: usize,
    /// Allow `=>`, `all2`, `=` and `~=` in the output.
    pub sugar: bool,
}

impl Default for RandomConfig {
    fn default() -> RandomConfig {
        RandomConfig { vars: 3, max_quantifiers: 2, max_size: 12, max_pos_len: 1, sugar: true }
    }
}

struct Gen<'a, R> {
    rng: &'a mut R,
    cfg: RandomConfig,
    quantifiers_left: usize,
    vars_left: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn pick(&mut self, scope: &[Var]) -> Var {
        scope.choose(self.rng).expect("non-empty scope").clone()
    }

    fn atom(&mut self, scope: &[Var]) -> Formula {
        let (x, y) = (self.pick(scope), self.pick(scope));
        match self.rng.gen_range(0..if self.cfg.sugar { 8 } else { 6 }) {
            0 => Formula::Subseteq(x, y),
            1 => Formula::SuccLeft(x, y),
            2 => Formula::SuccRight(x, y),
            3 => Formula::Sing(x),
            4 => {
                if self.cfg.max_pos_len == 0 || self.rng.gen_bool(0.5) {
                    Formula::EqEpsilon(x)
                } else {
                    let len = self.rng.gen_range(1..=self.cfg.max_pos_len);
                    let p: String = (0..len).map(|_| if self.rng.gen_bool(0.5) { 'L' } else { 'R' }).collect();
                    Formula::EqPos(x, p.parse::<Position>().expect("valid position"))
                }
            }
            5 => Formula::Subseteq(x, y),
            6 => Formula::SetEq(x, y),
            _ => Formula::SetNeq(x, y),
        }
    }

    /// A formula of size at most `budget` (at least 1).
    fn formula(&mut self, scope: &mut Vec<Var>, budget: usize) -> Formula {
        if budget <= 1 || self.rng.gen_bool(0.2) {
            return self.atom(scope);
        }
        let quantify = self.quantifiers_left > 0 && self.vars_left > 0;
        let choice = self.rng.gen_range(0..if quantify { 6 } else { 4 });
        match choice {
            0 => Formula::not(self.formula(scope, budget - 1)),
            1..=3 if budget >= 3 => {
                let left = self.rng.gen_range(1..budget - 1);
                let a = self.formula(scope, left);
                let b = self.formula(scope, budget - 1 - left);
                match choice {
                    1 => Formula::and(a, b),
                    2 => Formula::or(a, b),
                    _ if self.cfg.sugar => Formula::implies(a, b),
                    _ => Formula::and(a, b),
                }
            }
            4 | 5 => {
                self.quantifiers_left -= 1;
                self.vars_left -= 1;
                let v = Var::fresh(["X", "Y", "Z", "W"][scope.len() % 4]);
                scope.push(v.clone());
                let body = self.formula(scope, budget - 1);
                scope.pop();
                if choice == 5 && self.cfg.sugar {
                    Formula::forall([v], body)
                } else {
                    Formula::exists([v], body)
                }
            }
            _ => self.atom(scope),
        }
    }
}

/// A random formula whose bound variables are pairwise distinct and distinct
/// from its free variables.
pub fn random_formula<R: Rng>(rng: &mut R, cfg: RandomConfig) -> Formula {
    assert!(cfg.vars >= 1, "need at least one variable");
    let free_count = rng.gen_range(1..=cfg.vars);
    let free: Vec<Var> = (0..free_count).map(|i| Var::fresh(["A", "B", "C", "D"][i % 4])).collect();
    let mut gen = Gen { rng, cfg, quantifiers_left: cfg.max_quantifiers, vars_left: cfg.vars - free_count };
    let mut scope = free;
    gen.formula(&mut scope, cfg.max_size.max(1))
}
