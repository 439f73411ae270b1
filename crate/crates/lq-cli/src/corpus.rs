//! Type-directed random generation of closed homogeneous ground terms.
//!
//! Terms are grown against a target sort, so every sample is well-sorted by
//! construction; all binder sorts come from a homogeneous palette, so every
//! sample is homogeneous; generation starts from the empty scope, so every
//! sample is closed. Rejection sampling over raw terms would essentially
//! never produce such terms.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lq_core::{parse_sort, Signature, Sort, Term};

#[derive(Debug, Clone)]
pub struct GenConfig {
    /// Largest order of any subterm sort.
    pub max_complexity: u32,
    /// Largest number of AST nodes per sample.
    pub max_size: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_complexity: 3,
            max_size: 30,
        }
    }
}

struct Gen<'a> {
    rng: ChaCha8Rng,
    sig: &'a Signature,
    cfg: &'a GenConfig,
    /// binder sorts available for redexes, by order
    palette: Vec<Sort>,
}

/// Deterministically generates `count` closed homogeneous terms of sort `o`.
pub fn generate(seed: u64, count: usize, sig: &Signature, cfg: &GenConfig) -> Vec<Term> {
    let palette: Vec<Sort> = [
        "o",
        "o->o",
        "o->o->o",
        "(o->o)->o",
        "(o->o)->o->o",
        "(o->o)->(o->o)",
    ]
    .iter()
    .map(|s| parse_sort(s).unwrap())
    .filter(|s| s.order() + 1 <= cfg.max_complexity)
    .collect();
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        sig,
        cfg,
        palette,
    };
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let budget = g.rng.gen_range(1..=cfg.max_size.saturating_sub(2).max(1));
        let mut fuel = budget;
        let term = g.term_of(&Sort::Base, &mut Vec::new(), &mut fuel, 0);
        if term.size() <= cfg.max_size {
            out.push(term);
        }
    }
    out
}

impl<'a> Gen<'a> {
    /// The cheapest closed completion of the target sort.
    fn minimal(&mut self, target: &Sort, scope: &mut Vec<(String, Sort)>) -> Term {
        // a variable of the right sort is free
        if let Some((name, sort)) = scope
            .iter()
            .filter(|(_, s)| s == target)
            .cloned()
            .collect::<Vec<_>>()
            .choose(&mut self.rng)
        {
            return Term::var(name, sort.clone());
        }
        let constant = self
            .sig
            .constants()
            .find(|(_, s)| *s == target)
            .map(|(n, _)| n.to_string());
        if let Some(name) = constant {
            return Term::constant(self.sig, &name).unwrap();
        }
        match target {
            Sort::Base => Term::constant(self.sig, "e").expect("ground constant"),
            Sort::Arrow(a, b) => {
                let x = self.fresh(scope);
                scope.push((x.clone(), (**a).clone()));
                let body = self.minimal(b, scope);
                scope.pop();
                Term::lam(&x, (**a).clone(), body)
            }
        }
    }

    fn fresh(&mut self, scope: &[(String, Sort)]) -> String {
        let mut i = scope.len();
        loop {
            let name = format!("x{}", i);
            if !scope.iter().any(|(n, _)| *n == name) && !self.sig.is_constant(&name) {
                return name;
            }
            i += 1;
        }
    }

    fn term_of(
        &mut self,
        target: &Sort,
        scope: &mut Vec<(String, Sort)>,
        fuel: &mut usize,
        depth: u32,
    ) -> Term {
        if *fuel == 0 || depth > 12 {
            return self.minimal(target, scope);
        }
        *fuel = fuel.saturating_sub(1);
        match target {
            Sort::Base => {
                // weighted choices: leaf, constant application, variable
                // application, redex
                let vars_of_target: Vec<(String, Sort)> = scope
                    .iter()
                    .filter(|(_, s)| s == target)
                    .cloned()
                    .collect();
                let fun_vars: Vec<(String, Sort)> = scope
                    .iter()
                    .filter(|(_, s)| matches!(s, Sort::Arrow(..)))
                    .cloned()
                    .collect();
                let roll = self.rng.gen_range(0u32..100);
                if roll < 12 {
                    self.minimal(target, scope)
                } else if roll < 24 && !vars_of_target.is_empty() {
                    let (n, s) = vars_of_target.choose(&mut self.rng).unwrap().clone();
                    Term::var(&n, s)
                } else if roll < 52 {
                    // constant with arguments
                    let name = if self.rng.gen_bool(0.6) { "a" } else { "b" };
                    let sort = self.sig.sort_of(name).cloned();
                    match sort {
                        Some(s) if s.args().iter().all(|a| **a == Sort::Base) => {
                            let args: Vec<Term> = (0..s.arity())
                                .map(|_| self.term_of(&Sort::Base, scope, fuel, depth + 1))
                                .collect();
                            Term::apps(Term::constant(self.sig, name).unwrap(), args)
                        }
                        _ => self.minimal(target, scope),
                    }
                } else if roll < 67 && !fun_vars.is_empty() {
                    // fully apply a function variable from the scope
                    let (n, s) = fun_vars.choose(&mut self.rng).unwrap().clone();
                    let args: Vec<Term> = s
                        .args()
                        .iter()
                        .map(|a| {
                            let a = (*a).clone();
                            self.term_of(&a, scope, fuel, depth + 1)
                        })
                        .collect();
                    Term::apps(Term::var(&n, s), args)
                } else {
                    self.redex(target, scope, fuel, depth)
                }
            }
            Sort::Arrow(a, b) => {
                // mostly a lambda; sometimes a matching constant or variable
                let roll = self.rng.gen_range(0u32..100);
                if roll < 10 {
                    self.minimal(target, scope)
                } else if roll < 20 {
                    self.redex(target, scope, fuel, depth)
                } else {
                    let x = self.fresh(scope);
                    scope.push((x.clone(), (**a).clone()));
                    let body = self.term_of(b, scope, fuel, depth + 1);
                    scope.pop();
                    Term::lam(&x, (**a).clone(), body)
                }
            }
        }
    }

    /// `(\x:s. body) arg` with a binder sort keeping the result homogeneous.
    fn redex(
        &mut self,
        target: &Sort,
        scope: &mut Vec<(String, Sort)>,
        fuel: &mut usize,
        depth: u32,
    ) -> Term {
        // the abstraction has sort s -> target; homogeneity needs
        // ord(s) >= order of the first argument of target
        let min_order = target.args().first().map(|a| a.order()).unwrap_or(0);
        let candidates: Vec<Sort> = self
            .palette
            .iter()
            .filter(|s| s.order() >= min_order && s.order() + 1 <= self.cfg.max_complexity)
            .cloned()
            .collect();
        let Some(binder_sort) = candidates.choose(&mut self.rng).cloned() else {
            return self.minimal(target, scope);
        };
        let x = self.fresh(scope);
        scope.push((x.clone(), binder_sort.clone()));
        let body = self.term_of(target, scope, fuel, depth + 1);
        scope.pop();
        let arg = self.term_of(&binder_sort, scope, fuel, depth + 1);
        Term::app(Term::lam(&x, binder_sort, body), arg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lq_core::Caps;

    #[test]
    fn samples_satisfy_the_advertised_invariants() {
        let sig = Signature::standard();
        let cfg = GenConfig::default();
        let terms = generate(7, 60, &sig, &cfg);
        assert_eq!(terms.len(), 60);
        for t in &terms {
            assert!(t.is_closed());
            assert_eq!(t.sort().unwrap(), Sort::Base);
            assert!(t.is_homogeneous().unwrap());
            assert!(t.complexity().unwrap() <= cfg.max_complexity);
            assert!(t.size() <= cfg.max_size);
            // normalization terminates comfortably within the budget
            lq_core::normalize(t, lq_core::Strategy::Rmf, &Caps::default(), false).unwrap();
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let sig = Signature::standard();
        let cfg = GenConfig::default();
        assert_eq!(generate(1, 20, &sig, &cfg), generate(1, 20, &sig, &cfg));
        assert_ne!(generate(1, 20, &sig, &cfg), generate(2, 20, &sig, &cfg));
    }

    #[test]
    fn corpus_contains_redexes_and_varied_complexities() {
        let sig = Signature::standard();
        let cfg = GenConfig::default();
        let terms = generate(11, 200, &sig, &cfg);
        let with_redex = terms
            .iter()
            .filter(|t| !lq_core::reduce::outermost_redexes(t).is_empty())
            .count();
        assert!(with_redex >= 100, "only {} terms with redexes", with_redex);
        let max_complexity = terms.iter().map(|t| t.complexity().unwrap()).max().unwrap();
        assert!(max_complexity >= 2);
    }
}
