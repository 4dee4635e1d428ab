//! Gold-rule templates.
//!
//! Slots: `B`, `B2` are binary predicates, `L`, `L2` unary literals (a unary
//! predicate, possibly negated). All slots draw from the theory's allowed
//! predicates, so every instantiation passes the theory scope.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::formula::{Formula, Pred, PredicateScope, Var};

use Formula as F;
use Var::{X, Y, Z};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Template {
    And2,
    And3,
    Or2,
    ExistsSucc,
    NoSucc,
    AllSucc,
    LitAndExists,
    LitAndNoSucc,
    LitAndAll,
    ExistsAndAll,
    ExistsNestedAll,
    ExistsChain,
    TwoSucc,
    TwoSuccLit,
    LitAndTwoSucc,
    UniqueWitness,
}

impl Template {
    pub const ALL: [Template; 16] = [
        Template::And2,
        Template::And3,
        Template::Or2,
        Template::ExistsSucc,
        Template::NoSucc,
        Template::AllSucc,
        Template::LitAndExists,
        Template::LitAndNoSucc,
        Template::LitAndAll,
        Template::ExistsAndAll,
        Template::ExistsNestedAll,
        Template::ExistsChain,
        Template::TwoSucc,
        Template::TwoSuccLit,
        Template::LitAndTwoSucc,
        Template::UniqueWitness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Template::And2 => "and2",
            Template::And3 => "and3",
            Template::Or2 => "or2",
            Template::ExistsSucc => "exists_succ",
            Template::NoSucc => "no_succ",
            Template::AllSucc => "all_succ",
            Template::LitAndExists => "lit_and_exists",
            Template::LitAndNoSucc => "lit_and_no_succ",
            Template::LitAndAll => "lit_and_all",
            Template::ExistsAndAll => "exists_and_all",
            Template::ExistsNestedAll => "exists_nested_all",
            Template::ExistsChain => "exists_chain",
            Template::TwoSucc => "two_succ",
            Template::TwoSuccLit => "two_succ_lit",
            Template::LitAndTwoSucc => "lit_and_two_succ",
            Template::UniqueWitness => "unique_witness",
        }
    }

    pub fn from_name(s: &str) -> Option<Template> {
        Template::ALL.into_iter().find(|t| t.name() == s)
    }

    fn relational(self) -> bool {
        !matches!(self, Template::And2 | Template::And3 | Template::Or2)
    }

    /// Whether the scope offers the slots this template needs.
    pub fn fits(self, scope: &PredicateScope) -> bool {
        let unary = unary_preds(scope);
        let binary = binary_preds(scope);
        !unary.is_empty() && (!self.relational() || !binary.is_empty())
    }

    /// Fill the slots at random.
    pub fn instantiate<G: Rng + ?Sized>(self, scope: &PredicateScope, rng: &mut G) -> Formula {
        let unary = unary_preds(scope);
        let binary = binary_preds(scope);
        assert!(self.fits(scope), "template {} does not fit scope", self.name());
        let lit = |v: Var, rng: &mut G| {
            let atom = F::unary(*unary.choose(rng).expect("unary slot"), v);
            if rng.random_bool(0.3) {
                F::not(atom)
            } else {
                atom
            }
        };
        let bin = |rng: &mut G| *binary.choose(rng).expect("binary slot");
        let b = |p: Pred, u: Var, v: Var| F::binary(p, u, v);
        let not_succ_or = |p: Pred, u: Var, v: Var, body: Formula| F::Or(vec![F::not(b(p, u, v)), body]);
        let two_succ = |p: Pred, extra: Vec<Formula>| {
            let mut parts = vec![F::not(F::Equal(Y, Z)), b(p, X, Y), b(p, X, Z)];
            parts.extend(extra);
            F::exists(Y, F::exists(Z, F::And(parts)))
        };
        match self {
            Template::And2 => F::And(vec![lit(X, rng), lit(X, rng)]),
            Template::And3 => F::And(vec![lit(X, rng), lit(X, rng), lit(X, rng)]),
            Template::Or2 => F::Or(vec![lit(X, rng), lit(X, rng)]),
            Template::ExistsSucc => {
                let p = bin(rng);
                F::exists(Y, F::And(vec![b(p, X, Y), lit(Y, rng)]))
            }
            Template::NoSucc => F::not(F::exists(Y, b(bin(rng), X, Y))),
            Template::AllSucc => {
                let p = bin(rng);
                F::forall(Y, not_succ_or(p, X, Y, lit(Y, rng)))
            }
            Template::LitAndExists => {
                let l = lit(X, rng);
                let p = bin(rng);
                F::And(vec![l, F::exists(Y, F::And(vec![b(p, X, Y), lit(Y, rng)]))])
            }
            Template::LitAndNoSucc => {
                let l = lit(X, rng);
                F::And(vec![l, F::not(F::exists(Y, b(bin(rng), X, Y)))])
            }
            Template::LitAndAll => {
                let l = lit(X, rng);
                let p = bin(rng);
                F::And(vec![l, F::forall(Y, not_succ_or(p, X, Y, lit(Y, rng)))])
            }
            Template::ExistsAndAll => {
                let (p, q) = (bin(rng), bin(rng));
                let some = F::exists(Y, F::And(vec![b(p, X, Y), lit(Y, rng)]));
                F::And(vec![some, F::forall(Z, not_succ_or(q, X, Z, lit(Z, rng)))])
            }
            Template::ExistsNestedAll => {
                let (p, q) = (bin(rng), bin(rng));
                F::exists(Y, F::And(vec![b(p, X, Y), F::forall(Z, not_succ_or(q, Y, Z, lit(Z, rng)))]))
            }
            Template::ExistsChain => {
                let (p, q) = (bin(rng), bin(rng));
                let l = lit(Y, rng);
                let inner = F::exists(Z, F::And(vec![b(q, Y, Z), lit(Z, rng)]));
                F::exists(Y, F::And(vec![b(p, X, Y), l, inner]))
            }
            Template::TwoSucc => two_succ(bin(rng), vec![]),
            Template::TwoSuccLit => {
                let p = bin(rng);
                let ly = lit(Y, rng);
                let lz = match &ly {
                    F::Not(a) => F::not(rename(a, Z)),
                    a => rename(a, Z),
                };
                two_succ(p, vec![ly, lz])
            }
            Template::LitAndTwoSucc => {
                let l = lit(X, rng);
                F::And(vec![l, two_succ(bin(rng), vec![])])
            }
            Template::UniqueWitness => {
                let p = bin(rng);
                let l = lit(Y, rng);
                F::exists(Y, F::And(vec![b(p, X, Y), l, F::forall(Z, not_succ_or(p, X, Z, F::Equal(Z, Y)))]))
            }
        }
    }
}

fn rename(atom: &Formula, v: Var) -> Formula {
    match atom {
        F::Atom(p, _) => F::unary(*p, v),
        other => other.clone(),
    }
}

fn unary_preds(scope: &PredicateScope) -> Vec<Pred> {
    [Pred::P, Pred::Q].into_iter().filter(|p| scope.allowed.contains(p) && !scope.forbidden.contains(p)).collect()
}

fn binary_preds(scope: &PredicateScope) -> Vec<Pred> {
    [Pred::R, Pred::S].into_iter().filter(|p| scope.allowed.contains(p) && !scope.forbidden.contains(p)).collect()
}

/// Per-batch template assignment that keeps every template at or below
/// `max(1, floor(cap * batch))` uses.
#[derive(Debug, Clone)]
pub struct DiversityGate {
    order: Vec<Template>,
}

impl DiversityGate {
    pub fn new<G: Rng + ?Sized>(scope: &PredicateScope, rng: &mut G) -> Self {
        use rand::seq::SliceRandom;
        let mut order: Vec<Template> = Template::ALL.into_iter().filter(|t| t.fits(scope)).collect();
        order.shuffle(rng);
        DiversityGate { order }
    }

    pub fn templates(&self) -> &[Template] {
        &self.order
    }

    /// Template for instance `index`, or its `fallback`-th alternative.
    /// Round-robin keeps counts within one of each other.
    pub fn assign(&self, index: usize, fallback: usize) -> Template {
        self.order[(index + fallback * 7) % self.order.len()]
    }

    /// As [`assign`](Self::assign), moving forward through the order past
    /// excluded templates. `None` when every template is excluded.
    pub fn assign_excluding(&self, index: usize, fallback: usize, excluded: &[Template]) -> Option<Template> {
        let start = (index + fallback * 7) % self.order.len();
        (0..self.order.len()).map(|k| self.order[(start + k) % self.order.len()]).find(|t| !excluded.contains(t))
    }

    /// Largest allowed count for one template in a batch.
    pub fn cap(batch: usize, fraction: f64) -> usize {
        ((fraction * batch as f64 + 1e-9).floor() as usize).max(1)
    }
}
