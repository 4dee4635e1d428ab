#![allow(dead_code)]

pub mod fixture;

use abd_core::formula::{validate_hypothesis, Formula, Hypothesis, Pred, PredicateScope, Var};
use abd_core::theory::TheorySpec;
use abd_core::world::{AtomState, World};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

/// Random world with `n` elements and exactly `unknowns` unknown binary atoms.
pub fn random_world<G: Rng>(rng: &mut G, n: usize, unknowns: usize) -> World {
    let mut w = World::new(n).unwrap();
    for p in Pred::OBSERVED {
        let rho = rng.random_range(0.1..0.6);
        if p.arity() == 1 {
            for i in 0..n {
                if rng.random_bool(rho) {
                    w.set(p, &[i], AtomState::True).unwrap();
                }
            }
        } else {
            for i in 0..n {
                for j in 0..n {
                    if rng.random_bool(rho * 0.6) {
                        w.set(p, &[i, j], AtomState::True).unwrap();
                    }
                }
            }
        }
    }
    let mut binary: Vec<(Pred, usize, usize)> = Vec::new();
    for p in [Pred::R, Pred::S] {
        for i in 0..n {
            for j in 0..n {
                binary.push((p, i, j));
            }
        }
    }
    binary.shuffle(rng);
    for &(p, i, j) in binary.iter().take(unknowns) {
        w.set(p, &[i, j], AtomState::Unknown).unwrap();
    }
    w
}

fn random_body<G: Rng>(rng: &mut G, preds: &[Pred], scope: &[Var], depth: usize) -> Formula {
    let leaf = depth == 0 || rng.random_bool(0.3);
    if leaf {
        let pick = |rng: &mut G| *scope.choose(rng).unwrap();
        let p = *preds.choose(rng).unwrap();
        return match rng.random_range(0..6) {
            0 => Formula::Equal(pick(rng), pick(rng)),
            _ if p.arity() == 1 => Formula::unary(p, pick(rng)),
            _ => Formula::binary(p, pick(rng), pick(rng)),
        };
    }
    match rng.random_range(0..5) {
        0 => Formula::not(random_body(rng, preds, scope, depth - 1)),
        1 | 2 => {
            let k = rng.random_range(2..=3);
            let kids = (0..k).map(|_| random_body(rng, preds, scope, depth - 1)).collect();
            if rng.random_bool(0.5) {
                Formula::And(kids)
            } else {
                Formula::Or(kids)
            }
        }
        _ => {
            let v = *[Var::Y, Var::Z, Var::W].choose(rng).unwrap();
            let mut inner = scope.to_vec();
            if !inner.contains(&v) {
                inner.push(v);
            }
            let body = random_body(rng, preds, &inner, depth - 1);
            if rng.random_bool(0.5) {
                Formula::exists(v, body)
            } else {
                Formula::forall(v, body)
            }
        }
    }
}

/// Random hypothesis over the theory's allowed predicates with `x` free.
pub fn random_hypothesis<G: Rng>(rng: &mut G, theory: &TheorySpec, depth: usize) -> Hypothesis {
    let preds: Vec<Pred> = theory.scope.allowed.iter().copied().collect();
    loop {
        let f = random_body(rng, &preds, &[Var::X], depth);
        if let Ok(h) = validate_hypothesis(&f, &theory.scope) {
            return h;
        }
    }
}

pub fn hyp(text: &str, scope: &PredicateScope) -> Hypothesis {
    validate_hypothesis(&abd_core::parse_formula(text, false).unwrap(), scope).unwrap()
}
