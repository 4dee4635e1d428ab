//! Competitor and cheater pools.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::formula::{formula_metrics, parse_formula, validate_hypothesis, Formula, Hypothesis, Pred, PredicateScope};

/// Competitors larger than this are left out of the pool.
pub const MAX_COMPETITOR_AST: usize = 15;
pub const MAX_MUTANTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Tier1,
    Tier2,
    Mutant,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Competitor {
    pub tier: Tier,
    pub hypothesis: Hypothesis,
}

/// Curated shortcuts: constants, literals, self-loops, bare successor tests
/// and unary combinations. Entries outside a scope are dropped later.
pub fn tier1_texts() -> Vec<String> {
    let mut out = vec!["(= x x)".to_string(), "(not (= x x))".to_string()];
    for u in ["P", "Q"] {
        out.push(format!("({u} x)"));
        out.push(format!("(not ({u} x))"));
    }
    for b in ["R", "S"] {
        out.push(format!("({b} x x)"));
        out.push(format!("(not ({b} x x))"));
        out.push(format!("(exists y ({b} x y))"));
        out.push(format!("(not (exists y ({b} x y)))"));
        out.push(format!("(exists y ({b} y x))"));
    }
    for (a, b) in [("(P x)", "(Q x)"), ("(P x)", "(not (Q x))"), ("(not (P x))", "(Q x)"), ("(not (P x))", "(not (Q x))")] {
        out.push(format!("(and {a} {b})"));
        out.push(format!("(or {a} {b})"));
    }
    out
}

/// Shortcut shapes that recur in model answers.
pub const TIER2: [&str; 15] = [
    "(exists y (and (R x y) (P y)))",
    "(and (P x) (exists y (R x y)))",
    "(exists y (and (S x y) (P y)))",
    "(and (P x) (exists y (S x y)))",
    "(exists y (and (R x y) (not (P y))))",
    "(exists y (and (S x y) (not (P y))))",
    "(and (P x) (not (exists y (R x y))))",
    "(and (P x) (not (exists y (S x y))))",
    "(forall y (or (not (R x y)) (P y)))",
    "(forall y (or (not (S x y)) (P y)))",
    "(exists y (and (R x y) (Q y)))",
    "(exists y (and (S x y) (Q y)))",
    "(and (not (P x)) (exists y (R x y)))",
    "(and (exists y (R x y)) (exists z (S x z)))",
    "(exists y (and (R x y) (exists z (S y z))))",
];

fn admit(text: &str, scope: &PredicateScope) -> Option<Hypothesis> {
    let f = parse_formula(text, false).expect("shipped shortcut parses");
    admit_formula(&f, scope)
}

fn admit_formula(f: &Formula, scope: &PredicateScope) -> Option<Hypothesis> {
    if formula_metrics(f).ast_size > MAX_COMPETITOR_AST {
        return None;
    }
    validate_hypothesis(f, scope).ok()
}

/// Order-insensitive key: `and`/`or` children sorted, so commuted duplicates
/// collapse.
pub fn structural_key(f: &Formula) -> String {
    fn norm(f: &Formula) -> Formula {
        match f {
            Formula::And(gs) | Formula::Or(gs) => {
                let mut kids: Vec<Formula> = gs.iter().map(norm).collect();
                kids.sort_by_key(|k| k.render());
                if matches!(f, Formula::And(_)) {
                    Formula::And(kids)
                } else {
                    Formula::Or(kids)
                }
            }
            Formula::Not(g) => Formula::not(norm(g)),
            Formula::Implies(a, b) => Formula::implies(norm(a), norm(b)),
            Formula::Forall(v, g) => Formula::forall(*v, norm(g)),
            Formula::Exists(v, g) => Formula::exists(*v, norm(g)),
            leaf => leaf.clone(),
        }
    }
    norm(f).render()
}

/// Every formula one edit away from `f`: connective flips, quantifier swaps,
/// negation toggles, conjunct/disjunct deletion and predicate swaps.
pub fn single_step_mutants(f: &Formula) -> Vec<Formula> {
    let mut out = Vec::new();
    // local edits of the root
    match f {
        Formula::And(gs) => out.push(Formula::Or(gs.clone())),
        Formula::Or(gs) => out.push(Formula::And(gs.clone())),
        Formula::Forall(v, g) => out.push(Formula::Exists(*v, g.clone())),
        Formula::Exists(v, g) => out.push(Formula::Forall(*v, g.clone())),
        Formula::Atom(p, args) => {
            let swapped = match p {
                Pred::P => Some(Pred::Q),
                Pred::Q => Some(Pred::P),
                Pred::R => Some(Pred::S),
                Pred::S => Some(Pred::R),
                Pred::Ab => None,
            };
            if let Some(q) = swapped {
                out.push(Formula::Atom(q, args.clone()));
            }
        }
        _ => {}
    }
    match f {
        Formula::Not(g) => out.push((**g).clone()),
        other => out.push(Formula::not(other.clone())),
    }
    if let Formula::And(gs) | Formula::Or(gs) = f {
        for i in 0..gs.len() {
            let mut rest = gs.clone();
            rest.remove(i);
            out.push(match (rest.len(), f) {
                (1, _) => rest.pop().expect("one left"),
                (_, Formula::And(_)) => Formula::And(rest),
                _ => Formula::Or(rest),
            });
        }
    }
    // the same edits applied inside each child
    match f {
        Formula::Not(g) => out.extend(single_step_mutants(g).into_iter().map(Formula::not)),
        Formula::Forall(v, g) => out.extend(single_step_mutants(g).into_iter().map(|m| Formula::forall(*v, m))),
        Formula::Exists(v, g) => out.extend(single_step_mutants(g).into_iter().map(|m| Formula::exists(*v, m))),
        Formula::And(gs) | Formula::Or(gs) => {
            for (i, g) in gs.iter().enumerate() {
                for m in single_step_mutants(g) {
                    let mut kids = gs.clone();
                    kids[i] = m;
                    out.push(if matches!(f, Formula::And(_)) { Formula::And(kids) } else { Formula::Or(kids) });
                }
            }
        }
        Formula::Implies(a, b) => {
            out.extend(single_step_mutants(a).into_iter().map(|m| Formula::implies(m, (**b).clone())));
            out.extend(single_step_mutants(b).into_iter().map(|m| Formula::implies((**a).clone(), m)));
        }
        _ => {}
    }
    out
}

/// Up to `limit` in-scope mutants of `gold`, distinct from it and from each
/// other up to commutation.
pub fn mutants<G: Rng + ?Sized>(gold: &Formula, scope: &PredicateScope, limit: usize, rng: &mut G) -> Vec<Hypothesis> {
    let mut seen: HashSet<String> = HashSet::from([structural_key(gold)]);
    let mut all: Vec<Hypothesis> = Vec::new();
    for m in single_step_mutants(gold) {
        if seen.insert(structural_key(&m)) {
            if let Some(h) = admit_formula(&m, scope) {
                all.push(h);
            }
        }
    }
    all.shuffle(rng);
    all.truncate(limit);
    all
}

/// Tier-1 and tier-2 shortcuts admitted by the scope.
pub fn cheater_pool(scope: &PredicateScope) -> Vec<Competitor> {
    let t1 = tier1_texts().into_iter().filter_map(|t| admit(&t, scope)).map(|h| Competitor { tier: Tier::Tier1, hypothesis: h });
    let t2 = TIER2.iter().filter_map(|t| admit(t, scope)).map(|h| Competitor { tier: Tier::Tier2, hypothesis: h });
    t1.chain(t2).collect()
}

/// Tier 1, then gold mutants, then tier 2; duplicates of the gold and of each
/// other removed; truncated to `cap` so tier 1 is kept preferentially.
pub fn build_competitor_pool<G: Rng + ?Sized>(
    scope: &PredicateScope,
    gold: &Formula,
    cap: usize,
    rng: &mut G,
) -> Vec<Competitor> {
    let muts = mutants(gold, scope, MAX_MUTANTS, rng);
    let tier1 = tier1_texts().into_iter().filter_map(|t| admit(&t, scope)).map(|h| (Tier::Tier1, h));
    let tier2 = TIER2.iter().filter_map(|t| admit(t, scope)).map(|h| (Tier::Tier2, h));
    let mut seen: HashSet<String> = HashSet::from([structural_key(gold)]);
    let mut pool = Vec::new();
    for (tier, h) in tier1.chain(muts.into_iter().map(|h| (Tier::Mutant, h))).chain(tier2) {
        if pool.len() == cap {
            break;
        }
        if seen.insert(structural_key(h.formula())) {
            pool.push(Competitor { tier, hypothesis: h });
        }
    }
    pool
}
