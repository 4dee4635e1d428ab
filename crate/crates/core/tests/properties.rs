mod common;

use abd_core::engine::{world_assess, world_opt_cost, world_validity, OptVariant, Regime};
use abd_core::formula::{formula_metrics, Formula, Pred, Var};
use abd_core::parse_formula;
use abd_core::theory::{builtin_theory, TheoryId};
use abd_core::world::{
    enumerate_completions, sample_world, true_atom_count, AtomState, DensityRanges, UnknownRates, ENUMERATION_CAP,
};
use common::{hyp, random_hypothesis, random_world};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn var() -> impl Strategy<Value = Var> {
    prop::sample::select(Var::ALL.to_vec())
}

fn leaf() -> impl Strategy<Value = Formula> {
    prop_oneof![
        (prop::sample::select(vec![Pred::P, Pred::Q, Pred::Ab]), var()).prop_map(|(p, v)| Formula::unary(p, v)),
        (prop::sample::select(vec![Pred::R, Pred::S]), var(), var()).prop_map(|(p, a, b)| Formula::binary(p, a, b)),
        (var(), var()).prop_map(|(a, b)| Formula::Equal(a, b)),
    ]
}

fn formula() -> impl Strategy<Value = Formula> {
    leaf().prop_recursive(5, 40, 4, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            prop::collection::vec(inner.clone(), 2..=4).prop_map(Formula::And),
            prop::collection::vec(inner.clone(), 2..=4).prop_map(Formula::Or),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (var(), inner.clone()).prop_map(|(v, f)| Formula::forall(v, f)),
            (var(), inner).prop_map(|(v, f)| Formula::exists(v, f)),
        ]
    })
}

/// AST size and quantifier depth read off the rendered text alone.
///
/// Each symbol token counts once, a quantifier counts its keyword and bound
/// variable, and an `and`/`or` with k operands counts k - 1.
fn text_metrics(text: &str) -> (usize, usize) {
    let spaced = text.replace('(', " ( ").replace(')', " ) ");
    let tokens: Vec<&str> = spaced.split_whitespace().collect();
    // per open list: (head, operand count, is quantifier)
    let mut stack: Vec<(&str, usize, bool)> = Vec::new();
    let mut size = 0;
    let mut depth = 0;
    let mut i = 0;
    while i < tokens.len() {
        match tokens[i] {
            "(" => {
                if let Some(top) = stack.last_mut() {
                    top.1 += 1;
                }
                let head = tokens[i + 1];
                let quant = head == "forall" || head == "exists";
                stack.push((head, 0, quant));
                depth = depth.max(stack.iter().filter(|s| s.2).count());
                i += 2;
                if head != "and" && head != "or" {
                    size += 1;
                }
                continue;
            }
            ")" => {
                let (head, k, _) = stack.pop().unwrap();
                if head == "and" || head == "or" {
                    size += k - 1;
                }
            }
            _ => {
                size += 1;
                if let Some(top) = stack.last_mut() {
                    top.1 += 1;
                }
            }
        }
        i += 1;
    }
    (size, depth)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn render_parse_round_trip(f in formula()) {
        let text = f.render();
        let back = parse_formula(&text, true).unwrap();
        prop_assert_eq!(&back, &f);
        prop_assert_eq!(back.render(), text);
    }

    #[test]
    fn metrics_match_text_oracle(f in formula()) {
        let m = formula_metrics(&f);
        prop_assert_eq!((m.ast_size, m.quantifier_depth), text_metrics(&f.render()));
    }
}

#[test]
fn text_oracle_worked_values() {
    assert_eq!(text_metrics("(exists y (and (R x y) (P y)))"), (8, 1));
    assert_eq!(text_metrics("(forall y (exists z (R y z)))"), (7, 2));
    assert_eq!(text_metrics("(or (P x) (Q x) (= x y))"), (9, 0));
}

fn densities() -> impl Strategy<Value = DensityRanges> {
    prop::array::uniform4((0.0f64..1.0, 0.0f64..1.0)).prop_map(|rs| DensityRanges {
        ranges: rs.map(|(a, b)| if a <= b { (a, b) } else { (b, a) }),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn sampler_counts(seed: u64, lo in 1usize..8, span in 0usize..4, d in densities(), r in 0.0f64..0.5, s in 0.0f64..0.5) {
        let rates = UnknownRates { r, s };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = sample_world(lo..=lo + span, &d, &rates, &mut rng).unwrap();
        let n = w.domain_size();
        prop_assert!((lo..=lo + span).contains(&n));
        for p in Pred::OBSERVED {
            let (dlo, dhi) = d.get(p);
            let (min, max) = (true_atom_count(n, p.arity(), dlo), true_atom_count(n, p.arity(), dhi));
            let t = w.atoms_with(p, AtomState::True).len();
            let u = w.atoms_with(p, AtomState::Unknown).len();
            prop_assert_eq!(u, rates.masked_count(p, n));
            prop_assert!(t <= max, "{} true {} above {}", p, t, max);
            // masking may hide true atoms
            prop_assert!(t + u >= min, "{} true {} + unknown {} below {}", p, t, u, min);
        }
    }
}

fn theory_id() -> impl Strategy<Value = TheoryId> {
    prop::sample::select(TheoryId::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn ab_true_is_always_valid(seed: u64, id in theory_id(), n in 1usize..6, unknowns in 0usize..8) {
        let theory = builtin_theory(id);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_world(&mut rng, n, unknowns.min(2 * n * n));
        let tautology = hyp("(= x x)", &theory.scope);
        for regime in Regime::ALL {
            prop_assert!(world_validity(regime, &theory, &w, &tautology).valid);
            prop_assert_eq!(world_assess(regime, &theory, &w, &tautology), Some(n));
        }
    }

    #[test]
    fn cost_bounds(seed: u64, id in theory_id(), n in 1usize..6, unknowns in 0usize..8) {
        let theory = builtin_theory(id);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_world(&mut rng, n, unknowns.min(2 * n * n));
        let depth = rng.random_range(1..=3);
        let alpha = random_hypothesis(&mut rng, &theory, depth);
        let cost = |r| world_assess(r, &theory, &w, &alpha);
        let opt = |r, v| world_opt_cost(r, &theory, &w, v);
        for regime in Regime::ALL {
            if let Some(c) = cost(regime) {
                prop_assert!(c >= opt(regime, OptVariant::Pointwise), "{regime} cost below OptCost");
                prop_assert!(c <= n);
            }
            prop_assert!(opt(regime, OptVariant::Uniform) >= opt(regime, OptVariant::Pointwise));
        }
        prop_assert!(opt(Regime::Partial, OptVariant::Pointwise) <= opt(Regime::Skeptical, OptVariant::Pointwise));
        if let Some(sk) = cost(Regime::Skeptical) {
            let part = cost(Regime::Partial);
            prop_assert!(part.is_some(), "skeptically valid but not partially valid");
            prop_assert!(part.unwrap() <= sk);
        }
    }

    #[test]
    fn regimes_coincide_on_closed_worlds(seed: u64, id in theory_id(), n in 1usize..7) {
        let theory = builtin_theory(id);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_world(&mut rng, n, 0);
        let alpha = random_hypothesis(&mut rng, &theory, 3);
        let full = world_assess(Regime::Full, &theory, &w, &alpha);
        for regime in [Regime::Partial, Regime::Skeptical] {
            prop_assert_eq!(world_assess(regime, &theory, &w, &alpha), full);
            prop_assert_eq!(
                world_opt_cost(regime, &theory, &w, OptVariant::Pointwise),
                world_opt_cost(Regime::Full, &theory, &w, OptVariant::Pointwise)
            );
        }
    }

    #[test]
    fn witnesses_are_completions_with_the_claimed_outcome(seed: u64, id in theory_id(), n in 1usize..5, unknowns in 1usize..6) {
        let theory = builtin_theory(id);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_world(&mut rng, n, unknowns.min(2 * n * n));
        let alpha = random_hypothesis(&mut rng, &theory, 2);
        let part = world_validity(Regime::Partial, &theory, &w, &alpha);
        if let Some(c) = part.witness {
            let closed = w.complete(&c);
            prop_assert!(world_validity(Regime::Full, &theory, &closed, &alpha).valid);
            prop_assert_eq!(world_assess(Regime::Full, &theory, &closed, &alpha), world_assess(Regime::Partial, &theory, &w, &alpha));
        }
        let sk = world_validity(Regime::Skeptical, &theory, &w, &alpha);
        if let Some(c) = sk.witness {
            prop_assert!(!world_validity(Regime::Full, &theory, &w.complete(&c), &alpha).valid);
        } else {
            for c in enumerate_completions(&w, ENUMERATION_CAP).unwrap() {
                prop_assert!(world_validity(Regime::Full, &theory, &w.complete(&c), &alpha).valid);
            }
        }
    }
}
