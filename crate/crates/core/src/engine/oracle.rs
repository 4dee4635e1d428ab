//! Brute-force reference semantics.
//!
//! Every query sweeps all completions and, where `Ab` is free, all subsets of
//! the domain, evaluating the theory axiom directly. There are no early exits
//! and no use of the axiom's shape, so this is independent of the circuit
//! engine and serves as its oracle. Only usable on small worlds.

use super::{OptVariant, Regime};
use crate::formula::{Formula, Var};
use crate::theory::TheorySpec;
use crate::world::{enumerate_completions, eval_formula, AbInterp, AbnormalSet, CapExceeded, Completion, World};

/// Largest domain for which `Ab` subsets are enumerated.
pub const MAX_ORACLE_DOMAIN: usize = 16;

fn completions(w: &World, cap: usize) -> Result<Vec<Completion>, CapExceeded> {
    Ok(enumerate_completions(w, cap)?.collect())
}

fn axiom_holds(theory: &TheorySpec, w: &World, c: &Completion, ab: AbInterp<'_>) -> bool {
    eval_formula(w, c, &[None; 4], &theory.axiom, ab).expect("axiom is closed")
}

fn abnormal_count(w: &World, c: &Completion, alpha: &Formula) -> usize {
    let mut count = 0;
    for a in 0..w.domain_size() {
        let mut env = [None; 4];
        env[Var::X.index()] = Some(a);
        if eval_formula(w, c, &env, alpha, AbInterp::None).expect("hypothesis has only x free") {
            count += 1;
        }
    }
    count
}

/// Validity of `alpha` on one world, plus its cost when valid.
pub fn oracle_assess(
    regime: Regime,
    theory: &TheorySpec,
    w: &World,
    alpha: &Formula,
    cap: usize,
) -> Result<(bool, Option<usize>), CapExceeded> {
    let cs = completions(w, cap)?;
    let rows: Vec<(bool, usize)> = cs
        .iter()
        .map(|c| (axiom_holds(theory, w, c, AbInterp::Rule(alpha)), abnormal_count(w, c, alpha)))
        .collect();
    let satisfying = rows.iter().filter(|r| r.0).map(|r| r.1);
    Ok(match regime {
        Regime::Full | Regime::Partial => {
            let best = satisfying.min();
            (best.is_some(), best)
        }
        Regime::Skeptical => {
            let valid = rows.iter().all(|r| r.0);
            (valid, valid.then(|| rows.iter().map(|r| r.1).max().unwrap_or(0)))
        }
    })
}

/// Least `|Ab|` over all subsets (and completions, per regime).
pub fn oracle_opt_cost(
    regime: Regime,
    theory: &TheorySpec,
    w: &World,
    variant: OptVariant,
    cap: usize,
) -> Result<usize, CapExceeded> {
    let n = w.domain_size();
    assert!(n <= MAX_ORACLE_DOMAIN, "oracle subset sweep limited to {MAX_ORACLE_DOMAIN} elements");
    let cs = completions(w, cap)?;
    let subsets: Vec<AbnormalSet> = (0..1u64 << n).map(|m| AbnormalSet::from_mask(n, m)).collect();
    // table[c][s]: axiom holds under completion c with Ab = subset s
    let table: Vec<Vec<bool>> = cs
        .iter()
        .map(|c| subsets.iter().map(|s| axiom_holds(theory, w, c, AbInterp::Set(s))).collect())
        .collect();
    let min_for = |row: &Vec<bool>| {
        subsets.iter().zip(row).filter(|(_, ok)| **ok).map(|(s, _)| s.len()).min().expect("Ab = D works")
    };
    Ok(match (regime, variant) {
        (Regime::Full, _) | (Regime::Partial, _) => table.iter().map(min_for).min().expect("at least one completion"),
        (Regime::Skeptical, OptVariant::Pointwise) => {
            table.iter().map(min_for).max().expect("at least one completion")
        }
        (Regime::Skeptical, OptVariant::Uniform) => (0..subsets.len())
            .filter(|&k| table.iter().all(|row| row[k]))
            .map(|k| subsets[k].len())
            .min()
            .expect("Ab = D works"),
    })
}
