//! The seven built-in default theories.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::Regime;
use crate::formula::{parse_formula, Formula, Pred, PredicateScope, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TheoryId {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    T7,
}

impl TheoryId {
    pub const ALL: [TheoryId; 7] =
        [TheoryId::T1, TheoryId::T2, TheoryId::T3, TheoryId::T4, TheoryId::T5, TheoryId::T6, TheoryId::T7];

    pub fn short_id(self) -> &'static str {
        match self {
            TheoryId::T1 => "T1",
            TheoryId::T2 => "T2",
            TheoryId::T3 => "T3",
            TheoryId::T4 => "T4",
            TheoryId::T5 => "T5",
            TheoryId::T6 => "T6",
            TheoryId::T7 => "T7",
        }
    }

    pub fn internal_id(self) -> &'static str {
        match self {
            TheoryId::T1 => "TH2",
            TheoryId::T2 => "TH7",
            TheoryId::T3 => "TH10",
            TheoryId::T4 => "TH11",
            TheoryId::T5 => "TH12",
            TheoryId::T6 => "TH3",
            TheoryId::T7 => "TH5",
        }
    }

    /// Theories used by a regime: T1..T5 everywhere, T6 and T7 only under
    /// skeptical semantics.
    pub fn for_regime(regime: Regime) -> &'static [TheoryId] {
        match regime {
            Regime::Skeptical => &TheoryId::ALL,
            _ => &TheoryId::ALL[..5],
        }
    }
}

impl fmt::Display for TheoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TheoryError {
    #[error("unknown theory `{0}`")]
    Unknown(String),
    #[error("invalid theory formula: {0}")]
    Formula(String),
}

impl FromStr for TheoryId {
    type Err = TheoryError;

    /// Accepts short ids (`T3`) and internal ids (`TH10`), case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let up = s.trim().to_ascii_uppercase();
        TheoryId::ALL
            .into_iter()
            .find(|t| t.short_id() == up || t.internal_id() == up)
            .ok_or_else(|| TheoryError::Unknown(s.to_string()))
    }
}

/// A single default rule `forall x (ante(x) and not Ab(x) -> cons(x))` with
/// the predicate scope for hypotheses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheorySpec {
    pub short_id: String,
    pub internal_id: String,
    pub antecedent: Formula,
    pub consequent: Formula,
    pub axiom: Formula,
    pub scope: PredicateScope,
    pub scenarios: Vec<Regime>,
    pub description: String,
}

fn axiom_of(ante: &Formula, cons: &Formula) -> Formula {
    Formula::forall(
        Var::X,
        Formula::implies(
            Formula::And(vec![ante.clone(), Formula::not(Formula::unary(Pred::Ab, Var::X))]),
            cons.clone(),
        ),
    )
}

const EXISTS_RP: &str = "(exists y (and (R x y) (P y)))";

pub fn builtin_theory(id: TheoryId) -> TheorySpec {
    use Pred::*;
    let (ante, cons, allowed, forbidden, description): (&str, &str, &[Pred], &[Pred], &str) = match id {
        TheoryId::T1 => (EXISTS_RP, "(Q x)", &[P, R, S], &[Ab, Q], "R-successor with P implies Q"),
        TheoryId::T2 => (
            EXISTS_RP,
            "(exists z (and (S x z) (Q z)))",
            &[P, R],
            &[Ab, S, Q],
            "R-successor with P implies an S-successor with Q",
        ),
        TheoryId::T3 => (
            "(exists y (and (S x y) (P y)))",
            "(exists z (and (R x z) (Q z)))",
            &[P, S],
            &[Ab, R, Q],
            "S-successor with P implies an R-successor with Q",
        ),
        TheoryId::T4 => (
            EXISTS_RP,
            "(exists z (and (S x z) (forall w (implies (R z w) (P w)))))",
            &[P, Q, R],
            &[Ab, S],
            "R-successor with P implies an S-successor whose R-successors all have P",
        ),
        TheoryId::T5 => (
            EXISTS_RP,
            "(forall z (implies (S x z) (Q z)))",
            &[P, R, S],
            &[Ab, Q],
            "R-successor with P implies every S-successor has Q",
        ),
        TheoryId::T6 => ("(P x)", "(exists y (R x y))", &[P, Q, S], &[Ab, R], "P implies some R-successor"),
        TheoryId::T7 => (
            "(P x)",
            "(forall y (implies (R x y) (Q y)))",
            &[P, R, S],
            &[Ab, Q],
            "P implies every R-successor has Q",
        ),
    };
    let antecedent = parse_formula(ante, true).expect("built-in antecedent parses");
    let consequent = parse_formula(cons, true).expect("built-in consequent parses");
    let scenarios = match id {
        TheoryId::T6 | TheoryId::T7 => vec![Regime::Skeptical],
        _ => vec![Regime::Full, Regime::Partial, Regime::Skeptical],
    };
    TheorySpec {
        short_id: id.short_id().to_string(),
        internal_id: id.internal_id().to_string(),
        axiom: axiom_of(&antecedent, &consequent),
        antecedent,
        consequent,
        scope: PredicateScope::new(allowed, forbidden),
        scenarios,
        description: description.to_string(),
    }
}

impl TheorySpec {
    /// Experimental: build a theory from arbitrary antecedent and consequent.
    ///
    /// Both must be Ab-free with free variables within `{x}`. `repaired`
    /// predicates are forbidden in hypotheses alongside `Ab` and removed from
    /// `allowed`.
    pub fn custom(
        name: &str,
        antecedent: Formula,
        consequent: Formula,
        allowed: &[Pred],
        repaired: &[Pred],
    ) -> Result<TheorySpec, TheoryError> {
        for f in [&antecedent, &consequent] {
            if f.mentions(Pred::Ab) {
                return Err(TheoryError::Formula(format!("{f} mentions Ab")));
            }
            if f.free_vars().iter().any(|v| *v != Var::X) {
                return Err(TheoryError::Formula(format!("{f} has free variables other than x")));
            }
        }
        let mut forbidden = vec![Pred::Ab];
        forbidden.extend(repaired.iter().copied().filter(|p| *p != Pred::Ab));
        let allowed: Vec<Pred> = allowed.iter().copied().filter(|p| !forbidden.contains(p)).collect();
        Ok(TheorySpec {
            short_id: name.to_string(),
            internal_id: name.to_string(),
            axiom: axiom_of(&antecedent, &consequent),
            antecedent,
            consequent,
            scope: PredicateScope::new(&allowed, &forbidden),
            scenarios: vec![Regime::Full, Regime::Partial, Regime::Skeptical],
            description: "custom theory".to_string(),
        })
    }

    pub fn id(&self) -> Option<TheoryId> {
        self.short_id.parse().ok()
    }
}
