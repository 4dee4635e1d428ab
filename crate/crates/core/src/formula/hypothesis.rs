use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Formula, Pred, Var};

/// Which predicates a hypothesis may use. `Ab` is always implicitly forbidden.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateScope {
    pub allowed: BTreeSet<Pred>,
    pub forbidden: BTreeSet<Pred>,
}

impl PredicateScope {
    pub fn new(allowed: &[Pred], forbidden: &[Pred]) -> Self {
        PredicateScope {
            allowed: allowed.iter().copied().collect(),
            forbidden: forbidden.iter().copied().collect(),
        }
    }

    /// Every observed predicate allowed; only `Ab` forbidden.
    pub fn unrestricted() -> Self {
        PredicateScope::new(&Pred::OBSERVED, &[Pred::Ab])
    }

    /// Allowed names sorted alphabetically, as rendered in prompts.
    pub fn allowed_names(&self) -> Vec<&'static str> {
        let mut v: Vec<_> = self.allowed.iter().map(|p| p.name()).collect();
        v.sort_unstable();
        v
    }

    /// Forbidden names with `Ab` first, the rest alphabetical.
    pub fn forbidden_names(&self) -> Vec<&'static str> {
        let mut v: Vec<_> =
            self.forbidden.iter().filter(|p| **p != Pred::Ab).map(|p| p.name()).collect();
        v.sort_unstable();
        if self.forbidden.contains(&Pred::Ab) {
            v.insert(0, "Ab");
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScopeError {
    #[error("hypothesis contains `implies`, which the hypothesis grammar excludes")]
    ContainsImplies,
    #[error("hypothesis mentions Ab; it must define Ab, not use it")]
    MentionsAb,
    #[error("predicate {0} is forbidden for this theory")]
    ForbiddenPredicate(Pred),
    #[error("predicate {0} is not in the allowed set")]
    NotAllowed(Pred),
    #[error("free variables must be exactly {{x}}, found {{{}}}", .0.iter().map(|v| v.name()).collect::<Vec<_>>().join(", "))]
    FreeVariables(Vec<Var>),
}

/// A formula that satisfies the hypothesis invariants under some scope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypothesis {
    formula: Formula,
}

impl Hypothesis {
    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn into_formula(self) -> Formula {
        self.formula
    }
}

/// Check the hypothesis invariants; the first violated rule is reported.
/// Object constants cannot reach this point because the parser rejects them.
pub fn validate_hypothesis(f: &Formula, scope: &PredicateScope) -> Result<Hypothesis, ScopeError> {
    if f.contains_implies() {
        return Err(ScopeError::ContainsImplies);
    }
    let preds = f.predicates();
    if preds.contains(&Pred::Ab) {
        return Err(ScopeError::MentionsAb);
    }
    if let Some(p) = preds.iter().find(|p| scope.forbidden.contains(p)) {
        return Err(ScopeError::ForbiddenPredicate(*p));
    }
    if let Some(p) = preds.iter().find(|p| !scope.allowed.contains(p)) {
        return Err(ScopeError::NotAllowed(*p));
    }
    let free = f.free_vars();
    if free.len() != 1 || !free.contains(&Var::X) {
        return Err(ScopeError::FreeVariables(free.into_iter().collect()));
    }
    Ok(Hypothesis { formula: f.clone() })
}
