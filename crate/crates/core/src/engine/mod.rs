//! Validity, exception cost and optimal cost under the three observation
//! regimes.
//!
//! Every theory has the shape `forall x (ante(x) and not Ab(x) -> cons(x))`
//! with `Ab`-free `ante` and `cons`, so per element `a`:
//!
//! * the repaired axiom holds iff `not ante(a) or alpha(a) or cons(a)`;
//! * with `Ab` free, the least abnormal set of a completed world is exactly
//!   the set of violators `ante(a) and not cons(a)`.
//!
//! Both facts reduce every query to counting or satisfying per-element
//! circuits, which [`circuit::optimize`] solves exactly.

mod circuit;
pub mod oracle;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{Formula, Hypothesis};
use crate::theory::TheorySpec;
use crate::world::{Completion, World};
use circuit::{optimize, Circuit, Sense, G};

/// Observation regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Closed world: every atom is observed.
    Full,
    /// Some atoms unknown; a hypothesis must work for some completion.
    Partial,
    /// Some atoms unknown; a hypothesis must work for every completion.
    Skeptical,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Full, Regime::Partial, Regime::Skeptical];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Full => "full",
            Regime::Partial => "partial",
            Regime::Skeptical => "skeptical",
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Regime::Full => "FULL",
            Regime::Partial => "PARTIAL",
            Regime::Skeptical => "SKEPTICAL",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown scenario `{0}` (expected full, partial or skeptical)")]
pub struct UnknownRegime(pub String);

impl FromStr for Regime {
    type Err = UnknownRegime;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(Regime::Full),
            "partial" => Ok(Regime::Partial),
            "skeptical" => Ok(Regime::Skeptical),
            _ => Err(UnknownRegime(s.to_string())),
        }
    }
}

/// Which skeptical optimal cost to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OptVariant {
    /// Worst case over completions of the per-completion optimum.
    #[default]
    Pointwise,
    /// Smallest single abnormal set that works for every completion.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("hypothesis is invalid on world {world}; cost is undefined")]
    InvalidHypothesis { world: usize },
    #[error("regime mismatch: {0} vs {1}")]
    RegimeMismatch(Regime, Regime),
    #[error("world count mismatch: {0} vs {1}")]
    WorldCountMismatch(usize, usize),
}

/// Per-world grounding of the theory parts and, optionally, a hypothesis.
struct Grounded {
    circuit: Circuit,
    nvars: usize,
    ante: Vec<G>,
    cons: Vec<G>,
    alpha: Vec<G>,
}

impl Grounded {
    fn new(theory: &TheorySpec, w: &World, alpha: Option<&Formula>) -> Grounded {
        let mut circuit = Circuit::default();
        let n = w.domain_size();
        let per_element = |f: &Formula, c: &mut Circuit| -> Vec<G> {
            (0..n)
                .map(|a| {
                    let mut env = [a, usize::MAX, usize::MAX, usize::MAX];
                    c.ground(w, f, &mut env)
                })
                .collect()
        };
        let ante = per_element(&theory.antecedent, &mut circuit);
        let cons = per_element(&theory.consequent, &mut circuit);
        let alpha = alpha.map(|f| per_element(f, &mut circuit)).unwrap_or_default();
        Grounded { circuit, nvars: w.unknown_atoms().len(), ante, cons, alpha }
    }

    fn clause(&mut self, a: usize) -> G {
        let not_ante = self.circuit.not(self.ante[a]);
        self.circuit.or([not_ante, self.alpha[a], self.cons[a]])
    }

    fn clauses(&mut self) -> Vec<G> {
        (0..self.ante.len()).map(|a| self.clause(a)).collect()
    }

    fn violators(&mut self) -> Vec<G> {
        (0..self.ante.len())
            .map(|a| {
                let not_cons = self.circuit.not(self.cons[a]);
                self.circuit.and([self.ante[a], not_cons])
            })
            .collect()
    }

    fn solve(&mut self, constraints: &[G], objective: &[G], sense: Sense) -> Option<circuit::Optimum> {
        optimize(&mut self.circuit, self.nvars, constraints, objective, sense)
    }
}

/// Validity of a hypothesis on one world.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldVerdict {
    pub valid: bool,
    /// Partial: a completion satisfying the repaired theory with the fewest
    /// exceptions when valid.
    /// Skeptical: a completion falsifying it when invalid.
    pub witness: Option<Completion>,
}

pub fn world_validity(regime: Regime, theory: &TheorySpec, w: &World, alpha: &Hypothesis) -> WorldVerdict {
    let mut g = Grounded::new(theory, w, Some(alpha.formula()));
    match regime {
        Regime::Full | Regime::Partial => {
            let clauses = g.clauses();
            let objective = if regime == Regime::Partial { g.alpha.clone() } else { Vec::new() };
            match g.solve(&clauses, &objective, Sense::Min) {
                Some(opt) if regime == Regime::Partial => {
                    WorldVerdict { valid: true, witness: Some(Completion::from_bits(opt.assignment)) }
                }
                Some(_) => WorldVerdict { valid: true, witness: None },
                None => WorldVerdict { valid: false, witness: None },
            }
        }
        Regime::Skeptical => {
            for a in 0..w.domain_size() {
                let clause = g.clause(a);
                let broken = g.circuit.not(clause);
                if let Some(opt) = g.solve(&[broken], &[], Sense::Min) {
                    return WorldVerdict { valid: false, witness: Some(Completion::from_bits(opt.assignment)) };
                }
            }
            WorldVerdict { valid: true, witness: None }
        }
    }
}

/// Validity over a set of worlds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineVerdict {
    pub valid: bool,
    pub per_world_valid: Vec<bool>,
    pub witnesses: Vec<Option<Completion>>,
}

pub fn validity(regime: Regime, theory: &TheorySpec, worlds: &[World], alpha: &Hypothesis) -> EngineVerdict {
    let verdicts: Vec<WorldVerdict> = worlds.iter().map(|w| world_validity(regime, theory, w, alpha)).collect();
    EngineVerdict {
        valid: verdicts.iter().all(|v| v.valid),
        per_world_valid: verdicts.iter().map(|v| v.valid).collect(),
        witnesses: verdicts.into_iter().map(|v| v.witness).collect(),
    }
}

/// Both validity and cost of a hypothesis on one world; the cost is `None`
/// exactly when the hypothesis is invalid.
pub fn world_assess(regime: Regime, theory: &TheorySpec, w: &World, alpha: &Hypothesis) -> Option<usize> {
    let mut g = Grounded::new(theory, w, Some(alpha.formula()));
    let objective = g.alpha.clone();
    match regime {
        Regime::Full | Regime::Partial => {
            let clauses = g.clauses();
            g.solve(&clauses, &objective, Sense::Min).map(|o| o.value)
        }
        Regime::Skeptical => {
            for a in 0..w.domain_size() {
                let clause = g.clause(a);
                let broken = g.circuit.not(clause);
                if g.solve(&[broken], &[], Sense::Min).is_some() {
                    return None;
                }
            }
            g.solve(&[], &objective, Sense::Max).map(|o| o.value)
        }
    }
}

/// Abnormal count of a valid hypothesis: the count itself under Full, the
/// best case over satisfying completions under Partial, the worst case over
/// all completions under Skeptical.
pub fn world_cost(regime: Regime, theory: &TheorySpec, w: &World, alpha: &Hypothesis) -> Result<usize, EngineError> {
    world_assess(regime, theory, w, alpha).ok_or(EngineError::InvalidHypothesis { world: 0 })
}

/// Least achievable abnormal count when `Ab` may be chosen freely.
pub fn world_opt_cost(regime: Regime, theory: &TheorySpec, w: &World, variant: OptVariant) -> usize {
    let mut g = Grounded::new(theory, w, None);
    let violators = g.violators();
    let opt = match (regime, variant) {
        (Regime::Full, _) | (Regime::Partial, _) => g.solve(&[], &violators, Sense::Min),
        (Regime::Skeptical, OptVariant::Pointwise) => g.solve(&[], &violators, Sense::Max),
        (Regime::Skeptical, OptVariant::Uniform) => {
            let mut count = 0;
            for v in violators {
                if g.solve(&[v], &[], Sense::Min).is_some() {
                    count += 1;
                }
            }
            return count;
        }
    };
    opt.expect("Ab = whole domain always satisfies the axiom").value
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Costs {
    pub regime: Regime,
    pub per_world: Vec<usize>,
}

impl Costs {
    pub fn total(&self) -> usize {
        self.per_world.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptCosts {
    pub regime: Regime,
    pub variant: OptVariant,
    pub per_world: Vec<usize>,
}

impl OptCosts {
    pub fn total(&self) -> usize {
        self.per_world.iter().sum()
    }
}

pub fn cost(regime: Regime, theory: &TheorySpec, worlds: &[World], alpha: &Hypothesis) -> Result<Costs, EngineError> {
    let per_world = worlds
        .iter()
        .enumerate()
        .map(|(i, w)| world_assess(regime, theory, w, alpha).ok_or(EngineError::InvalidHypothesis { world: i }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Costs { regime, per_world })
}

pub fn opt_costs(regime: Regime, theory: &TheorySpec, worlds: &[World], variant: OptVariant) -> OptCosts {
    OptCosts { regime, variant, per_world: worlds.iter().map(|w| world_opt_cost(regime, theory, w, variant)).collect() }
}

/// Costs, optimal costs and the derived gaps for one hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub regime: Regime,
    pub per_world_cost: Vec<usize>,
    pub total: usize,
    pub opt_per_world: Vec<usize>,
    pub opt_total: usize,
    pub gap_total: i64,
    pub gap_normalized: f64,
    pub gold_cost: Option<usize>,
    pub gap_gold_normalized: Option<f64>,
    /// Total cost minus gold cost; negative when the hypothesis beats gold.
    pub gold_margin: Option<i64>,
}

/// Combine costs with optimal costs and, optionally, the gold rule's costs
/// computed under the same regime.
pub fn gaps(costs: &Costs, opt: &OptCosts, gold: Option<&Costs>) -> Result<CostReport, EngineError> {
    if costs.regime != opt.regime {
        return Err(EngineError::RegimeMismatch(costs.regime, opt.regime));
    }
    let worlds = costs.per_world.len();
    if opt.per_world.len() != worlds {
        return Err(EngineError::WorldCountMismatch(worlds, opt.per_world.len()));
    }
    if let Some(g) = gold {
        if g.regime != costs.regime {
            return Err(EngineError::RegimeMismatch(costs.regime, g.regime));
        }
        if g.per_world.len() != worlds {
            return Err(EngineError::WorldCountMismatch(worlds, g.per_world.len()));
        }
    }
    let total = costs.total();
    let opt_total = opt.total();
    let gap_total = total as i64 - opt_total as i64;
    let denom = worlds.max(1) as f64;
    let gold_cost = gold.map(Costs::total);
    Ok(CostReport {
        regime: costs.regime,
        per_world_cost: costs.per_world.clone(),
        total,
        opt_per_world: opt.per_world.clone(),
        opt_total,
        gap_total,
        gap_normalized: gap_total as f64 / denom,
        gold_cost,
        gap_gold_normalized: gold_cost.map(|g| (total as f64 - g as f64) / denom),
        gold_margin: gold_cost.map(|g| total as i64 - g as i64),
    })
}
