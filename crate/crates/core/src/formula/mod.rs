//! First-order formulas over the signature `{P, Q, R, S, =, Ab}`.
//!
//! Formulas cross every module and file boundary as canonical S-expressions:
//! lowercase operators, one space between tokens, no redundant parentheses.

mod hypothesis;
mod metrics;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hypothesis::{validate_hypothesis, Hypothesis, PredicateScope, ScopeError};
pub use metrics::{formula_metrics, FormulaMetrics};
pub use parse::{parse_formula, ParseError};

/// Logical variable. The grammar admits exactly four names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Var {
    X,
    Y,
    Z,
    W,
}

impl Var {
    pub const ALL: [Var; 4] = [Var::X, Var::Y, Var::Z, Var::W];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
            Var::W => "w",
        }
    }

    pub fn from_name(s: &str) -> Option<Var> {
        match s {
            "x" => Some(Var::X),
            "y" => Some(Var::Y),
            "z" => Some(Var::Z),
            "w" => Some(Var::W),
            _ => None,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Predicate symbol. `Ab` is the abnormality predicate and never appears in
/// worlds; it is defined by a hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pred {
    P,
    Q,
    R,
    S,
    Ab,
}

impl Pred {
    /// Observable predicates in canonical (name) order.
    pub const OBSERVED: [Pred; 4] = [Pred::P, Pred::Q, Pred::R, Pred::S];

    pub fn arity(self) -> usize {
        match self {
            Pred::P | Pred::Q | Pred::Ab => 1,
            Pred::R | Pred::S => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Pred::P => "P",
            Pred::Q => "Q",
            Pred::R => "R",
            Pred::S => "S",
            Pred::Ab => "Ab",
        }
    }

    pub fn from_name(s: &str) -> Option<Pred> {
        match s {
            "P" => Some(Pred::P),
            "Q" => Some(Pred::Q),
            "R" => Some(Pred::R),
            "S" => Some(Pred::S),
            "Ab" => Some(Pred::Ab),
            _ => None,
        }
    }

    /// Slot of an observed predicate in per-predicate arrays (`P=0 .. S=3`).
    ///
    /// Panics on `Ab`, which has no world extension.
    pub fn slot(self) -> usize {
        match self {
            Pred::P => 0,
            Pred::Q => 1,
            Pred::R => 2,
            Pred::S => 3,
            Pred::Ab => panic!("Ab has no observed extension"),
        }
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(Pred, Vec<Var>),
    Equal(Var, Var),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Forall(Var, Box<Formula>),
    Exists(Var, Box<Formula>),
}

/// Construction-time violations of the formula invariants.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("predicate {pred} expects {expected} argument(s), got {got}")]
    WrongArity { pred: Pred, expected: usize, got: usize },
    #[error("`{op}` needs at least 2 arguments, got {got}")]
    TooFewChildren { op: &'static str, got: usize },
}

impl Formula {
    pub fn atom(pred: Pred, args: Vec<Var>) -> Result<Formula, FormulaError> {
        if args.len() != pred.arity() {
            return Err(FormulaError::WrongArity { pred, expected: pred.arity(), got: args.len() });
        }
        Ok(Formula::Atom(pred, args))
    }

    pub fn unary(pred: Pred, v: Var) -> Formula {
        debug_assert_eq!(pred.arity(), 1);
        Formula::Atom(pred, vec![v])
    }

    pub fn binary(pred: Pred, a: Var, b: Var) -> Formula {
        debug_assert_eq!(pred.arity(), 2);
        Formula::Atom(pred, vec![a, b])
    }

    pub fn and(children: Vec<Formula>) -> Result<Formula, FormulaError> {
        if children.len() < 2 {
            return Err(FormulaError::TooFewChildren { op: "and", got: children.len() });
        }
        Ok(Formula::And(children))
    }

    pub fn or(children: Vec<Formula>) -> Result<Formula, FormulaError> {
        if children.len() < 2 {
            return Err(FormulaError::TooFewChildren { op: "or", got: children.len() });
        }
        Ok(Formula::Or(children))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn forall(v: Var, f: Formula) -> Formula {
        Formula::Forall(v, Box::new(f))
    }

    pub fn exists(v: Var, f: Formula) -> Formula {
        Formula::Exists(v, Box::new(f))
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Atom(..) | Formula::Equal(..) => Vec::new(),
            Formula::Not(f) | Formula::Forall(_, f) | Formula::Exists(_, f) => vec![f],
            Formula::And(fs) | Formula::Or(fs) => fs.iter().collect(),
            Formula::Implies(a, b) => vec![a, b],
        }
    }

    /// Free variables, honouring shadowing by the innermost binder.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut [false; 4], &mut out);
        out
    }

    fn collect_free(&self, bound: &mut [bool; 4], out: &mut BTreeSet<Var>) {
        match self {
            Formula::Atom(_, args) => {
                out.extend(args.iter().copied().filter(|v| !bound[v.index()]));
            }
            Formula::Equal(a, b) => {
                for v in [*a, *b] {
                    if !bound[v.index()] {
                        out.insert(v);
                    }
                }
            }
            Formula::Forall(v, f) | Formula::Exists(v, f) => {
                let was = bound[v.index()];
                bound[v.index()] = true;
                f.collect_free(bound, out);
                bound[v.index()] = was;
            }
            _ => {
                for c in self.children() {
                    c.collect_free(bound, out);
                }
            }
        }
    }

    /// Every predicate symbol occurring in the formula.
    pub fn predicates(&self) -> BTreeSet<Pred> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Atom(p, _) = f {
                out.insert(*p);
            }
        });
        out
    }

    pub fn contains_implies(&self) -> bool {
        let mut found = false;
        self.visit(&mut |f| found |= matches!(f, Formula::Implies(..)));
        found
    }

    pub fn mentions(&self, pred: Pred) -> bool {
        self.predicates().contains(&pred)
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Canonical S-expression.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(p, args) => {
                write!(f, "({p}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            Formula::Equal(a, b) => write!(f, "(= {a} {b})"),
            Formula::Not(g) => write!(f, "(not {g})"),
            Formula::And(gs) | Formula::Or(gs) => {
                f.write_str(if matches!(self, Formula::And(_)) { "(and" } else { "(or" })?;
                for g in gs {
                    write!(f, " {g}")?;
                }
                f.write_str(")")
            }
            Formula::Implies(a, b) => write!(f, "(implies {a} {b})"),
            Formula::Forall(v, g) => write!(f, "(forall {v} {g})"),
            Formula::Exists(v, g) => write!(f, "(exists {v} {g})"),
        }
    }
}

/// Render a formula in canonical form.
pub fn render_formula(f: &Formula) -> String {
    f.render()
}

impl Serialize for Formula {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.render())
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_formula(&text, true).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Formula {
        parse_formula(s, true).unwrap()
    }

    #[test]
    fn renders_canonical_forms() {
        let f = Formula::And(vec![
            Formula::unary(Pred::P, Var::X),
            Formula::not(Formula::unary(Pred::Q, Var::X)),
        ]);
        assert_eq!(render_formula(&f), "(and (P x) (not (Q x)))");
        assert_eq!(render_formula(&Formula::Equal(Var::X, Var::Y)), "(= x y)");
        let g = Formula::exists(
            Var::Y,
            Formula::And(vec![
                Formula::binary(Pred::R, Var::X, Var::Y),
                Formula::unary(Pred::P, Var::Y),
            ]),
        );
        assert_eq!(render_formula(&g), "(exists y (and (R x y) (P y)))");
    }

    #[test]
    fn free_vars_respect_binders() {
        assert_eq!(p("(exists y (R x y))").free_vars(), BTreeSet::from([Var::X]));
        assert_eq!(p("(P y)").free_vars(), BTreeSet::from([Var::Y]));
        assert!(p("(forall x (P x))").free_vars().is_empty());
        // the inner binder for y closes it; the outer one has nothing left to bind
        assert_eq!(
            p("(and (exists y (exists y (R x y))) (Q z))").free_vars(),
            BTreeSet::from([Var::X, Var::Z])
        );
    }

    #[test]
    fn constructors_check_invariants() {
        assert!(Formula::atom(Pred::R, vec![Var::X]).is_err());
        assert!(Formula::and(vec![Formula::unary(Pred::P, Var::X)]).is_err());
        assert!(Formula::or(vec![]).is_err());
    }
}
