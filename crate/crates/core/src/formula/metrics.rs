use serde::{Deserialize, Serialize};

use super::Formula;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaMetrics {
    pub ast_size: usize,
    pub quantifier_depth: usize,
}

/// Node count and quantifier nesting depth.
///
/// An n-ary `and`/`or` is measured as the equivalent chain of binary
/// connectives, so it contributes `n - 1` operator nodes.
pub fn formula_metrics(f: &Formula) -> FormulaMetrics {
    FormulaMetrics { ast_size: ast_size(f), quantifier_depth: quantifier_depth(f) }
}

fn ast_size(f: &Formula) -> usize {
    match f {
        Formula::Atom(_, args) => 1 + args.len(),
        Formula::Equal(..) => 3,
        Formula::Not(g) => 1 + ast_size(g),
        Formula::And(gs) | Formula::Or(gs) => gs.len() - 1 + gs.iter().map(ast_size).sum::<usize>(),
        Formula::Implies(a, b) => 1 + ast_size(a) + ast_size(b),
        Formula::Forall(_, g) | Formula::Exists(_, g) => 2 + ast_size(g),
    }
}

fn quantifier_depth(f: &Formula) -> usize {
    match f {
        Formula::Forall(_, g) | Formula::Exists(_, g) => 1 + quantifier_depth(g),
        _ => f.children().into_iter().map(quantifier_depth).max().unwrap_or(0),
    }
}
