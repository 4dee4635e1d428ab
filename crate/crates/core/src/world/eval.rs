use thiserror::Error;

use super::{AbnormalSet, AtomState, Completion, World};
use crate::formula::{Formula, Pred, Var};

/// Variable assignment indexed by [`Var::index`].
pub type Env = [Option<usize>; 4];

/// How `Ab` atoms are interpreted during evaluation.
#[derive(Debug, Clone, Copy)]
pub enum AbInterp<'a> {
    /// `Ab` must not occur.
    None,
    /// `Ab(a)` holds iff the rule, with `x` bound to `a`, holds.
    Rule(&'a Formula),
    /// `Ab` is a fixed subset of the domain.
    Set(&'a AbnormalSet),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("variable {0} is unbound")]
    Unbound(Var),
    #[error("Ab occurs but no interpretation for it was supplied")]
    MissingAb,
    #[error("completion has {got} values but the world has {expected} unknown atoms")]
    CompletionSize { expected: usize, got: usize },
}

/// Standard first-order satisfaction of `f` in the completed world `w + c`.
///
/// Atoms not true and not unknown are false (closed world). Quantifiers range
/// over the whole domain; a nested binder shadows an outer one.
pub fn eval_formula(
    w: &World,
    c: &Completion,
    env: &Env,
    f: &Formula,
    ab: AbInterp<'_>,
) -> Result<bool, EvalError> {
    if c.len() != w.unknown_atoms().len() {
        return Err(EvalError::CompletionSize { expected: w.unknown_atoms().len(), got: c.len() });
    }
    let mut env = *env;
    eval(w, c, &mut env, f, ab)
}

fn lookup(env: &Env, v: Var) -> Result<usize, EvalError> {
    env[v.index()].ok_or(EvalError::Unbound(v))
}

fn eval(w: &World, c: &Completion, env: &mut Env, f: &Formula, ab: AbInterp<'_>) -> Result<bool, EvalError> {
    Ok(match f {
        Formula::Atom(Pred::Ab, args) => {
            let a = lookup(env, args[0])?;
            match ab {
                AbInterp::None => return Err(EvalError::MissingAb),
                AbInterp::Set(s) => s.contains(a),
                AbInterp::Rule(rule) => {
                    let mut inner: Env = [None; 4];
                    inner[Var::X.index()] = Some(a);
                    eval(w, c, &mut inner, rule, AbInterp::None)?
                }
            }
        }
        Formula::Atom(p, args) => {
            let off = match args.as_slice() {
                [v] => lookup(env, *v)?,
                [u, v] => lookup(env, *u)? * w.domain_size() + lookup(env, *v)?,
                _ => unreachable!("arity enforced at construction"),
            };
            match w.state_at(*p, off) {
                AtomState::True => true,
                AtomState::False => false,
                AtomState::Unknown => c.get(w.unknown_index(*p, off).expect("indexed unknown")),
            }
        }
        Formula::Equal(a, b) => lookup(env, *a)? == lookup(env, *b)?,
        Formula::Not(g) => !eval(w, c, env, g, ab)?,
        Formula::And(gs) => {
            for g in gs {
                if !eval(w, c, env, g, ab)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(gs) => {
            for g in gs {
                if eval(w, c, env, g, ab)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Implies(a, b) => !eval(w, c, env, a, ab)? || eval(w, c, env, b, ab)?,
        Formula::Forall(v, g) | Formula::Exists(v, g) => {
            let universal = matches!(f, Formula::Forall(..));
            let saved = env[v.index()];
            let mut result = universal;
            for a in 0..w.domain_size() {
                env[v.index()] = Some(a);
                let r = eval(w, c, env, g, ab);
                let r = match r {
                    Ok(r) => r,
                    Err(e) => {
                        env[v.index()] = saved;
                        return Err(e);
                    }
                };
                if r != universal {
                    result = !universal;
                    break;
                }
            }
            env[v.index()] = saved;
            result
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn f(s: &str) -> Formula {
        parse_formula(s, true).unwrap()
    }

    fn at(x: usize) -> Env {
        [Some(x), None, None, None]
    }

    #[test]
    fn output_example_marks_a0() {
        let mut w = World::new(2).unwrap();
        w.set_many(Pred::P, [&[0][..], &[1]], AtomState::True).unwrap();
        w.set(Pred::Q, &[1], AtomState::True).unwrap();
        let c = Completion::all_false(0);
        let alpha = f("(and (P x) (not (Q x)))");
        assert!(eval_formula(&w, &c, &at(0), &alpha, AbInterp::None).unwrap());
        assert!(!eval_formula(&w, &c, &at(1), &alpha, AbInterp::None).unwrap());
        let axiom = f("(forall x (implies (and (P x) (not (Ab x))) (Q x)))");
        assert!(eval_formula(&w, &c, &[None; 4], &axiom, AbInterp::Rule(&alpha)).unwrap());
        assert!(!eval_formula(&w, &c, &[None; 4], &axiom, AbInterp::Set(&AbnormalSet::empty(2))).unwrap());
    }

    #[test]
    fn trivial_cases() {
        let w = World::new(3).unwrap();
        let c = Completion::all_false(0);
        assert!(eval_formula(&w, &c, &at(0), &f("(= x x)"), AbInterp::None).unwrap());
        assert!(!eval_formula(&w, &c, &at(0), &f("(exists y (R x y))"), AbInterp::None).unwrap());
        assert_eq!(
            eval_formula(&w, &c, &[None; 4], &f("(P x)"), AbInterp::None),
            Err(EvalError::Unbound(Var::X))
        );
        assert_eq!(
            eval_formula(&w, &c, &at(0), &f("(Ab x)"), AbInterp::None),
            Err(EvalError::MissingAb)
        );
    }

    #[test]
    fn shadowing_uses_innermost_binder() {
        // R = {(0,1)}; with x=0 the inner y ranges freely, so the outer y is irrelevant
        let mut w = World::new(2).unwrap();
        w.set(Pred::R, &[0, 1], AtomState::True).unwrap();
        let c = Completion::all_false(0);
        let g = f("(forall y (exists y (R x y)))");
        assert!(eval_formula(&w, &c, &at(0), &g, AbInterp::None).unwrap());
        let h = f("(exists y (forall y (R x y)))");
        assert!(!eval_formula(&w, &c, &at(0), &h, AbInterp::None).unwrap());
    }

    #[test]
    fn unknown_atoms_follow_completion() {
        let mut w = World::new(2).unwrap();
        w.set(Pred::Q, &[1], AtomState::Unknown).unwrap();
        let q = f("(Q x)");
        let off = Completion::from_bits(vec![false]);
        let on = Completion::from_bits(vec![true]);
        assert!(!eval_formula(&w, &off, &at(1), &q, AbInterp::None).unwrap());
        assert!(eval_formula(&w, &on, &at(1), &q, AbInterp::None).unwrap());
        assert!(eval_formula(&w, &on, &at(1), &q, AbInterp::None).is_ok());
        assert!(eval_formula(&w, &Completion::all_false(0), &at(1), &q, AbInterp::None).is_err());
    }
}
