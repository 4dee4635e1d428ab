use thiserror::Error;

use super::{Formula, Pred, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty input")]
    Empty,
    #[error("unbalanced parentheses at byte {0}")]
    Unbalanced(usize),
    #[error("unexpected token `{token}` at byte {pos}")]
    Unexpected { token: String, pos: usize },
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("`{op}` needs at least 2 arguments, got {got}")]
    TooFewChildren { op: &'static str, got: usize },
    #[error("`{op}` expects {expected} argument(s), got {got}")]
    WrongArity { op: String, expected: usize, got: usize },
    #[error("implication is not allowed here")]
    ImpliesNotAllowed,
    #[error("`{0}` is an object constant; formulas may only use variables")]
    ObjectConstant(String),
    #[error("`{0}` is not a variable (expected x, y, z or w)")]
    BadVariable(String),
    #[error("trailing input after formula at byte {0}")]
    Trailing(usize),
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Sym(String, usize),
    List(Vec<Sexp>, usize),
}

fn tokenize(text: &str) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut start = 0;
    for (i, c) in text.char_indices() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if !cur.is_empty() {
                out.push((std::mem::take(&mut cur), start));
            }
            if !c.is_whitespace() {
                out.push((c.to_string(), i));
            }
        } else {
            if cur.is_empty() {
                start = i;
            }
            cur.push(c);
        }
    }
    if !cur.is_empty() {
        out.push((cur, start));
    }
    out
}

fn read_sexp(tokens: &[(String, usize)], pos: &mut usize) -> Result<Sexp, ParseError> {
    let (tok, at) = tokens.get(*pos).ok_or(ParseError::Empty)?;
    *pos += 1;
    match tok.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => return Err(ParseError::Unbalanced(*at)),
                    Some((t, _)) if t == ")" => {
                        *pos += 1;
                        return Ok(Sexp::List(items, *at));
                    }
                    Some(_) => items.push(read_sexp(tokens, pos)?),
                }
            }
        }
        ")" => Err(ParseError::Unbalanced(*at)),
        _ => Ok(Sexp::Sym(tok.clone(), *at)),
    }
}

/// Parse one S-expression formula. `allow_implies` admits `implies` nodes,
/// which theory axioms need and hypotheses must not contain.
pub fn parse_formula(text: &str, allow_implies: bool) -> Result<Formula, ParseError> {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut pos = 0;
    let sexp = read_sexp(&tokens, &mut pos)?;
    if let Some((t, at)) = tokens.get(pos) {
        return Err(if t == ")" { ParseError::Unbalanced(*at) } else { ParseError::Trailing(*at) });
    }
    build(&sexp, allow_implies)
}

fn variable(s: &Sexp) -> Result<Var, ParseError> {
    match s {
        Sexp::Sym(name, _) => Var::from_name(name).ok_or_else(|| {
            let is_constant = name.len() > 1
                && name.starts_with('a')
                && name[1..].bytes().all(|b| b.is_ascii_digit());
            if is_constant {
                ParseError::ObjectConstant(name.clone())
            } else {
                ParseError::BadVariable(name.clone())
            }
        }),
        Sexp::List(_, at) => Err(ParseError::Unexpected { token: "(".into(), pos: *at }),
    }
}

fn expect_args(op: &str, args: &[Sexp], n: usize) -> Result<(), ParseError> {
    if args.len() != n {
        return Err(ParseError::WrongArity { op: op.to_string(), expected: n, got: args.len() });
    }
    Ok(())
}

fn build(s: &Sexp, allow_implies: bool) -> Result<Formula, ParseError> {
    let (items, _) = match s {
        Sexp::List(items, at) => (items, *at),
        Sexp::Sym(tok, at) => {
            return Err(ParseError::Unexpected { token: tok.clone(), pos: *at });
        }
    };
    let (head, args) = match items.split_first() {
        Some((Sexp::Sym(h, _), rest)) => (h.as_str(), rest),
        Some((Sexp::List(_, at), _)) => {
            return Err(ParseError::Unexpected { token: "(".into(), pos: *at });
        }
        None => return Err(ParseError::UnknownOperator(String::new())),
    };
    let sub = |f: &Sexp| build(f, allow_implies);
    if let Some(pred) = Pred::from_name(head) {
        expect_args(head, args, pred.arity())?;
        let vars = args.iter().map(variable).collect::<Result<Vec<_>, _>>()?;
        return Ok(Formula::Atom(pred, vars));
    }
    match head {
        "=" => {
            expect_args(head, args, 2)?;
            Ok(Formula::Equal(variable(&args[0])?, variable(&args[1])?))
        }
        "not" => {
            expect_args(head, args, 1)?;
            Ok(Formula::not(sub(&args[0])?))
        }
        "and" | "or" => {
            let op = if head == "and" { "and" } else { "or" };
            if args.len() < 2 {
                return Err(ParseError::TooFewChildren { op, got: args.len() });
            }
            let children = args.iter().map(sub).collect::<Result<Vec<_>, _>>()?;
            Ok(if op == "and" { Formula::And(children) } else { Formula::Or(children) })
        }
        "implies" => {
            if !allow_implies {
                return Err(ParseError::ImpliesNotAllowed);
            }
            expect_args(head, args, 2)?;
            Ok(Formula::implies(sub(&args[0])?, sub(&args[1])?))
        }
        "forall" | "exists" => {
            expect_args(head, args, 2)?;
            let v = variable(&args[0])?;
            let body = sub(&args[1])?;
            Ok(if head == "forall" { Formula::forall(v, body) } else { Formula::exists(v, body) })
        }
        other => Err(ParseError::UnknownOperator(other.to_string())),
    }
}
