//! Textual S-expression form for formulas.
//!
//! ```text
//! (always 0 23 (and (pred 0.5 (1 p1) (-1 p2)) (pred 0 (1 v1))))
//! ```
//!
//! A predicate lists its offset and `(weight channel)` terms; bare numbers
//! inside `pred` accumulate into the offset. Window bounds are seconds.


use crate::scalar::Scalar;

use super::{Formula, Interval, Predicate};

/// S-expression parse failure.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("formula parse error: {0}")]
pub struct SexprError(String);

impl SexprError {
    fn new(message: impl Into<String>) -> Self {
        Self(message.into())
    }
}

/// Renders a formula in canonical S-expression form.
pub fn to_sexpr<T: Scalar>(formula: &Formula<T>) -> String {
    let mut out = String::new();
    write_formula(formula, &mut out);
    out
}

/// Parses the canonical S-expression form.
pub fn parse_sexpr(input: &str) -> Result<Formula<f64>, SexprError> {
    let tokens = tokenize(input)?;
    let mut cursor = 0;
    let sexp = parse_node(&tokens, &mut cursor)?;
    if cursor != tokens.len() {
        return Err(SexprError::new("trailing input after formula"));
    }
    formula_from(&sexp)
}

fn fmt_num<T: Scalar>(value: T) -> String {
    format!("{}", value.to_f64().expect("scalar not convertible to f64"))
}

fn write_formula<T: Scalar>(formula: &Formula<T>, out: &mut String) {
    match formula {
        Formula::Pred(pred) => {
            out.push_str("(pred ");
            out.push_str(&fmt_num(pred.offset()));
            for (channel, weight) in pred.coefficients() {
                out.push_str(&format!(" ({} {})", fmt_num(weight), channel));
            }
            out.push(')');
        }
        Formula::Not(inner) => {
            out.push_str("(not ");
            write_formula(inner, out);
            out.push(')');
        }
        Formula::And(children) => write_nary("and", children, out),
        Formula::Or(children) => write_nary("or", children, out),
        Formula::Always(w, inner) => write_temporal("always", w, &[inner], out),
        Formula::Eventually(w, inner) => write_temporal("eventually", w, &[inner], out),
        Formula::Next(w, inner) => write_temporal("next", w, &[inner], out),
        Formula::Until(w, left, right) => write_temporal("until", w, &[left, right], out),
    }
}

fn write_nary<T: Scalar>(op: &str, children: &[Formula<T>], out: &mut String) {
    out.push('(');
    out.push_str(op);
    for child in children {
        out.push(' ');
        write_formula(child, out);
    }
    out.push(')');
}

fn write_temporal<T: Scalar>(op: &str, window: &Interval, children: &[&Formula<T>], out: &mut String) {
    out.push('(');
    out.push_str(op);
    out.push_str(&format!(" {} {}", window.lower(), window.upper()));
    for child in children {
        out.push(' ');
        write_formula(child, out);
    }
    out.push(')');
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open,
    Close,
    Atom(String),
}

fn tokenize(input: &str) -> Result<Vec<Token>, SexprError> {
    let mut tokens = Vec::new();
    let mut atom = String::new();
    for ch in input.chars() {
        match ch {
            '(' | ')' => {
                if !atom.is_empty() {
                    tokens.push(Token::Atom(std::mem::take(&mut atom)));
                }
                tokens.push(if ch == '(' { Token::Open } else { Token::Close });
            }
            c if c.is_whitespace() => {
                if !atom.is_empty() {
                    tokens.push(Token::Atom(std::mem::take(&mut atom)));
                }
            }
            c => atom.push(c),
        }
    }
    if !atom.is_empty() {
        tokens.push(Token::Atom(atom));
    }
    if tokens.is_empty() {
        return Err(SexprError::new("empty input"));
    }
    Ok(tokens)
}

#[derive(Debug, Clone)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn parse_node(tokens: &[Token], cursor: &mut usize) -> Result<Sexp, SexprError> {
    match tokens.get(*cursor) {
        Some(Token::Atom(a)) => {
            *cursor += 1;
            Ok(Sexp::Atom(a.clone()))
        }
        Some(Token::Open) => {
            *cursor += 1;
            let mut items = Vec::new();
            loop {
                match tokens.get(*cursor) {
                    Some(Token::Close) => {
                        *cursor += 1;
                        return Ok(Sexp::List(items));
                    }
                    Some(_) => items.push(parse_node(tokens, cursor)?),
                    None => return Err(SexprError::new("unbalanced parenthesis")),
                }
            }
        }
        Some(Token::Close) => Err(SexprError::new("unexpected `)`")),
        None => Err(SexprError::new("unexpected end of input")),
    }
}

fn number(sexp: &Sexp, context: &str) -> Result<f64, SexprError> {
    match sexp {
        Sexp::Atom(a) => a
            .parse::<f64>()
            .map_err(|_| SexprError::new(format!("expected number in {context}, got `{a}`"))),
        Sexp::List(_) => Err(SexprError::new(format!("expected number in {context}, got a list"))),
    }
}

fn formula_from(sexp: &Sexp) -> Result<Formula<f64>, SexprError> {
    let Sexp::List(items) = sexp else {
        return Err(SexprError::new("formula must be a parenthesized list"));
    };
    let Some(Sexp::Atom(op)) = items.first() else {
        return Err(SexprError::new("formula list must start with an operator"));
    };
    let args = &items[1..];
    match op.as_str() {
        "pred" => predicate_from(args).map(Formula::Pred),
        "not" => {
            expect_arity(args, 1, "not")?;
            Ok(Formula::not(formula_from(&args[0])?))
        }
        "and" | "or" => {
            if args.len() < 2 {
                return Err(SexprError::new(format!("`{op}` needs at least two children")));
            }
            let children = args.iter().map(formula_from).collect::<Result<Vec<_>, _>>()?;
            Ok(if op == "and" { Formula::And(children) } else { Formula::Or(children) })
        }
        "always" | "eventually" | "next" => {
            expect_arity(args, 3, op)?;
            let window = window_from(&args[0], &args[1], op)?;
            let inner = formula_from(&args[2])?;
            Ok(match op.as_str() {
                "always" => Formula::always(window, inner),
                "eventually" => Formula::eventually(window, inner),
                _ => Formula::next(window, inner),
            })
        }
        "until" => {
            expect_arity(args, 4, "until")?;
            let window = window_from(&args[0], &args[1], "until")?;
            Ok(Formula::until(window, formula_from(&args[2])?, formula_from(&args[3])?))
        }
        other => Err(SexprError::new(format!("unknown operator `{other}`"))),
    }
}

fn expect_arity(args: &[Sexp], want: usize, op: &str) -> Result<(), SexprError> {
    if args.len() == want {
        Ok(())
    } else {
        Err(SexprError::new(format!("`{op}` expects {want} arguments, got {}", args.len())))
    }
}

fn window_from(lo: &Sexp, hi: &Sexp, op: &str) -> Result<Interval, SexprError> {
    let lower = number(lo, op)?;
    let upper = number(hi, op)?;
    Interval::new(lower, upper).map_err(|e| SexprError::new(e.to_string()))
}

fn predicate_from(args: &[Sexp]) -> Result<Predicate<f64>, SexprError> {
    let mut pred = Predicate::constant(0.0);
    let mut saw_item = false;
    for arg in args {
        match arg {
            Sexp::Atom(_) => {
                let value = number(arg, "pred offset")?;
                pred = pred.plus_offset(value);
                saw_item = true;
            }
            Sexp::List(pair) => {
                if pair.len() != 2 {
                    return Err(SexprError::new("predicate term must be (weight channel)"));
                }
                let weight = number(&pair[0], "pred weight")?;
                let Sexp::Atom(channel) = &pair[1] else {
                    return Err(SexprError::new("predicate channel must be a name"));
                };
                if channel.parse::<f64>().is_ok() {
                    return Err(SexprError::new("predicate channel cannot be a number"));
                }
                pred = pred.plus_term(channel.clone(), weight);
                saw_item = true;
            }
        }
    }
    if !saw_item {
        return Err(SexprError::new("`pred` needs an offset or at least one term"));
    }
    Ok(pred)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_spec_shaped_output() {
        let formula = Formula::always(
            Interval::new(0.0, 23.0).unwrap(),
            Formula::and(vec![
                Formula::pred(Predicate::affine("p1", 1.0, 0.5)),
                Formula::pred(Predicate::affine("p1", -1.0, 2.0)),
            ]),
        );
        assert_eq!(
            to_sexpr(&formula),
            "(always 0 23 (and (pred 0.5 (1 p1)) (pred 2 (-1 p1))))"
        );
    }

    #[test]
    fn parses_own_output() {
        let formula = Formula::until(
            Interval::new(0.5, 1.5).unwrap(),
            Formula::not(Formula::pred(Predicate::affine("a", -2.0, 0.25))),
            Formula::or(vec![
                Formula::pred(Predicate::constant(1.0)),
                Formula::next(
                    Interval::new(0.05, 0.05).unwrap(),
                    Formula::pred(Predicate::affine("b", 3.5, -0.1)),
                ),
            ]),
        );
        let text = to_sexpr(&formula);
        let reparsed = parse_sexpr(&text).unwrap();
        assert_eq!(reparsed, formula);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_sexpr("(and (pred 1))").is_err());
        assert!(parse_sexpr("(always 2 1 (pred 0))").is_err());
        assert!(parse_sexpr("(pred)").is_err());
        assert!(parse_sexpr("(bogus 1)").is_err());
        assert!(parse_sexpr("(pred 1) extra").is_err());
        assert!(parse_sexpr("((pred 1)").is_err());
    }
}
