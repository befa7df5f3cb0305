//! Reading `(get-value ...)` answers back into exact rationals.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{SmtError, SmtScript, SmtVar};
use crate::rational::{parse_decimal, Rational};
use crate::tpmc::Instantiation;

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn tokenize(text: &str) -> Result<Vec<String>, SmtError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' | ')' => {
                tokens.push(c.to_string());
                chars.next();
            }
            ';' => while chars.next().is_some_and(|c| c != '\n') {},
            '|' => {
                let mut tok = String::from('|');
                chars.next();
                loop {
                    match chars.next() {
                        Some('|') => break,
                        Some(c) => tok.push(c),
                        None => {
                            return Err(SmtError::MalformedOutput(
                                "unterminated quoted symbol".into(),
                            ))
                        }
                    }
                }
                tok.push('|');
                tokens.push(tok);
            }
            '"' => {
                let mut tok = String::new();
                chars.next();
                while let Some(c) = chars.next() {
                    if c == '"' {
                        if chars.peek() == Some(&'"') {
                            chars.next();
                        } else {
                            break;
                        }
                    }
                    tok.push(c);
                }
                tokens.push(format!("\"{tok}\""));
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut tok = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' {
                        break;
                    }
                    tok.push(c);
                    chars.next();
                }
                tokens.push(tok);
            }
        }
    }
    Ok(tokens)
}

fn parse_sexps(text: &str) -> Result<Vec<Sexp>, SmtError> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    for tok in tokenize(text)? {
        match tok.as_str() {
            "(" => stack.push(Vec::new()),
            ")" => {
                let done = stack.pop().filter(|_| !stack.is_empty()).ok_or_else(|| {
                    SmtError::MalformedOutput("unbalanced parentheses in solver output".into())
                })?;
                stack.last_mut().unwrap().push(Sexp::List(done));
            }
            _ => stack.last_mut().unwrap().push(Sexp::Atom(tok)),
        }
    }
    if stack.len() != 1 {
        return Err(SmtError::MalformedOutput(
            "unbalanced parentheses in solver output".into(),
        ));
    }
    Ok(stack.pop().unwrap())
}

/// Why a value could not be read as a rational.
enum ValueError {
    Irrational,
    Malformed(String),
}

fn value_of(e: &Sexp) -> Result<Rational, ValueError> {
    match e {
        Sexp::Atom(a) => {
            if let Ok(n) = a.parse::<BigInt>() {
                return Ok(Rational::from_integer(n));
            }
            parse_decimal(a).ok_or_else(|| ValueError::Malformed(a.clone()))
        }
        Sexp::List(items) => {
            let head = match items.first() {
                Some(Sexp::Atom(h)) => h.as_str(),
                _ => return Err(ValueError::Malformed(format!("{e:?}"))),
            };
            let args = items[1..]
                .iter()
                .map(value_of)
                .collect::<Result<Vec<_>, _>>();
            match head {
                "root-obj" | "root-of" | "algebraic" => Err(ValueError::Irrational),
                "/" => {
                    let args = args?;
                    match args.as_slice() {
                        [a, b] if !b.is_zero() => Ok(a / b),
                        _ => Err(ValueError::Malformed("division".into())),
                    }
                }
                "-" => {
                    let args = args?;
                    match args.as_slice() {
                        [a] => Ok(-a),
                        [a, rest @ ..] => Ok(rest.iter().fold(a.clone(), |acc, x| acc - x)),
                        [] => Err(ValueError::Malformed("empty negation".into())),
                    }
                }
                "+" => Ok(args?.into_iter().sum()),
                "*" => Ok(args?.into_iter().fold(Rational::one(), |acc, x| acc * x)),
                "to_real" => args?
                    .pop()
                    .ok_or_else(|| ValueError::Malformed("to_real".into())),
                other => Err(ValueError::Malformed(other.to_string())),
            }
        }
    }
}

/// Exact parameter and value assignment read from a solver model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub inst: Instantiation,
    pub values: Vec<Rational>,
}

/// A model as read, with irrational entries left empty.
pub(crate) struct PartialModel {
    pub params: Vec<Option<Rational>>,
    pub values: Vec<Option<Rational>>,
    /// First symbol whose value is irrational.
    pub irrational: Option<String>,
}

pub(crate) fn read_model(raw: &str, script: &SmtScript) -> Result<PartialModel, SmtError> {
    let n_params = script
        .symbols
        .iter()
        .filter(|(_, v)| matches!(v, SmtVar::Param(_)))
        .count();
    let n_values = script.symbols.len() - n_params;
    let mut model = PartialModel {
        params: vec![None; n_params],
        values: vec![None; n_values],
        irrational: None,
    };
    let mut seen = vec![false; script.symbols.len()];
    for top in parse_sexps(raw)? {
        let Sexp::List(pairs) = top else { continue };
        for pair in pairs {
            let Sexp::List(kv) = &pair else {
                return Err(SmtError::MalformedOutput(format!(
                    "unexpected model entry {pair:?}"
                )));
            };
            let [Sexp::Atom(name), value] = kv.as_slice() else {
                // solver error messages such as (error "...")
                return Err(SmtError::MalformedOutput(format!(
                    "unexpected model entry {kv:?}"
                )));
            };
            let Some(pos) = script.symbols.iter().position(|(s, _)| s == name) else {
                return Err(SmtError::MalformedOutput(format!(
                    "unknown symbol {name} in model"
                )));
            };
            seen[pos] = true;
            let q = match value_of(value) {
                Ok(q) => q,
                Err(ValueError::Irrational) => {
                    model.irrational.get_or_insert_with(|| name.clone());
                    continue;
                }
                Err(ValueError::Malformed(m)) => {
                    return Err(SmtError::MalformedOutput(format!(
                        "cannot read value of {name}: {m}"
                    )))
                }
            };
            match script.symbols[pos].1 {
                SmtVar::Param(i) => model.params[i] = Some(q),
                SmtVar::Value(i) => model.values[i] = Some(q),
            }
        }
    }
    if let Some(pos) = seen.iter().position(|s| !s) {
        return Err(SmtError::MalformedOutput(format!(
            "no value for {}",
            script.symbols[pos].0
        )));
    }
    Ok(model)
}

/// Parses the `(get-value ...)` answer. Irrational values yield
/// [`SmtError::Irrational`] naming the first offending symbol.
pub fn parse_assignment(raw: &str, script: &SmtScript) -> Result<Assignment, SmtError> {
    let model = read_model(raw, script)?;
    if let Some(name) = model.irrational {
        return Err(SmtError::Irrational(name));
    }
    Ok(Assignment {
        inst: Instantiation(model.params.into_iter().flatten().collect()),
        values: model.values.into_iter().flatten().collect(),
    })
}
