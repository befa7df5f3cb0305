//! SMT-LIB2 encoding of tpMC feasibility over nonlinear real arithmetic.
//!
//! Every tpMC variable becomes a `Real`; booleans are pinned to `{0, 1}` by a
//! disjunction so that all assertions stay polynomial. One value variable
//! `r_s` per state carries the expected reward, tied together by the Bellman
//! equations of the parametric chain. States outside the initial set only
//! need a finite value when the instantiation can reach them, so their
//! equations are guarded by a reachability flag.

use std::collections::HashSet;
use std::fmt::Write;

use num_traits::{One, Signed};

use super::SmtError;
use crate::rational::{fmt_rational, Rational, Threshold, Value};
use crate::tpmc::{Poly, Relation, Tpmc, VarRole};

/// What an SMT symbol stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmtVar {
    Param(usize),
    Value(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmtScript {
    pub text: String,
    /// Symbols in declaration order, each with what it stands for.
    pub symbols: Vec<(String, SmtVar)>,
}

impl SmtScript {
    pub fn lookup(&self, symbol: &str) -> Option<SmtVar> {
        self.symbols
            .iter()
            .find(|(s, _)| s == symbol)
            .map(|(_, v)| *v)
    }
}

fn is_simple_symbol(s: &str) -> bool {
    const EXTRA: &str = "~!@$%^&*_-+=<>.?/";
    !s.is_empty()
        && !s.starts_with(|c: char| c.is_ascii_digit())
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || EXTRA.contains(c))
}

/// A symbol for `name`, quoted when needed, falling back to `fallback` when
/// the name cannot be quoted or is already taken.
fn symbol(name: &str, fallback: String, taken: &mut HashSet<String>) -> String {
    let candidate = if is_simple_symbol(name) {
        name.to_string()
    } else if !name.contains(['|', '\\']) {
        format!("|{name}|")
    } else {
        fallback.clone()
    };
    let chosen = if taken.contains(&candidate) {
        fallback
    } else {
        candidate
    };
    assert!(taken.insert(chosen.clone()), "fallback symbols are unique");
    chosen
}

/// `(/ 3 4)`, `(- 2)`, `(- (/ 1 2))` or a plain numeral.
pub fn literal(q: &Rational) -> String {
    let abs = q.abs();
    let body = if abs.is_integer() {
        abs.numer().to_string()
    } else {
        format!("(/ {} {})", abs.numer(), abs.denom())
    };
    if q.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

fn poly_expr(p: &Poly, names: &[String]) -> String {
    let terms: Vec<String> = p
        .terms()
        .map(|(mono, c)| {
            if mono.is_empty() {
                return literal(c);
            }
            let mut factors: Vec<String> = Vec::new();
            if !c.is_one() {
                factors.push(literal(c));
            }
            factors.extend(mono.iter().map(|&v| names[v].clone()));
            if factors.len() == 1 {
                factors.pop().unwrap()
            } else {
                format!("(* {})", factors.join(" "))
            }
        })
        .collect();
    match terms.len() {
        0 => "0".into(),
        1 => terms.into_iter().next().unwrap(),
        _ => format!("(+ {})", terms.join(" ")),
    }
}

fn sum_expr(items: &[String]) -> String {
    match items {
        [] => "0".into(),
        [one] => one.clone(),
        _ => format!("(+ {})", items.join(" ")),
    }
}

/// Encodes "some well-defined instantiation has expected reward within
/// `threshold`". With `deterministic`, strategy variables are also pinned to
/// `{0, 1}`. `lower_bounds`, when given, adds `r_s >= v_s` for every finite
/// `v_s`; callers pass per-state values that no instantiation can beat, such
/// as the fully observable optimum, so the constraints are redundant but let
/// the solver refute thresholds below them without nonlinear reasoning.
pub fn encode(
    t: &Tpmc,
    threshold: &Threshold,
    deterministic: bool,
    lower_bounds: Option<&[Value]>,
) -> Result<SmtScript, SmtError> {
    if t.initial.is_empty() {
        return Err(SmtError::Precondition("the initial set is empty".into()));
    }
    if let Some(s) = (0..t.num_states()).find(|&s| !t.is_goal[s] && !t.rewards[s].is_positive()) {
        return Err(SmtError::Precondition(format!(
            "non-goal state {} has reward {}; the Bellman encoding needs positive rewards off the goal \
             (otherwise a reward-free cycle would admit spurious finite solutions)",
            t.states[s],
            fmt_rational(&t.rewards[s])
        )));
    }

    let mut taken = HashSet::new();
    let params: Vec<String> = t
        .vars
        .iter()
        .enumerate()
        .map(|(i, v)| symbol(&v.name, format!("p!{i}"), &mut taken))
        .collect();
    let values: Vec<String> = t
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| symbol(&format!("r_{s}"), format!("r!{i}"), &mut taken))
        .collect();
    // Non-initial, non-goal states get a flag that is forced on along every
    // positive-probability edge; only flagged states need a finite value.
    let mut is_initial = vec![false; t.num_states()];
    for &s in &t.initial {
        is_initial[s] = true;
    }
    let live: Vec<Option<String>> = (0..t.num_states())
        .map(|i| {
            (!t.is_goal[i] && !is_initial[i]).then(|| {
                symbol(
                    &format!("live_{}", t.states[i]),
                    format!("live!{i}"),
                    &mut taken,
                )
            })
        })
        .collect();

    let mut out = String::new();
    let w = &mut out;
    writeln!(
        w,
        "; {} tpMC, budget {}, threshold {}",
        t.kind.name(),
        t.budget,
        threshold
    )
    .unwrap();
    if deterministic {
        writeln!(w, "; deterministic strategies").unwrap();
    }
    writeln!(w, "(set-option :produce-models true)").unwrap();
    writeln!(w, "(set-logic QF_NRA)").unwrap();
    for name in params.iter().chain(&values) {
        writeln!(w, "(declare-fun {name} () Real)").unwrap();
    }
    for name in live.iter().flatten() {
        writeln!(w, "(declare-fun {name} () Bool)").unwrap();
    }

    for (i, v) in t.vars.iter().enumerate() {
        let is_choice = matches!(v.role, VarRole::Choice { .. });
        if v.kind.is_bool() || (deterministic && is_choice) {
            writeln!(w, "(assert (or (= {0} 0) (= {0} 1)))", params[i]).unwrap();
        } else {
            writeln!(w, "(assert (and (<= 0 {0}) (<= {0} 1)))", params[i]).unwrap();
        }
    }
    for (g, group) in t.groups.iter().enumerate() {
        let members: Vec<String> = t
            .vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind.group() == Some(g))
            .map(|(i, _)| params[i].clone())
            .collect();
        let op = match group.relation {
            Relation::Equal => "=",
            Relation::AtMost => "<=",
        };
        writeln!(
            w,
            "(assert ({op} {} {}))",
            sum_expr(&members),
            literal(&group.constant)
        )
        .unwrap();
    }

    for s in 0..t.num_states() {
        if t.is_goal[s] {
            writeln!(w, "(assert (= {} 0))", values[s]).unwrap();
            continue;
        }
        let mut rhs = vec![literal(&t.rewards[s])];
        for (target, p) in &t.rows[s] {
            if p.is_zero() {
                continue;
            }
            rhs.push(match p.constant_value() {
                Some(c) if c.is_one() => values[*target].clone(),
                _ => format!("(* {} {})", poly_expr(p, &params), values[*target]),
            });
            if let Some(next) = live[*target].as_ref().filter(|_| *target != s) {
                let mut reasons: Vec<String> =
                    live[s].iter().map(|l| format!("(not {l})")).collect();
                if p.constant_value().is_none() {
                    reasons.push(format!("(= {} 0)", poly_expr(p, &params)));
                }
                reasons.push(next.clone());
                match reasons.as_slice() {
                    [only] => writeln!(w, "(assert {only})").unwrap(),
                    _ => writeln!(w, "(assert (or {}))", reasons.join(" ")).unwrap(),
                }
            }
        }
        let bellman = format!("(= {} {})", values[s], sum_expr(&rhs));
        match &live[s] {
            Some(l) => writeln!(w, "(assert (=> {l} {bellman}))").unwrap(),
            None => writeln!(w, "(assert {bellman})").unwrap(),
        }
    }
    for (s, v) in values.iter().enumerate() {
        match lower_bounds.map(|b| &b[s]) {
            Some(Value::Finite(q)) if q.is_positive() => {
                writeln!(w, "(assert (>= {v} {}))", literal(q)).unwrap()
            }
            _ => writeln!(w, "(assert (>= {v} 0))").unwrap(),
        }
    }

    let init: Vec<String> = t.initial.iter().map(|&s| values[s].clone()).collect();
    let avg = format!(
        "(* {} {})",
        literal(&Rational::new(1.into(), init.len().into())),
        sum_expr(&init)
    );
    let op = if threshold.strict { "<" } else { "<=" };
    writeln!(w, "(assert ({op} {avg} {}))", literal(&threshold.tau)).unwrap();

    writeln!(w, "(check-sat)").unwrap();
    let all: Vec<&str> = params.iter().chain(&values).map(String::as_str).collect();
    writeln!(w, "(get-value ({}))", all.join(" ")).unwrap();

    let symbols = params
        .into_iter()
        .enumerate()
        .map(|(i, s)| (s, SmtVar::Param(i)))
        .chain(
            values
                .into_iter()
                .enumerate()
                .map(|(i, s)| (s, SmtVar::Value(i))),
        )
        .collect();
    Ok(SmtScript { text: out, symbols })
}
