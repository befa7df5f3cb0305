//! Multivariate polynomials with rational coefficients in expanded form.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::rational::{fmt_rational, Rational};

pub type VarId = usize;

/// Sorted multiset of variables; the empty monomial is the constant term.
pub type Monomial = Vec<VarId>;

/// Canonical polynomial: sorted monomials, merged like terms, no zero coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(Rational::one())
    }

    pub fn constant(q: Rational) -> Self {
        let mut p = Poly::zero();
        p.add_term(Vec::new(), q);
        p
    }

    pub fn var(v: VarId) -> Self {
        let mut p = Poly::zero();
        p.add_term(vec![v], Rational::one());
        p
    }

    /// `1 - v`
    pub fn one_minus(v: VarId) -> Self {
        &Poly::one() - &Poly::var(v)
    }

    fn add_term(&mut self, mono: Monomial, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(mono) {
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value if this polynomial has no variables.
    pub fn constant_value(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        self.terms.keys().flatten().copied().collect()
    }

    pub fn scale(&self, q: &Rational) -> Poly {
        if q.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * q)).collect(),
        }
    }

    pub fn eval(&self, values: &[Rational]) -> Rational {
        self.terms
            .iter()
            .map(|(m, c)| m.iter().fold(c.clone(), |acc, v| acc * &values[*v]))
            .sum()
    }

    /// Replaces every occurrence of `v` by `by` and re-expands.
    pub fn substitute(&self, v: VarId, by: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (mono, c) in &self.terms {
            let k = mono.iter().filter(|&&x| x == v).count();
            let rest: Monomial = mono.iter().copied().filter(|&x| x != v).collect();
            let mut term = Poly {
                terms: BTreeMap::from([(rest, c.clone())]),
            };
            for _ in 0..k {
                term = &term * by;
            }
            out = &out + &term;
        }
        out
    }

    /// Human-readable form, e.g. `1/2*x_o1_l*y_s0_o1 + 1`.
    pub fn display(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|(m, c)| {
                let vars: Vec<&str> = m.iter().map(|v| names[*v].as_str()).collect();
                match (vars.is_empty(), c.is_one()) {
                    (true, _) => fmt_rational(c),
                    (false, true) => vars.join("*"),
                    (false, false) => format!("{}*{}", fmt_rational(c), vars.join("*")),
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &-rhs
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let mut m: Monomial = ma.iter().chain(mb).copied().collect();
                m.sort_unstable();
                out.add_term(m, ca * cb);
            }
        }
        out
    }
}

impl std::iter::Sum for Poly {
    fn sum<I: Iterator<Item = Poly>>(iter: I) -> Poly {
        iter.fold(Poly::zero(), |acc, p| &acc + &p)
    }
}
