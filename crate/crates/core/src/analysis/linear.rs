//! Fraction-free Gaussian elimination over the integers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::rational::Rational;

/// Solves `a · x = b` exactly. Returns `None` when `a` is singular.
///
/// Each row is scaled to integers first, then eliminated with Bareiss' rule
/// so every intermediate division is exact and entries stay bounded by the
/// size of the leading minors.
pub fn solve(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    assert_eq!(b.len(), n);
    let mut m: Vec<Vec<BigInt>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            assert_eq!(row.len(), n);
            integer_row(row.iter().chain(std::iter::once(rhs)))
        })
        .collect();

    let mut prev = BigInt::one();
    for k in 0..n {
        let pivot = (k..n).find(|&i| !m[i][k].is_zero())?;
        m.swap(k, pivot);
        let (top, rest) = m.split_at_mut(k + 1);
        let pk = &top[k];
        for row in rest.iter_mut() {
            let f = std::mem::take(&mut row[k]);
            for j in k + 1..=n {
                let v = &row[j] * &pk[k] - &f * &pk[j];
                row[j] = if prev.is_one() { v } else { v / &prev };
            }
        }
        prev = m[k][k].clone();
    }

    let mut x = vec![Rational::zero(); n];
    for k in (0..n).rev() {
        let mut acc = Rational::from_integer(m[k][n].clone());
        for j in k + 1..n {
            if !m[k][j].is_zero() {
                acc -= &x[j] * Rational::from_integer(m[k][j].clone());
            }
        }
        x[k] = acc / Rational::from_integer(m[k][k].clone());
    }
    Some(x)
}

fn integer_row<'a>(entries: impl Iterator<Item = &'a Rational> + Clone) -> Vec<BigInt> {
    let l = entries.clone().fold(BigInt::one(), |l, q| l.lcm(q.denom()));
    entries.map(|q| q.numer() * (&l / q.denom())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    #[test]
    fn solves_small_system() {
        // 2x + y = 5, x - y = 1/2
        let a = vec![vec![int(2), int(1)], vec![int(1), int(-1)]];
        let x = solve(&a, &[int(5), ratio(1, 2)]).unwrap();
        assert_eq!(x, vec![ratio(11, 6), ratio(4, 3)]);
    }

    #[test]
    fn needs_pivoting() {
        let a = vec![vec![int(0), int(1)], vec![int(1), int(0)]];
        assert_eq!(solve(&a, &[int(3), int(4)]).unwrap(), vec![int(4), int(3)]);
    }

    #[test]
    fn singular_is_none() {
        let a = vec![vec![int(1), int(2)], vec![int(2), int(4)]];
        assert!(solve(&a, &[int(1), int(2)]).is_none());
    }

    proptest! {
        #[test]
        fn solution_satisfies_system(
            n in 1usize..6,
            entries in proptest::collection::vec((-9i64..10, 1i64..5), 36),
            rhs in proptest::collection::vec((-9i64..10, 1i64..5), 6),
        ) {
            let a: Vec<Vec<Rational>> = (0..n)
                .map(|i| (0..n).map(|j| {
                    let (p, q) = entries[i * 6 + j];
                    // diagonal dominance keeps the matrix regular
                    if i == j { int(p.abs() + 60) } else { ratio(p, q) }
                }).collect())
                .collect();
            let b: Vec<Rational> = rhs[..n].iter().map(|&(p, q)| ratio(p, q)).collect();
            let x = solve(&a, &b).unwrap();
            for i in 0..n {
                let lhs: Rational = (0..n).map(|j| &a[i][j] * &x[j]).sum();
                prop_assert_eq!(&lhs, &b[i]);
            }
        }
    }
}
