//! Seeded family of random polynomials used by identity checks.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::expr::Expression;

/// Exponent vectors of every monomial in `m` variables with total degree
/// at most `degree`, in graded lexicographic order.
pub fn monomials(m: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(m: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == m {
            out.push(prefix.clone());
            return;
        }
        for e in 0..=left {
            prefix.push(e);
            rec(m, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, degree, &mut Vec::with_capacity(m), &mut out);
    out.sort_by_key(|e| (e.iter().sum::<u32>(), std::cmp::Reverse(e.clone())));
    out
}

/// Dense polynomial of total degree ≤ `degree` with coefficients drawn
/// uniformly from [−1, 1].
pub fn random_polynomial<R: Rng + ?Sized>(coords: &Arc<[String]>, degree: u32, rng: &mut R) -> Expression {
    let mut terms = monomials(coords.len(), degree).into_iter().map(|exps| {
        let c = rng.random_range(-1.0..=1.0);
        exps.iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .fold(Expression::constant(c, coords.clone()), |acc, (i, &e)| {
                let v = Expression::variable(i, coords.clone());
                acc * if e == 1 { v } else { v.powi(e as i64) }
            })
    });
    let first = terms.next().expect("at least the constant monomial");
    terms.fold(first, |acc, t| acc + t)
}

/// `count` polynomials drawn from a ChaCha8 stream seeded with `seed`.
pub fn polynomial_family(coords: &[String], degree: u32, count: usize, seed: u64) -> Vec<Expression> {
    let shared: Arc<[String]> = coords.into();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_polynomial(&shared, degree, &mut rng)).collect()
}
