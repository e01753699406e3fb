//! Seeded generators for randomized checks.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::matrix::SquareMatrix;
use crate::poly::{Coeff, CoeffKind, Monomial, Point, PolySystem, Polynomial, VarTable};

pub fn var_table(n: usize) -> Arc<VarTable> {
    Arc::new(VarTable::new((1..=n).map(|i| format!("x{i}"))).expect("distinct names"))
}

/// A small nonzero rational with numerator in `[-5, 5]` and denominator in `[1, 4]`.
pub fn small_rational<R: Rng>(rng: &mut R) -> BigRational {
    loop {
        let num: i64 = rng.gen_range(-5..=5);
        if num != 0 {
            return BigRational::new(BigInt::from(num), BigInt::from(rng.gen_range(1..=4)));
        }
    }
}

/// Random monomial with per-variable exponent at most `max_each` and total
/// degree at most `max_total`.
pub fn monomial<R: Rng>(rng: &mut R, n: usize, max_each: u32, max_total: u32) -> Monomial {
    loop {
        let e: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=max_each)).collect();
        if e.iter().sum::<u32>() <= max_total {
            return Monomial::from_exponents(e);
        }
    }
}

/// Random exact polynomial with up to `terms` terms.
pub fn polynomial<R: Rng>(
    rng: &mut R,
    vars: &Arc<VarTable>,
    terms: usize,
    max_each: u32,
    max_total: u32,
) -> Polynomial {
    let n = vars.len();
    let mut p = Polynomial::zero(vars.clone(), CoeffKind::Exact);
    for _ in 0..terms {
        let m = monomial(rng, n, max_each, max_total);
        p.add_term(m, Coeff::Exact(small_rational(rng)));
    }
    p
}

/// Random system in 1 or 2 variables (chosen by `n`), each right-hand side
/// with 1..=3 terms, per-variable degree at most `max_each`, total degree at
/// most `max_total`, and at least one monomial of degree above two.
pub fn system<R: Rng>(rng: &mut R, n: usize, max_each: u32, max_total: u32) -> PolySystem {
    let vars = var_table(n);
    loop {
        let rhs: Vec<Polynomial> = (0..n)
            .map(|_| {
                let terms = rng.gen_range(1..=3);
                polynomial(rng, &vars, terms, max_each, max_total)
            })
            .collect();
        let s = PolySystem::new(vars.clone(), rhs).expect("consistent");
        if s.degree() > 2 {
            return s;
        }
    }
}

/// Random system with an equilibrium at a random small rational point: a
/// random system `p` shifted to `p(x) - p(x*)`.
pub fn system_with_equilibrium<R: Rng>(
    rng: &mut R,
    n: usize,
    max_each: u32,
    max_total: u32,
) -> (PolySystem, Point) {
    let s = system(rng, n, max_each, max_total);
    let pt = Point(
        (0..n)
            .map(|_| {
                let v: i64 = rng.gen_range(-2..=2);
                Coeff::ratio(v, *[1, 2].choose(rng).expect("non-empty"))
            })
            .collect(),
    );
    let rhs = s
        .rhs()
        .iter()
        .map(|p| {
            let c = p.evaluate(&pt).expect("arity");
            p.sub(&Polynomial::constant(s.vars().clone(), c)).expect("same table")
        })
        .collect();
    (PolySystem::new(s.vars().clone(), rhs).expect("consistent"), pt)
}

/// `k x k` matrix with small rational entries.
pub fn rational_matrix<R: Rng>(rng: &mut R, k: usize) -> SquareMatrix {
    SquareMatrix::from_rows(
        (0..k)
            .map(|_| {
                (0..k)
                    .map(|_| {
                        if rng.gen_bool(0.2) {
                            Coeff::zero(CoeffKind::Exact)
                        } else {
                            Coeff::Exact(small_rational(rng))
                        }
                    })
                    .collect()
            })
            .collect(),
    )
}

/// Unit upper-triangular `k x k` matrix with small rational entries above the diagonal.
pub fn unit_upper_triangular<R: Rng>(rng: &mut R, k: usize) -> SquareMatrix {
    let mut m = SquareMatrix::identity(k, CoeffKind::Exact);
    for i in 0..k {
        for j in i + 1..k {
            m.set(i, j, Coeff::Exact(small_rational(rng)));
        }
    }
    m
}
