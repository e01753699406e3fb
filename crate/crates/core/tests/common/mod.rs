#![allow(dead_code)]

use std::sync::Arc;

use dissquad::poly::{Coeff, CoeffKind, Monomial, Point, PolySystem, Polynomial, VarTable};
use dissquad::quadratize::{carothers_set, compute_ns_nq, is_inner_quadratic};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

/// 200 cases from a fixed seed; `DISSQUAD_SEED` picks another one.
pub fn config() -> Config {
    let seed = std::env::var("DISSQUAD_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0x5eed_d155);
    Config {
        cases: 200,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..Config::default()
    }
}

pub fn vars(n: usize) -> Arc<VarTable> {
    dissquad::random::var_table(n)
}

pub fn rational() -> impl Strategy<Value = Coeff> {
    (-6i64..=6, 1i64..=4).prop_filter_map("nonzero", |(n, d)| (n != 0).then(|| Coeff::ratio(n, d)))
}

pub fn exponents(n: usize, max_each: u32, max_total: u32) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0..=max_each, n).prop_filter("total degree", move |e| e.iter().sum::<u32>() <= max_total)
}

pub fn polynomial(vars: Arc<VarTable>, max_terms: usize, max_each: u32, max_total: u32) -> impl Strategy<Value = Polynomial> {
    let n = vars.len();
    prop::collection::vec((exponents(n, max_each, max_total), rational()), 0..=max_terms).prop_map(move |terms| {
        Polynomial::from_terms(
            vars.clone(),
            CoeffKind::Exact,
            terms.into_iter().map(|(e, c)| (Monomial::from_exponents(e), c)),
        )
    })
}

/// Systems in `n` variables with nonzero right-hand sides of degree above two.
pub fn system(n: usize, max_each: u32, max_total: u32) -> impl Strategy<Value = PolySystem> {
    let v = vars(n);
    prop::collection::vec(polynomial(v.clone(), 3, max_each, max_total), n)
        .prop_map(move |rhs| PolySystem::new(v.clone(), rhs).expect("consistent"))
        .prop_filter("degree above two", |s| s.degree() > 2)
}

/// One or two variables, per-variable degree at most 3, total degree at most 5
/// (degree at most 5 in one variable).
pub fn small_system() -> impl Strategy<Value = PolySystem> {
    prop_oneof![system(1, 5, 5), system(2, 3, 5)]
}

pub fn small_point(n: usize) -> impl Strategy<Value = Point> {
    prop::collection::vec((-2i64..=2, 1i64..=2), n)
        .prop_map(|v| Point(v.into_iter().map(|(a, b)| Coeff::ratio(a, b)).collect()))
}

/// A system shifted so that the given point is an equilibrium.
pub fn with_equilibrium(n: usize, max_each: u32, max_total: u32) -> impl Strategy<Value = (PolySystem, Point)> {
    (system(n, max_each, max_total), small_point(n)).prop_map(|(s, p)| {
        let rhs = s
            .rhs()
            .iter()
            .map(|q| {
                let c = q.evaluate(&p).expect("arity");
                q.sub(&Polynomial::constant(s.vars().clone(), c)).expect("same table")
            })
            .collect();
        (PolySystem::new(s.vars().clone(), rhs).expect("consistent"), p)
    })
}

/// Smallest subset of the universal set that is an inner-quadratic
/// quadratization, among subsets of at most `limit` elements.
pub fn brute_force_minimum(s: &PolySystem, limit: usize) -> Option<Vec<Monomial>> {
    let pool = carothers_set(s);
    assert!(pool.len() < 20, "universal set too large for brute force");
    (0u32..1 << pool.len())
        .filter(|mask| mask.count_ones() as usize <= limit)
        .map(|mask| {
            (0..pool.len())
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| pool[i].clone())
                .collect::<Vec<_>>()
        })
        .filter(|g| compute_ns_nq(s, g).is_solution() && is_inner_quadratic(s.dim(), g))
        .min_by_key(Vec::len)
}
