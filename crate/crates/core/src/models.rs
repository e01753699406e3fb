//! Benchmark systems used by the CLI, the tests and the web demo.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::StabilityError;
use crate::parser::parse_system;
use crate::poly::{Coeff, Point, PolySystem};
use crate::quadratize::{branch_and_bound, RewriteRule, SearchOptions};
use crate::stability::{check_dissipative, dissipative_quadratize, CheckMode, CheckOptions, DissipateOptions, Verdict};

fn sys(src: &str) -> PolySystem {
    parse_system(src).expect("built-in model parses")
}

/// `x' = -x + x^3`.
pub fn cubic() -> PolySystem {
    sys("x' = -x + x^3")
}

/// Stable quadratic lift of [`cubic`] with `y = x^2`.
pub fn cubic_stable_lift() -> PolySystem {
    sys("x' = -x + x*y\ny' = -2*y + 2*y^2")
}

/// Same lift plus `12*(y - x^2)` in the `y` equation; unstable at the origin.
pub fn cubic_unstable_lift() -> PolySystem {
    sys("x' = -x + x*y\ny' = 10*y - 12*x^2 + 2*y^2")
}

/// `x' = -x(x - a)(x - 2a)` with its dissipative equilibria `0` and `2a`.
pub fn three_equilibria(a: i64) -> (PolySystem, Vec<Point>) {
    (
        sys(&format!("x' = -x*(x - {a})*(x - 2*{a})")),
        vec![Point::from_ints(&[0]), Point::from_ints(&[2 * a])],
    )
}

pub fn stabilizers_example() -> PolySystem {
    sys("x1' = -3*x1 + x2^4\nx2' = -2*x2 + x1^2")
}

/// Duffing oscillator `x1' = x2, x2' = x1^3 - x1 - x2` and its origin.
pub fn duffing() -> (PolySystem, Vec<Point>) {
    (sys("x1' = x2\nx2' = x1^3 - x1 - x2"), vec![Point::from_ints(&[0, 0])])
}

/// Bistable `x' = k1*x^2 - k2*x^3 - k3*x` with `(k1, k2, k3) = (2/5, 1, 3/100)`
/// and its dissipative equilibria `0` and `3/10`.
pub fn bistable() -> (PolySystem, Vec<Point>) {
    (
        sys("x' = 0.4*x^2 - x^3 - 0.03*x"),
        vec![
            Point::from_ints(&[0]),
            Point(vec![Coeff::ratio(3, 10)]),
        ],
    )
}

/// Rewrite rule that keeps the bistable lift in its published form
/// (`x^2` written as `y`).
pub const BISTABLE_RULE: RewriteRule = RewriteRule::MostLifted;

/// The tridiagonal coupling matrix: 1 on the diagonal, 1/3 beside it.
pub fn coupling_matrix(n: usize) -> Vec<Vec<BigRational>> {
    let third = BigRational::new(BigInt::one(), BigInt::from(3));
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match i.abs_diff(j) {
                    0 => BigRational::one(),
                    1 => third.clone(),
                    _ => BigRational::zero(),
                })
                .collect()
        })
        .collect()
}

/// `n` coupled Duffing oscillators `x' = z, z' = Ax - (Ax)^3 - 2z`.
/// Variables are `x1..xn, z1..zn`.
pub fn coupled_duffing(n: usize) -> PolySystem {
    let a = coupling_matrix(n);
    let mut src = String::new();
    for i in 1..=n {
        src.push_str(&format!("x{i}' = z{i}\n"));
    }
    for (i, row) in a.iter().enumerate() {
        let ax: Vec<String> = row
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(j, c)| format!("{}*x{}", crate::poly::format_rational(c), j + 1))
            .collect();
        let ax = ax.join(" + ");
        src.push_str(&format!("z{0}' = ({ax}) - ({ax})^3 - 2*z{0}\n", i + 1));
    }
    sys(&src)
}

/// Exact solution of `A x = b` by Gaussian elimination; `None` if singular.
pub fn solve_rational(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = a.len();
    let mut m: Vec<Vec<BigRational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let p = m[col][col].clone();
        for v in m[col].iter_mut() {
            *v = &*v / &p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let pivot_row = m[col].clone();
                for (v, pv) in m[r].iter_mut().zip(&pivot_row) {
                    *v = &*v - &f * pv;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n].clone()).collect())
}

/// The `2^n` equilibria `z = 0, Ax = s` for sign patterns `s` in `{-1, 1}^n`,
/// in binary order of the pattern (bit `i` set means `s_i = 1`).
pub fn coupled_duffing_equilibria(n: usize) -> Vec<Point> {
    let a = coupling_matrix(n);
    (0..1u64 << n)
        .map(|mask| {
            let s: Vec<BigRational> = (0..n)
                .map(|i| {
                    if mask >> i & 1 == 1 {
                        BigRational::one()
                    } else {
                        -BigRational::one()
                    }
                })
                .collect();
            let x = solve_rational(&a, &s).expect("coupling matrix is nonsingular");
            let mut coords: Vec<Coeff> = x.into_iter().map(Coeff::Exact).collect();
            coords.extend((0..n).map(|_| Coeff::Exact(BigRational::zero())));
            Point(coords)
        })
        .collect()
}

/// One row of the coupled-oscillator benchmark.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub dimension: usize,
    pub equilibria: usize,
    pub new_vars: usize,
    pub lambda: Option<u64>,
    pub t_quadratize: f64,
    pub t_dissipate_numeric: Option<f64>,
    /// `None` when not requested; `Some(Err(limit))` on timeout.
    #[serde(skip)]
    pub t_dissipate_exact: Option<Result<f64, f64>>,
}

/// Builds the `n`-oscillator system, keeps the dissipative candidate
/// equilibria and runs the pipeline. `exact_timeout` enables the exact column.
pub fn bench_row(n: usize, exact_timeout: Option<Duration>, search: &SearchOptions) -> Result<BenchRow, StabilityError> {
    let s = coupled_duffing(n);
    let numeric = CheckOptions {
        mode: CheckMode::Numeric,
        ..Default::default()
    };
    let eq: Vec<Point> = coupled_duffing_equilibria(n)
        .into_iter()
        .filter(|p| check_dissipative(&s, p, &numeric).is_ok_and(|r| r.verdict == Verdict::Dissipative))
        .collect();

    let t0 = Instant::now();
    let q = branch_and_bound(&s, search)?;
    let t_quadratize = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let opts = DissipateOptions {
        check: numeric,
        search: search.clone(),
        timeout: None,
    };
    let (_, rep) = dissipative_quadratize(&s, &eq, &opts)?;
    let t_numeric = t0.elapsed().as_secs_f64();

    let t_exact = exact_timeout.map(|limit| {
        let t0 = Instant::now();
        let opts = DissipateOptions {
            check: CheckOptions::default(),
            search: search.clone(),
            timeout: Some(limit),
        };
        match dissipative_quadratize(&s, &eq, &opts) {
            Ok(_) => Ok(t0.elapsed().as_secs_f64()),
            Err(_) => Err(limit.as_secs_f64()),
        }
    });

    Ok(BenchRow {
        n,
        dimension: s.dim(),
        equilibria: eq.len(),
        new_vars: q.g.len(),
        lambda: Some(rep.lambda),
        t_quadratize,
        t_dissipate_numeric: Some(t_numeric),
        t_dissipate_exact: t_exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn models_have_their_equilibria() {
        for (s, pts) in [three_equilibria(1), three_equilibria(5), duffing(), bistable()] {
            for p in &pts {
                assert_eq!(s.first_nonvanishing(p, 0.0).unwrap(), None, "{p}");
            }
        }
    }

    #[test]
    fn coupled_duffing_shape() {
        let s = coupled_duffing(2);
        assert_eq!(s.vars().names(), ["x1", "x2", "z1", "z2"]);
        assert_eq!(s.degree(), 3);
        for n in 1..=3 {
            let s = coupled_duffing(n);
            let eq = coupled_duffing_equilibria(n);
            assert_eq!(eq.len(), 1 << n);
            for p in &eq {
                assert_eq!(s.first_nonvanishing(p, 0.0).unwrap(), None);
            }
        }
    }

    #[test]
    fn single_oscillator_equilibria() {
        let eq = coupled_duffing_equilibria(1);
        assert_eq!(eq, vec![Point::from_ints(&[-1, 0]), Point::from_ints(&[1, 0])]);
    }

    #[test]
    fn rational_solver() {
        let a = coupling_matrix(2);
        let one = BigRational::one();
        let x = solve_rational(&a, &[one.clone(), one.clone()]).unwrap();
        // x1 = x2 = 3/4
        assert_eq!(x, vec![BigRational::new(3.into(), 4.into()); 2]);
        let singular = vec![vec![one.clone(), one.clone()], vec![one.clone(), one.clone()]];
        assert!(solve_rational(&singular, &[one.clone(), one]).is_none());
    }
}
