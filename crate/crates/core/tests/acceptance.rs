//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any fails.

mod common;

use std::time::Instant;

use dissquad::matrix::{characteristic_polynomial, poly_divides, routh_hurwitz_stable};
use dissquad::models::{self, BISTABLE_RULE};
use dissquad::parser::{parse_polynomial, parse_system};
use dissquad::poly::{Coeff, CoeffKind, Monomial, Point, PolySystem};
use dissquad::quadratize::{branch_and_bound, carothers_set, is_inner_quadratic, SearchOptions};
use dissquad::random;
use dissquad::simulate::{compare, integrate, to_float_point, IntegrateOptions, Status};
use dissquad::stability::{
    build_stabilizers, check_dissipative, dissipative_quadratize, jacobian, stabilized, stabilizer_y_jacobian,
    CheckMode, CheckOptions, DissipateOptions, StabilityReport, Verdict,
};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn exact_opts() -> DissipateOptions {
    DissipateOptions::default()
}

fn numeric_opts() -> DissipateOptions {
    DissipateOptions {
        check: CheckOptions {
            mode: CheckMode::Numeric,
            ..Default::default()
        },
        ..Default::default()
    }
}

fn ints(v: &[i64]) -> Vec<BigRational> {
    v.iter().map(|&x| BigRational::from_integer(x.into())).collect()
}

fn table1() -> Outcome {
    let t0 = Instant::now();
    let (s, pts) = models::three_equilibria(1);
    let (_, rep) = dissipative_quadratize(&s, &pts, &exact_opts()).map_err(|e| e.to_string())?;
    let secs = t0.elapsed().as_secs_f64();
    let expected: [(u64, [i64; 2], [i64; 2]); 4] = [
        (1, [-2, -1], [-2, 3]),
        (2, [-2, -2], [-2, 2]),
        (4, [-4, -2], [-2, 0]),
        (8, [-8, -2], [-4, -2]),
    ];
    ensure(rep.lambda == 8, || format!("lambda = {}", rep.lambda))?;
    for (lam, origin, far) in expected {
        let step = rep
            .trace
            .iter()
            .find(|s| s.lambda == lam)
            .ok_or_else(|| format!("no trace row for lambda = {lam}"))?;
        for (p, want) in step.points.iter().zip([origin, far]) {
            // eigenvalues are reported ascending; compare as sets
            let mut want = ints(&want);
            want.sort();
            ensure(p.exact_eigenvalues.as_ref() == Some(&want), || {
                format!("lambda = {lam} at {}: {:?}", p.point, p.exact_eigenvalues)
            })?;
        }
    }
    ensure(secs < 1.0, || format!("took {secs:.3} s"))?;
    Ok(format!("lambda = 8, four trace rows exact, {secs:.3} s"))
}

fn table2() -> Outcome {
    let t0 = Instant::now();
    let mut got = Vec::new();
    for (a, want) in [(1, 8u64), (5, 128), (10, 512), (50, 16384), (100, 65536)] {
        let (s, pts) = models::three_equilibria(a);
        let (_, rep) = dissipative_quadratize(&s, &pts, &exact_opts()).map_err(|e| e.to_string())?;
        ensure(rep.lambda == want, || format!("a = {a}: lambda = {}, expected {want}", rep.lambda))?;
        got.push(rep.lambda.to_string());
    }
    let secs = t0.elapsed().as_secs_f64();
    ensure(secs < 5.0, || format!("took {secs:.3} s"))?;
    Ok(format!("lambda = [{}], {secs:.3} s", got.join(", ")))
}

fn table3() -> Outcome {
    let mut cells = Vec::new();
    for (n, eq, nv) in [(1, 2, 1), (2, 4, 2), (3, 8, 4), (4, 16, 5)] {
        let t0 = Instant::now();
        let row = models::bench_row(n, None, &SearchOptions::default()).map_err(|e| e.to_string())?;
        let secs = t0.elapsed().as_secs_f64();
        ensure(row.equilibria == eq && row.new_vars == nv, || {
            format!("n = {n}: {} equilibria, {} new vars", row.equilibria, row.new_vars)
        })?;
        ensure(secs < 60.0, || format!("n = {n} took {secs:.1} s"))?;
        cells.push(format!("n={n}: {eq}/{nv} ({secs:.2} s)"));
    }
    Ok(cells.join(", "))
}

fn duffing() -> Outcome {
    let (s, pts) = models::duffing();
    let (q, rep) = dissipative_quadratize(&s, &pts, &exact_opts()).map_err(|e| e.to_string())?;
    ensure(q.g == vec![Monomial::from_exponents(vec![2, 0])], || format!("g = {:?}", q.new_var_definitions()))?;
    ensure(rep.lambda == 1, || format!("lambda = {}", rep.lambda))?;
    let want = parse_polynomial("-y1 + x1^2 + 2*x1*x2", q.ext_vars.clone()).map_err(|e| e.to_string())?;
    ensure(q.q2[0] == want, || format!("y1' = {}", q.q2[0]))?;
    Ok(format!("g = [x1^2], lambda = 1, y1' = {}", q.q2[0]))
}

fn bistable() -> Outcome {
    let (s, pts) = models::bistable();
    let opts = DissipateOptions {
        search: SearchOptions {
            rule: BISTABLE_RULE,
            ..Default::default()
        },
        ..exact_opts()
    };
    let (q, rep) = dissipative_quadratize(&s, &pts, &opts).map_err(|e| e.to_string())?;
    ensure(rep.lambda == 0, || format!("lambda = {}", rep.lambda))?;
    ensure(rep.points.iter().all(|p| p.verdict == Verdict::Dissipative), || "not dissipative".into())?;
    let z0 = q.lift_point(&Point::from_f64(&[0.4])).map_err(|e| e.to_string())?;
    let tr = integrate(&q.lifted_system(), &to_float_point(&z0), 200.0, &IntegrateOptions::default())
        .map_err(|e| e.to_string())?;
    let end = tr.last().ok_or("empty trajectory")?;
    let err = (end[0] - 0.3).abs().max((end[1] - 0.09).abs());
    ensure(tr.status == Status::Completed && err < 1e-3, || format!("state at t = 200: {end:?}"))?;
    Ok(format!("lambda = 0, |z(200) - (0.3, 0.09)| = {err:.1e}"))
}

fn figure1() -> Outcome {
    let x0 = Point::from_f64(&[0.1, 0.01]);
    let opts = IntegrateOptions::default();
    let stable = integrate(&models::cubic_stable_lift(), &x0, 10.0, &opts).map_err(|e| e.to_string())?;
    let end = stable.last().ok_or("empty trajectory")?;
    let norm = end.iter().map(|v| v * v).sum::<f64>().sqrt();
    ensure(stable.status == Status::Completed && norm < 1e-3, || format!("stable lift ends at {end:?}"))?;
    let unstable = integrate(&models::cubic_unstable_lift(), &x0, 10.0, &opts).map_err(|e| e.to_string())?;
    let Status::BlowUp { t } = unstable.status else {
        return Err("unstable lift did not blow up".into());
    };
    let g = [Monomial::from_exponents(vec![2])];
    let drift = compare(&models::cubic(), &models::cubic_stable_lift(), &g, &Point::from_f64(&[0.1]), 10.0, &opts)
        .map_err(|e| e.to_string())?;
    ensure(drift.max_invariant_drift < 1e-4, || format!("invariant drift {:e}", drift.max_invariant_drift))?;
    Ok(format!(
        "stable norm {norm:.1e} at t = 10, unstable blow-up at t = {t:.3}, drift {:.1e}",
        drift.max_invariant_drift
    ))
}

/// Pass counts for the randomized invariants, 200 seeded instances each.
fn properties() -> Outcome {
    const COUNT: usize = 200;
    let seed = std::env::var("DISSQUAD_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(2024u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pass = [0usize; 6];
    let names = ["soundness", "inner", "stabilizers", "spectrum", "doubling", "optimality"];
    let search = SearchOptions::default();
    let small = |rng: &mut ChaCha8Rng| -> PolySystem {
        if rng.gen_bool(0.5) {
            random::system(rng, 1, 5, 5)
        } else {
            random::system(rng, 2, 3, 5)
        }
    };

    for _ in 0..COUNT {
        let s = small(&mut rng);
        let q = branch_and_bound(&s, &search).map_err(|e| e.to_string())?;
        pass[0] += q.verify().is_ok() as usize;
        pass[1] += is_inner_quadratic(s.dim(), &q.g) as usize;

        let h = build_stabilizers(&q).map_err(|e| e.to_string())?;
        let pt = Point((0..s.dim()).map(|_| Coeff::Exact(random::small_rational(&mut rng))).collect());
        let jy = stabilizer_y_jacobian(&h, s.dim(), &q.lift_point(&pt).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let lower = (0..jy.n()).all(|i| jy.get(i, i).is_one() && (i + 1..jy.n()).all(|j| jy.get(i, j).is_zero()));
        let vanish = h.h.iter().all(|p| q.substitute(p).is_ok_and(|r| r.is_zero()));
        pass[2] += (lower && vanish) as usize;

        let pool = carothers_set(&s);
        pass[5] += match common::brute_force_minimum(&s, q.g.len()) {
            Some(best) => q.g.len() <= best.len() && (q.g.iter().any(|m| !pool.contains(m)) || q.g.len() == best.len()),
            None => q.g.iter().any(|m| !pool.contains(m)),
        } as usize;
    }

    for _ in 0..COUNT {
        let n = rng.gen_range(1..=2);
        let (s, pt) = random::system_with_equilibrium(&mut rng, n, 3, 4);
        let q = branch_and_bound(&s, &search).map_err(|e| e.to_string())?;
        let h = build_stabilizers(&q).map_err(|e| e.to_string())?;
        let lam = rng.gen_range(0..64);
        let inner = characteristic_polynomial(&jacobian(&s, &pt).map_err(|e| e.to_string())?);
        let lp = q.lift_point(&pt).map_err(|e| e.to_string())?;
        let full = jacobian(&stabilized(&q, &h, lam).lifted_system(), &lp).map_err(|e| e.to_string())?;
        pass[3] += (poly_divides(&inner, &characteristic_polynomial(&full)) == Some(true)) as usize;
    }

    for _ in 0..COUNT {
        let a = random::rational_matrix(&mut rng, 4);
        let b = random::unit_upper_triangular(&mut rng, 4);
        let mut lambda: u64 = 1;
        let ok = (0..64).any(|_| {
            let m = a.sub_scaled(&Coeff::from_int(CoeffKind::Exact, lambda as i64), &b);
            let stable = routh_hurwitz_stable(&characteristic_polynomial(&m)).unwrap_or(false);
            lambda = lambda.saturating_mul(2);
            stable
        });
        pass[4] += ok as usize;
    }

    let summary: Vec<String> = names.iter().zip(pass).map(|(n, p)| format!("{n} {p}/{COUNT}")).collect();
    let summary = summary.join(", ");
    if pass.iter().all(|&p| p == COUNT) {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn verdicts(rep: &StabilityReport) -> Vec<(u64, Vec<Verdict>)> {
    rep.trace
        .iter()
        .map(|s| (s.lambda, s.points.iter().map(|p| p.verdict).collect()))
        .collect()
}

fn agree(name: &str, s: &PolySystem, pts: &[Point], search: SearchOptions) -> Result<(), String> {
    let run = |mut o: DissipateOptions| {
        o.search = search.clone();
        dissipative_quadratize(s, pts, &o).map_err(|e| format!("{name}: {e}"))
    };
    let (_, e) = run(exact_opts())?;
    let (_, n) = run(numeric_opts())?;
    ensure(verdicts(&e) == verdicts(&n), || format!("{name}: exact {:?} vs numeric {:?}", verdicts(&e), verdicts(&n)))?;
    for p in pts {
        let a = check_dissipative(s, p, &CheckOptions::default()).map_err(|e| e.to_string())?;
        let b = check_dissipative(s, p, &numeric_opts().check).map_err(|e| e.to_string())?;
        ensure(a.verdict == b.verdict, || format!("{name} at {p}: {} vs {}", a.verdict, b.verdict))?;
    }
    Ok(())
}

fn backends() -> Outcome {
    let mut count = 0;
    for a in [1, 5, 10, 50, 100] {
        let (s, pts) = models::three_equilibria(a);
        agree(&format!("a = {a}"), &s, &pts, SearchOptions::default())?;
        count += 1;
    }
    for n in 1..=4 {
        let s = models::coupled_duffing(n);
        let pts = models::coupled_duffing_equilibria(n);
        agree(&format!("coupled n = {n}"), &s, &pts, SearchOptions::default())?;
        count += 1;
    }
    let (s, pts) = models::duffing();
    agree("duffing", &s, &pts, SearchOptions::default())?;
    let (s, pts) = models::bistable();
    agree(
        "bistable",
        &s,
        &pts,
        SearchOptions {
            rule: BISTABLE_RULE,
            ..Default::default()
        },
    )?;
    count += 2;
    // the quadratic lifts of the cubic, checked as given at the origin
    for (name, s) in [("stable lift", models::cubic_stable_lift()), ("unstable lift", models::cubic_unstable_lift())] {
        let o = Point::from_ints(&[0, 0]);
        let a = check_dissipative(&s, &o, &CheckOptions::default()).map_err(|e| e.to_string())?;
        let b = check_dissipative(&s, &o, &numeric_opts().check).map_err(|e| e.to_string())?;
        ensure(a.verdict == b.verdict, || format!("{name}: {} vs {}", a.verdict, b.verdict))?;
        count += 1;
    }
    Ok(format!("{count} fixtures, identical verdicts on every trace row"))
}

fn main() {
    // sanity: fixtures parse as expected
    assert_eq!(parse_system("x' = x").unwrap().dim(), 1);

    let criteria: [Criterion; 8] = [
        ("Table 1 trace, exact", table1),
        ("Table 2 lambdas", table2),
        ("Table 3 structure", table3),
        ("Duffing", duffing),
        ("bistable", bistable),
        ("Figure 1 contrast", figure1),
        ("property suite", properties),
        ("backend agreement", backends),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let r = f();
        let secs = t0.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail} [{secs:.2} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail} [{secs:.2} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
