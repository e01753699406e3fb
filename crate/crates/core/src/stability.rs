//! Stabilizers, dissipativity checks and the λ repair loop.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;

use crate::error::StabilityError;
use crate::matrix::{
    characteristic_polynomial, numeric_eigenvalues, rational_roots, routh_hurwitz, HurwitzVerdict,
    SquareMatrix,
};
use crate::poly::{Coeff, CoeffKind, Monomial, Point, PolySystem, Polynomial};
use crate::quadratize::{branch_and_bound, QuadratizationResult, SearchOptions};

/// Default real-part threshold for the numeric check.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Residual tolerance for equilibria given in floating point.
pub const EQUILIBRIUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub enum CheckMode {
    #[default]
    #[serde(rename = "exact-hurwitz")]
    Exact,
    #[serde(rename = "numeric-eigen")]
    Numeric,
}

impl std::fmt::Display for CheckMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CheckMode::Exact => "exact-hurwitz",
            CheckMode::Numeric => "numeric-eigen",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Dissipative,
    NotDissipative,
    Marginal,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Dissipative => "dissipative",
            Verdict::NotDissipative => "not-dissipative",
            Verdict::Marginal => "marginal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub mode: CheckMode,
    /// Numeric mode: dissipative iff every real part is below `-tol`.
    pub tol: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            mode: CheckMode::Exact,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointReport {
    /// Point at which the Jacobian was evaluated.
    pub point: Point,
    pub verdict: Verdict,
    /// Numeric mode only, sorted by (re, im).
    pub eigenvalues: Vec<Complex64>,
    /// Exact mode, when every eigenvalue is rational.
    pub exact_eigenvalues: Option<Vec<BigRational>>,
    /// Exact mode only.
    pub routh_first_column: Option<Vec<Coeff>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub lambda: u64,
    pub points: Vec<PointReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub mode: CheckMode,
    pub tol: f64,
    pub lambda: u64,
    /// Input equilibria in the original variables.
    pub equilibria: Vec<Point>,
    /// Verdicts of the returned system at the lifted equilibria.
    pub points: Vec<PointReport>,
    pub trace: Vec<TraceStep>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerSet {
    /// `h_i = y_i - a_i*b_i` over the extended variables.
    pub h: Vec<Polynomial>,
}

pub fn build_stabilizers(q: &QuadratizationResult) -> Result<StabilizerSet, StabilityError> {
    let n = q.n();
    let next = q.ext_vars.len();
    let kind = q.system.kind();
    if q.stabilizer_pairs.len() != q.g.len() {
        let missing = q.new_var_names()[q.stabilizer_pairs.len().min(q.g.len())..]
            .first()
            .cloned()
            .unwrap_or_default();
        return Err(StabilityError::MissingDecomposition(missing));
    }
    let mut h = Vec::with_capacity(q.g.len());
    for (i, &(a, b)) in q.stabilizer_pairs.iter().enumerate() {
        let yi = n + i;
        if a >= yi || b >= yi {
            return Err(StabilityError::MissingDecomposition(q.new_var_names()[i].clone()));
        }
        let mut e = vec![0u32; next];
        e[a] += 1;
        e[b] += 1;
        let mut p = Polynomial::var(q.ext_vars.clone(), kind, yi);
        p.add_term(Monomial::from_exponents(e), -Coeff::one(kind));
        h.push(p);
    }
    Ok(StabilizerSet { h })
}

/// `q` with total stabilizer gain `lambda`: `q2 := q2 - (lambda - q.lambda) * h`,
/// so the plain quadratization's `q2` minus `lambda * h`.
pub fn stabilized(q: &QuadratizationResult, h: &StabilizerSet, lambda: u64) -> QuadratizationResult {
    let kind = q.system.kind();
    let lam = lambda_coeff(lambda, kind).sub(&lambda_coeff(q.lambda, kind));
    let mut out = q.clone();
    out.q2 = q
        .q2
        .iter()
        .zip(&h.h)
        .map(|(p, hi)| p.sub(&hi.scale(&lam).expect("same kind")).expect("same table"))
        .collect();
    out.lambda = lambda;
    out
}

fn lambda_coeff(lambda: u64, kind: CoeffKind) -> Coeff {
    match kind {
        CoeffKind::Exact => Coeff::Exact(BigRational::from_integer(BigInt::from(lambda))),
        CoeffKind::Float => Coeff::Float(lambda as f64),
    }
}

/// `d rhs_i / d x_j` as polynomials.
pub fn symbolic_jacobian(sys: &PolySystem) -> Vec<Vec<Polynomial>> {
    sys.rhs()
        .iter()
        .map(|p| {
            (0..sys.dim())
                .map(|j| p.partial_derivative(j).expect("index in range"))
                .collect()
        })
        .collect()
}

fn eval_matrix(jac: &[Vec<Polynomial>], pt: &Point) -> Result<SquareMatrix, StabilityError> {
    let rows = jac
        .iter()
        .map(|row| row.iter().map(|p| p.evaluate(pt)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SquareMatrix::from_rows(rows))
}

pub fn jacobian(sys: &PolySystem, pt: &Point) -> Result<SquareMatrix, StabilityError> {
    eval_matrix(&symbolic_jacobian(sys), pt)
}

/// Jacobian of `h` with respect to the new variables (row `i` = `h_i`).
pub fn stabilizer_y_jacobian(h: &StabilizerSet, n: usize, pt: &Point) -> Result<SquareMatrix, StabilityError> {
    let rows = h
        .h
        .iter()
        .map(|hi| {
            (0..h.h.len())
                .map(|j| Ok(hi.partial_derivative(n + j)?.evaluate(pt)?))
                .collect::<Result<Vec<_>, StabilityError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SquareMatrix::from_rows(rows))
}

/// Ones on the diagonal and zeros on one side of it.
pub fn is_unit_triangular(m: &SquareMatrix) -> bool {
    let n = m.n();
    let diag = (0..n).all(|i| m.get(i, i).is_one());
    let lower = (0..n).all(|i| (i + 1..n).all(|j| m.get(i, j).is_zero()));
    let upper = (0..n).all(|i| (0..i).all(|j| m.get(i, j).is_zero()));
    diag && (lower || upper)
}

/// Verdict for a Jacobian already evaluated at the point.
pub fn classify(m: &SquareMatrix, point: Point, opts: &CheckOptions) -> Result<PointReport, StabilityError> {
    let mode = if m.kind() == CoeffKind::Float {
        CheckMode::Numeric
    } else {
        opts.mode
    };
    match mode {
        CheckMode::Exact => {
            let cp = characteristic_polynomial(m);
            let routh = routh_hurwitz(&cp)?;
            let verdict = match routh.verdict {
                HurwitzVerdict::Stable => Verdict::Dissipative,
                _ if cp.last().is_some_and(Coeff::is_zero) => Verdict::Marginal,
                _ => Verdict::NotDissipative,
            };
            let exact_eigenvalues = numeric_eigenvalues(m)
                .ok()
                .and_then(|ev| rational_roots(&cp, &ev));
            Ok(PointReport {
                point,
                verdict,
                eigenvalues: Vec::new(),
                exact_eigenvalues,
                routh_first_column: Some(routh.first_column),
            })
        }
        CheckMode::Numeric => {
            let ev = numeric_eigenvalues(m)?;
            let max_re = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
            let verdict = if ev.is_empty() || max_re < -opts.tol {
                Verdict::Dissipative
            } else if max_re > opts.tol {
                Verdict::NotDissipative
            } else {
                Verdict::Marginal
            };
            Ok(PointReport {
                point,
                verdict,
                eigenvalues: ev,
                exact_eigenvalues: None,
                routh_first_column: None,
            })
        }
    }
}

fn require_equilibrium(sys: &PolySystem, pt: &Point) -> Result<(), StabilityError> {
    if let Some(i) = sys.first_nonvanishing(pt, EQUILIBRIUM_TOL)? {
        return Err(StabilityError::NotEquilibrium {
            point: pt.to_string(),
            equation: sys.vars().name(i).to_string(),
        });
    }
    Ok(())
}

/// Checks that `pt` is an equilibrium of `sys` and classifies it.
pub fn check_dissipative(sys: &PolySystem, pt: &Point, opts: &CheckOptions) -> Result<PointReport, StabilityError> {
    require_equilibrium(sys, pt)?;
    classify(&jacobian(sys, pt)?, pt.clone(), opts)
}

#[derive(Debug, Clone, Default)]
pub struct DissipateOptions {
    pub check: CheckOptions,
    pub search: SearchOptions,
    /// Wall-clock limit for the whole call.
    pub timeout: Option<Duration>,
}

/// Exact mode needs rational data; anything else runs numerically.
fn effective_mode(sys: &PolySystem, pts: &[Point], mode: CheckMode, warnings: &mut Vec<String>) -> CheckMode {
    if mode == CheckMode::Exact
        && (sys.kind() == CoeffKind::Float || pts.iter().any(|p| p.kind() == CoeffKind::Float))
    {
        warnings.push("exact mode needs rational coefficients and equilibria; falling back to numeric mode".into());
        return CheckMode::Numeric;
    }
    mode
}

/// Quadratization that is dissipative at every given equilibrium: search,
/// then try `q2 - lambda*h` for lambda = 0, 1, 2, 4, ...
pub fn dissipative_quadratize(
    sys: &PolySystem,
    equilibria: &[Point],
    opts: &DissipateOptions,
) -> Result<(QuadratizationResult, StabilityReport), StabilityError> {
    // no clock unless asked for one (wasm32 has none)
    let deadline = opts.timeout.map(|t| (Instant::now(), t));
    let timed_out = || deadline.is_some_and(|(start, t)| start.elapsed() > t);
    let timeout_err = || StabilityError::Timeout {
        seconds: opts.timeout.map_or(0.0, |t| t.as_secs_f64()),
    };

    let mut warnings = Vec::new();
    let check = CheckOptions {
        mode: effective_mode(sys, equilibria, opts.check.mode, &mut warnings),
        tol: opts.check.tol,
    };

    let base_jac = symbolic_jacobian(sys);
    for pt in equilibria {
        if pt.len() != sys.dim() {
            return Err(crate::error::PolyError::PointArity {
                expected: sys.dim(),
                got: pt.len(),
            }
            .into());
        }
        require_equilibrium(sys, pt)?;
        let r = classify(&eval_matrix(&base_jac, pt)?, pt.clone(), &check)?;
        if r.verdict != Verdict::Dissipative {
            return Err(StabilityError::NotDissipative {
                point: pt.to_string(),
                verdict: r.verdict.to_string(),
            });
        }
    }

    let q = branch_and_bound(sys, &opts.search)?;
    if timed_out() {
        return Err(timeout_err());
    }
    let h = build_stabilizers(&q)?;
    let n = q.n();
    let lifted = q.lifted_system();
    let lifted_jac = symbolic_jacobian(&lifted);
    let mut hext: Vec<Vec<Polynomial>> = Vec::with_capacity(lifted.dim());
    for i in 0..lifted.dim() {
        let row = (0..lifted.dim())
            .map(|j| {
                if i < n {
                    Polynomial::zero(q.ext_vars.clone(), sys.kind())
                } else {
                    h.h[i - n].partial_derivative(j).expect("index in range")
                }
            })
            .collect();
        hext.push(row);
    }

    let mut base = Vec::with_capacity(equilibria.len());
    for pt in equilibria {
        let lp = q.lift_point(pt)?;
        let j0 = eval_matrix(&lifted_jac, &lp)?;
        let jh = eval_matrix(&hext, &lp)?;
        base.push((lp, j0, jh));
    }

    let mut trace = Vec::new();
    let mut lambda: u64 = 0;
    loop {
        if timed_out() {
            return Err(timeout_err());
        }
        let lam = lambda_coeff(lambda, base.first().map_or(sys.kind(), |b| b.1.kind()));
        let points = base
            .iter()
            .map(|(lp, j0, jh)| classify(&j0.sub_scaled(&lam, jh), lp.clone(), &check))
            .collect::<Result<Vec<_>, _>>()?;
        let done = points.iter().all(|p| p.verdict == Verdict::Dissipative);
        trace.push(TraceStep {
            lambda,
            points: points.clone(),
        });
        if done {
            let report = StabilityReport {
                mode: check.mode,
                tol: check.tol,
                lambda,
                equilibria: equilibria.to_vec(),
                points,
                trace,
                warnings,
            };
            return Ok((stabilized(&q, &h, lambda), report));
        }
        lambda = match lambda {
            0 => 1,
            l => l.checked_mul(2).ok_or(StabilityError::LambdaOverflow)?,
        };
    }
}
