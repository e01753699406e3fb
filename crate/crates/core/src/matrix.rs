//! Small dense matrices, characteristic polynomials and Hurwitz tests.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::StabilityError;
use crate::poly::{Coeff, CoeffKind};

#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    kind: CoeffKind,
    entries: Vec<Coeff>,
}

impl SquareMatrix {
    pub fn zeros(n: usize, kind: CoeffKind) -> Self {
        Self {
            n,
            kind,
            entries: vec![Coeff::zero(kind); n * n],
        }
    }

    pub fn identity(n: usize, kind: CoeffKind) -> Self {
        let mut m = Self::zeros(n, kind);
        for i in 0..n {
            m.set(i, i, Coeff::one(kind));
        }
        m
    }

    /// Builds a matrix from rows; entries are converted to a common kind
    /// (float if any entry is float).
    ///
    /// # Panics
    /// If the rows do not form a square.
    pub fn from_rows(rows: Vec<Vec<Coeff>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        let kind = if rows.iter().flatten().all(|c| c.kind() == CoeffKind::Exact) {
            CoeffKind::Exact
        } else {
            CoeffKind::Float
        };
        let entries = rows.into_iter().flatten().map(|c| c.to_kind(kind)).collect();
        Self { n, kind, entries }
    }

    pub fn from_ints(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| Coeff::from_int(CoeffKind::Exact, v)).collect())
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> CoeffKind {
        self.kind
    }

    pub fn get(&self, i: usize, j: usize) -> &Coeff {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, c: Coeff) {
        self.entries[i * self.n + j] = c.to_kind(self.kind);
    }

    pub fn to_kind(&self, kind: CoeffKind) -> SquareMatrix {
        SquareMatrix {
            n: self.n,
            kind,
            entries: self.entries.iter().map(|c| c.to_kind(kind)).collect(),
        }
    }

    /// `self - s * other`.
    pub fn sub_scaled(&self, s: &Coeff, other: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.n, other.n);
        let kind = if self.kind == CoeffKind::Exact && other.kind == CoeffKind::Exact {
            CoeffKind::Exact
        } else {
            CoeffKind::Float
        };
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.sub(&s.mul(b)).to_kind(kind))
            .collect();
        SquareMatrix {
            n: self.n,
            kind,
            entries,
        }
    }

    pub fn mul(&self, other: &SquareMatrix) -> SquareMatrix {
        let n = self.n;
        let mut out = SquareMatrix::zeros(n, self.kind);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        let v = out.get(i, j).add(&a.mul(b));
                        out.set(i, j, v);
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Coeff {
        (0..self.n).fold(Coeff::zero(self.kind), |acc, i| acc.add(self.get(i, i)))
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).to_f64())
    }

    pub fn rows(&self) -> Vec<Vec<Coeff>> {
        self.entries.chunks(self.n.max(1)).map(<[Coeff]>::to_vec).collect()
    }
}

impl fmt::Display for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.n {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for j in 0..self.n {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

/// Coefficients of `det(tI - M)`, highest degree first (so the first entry is 1).
/// Faddeev–LeVerrier; exact for rational matrices.
pub fn characteristic_polynomial(m: &SquareMatrix) -> Vec<Coeff> {
    let n = m.n();
    let kind = m.kind();
    let mut coeffs = vec![Coeff::one(kind)];
    let mut mk = SquareMatrix::zeros(n, kind);
    let id = SquareMatrix::identity(n, kind);
    let mut c_prev = Coeff::one(kind);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let am = m.mul(&mk);
        mk = am.sub_scaled(&-c_prev.clone(), &id);
        let tr = m.mul(&mk).trace();
        let c = (-tr)
            .div(&Coeff::from_int(kind, k as i64))
            .expect("k > 0");
        coeffs.push(c.clone());
        c_prev = c;
    }
    coeffs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HurwitzVerdict {
    Stable,
    UnstableOrMarginal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouthOutcome {
    pub verdict: HurwitzVerdict,
    /// First column of the Routh array as far as it was computed.
    pub first_column: Vec<Coeff>,
}

/// Routh–Hurwitz test on a polynomial given highest degree first. Strict:
/// any zero or sign change in the first column means not stable.
pub fn routh_hurwitz(charpoly: &[Coeff]) -> Result<RouthOutcome, StabilityError> {
    let lead = charpoly.first().ok_or(StabilityError::ZeroLeadingCoefficient)?;
    if lead.is_zero() {
        return Err(StabilityError::ZeroLeadingCoefficient);
    }
    let p: Vec<Coeff> = if lead.is_negative() {
        charpoly.iter().map(|c| -c.clone()).collect()
    } else {
        charpoly.to_vec()
    };
    let unstable = |first_column| {
        Ok(RouthOutcome {
            verdict: HurwitzVerdict::UnstableOrMarginal,
            first_column,
        })
    };
    if p.len() == 1 {
        return Ok(RouthOutcome {
            verdict: HurwitzVerdict::Stable,
            first_column: vec![p[0].clone()],
        });
    }
    let kind = p[0].kind();
    let mut prev: Vec<Coeff> = p.iter().step_by(2).cloned().collect();
    let mut cur: Vec<Coeff> = p.iter().skip(1).step_by(2).cloned().collect();
    let mut first = vec![prev[0].clone()];
    if p.iter().any(|c| !c.is_positive()) {
        first.push(cur[0].clone());
        return unstable(first);
    }
    let rows = p.len();
    for _ in 1..rows {
        let pivot = cur.first().cloned().unwrap_or_else(|| Coeff::zero(kind));
        first.push(pivot.clone());
        if !pivot.is_positive() {
            return unstable(first);
        }
        let width = prev.len().max(cur.len());
        let at = |v: &Vec<Coeff>, i: usize| v.get(i).cloned().unwrap_or_else(|| Coeff::zero(kind));
        let mut next = Vec::with_capacity(width);
        for i in 0..width.saturating_sub(1) {
            let v = pivot
                .mul(&at(&prev, i + 1))
                .sub(&prev[0].mul(&at(&cur, i + 1)))
                .div(&pivot)
                .expect("pivot is positive");
            next.push(v);
        }
        while next.last().is_some_and(Coeff::is_zero) && next.len() > 1 {
            next.pop();
        }
        prev = std::mem::replace(&mut cur, next);
        if cur.is_empty() {
            break;
        }
    }
    Ok(RouthOutcome {
        verdict: HurwitzVerdict::Stable,
        first_column: first,
    })
}

/// `true` iff every root of the polynomial has negative real part.
pub fn routh_hurwitz_stable(charpoly: &[Coeff]) -> Result<bool, StabilityError> {
    Ok(routh_hurwitz(charpoly)?.verdict == HurwitzVerdict::Stable)
}

/// All eigenvalues, sorted by (re, im).
pub fn numeric_eigenvalues(m: &SquareMatrix) -> Result<Vec<Complex64>, StabilityError> {
    if m.n() == 0 {
        return Ok(Vec::new());
    }
    let a = m.to_nalgebra();
    let schur = nalgebra::Schur::try_new(a, 1e-14, 10_000).ok_or(StabilityError::EigenNoConvergence)?;
    let mut ev: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    if ev.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(StabilityError::EigenNoConvergence);
    }
    sort_complex(&mut ev);
    Ok(ev)
}

pub fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

fn exact_coeffs(p: &[Coeff]) -> Option<Vec<BigRational>> {
    p.iter().map(|c| c.as_exact().cloned()).collect()
}

/// Remainder and quotient of `num / den` (highest degree first, exact).
pub fn poly_divmod(num: &[BigRational], den: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let den: Vec<BigRational> = den.iter().skip_while(|c| c.is_zero()).cloned().collect();
    assert!(!den.is_empty(), "division by the zero polynomial");
    let mut rem: Vec<BigRational> = num.to_vec();
    if rem.len() < den.len() {
        return (Vec::new(), rem);
    }
    let qlen = rem.len() - den.len() + 1;
    let mut quot = Vec::with_capacity(qlen);
    for i in 0..qlen {
        let q = &rem[i] / &den[0];
        for (j, d) in den.iter().enumerate() {
            rem[i + j] = &rem[i + j] - &q * d;
        }
        quot.push(q);
    }
    let rem = rem.split_off(qlen);
    (quot, rem)
}

/// Whether `den` divides `num` exactly.
pub fn poly_divides(den: &[Coeff], num: &[Coeff]) -> Option<bool> {
    let (n, d) = (exact_coeffs(num)?, exact_coeffs(den)?);
    let (_, r) = poly_divmod(&n, &d);
    Some(r.iter().all(Zero::is_zero))
}

fn eval_rational(p: &[BigRational], x: &BigRational) -> BigRational {
    p.iter().fold(BigRational::zero(), |acc, c| acc * x + c)
}

/// Continued-fraction convergents of `x` with denominators below `max_den`.
fn convergents(x: f64, max_den: i64) -> Vec<BigRational> {
    use num_bigint::BigInt;
    let mut out = Vec::new();
    if !x.is_finite() {
        return out;
    }
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut r = x;
    for _ in 0..40 {
        let a = r.floor();
        let Some(ab) = BigRational::from_float(a).map(|v| v.to_integer()) else {
            break;
        };
        let h2 = &ab * &h1 + &h0;
        let k2 = &ab * &k1 + &k0;
        if k2 > BigInt::from(max_den) {
            break;
        }
        out.push(BigRational::new(h2.clone(), k2.clone()));
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a;
        if frac.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    out
}

/// Exact roots of a rational polynomial whose roots are all rational, found
/// from numeric approximations and verified by exact deflation. `None` when
/// some root is not rational (or was not recovered).
pub fn rational_roots(charpoly: &[Coeff], approx: &[Complex64]) -> Option<Vec<BigRational>> {
    let mut p = exact_coeffs(charpoly)?;
    let mut roots = Vec::new();
    let mut pending: Vec<f64> = approx.iter().map(|z| z.re).collect();
    if approx.iter().any(|z| z.im.abs() > 1e-6 * (1.0 + z.re.abs())) {
        return None;
    }
    while p.len() > 1 {
        let mut found = None;
        'search: for (idx, &r) in pending.iter().enumerate() {
            for cand in convergents(r, 1_000_000_000_000).into_iter().rev() {
                if eval_rational(&p, &cand).is_zero() {
                    found = Some((idx, cand));
                    break 'search;
                }
            }
        }
        let (idx, root) = found?;
        pending.remove(idx);
        let lin = [BigRational::one(), -root.clone()];
        let (q, _) = poly_divmod(&p, &lin);
        p = q;
        roots.push(root);
    }
    roots.sort();
    Some(roots)
}

/// `|q(mu)|` for a polynomial given highest degree first, normalized to a
/// monic polynomial.
pub fn charpoly_residual(charpoly: &[Coeff], mu: Complex64) -> f64 {
    let lead = charpoly[0].to_f64();
    charpoly
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * mu + c.to_f64() / lead)
        .norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<Coeff> {
        v.iter().map(|&x| Coeff::from_int(CoeffKind::Exact, x)).collect()
    }

    #[test]
    fn charpoly_examples() {
        assert_eq!(characteristic_polynomial(&SquareMatrix::identity(2, CoeffKind::Exact)), ints(&[1, -2, 1]));
        let m = SquareMatrix::from_ints(&[&[0, 1], &[-1, -1]]);
        assert_eq!(characteristic_polynomial(&m), ints(&[1, 1, 1]));
        let m = SquareMatrix::from_ints(&[&[-2, 0], &[0, -8]]);
        assert_eq!(characteristic_polynomial(&m), ints(&[1, 10, 16]));
        let m = SquareMatrix::from_ints(&[&[2, 1, 0], &[0, 3, 4], &[5, 0, 1]]);
        // det(tI - M) = t^3 - 6t^2 + 11t - 26
        assert_eq!(characteristic_polynomial(&m), ints(&[1, -6, 11, -26]));
    }

    #[test]
    fn routh_examples() {
        assert!(routh_hurwitz_stable(&ints(&[1, 3, 2])).unwrap());
        assert!(!routh_hurwitz_stable(&ints(&[1, 1, 0])).unwrap());
        // (t + 2) t
        assert!(!routh_hurwitz_stable(&ints(&[1, 2, 0])).unwrap());
        assert!(routh_hurwitz_stable(&ints(&[1, 6, 11, 6])).unwrap());
        // t^3 + t^2 + t + 1 has roots on the imaginary axis
        assert!(!routh_hurwitz_stable(&ints(&[1, 1, 1, 1])).unwrap());
        // missing t^2 term
        assert!(!routh_hurwitz_stable(&ints(&[1, 0, 2, 3])).unwrap());
        // t^4 + t^3 + t^2 + 4t + 1: positive coefficients, unstable
        assert!(!routh_hurwitz_stable(&ints(&[1, 1, 1, 4, 1])).unwrap());
        assert!(routh_hurwitz_stable(&ints(&[1, 10, 35, 50, 24])).unwrap());
        assert!(routh_hurwitz_stable(&ints(&[-1, -3, -2])).unwrap());
        assert_eq!(
            routh_hurwitz_stable(&ints(&[0, 1])),
            Err(StabilityError::ZeroLeadingCoefficient)
        );
        let out = routh_hurwitz(&ints(&[1, 6, 11, 6])).unwrap();
        assert_eq!(out.first_column, vec![ints(&[1])[0].clone(), ints(&[6])[0].clone(), Coeff::ratio(10, 1), Coeff::ratio(6, 1)]);
    }

    #[test]
    fn eigen_examples() {
        let ev = numeric_eigenvalues(&SquareMatrix::from_ints(&[&[-2, 0], &[0, -8]])).unwrap();
        assert_eq!(ev, vec![Complex64::new(-8.0, 0.0), Complex64::new(-2.0, 0.0)]);
        let ev = numeric_eigenvalues(&SquareMatrix::from_ints(&[&[6, -2], &[8, -4]])).unwrap();
        assert!((ev[0].re + 2.0).abs() < 1e-12 && (ev[1].re - 4.0).abs() < 1e-12);
        let m = SquareMatrix::from_ints(&[&[0, 1], &[-1, -1]]);
        let ev = numeric_eigenvalues(&m).unwrap();
        let s = 3f64.sqrt() / 2.0;
        assert!((ev[0] - Complex64::new(-0.5, -s)).norm() < 1e-12);
        assert!((ev[1] - Complex64::new(-0.5, s)).norm() < 1e-12);
        let cp = characteristic_polynomial(&m);
        for mu in ev {
            assert!(charpoly_residual(&cp, mu) <= 1e-8 * (1.0 + mu.norm()).powi(2));
        }
    }

    #[test]
    fn exact_roots() {
        let m = SquareMatrix::from_ints(&[&[6, -2], &[8, -4]]);
        let cp = characteristic_polynomial(&m);
        let ev = numeric_eigenvalues(&m).unwrap();
        let r = rational_roots(&cp, &ev).unwrap();
        assert_eq!(r, vec![BigRational::from_integer((-2).into()), BigRational::from_integer(4.into())]);
        let m = SquareMatrix::from_ints(&[&[0, 1], &[-1, -1]]);
        let ev = numeric_eigenvalues(&m).unwrap();
        assert!(rational_roots(&characteristic_polynomial(&m), &ev).is_none());
        let m = SquareMatrix::from_ints(&[&[0, 1], &[2, 0]]);
        let ev = numeric_eigenvalues(&m).unwrap();
        assert!(rational_roots(&characteristic_polynomial(&m), &ev).is_none());
    }

    #[test]
    fn divisibility() {
        // (t + 2)(t + 8) divides (t + 2)(t + 8)(t - 1)
        let a = ints(&[1, 10, 16]);
        let b = ints(&[1, 9, 6, -16]);
        assert_eq!(poly_divides(&a, &b), Some(true));
        assert_eq!(poly_divides(&ints(&[1, 3]), &b), Some(false));
    }
}
