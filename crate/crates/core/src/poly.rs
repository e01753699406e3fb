//! Sparse multivariate polynomials over exact rationals or `f64`.
//!
//! A [`Polynomial`] is a map from [`Monomial`] to nonzero [`Coeff`], tied to a
//! shared [`VarTable`]. All coefficients of one polynomial have the same
//! [`CoeffKind`]; mixing kinds or variable tables is a structural error.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::Neg;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::PolyError;

/// Ordered list of distinct variable names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarTable {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl VarTable {
    pub fn new<I, S>(names: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(PolyError::EmptyVariableName);
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(PolyError::DuplicateVariable(name.clone()));
            }
        }
        Ok(Self { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}

/// Exponent vector over a [`VarTable`]. The all-zero vector is the monomial 1.
///
/// The derived `Ord` is plain lexicographic order on the exponent vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(Vec<u32>);

/// Largest exponent accepted anywhere (degrees stay below 2^31).
pub const MAX_EXPONENT: u32 = i32::MAX as u32;

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Monomial(e)
    }

    pub fn from_exponents(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&e| e as u64).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// `self | other`, i.e. componentwise `self <= other`.
    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn checked_mul(&self, other: &Monomial) -> Result<Monomial, PolyError> {
        let mut out = Vec::with_capacity(self.0.len());
        for (&a, &b) in self.0.iter().zip(&other.0) {
            let s = a.checked_add(b).filter(|&s| s <= MAX_EXPONENT);
            out.push(s.ok_or(PolyError::ExponentOverflow)?);
        }
        Ok(Monomial(out))
    }

    /// `self / other`, or `None` if `other` does not divide `self`.
    pub fn checked_div(&self, other: &Monomial) -> Option<Monomial> {
        if !other.divides(self) {
            return None;
        }
        Some(Monomial(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn pow(&self, k: u32) -> Result<Monomial, PolyError> {
        let mut out = Vec::with_capacity(self.0.len());
        for &e in &self.0 {
            let p = e.checked_mul(k).filter(|&p| p <= MAX_EXPONENT);
            out.push(p.ok_or(PolyError::ExponentOverflow)?);
        }
        Ok(Monomial(out))
    }

    /// Graded order used for printing and for sorting new variables:
    /// total degree ascending, then exponent vector descending-lex
    /// (so `x1^2 < x1*x2 < x2^2`).
    pub fn graded_cmp(&self, other: &Monomial) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }

    /// Number of unordered factorizations `m = a*b`, computed in closed form.
    pub fn decomposition_count(&self, allow_unit: bool) -> u64 {
        let prod: u64 = self.0.iter().map(|&e| e as u64 + 1).product();
        let pairs = prod.div_ceil(2);
        if allow_unit {
            pairs
        } else {
            pairs - 1
        }
    }

    /// Formats the monomial against `vars`, e.g. `x1*x2^2`; `1` for the unit.
    pub fn display<'a>(&'a self, vars: &'a VarTable) -> MonomialDisplay<'a> {
        MonomialDisplay { mono: self, vars }
    }
}

pub struct MonomialDisplay<'a> {
    mono: &'a Monomial,
    vars: &'a VarTable,
}

impl fmt::Display for MonomialDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &e) in self.mono.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            f.write_str(self.vars.name(i))?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}

/// All unordered pairs `(a, b)` with `a * b = m`, each listed once with
/// `a <= b` in graded order and sorted by `a` in that order (so `1` first,
/// then `x` before `y`). With `allow_unit` false, pairs containing the
/// monomial 1 are dropped.
pub fn unordered_decompositions(
    m: &Monomial,
    allow_unit: bool,
) -> Result<Vec<(Monomial, Monomial)>, PolyError> {
    if m.is_one() {
        return Err(PolyError::UnitDecomposition);
    }
    let n = m.nvars();
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    loop {
        let a = Monomial(cur.clone());
        let b = Monomial(m.0.iter().zip(&cur).map(|(x, y)| x - y).collect());
        if a.graded_cmp(&b) != Ordering::Greater && (allow_unit || (!a.is_one() && !b.is_one()))
        {
            out.push((a, b));
        }
        let mut j = n;
        loop {
            if j == 0 {
                out.sort_by(|p, q| p.0.graded_cmp(&q.0));
                return Ok(out);
            }
            j -= 1;
            if cur[j] < m.0[j] {
                cur[j] += 1;
                for c in cur.iter_mut().skip(j + 1) {
                    *c = 0;
                }
                break;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoeffKind {
    Exact,
    Float,
}

/// A coefficient: exact rational (always normalized) or binary float.
#[derive(Debug, Clone, PartialEq)]
pub enum Coeff {
    Exact(BigRational),
    Float(f64),
}

impl Coeff {
    pub fn zero(kind: CoeffKind) -> Self {
        match kind {
            CoeffKind::Exact => Coeff::Exact(BigRational::zero()),
            CoeffKind::Float => Coeff::Float(0.0),
        }
    }

    pub fn one(kind: CoeffKind) -> Self {
        match kind {
            CoeffKind::Exact => Coeff::Exact(BigRational::one()),
            CoeffKind::Float => Coeff::Float(1.0),
        }
    }

    pub fn from_int(kind: CoeffKind, v: i64) -> Self {
        match kind {
            CoeffKind::Exact => Coeff::Exact(BigRational::from_integer(BigInt::from(v))),
            CoeffKind::Float => Coeff::Float(v as f64),
        }
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Coeff::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn kind(&self) -> CoeffKind {
        match self {
            Coeff::Exact(_) => CoeffKind::Exact,
            Coeff::Float(_) => CoeffKind::Float,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coeff::Exact(r) => r.is_zero(),
            Coeff::Float(v) => *v == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Coeff::Exact(r) => r.is_one(),
            Coeff::Float(v) => *v == 1.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Coeff::Exact(r) => r.is_negative(),
            Coeff::Float(v) => *v < 0.0,
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Coeff::Exact(r) => r.is_positive(),
            Coeff::Float(v) => *v > 0.0,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Coeff::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Coeff::Float(v) => *v,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Coeff::Exact(r) => Some(r),
            Coeff::Float(_) => None,
        }
    }

    /// Converts to `kind`. Exact → float rounds to nearest; float → exact is
    /// the exact binary value of the float.
    pub fn to_kind(&self, kind: CoeffKind) -> Coeff {
        match (self, kind) {
            (Coeff::Exact(_), CoeffKind::Exact) | (Coeff::Float(_), CoeffKind::Float) => {
                self.clone()
            }
            (Coeff::Exact(_), CoeffKind::Float) => Coeff::Float(self.to_f64()),
            (Coeff::Float(v), CoeffKind::Exact) => Coeff::Exact(
                BigRational::from_float(*v).unwrap_or_else(BigRational::zero),
            ),
        }
    }

    fn pair<'a>(&'a self, other: &'a Coeff) -> CoeffPair<'a> {
        match (self, other) {
            (Coeff::Exact(a), Coeff::Exact(b)) => CoeffPair::Exact(a, b),
            _ => CoeffPair::Float(self.to_f64(), other.to_f64()),
        }
    }

    pub fn add(&self, other: &Coeff) -> Coeff {
        match self.pair(other) {
            CoeffPair::Exact(a, b) => Coeff::Exact(a + b),
            CoeffPair::Float(a, b) => Coeff::Float(a + b),
        }
    }

    pub fn sub(&self, other: &Coeff) -> Coeff {
        match self.pair(other) {
            CoeffPair::Exact(a, b) => Coeff::Exact(a - b),
            CoeffPair::Float(a, b) => Coeff::Float(a - b),
        }
    }

    pub fn mul(&self, other: &Coeff) -> Coeff {
        match self.pair(other) {
            CoeffPair::Exact(a, b) => Coeff::Exact(a * b),
            CoeffPair::Float(a, b) => Coeff::Float(a * b),
        }
    }

    /// Division; `None` when `other` is zero.
    pub fn div(&self, other: &Coeff) -> Option<Coeff> {
        if other.is_zero() {
            return None;
        }
        Some(match self.pair(other) {
            CoeffPair::Exact(a, b) => Coeff::Exact(a / b),
            CoeffPair::Float(a, b) => Coeff::Float(a / b),
        })
    }

    pub fn pow(&self, k: u32) -> Coeff {
        match self {
            Coeff::Exact(r) => Coeff::Exact(num_traits::pow(r.clone(), k as usize)),
            Coeff::Float(v) => Coeff::Float(v.powi(k as i32)),
        }
    }

    pub fn abs(&self) -> Coeff {
        match self {
            Coeff::Exact(r) => Coeff::Exact(r.abs()),
            Coeff::Float(v) => Coeff::Float(v.abs()),
        }
    }

    /// Total order for coefficients of the same kind (floats by `total_cmp`).
    pub fn cmp_value(&self, other: &Coeff) -> Ordering {
        match self.pair(other) {
            CoeffPair::Exact(a, b) => a.cmp(b),
            CoeffPair::Float(a, b) => a.total_cmp(&b),
        }
    }

    /// Literal form that parses back to the same value and kind:
    /// `p/q` or an integer for rationals, exponent notation for floats.
    pub fn to_literal(&self) -> String {
        match self {
            Coeff::Exact(r) => format_rational(r),
            Coeff::Float(v) => format!("{v:e}"),
        }
    }
}

enum CoeffPair<'a> {
    Exact(&'a BigRational, &'a BigRational),
    Float(f64, f64),
}

impl Neg for Coeff {
    type Output = Coeff;
    fn neg(self) -> Coeff {
        match self {
            Coeff::Exact(r) => Coeff::Exact(-r),
            Coeff::Float(v) => Coeff::Float(-v),
        }
    }
}

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_literal())
    }
}

pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Sparse polynomial: no stored zero coefficients.
#[derive(Debug, Clone)]
pub struct Polynomial {
    vars: Arc<VarTable>,
    kind: CoeffKind,
    terms: BTreeMap<Monomial, Coeff>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl PartialEq for Polynomial {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.same_vars(other) && self.terms == other.terms
    }
}

impl Polynomial {
    pub fn zero(vars: Arc<VarTable>, kind: CoeffKind) -> Self {
        Self {
            vars,
            kind,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: Arc<VarTable>, c: Coeff) -> Self {
        let n = vars.len();
        Self::term(vars, Monomial::one(n), c)
    }

    pub fn var(vars: Arc<VarTable>, kind: CoeffKind, i: usize) -> Self {
        let n = vars.len();
        Self::term(vars, Monomial::var(n, i), Coeff::one(kind))
    }

    pub fn term(vars: Arc<VarTable>, m: Monomial, c: Coeff) -> Self {
        let kind = c.kind();
        let mut p = Self::zero(vars, kind);
        p.add_term(m, c);
        p
    }

    /// Builds a polynomial from raw terms, merging duplicates and dropping zeros.
    pub fn from_terms<I>(vars: Arc<VarTable>, kind: CoeffKind, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, Coeff)>,
    {
        let mut p = Self::zero(vars, kind);
        for (m, c) in terms {
            p.add_term(m, c.to_kind(kind));
        }
        p
    }

    pub fn vars(&self) -> &Arc<VarTable> {
        &self.vars
    }

    pub fn kind(&self) -> CoeffKind {
        self.kind
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn monomials(&self) -> impl Iterator<Item = &Monomial> {
        self.terms.keys()
    }

    pub fn coeff(&self, m: &Monomial) -> Option<&Coeff> {
        self.terms.get(m)
    }

    /// Total degree; the zero polynomial has degree -1.
    pub fn degree(&self) -> i64 {
        self.terms
            .keys()
            .map(|m| m.degree() as i64)
            .max()
            .unwrap_or(-1)
    }

    /// Degree in variable `i`; 0 for the zero polynomial.
    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|m| m.0[i]).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, m: Monomial, c: Coeff) {
        debug_assert_eq!(m.nvars(), self.vars.len());
        if c.is_zero() {
            return;
        }
        let c = c.to_kind(self.kind);
        match self.terms.get_mut(&m) {
            Some(existing) => {
                let s = existing.add(&c);
                if s.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *existing = s;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn same_vars(&self, other: &Polynomial) -> bool {
        Arc::ptr_eq(&self.vars, &other.vars) || self.vars == other.vars
    }

    fn check_compatible(&self, other: &Polynomial) -> Result<(), PolyError> {
        if !self.same_vars(other) {
            return Err(PolyError::VarTableMismatch);
        }
        if self.kind != other.kind {
            return Err(PolyError::KindMismatch);
        }
        Ok(())
    }

    pub fn arith(&self, other: &Polynomial, op: ArithOp) -> Result<Polynomial, PolyError> {
        match op {
            ArithOp::Add => self.add(other),
            ArithOp::Sub => self.sub(other),
            ArithOp::Mul => self.mul(other),
        }
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_compatible(other)?;
        let mut out = Polynomial::zero(self.vars.clone(), self.kind);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.checked_mul(mb)?, ca.mul(cb));
            }
        }
        Ok(out)
    }

    /// Multiplies every coefficient by `c`; `c` must match the polynomial's kind.
    pub fn scale(&self, c: &Coeff) -> Result<Polynomial, PolyError> {
        if c.kind() != self.kind {
            return Err(PolyError::KindMismatch);
        }
        let mut out = Polynomial::zero(self.vars.clone(), self.kind);
        for (m, a) in &self.terms {
            out.add_term(m.clone(), a.mul(c));
        }
        Ok(out)
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Result<Polynomial, PolyError> {
        let mut out = Polynomial::zero(self.vars.clone(), self.kind);
        for (t, c) in &self.terms {
            out.terms.insert(t.checked_mul(m)?, c.clone());
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Result<Polynomial, PolyError> {
        let mut acc = Polynomial::constant(self.vars.clone(), Coeff::one(self.kind));
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    pub fn neg(&self) -> Polynomial {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -c.clone();
        }
        out
    }

    /// Constant value if the polynomial has degree <= 0.
    pub fn as_constant(&self) -> Option<Coeff> {
        match self.terms.len() {
            0 => Some(Coeff::zero(self.kind)),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn partial_derivative(&self, v: usize) -> Result<Polynomial, PolyError> {
        if v >= self.vars.len() {
            return Err(PolyError::VariableIndex {
                index: v,
                nvars: self.vars.len(),
            });
        }
        let mut out = Polynomial::zero(self.vars.clone(), self.kind);
        for (m, c) in &self.terms {
            let e = m.0[v];
            if e == 0 {
                continue;
            }
            let mut dm = m.clone();
            dm.0[v] -= 1;
            out.add_term(dm, c.mul(&Coeff::from_int(self.kind, e as i64)));
        }
        Ok(out)
    }

    /// Time derivative of `self` along `sys`: sum_j (d self / d x_j) * p_j.
    pub fn lie_derivative(&self, sys: &PolySystem) -> Result<Polynomial, PolyError> {
        if !Arc::ptr_eq(&self.vars, &sys.vars) && *self.vars != *sys.vars {
            return Err(PolyError::VarTableMismatch);
        }
        let mut out = Polynomial::zero(self.vars.clone(), self.kind);
        for j in 0..self.vars.len() {
            if self.degree_in(j) == 0 {
                continue;
            }
            let d = self.partial_derivative(j)?;
            out = out.add(&d.mul(&sys.rhs[j].to_kind(self.kind))?)?;
        }
        Ok(out)
    }

    pub fn evaluate(&self, pt: &Point) -> Result<Coeff, PolyError> {
        if pt.len() != self.vars.len() {
            return Err(PolyError::PointArity {
                expected: self.vars.len(),
                got: pt.len(),
            });
        }
        let kind = if self.kind == CoeffKind::Exact && pt.kind() == CoeffKind::Exact {
            CoeffKind::Exact
        } else {
            CoeffKind::Float
        };
        let coords: Vec<Coeff> = pt.0.iter().map(|c| c.to_kind(kind)).collect();
        let mut acc = Coeff::zero(kind);
        for (m, c) in &self.terms {
            let mut t = c.to_kind(kind);
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    t = t.mul(&coords[i].pow(e));
                }
            }
            acc = acc.add(&t);
        }
        Ok(acc)
    }

    /// Sum of absolute term values at `pt`, as f64 (a scale for residual tests).
    pub fn magnitude_at(&self, pt: &Point) -> f64 {
        let coords: Vec<f64> = pt.0.iter().map(Coeff::to_f64).collect();
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut t = c.to_f64().abs();
                for (i, &e) in m.0.iter().enumerate() {
                    t *= coords[i].abs().powi(e as i32);
                }
                t
            })
            .sum()
    }

    pub fn to_kind(&self, kind: CoeffKind) -> Polynomial {
        if kind == self.kind {
            return self.clone();
        }
        Polynomial::from_terms(
            self.vars.clone(),
            kind,
            self.terms.iter().map(|(m, c)| (m.clone(), c.to_kind(kind))),
        )
    }

    /// Re-expresses the polynomial over `target`, mapping variable `i` of
    /// `self` to variable `map[i]` of `target`.
    pub fn embed(&self, target: Arc<VarTable>, map: &[usize]) -> Polynomial {
        let n = target.len();
        let mut out = Polynomial::zero(target, self.kind);
        for (m, c) in &self.terms {
            let mut e = vec![0u32; n];
            for (i, &k) in m.0.iter().enumerate() {
                e[map[i]] += k;
            }
            out.add_term(Monomial(e), c.clone());
        }
        out
    }

    /// Terms in canonical printing order (graded, see [`Monomial::graded_cmp`]).
    pub fn sorted_terms(&self) -> Vec<(&Monomial, &Coeff)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| a.0.graded_cmp(b.0));
        v
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str(match self.kind {
                CoeffKind::Exact => "0",
                CoeffKind::Float => "0e0",
            });
        }
        for (i, (m, c)) in self.sorted_terms().into_iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if m.is_one() {
                write!(f, "{mag}")?;
            } else if mag.is_one() && self.kind == CoeffKind::Exact {
                write!(f, "{}", m.display(&self.vars))?;
            } else {
                write!(f, "{mag}*{}", m.display(&self.vars))?;
            }
        }
        Ok(())
    }
}

/// A point in state space; one coordinate per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(pub Vec<Coeff>);

impl Point {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Exact only if every coordinate is exact.
    pub fn kind(&self) -> CoeffKind {
        if self.0.iter().all(|c| c.kind() == CoeffKind::Exact) {
            CoeffKind::Exact
        } else {
            CoeffKind::Float
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(Coeff::to_f64).collect()
    }

    pub fn from_f64(v: &[f64]) -> Self {
        Point(v.iter().map(|&x| Coeff::Float(x)).collect())
    }

    pub fn from_ints(v: &[i64]) -> Self {
        Point(v.iter().map(|&x| Coeff::from_int(CoeffKind::Exact, x)).collect())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// `x' = p(x)`: one right-hand side per variable, all over the same table.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySystem {
    vars: Arc<VarTable>,
    rhs: Vec<Polynomial>,
}

impl PolySystem {
    pub fn new(vars: Arc<VarTable>, rhs: Vec<Polynomial>) -> Result<Self, PolyError> {
        if rhs.len() != vars.len() {
            return Err(PolyError::SystemArity {
                vars: vars.len(),
                equations: rhs.len(),
            });
        }
        let kind = rhs.first().map(Polynomial::kind);
        for p in &rhs {
            if !Arc::ptr_eq(&p.vars, &vars) && *p.vars != *vars {
                return Err(PolyError::VarTableMismatch);
            }
            if Some(p.kind) != kind {
                return Err(PolyError::KindMismatch);
            }
        }
        let rhs = rhs
            .into_iter()
            .map(|mut p| {
                p.vars = vars.clone();
                p
            })
            .collect();
        Ok(Self { vars, rhs })
    }

    pub fn vars(&self) -> &Arc<VarTable> {
        &self.vars
    }

    pub fn rhs(&self) -> &[Polynomial] {
        &self.rhs
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn kind(&self) -> CoeffKind {
        self.rhs.first().map_or(CoeffKind::Exact, Polynomial::kind)
    }

    pub fn degree(&self) -> i64 {
        self.rhs.iter().map(Polynomial::degree).max().unwrap_or(-1)
    }

    pub fn to_kind(&self, kind: CoeffKind) -> PolySystem {
        PolySystem {
            vars: self.vars.clone(),
            rhs: self.rhs.iter().map(|p| p.to_kind(kind)).collect(),
        }
    }

    /// Index of the first equation that does not vanish at `pt` (exactly, or
    /// within `rel_tol` of its term magnitude in float mode).
    pub fn first_nonvanishing(&self, pt: &Point, rel_tol: f64) -> Result<Option<usize>, PolyError> {
        for (i, p) in self.rhs.iter().enumerate() {
            let v = p.evaluate(pt)?;
            let fails = match &v {
                Coeff::Exact(r) => !r.is_zero(),
                Coeff::Float(x) => x.abs() > rel_tol * (1.0 + p.magnitude_at(pt)),
            };
            if fails {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }
}

impl fmt::Display for PolySystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.rhs.iter().enumerate() {
            writeln!(f, "{}' = {}", self.vars.name(i), p)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x_table() -> Arc<VarTable> {
        Arc::new(VarTable::new(["x"]).unwrap())
    }

    fn poly_x(coeffs: &[(u32, i64)]) -> Polynomial {
        let vars = x_table();
        Polynomial::from_terms(
            vars,
            CoeffKind::Exact,
            coeffs
                .iter()
                .map(|&(e, c)| (Monomial(vec![e]), Coeff::from_int(CoeffKind::Exact, c))),
        )
    }

    #[test]
    fn difference_of_squares() {
        let a = poly_x(&[(1, 1), (0, 1)]);
        let b = poly_x(&[(1, 1), (0, -1)]);
        assert_eq!(a.mul(&b).unwrap(), poly_x(&[(2, 1), (0, -1)]));
    }

    #[test]
    fn additive_identity() {
        let p = poly_x(&[(3, 1), (1, -1)]);
        let z = Polynomial::zero(p.vars().clone(), CoeffKind::Exact);
        assert_eq!(p.add(&z).unwrap(), p);
        assert_eq!(z.degree(), -1);
    }

    #[test]
    fn example_one_product() {
        let p = poly_x(&[(1, -1), (3, 1)]);
        let two_x = poly_x(&[(1, 2)]);
        assert_eq!(p.mul(&two_x).unwrap(), poly_x(&[(2, -2), (4, 2)]));
    }

    #[test]
    fn mismatched_tables_and_kinds() {
        let p = poly_x(&[(1, 1)]);
        let other = Arc::new(VarTable::new(["y"]).unwrap());
        let q = Polynomial::var(other, CoeffKind::Exact, 0);
        assert_eq!(p.add(&q), Err(PolyError::VarTableMismatch));
        let f = p.to_kind(CoeffKind::Float);
        assert_eq!(p.mul(&f), Err(PolyError::KindMismatch));
        assert_eq!(p.scale(&Coeff::Float(2.0)), Err(PolyError::KindMismatch));
    }

    #[test]
    fn derivatives() {
        let p = poly_x(&[(2, 1)]);
        assert_eq!(p.partial_derivative(0).unwrap(), poly_x(&[(1, 2)]));
        let q = poly_x(&[(1, -1), (3, 1)]);
        assert_eq!(q.partial_derivative(0).unwrap(), poly_x(&[(0, -1), (2, 3)]));
        assert!(matches!(
            q.partial_derivative(1),
            Err(PolyError::VariableIndex { .. })
        ));

        let vars = Arc::new(VarTable::new(["x1", "x2"]).unwrap());
        let x1x2 = Polynomial::term(
            vars.clone(),
            Monomial(vec![1, 1]),
            Coeff::one(CoeffKind::Exact),
        );
        assert_eq!(
            x1x2.partial_derivative(1).unwrap(),
            Polynomial::var(vars, CoeffKind::Exact, 0)
        );
    }

    #[test]
    fn lie_derivative_examples() {
        let p = poly_x(&[(1, -1), (3, 1)]);
        let sys = PolySystem::new(x_table(), vec![p]).unwrap();
        let g = Polynomial::term(
            sys.vars().clone(),
            Monomial(vec![2]),
            Coeff::one(CoeffKind::Exact),
        );
        let expected = Polynomial::from_terms(
            sys.vars().clone(),
            CoeffKind::Exact,
            [
                (Monomial(vec![2]), Coeff::from_int(CoeffKind::Exact, -2)),
                (Monomial(vec![4]), Coeff::from_int(CoeffKind::Exact, 2)),
            ],
        );
        assert_eq!(g.lie_derivative(&sys).unwrap(), expected);
        let c = Polynomial::constant(sys.vars().clone(), Coeff::from_int(CoeffKind::Exact, 5));
        assert!(c.lie_derivative(&sys).unwrap().is_zero());
    }

    #[test]
    fn evaluate_examples() {
        let p = poly_x(&[(1, -1), (3, 1)]);
        assert!(p.evaluate(&Point::from_ints(&[1])).unwrap().is_zero());
        // x(x-1)(x-2) = x^3 - 3x^2 + 2x
        let q = poly_x(&[(3, 1), (2, -3), (1, 2)]);
        assert!(q.evaluate(&Point::from_ints(&[2])).unwrap().is_zero());
        // k1 x^2 - k2 x^3 - k3 x at 3/10
        let vars = x_table();
        let r = Polynomial::from_terms(
            vars,
            CoeffKind::Exact,
            [
                (Monomial(vec![2]), Coeff::ratio(2, 5)),
                (Monomial(vec![3]), Coeff::ratio(-1, 1)),
                (Monomial(vec![1]), Coeff::ratio(-3, 100)),
            ],
        );
        assert!(r.evaluate(&Point(vec![Coeff::ratio(3, 10)])).unwrap().is_zero());
        assert_eq!(
            r.evaluate(&Point(vec![Coeff::ratio(1, 10)])).unwrap(),
            Coeff::ratio(0, 1)
        );
    }

    #[test]
    fn decomposition_examples() {
        let x = Monomial(vec![1]);
        assert_eq!(
            unordered_decompositions(&x, true).unwrap(),
            vec![(Monomial(vec![0]), Monomial(vec![1]))]
        );
        let x3 = Monomial(vec![3]);
        assert_eq!(
            unordered_decompositions(&x3, true).unwrap(),
            vec![
                (Monomial(vec![0]), Monomial(vec![3])),
                (Monomial(vec![1]), Monomial(vec![2]))
            ]
        );
        let x2y = Monomial(vec![2, 1]);
        assert_eq!(
            unordered_decompositions(&x2y, false).unwrap(),
            vec![
                (Monomial(vec![1, 0]), Monomial(vec![1, 1])),
                (Monomial(vec![0, 1]), Monomial(vec![2, 0])),
            ]
        );
        assert_eq!(
            unordered_decompositions(&Monomial(vec![0, 0]), true),
            Err(PolyError::UnitDecomposition)
        );
    }

    #[test]
    fn exponent_overflow_is_checked() {
        let big = Monomial(vec![MAX_EXPONENT]);
        assert_eq!(
            big.checked_mul(&Monomial(vec![1])),
            Err(PolyError::ExponentOverflow)
        );
    }

    #[test]
    fn canonical_printing() {
        let vars = Arc::new(VarTable::new(["x1", "x2", "y"]).unwrap());
        let p = Polynomial::from_terms(
            vars,
            CoeffKind::Exact,
            [
                (Monomial(vec![1, 1, 0]), Coeff::from_int(CoeffKind::Exact, 2)),
                (Monomial(vec![0, 0, 1]), Coeff::from_int(CoeffKind::Exact, -1)),
                (Monomial(vec![2, 0, 0]), Coeff::from_int(CoeffKind::Exact, 1)),
                (Monomial(vec![0, 0, 0]), Coeff::ratio(-3, 10)),
            ],
        );
        assert_eq!(p.to_string(), "-3/10 - y + x1^2 + 2*x1*x2");
    }
}
