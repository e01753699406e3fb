//! Text format for ODE systems and point lists.
//!
//! One equation per line, `IDENT' = EXPR`, with `#` comments. Expressions use
//! `+ - * / ^` and parentheses. Precedence, tightest first: `^` (non-negative
//! integer exponent), unary minus, `*` and `/`, binary `+` and `-`. Division is
//! only allowed by nonzero constants. Numeric literals are integers, decimals
//! (`0.4`, exact) or floats in exponent form (`4e-1`); a single float literal
//! makes the whole system float-valued. Implicit multiplication (`2x`) and
//! function calls are rejected.
//!
//! Points are `(c1, c2, ...)` tuples separated by `;`, each coordinate a
//! constant expression in the same syntax.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::pow;

use crate::error::ParseError;
use crate::poly::{Coeff, CoeffKind, Monomial, Point, PolySystem, Polynomial, VarTable};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    /// Numeric literal, parsed exactly; `is_float` marks exponent notation.
    Num { value: BigRational, is_float: bool },
    Prime,
    Eq,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Semi,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Num { .. } => "number".into(),
        Tok::Prime => "`'`".into(),
        Tok::Eq => "`=`".into(),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Caret => "`^`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Semi => "`;`".into(),
    }
}

/// Tokenizes `text`, whose first character sits at (`line`, `col0`).
/// Stops at `#` or end of line; newlines are only allowed when `multiline`.
fn tokenize(text: &str, line0: usize, multiline: bool) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (line0, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start_col = col;
        if c == '\n' {
            if !multiline {
                break;
            }
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let simple = match c {
            '\'' => Some(Tok::Prime),
            '=' => Some(Tok::Eq),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Spanned {
                tok,
                line,
                col: start_col,
            });
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let name: String = chars[s..i].iter().collect();
            col += i - s;
            out.push(Spanned {
                tok: Tok::Ident(name),
                line,
                col: start_col,
            });
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let s = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let mut is_float = false;
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                    is_float = true;
                }
            }
            if i < chars.len() && (chars[i] == '.' || chars[i].is_ascii_digit()) {
                i += 1;
            }
            let lit: String = chars[s..i].iter().collect();
            col += i - s;
            let value = parse_number(&lit, is_float)
                .ok_or_else(|| ParseError::new(line, start_col, format!("malformed number `{lit}`")))?;
            out.push(Spanned {
                tok: Tok::Num { value, is_float },
                line,
                col: start_col,
            });
            continue;
        }
        return Err(ParseError::new(
            line,
            start_col,
            format!("unexpected character `{c}`"),
        ));
    }
    Ok(out)
}

fn parse_number(lit: &str, is_float: bool) -> Option<BigRational> {
    if is_float {
        let v: f64 = lit.parse().ok()?;
        return BigRational::from_float(v);
    }
    let (int_part, frac_part) = match lit.split_once('.') {
        Some((a, b)) => (a, b),
        None => (lit, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().ok()?;
    let denom = pow(BigInt::from(10u32), frac_part.len());
    Some(BigRational::new(numer, denom))
}

/// Recursive-descent parser over one token stream; coefficients stay exact
/// and `saw_float` records whether any float literal was consumed.
struct ExprParser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    vars: Arc<VarTable>,
    saw_float: bool,
    end: (usize, usize),
}

impl<'a> ExprParser<'a> {
    fn peek(&self) -> Option<&'a Spanned> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map_or(self.end, |s| (s.line, s.col))
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (l, c) = self.here();
        Err(ParseError::new(l, c, msg))
    }

    fn bump(&mut self) -> Option<&'a Spanned> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn sum(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.product()?;
        while let Some(t) = self.peek() {
            let neg = match t.tok {
                Tok::Plus => false,
                Tok::Minus => true,
                _ => break,
            };
            self.bump();
            let rhs = self.product()?;
            acc = if neg { acc.sub(&rhs) } else { acc.add(&rhs) }.expect("same table");
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.unary()?;
        while let Some(t) = self.peek() {
            match t.tok {
                Tok::Star => {
                    self.bump();
                    let rhs = self.unary()?;
                    acc = acc.mul(&rhs).map_err(|e| self.mk_err(t, e.to_string()))?;
                }
                Tok::Slash => {
                    self.bump();
                    let rhs = self.unary()?;
                    let Some(c) = rhs.as_constant() else {
                        return Err(self.mk_err(t, "division by a non-constant expression"));
                    };
                    if c.is_zero() {
                        return Err(self.mk_err(t, "division by zero"));
                    }
                    let inv = Coeff::one(CoeffKind::Exact).div(&c).expect("nonzero");
                    acc = acc.scale(&inv).expect("exact");
                }
                Tok::Ident(_) | Tok::Num { .. } => {
                    return self.err("implicit multiplication is not supported; use `*`")
                }
                Tok::LParen => return self.err("implicit multiplication is not supported; use `*`"),
                _ => break,
            }
        }
        Ok(acc)
    }

    fn mk_err(&self, at: &Spanned, msg: impl Into<String>) -> ParseError {
        ParseError::new(at.line, at.col, msg)
    }

    fn unary(&mut self) -> Result<Polynomial, ParseError> {
        match self.peek().map(|t| &t.tok) {
            Some(Tok::Minus) => {
                self.bump();
                Ok(self.unary()?.neg())
            }
            Some(Tok::Plus) => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial, ParseError> {
        let base = self.atom()?;
        if let Some(t) = self.peek() {
            if t.tok == Tok::Caret {
                self.bump();
                let Some(e) = self.bump() else {
                    return self.err("expected exponent after `^`");
                };
                let k = match &e.tok {
                    Tok::Num {
                        value,
                        is_float: false,
                    } if value.is_integer() => u32::try_from(value.to_integer()).ok(),
                    _ => None,
                };
                let Some(k) = k else {
                    return Err(self.mk_err(e, "exponent must be a non-negative integer literal"));
                };
                if let Some(next) = self.peek() {
                    if next.tok == Tok::Caret {
                        return Err(self.mk_err(next, "chained exponents are ambiguous; use parentheses"));
                    }
                }
                return base.pow(k).map_err(|err| self.mk_err(e, err.to_string()));
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Polynomial, ParseError> {
        let Some(t) = self.bump() else {
            let (l, c) = self.end;
            return Err(ParseError::new(l, c, "unexpected end of expression"));
        };
        match &t.tok {
            Tok::Num { value, is_float } => {
                self.saw_float |= *is_float;
                Ok(Polynomial::constant(
                    self.vars.clone(),
                    Coeff::Exact(value.clone()),
                ))
            }
            Tok::Ident(name) => {
                if let Some(next) = self.peek() {
                    if next.tok == Tok::LParen {
                        return Err(self.mk_err(
                            t,
                            format!("function calls are not supported (`{name}(...)`)"),
                        ));
                    }
                }
                match self.vars.index_of(name) {
                    Some(i) => Ok(Polynomial::var(self.vars.clone(), CoeffKind::Exact, i)),
                    None => Err(self.mk_err(
                        t,
                        format!("unknown identifier `{name}`: not declared on any left-hand side"),
                    )),
                }
            }
            Tok::LParen => {
                let inner = self.sum()?;
                match self.bump() {
                    Some(Spanned {
                        tok: Tok::RParen, ..
                    }) => Ok(inner),
                    Some(other) => Err(self.mk_err(other, format!("expected `)`, found {}", describe(&other.tok)))),
                    None => {
                        let (l, c) = self.end;
                        Err(ParseError::new(l, c, "unclosed `(`"))
                    }
                }
            }
            other => Err(self.mk_err(t, format!("unexpected {}", describe(other)))),
        }
    }
}

/// Parses a system description. Variable order is the order of left-hand sides.
pub fn parse_system(src: &str) -> Result<PolySystem, ParseError> {
    struct Eqn {
        name: String,
        rhs: Vec<Spanned>,
        end: (usize, usize),
    }
    let mut eqns: Vec<Eqn> = Vec::new();
    for (ln, raw) in src.split('\n').enumerate() {
        let line = ln + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let toks = tokenize(raw, line, false)?;
        if toks.is_empty() {
            continue;
        }
        let name = match &toks[0].tok {
            Tok::Ident(n) => n.clone(),
            other => {
                return Err(ParseError::new(
                    line,
                    toks[0].col,
                    format!("expected `IDENT' = EXPR`, found {}", describe(other)),
                ))
            }
        };
        if toks.get(1).map(|t| &t.tok) != Some(&Tok::Prime) {
            let col = toks.get(1).map_or(raw.chars().count() + 1, |t| t.col);
            return Err(ParseError::new(line, col, "expected `'` after the variable name"));
        }
        if toks.get(2).map(|t| &t.tok) != Some(&Tok::Eq) {
            let col = toks.get(2).map_or(raw.chars().count() + 1, |t| t.col);
            return Err(ParseError::new(line, col, "expected `=`"));
        }
        if eqns.iter().any(|e| e.name == name) {
            return Err(ParseError::new(
                line,
                toks[0].col,
                format!("duplicate left-hand side `{name}'`"),
            ));
        }
        eqns.push(Eqn {
            name,
            rhs: toks[3..].to_vec(),
            end: (line, raw.chars().count() + 1),
        });
    }
    let vars = Arc::new(
        VarTable::new(eqns.iter().map(|e| e.name.clone()))
            .map_err(|e| ParseError::new(1, 1, e.to_string()))?,
    );
    let mut rhs = Vec::with_capacity(eqns.len());
    let mut saw_float = false;
    for e in &eqns {
        let (p, f) = parse_expr_tokens(&e.rhs, vars.clone(), e.end)?;
        saw_float |= f;
        rhs.push(p);
    }
    let kind = if saw_float {
        CoeffKind::Float
    } else {
        CoeffKind::Exact
    };
    let rhs = rhs.into_iter().map(|p| p.to_kind(kind)).collect();
    PolySystem::new(vars, rhs).map_err(|e| ParseError::new(1, 1, e.to_string()))
}

fn parse_expr_tokens(
    toks: &[Spanned],
    vars: Arc<VarTable>,
    end: (usize, usize),
) -> Result<(Polynomial, bool), ParseError> {
    if toks.is_empty() {
        return Err(ParseError::new(end.0, end.1, "empty right-hand side"));
    }
    let mut p = ExprParser {
        toks,
        pos: 0,
        vars,
        saw_float: false,
        end,
    };
    let poly = p.sum()?;
    if let Some(t) = p.peek() {
        return Err(ParseError::new(
            t.line,
            t.col,
            format!("unexpected {}", describe(&t.tok)),
        ));
    }
    Ok((poly, p.saw_float))
}

/// Parses a single polynomial expression over `vars` (exact unless a float
/// literal appears).
pub fn parse_polynomial(src: &str, vars: Arc<VarTable>) -> Result<Polynomial, ParseError> {
    let toks = tokenize(src, 1, true)?;
    let end = (1, src.chars().count() + 1);
    let (p, f) = parse_expr_tokens(&toks, vars, end)?;
    Ok(if f { p.to_kind(CoeffKind::Float) } else { p })
}

/// Parses `(c1, ...); (c1, ...)`. With `arity`, every tuple must have that
/// many coordinates.
pub fn parse_points(src: &str, arity: Option<usize>) -> Result<Vec<Point>, ParseError> {
    let toks = tokenize(src, 1, true)?;
    let no_vars = Arc::new(VarTable::new(Vec::<String>::new()).expect("empty table"));
    let mut points = Vec::new();
    let mut i = 0;
    let last = toks.last().map_or((1, 1), |t| (t.line, t.col + 1));
    while i < toks.len() {
        if toks[i].tok == Tok::Semi {
            i += 1;
            continue;
        }
        if toks[i].tok != Tok::LParen {
            return Err(ParseError::new(toks[i].line, toks[i].col, "expected `(` to start a point"));
        }
        let open = &toks[i];
        i += 1;
        let mut coords = Vec::new();
        loop {
            let s = i;
            let mut depth = 0usize;
            while i < toks.len() {
                match toks[i].tok {
                    Tok::LParen => depth += 1,
                    Tok::RParen if depth == 0 => break,
                    Tok::RParen => depth -= 1,
                    Tok::Comma if depth == 0 => break,
                    Tok::Semi => break,
                    _ => {}
                }
                i += 1;
            }
            let end = toks.get(i).map_or(last, |t| (t.line, t.col));
            let (p, is_float) = parse_expr_tokens(&toks[s..i], no_vars.clone(), end)?;
            let c = p.as_constant().expect("no variables in a point");
            coords.push(if is_float { c.to_kind(CoeffKind::Float) } else { c });
            match toks.get(i).map(|t| &t.tok) {
                Some(Tok::Comma) => {
                    i += 1;
                }
                Some(Tok::RParen) => {
                    i += 1;
                    break;
                }
                _ => {
                    return Err(ParseError::new(end.0, end.1, "expected `,` or `)` in point"));
                }
            }
        }
        if let Some(n) = arity {
            if coords.len() != n {
                return Err(ParseError::new(
                    open.line,
                    open.col,
                    format!("point has {} coordinates, the system has {n} variables", coords.len()),
                ));
            }
        }
        points.push(Point(coords));
    }
    Ok(points)
}

/// Serializes a system in the input format; `parse_system` reads it back to
/// an identical system.
pub fn serialize_system(sys: &PolySystem) -> String {
    sys.to_string()
}

/// Exact value of a decimal or rational literal string, e.g. `"0.3"`.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let no_vars = Arc::new(VarTable::new(Vec::<String>::new()).ok()?);
    let p = parse_polynomial(s, no_vars).ok()?;
    match p.as_constant()? {
        Coeff::Exact(r) => Some(r),
        Coeff::Float(_) => None,
    }
}

fn monomial_of(p: &Polynomial) -> Option<Monomial> {
    if p.len() != 1 {
        return None;
    }
    let (m, c) = p.terms().next()?;
    (c.is_one()).then(|| m.clone())
}

/// Parses a monomial such as `x1^2*x2` over `vars`.
pub fn parse_monomial(src: &str, vars: Arc<VarTable>) -> Result<Monomial, ParseError> {
    let p = parse_polynomial(src, vars)?;
    monomial_of(&p).ok_or_else(|| ParseError::new(1, 1, format!("`{src}` is not a monomial")))
}
