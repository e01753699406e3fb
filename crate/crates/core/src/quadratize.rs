//! Optimal inner-quadratic monomial quadratization.
//!
//! The search works on sets of new variables. For a set `Z` the generalized
//! variables are `V = {1, x1..xn} ∪ Z`; a node is a solution when every
//! right-hand-side monomial (of the system and of the derivatives of `Z`) is a
//! product of two elements of `V`, and every element of `Z` is a product of
//! two non-unit elements of `V`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use crate::error::{PolyError, QuadratizeError};
use crate::poly::{
    unordered_decompositions, Coeff, CoeffKind, Monomial, Point, PolySystem, Polynomial, VarTable,
};

/// How a monomial is split into two generalized variables when rewriting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewriteRule {
    /// Fewest new-variable factors, then the smallest index pair.
    /// Quadratic monomials in `x` stay in `x`.
    #[default]
    FewestLifted,
    /// Most new-variable factors, then the smallest index pair
    /// (`x^2` becomes `y` when `y = x^2`).
    MostLifted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubproblemState {
    /// Current new variables in graded order.
    pub new_vars: Vec<Monomial>,
    pub ns: BTreeSet<Monomial>,
    pub nq: BTreeSet<Monomial>,
}

impl SubproblemState {
    pub fn is_solution(&self) -> bool {
        self.ns.is_empty() && self.nq.is_empty()
    }
}

/// Monomials of all right-hand sides, with a cache of the monomials of the
/// derivative of each candidate new variable.
struct MonomialOracle<'a> {
    sys: &'a PolySystem,
    rhs: BTreeSet<Monomial>,
    lie: HashMap<Monomial, Vec<Monomial>>,
}

impl<'a> MonomialOracle<'a> {
    fn new(sys: &'a PolySystem) -> Self {
        let rhs = sys
            .rhs()
            .iter()
            .flat_map(|p| p.monomials().cloned())
            .collect();
        Self {
            sys,
            rhs,
            lie: HashMap::new(),
        }
    }

    fn lie_monomials(&mut self, z: &Monomial) -> &[Monomial] {
        if !self.lie.contains_key(z) {
            let p = Polynomial::term(self.sys.vars().clone(), z.clone(), Coeff::one(self.sys.kind()));
            let d = p.lie_derivative(self.sys).expect("same table");
            self.lie.insert(z.clone(), d.monomials().cloned().collect());
        }
        &self.lie[z]
    }

    fn state(&mut self, new_vars: &[Monomial]) -> SubproblemState {
        let n = self.sys.dim();
        let mut v: HashSet<Monomial> = HashSet::with_capacity(n + new_vars.len() + 1);
        v.insert(Monomial::one(n));
        for i in 0..n {
            v.insert(Monomial::var(n, i));
        }
        v.extend(new_vars.iter().cloned());
        let vlist: Vec<Monomial> = v.iter().cloned().collect();

        let in_v2 = |m: &Monomial| {
            vlist
                .iter()
                .any(|a| a.divides(m) && m.checked_div(a).is_some_and(|b| v.contains(&b)))
        };

        let mut ns = BTreeSet::new();
        for m in &self.rhs {
            if !in_v2(m) {
                ns.insert(m.clone());
            }
        }
        for z in new_vars {
            for m in self.lie_monomials(z) {
                if !in_v2(m) {
                    ns.insert(m.clone());
                }
            }
        }
        let mut nq = BTreeSet::new();
        for z in new_vars {
            let inner = vlist.iter().any(|a| {
                !a.is_one()
                    && a != z
                    && a.divides(z)
                    && z.checked_div(a).is_some_and(|b| !b.is_one() && v.contains(&b))
            });
            if !inner {
                nq.insert(z.clone());
            }
        }
        let mut new_vars = new_vars.to_vec();
        new_vars.sort_by(|a, b| a.graded_cmp(b));
        SubproblemState { new_vars, ns, nq }
    }
}

pub fn compute_ns_nq(sys: &PolySystem, new_vars: &[Monomial]) -> SubproblemState {
    MonomialOracle::new(sys).state(new_vars)
}

/// Branching score of `m`: (number of admissible decompositions, higher
/// degree first, then `m` itself). Smaller is branched on first.
pub fn score(state: &SubproblemState, m: &Monomial) -> (u64, std::cmp::Reverse<u64>, Monomial) {
    let allow_unit = !state.nq.contains(m);
    (
        m.decomposition_count(allow_unit),
        std::cmp::Reverse(m.degree()),
        m.clone(),
    )
}

#[derive(Debug, Clone, Default)]
pub struct SearchOptions {
    /// Largest number of new variables to try. Defaults to the size of the
    /// universal set, which always suffices.
    pub budget: Option<usize>,
    /// Worker threads for the parallel search; `DISSQUAD_THREADS` is used when unset.
    pub threads: Option<usize>,
    /// On budget exhaustion return the universal set instead of an error.
    pub universal_fallback: bool,
    pub rule: RewriteRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct SearchStats {
    pub nodes: u64,
    pub passes: usize,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratizationResult {
    /// Original system.
    pub system: PolySystem,
    /// Original variables followed by the new ones.
    pub ext_vars: Arc<VarTable>,
    /// New variables as monomials in `x`, graded order.
    pub g: Vec<Monomial>,
    /// Right-hand sides for `x`, over `ext_vars`.
    pub q1: Vec<Polynomial>,
    /// Right-hand sides for the new variables, over `ext_vars`.
    pub q2: Vec<Polynomial>,
    /// For each new variable `y_i`, indices into `ext_vars` of factors `a_i, b_i`
    /// with `a_i * b_i = g_i` and both earlier than `y_i`.
    pub stabilizer_pairs: Vec<(usize, usize)>,
    pub rule: RewriteRule,
    /// Stabilizer gain applied to `q2` (0 for a plain quadratization).
    pub lambda: u64,
    pub stats: SearchStats,
}

impl QuadratizationResult {
    pub fn n(&self) -> usize {
        self.system.dim()
    }

    /// The quadratic system `x' = q1, y' = q2` over `ext_vars`.
    pub fn lifted_system(&self) -> PolySystem {
        let rhs = self.q1.iter().chain(&self.q2).cloned().collect();
        PolySystem::new(self.ext_vars.clone(), rhs).expect("consistent by construction")
    }

    /// Names of the new variables.
    pub fn new_var_names(&self) -> &[String] {
        &self.ext_vars.names()[self.n()..]
    }

    /// `y_i = g_i` strings, e.g. `y1 = x^2`.
    pub fn new_var_definitions(&self) -> Vec<String> {
        self.g
            .iter()
            .zip(self.new_var_names())
            .map(|(m, y)| format!("{y} = {}", m.display(self.system.vars())))
            .collect()
    }

    /// Substitutes `y_j := g_j(x)` into a polynomial over `ext_vars`.
    pub fn substitute(&self, p: &Polynomial) -> Result<Polynomial, PolyError> {
        substitute_lift(p, self.system.vars().clone(), &self.g)
    }

    /// Checks that every lifted equation has degree at most two and turns
    /// into the right derivative under `y := g(x)`: `x_i'` for the original
    /// equations, the Lie derivative of `g_j` for the new ones.
    pub fn verify(&self) -> Result<(), QuadratizeError> {
        let vars = self.system.vars();
        let mut offending = Vec::new();
        for (i, q) in self.q1.iter().enumerate() {
            if q.degree() > 2 || self.substitute(q)? != self.system.rhs()[i] {
                offending.push(vars.names()[i].clone());
            }
        }
        for (j, (q, m)) in self.q2.iter().zip(&self.g).enumerate() {
            let gj = Polynomial::term(vars.clone(), m.clone(), Coeff::one(self.system.kind()));
            if q.degree() > 2 || self.substitute(q)? != gj.lie_derivative(&self.system)? {
                offending.push(self.new_var_names()[j].clone());
            }
        }
        if offending.is_empty() {
            Ok(())
        } else {
            Err(QuadratizeError::NotAQuadratization { offending })
        }
    }

    /// `(x*, g(x*))`.
    pub fn lift_point(&self, pt: &Point) -> Result<Point, PolyError> {
        lift_point(pt, self.system.vars(), &self.g, self.system.kind())
    }
}

/// Appends `g_j(pt)` to `pt`.
pub(crate) fn lift_point(
    pt: &Point,
    vars: &Arc<VarTable>,
    g: &[Monomial],
    kind: CoeffKind,
) -> Result<Point, PolyError> {
    let mut coords = pt.0.clone();
    for m in g {
        let p = Polynomial::term(vars.clone(), m.clone(), Coeff::one(kind));
        coords.push(p.evaluate(pt)?);
    }
    Ok(Point(coords))
}

/// Replaces every extended variable `y_j` (index `n + j`) by `g_j`.
pub fn substitute_lift(
    p: &Polynomial,
    base: Arc<VarTable>,
    g: &[Monomial],
) -> Result<Polynomial, PolyError> {
    let n = base.len();
    if p.vars().len() != n + g.len() {
        return Err(PolyError::VarTableMismatch);
    }
    let mut out = Polynomial::zero(base, p.kind());
    for (m, c) in p.terms() {
        let e = m.exponents();
        let mut acc = Monomial::from_exponents(e[..n].to_vec());
        for (j, gj) in g.iter().enumerate() {
            if e[n + j] > 0 {
                acc = acc.checked_mul(&gj.pow(e[n + j])?)?;
            }
        }
        out.add_term(acc, c.clone());
    }
    Ok(out)
}

/// Names for `m` new variables that do not clash with `vars`.
pub fn new_variable_names(vars: &VarTable, m: usize) -> Vec<String> {
    for prefix in ["y", "w", "z", "u", "v"] {
        let names: Vec<String> = (1..=m).map(|i| format!("{prefix}{i}")).collect();
        if names.iter().all(|s| vars.index_of(s).is_none()) {
            return names;
        }
    }
    let mut k = 0usize;
    loop {
        let names: Vec<String> = (1..=m).map(|i| format!("y{k}_{i}")).collect();
        if names.iter().all(|s| vars.index_of(s).is_none()) {
            return names;
        }
        k += 1;
    }
}

/// The universal new-variable set: all `x^i` with `0 <= i_j <= d_j` and total
/// degree above one, `d_j` the largest degree of `x_j` in any right-hand side.
/// Empty when every `d_j <= 1` and the system is already quadratic.
pub fn carothers_set(sys: &PolySystem) -> Vec<Monomial> {
    let n = sys.dim();
    let d: Vec<u32> = (0..n)
        .map(|j| sys.rhs().iter().map(|p| p.degree_in(j)).max().unwrap_or(0))
        .collect();
    if d.iter().all(|&e| e <= 1) && sys.degree() <= 2 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    'outer: loop {
        let m = Monomial::from_exponents(cur.clone());
        if m.degree() > 1 {
            out.push(m);
        }
        let mut j = n;
        loop {
            if j == 0 {
                break 'outer;
            }
            j -= 1;
            if cur[j] < d[j] {
                cur[j] += 1;
                for c in cur.iter_mut().skip(j + 1) {
                    *c = 0;
                }
                break;
            }
        }
    }
    out.sort_by(|a, b| a.graded_cmp(b));
    out
}

pub fn carothers_universal(sys: &PolySystem) -> Result<QuadratizationResult, QuadratizeError> {
    rewrite_quadratic(sys, &carothers_set(sys), RewriteRule::default())
}

/// Rewrites the system over `x` and the new variables `g`.
pub fn rewrite_quadratic(
    sys: &PolySystem,
    g: &[Monomial],
    rule: RewriteRule,
) -> Result<QuadratizationResult, QuadratizeError> {
    let n = sys.dim();
    let mut g = g.to_vec();
    g.sort_by(|a, b| a.graded_cmp(b));
    g.dedup();

    let state = compute_ns_nq(sys, &g);
    if !state.is_solution() {
        let offending = state
            .ns
            .iter()
            .chain(&state.nq)
            .map(|m| m.display(sys.vars()).to_string())
            .collect();
        return Err(QuadratizeError::NotAQuadratization { offending });
    }

    let mut names = sys.vars().names().to_vec();
    names.extend(new_variable_names(sys.vars(), g.len()));
    let ext = Arc::new(VarTable::new(names)?);
    let next = ext.len();

    // Generalized variables in index order: 1, x1..xn, y1..ym.
    let mut gen: Vec<Monomial> = vec![Monomial::one(n)];
    gen.extend((0..n).map(|i| Monomial::var(n, i)));
    gen.extend(g.iter().cloned());
    let index: HashMap<&Monomial, usize> = gen.iter().enumerate().map(|(i, m)| (m, i)).collect();

    let ext_monomial = |i: usize, j: usize| {
        let mut e = vec![0u32; next];
        for k in [i, j] {
            if k > 0 {
                e[k - 1] += 1;
            }
        }
        Monomial::from_exponents(e)
    };

    let pick = |m: &Monomial| -> Monomial {
        let mut best: Option<((usize, usize), usize)> = None;
        for (i, a) in gen.iter().enumerate() {
            let Some(b) = m.checked_div(a) else { continue };
            let Some(&j) = index.get(&b) else { continue };
            if j < i {
                continue;
            }
            let lifted = usize::from(i > n) + usize::from(j > n);
            let better = match best {
                None => true,
                Some((_, l)) => match rule {
                    RewriteRule::FewestLifted => lifted < l,
                    RewriteRule::MostLifted => lifted > l,
                },
            };
            if better {
                best = Some(((i, j), lifted));
            }
        }
        let ((i, j), _) = best.expect("monomial lies in V^2");
        ext_monomial(i, j)
    };

    let rewrite = |p: &Polynomial| {
        let mut out = Polynomial::zero(ext.clone(), p.kind());
        for (m, c) in p.terms() {
            out.add_term(pick(m), c.clone());
        }
        out
    };

    let q1: Vec<Polynomial> = sys.rhs().iter().map(rewrite).collect();
    let mut q2 = Vec::with_capacity(g.len());
    for z in &g {
        let zp = Polynomial::term(sys.vars().clone(), z.clone(), Coeff::one(sys.kind()));
        q2.push(rewrite(&zp.lie_derivative(sys)?));
    }

    let stabilizer_pairs = g
        .iter()
        .enumerate()
        .map(|(i, z)| {
            // Earliest valid split among x and y_1..y_{i-1}; ext index = gen index - 1.
            let limit = n + 1 + i;
            (1..limit)
                .find_map(|a| {
                    let b = z.checked_div(&gen[a])?;
                    let &bj = index.get(&b)?;
                    (bj >= a && bj < limit).then_some((a - 1, bj - 1))
                })
                .ok_or_else(|| QuadratizeError::NotAQuadratization {
                    offending: vec![z.display(sys.vars()).to_string()],
                })
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(QuadratizationResult {
        system: sys.clone(),
        ext_vars: ext,
        g,
        q1,
        q2,
        stabilizer_pairs,
        rule,
        lambda: 0,
        stats: SearchStats::default(),
    })
}

fn insert_sorted(set: &[Monomial], extra: &[Monomial]) -> Vec<Monomial> {
    let mut out = set.to_vec();
    for m in extra {
        if let Err(pos) = out.binary_search_by(|p| p.graded_cmp(m)) {
            out.insert(pos, m.clone());
        }
    }
    out
}

struct Pass<'a> {
    oracle: MonomialOracle<'a>,
    bound: usize,
    visited: HashSet<Vec<Monomial>>,
    solutions: BTreeSet<Vec<Monomial>>,
    nodes: u64,
}

impl<'a> Pass<'a> {
    fn new(sys: &'a PolySystem, bound: usize) -> Self {
        Self {
            oracle: MonomialOracle::new(sys),
            bound,
            visited: HashSet::new(),
            solutions: BTreeSet::new(),
            nodes: 0,
        }
    }

    /// Children of a node: each admissible split of the lowest-score
    /// monomial, with the new factors added. `None` for a solution.
    fn children(&mut self, new_vars: &[Monomial]) -> Option<Vec<Vec<Monomial>>> {
        let state = self.oracle.state(new_vars);
        if state.is_solution() {
            return None;
        }
        let m = state
            .ns
            .iter()
            .chain(&state.nq)
            .min_by_key(|m| score(&state, m))
            .expect("non-solution has a candidate")
            .clone();
        let allow_unit = !state.nq.contains(&m);
        let vset: HashSet<&Monomial> = new_vars.iter().collect();
        let mut out = Vec::new();
        for (a, b) in unordered_decompositions(&m, allow_unit).expect("m is not 1") {
            let extra: Vec<Monomial> = [a, b]
                .into_iter()
                .filter(|f| f.degree() > 1 && !vset.contains(f))
                .collect();
            if new_vars.len() + dedup_len(&extra) <= self.bound {
                out.push(insert_sorted(new_vars, &extra));
            }
        }
        Some(out)
    }

    fn dfs(&mut self, new_vars: Vec<Monomial>) {
        if !self.visited.insert(new_vars.clone()) {
            return;
        }
        self.nodes += 1;
        match self.children(&new_vars) {
            None => {
                self.solutions.insert(new_vars);
            }
            Some(kids) => {
                if new_vars.len() >= self.bound {
                    return;
                }
                for k in kids {
                    self.dfs(k);
                }
            }
        }
    }
}

fn dedup_len(v: &[Monomial]) -> usize {
    match v {
        [a, b] if a == b => 1,
        _ => v.len(),
    }
}

fn worker_count(opt: Option<usize>) -> usize {
    opt.or_else(|| {
        std::env::var("DISSQUAD_THREADS")
            .ok()
            .and_then(|s| s.trim().parse().ok())
    })
    .filter(|&t| t > 0)
    .unwrap_or(0)
}

/// One bounded pass; returns all solutions of size at most `bound` reachable
/// from the root, and the number of nodes expanded.
fn bounded_pass(sys: &PolySystem, bound: usize, threads: usize) -> (BTreeSet<Vec<Monomial>>, u64) {
    let mut root = Pass::new(sys, bound);
    let kids = match root.children(&[]) {
        None => return (BTreeSet::from([Vec::new()]), 1),
        Some(k) if bound == 0 => {
            let _ = k;
            return (BTreeSet::new(), 1);
        }
        Some(k) => k,
    };
    let run = |k: Vec<Monomial>| {
        let mut p = Pass::new(sys, bound);
        p.dfs(k);
        (p.solutions, p.nodes)
    };
    let results: Vec<(BTreeSet<Vec<Monomial>>, u64)> = par_map(kids, run, threads);
    let mut sols = BTreeSet::new();
    let mut nodes = 1;
    for (s, c) in results {
        sols.extend(s);
        nodes += c;
    }
    (sols, nodes)
}

#[cfg(feature = "parallel")]
fn par_map<T, R, F>(items: Vec<T>, f: F, threads: usize) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    if items.len() < 2 || threads == 1 {
        return items.into_iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| items.into_par_iter().map(&f).collect()),
        Err(_) => items.into_iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, R, F>(items: Vec<T>, f: F, _threads: usize) -> Vec<R>
where
    F: Fn(T) -> R,
{
    items.into_iter().map(f).collect()
}

/// Minimum-cardinality inner-quadratic monomial quadratization. Among all
/// optimal sets the graded-lexicographically smallest one is returned.
pub fn branch_and_bound(
    sys: &PolySystem,
    opts: &SearchOptions,
) -> Result<QuadratizationResult, QuadratizeError> {
    let universal = carothers_set(sys);
    let budget = opts.budget.unwrap_or(universal.len());
    let threads = worker_count(opts.threads);
    let mut nodes = 0;
    for bound in 0..=budget {
        let (sols, c) = bounded_pass(sys, bound, threads);
        nodes += c;
        if let Some(best) = sols.into_iter().min_by(|a, b| graded_list_cmp(a, b)) {
            let mut r = rewrite_quadratic(sys, &best, opts.rule)?;
            r.stats = SearchStats {
                nodes,
                passes: bound + 1,
                fallback: false,
            };
            return Ok(r);
        }
    }
    if opts.universal_fallback {
        let mut r = rewrite_quadratic(sys, &universal, opts.rule)?;
        r.stats = SearchStats {
            nodes,
            passes: budget + 1,
            fallback: true,
        };
        return Ok(r);
    }
    Err(QuadratizeError::BudgetExceeded { budget })
}

/// Lexicographic comparison of two graded-sorted monomial lists.
pub fn graded_list_cmp(a: &[Monomial], b: &[Monomial]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let c = x.graded_cmp(y);
        if c.is_ne() {
            return c;
        }
    }
    a.len().cmp(&b.len())
}

/// Whether `g` (graded order) is inner-quadratic: each `g_i` splits into two
/// factors from `{x} ∪ {g_1..g_{i-1}}`.
pub fn is_inner_quadratic(n: usize, g: &[Monomial]) -> bool {
    g.iter().enumerate().all(|(i, z)| {
        let mut pool: Vec<Monomial> = (0..n).map(|k| Monomial::var(n, k)).collect();
        pool.extend(g[..i].iter().cloned());
        pool.iter()
            .any(|a| z.checked_div(a).is_some_and(|b| pool.contains(&b)))
    })
}
