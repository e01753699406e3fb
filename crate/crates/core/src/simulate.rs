//! Dormand–Prince 5(4) integration of polynomial systems.

use std::fmt::Write as _;

use crate::error::SimulateError;
use crate::poly::{Coeff, CoeffKind, Monomial, Point, PolySystem};

/// Butcher tableau; the last row doubles as the fifth-order weights, so the
/// seventh stage is `f(y_new)` (first same as last).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
/// Dense-output weights (Hairer's `contd5`).
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// State norm beyond which a run is declared a blow-up.
pub const BLOWUP_NORM: f64 = 1e12;

/// `(coefficient, [(variable, exponent)])`.
type FloatTerm = (f64, Vec<(usize, i32)>);

/// Polynomial right-hand side compiled to flat float terms.
#[derive(Debug, Clone)]
struct FloatRhs {
    dim: usize,
    eqs: Vec<Vec<FloatTerm>>,
}

impl FloatRhs {
    fn new(sys: &PolySystem) -> Self {
        let eqs = sys
            .rhs()
            .iter()
            .map(|p| {
                p.terms()
                    .map(|(m, c)| {
                        let factors = m
                            .exponents()
                            .iter()
                            .enumerate()
                            .filter(|(_, &e)| e > 0)
                            .map(|(i, &e)| (i, e as i32))
                            .collect();
                        (c.to_f64(), factors)
                    })
                    .collect()
            })
            .collect();
        Self { dim: sys.dim(), eqs }
    }

    fn eval(&self, y: &[f64], out: &mut [f64]) {
        for (o, eq) in out.iter_mut().zip(&self.eqs) {
            *o = eq
                .iter()
                .map(|(c, fs)| fs.iter().fold(*c, |acc, &(i, e)| acc * y[i].powi(e)))
                .sum();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Number of equally spaced output samples on `[0, t_end]`, both ends included.
    pub samples: usize,
    /// Accepted plus rejected steps before giving up.
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            samples: 500,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Status {
    Completed,
    BlowUp { t: f64 },
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Status::Completed => f.write_str("completed"),
            Status::BlowUp { t } => write!(f, "blow-up at t = {t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub status: Status,
    pub accepted: usize,
    pub rejected: usize,
}

impl Trajectory {
    pub fn last(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    /// `t,var1,...` header and one row per sample, then a `# status` comment.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push('t');
        for n in &self.names {
            s.push(',');
            s.push_str(n);
        }
        s.push('\n');
        for (t, y) in self.times.iter().zip(&self.states) {
            let _ = write!(s, "{t}");
            for v in y {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        let _ = writeln!(s, "# status: {}", self.status);
        s
    }
}

fn rms_norm(v: &[f64], scale: impl Fn(usize) -> f64) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter()
        .enumerate()
        .map(|(i, x)| (x / scale(i)).powi(2))
        .sum::<f64>()
        / v.len() as f64)
        .sqrt()
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn validate(sys: &PolySystem, x0: &Point, t_end: f64) -> Result<(), SimulateError> {
    if x0.len() != sys.dim() {
        return Err(SimulateError::InvalidInput(format!(
            "initial point has {} coordinates, the system has {} variables",
            x0.len(),
            sys.dim()
        )));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(SimulateError::InvalidInput(format!("t_end must be positive, got {t_end}")));
    }
    Ok(())
}

/// One Dormand–Prince step. `k[0]` holds `f(y)` on entry; on exit `k[6]`
/// holds `f(y_new)`.
fn dp_step(f: &FloatRhs, y: &[f64], h: f64, k: &mut [Vec<f64>; 7], ynew: &mut [f64], tmp: &mut [f64]) {
    let n = y.len();
    for s in 1..7 {
        for i in 0..n {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(s) {
                acc += A[s][j] * kj[i];
            }
            tmp[i] = y[i] + h * acc;
        }
        f.eval(tmp, &mut k[s]);
    }
    ynew.copy_from_slice(tmp);
}

/// Adaptive integration with dense output at `opts.samples` equally spaced times.
pub fn integrate(
    sys: &PolySystem,
    x0: &Point,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory, SimulateError> {
    validate(sys, x0, t_end)?;
    if !(opts.rel_tol > 0.0 && opts.rel_tol < 1.0 && opts.abs_tol > 0.0 && opts.abs_tol < 1.0) {
        return Err(SimulateError::InvalidInput("tolerances must lie in (0, 1)".into()));
    }
    let f = FloatRhs::new(sys);
    let n = f.dim;
    let samples = opts.samples.max(2);
    let sample_t = |k: usize| {
        if k + 1 == samples {
            t_end
        } else {
            t_end * k as f64 / (samples - 1) as f64
        }
    };
    let names = sys.vars().names().to_vec();
    let mut y = x0.to_f64();
    let mut traj = Trajectory {
        names,
        times: vec![0.0],
        states: vec![y.clone()],
        status: Status::Completed,
        accepted: 0,
        rejected: 0,
    };
    if !y.iter().all(|v| v.is_finite()) || euclid(&y) > BLOWUP_NORM {
        traj.status = Status::BlowUp { t: 0.0 };
        return Ok(traj);
    }
    let mut next_sample = 1;

    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    let mut ynew = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut err = vec![0.0; n];
    f.eval(&y, &mut k[0]);

    let sc = |i: usize, a: &[f64], b: &[f64]| opts.abs_tol + opts.rel_tol * a[i].abs().max(b[i].abs());

    let mut h = initial_step(&f, &y, &k[0], t_end, opts);
    let mut t = 0.0;
    let mut facold: f64 = 1e-4;
    const SAFE: f64 = 0.9;
    const BETA: f64 = 0.04;
    let expo1 = 0.2 - BETA * 0.75;
    let mut reject_prev = false;

    while t < t_end {
        if traj.accepted + traj.rejected >= opts.max_steps {
            return Err(SimulateError::StepLimit { t });
        }
        if h < f64::EPSILON * t.abs().max(1.0) {
            return Err(SimulateError::StepUnderflow { t });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        dp_step(&f, &y, h, &mut k, &mut ynew, &mut tmp);
        for i in 0..n {
            err[i] = h * E.iter().zip(k.iter()).map(|(e, ki)| e * ki[i]).sum::<f64>();
        }
        let e = rms_norm(&err, |i| sc(i, &y, &ynew));
        if !e.is_finite() || !ynew.iter().all(|v| v.is_finite()) {
            traj.rejected += 1;
            reject_prev = true;
            h *= 0.2;
            continue;
        }
        let fac11 = e.powf(expo1);
        if e <= 1.0 {
            // Dense output on [t, t + h].
            let tnew = if last { t_end } else { t + h };
            while next_sample < samples && sample_t(next_sample) <= tnew {
                let ts = sample_t(next_sample);
                let state = if ts == tnew {
                    ynew.clone()
                } else {
                    dense(&y, &ynew, &k, h, (ts - t) / h)
                };
                traj.times.push(ts);
                traj.states.push(state);
                next_sample += 1;
            }
            y.copy_from_slice(&ynew);
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            t = tnew;
            traj.accepted += 1;
            if euclid(&y) > BLOWUP_NORM {
                traj.status = Status::BlowUp { t };
                return Ok(traj);
            }
            let mut fac = fac11 / facold.powf(BETA);
            fac = (fac / SAFE).clamp(0.1, 5.0);
            let mut hnew = h / fac;
            if reject_prev {
                hnew = hnew.min(h);
            }
            facold = e.max(1e-4);
            reject_prev = false;
            h = hnew;
        } else {
            traj.rejected += 1;
            reject_prev = true;
            h /= (fac11 / SAFE).min(5.0);
        }
    }
    Ok(traj)
}

fn dense(y0: &[f64], y1: &[f64], k: &[Vec<f64>; 7], h: f64, theta: f64) -> Vec<f64> {
    let theta1 = 1.0 - theta;
    (0..y0.len())
        .map(|i| {
            let ydiff = y1[i] - y0[i];
            let bspl = h * k[0][i] - ydiff;
            let r4 = ydiff - h * k[6][i] - bspl;
            let r5 = h * D.iter().zip(k.iter()).map(|(d, kj)| d * kj[i]).sum::<f64>();
            y0[i] + theta * (ydiff + theta1 * (bspl + theta * (r4 + theta1 * r5)))
        })
        .collect()
}

fn initial_step(f: &FloatRhs, y: &[f64], f0: &[f64], t_end: f64, opts: &IntegrateOptions) -> f64 {
    let sc = |i: usize| opts.abs_tol + opts.rel_tol * y[i].abs();
    let d0 = rms_norm(y, sc);
    let d1 = rms_norm(f0, sc);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(t_end);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; y.len()];
    f.eval(&y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms_norm(&diff, sc) / h0;
    let m = d1.max(d2);
    let h1 = if m <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / m).powf(0.2)
    };
    (100.0 * h0).min(h1).min(t_end)
}

/// Fixed-step fifth-order integration (no error control); returns the final state.
pub fn integrate_fixed(sys: &PolySystem, x0: &Point, t_end: f64, steps: usize) -> Result<Vec<f64>, SimulateError> {
    validate(sys, x0, t_end)?;
    if steps == 0 {
        return Err(SimulateError::InvalidInput("steps must be positive".into()));
    }
    let f = FloatRhs::new(sys);
    let n = f.dim;
    let h = t_end / steps as f64;
    let mut y = x0.to_f64();
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    let mut ynew = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    f.eval(&y, &mut k[0]);
    for _ in 0..steps {
        dp_step(&f, &y, h, &mut k, &mut ynew, &mut tmp);
        y.copy_from_slice(&ynew);
        let (first, rest) = k.split_at_mut(1);
        first[0].copy_from_slice(&rest[5]);
    }
    Ok(y)
}

/// `(x0, g_1(x0), ..., g_m(x0))` in floating point.
pub fn lift_initial_condition(x0: &Point, g: &[Monomial]) -> Result<Point, SimulateError> {
    let x = x0.to_f64();
    let mut out = x.clone();
    for m in g {
        if m.nvars() != x.len() {
            return Err(SimulateError::InvalidInput(format!(
                "new variable over {} variables, point has {}",
                m.nvars(),
                x.len()
            )));
        }
        out.push(
            m.exponents()
                .iter()
                .zip(&x)
                .fold(1.0, |acc, (&e, &v)| acc * v.powi(e as i32)),
        );
    }
    Ok(Point::from_f64(&out))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DriftReport {
    /// Largest `|x_orig(t) - x_lifted(t)|` (max norm) over common samples.
    pub max_deviation: f64,
    /// Largest `|y_j(t) - g_j(x(t))|` along the lifted trajectory.
    pub max_invariant_drift: f64,
    pub original_status: Status,
    pub lifted_status: Status,
    #[serde(skip)]
    pub original: Trajectory,
    #[serde(skip)]
    pub lifted: Trajectory,
}

/// Integrates the original and lifted systems from consistent initial data
/// and measures how far they drift apart.
pub fn compare(
    orig: &PolySystem,
    lifted: &PolySystem,
    g: &[Monomial],
    x0: &Point,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<DriftReport, SimulateError> {
    let n = orig.dim();
    if lifted.dim() != n + g.len() {
        return Err(SimulateError::InvalidInput(format!(
            "lifted system has {} variables, expected {}",
            lifted.dim(),
            n + g.len()
        )));
    }
    let z0 = lift_initial_condition(x0, g)?;
    let a = integrate(orig, x0, t_end, opts)?;
    let b = integrate(lifted, &z0, t_end, opts)?;
    let max_deviation = a
        .states
        .iter()
        .zip(&b.states)
        .flat_map(|(u, v)| u.iter().zip(v).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max);
    let max_invariant_drift = b
        .states
        .iter()
        .flat_map(|s| {
            g.iter().enumerate().map(move |(j, m)| {
                let gx = m
                    .exponents()
                    .iter()
                    .zip(&s[..n])
                    .fold(1.0, |acc, (&e, &v)| acc * v.powi(e as i32));
                (s[n + j] - gx).abs()
            })
        })
        .fold(0.0, f64::max);
    Ok(DriftReport {
        max_deviation,
        max_invariant_drift,
        original_status: a.status,
        lifted_status: b.status,
        original: a,
        lifted: b,
    })
}

/// Converts an exact point to the nearest floats (no-op for float points).
pub fn to_float_point(p: &Point) -> Point {
    Point(p.0.iter().map(|c| c.to_kind(CoeffKind::Float)).collect::<Vec<Coeff>>())
}
