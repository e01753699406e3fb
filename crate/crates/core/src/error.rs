use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("variable tables differ")]
    VarTableMismatch,
    #[error("coefficient kinds differ (exact vs float)")]
    KindMismatch,
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("empty variable name")]
    EmptyVariableName,
    #[error("variable index {index} out of range for {nvars} variables")]
    VariableIndex { index: usize, nvars: usize },
    #[error("point has {got} coordinates, expected {expected}")]
    PointArity { expected: usize, got: usize },
    #[error("system has {vars} variables but {equations} equations")]
    SystemArity { vars: usize, equations: usize },
    #[error("exponent overflow (degrees must stay below 2^31)")]
    ExponentOverflow,
    #[error("the monomial 1 has no decompositions")]
    UnitDecomposition,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuadratizeError {
    #[error("budget exceeded: no inner-quadratic quadratization with at most {budget} new variables")]
    BudgetExceeded { budget: usize },
    #[error("not a quadratization; offending monomials: {}", .offending.join(", "))]
    NotAQuadratization { offending: Vec<String> },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error("point {point} is not an equilibrium: equation for {equation}' does not vanish")]
    NotEquilibrium { point: String, equation: String },
    #[error("equilibrium {point} is not dissipative for the original system ({verdict})")]
    NotDissipative { point: String, verdict: String },
    #[error("new variable {0} has no decomposition into earlier variables")]
    MissingDecomposition(String),
    #[error("characteristic polynomial has zero leading coefficient")]
    ZeroLeadingCoefficient,
    #[error("eigenvalue iteration did not converge; rerun with --mode exact")]
    EigenNoConvergence,
    #[error("lambda schedule overflowed 2^64 without reaching dissipativity")]
    LambdaOverflow,
    #[error("time budget of {seconds} s exceeded")]
    Timeout { seconds: f64 },
    #[error(transparent)]
    Quadratize(#[from] QuadratizeError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulateError {
    #[error("step size underflow at t = {t}; the problem looks stiff, try a smaller t_end")]
    StepUnderflow { t: f64 },
    #[error("step limit reached at t = {t}")]
    StepLimit { t: f64 },
    #[error("invalid integration request: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}
