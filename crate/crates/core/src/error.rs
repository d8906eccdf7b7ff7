use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown form identifier `{0}` (expected `delta` or `11a`)")]
    UnknownForm(String),

    #[error("p_max = {requested} exceeds the supported cap {cap}")]
    PrimeCapExceeded { requested: u64, cap: u64 },

    #[error("level {0} is not squarefree")]
    LevelNotSquarefree(u64),

    #[error("Deligne bound violated for `{label}` at p = {p} (a_p = {a_p})")]
    DeligneViolation { label: String, p: u64, a_p: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("prime {p} exceeds the stored eigenvalue range p_max = {p_max}")]
    EigenvalueRange { p: u64, p_max: u64 },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("modulus {0} is outside the supported range [3, {1}]")]
    ModulusOutOfRange(u64, u64),

    #[error("Re(s) = {re} is outside the regime of `{op}` (requires Re(s) > {bound}); {hint}")]
    Regime { op: &'static str, re: f64, bound: f64, hint: &'static str },

    #[error("cutoff insufficient for {what}: tail {tail:e} above tolerance {tol:e}{}", suggested.map(|n| format!(", try n_max >= {n}")).unwrap_or_default())]
    CutoffInsufficient { what: &'static str, tail: f64, tol: f64, suggested: Option<u64> },

    #[error("aliasing guard: boundary magnitude {magnitude:e} above threshold {threshold:e}")]
    Aliasing { magnitude: f64, threshold: f64 },

    #[error("singular local factor at p = {0} on the integration circle")]
    Singularity(u64),

    #[error("test function support escapes the grid while the density is not negligible at the boundary ({0:e})")]
    SupportEscapes(f64),

    #[error("gcd condition violated: {0}")]
    Gcd(String),

    #[error("family error: {0}")]
    Family(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coefficient overflow in exact q-expansion at degree {0}")]
    CoefficientOverflow(usize),

    #[error("grid file: {0}")]
    GridFormat(String),

    #[error("precision warning escalated: {0}")]
    Precision(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical guard (as opposed to bad input).
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::CutoffInsufficient { .. }
                | Error::Aliasing { .. }
                | Error::Singularity(_)
                | Error::SupportEscapes(_)
                | Error::CoefficientOverflow(_)
                | Error::Precision(_)
        )
    }
}
