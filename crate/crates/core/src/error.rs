use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Payloads are reported as `f64` regardless of the scalar type used for the computation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("utility is constant on its effective domain (x_lower = x_bliss = {0}); doing nothing is optimal")]
    DegenerateUtility(f64),
    #[error("conjugate maximizer for y = {y} is pinned at the search bracket end {boundary}")]
    BracketTooSmall { y: f64, boundary: f64 },
    #[error("series variable has no usable tail bound at scale {scale}")]
    TailBoundUnavailable { scale: f64 },
    #[error("no finite gauge: the modular exceeds 1 for every tested scale")]
    NonFiniteNorm,
    #[error("delta-2 ratios still increasing at the end of the grid (last ratio {last_ratio} at x = {x})")]
    InconclusiveGrid { x: f64, last_ratio: f64 },
    #[error("grid function has no finite value")]
    ImproperFunction,
    #[error("infimal convolution is identically +infinity")]
    EmptyDomain,
    #[error("expected utility is unbounded along the strategy space (last value {value})")]
    UnboundedUtility { value: f64 },
    #[error(
        "no strategy keeps the endowment strictly inside the utility domain (best margin {margin})"
    )]
    InfeasibleCore { margin: f64 },
    #[error("dual problem diverges: every feasible density vanishes on some state while V(0) is infinite")]
    DualDiverges,
    #[error("density is not bliss-free: I_V(lambda q) has no interior minimizer")]
    NotBlissFree,
    #[error("first-order condition has an interior root at theta = {root}")]
    InteriorOptimum { root: f64 },
    #[error("quadrature failed on [{a}, {b}]: estimate {estimate}, error estimate {error}")]
    QuadratureFailure {
        a: f64,
        b: f64,
        estimate: f64,
        error: f64,
    },
    #[error("shock index {index} exceeds the truncation level {truncation}")]
    IndexOutOfTruncation { index: usize, truncation: usize },
    #[error("undefined extended-real operation: {0}")]
    UndefinedArithmetic(&'static str),
    #[error("solver did not converge: {0}")]
    NoConvergence(String),
    #[error("market admits an arbitrage")]
    Arbitrage,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
