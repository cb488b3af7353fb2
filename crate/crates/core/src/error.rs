use thiserror::Error;

/// Everything that can go wrong between reading a case file and finishing an
/// optimization run.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid case: {0}")]
    Validation(String),

    #[error("branch {from}-{to} has zero series impedance")]
    ZeroImpedance { from: u32, to: u32 },

    #[error("unknown branch index {0}")]
    UnknownBranch(usize),

    #[error("power flow did not converge after {iterations} iterations (mismatch {mismatch:.3e})")]
    PowerFlowDiverged { iterations: usize, mismatch: f64 },

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("equilibrium initialization failed: {0}")]
    Initialization(String),

    #[error("algebraic Jacobian g_y is ill-conditioned (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("eigendecomposition failed")]
    Eigen,

    #[error("mode {0} has a degenerate left/right normalization")]
    DegenerateMode(usize),

    #[error("mode tracking is ambiguous (best correlation {0:.3})")]
    ModeTracking(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("linear program is infeasible")]
    LpInfeasible,

    #[error("linear program is unbounded")]
    LpUnbounded,

    #[error("target damping ratio {target:.4}% is unreachable (best {reached:.4}%)")]
    TargetUnreachable { target: f64, reached: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
