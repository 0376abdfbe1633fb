use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (residual {residual:.3e} exceeds {tol:.3e})")]
    NotHermitian { residual: f64, tol: f64 },
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entries after matrix exponential")]
    OverflowDetected,
    #[error("dimension {dim} does not factor as the product of {dims:?}")]
    BadDimensionFactorization { dim: usize, dims: Vec<usize> },
    #[error("support {support:?} out of range for {n} qubits")]
    SupportOutOfRange { support: Vec<usize>, n: usize },
    #[error("unknown instance kind `{0}`")]
    UnknownKind(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("spectral gap {gap:.3e} below tolerance {tol:.3e}")]
    DegenerateGap { gap: f64, tol: f64 },
    #[error("state has smallest eigenvalue {min_eig:.3e}, below the full-rank threshold")]
    SingularSigma { min_eig: f64 },
    #[error("generator is not KMS detailed balanced (residual {residual:.3e} > {tol:.3e})")]
    NotDetailedBalanced { residual: f64, tol: f64 },
    #[error("generator has positive eigenvalue {value:.3e}")]
    PositiveEigenvalue { value: f64 },
    #[error("gamma_star must lie in (0, 1), got {0}")]
    BadGamma(f64),
    #[error("target error must lie in (0, 1), got {0}")]
    BadEps(f64),
    #[error("insufficient spread: {0}")]
    InsufficientSpread(String),
    #[error("Hamiltonian is frustrated (residual {residual:.3e})")]
    FrustrationDetected { residual: f64 },
    #[error("schedule spacing constant must exceed 1, got {0}")]
    BadAlpha(f64),
    #[error("dominant singular value {value:.3e} is below half the overlap floor {floor:.3e}")]
    OverlapTooSmall { value: f64, floor: f64 },
    #[error("second singular value {second:.3e} is within 10x of the first {first:.3e}")]
    RankAmbiguous { first: f64, second: f64 },
    #[error("bad inputs: {0}")]
    BadInputs(String),
    #[error("parent term {term} is not negative semidefinite (max eigenvalue {max_eig:.3e})")]
    PositivityFailure { term: usize, max_eig: f64 },
    #[error("generator at beta={beta} has a {kernel_dim}-dimensional kernel")]
    Irreducibility { beta: f64, kernel_dim: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
