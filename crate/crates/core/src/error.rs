use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("tensor too large: dim {dim}, order {order} (caps are dim <= 16, order <= 6)")]
    TensorTooLarge { dim: usize, order: usize },

    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: String, reason: String },

    #[error("covariance is singular (smallest eigenvalue {min_eigenvalue:e})")]
    SingularCovariance { min_eigenvalue: f64 },

    #[error(
        "corollary hypothesis violated: truncated difference second moment is not \
         positive-definite (smallest eigenvalue {min_eigenvalue:e})"
    )]
    CorollaryHypothesisViolated { min_eigenvalue: f64 },

    #[error("convolution produced {atoms} atoms, above the cap of {cap}")]
    AtomExplosion { atoms: usize, cap: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("quadrature did not converge: achieved error bound {achieved:e}, target {target:e}")]
    QuadratureNonConvergence { achieved: f64, target: f64 },

    #[error("psi2 outside its domain: eta_p(t) = {eta:e} < beta^2 = {beta_sq:e}")]
    PsiDomain { eta: f64, beta_sq: f64 },

    #[error("estimator route `{route}` incompatible with spec: {reason}")]
    IncompatibleRoute { route: String, reason: String },

    #[error("spec file error at {location}: {reason}")]
    SpecFile { location: String, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
