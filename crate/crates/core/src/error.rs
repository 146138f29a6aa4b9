use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid torus shape: {0}")]
    InvalidShape(String),

    #[error("kernel evaluated at coincident points (eta={eta}, eta'={eta_p}, dphi={dphi})")]
    CoincidentPoints { eta: f64, eta_p: f64, dphi: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),

    #[error("quadrature did not converge for {what} (estimate {value:e}, error {err_estimate:e})")]
    NonConvergence {
        what: String,
        value: f64,
        err_estimate: f64,
    },

    #[error("symmetric eigensolver did not converge after {iterations} iterations")]
    Eigen { iterations: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("singular hessian at critical point (det = {0:e})")]
    SingularHessian(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
