use thiserror::Error;

/// Failures while loading or validating a scenario configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    /// Every violated invariant, one message per field.
    #[error("invalid configuration: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("{0}")]
    Geometry(String),
}

/// Failures of the conic solver on a beamforming subproblem.
#[derive(Debug, Error)]
pub enum SdpError {
    #[error("conic solver setup failed: {0}")]
    Setup(String),
    #[error("conic solver did not converge (status {status}, primal residual {r_prim:.3e}, dual residual {r_dual:.3e})")]
    NotConverged {
        status: String,
        r_prim: f64,
        r_dual: f64,
    },
    /// The penalized inner problem always has a feasible point, so this
    /// indicates a modeling bug rather than unreachable SINR targets.
    #[error("inner subproblem reported infeasible (status {0})")]
    UnexpectedInfeasible(String),
}
