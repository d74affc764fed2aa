use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("numerical failure at step {step} (t = {t}): solution is no longer finite")]
    Blowup { step: usize, t: f64 },
    #[error(transparent)]
    Solver(#[from] overset_core::solver1d::SolverError),
    #[error(transparent)]
    Geometry(#[from] overset_core::geometry::GeometryError),
    #[error(transparent)]
    Coupling(#[from] overset_core::coupling::CouplingError),
    #[error(transparent)]
    Diagnostics(#[from] overset_core::diagnostics::DiagError),
    #[error(transparent)]
    Linalg(#[from] overset_core::linalg::LinalgError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub(crate) fn from_solver(e: overset_core::solver1d::SolverError) -> Self {
        match e {
            overset_core::solver1d::SolverError::NonFinite { step, t } => CliError::Blowup { step, t },
            e => CliError::Solver(e),
        }
    }
}
