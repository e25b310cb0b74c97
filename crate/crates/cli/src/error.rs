use std::path::{Path, PathBuf};

use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] freeforms_core::Error),
}

impl CliError {
    pub fn read(path: &Path, source: std::io::Error) -> Self {
        CliError::Read { path: path.to_path_buf(), source }
    }

    pub fn write(path: &Path, source: std::io::Error) -> Self {
        CliError::Write { path: path.to_path_buf(), source }
    }

    /// 0 success, 1 output failure, 2 bad input, 3 solver failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Write { .. } => 1,
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }

    pub fn diagnostics(&self) -> Value {
        use freeforms_core::Error as E;
        let kind = match self {
            CliError::Validation(_) => "validation",
            CliError::Read { .. } => "read",
            CliError::Write { .. } => "write",
            CliError::Core(e) => match e {
                E::InvalidInput(_) => "invalid_input",
                E::Domain(_) => "domain",
                E::NonConvergence { .. } => "non_convergence",
                E::RootTracking { .. } => "root_tracking",
                E::NotAdmissible => "not_admissible",
                E::RatioDegeneracy(..) => "ratio_degeneracy",
                E::LambdaIdenticallyZero => "lambda_identically_zero",
            },
        };
        let mut out = json!({ "error": kind, "message": self.to_string(), "exit_code": self.exit_code() });
        match self {
            CliError::Core(E::NonConvergence { solver, iterations, residual }) => {
                out["solver"] = json!(solver);
                out["iterations"] = json!(iterations);
                out["residual"] = json!(residual);
            }
            CliError::Core(E::RootTracking { x, gap }) => {
                out["x"] = json!(x);
                out["gap"] = json!(gap);
            }
            _ => {}
        }
        out
    }
}
