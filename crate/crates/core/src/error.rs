use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate pump: spectral amplitude vanishes on the quadrature window")]
    DegeneratePump,

    #[error("degenerate state: matrix is identically zero")]
    DegenerateState,

    #[error("resolution error: requested {axis} resolution {requested:e} Hz is finer than grid step {step:e} Hz")]
    Resolution {
        axis: &'static str,
        requested: f64,
        step: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Malformed numeric file. `row` and `column` are 1-based; `column` is
    /// absent when the problem concerns the whole row.
    #[error("{}", fmt_parse(path, *row, *column, message))]
    Parse {
        path: Option<PathBuf>,
        row: usize,
        column: Option<usize>,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn fmt_parse(path: &Option<PathBuf>, row: usize, column: Option<usize>, message: &str) -> String {
    let mut out = String::new();
    if let Some(p) = path {
        out.push_str(&format!("{}: ", p.display()));
    }
    out.push_str(&format!("row {row}"));
    if let Some(c) = column {
        out.push_str(&format!(", column {c}"));
    }
    out.push_str(": ");
    out.push_str(message);
    out
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a file path to a parse error produced from an in-memory reader.
    pub(crate) fn with_path(self, p: impl Into<PathBuf>) -> Self {
        match self {
            Error::Parse {
                row,
                column,
                message,
                ..
            } => Error::Parse {
                path: Some(p.into()),
                row,
                column,
                message,
            },
            other => other,
        }
    }
}
