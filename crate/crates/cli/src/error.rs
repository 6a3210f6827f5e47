use std::process::ExitCode;

use serde_json::json;

pub const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  usage error (bad flags, missing required value, empty grid)
  3  invalid config file or grid file
  4  I/O error
  5  malformed volume or sidecar
  6  invalid parameter
  7  segmentation failed (degenerate histogram)
  8  segmentation has no material

On failure a single JSON line {\"error\":{\"code\":..,\"kind\":..,\"message\":..}}
is written to stderr.";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] poreseg::Error),
}

impl CliError {
    pub fn kind(&self) -> (u8, &'static str) {
        use poreseg::Error as E;
        match self {
            CliError::Usage(_) => (2, "usage"),
            CliError::Config(_) => (3, "config"),
            CliError::Core(e) => match e {
                E::EmptyGrid | E::NotTwoDimensional(_) => (2, "usage"),
                E::GridFormat(_) => (3, "config"),
                E::Io { .. } | E::Report(_) => (4, "io"),
                E::MissingSidecar(_)
                | E::BadSidecar { .. }
                | E::UnsupportedDtype(_)
                | E::SizeMismatch { .. }
                | E::IntensityOutOfRange { .. }
                | E::NotBinary { .. } => (5, "format"),
                E::DegenerateHistogram => (7, "segmentation"),
                E::NoMaterial | E::EmptyComponent => (8, "no_material"),
                _ => (6, "invalid_parameter"),
            },
        }
    }

    /// Prints the human message and the JSON line, returning the exit code.
    pub fn report(&self) -> ExitCode {
        let (code, kind) = self.kind();
        log::error!("{self}");
        let line = json!({ "error": { "code": code, "kind": kind, "message": self.to_string() } });
        eprintln!("{line}");
        ExitCode::from(code)
    }
}

pub type CliResult<T> = Result<T, CliError>;
