//! Error types shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building accounts, deriving budgets,
/// allocating them, or reading data from disk.
///
/// Variants are grouped by the phase that raises them: structural validation
/// (`Dimension`, `Balance`, `LabelMismatch`), numerical computation
/// (`NonProductive`), per-entity data problems (`DegenerateEntity`,
/// `DegenerateInput`, `InvalidPressure`, `InvalidInput`, `IncompleteUnit`),
/// configuration (`Config`), and file handling (`Parse`, `Checksum`, `Io`,
/// `Json`).
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix or vector does not have the shape implied by the region and
    /// sector lists. The message names the offending dimension.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Row balance `x_i = sum_j Z_ij + sum_r Y_ir` violated beyond tolerance.
    #[error("table balance violated: {0}")]
    Balance(String),

    /// A row or column label in a data file does not match the manifest.
    #[error("label mismatch: {0}")]
    LabelMismatch(String),

    /// The technology matrix does not admit a non-negative Leontief inverse
    /// (spectral radius at or above one, or a singular system).
    #[error("non-productive economy: {0}")]
    NonProductive(String),

    /// A single entity is missing or abusing a field another computation
    /// needs (zero population with a nonzero footprint, missing value added
    /// for an ability-to-pay share, ...).
    #[error("degenerate entity {entity}: {detail}")]
    DegenerateEntity { entity: String, detail: String },

    /// An input vector is degenerate as a whole (all-zero pressures, zero
    /// total population, empty input).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A pressure value that cannot be turned into a share (negative or
    /// non-finite).
    #[error("invalid pressure for {entity}: {value}")]
    InvalidPressure { entity: String, value: f64 },

    /// Any other out-of-domain numeric input (negative fraction, NaN, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Bad run configuration: unknown approach name, weights that do not sum
    /// to one, unsupported unit, missing backcast for a non-default year.
    #[error("configuration error: {0}")]
    Config(String),

    /// A watershed or ecoregion record lacks the data needed to evaluate it.
    #[error("incomplete local unit {unit}: {detail}")]
    IncompleteUnit { unit: String, detail: String },

    /// A data file failed to parse; carries file and line context.
    #[error("{file}:{line}: {detail}")]
    Parse { file: String, line: u64, detail: String },

    /// A file's digest does not match the manifest entry.
    #[error("checksum mismatch for {file}: manifest has {expected}, file hashes to {actual}")]
    Checksum { file: String, expected: String, actual: String },

    /// An underlying I/O failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },

    /// A JSON document failed to parse or serialise.
    #[error("json error in {file}: {source}")]
    Json { file: String, source: serde_json::Error },
}

impl Error {
    /// Convenience constructor for [`Error::Io`].
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Convenience constructor for [`Error::Parse`].
    pub fn parse(file: impl Into<String>, line: u64, detail: impl Into<String>) -> Self {
        Error::Parse { file: file.into(), line, detail: detail.into() }
    }
}
