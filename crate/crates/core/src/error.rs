use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("destination {0} is fully covered by obstacles or lies outside the walkable area")]
    UnreachableDestination(usize),

    #[error("no walkable path connects the origin to destination {0}")]
    DisconnectedScenario(usize),

    #[error("run {run}: camera cutout is empty at t = {t} s")]
    EmptyCutout { run: usize, t: f64 },

    #[error("run {run}: no logged frame near t = {t} s")]
    MissingFrame { run: usize, t: f64 },

    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty dataset: {0}")]
    EmptyDataset(&'static str),

    #[error("triple is not on the 100-simplex: {0:?}")]
    OffSimplex([f64; 3]),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
