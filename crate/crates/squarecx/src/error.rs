use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid complex: {0}")]
    Validation(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("vertical/horizontal tags missing on edge `{0}`")]
    MissingTags(String),
    #[error("complex is not a barycentric subdivision: {0}")]
    NotSubdivided(String),
    #[error("tip-length map is not a bijection onto 1..=k: {0}")]
    NonBijectiveMap(String),
    #[error("complex is not nonpositively curved at vertex `{0}`")]
    NotNpc(String),
    #[error("complex is not a complete square complex: {0}")]
    NotCsc(String),
    #[error("complex has {0} vertices, expected one")]
    NotOneVertex(usize),
    #[error("orientation is not admissible at square {0}")]
    NotAdmissible(usize),
    #[error("cell budget of {0} exceeded")]
    ResourceLimit(usize),
    #[error("path lift leaves the built ball at step {0}")]
    LeavesBall(usize),
    #[error("vertices `{0}` and `{1}` lie in different fibers")]
    DifferentFibers(String, String),
    #[error("filter depth {depth} exceeds what the ball certifies ({available})")]
    DepthExceedsBall { depth: usize, available: usize },
    #[error("query touches the unresolved boundary: {0}")]
    BoundaryUnsafe(String),
    #[error("Θ class {0} carries no label")]
    UnlabeledClass(usize),
    #[error("labeling has no independence relation")]
    MissingIndependence,
    #[error("labeling is not nice at vertex `{0}`")]
    NotNice(String),
    #[error("row words M_{n}({k}) and M_{n}({m}) coincide")]
    WordsEqual { n: usize, k: usize, m: usize },
    #[error("no tile for corner (west={west}, south={south})")]
    TranscriptionIncomplete { west: String, south: String },
    #[error("palettes overlap on color `{0}`")]
    PaletteOverlap(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse { line: e.line(), msg: e.to_string() }
    }
}
