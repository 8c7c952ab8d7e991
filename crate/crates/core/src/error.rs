use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A state or command carried a NaN or infinite component.
    #[error("state integrity violated: {0}")]
    StateIntegrity(String),

    /// Beacon and photocell occupy the same point.
    #[error("degenerate geometry: beacon within {distance:e} m of the cell")]
    DegenerateGeometry { distance: f64 },

    #[error("shooter and target are already collocated")]
    Collocated,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid variety table: {0}")]
    InvalidVarietyTable(String),

    #[error("policy failure at tick {tick}: {source}")]
    Policy {
        tick: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o: {0}")]
    Io(String),

    #[error("malformed episode log at line {line}: {reason}")]
    MalformedLog { line: usize, reason: String },
}
