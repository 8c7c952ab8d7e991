//! Live session service: runs one engine in real time, takes drive input for
//! the human leader and streams world state over WebSocket.

pub mod protocol;
mod server;
mod session;

pub use protocol::{InboundMsg, OutboundMsg, Role, SensorView, VehicleView, PROTOCOL_VERSION};
pub use server::{serve, spawn, ServeConfig, ServiceHandle, DEFAULT_PORT};
pub use session::{Outbox, Session};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
    #[error("unknown policy '{0}'")]
    UnknownPolicy(String),
    #[error("scenario '{0}' has no human-driven leader")]
    NotHumanDriven(String),
    #[error("{0}")]
    Core(#[from] pursuit_core::Error),
    #[error("configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
}
