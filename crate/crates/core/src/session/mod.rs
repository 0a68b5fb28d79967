//! Live operator sessions over TCP: wire protocol, gateway, logs and replay.

pub mod gateway;
pub mod log;
pub mod protocol;

pub use gateway::{serve, Gateway, ServeOptions, SessionOutcome};
pub use log::{read_log, replay_entries, replay_session, Direction, LogEntry, LoggedDecision, ReplaySource, SessionLog};
pub use protocol::{
    decode_grid, encode_grid, read_message, write_message, EgoWire, FrameMsg, GridWire, Message, ObstacleWire,
    QueryMsg, SessionResult, PROTOCOL_VERSION,
};
