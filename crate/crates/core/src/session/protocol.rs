//! Messages exchanged with the operator console.
//!
//! Each message is a JSON object with a `type` field, sent as a 4-byte
//! big-endian length followed by that many bytes of UTF-8 JSON. Risk grids
//! travel as base64 of the binary grid format.

use std::io::{ErrorKind, Read, Write};

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::geometry::{EgoState, ObstacleState};
use crate::licom::RiskGrid;
use crate::scenario::{TrialOutcome, TrialResult};
use crate::vqa::OperatorAnswer;
use crate::{Error, Result};

pub const PROTOCOL_VERSION: u32 = 1;
/// Largest accepted message body, bytes.
pub const MAX_MESSAGE_LEN: u32 = 16 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoWire {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub speed: f64,
}

impl From<&EgoState> for EgoWire {
    fn from(e: &EgoState) -> Self {
        Self { x: e.pose.x, y: e.pose.y, theta: e.pose.theta, speed: e.speed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleWire {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub vx: f64,
    pub vy: f64,
    pub half_length: f64,
    pub half_width: f64,
}

impl From<&ObstacleState> for ObstacleWire {
    fn from(o: &ObstacleState) -> Self {
        Self {
            id: o.id,
            x: o.pose.x,
            y: o.pose.y,
            theta: o.pose.theta,
            vx: o.velocity.0,
            vy: o.velocity.1,
            half_length: o.extents.half_length,
            half_width: o.extents.half_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMsg {
    pub index: u64,
    /// Simulation time, seconds.
    pub time: f64,
    pub ego: EgoWire,
    pub obstacles: Vec<ObstacleWire>,
    /// Upcoming reference poses `[x, y, theta]`.
    pub trajectory: Vec<[f64; 3]>,
    /// Base64 grid payload, present while a query is open.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
}

/// A risk grid for one assumed latency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridWire {
    pub tau: f64,
    pub grid: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMsg {
    pub id: u64,
    pub text: String,
    pub options: Vec<String>,
    /// Simulation time at which the question was put, seconds.
    pub presented_at: f64,
    #[serde(default)]
    pub allow_waypoint: bool,
    /// What-if grids for a range of latencies.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub grids: Vec<GridWire>,
    /// Latency the session expects, the console's default selection.
    #[serde(default)]
    pub expected_latency: f64,
}

/// Summary sent when the session ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub outcome: TrialOutcome,
    pub collided: bool,
    pub end_time: f64,
    pub queries: usize,
}

impl From<&TrialResult> for SessionResult {
    fn from(r: &TrialResult) -> Self {
        Self { outcome: r.outcome, collided: r.collided, end_time: r.end_time, queries: r.decisions.len() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Hello { version: u32 },
    Frame(FrameMsg),
    Query(QueryMsg),
    /// Answer times are simulation seconds: the console adds its measured
    /// reaction time, scaled by the session pace, to `presented_at`.
    Answer(OperatorAnswer),
    Applied { id: u64, apply_at: f64 },
    Error { code: String, detail: String },
    End { result: SessionResult },
}

impl Message {
    /// Frames may be dropped under backpressure; nothing else may.
    pub fn is_droppable(&self) -> bool {
        matches!(self, Message::Frame(_))
    }

    pub fn error(code: &str, detail: impl Into<String>) -> Self {
        Message::Error { code: code.to_string(), detail: detail.into() }
    }
}

pub fn encode_grid(grid: &RiskGrid) -> String {
    base64::engine::general_purpose::STANDARD.encode(grid.to_wire())
}

pub fn decode_grid(text: &str) -> Result<RiskGrid> {
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(text)
        .map_err(|e| Error::Malformed(format!("grid base64: {e}")))?;
    RiskGrid::from_wire(&bytes)
}

pub fn write_message<W: Write>(out: &mut W, msg: &Message) -> Result<()> {
    let body = serde_json::to_vec(msg)?;
    let len = u32::try_from(body.len())
        .ok()
        .filter(|l| *l <= MAX_MESSAGE_LEN)
        .ok_or_else(|| Error::Protocol(format!("message of {} bytes is too large", body.len())))?;
    out.write_all(&len.to_be_bytes())?;
    out.write_all(&body)?;
    out.flush()?;
    Ok(())
}

/// Reads one message. Returns `None` on a clean end of stream.
pub fn read_message<R: Read>(input: &mut R) -> Result<Option<Message>> {
    let mut len = [0u8; 4];
    match input.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let len = u32::from_be_bytes(len);
    if len > MAX_MESSAGE_LEN {
        return Err(Error::Protocol(format!("message length {len} exceeds limit")));
    }
    let mut body = vec![0u8; len as usize];
    input.read_exact(&mut body)?;
    serde_json::from_slice(&body).map(Some).map_err(|e| Error::Protocol(format!("bad message: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::licom::GridSpec;

    #[test]
    fn messages_round_trip_through_framing() {
        let spec = GridSpec::new((0.0, 0.0), 0.5, 3, 2).unwrap();
        let grid = RiskGrid::new(spec, vec![0.0, 0.1, 0.5, 1.0, 0.3, 0.29], 0.4, 1.0).unwrap();
        let msgs = vec![
            Message::Hello { version: PROTOCOL_VERSION },
            Message::Query(QueryMsg {
                id: 3,
                text: "Go?".into(),
                options: vec!["go".into(), "wait".into()],
                presented_at: 5.12,
                allow_waypoint: false,
                grids: vec![GridWire { tau: 0.5, grid: encode_grid(&grid) }],
                expected_latency: 0.3,
            }),
            Message::Answer(OperatorAnswer::option(3, "wait", 5.37)),
            Message::Applied { id: 3, apply_at: 5.42 },
            Message::error("stale_answer", "query 2 is closed"),
        ];
        let mut buf = Vec::new();
        for m in &msgs {
            write_message(&mut buf, m).unwrap();
        }
        let mut cursor = std::io::Cursor::new(buf);
        for m in &msgs {
            assert_eq!(read_message(&mut cursor).unwrap().as_ref(), Some(m));
        }
        assert_eq!(read_message(&mut cursor).unwrap(), None);
        let back = decode_grid(&encode_grid(&grid)).unwrap();
        assert_eq!(back.to_wire(), grid.to_wire());
    }

    #[test]
    fn answer_uses_id_field() {
        let text = serde_json::to_string(&Message::Answer(OperatorAnswer::option(7, "go", 1.5))).unwrap();
        assert_eq!(text, r#"{"type":"answer","id":7,"option":"go","answered_at":1.5}"#);
    }

    #[test]
    fn oversized_length_rejected() {
        let mut bytes = (MAX_MESSAGE_LEN + 1).to_be_bytes().to_vec();
        bytes.extend_from_slice(b"{}");
        assert!(read_message(&mut std::io::Cursor::new(bytes)).is_err());
    }
}
