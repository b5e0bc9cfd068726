use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::topic::{validate_filter, validate_topic};
use super::MeshError;

/// Largest serialized payload a frame may carry.
pub const MAX_PAYLOAD_BYTES: usize = 1 << 20;
/// Largest accepted length prefix: payload limit plus room for the envelope.
pub const MAX_FRAME_BYTES: usize = MAX_PAYLOAD_BYTES + 64 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Connect,
    Pub,
    Sub,
    Unsub,
    Ping,
    Pong,
    Ack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frame {
    pub op: Op,
    /// Publish topic, or the filter for sub/unsub.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
    #[serde(default)]
    pub payload: Value,
    #[serde(default)]
    pub retain: bool,
    #[serde(default)]
    pub id: u32,
}

impl Frame {
    fn bare(op: Op) -> Self {
        Frame { op, topic: None, payload: Value::Null, retain: false, id: 0 }
    }

    pub fn connect(client: &str) -> Self {
        Frame { payload: serde_json::json!({ "client": client }), ..Frame::bare(Op::Connect) }
    }

    pub fn publish(topic: impl Into<String>, payload: Value) -> Self {
        Frame { topic: Some(topic.into()), payload, ..Frame::bare(Op::Pub) }
    }

    pub fn retained(topic: impl Into<String>, payload: Value) -> Self {
        Frame { retain: true, ..Frame::publish(topic, payload) }
    }

    pub fn subscribe(filter: impl Into<String>) -> Self {
        Frame { topic: Some(filter.into()), ..Frame::bare(Op::Sub) }
    }

    pub fn unsubscribe(filter: impl Into<String>) -> Self {
        Frame { topic: Some(filter.into()), ..Frame::bare(Op::Unsub) }
    }

    pub fn ping() -> Self {
        Frame::bare(Op::Ping)
    }

    pub fn pong(id: u32) -> Self {
        Frame { id, ..Frame::bare(Op::Pong) }
    }

    pub fn ack(id: u32) -> Self {
        Frame { id, ..Frame::bare(Op::Ack) }
    }

    pub fn error_ack(id: u32, message: impl Into<String>) -> Self {
        Frame { payload: serde_json::json!({ "error": message.into() }), ..Frame::ack(id) }
    }

    pub fn with_id(mut self, id: u32) -> Self {
        self.id = id;
        self
    }

    pub fn topic(&self) -> &str {
        self.topic.as_deref().unwrap_or("")
    }

    /// Checks the per-op field requirements and the payload size.
    pub fn validate(&self) -> Result<(), MeshError> {
        match self.op {
            Op::Pub => match &self.topic {
                Some(t) => validate_topic(t)?,
                None => return Err(MeshError::MalformedFrame("pub without topic".into())),
            },
            Op::Sub | Op::Unsub => match &self.topic {
                Some(f) => validate_filter(f)?,
                None => return Err(MeshError::MalformedFrame("sub/unsub without filter".into())),
            },
            _ => {}
        }
        let size = serde_json::to_vec(&self.payload).map(|v| v.len()).unwrap_or(0);
        if size > MAX_PAYLOAD_BYTES {
            return Err(MeshError::FrameTooLarge(size));
        }
        Ok(())
    }
}

/// UTF-8 JSON body of a frame, validated. No length prefix.
pub fn encode_frame(frame: &Frame) -> Result<Vec<u8>, MeshError> {
    frame.validate()?;
    serde_json::to_vec(frame).map_err(|e| MeshError::MalformedFrame(e.to_string()))
}

pub fn decode_frame(bytes: &[u8]) -> Result<Frame, MeshError> {
    if bytes.len() > MAX_FRAME_BYTES {
        return Err(MeshError::FrameTooLarge(bytes.len()));
    }
    let text = std::str::from_utf8(bytes).map_err(|e| MeshError::MalformedFrame(e.to_string()))?;
    let frame: Frame = serde_json::from_str(text).map_err(|e| MeshError::MalformedFrame(e.to_string()))?;
    frame.validate()?;
    Ok(frame)
}

/// Writes `len: u32 BE` followed by the JSON body.
pub fn write_frame<W: Write>(out: &mut W, frame: &Frame) -> Result<(), MeshError> {
    let body = encode_frame(frame)?;
    out.write_all(&(body.len() as u32).to_be_bytes())?;
    out.write_all(&body)?;
    out.flush()?;
    Ok(())
}

/// Blocking read of one length-prefixed frame; `Ok(None)` on clean EOF
/// before the prefix.
pub fn read_frame<R: Read>(input: &mut R) -> Result<Option<Frame>, MeshError> {
    let mut prefix = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match input.read(&mut prefix[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(MeshError::MalformedFrame("truncated length prefix".into())),
            Ok(n) => got += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_be_bytes(prefix) as usize;
    if len > MAX_FRAME_BYTES {
        return Err(MeshError::FrameTooLarge(len));
    }
    let mut body = vec![0u8; len];
    input.read_exact(&mut body).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => MeshError::MalformedFrame("truncated frame body".into()),
        _ => MeshError::Io(e),
    })?;
    decode_frame(&body).map(Some)
}

/// Incremental decoder for a byte stream of length-prefixed frames.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }

    /// Next complete frame, if any. An oversized prefix is reported as soon
    /// as it is seen rather than after buffering the body.
    pub fn next_frame(&mut self) -> Result<Option<Frame>, MeshError> {
        if self.buf.len() < 4 {
            return Ok(None);
        }
        let len = u32::from_be_bytes([self.buf[0], self.buf[1], self.buf[2], self.buf[3]]) as usize;
        if len > MAX_FRAME_BYTES {
            return Err(MeshError::FrameTooLarge(len));
        }
        if self.buf.len() < 4 + len {
            return Ok(None);
        }
        let body: Vec<u8> = self.buf.drain(..4 + len).skip(4).collect();
        decode_frame(&body).map(Some)
    }
}
