//! Publish/subscribe fabric: topic filters, JSON frames with a
//! length-prefixed TCP encoding, retained messages, and a broker-side loss
//! model whose drop rate scales with the number of active devices.
//!
//! Topic namespace used by the runtime:
//!
//! | topic | payload |
//! |---|---|
//! | `home/{room}/{device}/{metric}` | sensor reading `{value, t}`; relays take `.../set` |
//! | `user/position` | `{t, x, y, z, residual}` |
//! | `user/movement` | `{t, hours}` |
//! | `user/game/score` | score report |
//! | `care/reminder` | `{voice, image, origin}` |
//! | `care/rules` | rule edit or full rule document |
//! | `care/mode` | `{mode, origin}` |
//! | `sys/device/{id}/active` | `true`/`false`, retained |
//! | `alert/{kind}` | alert with message ids |

mod broker;
mod bus;
mod frame;
mod loss;
mod topic;

pub use broker::{Broker, BrokerStats, ClientId, Delivery, PublishOutcome};
pub use bus::{Bus, SharedBus, Sink};
pub use frame::{
    decode_frame, encode_frame, read_frame, write_frame, Frame, FrameDecoder, Op, MAX_FRAME_BYTES, MAX_PAYLOAD_BYTES,
};
pub use loss::{keyed_unit, LossModel};
pub use topic::{matches, validate_filter, validate_topic};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid topic filter {0:?}: {1}")]
    InvalidFilter(String, &'static str),
    #[error("invalid topic {0:?}: {1}")]
    InvalidTopic(String, &'static str),
    #[error("client {0} is not connected")]
    NotConnected(ClientId),
    #[error("frame of {0} bytes exceeds the limit")]
    FrameTooLarge(usize),
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error("invalid loss model: {0}")]
    InvalidLossModel(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
