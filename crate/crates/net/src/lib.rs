//! Network transports for the in-process bus.
//!
//! Both servers speak the same [`Frame`](hearthguard::meshbus::Frame)
//! protocol: over TCP each frame is a 4-byte big-endian length followed by
//! that many bytes of JSON; over WebSocket each frame is one JSON text
//! message. A peer must send `connect` before anything else. A frame that
//! cannot be decoded is answered with an `ack` carrying an `error` payload
//! and the connection is closed; a well-formed frame the broker rejects
//! (bad topic, not connected yet) gets the same error ack but the
//! connection stays up.
//!
//! Threads, not async: one accept thread per server, one reader plus one
//! writer per TCP peer, one polling thread per WebSocket peer.

mod client;
mod server;
mod tcp;
mod ws;

use std::net::SocketAddr;

use thiserror::Error;

pub use client::TcpClient;
pub use server::ServerHandle;
pub use tcp::serve_tcp;
pub use ws::serve_websocket;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Mesh(#[from] hearthguard::meshbus::MeshError),
    #[error("broker refused: {0}")]
    Refused(String),
    #[error("timed out waiting for {0}")]
    Timeout(&'static str),
    #[error("connection closed")]
    Closed,
}

fn bind(addr: &str) -> Result<(std::net::TcpListener, SocketAddr), NetError> {
    let listener =
        std::net::TcpListener::bind(addr).map_err(|source| NetError::Bind { addr: addr.to_string(), source })?;
    let local = listener.local_addr()?;
    Ok((listener, local))
}
