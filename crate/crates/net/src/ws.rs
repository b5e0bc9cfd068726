use std::io::ErrorKind;
use std::net::TcpStream;
use std::sync::mpsc::{self, TryRecvError};
use std::time::Duration;

use hearthguard::meshbus::{decode_frame, encode_frame, Frame, SharedBus};
use tungstenite::{Error as WsError, Message, WebSocket};

use crate::server::{spawn_acceptor, Ctx, ServerHandle};
use crate::NetError;

/// How long a read waits before outbound frames get a turn.
const POLL: Duration = Duration::from_millis(5);

/// Serves one-JSON-frame-per-text-message WebSocket peers on `addr`.
pub fn serve_websocket(addr: &str, bus: SharedBus) -> Result<ServerHandle, NetError> {
    let (listener, local) = crate::bind(addr)?;
    log::info!("websocket bridge on {local}");
    Ok(spawn_acceptor(listener, "ws", move |s, ctx| serve_peer(s, &bus, &ctx))?)
}

fn send(ws: &mut WebSocket<TcpStream>, frame: &Frame) -> Result<(), WsError> {
    let body = encode_frame(frame)
        .unwrap_or_else(|e| serde_json::to_vec(&Frame::error_ack(frame.id, e.to_string())).expect("ack serializes"));
    ws.send(Message::text(String::from_utf8(body).expect("json is utf-8")))
}

enum Inbound {
    Frame(Frame),
    Malformed(String),
    Idle,
    Closed,
}

fn poll(ws: &mut WebSocket<TcpStream>) -> Inbound {
    match ws.read() {
        Ok(Message::Text(t)) => match decode_frame(t.as_bytes()) {
            Ok(f) => Inbound::Frame(f),
            Err(e) => Inbound::Malformed(e.to_string()),
        },
        Ok(Message::Binary(_)) => Inbound::Malformed("binary message; frames are JSON text".into()),
        Ok(Message::Close(_)) => Inbound::Closed,
        Ok(_) => Inbound::Idle,
        Err(WsError::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => Inbound::Idle,
        Err(e) => {
            log::debug!("websocket peer gone: {e}");
            Inbound::Closed
        }
    }
}

fn serve_peer(stream: TcpStream, bus: &SharedBus, ctx: &Ctx) {
    let mut ws = match tungstenite::accept(stream) {
        Ok(ws) => ws,
        Err(e) => {
            log::warn!("websocket handshake failed: {e}");
            return;
        }
    };
    if ws.get_mut().set_read_timeout(Some(POLL)).is_err() {
        return;
    }
    let (tx, rx) = mpsc::channel::<Frame>();
    let client = bus.lock().expect("bus poisoned").attach_remote(tx);
    let mut open = true;
    while open && !ctx.stopping() {
        match poll(&mut ws) {
            Inbound::Frame(frame) => {
                let id = frame.id;
                if let Err(e) = bus.lock().expect("bus poisoned").handle(client, frame) {
                    open = send(&mut ws, &Frame::error_ack(id, e.to_string())).is_ok();
                }
            }
            Inbound::Malformed(msg) => {
                log::warn!("closing websocket peer: {msg}");
                let _ = send(&mut ws, &Frame::error_ack(0, msg));
                let _ = ws.close(None);
                let _ = ws.flush();
                open = false;
            }
            Inbound::Closed => open = false,
            Inbound::Idle => {}
        }
        loop {
            match rx.try_recv() {
                Ok(frame) if open => open = send(&mut ws, &frame).is_ok(),
                Ok(_) => {}
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => {
                    open = false;
                    break;
                }
            }
        }
    }
    bus.lock().expect("bus poisoned").detach(client);
}
