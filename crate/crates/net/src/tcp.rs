use std::io::BufReader;
use std::net::{Shutdown, TcpStream};
use std::sync::mpsc;

use hearthguard::meshbus::{read_frame, write_frame, Frame, MeshError, SharedBus};

use crate::server::{spawn_acceptor, Ctx, ServerHandle};
use crate::NetError;

/// Serves length-prefixed frames on `addr` (port 0 picks a free one).
pub fn serve_tcp(addr: &str, bus: SharedBus) -> Result<ServerHandle, NetError> {
    let (listener, local) = crate::bind(addr)?;
    log::info!("tcp bridge on {local}");
    Ok(spawn_acceptor(listener, "tcp", move |s, ctx| serve_peer(s, &bus, &ctx))?)
}

fn serve_peer(stream: TcpStream, bus: &SharedBus, ctx: &Ctx) {
    let Ok(write_half) = stream.try_clone() else { return };
    let (tx, rx) = mpsc::channel::<Frame>();
    let writer = std::thread::spawn(move || {
        let mut w = std::io::BufWriter::new(write_half);
        for frame in rx {
            if let Err(e) = write_frame(&mut w, &frame) {
                log::debug!("tcp write failed: {e}");
                break;
            }
        }
    });
    let client = bus.lock().expect("bus poisoned").attach_remote(tx.clone());
    let mut reader = BufReader::new(&stream);
    while !ctx.stopping() {
        match read_frame(&mut reader) {
            Ok(Some(frame)) => {
                let id = frame.id;
                if let Err(e) = bus.lock().expect("bus poisoned").handle(client, frame) {
                    let _ = tx.send(Frame::error_ack(id, e.to_string()));
                }
            }
            Ok(None) => break,
            Err(MeshError::Io(e)) => {
                log::debug!("tcp peer gone: {e}");
                break;
            }
            Err(e) => {
                log::warn!("closing tcp peer: {e}");
                let _ = tx.send(Frame::error_ack(0, e.to_string()));
                break;
            }
        }
    }
    bus.lock().expect("bus poisoned").detach(client);
    drop(tx);
    let _ = writer.join();
    let _ = stream.shutdown(Shutdown::Both);
}
