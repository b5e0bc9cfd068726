use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

const ACCEPT_POLL: Duration = Duration::from_millis(10);

/// A running server. Dropping it stops accepting and closes every peer.
#[derive(Debug)]
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    peers: Arc<Mutex<Vec<TcpStream>>>,
    accept: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn stop(mut self) {
        self.shutdown();
    }

    /// Blocks until the accept loop ends (i.e. forever unless stopped elsewhere).
    pub fn wait(mut self) {
        if let Some(t) = self.accept.take() {
            let _ = t.join();
        }
    }

    fn shutdown(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        for s in self.peers.lock().expect("peer list poisoned").drain(..) {
            let _ = s.shutdown(Shutdown::Both);
        }
        if let Some(t) = self.accept.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Shared view handed to connection threads.
#[derive(Clone)]
pub(crate) struct Ctx {
    pub stop: Arc<AtomicBool>,
    peers: Arc<Mutex<Vec<TcpStream>>>,
}

impl Ctx {
    pub fn stopping(&self) -> bool {
        self.stop.load(Ordering::SeqCst)
    }

    fn track(&self, s: &TcpStream) {
        if let Ok(c) = s.try_clone() {
            let mut peers = self.peers.lock().expect("peer list poisoned");
            peers.retain(|p| p.peer_addr().is_ok());
            peers.push(c);
        }
    }
}

/// Accepts on `listener` until stopped, running `serve` on its own thread per peer.
pub(crate) fn spawn_acceptor<F>(listener: TcpListener, name: &'static str, serve: F) -> std::io::Result<ServerHandle>
where
    F: Fn(TcpStream, Ctx) + Send + Sync + 'static,
{
    let addr = listener.local_addr()?;
    listener.set_nonblocking(true)?;
    let ctx = Ctx { stop: Arc::new(AtomicBool::new(false)), peers: Arc::new(Mutex::new(Vec::new())) };
    let serve = Arc::new(serve);
    let c = ctx.clone();
    let accept = std::thread::Builder::new().name(format!("{name}-accept")).spawn(move || {
        while !c.stopping() {
            match listener.accept() {
                Ok((stream, peer)) => {
                    log::debug!("{name}: peer {peer}");
                    if stream.set_nonblocking(false).is_err() {
                        continue;
                    }
                    let _ = stream.set_nodelay(true);
                    c.track(&stream);
                    let (serve, c2) = (serve.clone(), c.clone());
                    let spawned =
                        std::thread::Builder::new().name(format!("{name}-{peer}")).spawn(move || serve(stream, c2));
                    if let Err(e) = spawned {
                        log::warn!("{name}: cannot spawn peer thread: {e}");
                    }
                }
                Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => std::thread::sleep(ACCEPT_POLL),
                Err(e) => {
                    log::warn!("{name}: accept failed: {e}");
                    std::thread::sleep(ACCEPT_POLL);
                }
            }
        }
    })?;
    Ok(ServerHandle { addr, stop: ctx.stop, peers: ctx.peers, accept: Some(accept) })
}
