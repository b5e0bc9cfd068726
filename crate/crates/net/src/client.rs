use std::collections::VecDeque;
use std::io::BufWriter;
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver};
use std::time::{Duration, Instant};

use hearthguard::meshbus::{read_frame, write_frame, Frame, Op};

use crate::NetError;

/// Blocking TCP bus client. A background thread reads frames; requests
/// (`connect`, `sub`, `unsub`, `ping`) wait for their matching ack.
pub struct TcpClient {
    stream: TcpStream,
    writer: BufWriter<TcpStream>,
    inbox: Receiver<Frame>,
    pending: VecDeque<Frame>,
    next_id: u32,
    timeout: Duration,
}

impl TcpClient {
    pub fn connect(addr: impl ToSocketAddrs, name: &str, timeout: Duration) -> Result<Self, NetError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let mut reader = stream.try_clone()?;
        let (tx, inbox) = mpsc::channel();
        std::thread::spawn(move || {
            while let Ok(Some(f)) = read_frame(&mut reader) {
                if tx.send(f).is_err() {
                    break;
                }
            }
        });
        let writer = BufWriter::new(stream.try_clone()?);
        let mut c = TcpClient { stream, writer, inbox, pending: VecDeque::new(), next_id: 1, timeout };
        c.request(Frame::connect(name))?;
        Ok(c)
    }

    fn send(&mut self, frame: Frame) -> Result<u32, NetError> {
        let id = self.next_id;
        self.next_id = self.next_id.wrapping_add(1).max(1);
        write_frame(&mut self.writer, &frame.with_id(id))?;
        Ok(id)
    }

    /// Sends a frame and waits for the ack (or pong) carrying its id.
    pub fn request(&mut self, frame: Frame) -> Result<Frame, NetError> {
        let id = self.send(frame)?;
        let deadline = Instant::now() + self.timeout;
        loop {
            let f = self.next_raw(deadline).ok_or(NetError::Timeout("ack"))?;
            if matches!(f.op, Op::Ack | Op::Pong) && f.id == id {
                if let Some(err) = f.payload.get("error").and_then(|e| e.as_str()) {
                    return Err(NetError::Refused(err.to_string()));
                }
                return Ok(f);
            }
            self.pending.push_back(f);
        }
    }

    pub fn publish(&mut self, frame: Frame) -> Result<(), NetError> {
        self.send(frame).map(drop)
    }

    pub fn subscribe(&mut self, filter: &str) -> Result<(), NetError> {
        self.request(Frame::subscribe(filter)).map(drop)
    }

    pub fn unsubscribe(&mut self, filter: &str) -> Result<(), NetError> {
        self.request(Frame::unsubscribe(filter)).map(drop)
    }

    pub fn ping(&mut self) -> Result<(), NetError> {
        self.request(Frame::ping()).map(drop)
    }

    fn next_raw(&mut self, deadline: Instant) -> Option<Frame> {
        let left = deadline.saturating_duration_since(Instant::now());
        self.inbox.recv_timeout(left).ok()
    }

    /// Next frame from the broker, waiting up to `wait`.
    pub fn recv(&mut self, wait: Duration) -> Option<Frame> {
        self.pending.pop_front().or_else(|| self.next_raw(Instant::now() + wait))
    }
}

impl Drop for TcpClient {
    fn drop(&mut self) {
        let _ = self.stream.shutdown(Shutdown::Both);
    }
}
