//! Frame transports: a shared directory, a TCP stream, and an in-memory pair.

use std::fs;
use std::io::{self, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use log::debug;

use crate::error::{Error, Result};
use crate::rdmpf::Role;
use crate::wire::{decode_frame, encode_frame, read_frame, Frame};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
const POLL_INTERVAL: Duration = Duration::from_millis(10);

/// A bidirectional, ordered, frame-at-a-time link to the peer.
pub trait Channel {
    fn send(&mut self, frame: &Frame) -> Result<()>;
    fn recv(&mut self) -> Result<Frame>;
}

impl<C: Channel + ?Sized> Channel for &mut C {
    fn send(&mut self, frame: &Frame) -> Result<()> {
        (**self).send(frame)
    }

    fn recv(&mut self) -> Result<Frame> {
        (**self).recv()
    }
}

impl<C: Channel + ?Sized> Channel for Box<C> {
    fn send(&mut self, frame: &Frame) -> Result<()> {
        (**self).send(frame)
    }

    fn recv(&mut self) -> Result<Frame> {
        (**self).recv()
    }
}

fn role_name(role: Role) -> &'static str {
    match role {
        Role::Alice => "alice",
        Role::Bob => "bob",
    }
}

/// Exchanges frames as files named `<role>.<seq>.frame` in a shared
/// directory. Each file is written under a temporary name and renamed into
/// place, so a reader never sees a partial frame.
#[derive(Debug)]
pub struct FileChannel {
    dir: PathBuf,
    role: Role,
    timeout: Duration,
    sent: u64,
    received: u64,
}

impl FileChannel {
    /// Opens the directory, creating it if needed, and removes frames this
    /// role left behind in an earlier run.
    pub fn new(dir: &Path, role: Role, timeout: Duration) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let prefix = format!("{}.", role_name(role));
        for entry in fs::read_dir(dir)? {
            let entry = entry?;
            let name = entry.file_name();
            let name = name.to_string_lossy();
            if name.starts_with(&prefix) && name.ends_with(".frame") {
                fs::remove_file(entry.path())?;
            }
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            role,
            timeout,
            sent: 0,
            received: 0,
        })
    }

    fn path(&self, role: Role, seq: u64) -> PathBuf {
        self.dir.join(format!("{}.{seq}.frame", role_name(role)))
    }
}

impl Channel for FileChannel {
    fn send(&mut self, frame: &Frame) -> Result<()> {
        let bytes = encode_frame(frame.kind, &frame.payload)?;
        let target = self.path(self.role, self.sent);
        let tmp = target.with_extension("tmp");
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, &target)?;
        debug!("wrote {}", target.display());
        self.sent += 1;
        Ok(())
    }

    fn recv(&mut self) -> Result<Frame> {
        let path = self.path(self.role.peer(), self.received);
        let deadline = Instant::now() + self.timeout;
        loop {
            match fs::read(&path) {
                Ok(bytes) => {
                    debug!("read {}", path.display());
                    self.received += 1;
                    return decode_frame(&bytes);
                }
                Err(e) if e.kind() == io::ErrorKind::NotFound => {
                    if Instant::now() >= deadline {
                        return Err(Error::Timeout(format!("no {} after {:?}", path.display(), self.timeout)));
                    }
                    thread::sleep(POLL_INTERVAL);
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
}

/// Length-delimited frames over one TCP connection.
#[derive(Debug)]
pub struct TcpChannel {
    stream: TcpStream,
    timeout: Duration,
}

fn timeout_error(e: io::Error, what: &str, timeout: Duration) -> Error {
    match e.kind() {
        io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => Error::Timeout(format!("{what} after {timeout:?}")),
        _ => Error::Transport(e),
    }
}

impl TcpChannel {
    pub fn from_stream(stream: TcpStream, timeout: Duration) -> Result<Self> {
        stream.set_nonblocking(false)?;
        stream.set_read_timeout(Some(timeout))?;
        stream.set_write_timeout(Some(timeout))?;
        stream.set_nodelay(true)?;
        Ok(Self { stream, timeout })
    }

    /// Binds `addr` and waits for one peer.
    pub fn listen<A: ToSocketAddrs>(addr: A, timeout: Duration) -> Result<Self> {
        let listener = TcpListener::bind(addr)?;
        Self::accept(&listener, timeout)
    }

    /// Waits for one connection on an already bound listener.
    pub fn accept(listener: &TcpListener, timeout: Duration) -> Result<Self> {
        listener.set_nonblocking(true)?;
        let deadline = Instant::now() + timeout;
        loop {
            match listener.accept() {
                Ok((stream, peer)) => {
                    debug!("accepted {peer}");
                    return Self::from_stream(stream, timeout);
                }
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                    if Instant::now() >= deadline {
                        return Err(Error::Timeout(format!("no peer connected after {timeout:?}")));
                    }
                    thread::sleep(POLL_INTERVAL);
                }
                Err(e) => return Err(e.into()),
            }
        }
    }

    /// Connects to `addr`, retrying until the peer is listening or the
    /// timeout expires.
    pub fn connect<A: ToSocketAddrs>(addr: A, timeout: Duration) -> Result<Self> {
        let addrs: Vec<SocketAddr> = addr.to_socket_addrs()?.collect();
        if addrs.is_empty() {
            return Err(Error::param("address resolved to nothing"));
        }
        let deadline = Instant::now() + timeout;
        loop {
            let mut last = None;
            for a in &addrs {
                match TcpStream::connect_timeout(a, POLL_INTERVAL.max(Duration::from_millis(200))) {
                    Ok(stream) => return Self::from_stream(stream, timeout),
                    Err(e) => last = Some(e),
                }
            }
            if Instant::now() >= deadline {
                let detail = last.map(|e| e.to_string()).unwrap_or_default();
                return Err(Error::Timeout(format!("could not connect after {timeout:?}: {detail}")));
            }
            thread::sleep(POLL_INTERVAL * 5);
        }
    }
}

impl Channel for TcpChannel {
    fn send(&mut self, frame: &Frame) -> Result<()> {
        let bytes = encode_frame(frame.kind, &frame.payload)?;
        self.stream
            .write_all(&bytes)
            .and_then(|_| self.stream.flush())
            .map_err(|e| timeout_error(e, "send", self.timeout))
    }

    fn recv(&mut self) -> Result<Frame> {
        match read_frame(&mut self.stream) {
            Err(Error::Transport(e)) => Err(timeout_error(e, "no frame from peer", self.timeout)),
            other => other,
        }
    }
}

/// In-process channel pair, for tests and single-process demonstrations.
#[derive(Debug)]
pub struct MemoryChannel {
    tx: mpsc::Sender<Vec<u8>>,
    rx: mpsc::Receiver<Vec<u8>>,
    timeout: Duration,
}

impl MemoryChannel {
    pub fn pair(timeout: Duration) -> (Self, Self) {
        let (tx_a, rx_b) = mpsc::channel();
        let (tx_b, rx_a) = mpsc::channel();
        (
            Self { tx: tx_a, rx: rx_a, timeout },
            Self { tx: tx_b, rx: rx_b, timeout },
        )
    }
}

impl Channel for MemoryChannel {
    fn send(&mut self, frame: &Frame) -> Result<()> {
        let bytes = encode_frame(frame.kind, &frame.payload)?;
        self.tx
            .send(bytes)
            .map_err(|_| Error::Transport(io::Error::new(io::ErrorKind::BrokenPipe, "peer hung up")))
    }

    fn recv(&mut self) -> Result<Frame> {
        match self.rx.recv_timeout(self.timeout) {
            Ok(bytes) => decode_frame(&bytes),
            Err(mpsc::RecvTimeoutError::Timeout) => Err(Error::Timeout(format!("no frame after {:?}", self.timeout))),
            Err(mpsc::RecvTimeoutError::Disconnected) => Err(Error::Transport(io::Error::new(
                io::ErrorKind::UnexpectedEof,
                "peer hung up",
            ))),
        }
    }
}
