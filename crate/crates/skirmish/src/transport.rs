//! Stream transports (TCP and Unix domain sockets) and length-prefixed
//! message framing over them.

use std::fmt;
use std::io::{self, Read, Write};
use std::net::{Shutdown, TcpListener, TcpStream};
use std::os::unix::net::{UnixListener, UnixStream};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use skirmish_core::codec::{self, DecodeError, EncodeError, Message, MAX_PAYLOAD};
use thiserror::Error;

/// Where a server listens or a client connects.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Endpoint {
    /// `host:port`
    Tcp(String),
    /// Filesystem path of a Unix domain socket.
    Pipe(PathBuf),
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Tcp(addr) => write!(f, "tcp:{addr}"),
            Endpoint::Pipe(path) => write!(f, "pipe:{}", path.display()),
        }
    }
}

impl FromStr for Endpoint {
    type Err = String;

    /// Accepts `pipe:<path>`, `tcp:<host:port>` or a bare `host:port`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(path) = s.strip_prefix("pipe:") {
            return Ok(Endpoint::Pipe(path.into()));
        }
        let addr = s.strip_prefix("tcp:").unwrap_or(s);
        if addr.rsplit_once(':').is_some_and(|(_, port)| port.parse::<u16>().is_ok()) {
            Ok(Endpoint::Tcp(addr.to_string()))
        } else {
            Err(format!("`{s}` is neither host:port nor pipe:<path>"))
        }
    }
}

#[derive(Debug, Error)]
pub enum WireError {
    #[error("connection closed")]
    Closed,
    #[error("stream ended inside a message")]
    Truncated,
    #[error("declared length {0} exceeds the 16 MiB cap")]
    TooLarge(u32),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed message: {0}")]
    Decode(#[from] DecodeError),
    #[error("cannot encode message: {0}")]
    Encode(#[from] EncodeError),
}

impl WireError {
    pub fn is_timeout(&self) -> bool {
        matches!(self, WireError::Io(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut))
    }
}

/// Reads one length-prefixed payload. A clean end of stream before the first
/// header byte is [`WireError::Closed`]; anywhere else it is truncation.
pub fn read_framed<R: Read>(r: &mut R) -> Result<Vec<u8>, WireError> {
    let mut header = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut header[got..]) {
            Ok(0) if got == 0 => return Err(WireError::Closed),
            Ok(0) => return Err(WireError::Truncated),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_le_bytes(header);
    if len as usize > MAX_PAYLOAD {
        return Err(WireError::TooLarge(len));
    }
    let mut payload = vec![0u8; len as usize];
    r.read_exact(&mut payload).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => WireError::Truncated,
        _ => WireError::Io(e),
    })?;
    Ok(payload)
}

pub fn write_framed<W: Write>(w: &mut W, payload: &[u8]) -> Result<(), WireError> {
    let bytes = codec::write_framed(payload)?;
    w.write_all(&bytes)?;
    Ok(())
}

/// A connected byte stream of either kind.
#[derive(Debug)]
pub enum Stream {
    Tcp(TcpStream),
    Unix(UnixStream),
}

impl Stream {
    pub fn connect(endpoint: &Endpoint) -> io::Result<Stream> {
        match endpoint {
            Endpoint::Tcp(addr) => {
                let s = TcpStream::connect(addr)?;
                s.set_nodelay(true)?;
                Ok(Stream::Tcp(s))
            }
            Endpoint::Pipe(path) => Ok(Stream::Unix(UnixStream::connect(path)?)),
        }
    }

    pub fn set_read_timeout(&self, t: Option<Duration>) -> io::Result<()> {
        match self {
            Stream::Tcp(s) => s.set_read_timeout(t),
            Stream::Unix(s) => s.set_read_timeout(t),
        }
    }

    pub fn shutdown(&self) {
        let _ = match self {
            Stream::Tcp(s) => s.shutdown(Shutdown::Both),
            Stream::Unix(s) => s.shutdown(Shutdown::Both),
        };
    }
}

impl Read for Stream {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        match self {
            Stream::Tcp(s) => s.read(buf),
            Stream::Unix(s) => s.read(buf),
        }
    }
}

impl Write for Stream {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        match self {
            Stream::Tcp(s) => s.write(buf),
            Stream::Unix(s) => s.write(buf),
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        match self {
            Stream::Tcp(s) => s.flush(),
            Stream::Unix(s) => s.flush(),
        }
    }
}

#[derive(Debug)]
pub enum Listener {
    Tcp(TcpListener),
    Unix(UnixListener, PathBuf),
}

impl Listener {
    /// Binds the endpoint. An address or socket path already in use is an error.
    pub fn bind(endpoint: &Endpoint) -> io::Result<Listener> {
        match endpoint {
            Endpoint::Tcp(addr) => Ok(Listener::Tcp(TcpListener::bind(addr)?)),
            Endpoint::Pipe(path) => Ok(Listener::Unix(UnixListener::bind(path)?, path.clone())),
        }
    }

    /// The bound endpoint, with the actual port when bound to port 0.
    pub fn local_endpoint(&self) -> io::Result<Endpoint> {
        match self {
            Listener::Tcp(l) => Ok(Endpoint::Tcp(l.local_addr()?.to_string())),
            Listener::Unix(_, path) => Ok(Endpoint::Pipe(path.clone())),
        }
    }

    pub fn accept(&self) -> io::Result<Stream> {
        match self {
            Listener::Tcp(l) => {
                let (s, _) = l.accept()?;
                s.set_nodelay(true)?;
                s.set_nonblocking(false)?;
                Ok(Stream::Tcp(s))
            }
            Listener::Unix(l, _) => {
                let (s, _) = l.accept()?;
                s.set_nonblocking(false)?;
                Ok(Stream::Unix(s))
            }
        }
    }

    pub fn set_nonblocking(&self, on: bool) -> io::Result<()> {
        match self {
            Listener::Tcp(l) => l.set_nonblocking(on),
            Listener::Unix(l, _) => l.set_nonblocking(on),
        }
    }
}

impl Drop for Listener {
    fn drop(&mut self) {
        if let Listener::Unix(_, path) = self {
            let _ = std::fs::remove_file(path);
        }
    }
}

/// A stream carrying framed protocol messages, with traffic counters.
#[derive(Debug)]
pub struct Connection {
    stream: Stream,
    pub sent: u64,
    pub received: u64,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    buf: Vec<u8>,
}

impl Connection {
    pub fn new(stream: Stream) -> Self {
        Connection { stream, sent: 0, received: 0, bytes_sent: 0, bytes_received: 0, buf: Vec::new() }
    }

    pub fn stream(&self) -> &Stream {
        &self.stream
    }

    pub fn send(&mut self, msg: &Message) -> Result<(), WireError> {
        self.buf.clear();
        self.buf.extend_from_slice(&[0; 4]);
        codec::encode_message_into(msg, &mut self.buf)?;
        let len = self.buf.len() - 4;
        if len > MAX_PAYLOAD {
            return Err(EncodeError::PayloadTooLarge(len).into());
        }
        self.buf[..4].copy_from_slice(&(len as u32).to_le_bytes());
        self.stream.write_all(&self.buf)?;
        self.sent += 1;
        self.bytes_sent += self.buf.len() as u64;
        Ok(())
    }

    /// Receives the raw payload of the next message.
    pub fn recv_payload(&mut self) -> Result<Vec<u8>, WireError> {
        let payload = read_framed(&mut self.stream)?;
        self.received += 1;
        self.bytes_received += 4 + payload.len() as u64;
        Ok(payload)
    }

    pub fn recv(&mut self) -> Result<Message, WireError> {
        let payload = self.recv_payload()?;
        Ok(codec::decode_message(&payload)?)
    }

    pub fn set_read_timeout(&self, t: Option<Duration>) -> io::Result<()> {
        self.stream.set_read_timeout(t)
    }

    pub fn close(&self) {
        self.stream.shutdown();
    }
}
