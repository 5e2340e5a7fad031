//! Ordered two-party message channel with byte and round accounting.
//!
//! Every message is framed as `u32 little-endian length ‖ payload`. Sends are
//! buffered until [`Channel::flush`]; one flush is one communication round, so
//! any number of logical messages packed into a single flush cost one round.

use std::io::{BufReader, BufWriter, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::Arc;
use std::time::Duration;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const FRAME_HEADER: u64 = 4;
const MAX_FRAME: usize = 1 << 31;

/// Accounting phase a byte count is attributed to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Online,
    Offline,
}

/// Shared, monotone traffic counters for one party. Readable from any thread.
#[derive(Debug, Default)]
pub struct TrafficStats {
    online_bytes: AtomicU64,
    offline_bytes: AtomicU64,
    rounds: AtomicU64,
    messages: AtomicU64,
}

/// Point-in-time copy of [`TrafficStats`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TrafficSnapshot {
    pub online_bytes: u64,
    pub offline_bytes: u64,
    pub rounds: u64,
    pub messages: u64,
}

impl TrafficStats {
    pub fn add_bytes(&self, phase: Phase, n: u64) {
        match phase {
            Phase::Online => self.online_bytes.fetch_add(n, Ordering::Relaxed),
            Phase::Offline => self.offline_bytes.fetch_add(n, Ordering::Relaxed),
        };
    }

    pub fn snapshot(&self) -> TrafficSnapshot {
        TrafficSnapshot {
            online_bytes: self.online_bytes.load(Ordering::Relaxed),
            offline_bytes: self.offline_bytes.load(Ordering::Relaxed),
            rounds: self.rounds.load(Ordering::Relaxed),
            messages: self.messages.load(Ordering::Relaxed),
        }
    }
}

impl TrafficSnapshot {
    /// Counter increase from `earlier` to `self`.
    pub fn since(&self, earlier: &TrafficSnapshot) -> TrafficSnapshot {
        TrafficSnapshot {
            online_bytes: self.online_bytes - earlier.online_bytes,
            offline_bytes: self.offline_bytes - earlier.offline_bytes,
            rounds: self.rounds - earlier.rounds,
            messages: self.messages - earlier.messages,
        }
    }

    pub fn plus(&self, other: &TrafficSnapshot) -> TrafficSnapshot {
        TrafficSnapshot {
            online_bytes: self.online_bytes + other.online_bytes,
            offline_bytes: self.offline_bytes + other.offline_bytes,
            rounds: self.rounds.max(other.rounds),
            messages: self.messages + other.messages,
        }
    }
}

trait Wire: Send {
    fn write_all(&mut self, buf: &[u8]) -> Result<()>;
    fn flush(&mut self) -> Result<()>;
    fn read_exact(&mut self, buf: &mut [u8]) -> Result<()>;
}

struct MemWire {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
    out: Vec<u8>,
    inbuf: Vec<u8>,
    pos: usize,
}

impl Wire for MemWire {
    fn write_all(&mut self, buf: &[u8]) -> Result<()> {
        self.out.extend_from_slice(buf);
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        if self.out.is_empty() {
            return Ok(());
        }
        let chunk = std::mem::take(&mut self.out);
        self.tx
            .send(chunk)
            .map_err(|_| Error::Session("peer disconnected".into()))
    }

    fn read_exact(&mut self, buf: &mut [u8]) -> Result<()> {
        let mut filled = 0;
        while filled < buf.len() {
            if self.pos == self.inbuf.len() {
                self.inbuf = self
                    .rx
                    .recv()
                    .map_err(|_| Error::Session("peer disconnected".into()))?;
                self.pos = 0;
            }
            let take = (buf.len() - filled).min(self.inbuf.len() - self.pos);
            buf[filled..filled + take].copy_from_slice(&self.inbuf[self.pos..self.pos + take]);
            self.pos += take;
            filled += take;
        }
        Ok(())
    }
}

struct TcpWire {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

impl TcpWire {
    fn new(stream: TcpStream) -> Result<Self> {
        stream.set_nodelay(true)?;
        let r = stream.try_clone()?;
        Ok(TcpWire {
            reader: BufReader::with_capacity(1 << 16, r),
            writer: BufWriter::with_capacity(1 << 16, stream),
        })
    }
}

fn map_io(e: std::io::Error) -> Error {
    match e.kind() {
        std::io::ErrorKind::UnexpectedEof
        | std::io::ErrorKind::ConnectionReset
        | std::io::ErrorKind::BrokenPipe => Error::Session(format!("peer disconnected: {e}")),
        _ => Error::Io(e),
    }
}

impl Wire for TcpWire {
    fn write_all(&mut self, buf: &[u8]) -> Result<()> {
        self.writer.write_all(buf).map_err(map_io)
    }

    fn flush(&mut self) -> Result<()> {
        self.writer.flush().map_err(map_io)
    }

    fn read_exact(&mut self, buf: &mut [u8]) -> Result<()> {
        self.reader.read_exact(buf).map_err(map_io)
    }
}

/// One party's end of a two-party session.
pub struct Channel {
    party: u8,
    wire: Box<dyn Wire>,
    pending: usize,
    stats: Arc<TrafficStats>,
    transcript: Sha256,
}

impl Channel {
    fn with_wire(party: u8, wire: Box<dyn Wire>) -> Self {
        Channel {
            party,
            wire,
            pending: 0,
            stats: Arc::new(TrafficStats::default()),
            transcript: Sha256::new(),
        }
    }

    /// Connected in-process pair; element 0 belongs to party 0.
    pub fn pair() -> (Channel, Channel) {
        let (tx0, rx1) = channel();
        let (tx1, rx0) = channel();
        let w0 = MemWire {
            tx: tx0,
            rx: rx0,
            out: Vec::new(),
            inbuf: Vec::new(),
            pos: 0,
        };
        let w1 = MemWire {
            tx: tx1,
            rx: rx1,
            out: Vec::new(),
            inbuf: Vec::new(),
            pos: 0,
        };
        (
            Channel::with_wire(0, Box::new(w0)),
            Channel::with_wire(1, Box::new(w1)),
        )
    }

    /// Accepts a single peer connection. The listening side is party 0.
    pub fn tcp_listen(addr: impl ToSocketAddrs) -> Result<Channel> {
        let listener = TcpListener::bind(addr)?;
        let (stream, _) = listener.accept()?;
        Ok(Channel::with_wire(0, Box::new(TcpWire::new(stream)?)))
    }

    /// Accepts on an already-bound listener (lets callers pick port 0).
    pub fn tcp_accept(listener: &TcpListener) -> Result<Channel> {
        let (stream, _) = listener.accept()?;
        Ok(Channel::with_wire(0, Box::new(TcpWire::new(stream)?)))
    }

    /// Connects to a listening peer, retrying for up to `timeout`. The
    /// connecting side is party 1.
    pub fn tcp_connect(addr: impl ToSocketAddrs + Clone, timeout: Duration) -> Result<Channel> {
        let start = std::time::Instant::now();
        loop {
            match TcpStream::connect(addr.clone()) {
                Ok(s) => return Ok(Channel::with_wire(1, Box::new(TcpWire::new(s)?))),
                Err(e) if start.elapsed() < timeout => {
                    let _ = e;
                    std::thread::sleep(Duration::from_millis(20));
                }
                Err(e) => return Err(Error::Io(e)),
            }
        }
    }

    pub fn party(&self) -> u8 {
        self.party
    }

    pub fn stats(&self) -> Arc<TrafficStats> {
        Arc::clone(&self.stats)
    }

    /// Hash of every framed byte this party has sent.
    pub fn transcript_digest(&self) -> [u8; 32] {
        self.transcript.clone().finalize().into()
    }

    /// Buffers one framed message; nothing leaves the process until [`Self::flush`].
    pub fn send(&mut self, payload: &[u8]) -> Result<()> {
        if payload.len() > MAX_FRAME {
            return Err(Error::Protocol(format!("frame of {} bytes", payload.len())));
        }
        let header = (payload.len() as u32).to_le_bytes();
        self.wire.write_all(&header)?;
        self.wire.write_all(payload)?;
        self.transcript.update(header);
        self.transcript.update(payload);
        self.pending += 1;
        self.stats
            .add_bytes(Phase::Online, payload.len() as u64 + FRAME_HEADER);
        self.stats.messages.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    /// Pushes buffered messages to the peer. Counts one round if anything was pending.
    pub fn flush(&mut self) -> Result<()> {
        if self.pending == 0 {
            return Ok(());
        }
        self.wire.flush()?;
        self.pending = 0;
        self.stats.rounds.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    pub fn recv(&mut self) -> Result<Vec<u8>> {
        self.flush()?;
        let mut header = [0u8; 4];
        self.wire.read_exact(&mut header)?;
        let len = u32::from_le_bytes(header) as usize;
        if len > MAX_FRAME {
            return Err(Error::Protocol(format!("frame length {len} exceeds limit")));
        }
        let mut buf = vec![0u8; len];
        self.wire.read_exact(&mut buf)?;
        Ok(buf)
    }

    /// Simultaneous swap of one message: one round for each party.
    pub fn exchange(&mut self, payload: &[u8]) -> Result<Vec<u8>> {
        // party 1 reads before writing so a TCP backend never has both
        // sides blocked on full send buffers
        if self.party == 0 {
            self.send(payload)?;
            self.flush()?;
            self.recv()
        } else {
            let got = self.recv()?;
            self.send(payload)?;
            self.flush()?;
            Ok(got)
        }
    }

    /// Exchanges a list of payloads in a single round. Element `i` of the
    /// result is the peer's payload `i`.
    pub fn batch_exchange(&mut self, payloads: &[Vec<u8>]) -> Result<Vec<Vec<u8>>> {
        if payloads.is_empty() {
            return Ok(Vec::new());
        }
        let write = |ch: &mut Channel| -> Result<()> {
            ch.send(&(payloads.len() as u32).to_le_bytes())?;
            for p in payloads {
                ch.send(p)?;
            }
            ch.flush()
        };
        let read = |ch: &mut Channel| -> Result<Vec<Vec<u8>>> {
            let head = ch.recv()?;
            if head.len() != 4 {
                return Err(Error::Protocol("malformed batch header".into()));
            }
            let n = u32::from_le_bytes(head.try_into().unwrap()) as usize;
            if n != payloads.len() {
                return Err(Error::Protocol(format!(
                    "batch length mismatch: local {} vs peer {n}",
                    payloads.len()
                )));
            }
            (0..n).map(|_| ch.recv()).collect()
        };
        if self.party == 0 {
            write(self)?;
            read(self)
        } else {
            let got = read(self)?;
            write(self)?;
            Ok(got)
        }
    }
}
