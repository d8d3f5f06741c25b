//! In-memory duplex byte link with bounded per-direction buffers and CTS
//! flow control.
//!
//! Each endpoint asserts a CTS line gating what its peer may write: bytes
//! are accepted only while the receiving side's CTS is up and its buffer has
//! space. CTS drops automatically at buffer-full and recovers as reads
//! drain the buffer; [`LinkEndpoint::set_cts`] forces it down for fault
//! injection. Writes block up to a caller-chosen timeout and report partial
//! progress; accepted bytes are never dropped or reordered.
//!
//! Buffer state lives behind one mutex shared by both endpoints, so the two
//! sides can be driven from two threads; each endpoint itself expects a
//! single logical owner.

use std::collections::VecDeque;
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinkError {
    #[error("buffer capacity must be at least 1 byte")]
    InvalidCapacity,
    #[error("link endpoint closed")]
    Closed,
    #[error("no bytes accepted before the timeout")]
    WouldBlock,
    #[error("peer closed and buffer drained")]
    EndOfLink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    None,
    Even,
    Odd,
}

/// Informational line settings; simulated time is in abstract ticks, not
/// baud, so these affect nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineSettings {
    pub speed: u32,
    pub parity: Parity,
    pub data_bits: u8,
    pub stop_bits: u8,
}

impl Default for LineSettings {
    fn default() -> Self {
        Self { speed: 115_200, parity: Parity::None, data_bits: 8, stop_bits: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct LinkConfig {
    pub buffer_capacity: usize,
    pub latency_ticks: u64,
    pub line: LineSettings,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self { buffer_capacity: 1024, latency_ticks: 0, line: LineSettings::default() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinkStats {
    pub bytes_written: u64,
    pub bytes_read: u64,
}

struct Shared {
    /// queues[side] holds bytes destined for endpoint `side`, stamped with
    /// the tick at which they become readable.
    queues: [VecDeque<(u8, u64)>; 2],
    /// Manual CTS override per endpoint; effective CTS also requires buffer
    /// space.
    cts_enabled: [bool; 2],
    closed: [bool; 2],
    stats: [LinkStats; 2],
    capacity: usize,
    latency: u64,
    now: u64,
}

impl Shared {
    fn writable_space(&self, dest: usize) -> usize {
        if !self.cts_enabled[dest] {
            return 0;
        }
        self.capacity - self.queues[dest].len()
    }
}

struct Link {
    state: Mutex<Shared>,
    changed: Condvar,
    line: LineSettings,
}

/// One side of the duplex link.
pub struct LinkEndpoint {
    link: Arc<Link>,
    side: usize,
}

/// Build a connected endpoint pair with empty buffers and CTS asserted on
/// both sides.
pub fn create_link(cfg: LinkConfig) -> Result<(LinkEndpoint, LinkEndpoint), LinkError> {
    if cfg.buffer_capacity == 0 {
        return Err(LinkError::InvalidCapacity);
    }
    let link = Arc::new(Link {
        state: Mutex::new(Shared {
            queues: [VecDeque::new(), VecDeque::new()],
            cts_enabled: [true, true],
            closed: [false, false],
            stats: [LinkStats::default(), LinkStats::default()],
            capacity: cfg.buffer_capacity,
            latency: cfg.latency_ticks,
            now: 0,
        }),
        changed: Condvar::new(),
        line: cfg.line,
    });
    Ok((
        LinkEndpoint { link: Arc::clone(&link), side: 0 },
        LinkEndpoint { link, side: 1 },
    ))
}

impl LinkEndpoint {
    fn lock(&self) -> MutexGuard<'_, Shared> {
        self.link.state.lock().unwrap()
    }

    fn deadline(timeout: Duration) -> Instant {
        Instant::now()
            .checked_add(timeout)
            .unwrap_or_else(|| Instant::now() + Duration::from_secs(86_400))
    }

    /// Write as much of `bytes` as the peer will accept, blocking up to
    /// `timeout` for space or CTS. Returns the accepted count (possibly
    /// short); zero bytes accepted within the timeout is [`LinkError::WouldBlock`].
    pub fn write(&self, bytes: &[u8], timeout: Duration) -> Result<usize, LinkError> {
        if bytes.is_empty() {
            return Ok(0);
        }
        let deadline = Self::deadline(timeout);
        let peer = 1 - self.side;
        let mut state = self.lock();
        let mut accepted = 0;
        loop {
            if state.closed[self.side] || state.closed[peer] {
                return if accepted > 0 { Ok(accepted) } else { Err(LinkError::Closed) };
            }
            let space = state.writable_space(peer);
            if space > 0 && accepted < bytes.len() {
                let take = space.min(bytes.len() - accepted);
                let ready = state.now + state.latency;
                for &byte in &bytes[accepted..accepted + take] {
                    state.queues[peer].push_back((byte, ready));
                }
                accepted += take;
                state.stats[self.side].bytes_written += take as u64;
                self.link.changed.notify_all();
                if accepted == bytes.len() {
                    return Ok(accepted);
                }
                continue;
            }
            let now = Instant::now();
            if now >= deadline {
                return if accepted > 0 { Ok(accepted) } else { Err(LinkError::WouldBlock) };
            }
            let (guard, _) = self.link.changed.wait_timeout(state, deadline - now).unwrap();
            state = guard;
        }
    }

    /// Read up to `max` bytes in FIFO order, blocking up to `timeout` for
    /// data. A timeout with nothing buffered is an empty result; a closed
    /// peer with a drained buffer is [`LinkError::EndOfLink`].
    pub fn read(&self, max: usize, timeout: Duration) -> Result<Vec<u8>, LinkError> {
        if max == 0 {
            return Ok(Vec::new());
        }
        let deadline = Self::deadline(timeout);
        let peer = 1 - self.side;
        let mut state = self.lock();
        loop {
            if state.closed[self.side] {
                return Err(LinkError::EndOfLink);
            }
            let mut out = Vec::new();
            while out.len() < max {
                match state.queues[self.side].front() {
                    Some(&(byte, ready)) if ready <= state.now => {
                        state.queues[self.side].pop_front();
                        out.push(byte);
                    }
                    _ => break,
                }
            }
            if !out.is_empty() {
                state.stats[self.side].bytes_read += out.len() as u64;
                // Freed space implicitly re-asserts CTS; wake any writer.
                self.link.changed.notify_all();
                return Ok(out);
            }
            if state.closed[peer] && state.queues[self.side].is_empty() {
                return Err(LinkError::EndOfLink);
            }
            let now = Instant::now();
            if now >= deadline {
                return Ok(Vec::new());
            }
            let (guard, _) = self.link.changed.wait_timeout(state, deadline - now).unwrap();
            state = guard;
        }
    }

    /// Manual CTS override: `false` refuses all peer writes regardless of
    /// buffer space, `true` returns to the automatic buffer-full rule.
    pub fn set_cts(&self, asserted: bool) {
        let mut state = self.lock();
        state.cts_enabled[self.side] = asserted;
        self.link.changed.notify_all();
    }

    /// Effective CTS as the peer sees it: enabled and buffer not full.
    pub fn cts_asserted(&self) -> bool {
        let state = self.lock();
        state.cts_enabled[self.side] && state.queues[self.side].len() < state.capacity
    }

    pub fn stats(&self) -> LinkStats {
        self.lock().stats[self.side]
    }

    pub fn line_settings(&self) -> LineSettings {
        self.link.line
    }

    /// Advance the shared tick clock; with a nonzero configured latency,
    /// written bytes become readable only `latency_ticks` after their write.
    pub fn advance_ticks(&self, ticks: u64) {
        let mut state = self.lock();
        state.now += ticks;
        self.link.changed.notify_all();
    }

    pub fn close(&self) {
        let mut state = self.lock();
        state.closed[self.side] = true;
        self.link.changed.notify_all();
    }
}

impl Drop for LinkEndpoint {
    fn drop(&mut self) {
        self.close();
    }
}
