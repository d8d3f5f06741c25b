//! Glue that puts a [`Modem`](crate::emulator::Modem) on one end of a
//! link so a client on the other end can talk to it like real hardware.
//!
//! The host owns its endpoint on a small service thread that pumps bytes
//! into the modem and writes responses back, and it records both wire
//! directions so tests can assert exactly what crossed the link.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use crate::emulator::Modem;
use crate::transport::{LinkEndpoint, LinkError};

const POLL: Duration = Duration::from_millis(5);
const READ_CHUNK: usize = 256;

/// Everything observed on the wire, by direction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WireTaps {
    pub to_modem: Vec<u8>,
    pub from_modem: Vec<u8>,
}

pub struct EmulatorHost {
    modem: Arc<Mutex<Modem>>,
    taps: Arc<Mutex<WireTaps>>,
    stop: Arc<AtomicBool>,
    service: Option<JoinHandle<()>>,
}

impl EmulatorHost {
    /// Start serving `modem` over `endpoint`. The endpoint moves onto the
    /// service thread; interact with the modem via [`EmulatorHost::with_modem`].
    pub fn spawn(endpoint: LinkEndpoint, modem: Modem) -> Self {
        let modem = Arc::new(Mutex::new(modem));
        let taps = Arc::new(Mutex::new(WireTaps::default()));
        let stop = Arc::new(AtomicBool::new(false));
        let service = {
            let modem = Arc::clone(&modem);
            let taps = Arc::clone(&taps);
            let stop = Arc::clone(&stop);
            std::thread::spawn(move || serve(endpoint, modem, taps, stop))
        };
        Self { modem, taps, stop, service: Some(service) }
    }

    /// Run `f` against the modem while the service thread is paused at the
    /// lock; useful for fault injection and outbox inspection mid-session.
    pub fn with_modem<R>(&self, f: impl FnOnce(&mut Modem) -> R) -> R {
        f(&mut self.modem.lock().unwrap())
    }

    pub fn taps(&self) -> WireTaps {
        self.taps.lock().unwrap().clone()
    }

    pub fn shutdown(mut self) {
        self.stop_service();
    }

    fn stop_service(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(handle) = self.service.take() {
            let _ = handle.join();
        }
    }
}

impl Drop for EmulatorHost {
    fn drop(&mut self) {
        self.stop_service();
    }
}

fn serve(
    endpoint: LinkEndpoint,
    modem: Arc<Mutex<Modem>>,
    taps: Arc<Mutex<WireTaps>>,
    stop: Arc<AtomicBool>,
) {
    while !stop.load(Ordering::SeqCst) {
        let bytes = match endpoint.read(READ_CHUNK, POLL) {
            Ok(bytes) => bytes,
            Err(LinkError::EndOfLink) => break,
            Err(_) => break,
        };
        if bytes.is_empty() {
            continue;
        }
        let output = {
            let mut modem = modem.lock().unwrap();
            modem.feed(&bytes)
        };
        {
            let mut taps = taps.lock().unwrap();
            taps.to_modem.extend_from_slice(&bytes);
            taps.from_modem.extend_from_slice(&output);
        }
        let mut pending = output.as_slice();
        while !pending.is_empty() && !stop.load(Ordering::SeqCst) {
            match endpoint.write(pending, POLL) {
                Ok(written) => pending = &pending[written..],
                Err(LinkError::WouldBlock) => continue,
                Err(_) => return,
            }
        }
    }
}
