//! Simulated auto-monitoring and SMS-alert stack.
//!
//! The crate models the full chain of a small surveillance node in software:
//! raw ADC codes become physical readings and a packed status byte
//! ([`sensing`]), a control loop logs each round and decides when to alert
//! ([`monitor`]), and alerts travel as AT commands ([`at`]) through a client
//! driver ([`client`]) over a flow-controlled in-memory serial link
//! ([`transport`]) to a SIM900D-style modem emulator ([`emulator`]) that
//! records accepted SMS in an outbox. [`host`] runs the emulator behind one
//! link endpoint on a service thread so a single caller can drive the whole
//! stack.

pub mod at;
pub mod client;
pub mod emulator;
pub mod host;
pub mod monitor;
pub mod sensing;
pub mod transport;
