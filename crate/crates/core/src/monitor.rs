//! The control loop: per round, interpret an ADC frame, append a log
//! entry, decide whether an alert is warranted, and dispatch it as SMS.
//!
//! Monitoring must outlive a flaky modem, so send failures are logged and
//! the loop continues; only log-file failures are fatal. Time comes from an
//! injectable [`Clock`] so runs replay byte-identically under test.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::{Local, NaiveDateTime};
use thiserror::Error;

use crate::at::is_valid_phone_number;
use crate::client::ClientError;
use crate::sensing::{
    interpret_frame, AdcFrame, Celsius, DetectionFlags, SensingConfig, SensorSnapshot,
    StatusByte,
};

/// Single GSM text-mode message budget.
pub const MAX_SMS_CHARS: usize = 160;

pub trait Clock {
    fn now(&self) -> NaiveDateTime;
}

/// Local wall-clock time, to the second.
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> NaiveDateTime {
        Local::now().naive_local()
    }
}

/// Always reports the same instant; replayed runs become byte-identical.
pub struct FixedClock(NaiveDateTime);

impl FixedClock {
    pub fn new(instant: NaiveDateTime) -> Self {
        Self(instant)
    }
}

impl Clock for FixedClock {
    fn now(&self) -> NaiveDateTime {
        self.0
    }
}

/// Anything that can deliver a composed alert; the session type in
/// [`crate::client`] is the production implementation.
pub trait SmsSink {
    fn send(&mut self, destination: &str, body: &str) -> Result<u32, ClientError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlertMode {
    /// Alert when the status gains a bit it did not have last round, plus
    /// optional periodic digests.
    EdgeTriggered,
    /// Alert on every round whose status is nonzero.
    EveryRound,
}

/// Stateful firing rule; feed it every round so edges are tracked.
#[derive(Debug, Clone)]
pub struct AlertPolicy {
    mode: AlertMode,
    previous_status: StatusByte,
}

impl AlertPolicy {
    pub fn new(mode: AlertMode) -> Self {
        Self { mode, previous_status: StatusByte::CLEAR }
    }

    /// Decide for one round and remember the status for the next edge
    /// comparison. `digest_every` of 0 disables digest rounds.
    pub fn should_send(&mut self, new_status: StatusByte, round: u64, digest_every: u64) -> bool {
        let fire = match self.mode {
            AlertMode::EdgeTriggered => {
                new_status.introduces_new_bit(self.previous_status)
                    || (digest_every > 0 && round.is_multiple_of(digest_every))
            }
            AlertMode::EveryRound => !new_status.is_clear(),
        };
        self.previous_status = new_status;
        fire
    }
}

#[derive(Debug, Clone)]
pub struct MonitorConfig {
    /// Site label stamped into every alert.
    pub location: String,
    pub dest_phone: String,
    /// Delay between rounds; zero runs rounds back-to-back.
    pub period: Duration,
    /// Rounds between unconditional status digests (edge mode only);
    /// zero disables them.
    pub digest_every: u64,
    pub log_path: PathBuf,
    pub alert_mode: AlertMode,
    pub sensing: SensingConfig,
}

impl MonitorConfig {
    fn validate(&self) -> Result<(), MonitorError> {
        if !is_valid_phone_number(&self.dest_phone) {
            return Err(MonitorError::InvalidConfig(format!(
                "destination phone {:?} must be digits with an optional leading '+'",
                self.dest_phone
            )));
        }
        Ok(())
    }
}

/// One alert, field by field; [`AlertMessage::rendered`] is the wire text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlertMessage {
    pub location: String,
    pub timestamp: NaiveDateTime,
    pub temp_read_c: Celsius,
    pub temp_ref_c: Celsius,
    pub status: StatusByte,
    pub summary: String,
}

impl AlertMessage {
    fn rendered_untrimmed(&self) -> String {
        format!(
            "AMSMS {} {} T={}C REF={}C STATUS={} {}",
            self.location,
            self.timestamp.format("%Y-%m-%dT%H:%M:%S"),
            self.temp_read_c,
            self.temp_ref_c,
            self.status,
            self.summary
        )
    }

    /// Render to at most [`MAX_SMS_CHARS`] characters.
    pub fn rendered(&self) -> String {
        let text = self.rendered_untrimmed();
        if text.chars().count() <= MAX_SMS_CHARS {
            text
        } else {
            text.chars().take(MAX_SMS_CHARS).collect()
        }
    }
}

/// Names of the set condition bits, in bit order.
pub fn condition_names(flags: DetectionFlags) -> Vec<&'static str> {
    let mut names = Vec::new();
    if flags.smoke {
        names.push("Smoke");
    }
    if flags.overheat {
        names.push("Overheating");
    }
    if flags.trespass {
        names.push("Trespassing");
    }
    names
}

/// One log block: the round header, the four numbered readings, then one
/// warning line per set bit. Every line ends in a single line feed.
pub fn format_log_entry(snapshot: &SensorSnapshot) -> String {
    let mut entry = String::new();
    entry.push_str(&format!("Measuring Round : {}\n", snapshot.round));
    entry.push_str(&format!("1.Smoke Voltage = {} mV\n", snapshot.smoke_mv));
    entry.push_str(&format!("2.Temp. Read = {} celsius\n", snapshot.temp_read_c));
    entry.push_str(&format!("3.Temp. Ref. = {} celsius\n", snapshot.temp_ref_c));
    entry.push_str(&format!("4.Light Sensor Voltage = {} mV\n", snapshot.light_mv));
    for name in condition_names(snapshot.flags) {
        entry.push_str(&format!("Warning! {name} Detected !\n"));
    }
    entry
}

/// Build the alert for one snapshot. When the full text would exceed the
/// SMS budget the location is shortened first, so the measurements always
/// survive intact.
pub fn compose_alert(
    snapshot: &SensorSnapshot,
    cfg: &MonitorConfig,
    now: NaiveDateTime,
) -> AlertMessage {
    let summary = if snapshot.status.is_clear() {
        "OK".to_string()
    } else {
        condition_names(snapshot.flags).join(",")
    };
    let mut message = AlertMessage {
        location: cfg.location.clone(),
        timestamp: now,
        temp_read_c: snapshot.temp_read_c,
        temp_ref_c: snapshot.temp_ref_c,
        status: snapshot.status,
        summary,
    };
    let over = message
        .rendered_untrimmed()
        .chars()
        .count()
        .saturating_sub(MAX_SMS_CHARS);
    if over > 0 {
        let keep = message.location.chars().count().saturating_sub(over);
        message.location = message.location.chars().take(keep).collect();
    }
    message
}

/// Append-only report writer. Entries are separated by one blank line and
/// flushed before returning, so a crash between rounds loses nothing.
pub struct LogSink {
    writer: BufWriter<File>,
}

impl LogSink {
    /// Create (or truncate) the report file.
    pub fn create(path: &Path) -> io::Result<Self> {
        Ok(Self { writer: BufWriter::new(File::create(path)?) })
    }

    pub fn append(&mut self, entry: &str) -> io::Result<()> {
        if entry.is_empty() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                "refusing to log an empty entry",
            ));
        }
        self.writer.write_all(entry.as_bytes())?;
        if !entry.ends_with('\n') {
            self.writer.write_all(b"\n")?;
        }
        self.writer.write_all(b"\n")?;
        self.writer.flush()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub rounds: u64,
    pub alerts_sent: u64,
    pub log_path: PathBuf,
}

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("invalid monitor configuration: {0}")]
    InvalidConfig(String),
    #[error("log write failed: {0}")]
    Log(#[from] io::Error),
}

/// Drive the loop over `frames`: interpret, log, evaluate the policy, and
/// send alerts through `modem`. A failed send is logged and skipped; the
/// report file keeps one entry per frame no matter what the modem does.
pub fn run_monitor(
    frames: impl IntoIterator<Item = AdcFrame>,
    cfg: &MonitorConfig,
    modem: &mut dyn SmsSink,
    clock: &dyn Clock,
) -> Result<RunSummary, MonitorError> {
    cfg.validate()?;
    let mut sink = LogSink::create(&cfg.log_path)?;
    let mut policy = AlertPolicy::new(cfg.alert_mode);
    let mut rounds = 0u64;
    let mut alerts_sent = 0u64;
    for (index, frame) in frames.into_iter().enumerate() {
        let round = index as u64;
        if round > 0 && !cfg.period.is_zero() {
            std::thread::sleep(cfg.period);
        }
        let snapshot = interpret_frame(&frame, round, &cfg.sensing);
        sink.append(&format_log_entry(&snapshot))?;
        if policy.should_send(snapshot.status, round, cfg.digest_every) {
            let alert = compose_alert(&snapshot, cfg, clock.now());
            match modem.send(&cfg.dest_phone, &alert.rendered()) {
                Ok(reference) => {
                    alerts_sent += 1;
                    log::debug!("round {round}: alert accepted, reference {reference}");
                }
                Err(err) => {
                    log::warn!("round {round}: alert send failed, continuing: {err}");
                }
            }
        }
        rounds += 1;
    }
    Ok(RunSummary { rounds, alerts_sent, log_path: cfg.log_path.clone() })
}
