//! Library behind the `amsms` binary: scenario parsing, the wired-up
//! monitoring run, and the interactive modem console.

use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::time::Duration;

use chrono::NaiveDateTime;

use amsms_core::client::ClientSession;
use amsms_core::emulator::Modem;
use amsms_core::host::EmulatorHost;
use amsms_core::monitor::{
    run_monitor, AlertMode, FixedClock, MonitorConfig, SystemClock,
};
use amsms_core::sensing::{LightMode, SensingConfig};
use amsms_core::transport::{create_link, LinkConfig};

pub mod scenario;

pub use scenario::{parse_scenario, parse_scenario_str, ScenarioError};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub scenario: PathBuf,
    pub dest_phone: String,
    pub location: String,
    pub log_path: PathBuf,
    pub period: Duration,
    pub light_mode: LightMode,
    pub alert_mode: AlertMode,
    pub digest_every: u64,
    /// Where to export the emulator outbox; `None` skips the export.
    pub outbox_path: Option<PathBuf>,
    /// Freeze alert timestamps for reproducible runs.
    pub fixed_clock: Option<NaiveDateTime>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub rounds: u64,
    pub alerts_sent: u64,
    pub outbox_size: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("{stage} failure: {message}")]
    Fatal {
        stage: &'static str,
        message: String,
    },
}

fn fatal(stage: &'static str) -> impl Fn(&dyn std::fmt::Display) -> RunError {
    move |err| RunError::Fatal { stage, message: err.to_string() }
}

/// Execute one scenario end to end: emulated modem on one side of a fresh
/// link, monitor loop on the other. Prints a one-line summary to `out` and
/// reports what happened.
pub fn run(options: &RunOptions, out: &mut dyn Write) -> Result<RunReport, RunError> {
    let frames = parse_scenario(&options.scenario)?;

    let (client_end, modem_end) =
        create_link(LinkConfig::default()).map_err(|e| fatal("link")(&e))?;
    let host = EmulatorHost::spawn(modem_end, Modem::new());
    let mut session = ClientSession::new(client_end);

    let cfg = MonitorConfig {
        location: options.location.clone(),
        dest_phone: options.dest_phone.clone(),
        period: options.period,
        digest_every: options.digest_every,
        log_path: options.log_path.clone(),
        alert_mode: options.alert_mode,
        sensing: SensingConfig { light_mode: options.light_mode, ..SensingConfig::default() },
    };

    let summary = match options.fixed_clock {
        Some(instant) => run_monitor(frames, &cfg, &mut session, &FixedClock::new(instant)),
        None => run_monitor(frames, &cfg, &mut session, &SystemClock),
    }
    .map_err(|e| fatal("monitor")(&e))?;

    let (outbox_size, export) = host.with_modem(|m| (m.outbox().len(), m.export_outbox()));
    if let Some(path) = &options.outbox_path {
        std::fs::write(path, export).map_err(|e| fatal("outbox export")(&e))?;
    }
    host.shutdown();

    writeln!(
        out,
        "rounds={} alerts={} outbox={}",
        summary.rounds, summary.alerts_sent, outbox_size
    )
    .map_err(|e| fatal("summary output")(&e))?;

    Ok(RunReport { rounds: summary.rounds, alerts_sent: summary.alerts_sent, outbox_size })
}

/// Debug REPL against a fresh emulated modem: each input line is sent with
/// a trailing carriage return, `/end` sends the Ctrl-Z body terminator, and
/// `/quit` (or end of input) exits.
pub fn at_console(input: &mut dyn BufRead, output: &mut dyn Write) -> io::Result<()> {
    let mut modem = Modem::new();
    let mut line = String::new();
    loop {
        line.clear();
        if input.read_line(&mut line)? == 0 {
            return Ok(());
        }
        let entry = line.trim_end_matches(['\r', '\n']);
        let reply = match entry {
            "/quit" => return Ok(()),
            "/end" => modem.feed(&[0x1a]),
            _ => {
                let mut bytes = entry.as_bytes().to_vec();
                bytes.push(b'\r');
                modem.feed(&bytes)
            }
        };
        print_legibly(&reply, output)?;
    }
}

/// Render raw modem output for a terminal: line-separator bytes collapse,
/// each nonempty segment prints on its own line.
fn print_legibly(bytes: &[u8], output: &mut dyn Write) -> io::Result<()> {
    for segment in bytes.split(|&b| b == b'\r' || b == b'\n') {
        if segment.is_empty() {
            continue;
        }
        output.write_all(segment)?;
        output.write_all(b"\n")?;
    }
    output.flush()
}
