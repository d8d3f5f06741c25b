use std::io;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use chrono::NaiveDateTime;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use amsms_cli::{at_console, run, RunError, RunOptions};
use amsms_core::at::is_valid_phone_number;
use amsms_core::monitor::AlertMode;
use amsms_core::sensing::LightMode;

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_SCENARIO: u8 = 2;
const EXIT_FATAL: u8 = 3;

/// Environment monitoring simulator: scripted sensors, an emulated GSM
/// modem, and SMS alerts delivered to a virtual outbox.
#[derive(Parser)]
#[command(name = "amsms", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario through the monitor and emulated modem
    Run(RunArgs),
    /// Interactive AT-command console against a fresh emulated modem
    Console,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file of ADC readings (round,adc0,adc1,adc2,adc3)
    #[arg(long, value_name = "PATH")]
    scenario: PathBuf,

    /// Destination phone number for alerts (digits, optional leading '+')
    #[arg(long, value_name = "NUMBER", value_parser = parse_phone)]
    dest_phone: String,

    /// Site label stamped into every alert
    #[arg(long, default_value = "Lab-A", value_name = "TEXT")]
    location: String,

    /// Report log file path
    #[arg(long, default_value = "report.txt", value_name = "PATH")]
    log: PathBuf,

    /// Delay between rounds in milliseconds (0 = back-to-back)
    #[arg(long, default_value_t = 0, value_name = "MS")]
    period_ms: u64,

    /// Ambient light profile selecting the trespass threshold
    #[arg(long, value_enum, default_value_t = LightModeArg::Room)]
    light_mode: LightModeArg,

    /// When to send alerts
    #[arg(long, value_enum, default_value_t = AlertModeArg::Edge)]
    alert_mode: AlertModeArg,

    /// Send a status digest every N rounds in edge mode (0 = never)
    #[arg(long, default_value_t = 0, value_name = "N")]
    digest_every: u64,

    /// Export the emulator outbox to this file after the run
    #[arg(long, value_name = "PATH")]
    outbox: Option<PathBuf>,

    /// Freeze alert timestamps (e.g. 2013-11-05T14:21:00) for
    /// reproducible runs
    #[arg(long, value_name = "TIMESTAMP", value_parser = parse_fixed_clock)]
    fixed_clock: Option<NaiveDateTime>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LightModeArg {
    Room,
    Sun,
}

impl From<LightModeArg> for LightMode {
    fn from(arg: LightModeArg) -> Self {
        match arg {
            LightModeArg::Room => LightMode::Room,
            LightModeArg::Sun => LightMode::Sun,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlertModeArg {
    Edge,
    #[value(name = "every_round")]
    EveryRound,
}

impl From<AlertModeArg> for AlertMode {
    fn from(arg: AlertModeArg) -> Self {
        match arg {
            AlertModeArg::Edge => AlertMode::EdgeTriggered,
            AlertModeArg::EveryRound => AlertMode::EveryRound,
        }
    }
}

fn parse_phone(value: &str) -> Result<String, String> {
    if is_valid_phone_number(value) {
        Ok(value.to_string())
    } else {
        Err(format!("{value:?} is not a phone number (digits, optional leading '+')"))
    }
}

fn parse_fixed_clock(value: &str) -> Result<NaiveDateTime, String> {
    NaiveDateTime::parse_from_str(value, "%Y-%m-%dT%H:%M:%S")
        .map_err(|err| format!("{value:?} is not a YYYY-MM-DDThh:mm:ss timestamp: {err}"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version are successful exits; everything else is a
            // usage problem.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Console => cmd_console(),
    }
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let options = RunOptions {
        scenario: args.scenario,
        dest_phone: args.dest_phone,
        location: args.location,
        log_path: args.log,
        period: Duration::from_millis(args.period_ms),
        light_mode: args.light_mode.into(),
        alert_mode: args.alert_mode.into(),
        digest_every: args.digest_every,
        outbox_path: args.outbox,
        fixed_clock: args.fixed_clock,
    };
    match run(&options, &mut io::stdout()) {
        Ok(_) => ExitCode::from(EXIT_OK),
        Err(err @ RunError::Scenario(_)) => {
            eprintln!("amsms: {err}");
            ExitCode::from(EXIT_SCENARIO)
        }
        Err(err @ RunError::Fatal { .. }) => {
            eprintln!("amsms: {err}");
            ExitCode::from(EXIT_FATAL)
        }
    }
}

fn cmd_console() -> ExitCode {
    let stdin = io::stdin();
    match at_console(&mut stdin.lock(), &mut io::stdout()) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(err) => {
            eprintln!("amsms: console failure: {err}");
            ExitCode::from(EXIT_FATAL)
        }
    }
}
