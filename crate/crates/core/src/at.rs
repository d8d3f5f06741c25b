//! The shared AT-command grammar: command framing and parsing, response
//! classification, and the byte conventions spoken on both sides of the
//! link.
//!
//! Commands are single CR-terminated lines beginning with `AT`
//! (case-insensitive). Responses are framed as CR LF text CR LF, except the
//! SMS prompt, which is CR LF `"> "` with no terminator.

use thiserror::Error;

/// Command terminator (carriage return).
pub const CR: u8 = 0x0d;
/// Line feed; appears only in response framing.
pub const LF: u8 = 0x0a;
/// Ctrl-Z, terminates an SMS body in text mode.
pub const SMS_TERMINATOR: u8 = 0x1a;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AtError {
    #[error("command line does not start with AT")]
    MissingAtPrefix,
    #[error("command line is not terminated by a carriage return")]
    MissingTerminator,
    #[error("invalid command argument: {0}")]
    InvalidArgument(String),
    #[error("sms body may not contain byte {0:#04x}")]
    ForbiddenBodyByte(u8),
}

/// SMS encoding selected by AT+CMGF.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageMode {
    Pdu,
    Text,
}

impl MessageMode {
    fn digit(self) -> char {
        match self {
            MessageMode::Pdu => '0',
            MessageMode::Text => '1',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AtCommand {
    /// Bare `AT` liveness probe.
    Ping,
    /// `AT+COPS?` operator query.
    QueryOperator,
    /// `ATD<number>;` voice dial.
    Dial(String),
    /// `ATH` hang up.
    Hangup,
    /// `AT+CMGF=<0|1>` message-mode select.
    SetMessageMode(MessageMode),
    /// `AT+CMGS="<number>"` begin SMS submission.
    BeginSendSms(String),
    /// Any other AT line, preserved verbatim including the CR.
    Unknown(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AtResponse {
    FinalOk,
    FinalError,
    /// Informational line, e.g. the +COPS operator report.
    Intermediate(String),
    /// `"> "`: the modem is ready for SMS body bytes.
    SmsPrompt,
    /// `+CMGS: <n>`: message accepted with reference n.
    SendConfirm(u32),
}

impl AtResponse {
    /// OK and ERROR end a command exchange.
    pub fn is_final(&self) -> bool {
        matches!(self, AtResponse::FinalOk | AtResponse::FinalError)
    }
}

/// Digits with an optional leading '+'.
pub fn is_valid_phone_number(number: &str) -> bool {
    let digits = number.strip_prefix('+').unwrap_or(number);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

fn checked_number(number: &str) -> Result<&str, AtError> {
    if is_valid_phone_number(number) {
        Ok(number)
    } else {
        Err(AtError::InvalidArgument(format!("invalid phone number {number:?}")))
    }
}

/// Emit the canonical CR-terminated byte form of a command.
pub fn frame_command(command: &AtCommand) -> Result<Vec<u8>, AtError> {
    let line = match command {
        AtCommand::Ping => "AT".to_string(),
        AtCommand::QueryOperator => "AT+COPS?".to_string(),
        AtCommand::Dial(number) => format!("ATD{};", checked_number(number)?),
        AtCommand::Hangup => "ATH".to_string(),
        AtCommand::SetMessageMode(mode) => format!("AT+CMGF={}", mode.digit()),
        AtCommand::BeginSendSms(number) => format!("AT+CMGS=\"{}\"", checked_number(number)?),
        AtCommand::Unknown(_) => {
            return Err(AtError::InvalidArgument(
                "unrecognized commands cannot be framed".into(),
            ))
        }
    };
    let mut bytes = line.into_bytes();
    bytes.push(CR);
    Ok(bytes)
}

/// Parse one CR-terminated command line. The verbs are matched
/// case-insensitively; any other well-framed AT line comes back as
/// [`AtCommand::Unknown`] with the raw bytes preserved.
pub fn parse_command_line(line: &[u8]) -> Result<AtCommand, AtError> {
    if line.last() != Some(&CR) {
        return Err(AtError::MissingTerminator);
    }
    let body = &line[..line.len() - 1];
    if body.len() < 2 || !body[..2].eq_ignore_ascii_case(b"AT") {
        return Err(AtError::MissingAtPrefix);
    }
    let unknown = || AtCommand::Unknown(line.to_vec());
    let rest = match std::str::from_utf8(&body[2..]) {
        Ok(text) => text,
        Err(_) => return Ok(unknown()),
    };
    if rest.is_empty() {
        return Ok(AtCommand::Ping);
    }
    let upper = rest.to_ascii_uppercase();
    let command = if upper == "+COPS?" {
        AtCommand::QueryOperator
    } else if upper == "H" {
        AtCommand::Hangup
    } else if upper.starts_with('D') {
        // The canonical dial form carries a trailing ';'; it is also accepted
        // without one.
        let number = rest[1..].strip_suffix(';').unwrap_or(&rest[1..]);
        if is_valid_phone_number(number) {
            AtCommand::Dial(number.to_string())
        } else {
            return Ok(unknown());
        }
    } else if let Some(mode) = upper.strip_prefix("+CMGF=") {
        match mode {
            "0" => AtCommand::SetMessageMode(MessageMode::Pdu),
            "1" => AtCommand::SetMessageMode(MessageMode::Text),
            _ => return Ok(unknown()),
        }
    } else if upper.starts_with("+CMGS=") {
        let argument = &rest["+CMGS=".len()..];
        match argument.strip_prefix('"').and_then(|a| a.strip_suffix('"')) {
            Some(number) if is_valid_phone_number(number) => {
                AtCommand::BeginSendSms(number.to_string())
            }
            _ => return Ok(unknown()),
        }
    } else {
        return Ok(unknown());
    };
    Ok(command)
}

/// Classify one unframed response line (or the bare prompt). Total: lines
/// matching no known shape come back as [`AtResponse::Intermediate`].
pub fn classify_response_line(line: &[u8]) -> AtResponse {
    match line {
        b"OK" => AtResponse::FinalOk,
        b"ERROR" => AtResponse::FinalError,
        b">" | b"> " => AtResponse::SmsPrompt,
        _ => {
            if let Some(rest) = line.strip_prefix(b"+CMGS: ") {
                if let Some(reference) = std::str::from_utf8(rest)
                    .ok()
                    .and_then(|text| text.parse::<u32>().ok())
                {
                    return AtResponse::SendConfirm(reference);
                }
            }
            AtResponse::Intermediate(String::from_utf8_lossy(line).into_owned())
        }
    }
}

/// Frame a response the way the modem puts it on the wire.
pub fn render_response(response: &AtResponse) -> Vec<u8> {
    match response {
        AtResponse::FinalOk => b"\r\nOK\r\n".to_vec(),
        AtResponse::FinalError => b"\r\nERROR\r\n".to_vec(),
        AtResponse::Intermediate(text) => format!("\r\n{text}\r\n").into_bytes(),
        AtResponse::SmsPrompt => b"\r\n> ".to_vec(),
        AtResponse::SendConfirm(reference) => format!("\r\n+CMGS: {reference}\r\n").into_bytes(),
    }
}

/// Append the Ctrl-Z terminator to an SMS body. The body itself must not
/// contain CR or Ctrl-Z.
pub fn terminate_sms_body(body: &str) -> Result<Vec<u8>, AtError> {
    for &byte in body.as_bytes() {
        if byte == CR || byte == SMS_TERMINATOR {
            return Err(AtError::ForbiddenBodyByte(byte));
        }
    }
    let mut bytes = body.as_bytes().to_vec();
    bytes.push(SMS_TERMINATOR);
    Ok(bytes)
}

/// Incremental splitter for the response stream: feed raw link bytes, pop
/// classified responses. Understands CR LF framed lines and the
/// unterminated `"> "` prompt.
#[derive(Debug, Default)]
pub struct ResponseScanner {
    buffer: Vec<u8>,
}

impl ResponseScanner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn feed(&mut self, bytes: &[u8]) {
        self.buffer.extend_from_slice(bytes);
    }

    /// Discard anything buffered (stale input from a previous exchange).
    pub fn reset(&mut self) {
        self.buffer.clear();
    }

    pub fn next_response(&mut self) -> Option<AtResponse> {
        loop {
            let skip = self
                .buffer
                .iter()
                .take_while(|&&b| b == CR || b == LF)
                .count();
            self.buffer.drain(..skip);
            if self.buffer.starts_with(b"> ") {
                self.buffer.drain(..2);
                return Some(AtResponse::SmsPrompt);
            }
            let end = self.buffer.iter().position(|&b| b == CR)?;
            let mut line: Vec<u8> = self.buffer.drain(..=end).collect();
            line.pop();
            if !line.is_empty() {
                return Some(classify_response_line(&line));
            }
        }
    }
}
