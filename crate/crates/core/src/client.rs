//! Command-side session for driving a modem over a link: framing, response
//! collection, timeouts, and the text-mode SMS send sequence.

use std::time::{Duration, Instant};

use crate::at::{
    frame_command, is_valid_phone_number, terminate_sms_body, AtCommand, AtError, AtResponse,
    MessageMode, ResponseScanner,
};
use crate::monitor::SmsSink;
use crate::transport::{LinkEndpoint, LinkError};

pub const DEFAULT_RESPONSE_TIMEOUT: Duration = Duration::from_millis(5000);

pub use crate::monitor::MAX_SMS_CHARS;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("no final response before the timeout")]
    Timeout,
    #[error("link failure: {0}")]
    Link(#[from] LinkError),
    #[error("protocol violation: {0}")]
    Protocol(#[from] AtError),
    #[error("modem rejected the command")]
    CallRejected,
    #[error("modem rejected the message")]
    SendFailed,
    #[error("invalid message body: {0}")]
    InvalidBody(&'static str),
}

pub struct ClientSession {
    endpoint: LinkEndpoint,
    scanner: ResponseScanner,
    response_timeout: Duration,
    /// Text mode is configured lazily before the first send and assumed to
    /// stick for the rest of the session.
    text_mode_ready: bool,
}

impl ClientSession {
    pub fn new(endpoint: LinkEndpoint) -> Self {
        Self {
            endpoint,
            scanner: ResponseScanner::new(),
            response_timeout: DEFAULT_RESPONSE_TIMEOUT,
            text_mode_ready: false,
        }
    }

    pub fn with_response_timeout(mut self, timeout: Duration) -> Self {
        self.response_timeout = timeout;
        self
    }

    pub fn response_timeout(&self) -> Duration {
        self.response_timeout
    }

    /// Drop bytes left over from earlier exchanges (late replies after a
    /// timeout, boot noise) so they cannot be misread as answers to the
    /// next command.
    fn drain_stale_input(&mut self) {
        self.scanner.reset();
        while let Ok(bytes) = self.endpoint.read(256, Duration::ZERO) {
            if bytes.is_empty() {
                break;
            }
        }
    }

    fn write_all(&mut self, mut bytes: &[u8]) -> Result<(), ClientError> {
        let deadline = Instant::now() + self.response_timeout;
        while !bytes.is_empty() {
            let now = Instant::now();
            if now >= deadline {
                return Err(ClientError::Timeout);
            }
            match self.endpoint.write(bytes, deadline - now) {
                Ok(written) => bytes = &bytes[written..],
                Err(LinkError::WouldBlock) => return Err(ClientError::Timeout),
                Err(err) => return Err(err.into()),
            }
        }
        Ok(())
    }

    /// Read and classify responses until `stop` accepts one; returns every
    /// response seen, the accepted one last.
    fn read_until(
        &mut self,
        stop: impl Fn(&AtResponse) -> bool,
    ) -> Result<Vec<AtResponse>, ClientError> {
        let deadline = Instant::now() + self.response_timeout;
        let mut seen = Vec::new();
        loop {
            while let Some(response) = self.scanner.next_response() {
                let done = stop(&response);
                seen.push(response);
                if done {
                    return Ok(seen);
                }
            }
            let now = Instant::now();
            if now >= deadline {
                return Err(ClientError::Timeout);
            }
            let bytes = self.endpoint.read(256, deadline - now)?;
            self.scanner.feed(&bytes);
        }
    }

    /// Send one command and collect responses through the final OK/ERROR.
    pub fn execute(&mut self, command: &AtCommand) -> Result<Vec<AtResponse>, ClientError> {
        self.drain_stale_input();
        let frame = frame_command(command)?;
        self.write_all(&frame)?;
        self.read_until(AtResponse::is_final)
    }

    /// True when the modem answers a bare `AT` with OK; any failure at all
    /// reads as not alive.
    pub fn check_alive(&mut self) -> bool {
        matches!(
            self.execute(&AtCommand::Ping).as_deref(),
            Ok([.., AtResponse::FinalOk])
        )
    }

    pub fn query_operator(&mut self) -> Result<Vec<AtResponse>, ClientError> {
        self.execute(&AtCommand::QueryOperator)
    }

    /// Place a voice call; ERROR from the modem is a rejected call.
    pub fn dial(&mut self, number: &str) -> Result<(), ClientError> {
        let responses = self.execute(&AtCommand::Dial(number.to_string()))?;
        match responses.last() {
            Some(AtResponse::FinalOk) => Ok(()),
            _ => Err(ClientError::CallRejected),
        }
    }

    pub fn hangup(&mut self) -> Result<(), ClientError> {
        let responses = self.execute(&AtCommand::Hangup)?;
        match responses.last() {
            Some(AtResponse::FinalOk) => Ok(()),
            _ => Err(ClientError::CallRejected),
        }
    }

    fn ensure_text_mode(&mut self) -> Result<(), ClientError> {
        if self.text_mode_ready {
            return Ok(());
        }
        let responses =
            self.execute(&AtCommand::SetMessageMode(MessageMode::Text))?;
        match responses.last() {
            Some(AtResponse::FinalOk) => {
                self.text_mode_ready = true;
                Ok(())
            }
            _ => Err(ClientError::SendFailed),
        }
    }

    /// Submit one text-mode message and return the modem's reference
    /// number. The body is validated before anything touches the wire, so
    /// a rejected body leaves the modem untouched.
    pub fn send_sms(&mut self, number: &str, body: &str) -> Result<u32, ClientError> {
        if !is_valid_phone_number(number) {
            return Err(ClientError::InvalidBody("destination number is not valid"));
        }
        if body.chars().count() > MAX_SMS_CHARS {
            return Err(ClientError::InvalidBody("body exceeds 160 characters"));
        }
        let terminated = terminate_sms_body(body).map_err(|err| match err {
            AtError::ForbiddenBodyByte(0x0d) => {
                ClientError::InvalidBody("body must not contain carriage returns")
            }
            AtError::ForbiddenBodyByte(_) => {
                ClientError::InvalidBody("body must not contain the Ctrl-Z terminator")
            }
            other => ClientError::Protocol(other),
        })?;

        self.ensure_text_mode()?;

        self.drain_stale_input();
        let frame = frame_command(&AtCommand::BeginSendSms(number.to_string()))?;
        self.write_all(&frame)?;
        let responses = self.read_until(|r| {
            r.is_final() || matches!(r, AtResponse::SmsPrompt)
        })?;
        match responses.last() {
            Some(AtResponse::SmsPrompt) => {}
            _ => return Err(ClientError::SendFailed),
        }

        self.write_all(&terminated)?;
        let responses = self.read_until(AtResponse::is_final)?;
        if !matches!(responses.last(), Some(AtResponse::FinalOk)) {
            return Err(ClientError::SendFailed);
        }
        let reference = responses.iter().find_map(|r| match r {
            AtResponse::SendConfirm(reference) => Some(*reference),
            _ => None,
        });
        reference.ok_or(ClientError::SendFailed)
    }
}

impl SmsSink for ClientSession {
    fn send(&mut self, destination: &str, body: &str) -> Result<u32, ClientError> {
        self.send_sms(destination, body)
    }
}
