//! Simulated GSM modem: a byte-in, byte-out state machine speaking the
//! command grammar in [`crate::at`].
//!
//! The modem boots in PDU message mode with no call in progress. Text-mode
//! SMS submission (`AT+CMGF=1`, then `AT+CMGS="<number>"`, prompt, body,
//! Ctrl-Z) lands messages in an inspectable outbox with strictly increasing
//! reference numbers. Behaviour is deterministic: the same byte stream
//! always yields the same responses and outbox.

use crate::at::{
    parse_command_line, AtCommand, AtResponse, MessageMode, CR, LF, SMS_TERMINATOR,
};

/// Longest accepted command line (terminator included); anything longer is
/// answered with ERROR and discarded.
pub const MAX_LINE: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallState {
    Idle,
    /// Voice call placed to the contained number.
    Active(String),
}

/// Injectable misbehaviours for exercising client-side recovery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Consume input silently: no processing, no output.
    Mute,
    /// Answer every command line with ERROR and perform no state changes.
    ErrorAll,
    /// Swallow `AT+CMGS` without the prompt; other commands act normally.
    DropPrompt,
}

/// A text-mode message accepted by the modem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveredSms {
    pub destination: String,
    pub body: String,
    pub reference: u32,
    /// Count of bytes the modem had consumed when the message completed;
    /// serves as a deterministic submission timestamp.
    pub accepted_at: u64,
}

enum Input {
    /// Accumulating a command line up to CR.
    Command { line: Vec<u8>, overflowed: bool },
    /// Between prompt and Ctrl-Z of an SMS body.
    SmsBody { destination: String, body: Vec<u8> },
}

pub struct Modem {
    input: Input,
    message_mode: MessageMode,
    call: CallState,
    operator: String,
    outbox: Vec<DeliveredSms>,
    next_reference: u32,
    fault: Option<Fault>,
    consumed: u64,
}

impl Default for Modem {
    fn default() -> Self {
        Self::new()
    }
}

impl Modem {
    pub fn new() -> Self {
        Self {
            input: Input::Command { line: Vec::new(), overflowed: false },
            message_mode: MessageMode::Pdu,
            call: CallState::Idle,
            operator: "TH GSM".to_string(),
            outbox: Vec::new(),
            next_reference: 1,
            fault: None,
            consumed: 0,
        }
    }

    pub fn message_mode(&self) -> MessageMode {
        self.message_mode
    }

    pub fn call_state(&self) -> &CallState {
        &self.call
    }

    pub fn outbox(&self) -> &[DeliveredSms] {
        &self.outbox
    }

    pub fn inject_fault(&mut self, fault: Fault) {
        self.fault = Some(fault);
    }

    pub fn clear_fault(&mut self) {
        self.fault = None;
    }

    /// One row per accepted message: `<reference>\t<destination>\t<body>\n`.
    pub fn export_outbox(&self) -> String {
        let mut out = String::new();
        for sms in &self.outbox {
            out.push_str(&format!("{}\t{}\t{}\n", sms.reference, sms.destination, sms.body));
        }
        out
    }

    /// Feed raw bytes from the serial side; returns whatever response bytes
    /// the modem emits for them.
    pub fn feed(&mut self, bytes: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        for &byte in bytes {
            self.consumed += 1;
            if matches!(self.fault, Some(Fault::Mute)) {
                continue;
            }
            match &mut self.input {
                Input::Command { line, overflowed } => {
                    // A stray LF between CR-terminated lines is line noise.
                    if line.is_empty() && byte == LF {
                        continue;
                    }
                    if line.len() >= MAX_LINE {
                        *overflowed = true;
                    }
                    if *overflowed {
                        if byte == CR {
                            self.input = Input::Command { line: Vec::new(), overflowed: false };
                            out.extend(render_all(&[AtResponse::FinalError]));
                        }
                        continue;
                    }
                    line.push(byte);
                    if byte == CR {
                        let line = std::mem::take(line);
                        // An empty line (bare CR) is ignored, matching
                        // modems that tolerate blank input.
                        if line.len() > 1 {
                            let responses = self.handle_line(&line);
                            out.extend(render_all(&responses));
                        } else {
                            self.input =
                                Input::Command { line: Vec::new(), overflowed: false };
                        }
                    }
                }
                Input::SmsBody { destination, body } => {
                    if byte == SMS_TERMINATOR {
                        let destination = destination.clone();
                        let mut body = std::mem::take(body);
                        // Terminals often send CR before Ctrl-Z; it is not
                        // part of the message text.
                        if body.last() == Some(&CR) {
                            body.pop();
                        }
                        self.input = Input::Command { line: Vec::new(), overflowed: false };
                        let responses = self.accept_sms(destination, body);
                        out.extend(render_all(&responses));
                    } else {
                        body.push(byte);
                    }
                }
            }
        }
        out
    }

    fn handle_line(&mut self, line: &[u8]) -> Vec<AtResponse> {
        self.input = Input::Command { line: Vec::new(), overflowed: false };
        if matches!(self.fault, Some(Fault::ErrorAll)) {
            return vec![AtResponse::FinalError];
        }
        match parse_command_line(line) {
            Ok(command) => self.handle_command(command),
            Err(_) => vec![AtResponse::FinalError],
        }
    }

    /// Apply one parsed command. Exposed for direct-drive tests; the wire
    /// path goes through [`Modem::feed`].
    pub fn handle_command(&mut self, command: AtCommand) -> Vec<AtResponse> {
        match command {
            AtCommand::Ping => vec![AtResponse::FinalOk],
            AtCommand::QueryOperator => vec![
                AtResponse::Intermediate(format!("+COPS: 0,0,\"{}\"", self.operator)),
                AtResponse::FinalOk,
            ],
            AtCommand::Dial(number) => {
                self.call = CallState::Active(number);
                vec![AtResponse::FinalOk]
            }
            AtCommand::Hangup => {
                self.call = CallState::Idle;
                vec![AtResponse::FinalOk]
            }
            AtCommand::SetMessageMode(mode) => {
                self.message_mode = mode;
                vec![AtResponse::FinalOk]
            }
            AtCommand::BeginSendSms(destination) => {
                if self.message_mode != MessageMode::Text {
                    return vec![AtResponse::FinalError];
                }
                if matches!(self.fault, Some(Fault::DropPrompt)) {
                    // Swallow the command entirely; the modem stays in
                    // command mode so later traffic still works.
                    return Vec::new();
                }
                self.input = Input::SmsBody { destination, body: Vec::new() };
                vec![AtResponse::SmsPrompt]
            }
            AtCommand::Unknown(_) => vec![AtResponse::FinalError],
        }
    }

    fn accept_sms(&mut self, destination: String, body: Vec<u8>) -> Vec<AtResponse> {
        let reference = self.next_reference;
        self.next_reference += 1;
        self.outbox.push(DeliveredSms {
            destination,
            body: String::from_utf8_lossy(&body).into_owned(),
            reference,
            accepted_at: self.consumed,
        });
        vec![AtResponse::SendConfirm(reference), AtResponse::FinalOk]
    }
}

fn render_all(responses: &[AtResponse]) -> Vec<u8> {
    let mut out = Vec::new();
    for response in responses {
        out.extend(crate::at::render_response(response));
    }
    out
}
