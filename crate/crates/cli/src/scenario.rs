//! Scenario files: scripted ADC readings that stand in for real sensors.
//!
//! One reading per line, `round,adc0,adc1,adc2,adc3`, with `#` comments and
//! a `repeat <n>` directive that plays the previous reading `n` more times.
//! The round column is a row label kept strictly increasing from 0 so
//! hand-edited files fail loudly when rows are dropped or duplicated; the
//! monitor numbers rounds by position.

use std::path::Path;

use amsms_core::sensing::AdcFrame;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("scenario line {line}: {message}")]
    Invalid { line: usize, message: String },
}

impl ScenarioError {
    fn invalid(line: usize, message: impl Into<String>) -> Self {
        Self::Invalid { line, message: message.into() }
    }
}

pub fn parse_scenario(path: &Path) -> Result<Vec<AdcFrame>, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario_str(&text)
}

pub fn parse_scenario_str(text: &str) -> Result<Vec<AdcFrame>, ScenarioError> {
    let mut frames = Vec::new();
    // Label of the most recent row, synthesized labels included.
    let mut last_round: Option<u64> = None;
    let mut last_values: Option<[u16; 4]> = None;

    for (index, raw_line) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }

        if let Some(rest) = line.strip_prefix("repeat") {
            let rest = rest.trim();
            let count: u64 = rest.parse().map_err(|_| {
                ScenarioError::invalid(
                    line_no,
                    format!("repeat needs a non-negative count, got {rest:?}"),
                )
            })?;
            let values = last_values.ok_or_else(|| {
                ScenarioError::invalid(line_no, "repeat has no previous reading to duplicate")
            })?;
            let mut round = last_round.expect("a previous reading implies a previous round");
            for _ in 0..count {
                round += 1;
                frames.push(frame_from(values, line_no)?);
            }
            last_round = Some(round);
            continue;
        }

        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(ScenarioError::invalid(
                line_no,
                format!(
                    "expected 5 comma-separated fields (round,adc0,adc1,adc2,adc3), got {}",
                    fields.len()
                ),
            ));
        }

        let round: u64 = fields[0].parse().map_err(|_| {
            ScenarioError::invalid(line_no, format!("round {:?} is not a number", fields[0]))
        })?;
        let mut values = [0u16; 4];
        for (channel, field) in fields[1..].iter().enumerate() {
            let value: u32 = field.parse().map_err(|_| {
                ScenarioError::invalid(
                    line_no,
                    format!("adc{channel} value {field:?} is not a number"),
                )
            })?;
            if value > 1023 {
                return Err(ScenarioError::invalid(
                    line_no,
                    format!("adc{channel} value {value} is outside 0..=1023"),
                ));
            }
            values[channel] = value as u16;
        }

        match last_round {
            None if round != 0 => {
                return Err(ScenarioError::invalid(
                    line_no,
                    format!("first round must be 0, got {round}"),
                ));
            }
            Some(previous) if round <= previous => {
                return Err(ScenarioError::invalid(
                    line_no,
                    format!("round {round} does not increase on previous round {previous}"),
                ));
            }
            _ => {}
        }

        frames.push(frame_from(values, line_no)?);
        last_round = Some(round);
        last_values = Some(values);
    }

    Ok(frames)
}

fn frame_from(values: [u16; 4], line_no: usize) -> Result<AdcFrame, ScenarioError> {
    AdcFrame::new(values[0], values[1], values[2], values[3])
        .map_err(|err| ScenarioError::invalid(line_no, err.to_string()))
}
