//! Acceptance checks for the whole stack, one test per criterion. Each
//! test prints a PASS line (visible with `--nocapture`) and enforces its
//! own runtime budget; a failed assertion is the FAIL signal.

use std::process::Command;
use std::time::{Duration, Instant};

use amsms_cli::{run, RunOptions};
use amsms_core::client::{ClientError, ClientSession};
use amsms_core::emulator::{CallState, Fault, Modem};
use amsms_core::host::EmulatorHost;
use amsms_core::monitor::{AlertMode, AlertPolicy};
use amsms_core::sensing::{
    encode_status, raw_to_millivolts, raw_to_reference_temperature, DetectionFlags, LightMode,
    StatusByte,
};
use amsms_core::transport::{create_link, LinkConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FIXED_CLOCK: &str = "2013-11-05T14:21:00";

fn finish(start: Instant, budget: Duration, line: &str) {
    let elapsed = start.elapsed();
    assert!(
        elapsed <= budget,
        "{line} exceeded its {budget:?} budget (took {elapsed:?})"
    );
    println!("PASS {line} [{elapsed:?}]");
}

fn flags(smoke: bool, overheat: bool, trespass: bool) -> DetectionFlags {
    DetectionFlags { smoke, overheat, trespass }
}

/// Criterion 1: the status byte over all eight flag combinations matches
/// the published condition table and a bit-packing oracle.
#[test]
fn check_01_status_truth_table() {
    let start = Instant::now();

    let published_table = [
        (false, false, false, 0u8),
        (true, false, false, 1),
        (false, true, false, 2),
        (true, true, false, 3),
        (false, false, true, 4),
        (true, false, true, 5),
        (false, true, true, 6),
        (true, true, true, 7),
    ];
    for (smoke, overheat, trespass, expected) in published_table {
        let status = encode_status(flags(smoke, overheat, trespass));
        assert_eq!(status.value(), expected, "row ({smoke},{overheat},{trespass})");

        let oracle = u8::from(smoke) | (u8::from(overheat) << 1) | (u8::from(trespass) << 2);
        assert_eq!(status.value(), oracle, "bit-packing oracle disagrees");
    }

    finish(start, Duration::from_secs(1), "criterion 1: status truth table");
}

/// Criterion 2: both ADC conversions agree with an exact-rational
/// truncating oracle on every raw code, including the boundary values.
#[test]
fn check_02_conversion_oracle() {
    let start = Instant::now();

    // Floor characterization: v = floor(num/den) iff v*den <= num < (v+1)*den.
    let is_floor_of = |value: u128, numerator: u128, denominator: u128| {
        value * denominator <= numerator && numerator < (value + 1) * denominator
    };

    for raw in 0u16..=1023 {
        let mv = raw_to_millivolts(raw).unwrap().get() as u128;
        assert!(
            is_floor_of(mv, 3300 * raw as u128, 1023),
            "raw {raw}: {mv} mV is not floor(3300*{raw}/1023)"
        );

        let reference = raw_to_reference_temperature(raw).unwrap().get() as u128;
        assert!(
            is_floor_of(reference, 100 * raw as u128, 1023),
            "raw {raw}: {reference} C is not floor(100*{raw}/1023)"
        );
    }

    assert_eq!(raw_to_millivolts(0).unwrap().get(), 0);
    assert_eq!(raw_to_millivolts(1023).unwrap().get(), 3300);
    assert_eq!(raw_to_reference_temperature(0).unwrap().get(), 0);
    assert_eq!(raw_to_reference_temperature(1023).unwrap().get(), 100);

    finish(start, Duration::from_secs(1), "criterion 2: conversion oracle");
}

/// Criterion 3: the scenario row (1023, 93, 1023, 646) produces the known
/// report log byte for byte.
#[test]
fn check_03_golden_log() {
    let start = Instant::now();

    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("scenario.txt");
    std::fs::write(&scenario, "0,1023,93,1023,646\n").unwrap();
    let options = RunOptions {
        scenario,
        dest_phone: "0895092020".to_string(),
        location: "Lab-A".to_string(),
        log_path: dir.path().join("report.txt"),
        period: Duration::ZERO,
        light_mode: LightMode::Room,
        alert_mode: AlertMode::EdgeTriggered,
        digest_every: 0,
        outbox_path: None,
        fixed_clock: Some(fixed_instant()),
    };
    run(&options, &mut Vec::<u8>::new()).unwrap();

    let produced = std::fs::read(&options.log_path).unwrap();
    let golden = include_bytes!("golden/round0_log.txt");
    assert_eq!(
        produced,
        golden,
        "log differs from golden file:\n{}",
        String::from_utf8_lossy(&produced)
    );

    finish(start, Duration::from_secs(1), "criterion 3: golden log");
}

/// Criterion 4: the documented command sequence gets the documented
/// responses, with the call state switching where it should.
#[test]
fn check_04_transcript_conformance() {
    let start = Instant::now();
    let mut modem = Modem::new();

    assert_eq!(modem.feed(b"AT\r"), b"\r\nOK\r\n");

    assert_eq!(
        modem.feed(b"AT+COPS?\r"),
        b"\r\n+COPS: 0,0,\"TH GSM\"\r\n\r\nOK\r\n"
    );

    assert_eq!(modem.feed(b"ATD0895092020\r"), b"\r\nOK\r\n");
    assert_eq!(modem.call_state(), &CallState::Active("0895092020".to_string()));

    assert_eq!(modem.feed(b"ATH\r"), b"\r\nOK\r\n");
    assert_eq!(modem.call_state(), &CallState::Idle);

    assert_eq!(modem.feed(b"AT+CMGF=1\r"), b"\r\nOK\r\n");

    assert_eq!(modem.feed(b"AT+CMGS=\"0895092020\"\r"), b"\r\n> ");

    assert_eq!(
        modem.feed(b"Warning! Smoke Detected !\x1a"),
        b"\r\n+CMGS: 1\r\n\r\nOK\r\n"
    );
    assert_eq!(modem.outbox().len(), 1);

    finish(start, Duration::from_secs(1), "criterion 4: transcript conformance");
}

/// Criterion 5: an end-to-end run over a trespass scenario delivers
/// exactly one SMS carrying location, timestamp, temperature, and summary
/// within the single-message budget.
#[test]
fn check_05_end_to_end_sms() {
    let start = Instant::now();

    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("scenario.txt");
    std::fs::write(&scenario, "0,1023,93,1023,646\n").unwrap();
    let outbox_path = dir.path().join("outbox.tsv");
    let options = RunOptions {
        scenario,
        dest_phone: "0895092020".to_string(),
        location: "Lab-A".to_string(),
        log_path: dir.path().join("report.txt"),
        period: Duration::ZERO,
        light_mode: LightMode::Room,
        alert_mode: AlertMode::EdgeTriggered,
        digest_every: 0,
        outbox_path: Some(outbox_path.clone()),
        fixed_clock: Some(fixed_instant()),
    };
    let report = run(&options, &mut Vec::<u8>::new()).unwrap();
    assert_eq!(report.outbox_size, 1);

    let export = std::fs::read_to_string(&outbox_path).unwrap();
    let records: Vec<&str> = export.lines().collect();
    assert_eq!(records.len(), 1, "expected exactly one outbox record");
    let fields: Vec<&str> = records[0].split('\t').collect();
    assert_eq!(fields.len(), 3);
    assert_eq!(fields[1], "0895092020");
    let body = fields[2];
    assert!(body.contains("Lab-A"), "missing location in {body:?}");
    assert!(body.contains(FIXED_CLOCK), "missing timestamp in {body:?}");
    assert!(body.contains("T=30C"), "missing temperature in {body:?}");
    assert!(body.contains("Trespassing"), "missing status summary in {body:?}");
    assert!(body.chars().count() <= 160, "body exceeds one SMS: {body:?}");

    finish(start, Duration::from_secs(1), "criterion 5: end-to-end SMS");
}

/// Criterion 6: 10,000 bytes survive random chunking, random reads, and
/// random CTS toggles without loss or reordering, for 100 seeds.
#[test]
fn check_06_flow_control_conservation() {
    let start = Instant::now();
    const PAYLOAD: usize = 10_000;

    for seed in 0u64..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let capacity = rng.gen_range(1usize..=256);
        let (writer, reader) =
            create_link(LinkConfig { buffer_capacity: capacity, ..LinkConfig::default() })
                .unwrap();

        let data: Vec<u8> = (0..PAYLOAD).map(|_| rng.gen()).collect();
        let mut written = 0;
        let mut received = Vec::with_capacity(PAYLOAD);
        let mut steps = 0u32;
        while received.len() < PAYLOAD {
            steps += 1;
            assert!(steps < 2_000_000, "seed {seed}: transfer stalled");

            // Random flow-control interference from the receiving side.
            if rng.gen_bool(0.05) {
                reader.set_cts(rng.gen_bool(0.5));
            }
            if written < PAYLOAD && rng.gen_bool(0.7) {
                let chunk = rng.gen_range(1usize..=257).min(PAYLOAD - written);
                match writer.write(&data[written..written + chunk], Duration::ZERO) {
                    Ok(n) => written += n,
                    Err(amsms_core::transport::LinkError::WouldBlock) => {}
                    Err(err) => panic!("seed {seed}: write failed: {err}"),
                }
            }
            if rng.gen_bool(0.9) {
                let want = rng.gen_range(1usize..=97);
                received.extend(reader.read(want, Duration::ZERO).unwrap());
            }
            // Never leave CTS down once everything is written, so the
            // drain always completes.
            if written == PAYLOAD {
                reader.set_cts(true);
            }
        }

        assert_eq!(received, data, "seed {seed}: corrupted or reordered transfer");
        assert_eq!(writer.stats().bytes_written, PAYLOAD as u64);
        assert_eq!(reader.stats().bytes_read, PAYLOAD as u64);
    }

    finish(start, Duration::from_secs(10), "criterion 6: flow-control conservation");
}

/// Criterion 7: alert counts over random status sequences match the hand
/// oracle for both policies.
#[test]
fn check_07_alert_policy_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20130516);

    for _ in 0..1000 {
        let statuses: Vec<u8> = (0..rng.gen_range(0usize..48)).map(|_| rng.gen_range(0..8)).collect();

        let mut edge = AlertPolicy::new(AlertMode::EdgeTriggered);
        let mut every = AlertPolicy::new(AlertMode::EveryRound);
        let mut edge_count = 0u32;
        let mut every_count = 0u32;
        for (round, &status) in statuses.iter().enumerate() {
            let status_byte = StatusByte::new(status).unwrap();
            if edge.should_send(status_byte, round as u64, 0) {
                edge_count += 1;
            }
            if every.should_send(status_byte, round as u64, 0) {
                every_count += 1;
            }
        }

        // Hand oracle, written against the rule as stated: edge mode
        // counts rounds whose status has a bit absent from the previous
        // round; every_round counts nonzero rounds.
        let mut previous = 0u8;
        let mut edge_expected = 0u32;
        let mut every_expected = 0u32;
        for &status in &statuses {
            if status & !previous != 0 {
                edge_expected += 1;
            }
            if status != 0 {
                every_expected += 1;
            }
            previous = status;
        }

        assert_eq!(edge_count, edge_expected, "edge mismatch on {statuses:?}");
        assert_eq!(every_count, every_expected, "every_round mismatch on {statuses:?}");
    }

    finish(start, Duration::from_secs(5), "criterion 7: alert policy oracle");
}

/// Criterion 8: a muted modem reads as dead and recovers once healthy; a
/// dropped prompt times the send out without touching the outbox.
#[test]
fn check_08_fault_recovery() {
    let start = Instant::now();
    let short_timeout = Duration::from_millis(250);

    // Mute: dead while faulted, alive again after recovery.
    let (client_end, modem_end) = create_link(LinkConfig::default()).unwrap();
    let host = EmulatorHost::spawn(modem_end, Modem::new());
    let mut session = ClientSession::new(client_end).with_response_timeout(short_timeout);
    host.with_modem(|m| m.inject_fault(Fault::Mute));
    assert!(!session.check_alive(), "muted modem must read as dead");
    host.with_modem(|m| m.clear_fault());
    assert!(session.check_alive(), "recovered modem must read as alive");
    host.shutdown();

    // Dropped prompt: send_sms times out, outbox unchanged.
    let (client_end, modem_end) = create_link(LinkConfig::default()).unwrap();
    let host = EmulatorHost::spawn(modem_end, Modem::new());
    let mut session = ClientSession::new(client_end).with_response_timeout(short_timeout);
    host.with_modem(|m| m.inject_fault(Fault::DropPrompt));
    let result = session.send_sms("0895092020", "swallowed");
    assert!(
        matches!(result, Err(ClientError::Timeout)),
        "expected timeout, got {result:?}"
    );
    assert_eq!(host.with_modem(|m| m.outbox().len()), 0, "outbox must stay empty");
    host.shutdown();

    finish(start, Duration::from_secs(15), "criterion 8: fault recovery");
}

/// Criterion 9: two identical binary invocations produce byte-identical
/// logs and outbox exports.
#[test]
fn check_09_binary_determinism() {
    let start = Instant::now();

    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("scenario.txt");
    std::fs::write(
        &scenario,
        "# determinism probe\n0,1023,93,1023,646\n1,93,1023,0,646\nrepeat 3\n5,1023,0,1023,0\n",
    )
    .unwrap();

    let mut artifacts = Vec::new();
    for name in ["first", "second"] {
        let workdir = dir.path().join(name);
        std::fs::create_dir(&workdir).unwrap();
        let log = workdir.join("report.txt");
        let outbox = workdir.join("outbox.tsv");
        let output = Command::new(env!("CARGO_BIN_EXE_amsms"))
            .args([
                "run",
                "--scenario",
                scenario.to_str().unwrap(),
                "--dest-phone",
                "0895092020",
                "--location",
                "Lab-A",
                "--log",
                log.to_str().unwrap(),
                "--outbox",
                outbox.to_str().unwrap(),
                "--fixed-clock",
                FIXED_CLOCK,
            ])
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "run failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        artifacts.push((
            std::fs::read(&log).unwrap(),
            std::fs::read(&outbox).unwrap(),
            output.stdout,
        ));
    }

    assert_eq!(artifacts[0].0, artifacts[1].0, "log files differ between runs");
    assert_eq!(artifacts[0].1, artifacts[1].1, "outbox exports differ between runs");
    assert_eq!(artifacts[0].2, artifacts[1].2, "summaries differ between runs");
    assert!(!artifacts[0].1.is_empty(), "scenario should have produced alerts");

    finish(start, Duration::from_secs(30), "criterion 9: binary determinism");
}

fn fixed_instant() -> chrono::NaiveDateTime {
    chrono::NaiveDateTime::parse_from_str(FIXED_CLOCK, "%Y-%m-%dT%H:%M:%S").unwrap()
}
