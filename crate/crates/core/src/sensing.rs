//! Pure conversion and detection logic: raw 10-bit ADC codes to millivolts
//! and degrees Celsius, the three threshold detectors, and the packed status
//! byte.
//!
//! All arithmetic is integer-only and every division truncates toward zero.

use std::fmt;

use thiserror::Error;

/// Highest representable 10-bit ADC code.
pub const ADC_MAX: u16 = 1023;
/// Full-scale ADC input voltage in millivolts.
pub const FULL_SCALE_MV: u16 = 3300;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SensingError {
    #[error("adc code {0} out of range 0..=1023")]
    RawOutOfRange(u16),
    #[error("millivolt value {0} out of range 0..=3300")]
    MillivoltsOutOfRange(u16),
    #[error("status value {0} out of range 0..=7")]
    StatusOutOfRange(u8),
}

/// Integer millivolts in `0..=3300`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Millivolts(u16);

impl Millivolts {
    pub fn new(value: u16) -> Result<Self, SensingError> {
        if value > FULL_SCALE_MV {
            return Err(SensingError::MillivoltsOutOfRange(value));
        }
        Ok(Self(value))
    }

    pub fn get(self) -> u16 {
        self.0
    }
}

impl fmt::Display for Millivolts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Integer degrees Celsius in `0..=330`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Celsius(u16);

impl Celsius {
    pub const MAX: u16 = FULL_SCALE_MV / 10;

    pub fn new(value: u16) -> Result<Self, SensingError> {
        if value > Self::MAX {
            return Err(SensingError::MillivoltsOutOfRange(value));
        }
        Ok(Self(value))
    }

    pub fn get(self) -> u16 {
        self.0
    }
}

impl fmt::Display for Celsius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One round's raw readings from ADC channels 0..=3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdcFrame {
    adc0: u16,
    adc1: u16,
    adc2: u16,
    adc3: u16,
}

impl AdcFrame {
    pub fn new(adc0: u16, adc1: u16, adc2: u16, adc3: u16) -> Result<Self, SensingError> {
        for value in [adc0, adc1, adc2, adc3] {
            if value > ADC_MAX {
                return Err(SensingError::RawOutOfRange(value));
            }
        }
        Ok(Self { adc0, adc1, adc2, adc3 })
    }

    pub fn smoke_raw(self) -> u16 {
        self.adc0
    }

    pub fn temperature_raw(self) -> u16 {
        self.adc1
    }

    pub fn reference_raw(self) -> u16 {
        self.adc2
    }

    pub fn light_raw(self) -> u16 {
        self.adc3
    }
}

/// Outcome of the three detectors for one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DetectionFlags {
    pub smoke: bool,
    pub overheat: bool,
    pub trespass: bool,
}

/// Packed detection bits: bit 0 smoke, bit 1 overheat, bit 2 trespass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StatusByte(u8);

impl StatusByte {
    pub const CLEAR: StatusByte = StatusByte(0);

    pub fn new(value: u8) -> Result<Self, SensingError> {
        if value > 7 {
            return Err(SensingError::StatusOutOfRange(value));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn is_clear(self) -> bool {
        self.0 == 0
    }

    /// True when `self` carries a bit that `previous` does not.
    pub fn introduces_new_bit(self, previous: StatusByte) -> bool {
        self.0 & !previous.0 != 0
    }
}

impl fmt::Display for StatusByte {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Ambient light profile selecting the active trespass threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LightMode {
    Room,
    Sun,
}

#[derive(Debug, Clone)]
pub struct SensingConfig {
    pub smoke_threshold: Millivolts,
    pub trespass_threshold_room: Millivolts,
    pub trespass_threshold_sun: Millivolts,
    pub light_mode: LightMode,
}

impl Default for SensingConfig {
    fn default() -> Self {
        Self {
            smoke_threshold: Millivolts(1500),
            trespass_threshold_room: Millivolts(2000),
            trespass_threshold_sun: Millivolts(1500),
            light_mode: LightMode::Room,
        }
    }
}

impl SensingConfig {
    pub fn active_trespass_threshold(&self) -> Millivolts {
        match self.light_mode {
            LightMode::Room => self.trespass_threshold_room,
            LightMode::Sun => self.trespass_threshold_sun,
        }
    }
}

/// Converted readings, detector outcomes, and packed status for one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SensorSnapshot {
    pub round: u64,
    pub smoke_mv: Millivolts,
    pub temp_read_c: Celsius,
    pub temp_ref_c: Celsius,
    pub light_mv: Millivolts,
    pub flags: DetectionFlags,
    pub status: StatusByte,
}

/// floor(3300 * raw / 1023). The product needs 32-bit width (max 3_375_900).
pub fn raw_to_millivolts(raw: u16) -> Result<Millivolts, SensingError> {
    if raw > ADC_MAX {
        return Err(SensingError::RawOutOfRange(raw));
    }
    Ok(convert_millivolts(raw))
}

fn convert_millivolts(raw: u16) -> Millivolts {
    Millivolts((u32::from(FULL_SCALE_MV) * u32::from(raw) / u32::from(ADC_MAX)) as u16)
}

/// floor(mv / 10): an LM35-style sensor reads 10 mV per degree.
pub fn millivolts_to_temperature(mv: Millivolts) -> Celsius {
    Celsius(mv.0 / 10)
}

/// floor(raw * 100 / 1023): the reference dial maps linearly onto 0..=100.
pub fn raw_to_reference_temperature(raw: u16) -> Result<Celsius, SensingError> {
    if raw > ADC_MAX {
        return Err(SensingError::RawOutOfRange(raw));
    }
    Ok(convert_reference(raw))
}

fn convert_reference(raw: u16) -> Celsius {
    Celsius((u32::from(raw) * 100 / u32::from(ADC_MAX)) as u16)
}

/// Smoke pulls the sensor voltage down: detected strictly below the threshold.
pub fn detect_smoke(mv: Millivolts, cfg: &SensingConfig) -> bool {
    mv < cfg.smoke_threshold
}

/// Detected strictly above the dialled-in reference temperature.
pub fn detect_overheat(temp_read: Celsius, temp_ref: Celsius) -> bool {
    temp_read > temp_ref
}

/// Light on the sensor raises the voltage: detected strictly above the active
/// threshold.
pub fn detect_trespass(mv: Millivolts, cfg: &SensingConfig) -> bool {
    mv > cfg.active_trespass_threshold()
}

pub fn encode_status(flags: DetectionFlags) -> StatusByte {
    StatusByte(u8::from(flags.smoke) | u8::from(flags.overheat) << 1 | u8::from(flags.trespass) << 2)
}

pub fn decode_status(status: StatusByte) -> DetectionFlags {
    DetectionFlags {
        smoke: status.0 & 1 != 0,
        overheat: status.0 & 2 != 0,
        trespass: status.0 & 4 != 0,
    }
}

/// Converts all four channels, runs the detectors, and packs the status:
/// adc0 is the smoke voltage, adc1 the temperature voltage, adc2 the
/// reference dial, adc3 the light voltage.
pub fn interpret_frame(frame: &AdcFrame, round: u64, cfg: &SensingConfig) -> SensorSnapshot {
    let smoke_mv = convert_millivolts(frame.smoke_raw());
    let temp_read_c = millivolts_to_temperature(convert_millivolts(frame.temperature_raw()));
    let temp_ref_c = convert_reference(frame.reference_raw());
    let light_mv = convert_millivolts(frame.light_raw());
    let flags = DetectionFlags {
        smoke: detect_smoke(smoke_mv, cfg),
        overheat: detect_overheat(temp_read_c, temp_ref_c),
        trespass: detect_trespass(light_mv, cfg),
    };
    SensorSnapshot {
        round,
        smoke_mv,
        temp_read_c,
        temp_ref_c,
        light_mv,
        flags,
        status: encode_status(flags),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Checks `v = floor(num / den)` via the defining inequality, independent
    /// of the implementation's arithmetic path.
    fn is_floor_of(v: u64, num: u64, den: u64) -> bool {
        v * den <= num && num < (v + 1) * den
    }

    #[test]
    fn millivolt_conversion_matches_truncating_oracle_on_all_codes() {
        for raw in 0..=ADC_MAX {
            let mv = raw_to_millivolts(raw).unwrap().get();
            assert!(
                is_floor_of(u64::from(mv), 3300 * u64::from(raw), 1023),
                "raw {raw} gave {mv}"
            );
        }
    }

    #[test]
    fn millivolt_conversion_spot_values() {
        assert_eq!(raw_to_millivolts(0).unwrap().get(), 0);
        assert_eq!(raw_to_millivolts(1023).unwrap().get(), 3300);
        assert_eq!(raw_to_millivolts(93).unwrap().get(), 300);
        assert_eq!(raw_to_millivolts(646).unwrap().get(), 2083);
    }

    #[test]
    fn millivolt_conversion_is_monotone() {
        let mut previous = 0;
        for raw in 0..=ADC_MAX {
            let mv = raw_to_millivolts(raw).unwrap().get();
            assert!(mv >= previous, "dip at raw {raw}");
            previous = mv;
        }
    }

    #[test]
    fn millivolt_conversion_rejects_out_of_range() {
        assert_eq!(raw_to_millivolts(1024), Err(SensingError::RawOutOfRange(1024)));
    }

    #[test]
    fn temperature_conversion_truncates() {
        assert_eq!(millivolts_to_temperature(Millivolts(300)).get(), 30);
        assert_eq!(millivolts_to_temperature(Millivolts(0)).get(), 0);
        assert_eq!(millivolts_to_temperature(Millivolts(1005)).get(), 100);
        assert_eq!(millivolts_to_temperature(Millivolts(3300)).get(), 330);
    }

    #[test]
    fn reference_conversion_matches_truncating_oracle_on_all_codes() {
        for raw in 0..=ADC_MAX {
            let c = raw_to_reference_temperature(raw).unwrap().get();
            assert!(
                is_floor_of(u64::from(c), 100 * u64::from(raw), 1023),
                "raw {raw} gave {c}"
            );
            assert!(c <= 100);
        }
    }

    #[test]
    fn reference_conversion_spot_values() {
        assert_eq!(raw_to_reference_temperature(0).unwrap().get(), 0);
        assert_eq!(raw_to_reference_temperature(1023).unwrap().get(), 100);
        assert_eq!(raw_to_reference_temperature(512).unwrap().get(), 50);
    }

    #[test]
    fn smoke_detector_uses_strict_threshold() {
        let cfg = SensingConfig::default();
        assert!(detect_smoke(Millivolts(1499), &cfg));
        assert!(!detect_smoke(Millivolts(1500), &cfg));
        assert!(!detect_smoke(Millivolts(3300), &cfg));
    }

    #[test]
    fn overheat_detector_uses_strict_comparison() {
        assert!(!detect_overheat(Celsius(30), Celsius(100)));
        assert!(detect_overheat(Celsius(101), Celsius(100)));
        assert!(!detect_overheat(Celsius(100), Celsius(100)));
    }

    #[test]
    fn trespass_detector_follows_light_mode() {
        let room = SensingConfig::default();
        let sun = SensingConfig { light_mode: LightMode::Sun, ..SensingConfig::default() };
        assert!(detect_trespass(Millivolts(2083), &room));
        assert!(!detect_trespass(Millivolts(2000), &room));
        assert!(detect_trespass(Millivolts(1600), &sun));
        assert!(!detect_trespass(Millivolts(1500), &sun));
    }

    #[test]
    fn status_encoding_matches_truth_table() {
        let table = [
            ((false, false, false), 0),
            ((true, false, false), 1),
            ((false, true, false), 2),
            ((true, true, false), 3),
            ((false, false, true), 4),
            ((true, false, true), 5),
            ((false, true, true), 6),
            ((true, true, true), 7),
        ];
        for ((smoke, overheat, trespass), expected) in table {
            let flags = DetectionFlags { smoke, overheat, trespass };
            assert_eq!(encode_status(flags).value(), expected, "{flags:?}");
        }
    }

    #[test]
    fn status_decode_inverts_encode() {
        for value in 0..=7 {
            let status = StatusByte::new(value).unwrap();
            assert_eq!(encode_status(decode_status(status)), status);
        }
    }

    #[test]
    fn status_byte_rejects_values_above_seven() {
        assert_eq!(StatusByte::new(8), Err(SensingError::StatusOutOfRange(8)));
    }

    #[test]
    fn new_bit_detection_is_bitwise() {
        let s = |v| StatusByte::new(v).unwrap();
        assert!(s(4).introduces_new_bit(s(0)));
        assert!(!s(4).introduces_new_bit(s(4)));
        assert!(s(5).introduces_new_bit(s(4)));
        assert!(!s(4).introduces_new_bit(s(5)));
        assert!(!s(0).introduces_new_bit(s(7)));
    }

    #[test]
    fn frame_interpretation_matches_worked_rounds() {
        let cfg = SensingConfig::default();

        let trespass = interpret_frame(&AdcFrame::new(1023, 93, 1023, 646).unwrap(), 0, &cfg);
        assert_eq!(trespass.smoke_mv.get(), 3300);
        assert_eq!(trespass.temp_read_c.get(), 30);
        assert_eq!(trespass.temp_ref_c.get(), 100);
        assert_eq!(trespass.light_mv.get(), 2083);
        assert_eq!(trespass.status.value(), 4);

        let quiet = interpret_frame(&AdcFrame::new(1023, 0, 1023, 0).unwrap(), 1, &cfg);
        assert_eq!(quiet.status.value(), 0);

        let everything = interpret_frame(&AdcFrame::new(0, 1023, 0, 1023).unwrap(), 2, &cfg);
        assert_eq!(everything.status.value(), 7);
    }

    #[test]
    fn snapshot_status_always_matches_flags() {
        let cfg = SensingConfig::default();
        for raw in [0u16, 500, 1023] {
            let frame = AdcFrame::new(raw, raw, 1023 - raw, raw).unwrap();
            let snapshot = interpret_frame(&frame, 0, &cfg);
            assert_eq!(snapshot.status, encode_status(snapshot.flags));
        }
    }

    #[test]
    fn frame_rejects_out_of_range_channel() {
        assert_eq!(
            AdcFrame::new(0, 1024, 0, 0),
            Err(SensingError::RawOutOfRange(1024))
        );
    }
}
