//! Conversion from raw ADC counts to engineering units.
//!
//! Formulas:
//! - light: `adc / 1023 * 100` (percent of full scale)
//! - temperature: thermistor resistance `R = 10000 * (1023 - adc) / adc`,
//!   then Steinhart–Hart `1/T = a + b*ln(R) + c*ln(R)^3` with
//!   `(a, b, c) = (0.001010024, 0.000242127, 0.000000146)`, reported in °C
//! - voltage: `1.223 * 1023 / adc` (internal band-gap reference)
//! - acceleration: `(adc - zero_offset) / counts_per_g`
//!
//! ADC endpoints that make a formula singular (temperature at 0 or 1023,
//! voltage at 0) are rejected as unconvertible rather than clamped, so
//! corrupt-looking data never silently normalizes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wire::{RawFrame, ADC_MAX};

/// Steinhart–Hart coefficients for the thermistor channel.
pub const STEINHART_A: f64 = 0.001_010_024;
pub const STEINHART_B: f64 = 0.000_242_127;
pub const STEINHART_C: f64 = 0.000_000_146;

/// Series divider resistance in ohms for the thermistor bridge.
pub const THERMISTOR_DIVIDER_OHMS: f64 = 10_000.0;

/// Band-gap reference voltage used by the supply-voltage channel.
pub const BANDGAP_VOLTS: f64 = 1.223;

const KELVIN_OFFSET: f64 = 273.15;

/// The five monitored sensor channels, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sensor {
    Light,
    Temperature,
    AccelX,
    AccelY,
    Voltage,
}

impl Sensor {
    pub const ALL: [Sensor; 5] = [
        Sensor::Light,
        Sensor::Temperature,
        Sensor::AccelX,
        Sensor::AccelY,
        Sensor::Voltage,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Sensor::Light => "light",
            Sensor::Temperature => "temperature",
            Sensor::AccelX => "accel_x",
            Sensor::AccelY => "accel_y",
            Sensor::Voltage => "voltage",
        }
    }

    /// Column header used in window CSV files.
    pub fn column(&self) -> &'static str {
        match self {
            Sensor::Light => "light_pct",
            Sensor::Temperature => "temp_c",
            Sensor::AccelX => "accel_x_g",
            Sensor::AccelY => "accel_y_g",
            Sensor::Voltage => "voltage_v",
        }
    }

    /// Short tag used in model file names, e.g. `node_3_temp_short.model`.
    pub fn file_tag(&self) -> &'static str {
        match self {
            Sensor::Light => "light",
            Sensor::Temperature => "temp",
            Sensor::AccelX => "accel_x",
            Sensor::AccelY => "accel_y",
            Sensor::Voltage => "voltage",
        }
    }

    /// Value of this sensor in an instance.
    pub fn value_of(&self, inst: &EngineeringInstance) -> f64 {
        match self {
            Sensor::Light => inst.light,
            Sensor::Temperature => inst.temperature,
            Sensor::AccelX => inst.accel_x,
            Sensor::AccelY => inst.accel_y,
            Sensor::Voltage => inst.voltage,
        }
    }
}

impl std::fmt::Display for Sensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Sensor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "light" => Ok(Sensor::Light),
            "temperature" | "temp" => Ok(Sensor::Temperature),
            "accel_x" | "ax" => Ok(Sensor::AccelX),
            "accel_y" | "ay" => Ok(Sensor::AccelY),
            "voltage" | "volt" => Ok(Sensor::Voltage),
            other => Err(format!(
                "unknown sensor {other:?} (expected one of: light, temperature, accel_x, accel_y, voltage)"
            )),
        }
    }
}

/// One timestamped reading per node, in engineering units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineeringInstance {
    pub node_id: u8,
    pub timestamp_ms: u64,
    /// Light level, percent of full scale, 0..=100.
    pub light: f64,
    /// Temperature in degrees Celsius.
    pub temperature: f64,
    /// X-axis acceleration in g.
    pub accel_x: f64,
    /// Y-axis acceleration in g.
    pub accel_y: f64,
    /// Supply voltage in volts.
    pub voltage: f64,
}

/// Linear accelerometer calibration: ADC counts at 0 g and counts per g.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccelCalibration {
    zero_offset: f64,
    counts_per_g: f64,
}

impl AccelCalibration {
    pub fn new(zero_offset: f64, counts_per_g: f64) -> Result<Self, ConvertError> {
        if counts_per_g == 0.0 || !counts_per_g.is_finite() || !zero_offset.is_finite() {
            return Err(ConvertError::InvalidCalibration {
                zero_offset,
                counts_per_g,
            });
        }
        Ok(Self {
            zero_offset,
            counts_per_g,
        })
    }

    pub fn zero_offset(&self) -> f64 {
        self.zero_offset
    }

    pub fn counts_per_g(&self) -> f64 {
        self.counts_per_g
    }
}

impl Default for AccelCalibration {
    fn default() -> Self {
        Self {
            zero_offset: 512.0,
            counts_per_g: 205.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ConvertError {
    #[error("adc value {adc} out of range for {sensor} (max {max})", max = ADC_MAX)]
    AdcOutOfRange { sensor: Sensor, adc: u16 },
    #[error("adc value {adc} is not convertible for {sensor}")]
    Unconvertible { sensor: Sensor, adc: u16 },
    #[error("invalid accelerometer calibration (zero_offset {zero_offset}, counts_per_g {counts_per_g})")]
    InvalidCalibration { zero_offset: f64, counts_per_g: f64 },
}

/// Light as percent of ADC full scale.
pub fn convert_light(adc: u16) -> Result<f64, ConvertError> {
    if adc > ADC_MAX {
        return Err(ConvertError::AdcOutOfRange {
            sensor: Sensor::Light,
            adc,
        });
    }
    Ok(adc as f64 / ADC_MAX as f64 * 100.0)
}

/// Thermistor temperature in °C via Steinhart–Hart.
///
/// The endpoints 0 and 1023 make the bridge expression singular and are
/// rejected as unconvertible.
pub fn convert_temperature(adc: u16) -> Result<f64, ConvertError> {
    if adc > ADC_MAX {
        return Err(ConvertError::AdcOutOfRange {
            sensor: Sensor::Temperature,
            adc,
        });
    }
    if adc == 0 || adc == ADC_MAX {
        return Err(ConvertError::Unconvertible {
            sensor: Sensor::Temperature,
            adc,
        });
    }
    let resistance = THERMISTOR_DIVIDER_OHMS * (ADC_MAX - adc) as f64 / adc as f64;
    let ln_r = resistance.ln();
    let inv_kelvin = STEINHART_A + STEINHART_B * ln_r + STEINHART_C * ln_r.powi(3);
    Ok(1.0 / inv_kelvin - KELVIN_OFFSET)
}

/// Supply voltage from the band-gap reference channel.
pub fn convert_voltage(adc: u16) -> Result<f64, ConvertError> {
    if adc > ADC_MAX {
        return Err(ConvertError::AdcOutOfRange {
            sensor: Sensor::Voltage,
            adc,
        });
    }
    if adc == 0 {
        return Err(ConvertError::Unconvertible {
            sensor: Sensor::Voltage,
            adc,
        });
    }
    Ok(BANDGAP_VOLTS * ADC_MAX as f64 / adc as f64)
}

/// Acceleration in g under a linear calibration.
pub fn convert_accel(adc: u16, cal: &AccelCalibration, sensor: Sensor) -> Result<f64, ConvertError> {
    if adc > ADC_MAX {
        return Err(ConvertError::AdcOutOfRange { sensor, adc });
    }
    Ok((adc as f64 - cal.zero_offset) / cal.counts_per_g)
}

/// Convert a decoded frame into an engineering-unit instance, preserving
/// node id and timestamp.
pub fn to_instance(frame: &RawFrame, cal: &AccelCalibration) -> Result<EngineeringInstance, ConvertError> {
    Ok(EngineeringInstance {
        node_id: frame.node_id,
        timestamp_ms: frame.timestamp_ms,
        light: convert_light(frame.adc.light)?,
        temperature: convert_temperature(frame.adc.temperature)?,
        accel_x: convert_accel(frame.adc.accel_x, cal, Sensor::AccelX)?,
        accel_y: convert_accel(frame.adc.accel_y, cal, Sensor::AccelY)?,
        voltage: convert_voltage(frame.adc.voltage)?,
    })
}
