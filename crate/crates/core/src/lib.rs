//! Fault detection for wireless sensor networks.
//!
//! The crate covers the full path from raw mote telemetry to operator
//! alerts:
//!
//! - [`wire`] — the 28-byte telemetry frame codec and a resynchronizing
//!   stream scanner.
//! - [`convert`] — raw ADC counts to engineering units (light %, °C, g, V).
//! - [`window`] — per-node short/long sliding windows with per-minute
//!   averaging and CSV persistence.
//! - [`regress`] — five numeric prediction algorithms behind one predictor
//!   contract (linear regression, decision stump, decision table, k-NN,
//!   M5 model trees).
//! - [`detect`] — per-sensor deviation thresholds, two-stage short/long
//!   evaluation, and alert generation.
//! - [`engine`] — the streaming monitor loop tying windows, model rebuilds,
//!   and evaluation together.
//! - [`sim`] — a synthetic base station with diurnal traces and scripted
//!   fault injection, served over TCP.
//! - [`bench`] — per-algorithm timing, error-rate, and energy reporting.

pub mod bench;
pub mod convert;
pub mod detect;
pub mod engine;
pub mod regress;
pub mod sim;
pub mod window;
pub mod wire;
