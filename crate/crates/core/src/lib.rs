//! Grant-free non-orthogonal random access with OTFS waveforms over LEO
//! satellite uplinks.
//!
//! The crate is organised the way a link-level simulation runs:
//!
//! - [`waveform`]: OTFS modem, TS-OTFS frame, CP-OFDM baseline modem.
//! - [`channel`]: terminal population, orbital Doppler, sparse delay-Doppler
//!   channels and their application to the superimposed uplink.
//! - [`quantizer`]: Lloyd-Max ADC front end.
//! - [`receiver`]: non-ISI extraction, SOMP, CG-AD, Doppler and gain
//!   estimation, plus the DD-pilot and OFDM baseline receivers.
//! - [`detector`]: delay-Doppler least-squares multi-user detection.
//! - [`experiment`]: configuration, Monte-Carlo trials, metrics and output.

pub mod channel;
pub mod detector;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod linalg;
pub mod numerology;
pub mod quantizer;
pub mod receiver;
pub mod rng;
pub mod waveform;

pub use error::{Error, Result};
pub use grid::{DdGrid, TfGrid};
pub use numerology::OtfsNumerology;

pub type C64 = num_complex::Complex64;
