//! OTFS modem, TS-OTFS frame and the CP-OFDM baseline modem.

pub mod constellation;
pub mod frame;
pub mod ofdm;
pub mod otfs;

pub use constellation::Constellation;
pub use frame::{assemble_frame, assemble_zp_frame, parse_frame, TrainingSequence, TsOtfsFrame};
pub use ofdm::{OfdmLayout, OfdmModem};
pub use otfs::{isfft, otfs_demodulate, otfs_modulate, sfft, OtfsModem};
