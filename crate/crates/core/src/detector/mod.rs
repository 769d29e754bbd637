//! Delay-Doppler least-squares multi-user detection.

pub mod ber;
pub mod effective;
pub mod solver;

pub use ber::{compute_ber, demap, DetectionReport};
pub use effective::{build_effective_channel, EffectiveChannel};
pub use solver::{default_reg, ls_detect, Ridge, SolverConfig, SolverOutput};
