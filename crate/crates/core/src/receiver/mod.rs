//! Joint active-terminal identification and channel estimation.

pub mod cgad;
pub mod ddpilot;
pub mod dictionary;
pub mod doppler;
pub mod gains;
pub mod observation;
pub mod ofdm_rx;
pub mod payload;
pub mod ts_otfs;

pub use cgad::{cg_ad, residual_noise_floor, tap_score, terminal_taps};
pub use ddpilot::{dd_pilot_baseline_ce, DdPilotLayout, DdPilotReceiver, ImpulsePilot};
pub use dictionary::{build_dictionary, MmvDictionary};
pub use doppler::{estimate_doppler, DopplerSearch};
pub use gains::{ls_fit_gains, GainFit, PathHypothesis};
pub use observation::{extract_non_isi, NonIsiObservation};
pub use ofdm_rx::{OfdmEstimate, OfdmReceiver};
pub use payload::{demodulate_payload, subtract_known};
pub use somp::{somp_recover, somp_recover_steered, SompStop, SparseCirSnapshots};
pub use ts_otfs::TsOtfsReceiver;

pub mod somp;

use crate::channel::{DdCir, TerminalChannel};
use crate::C64;

/// Receiver tuning shared by the three schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverParams {
    /// CG-AD threshold relative to the residual noise floor.
    pub tau: f64,
    pub max_taps: usize,
    pub pad_factor: usize,
    /// Per-sample noise variance assumed by the SOMP stopping rule.
    pub noise_var: f64,
    pub nu_max: f64,
    /// Doppler oversampling of the reconstruction lattice (1 or 2).
    pub oversample: usize,
}

impl ReceiverParams {
    pub fn stop(&self, rows: usize, cols: usize) -> SompStop {
        SompStop {
            max_taps: self.max_taps,
            residual_energy: 1.05 * (rows * cols) as f64 * self.noise_var,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerminalEstimate {
    pub id: usize,
    pub delays: Vec<usize>,
    /// Hz; `None` for the Doppler-blind OFDM receiver.
    pub doppler: Option<f64>,
    pub gains: Vec<C64>,
    /// Parametric channel for the DD detector (OTFS schemes).
    pub channel: Option<TerminalChannel>,
    /// Reconstructed DD CIR (steering excluded).
    pub cir: DdCir,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EstimationResult {
    /// Estimated active set, ascending.
    pub active: Vec<usize>,
    pub terminals: Vec<TerminalEstimate>,
    pub noise_floor: f64,
}

impl EstimationResult {
    pub fn terminal(&self, id: usize) -> Option<&TerminalEstimate> {
        self.terminals.iter().find(|t| t.id == id)
    }

    pub fn channels(&self) -> Vec<TerminalChannel> {
        self.terminals.iter().filter_map(|t| t.channel.clone()).collect()
    }
}

/// `(1/A) sum_a conj(steer_a) x[i A + a]` for every snapshot `i`.
pub(crate) fn mrc_snapshots(row: &[C64], steering: &[C64]) -> Vec<C64> {
    let a = steering.len();
    row.chunks(a)
        .map(|c| c.iter().zip(steering).map(|(x, s)| s.conj() * x).sum::<C64>() / a as f64)
        .collect()
}
