//! Symbol demapping and bit-error accounting.

use std::collections::BTreeMap;

use crate::waveform::Constellation;
use crate::C64;

/// Nearest-point hard decisions; ties go to the lowest bit label.
pub fn demap(soft: &[C64], constellation: Constellation) -> Vec<u8> {
    let bps = constellation.bits_per_symbol();
    let mut bits = Vec::with_capacity(soft.len() * bps);
    for &z in soft {
        let label = constellation.nearest(z);
        for b in (0..bps).rev() {
            bits.push(((label >> b) & 1) as u8);
        }
    }
    bits
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionReport {
    /// BER of each truly active terminal; missed terminals count 0.5.
    pub per_terminal: BTreeMap<usize, f64>,
    pub bit_errors: f64,
    pub bits: usize,
    pub solver_iterations: usize,
    pub solver_residual: f64,
    pub solver_converged: bool,
}

impl DetectionReport {
    /// Bit-weighted aggregate, `None` when no terminal was active.
    pub fn aggregate(&self) -> Option<f64> {
        (self.bits > 0).then(|| self.bit_errors / self.bits as f64)
    }
}

/// BER over the true active set: detected terminals are compared bit by
/// bit, missed terminals contribute half their bits as errors, false alarms
/// are ignored.
pub fn compute_ber(
    truth: &BTreeMap<usize, Vec<u8>>,
    detected: &BTreeMap<usize, Vec<u8>>,
    true_ats: &[usize],
    est_ats: &[usize],
) -> DetectionReport {
    let mut rep = DetectionReport {
        solver_converged: true,
        ..Default::default()
    };
    for &id in true_ats {
        let Some(tx) = truth.get(&id) else { continue };
        let errors = match (est_ats.contains(&id), detected.get(&id)) {
            (true, Some(rx)) => {
                tx.iter().zip(rx).filter(|(a, b)| a != b).count() as f64
                    + tx.len().saturating_sub(rx.len()) as f64
            }
            _ => tx.len() as f64 * 0.5,
        };
        rep.bit_errors += errors;
        rep.bits += tx.len();
        rep.per_terminal.insert(id, if tx.is_empty() { 0.0 } else { errors / tx.len() as f64 });
    }
    rep
}
