//! Non-ISI tail of each received training sequence.

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::numerology::OtfsNumerology;
use crate::C64;

/// `G x (N+1)A` observation matrix; column `i * A + a` holds the non-ISI
/// window of TS block `i` at antenna `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonIsiObservation {
    pub y: CMat,
    /// Start sample of each TS block.
    pub timestamps: Vec<usize>,
    pub antennas: usize,
    /// Offset of the window inside each TS block (`L_max + D_max`).
    pub offset: usize,
}

impl NonIsiObservation {
    pub fn snapshots(&self) -> usize {
        self.timestamps.len()
    }

    pub fn column(&self, snapshot: usize, antenna: usize) -> &[C64] {
        self.y.col(snapshot * self.antennas + antenna)
    }
}

pub fn extract_non_isi(received: &[Vec<C64>], num: &OtfsNumerology) -> Result<NonIsiObservation> {
    let g = num.non_isi_len();
    if g == 0 {
        return Err(Error::Config(format!(
            "non-ISI window empty: M_t = {} <= L_max + D_max = {}",
            num.m_t,
            num.delay_window()
        )));
    }
    let len = num.frame_len();
    if let Some(bad) = received.iter().find(|r| r.len() < len) {
        return Err(Error::dim(format!("{len} samples per antenna"), bad.len()));
    }
    let antennas = received.len();
    let offset = num.delay_window();
    let timestamps: Vec<usize> = (0..=num.n).map(|i| num.ts_start(i)).collect();
    let mut cols = Vec::with_capacity(timestamps.len() * antennas);
    for &start in &timestamps {
        for r in received {
            cols.push(r[start + offset..start + num.m_t].to_vec());
        }
    }
    Ok(NonIsiObservation {
        y: CMat::from_columns(g, &cols),
        timestamps,
        antennas,
        offset,
    })
}
