//! TS-OTFS frame: `(N+1)` copies of the terminal's training sequence
//! interleaved with the `N` payload blocks,
//! `[TS | P0 | TS | P1 | ... | TS | P(N-1) | TS]`.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::DdGrid;
use crate::numerology::OtfsNumerology;
use crate::rng::{item_rng, Stream};
use crate::waveform::otfs::OtfsModem;
use crate::C64;

/// A terminal's time-domain identifier sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSequence {
    pub id: usize,
    pub samples: Vec<C64>,
}

impl TrainingSequence {
    /// i.i.d. complex Gaussian entries scaled to exactly unit average power;
    /// a pure function of `(seed, id, len)`.
    pub fn generate(seed: u64, id: usize, len: usize) -> Self {
        let samples = unit_power_gaussian(seed, Stream::TrainingSequence, id, len);
        Self { id, samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub(crate) fn unit_power_gaussian(seed: u64, stream: Stream, id: usize, len: usize) -> Vec<C64> {
    let mut rng = item_rng(seed, stream, id as u64);
    let mut v: Vec<C64> = (0..len)
        .map(|_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    let p: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>() / len.max(1) as f64;
    if p > 0.0 {
        let s = 1.0 / p.sqrt();
        v.iter_mut().for_each(|z| *z *= s);
    }
    v
}

/// Serialized time-domain frame plus its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct TsOtfsFrame {
    pub samples: Vec<C64>,
    pub ts_starts: Vec<usize>,
    pub payload_starts: Vec<usize>,
    pub m: usize,
    pub m_t: usize,
}

impl TsOtfsFrame {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }
}

fn layout(num: &OtfsNumerology) -> (Vec<usize>, Vec<usize>) {
    (
        (0..=num.n).map(|i| num.ts_start(i)).collect(),
        (0..num.n).map(|n| num.payload_start(n)).collect(),
    )
}

fn build(num: &OtfsNumerology, payload: &[C64], ts: &[C64]) -> TsOtfsFrame {
    let (ts_starts, payload_starts) = layout(num);
    let mut samples = vec![C64::new(0.0, 0.0); num.frame_len()];
    for &s in &ts_starts {
        samples[s..s + num.m_t].copy_from_slice(ts);
    }
    for (b, &s) in payload_starts.iter().enumerate() {
        samples[s..s + num.m].copy_from_slice(&payload[b * num.m..(b + 1) * num.m]);
    }
    TsOtfsFrame {
        samples,
        ts_starts,
        payload_starts,
        m: num.m,
        m_t: num.m_t,
    }
}

pub fn assemble_frame(num: &OtfsNumerology, grid: &DdGrid, ts: &TrainingSequence) -> Result<TsOtfsFrame> {
    if ts.len() != num.m_t {
        return Err(Error::dim(format!("TS length {}", num.m_t), ts.len()));
    }
    let payload = OtfsModem::new(num.m, num.n).modulate(grid)?;
    Ok(build(num, &payload, &ts.samples))
}

/// Same timing as the TS-OTFS frame with zero-valued guard gaps in place of
/// the training sequences (the conventional embedded-pilot layout).
pub fn assemble_zp_frame(num: &OtfsNumerology, grid: &DdGrid) -> Result<TsOtfsFrame> {
    let payload = OtfsModem::new(num.m, num.n).modulate(grid)?;
    Ok(build(num, &payload, &vec![C64::new(0.0, 0.0); num.m_t]))
}

/// Recovers the payload grid and the training sequence (taken from the first
/// TS block; all copies are checked to be identical).
pub fn parse_frame(num: &OtfsNumerology, frame: &TsOtfsFrame, id: usize) -> Result<(DdGrid, TrainingSequence)> {
    if frame.len() != num.frame_len() {
        return Err(Error::dim(num.frame_len(), frame.len()));
    }
    let first = &frame.samples[0..num.m_t];
    for i in 1..=num.n {
        let s = num.ts_start(i);
        if &frame.samples[s..s + num.m_t] != first {
            return Err(Error::Consistency(format!("TS block {i} differs from block 0")));
        }
    }
    let mut payload = Vec::with_capacity(num.m * num.n);
    for b in 0..num.n {
        let s = num.payload_start(b);
        payload.extend_from_slice(&frame.samples[s..s + num.m]);
    }
    let grid = OtfsModem::new(num.m, num.n).demodulate(&payload)?;
    Ok((grid, TrainingSequence { id, samples: first.to_vec() }))
}
