//! Block-structured sensing matrices for MMV recovery.

use crate::error::{Error, Result};
use crate::linalg::{dotc, norm_sqr, CMat};
use crate::numerology::OtfsNumerology;
use crate::waveform::TrainingSequence;
use crate::C64;

/// Unit-norm atoms grouped in `blocks` blocks of `block_len` columns;
/// `scales[j]` is the norm of atom `j` before normalization. A block holds
/// `block_len / delays` variants of each of its `delays` delay columns,
/// stored variant-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MmvDictionary {
    pub atoms: CMat,
    pub scales: Vec<f64>,
    pub block_len: usize,
    pub blocks: usize,
    pub delays: usize,
}

impl MmvDictionary {
    /// Normalizes raw columns (block-major: `block * block_len + d`).
    pub fn from_raw(rows: usize, block_len: usize, raw: Vec<Vec<C64>>) -> Result<Self> {
        if block_len == 0 || raw.len() % block_len != 0 {
            return Err(Error::dim(format!("multiple of {block_len} columns"), raw.len()));
        }
        let blocks = raw.len() / block_len;
        let mut scales = Vec::with_capacity(raw.len());
        let cols: Vec<Vec<C64>> = raw
            .into_iter()
            .map(|mut c| {
                let s = norm_sqr(&c).sqrt();
                if s > 0.0 {
                    c.iter_mut().for_each(|v| *v /= s);
                }
                scales.push(s);
                c
            })
            .collect();
        Ok(Self {
            atoms: CMat::from_columns(rows, &cols),
            scales,
            block_len,
            blocks,
            delays: block_len,
        })
    }

    /// Same as [`Self::from_raw`] with `variants` variants per delay.
    pub fn from_raw_variants(rows: usize, delays: usize, variants: usize, raw: Vec<Vec<C64>>) -> Result<Self> {
        let mut d = Self::from_raw(rows, delays * variants, raw)?;
        d.delays = delays;
        Ok(d)
    }

    pub fn rows(&self) -> usize {
        self.atoms.rows
    }

    pub fn len(&self) -> usize {
        self.atoms.cols
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.cols == 0
    }

    pub fn atom(&self, j: usize) -> &[C64] {
        self.atoms.col(j)
    }

    /// `(block, delay)` of atom `j`.
    pub fn locate(&self, j: usize) -> (usize, usize) {
        (j / self.block_len, j % self.block_len % self.delays)
    }

    /// Variant index of atom `j` within its delay.
    pub fn variant(&self, j: usize) -> usize {
        j % self.block_len / self.delays
    }

    /// Largest `|<a_i, a_j>|` over atom pairs in different blocks.
    pub fn coherence(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.len() {
            let bi = i / self.block_len;
            for j in (bi + 1) * self.block_len..self.len() {
                best = best.max(dotc(self.atom(i), self.atom(j)).norm());
            }
        }
        best
    }
}

/// Doppler values whose phase ramps across the non-ISI window tile
/// `[0, nu_max]`: the midpoints of `count` equal cells.
pub fn ramp_hypotheses(nu_max: f64, count: usize) -> Vec<f64> {
    let count = count.max(1);
    (0..count).map(|q| nu_max * (q as f64 + 0.5) / count as f64).collect()
}

/// Smallest number of ramp hypotheses for which the residual ramp across
/// the window stays within `max_phase` rad.
pub fn auto_ramp_count(num: &OtfsNumerology, nu_max: f64, max_phase: f64) -> usize {
    let ramp = std::f64::consts::TAU * nu_max * num.non_isi_len() as f64 / num.sample_rate();
    ((ramp / max_phase).ceil() as usize).max(1)
}

/// TS dictionary. Atom `(k, q, d)` at column `k L Q + q L + d` is the
/// non-ISI window of terminal `k`'s training sequence delayed by `d`,
/// `ts_k[L + g - d]`, times the window-centred Doppler ramp
/// `exp(j2pi nu_q (g - (G-1)/2) / B)` of hypothesis `ramps[q]`.
pub fn build_dictionary(ts: &[TrainingSequence], num: &OtfsNumerology, ramps: &[f64]) -> Result<MmvDictionary> {
    let g = num.non_isi_len();
    let l = num.delay_window();
    if g == 0 {
        return Err(Error::Config("non-ISI window empty".into()));
    }
    let zero = [0.0];
    let ramps = if ramps.is_empty() { &zero[..] } else { ramps };
    let fs = num.sample_rate();
    let centre = (g as f64 - 1.0) / 2.0;
    let phasors: Vec<Vec<C64>> = ramps
        .iter()
        .map(|&nu| {
            (0..g)
                .map(|r| C64::from_polar(1.0, std::f64::consts::TAU * nu * (r as f64 - centre) / fs))
                .collect()
        })
        .collect();
    let mut raw = Vec::with_capacity(ts.len() * l * ramps.len());
    for t in ts {
        if t.len() != num.m_t {
            return Err(Error::dim(num.m_t, t.len()));
        }
        for ph in &phasors {
            for d in 0..l {
                raw.push((0..g).map(|r| t.samples[l + r - d] * ph[r]).collect());
            }
        }
    }
    let dict = MmvDictionary::from_raw_variants(g, l, ramps.len(), raw)?;
    if log::log_enabled!(log::Level::Debug) {
        log::debug!("TS dictionary {}x{}, coherence {:.3}", g, dict.len(), dict.coherence());
    }
    Ok(dict)
}

/// Dictionary over the full window of a zero-padded sequence: atom `d` is
/// `seq[r - d]` for rows `r < rows` (zero above the diagonal).
pub fn build_shift_dictionary(seqs: &[Vec<C64>], rows: usize, block_len: usize) -> Result<MmvDictionary> {
    let mut raw = Vec::with_capacity(seqs.len() * block_len);
    for s in seqs {
        for d in 0..block_len {
            raw.push((0..rows).map(|r| if r >= d { s.get(r - d).copied().unwrap_or_default() } else { C64::default() }).collect());
        }
    }
    MmvDictionary::from_raw(rows, block_len, raw)
}

/// Frequency-domain pilot dictionary: atom `(k, d)` is
/// `p_k[m] exp(-j2pi m d / M)`.
pub fn build_pilot_dictionary(pilots: &[Vec<C64>], block_len: usize) -> Result<MmvDictionary> {
    let m = pilots.first().map_or(0, |p| p.len());
    let mut raw = Vec::with_capacity(pilots.len() * block_len);
    for p in pilots {
        if p.len() != m {
            return Err(Error::dim(m, p.len()));
        }
        for d in 0..block_len {
            raw.push(
                p.iter()
                    .enumerate()
                    .map(|(i, v)| v * C64::from_polar(1.0, -std::f64::consts::TAU * ((i * d) % m) as f64 / m as f64))
                    .collect(),
            );
        }
    }
    MmvDictionary::from_raw(m, block_len, raw)
}
