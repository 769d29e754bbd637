//! CP-OFDM baseline modem with block pilots and a one-tap equalizer.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::TfGrid;
use crate::numerology::OtfsNumerology;
use crate::C64;

/// Symbol layout of a CP-OFDM frame that occupies the same duration as the
/// TS-OTFS frame (to within one CP) and spends about the same number of
/// samples on pilots as the TS-OTFS frame spends on training sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OfdmLayout {
    pub m: usize,
    pub cp: usize,
    pub n_sym: usize,
    /// Indices of the full-band pilot symbols, ascending.
    pub pilot_symbols: Vec<usize>,
}

impl OfdmLayout {
    pub fn matched(num: &OtfsNumerology) -> Result<Self> {
        let frame = num.frame_len();
        let cp_min = num.delay_window();
        let n_sym = frame / (num.m + cp_min);
        if n_sym < 3 {
            return Err(Error::Config("OFDM frame holds fewer than 3 symbols".into()));
        }
        let cp = frame / n_sym - num.m;
        let sym_len = num.m + cp;
        let ts_overhead = (num.n + 1) * num.m_t;
        let n_p = ((ts_overhead as f64 / sym_len as f64).round() as usize).clamp(2, n_sym - 1);
        let pilot_symbols = (0..n_p)
            .map(|i| ((i * (n_sym - 1)) as f64 / (n_p - 1) as f64).round() as usize)
            .collect();
        let layout = Self {
            m: num.m,
            cp,
            n_sym,
            pilot_symbols,
        };
        layout.validate(cp_min)?;
        Ok(layout)
    }

    pub fn validate(&self, channel_memory: usize) -> Result<()> {
        if self.cp < channel_memory {
            return Err(Error::Config(format!(
                "CP length {} shorter than channel memory {}",
                self.cp, channel_memory
            )));
        }
        Ok(())
    }

    pub fn symbol_len(&self) -> usize {
        self.m + self.cp
    }

    pub fn frame_len(&self) -> usize {
        self.n_sym * self.symbol_len()
    }

    pub fn data_symbols(&self) -> Vec<usize> {
        (0..self.n_sym).filter(|s| !self.pilot_symbols.contains(s)).collect()
    }

    /// Sample index of the centre of symbol `s`'s FFT window.
    pub fn symbol_center(&self, s: usize) -> f64 {
        (s * self.symbol_len() + self.cp) as f64 + (self.m as f64 - 1.0) / 2.0
    }
}

#[derive(Clone)]
pub struct OfdmModem {
    layout: OfdmLayout,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl OfdmModem {
    pub fn new(layout: OfdmLayout) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(layout.m);
        let inv = planner.plan_fft_inverse(layout.m);
        Self { layout, fwd, inv }
    }

    pub fn layout(&self) -> &OfdmLayout {
        &self.layout
    }

    /// Per-symbol unitary IDFT with CP prepended.
    pub fn modulate(&self, tf: &TfGrid) -> Result<Vec<C64>> {
        let l = &self.layout;
        if tf.n() != l.n_sym || tf.m() != l.m {
            return Err(Error::dim(format!("{}x{}", l.n_sym, l.m), format!("{}x{}", tf.n(), tf.m())));
        }
        let scale = 1.0 / (l.m as f64).sqrt();
        let mut out = Vec::with_capacity(l.frame_len());
        let mut buf = vec![C64::new(0.0, 0.0); l.m];
        for s in 0..l.n_sym {
            buf.copy_from_slice(tf.symbol(s));
            self.inv.process(&mut buf);
            buf.iter_mut().for_each(|v| *v *= scale);
            out.extend_from_slice(&buf[l.m - l.cp..]);
            out.extend_from_slice(&buf);
        }
        Ok(out)
    }

    /// Strips the CP and applies the unitary DFT per symbol. Samples beyond
    /// the end of `r` are treated as zero.
    pub fn demodulate(&self, r: &[C64]) -> TfGrid {
        let l = &self.layout;
        let scale = 1.0 / (l.m as f64).sqrt();
        let mut tf = TfGrid::zeros(l.n_sym, l.m);
        for s in 0..l.n_sym {
            let start = s * l.symbol_len() + l.cp;
            let sym = tf.symbol_mut(s);
            for (i, v) in sym.iter_mut().enumerate() {
                *v = r.get(start + i).copied().unwrap_or_default();
            }
            self.fwd.process(sym);
            sym.iter_mut().for_each(|v| *v *= scale);
        }
        tf
    }

    /// Single-user LS channel estimate on the pilot symbols, linearly
    /// interpolated (and held at the ends) across the remaining symbols.
    pub fn estimate_channel(&self, rx: &TfGrid, pilots: &TfGrid) -> TfGrid {
        let l = &self.layout;
        let mut h = TfGrid::zeros(l.n_sym, l.m);
        let est: Vec<Vec<C64>> = l
            .pilot_symbols
            .iter()
            .map(|&s| {
                rx.symbol(s)
                    .iter()
                    .zip(pilots.symbol(s))
                    .map(|(y, p)| if p.norm_sqr() > 0.0 { y / p } else { C64::new(0.0, 0.0) })
                    .collect()
            })
            .collect();
        for s in 0..l.n_sym {
            let (i0, i1, w) = interp_weights(&l.pilot_symbols, s as f64);
            for m in 0..l.m {
                h.set(s, m, est[i0][m] * (1.0 - w) + est[i1][m] * w);
            }
        }
        h
    }

    /// One-tap zero-forcing equalization.
    pub fn equalize(&self, rx: &TfGrid, h: &TfGrid) -> TfGrid {
        let l = &self.layout;
        let mut out = TfGrid::zeros(l.n_sym, l.m);
        for s in 0..l.n_sym {
            for m in 0..l.m {
                let hv = h.get(s, m);
                let v = if hv.norm_sqr() > 0.0 { rx.get(s, m) / hv } else { C64::new(0.0, 0.0) };
                out.set(s, m, v);
            }
        }
        out
    }
}

/// Linear interpolation weights over sorted anchor positions, clamped at the
/// ends: value(x) = (1-w) * v[i0] + w * v[i1].
pub fn interp_weights(anchors: &[usize], x: f64) -> (usize, usize, f64) {
    let last = anchors.len() - 1;
    if x <= anchors[0] as f64 {
        return (0, 0, 0.0);
    }
    if x >= anchors[last] as f64 {
        return (last, last, 0.0);
    }
    let i = anchors.iter().rposition(|&a| a as f64 <= x).unwrap();
    let (a, b) = (anchors[i] as f64, anchors[i + 1] as f64);
    (i, i + 1, (x - a) / (b - a))
}

/// Same as [`interp_weights`] for real-valued anchor positions.
pub fn interp_weights_f(anchors: &[f64], x: f64) -> (usize, usize, f64) {
    let last = anchors.len() - 1;
    if x <= anchors[0] {
        return (0, 0, 0.0);
    }
    if x >= anchors[last] {
        return (last, last, 0.0);
    }
    let i = anchors.iter().rposition(|&a| a <= x).unwrap();
    (i, i + 1, (x - anchors[i]) / (anchors[i + 1] - anchors[i]))
}
