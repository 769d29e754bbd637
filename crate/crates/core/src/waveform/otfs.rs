//! Delay-Doppler <-> time-frequency <-> time conversions.
//!
//! Conventions (all transforms unitary):
//!
//! `X_tf[n,m] = 1/sqrt(NM) sum_k sum_l X[l,k] exp(j2pi(nk/N - ml/M))`
//!
//! and payload block `n` is the unitary inverse DFT of `X_tf[n, .]` with a
//! rectangular pulse and no cyclic prefix.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{DdGrid, TfGrid};
use crate::C64;

/// Cached FFT plans for one `(M, N)` pair.
#[derive(Clone)]
pub struct OtfsModem {
    m: usize,
    n: usize,
    fwd_m: Arc<dyn Fft<f64>>,
    inv_m: Arc<dyn Fft<f64>>,
    fwd_n: Arc<dyn Fft<f64>>,
    inv_n: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for OtfsModem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OtfsModem").field("m", &self.m).field("n", &self.n).finish()
    }
}

impl OtfsModem {
    pub fn new(m: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            m,
            n,
            fwd_m: planner.plan_fft_forward(m),
            inv_m: planner.plan_fft_inverse(m),
            fwd_n: planner.plan_fft_forward(n),
            inv_n: planner.plan_fft_inverse(n),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn isfft(&self, grid: &DdGrid) -> Result<TfGrid> {
        grid.check_shape(self.m, self.n)?;
        let (m, n) = (self.m, self.n);
        // inverse DFT along Doppler for every delay row
        let mut rows = grid.as_slice().to_vec();
        for row in rows.chunks_mut(n) {
            self.inv_n.process(row);
        }
        // forward DFT along delay for every time index
        let scale = 1.0 / ((m * n) as f64).sqrt();
        let mut tf = TfGrid::zeros(n, m);
        let mut buf = vec![C64::new(0.0, 0.0); m];
        for t in 0..n {
            for l in 0..m {
                buf[l] = rows[l * n + t];
            }
            self.fwd_m.process(&mut buf);
            for (dst, v) in tf.symbol_mut(t).iter_mut().zip(&buf) {
                *dst = v * scale;
            }
        }
        Ok(tf)
    }

    pub fn sfft(&self, tf: &TfGrid) -> Result<DdGrid> {
        if tf.n() != self.n || tf.m() != self.m {
            return Err(Error::dim(
                format!("{}x{}", self.n, self.m),
                format!("{}x{}", tf.n(), tf.m()),
            ));
        }
        let (m, n) = (self.m, self.n);
        let scale = 1.0 / ((m * n) as f64).sqrt();
        let mut dd = DdGrid::zeros(m, n);
        let mut buf = vec![C64::new(0.0, 0.0); m];
        for t in 0..n {
            buf.copy_from_slice(tf.symbol(t));
            self.inv_m.process(&mut buf);
            for l in 0..m {
                dd.set(l, t, buf[l]);
            }
        }
        for row in dd.as_mut_slice().chunks_mut(n) {
            self.fwd_n.process(row);
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
        Ok(dd)
    }

    /// N concatenated blocks of M samples.
    pub fn modulate(&self, grid: &DdGrid) -> Result<Vec<C64>> {
        let tf = self.isfft(grid)?;
        let scale = 1.0 / (self.m as f64).sqrt();
        let mut out = Vec::with_capacity(self.m * self.n);
        let mut buf = vec![C64::new(0.0, 0.0); self.m];
        for t in 0..self.n {
            buf.copy_from_slice(tf.symbol(t));
            self.inv_m.process(&mut buf);
            out.extend(buf.iter().map(|v| v * scale));
        }
        Ok(out)
    }

    pub fn demodulate(&self, payload: &[C64]) -> Result<DdGrid> {
        if payload.len() != self.m * self.n {
            return Err(Error::dim(self.m * self.n, payload.len()));
        }
        let scale = 1.0 / (self.m as f64).sqrt();
        let mut tf = TfGrid::zeros(self.n, self.m);
        for t in 0..self.n {
            let sym = tf.symbol_mut(t);
            sym.copy_from_slice(&payload[t * self.m..(t + 1) * self.m]);
            self.fwd_m.process(sym);
            for v in sym.iter_mut() {
                *v *= scale;
            }
        }
        self.sfft(&tf)
    }

    /// Demodulates only the delay rows in `rows`; all other rows are zero.
    /// Equivalent to [`OtfsModem::demodulate`] because the rectangular-pulse
    /// chain reduces to a DFT across blocks for each delay index.
    pub fn demodulate_rows(&self, payload: &[C64], rows: impl IntoIterator<Item = usize>, out: &mut DdGrid) {
        let (m, n) = (self.m, self.n);
        let scale = 1.0 / (n as f64).sqrt();
        for q in rows {
            let row = out.row_mut(q);
            for (t, v) in row.iter_mut().enumerate() {
                *v = payload[t * m + q];
            }
            self.fwd_n.process(row);
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
    }
}

pub fn isfft(grid: &DdGrid) -> Result<TfGrid> {
    OtfsModem::new(grid.m(), grid.n()).isfft(grid)
}

pub fn sfft(tf: &TfGrid) -> Result<DdGrid> {
    OtfsModem::new(tf.m(), tf.n()).sfft(tf)
}

pub fn otfs_modulate(grid: &DdGrid) -> Result<Vec<C64>> {
    OtfsModem::new(grid.m(), grid.n()).modulate(grid)
}

pub fn otfs_demodulate(payload: &[C64], m: usize, n: usize) -> Result<DdGrid> {
    OtfsModem::new(m, n).demodulate(payload)
}
