//! Effective multi-user DD channel operator.
//!
//! Every antenna sees the same steering-free response of a user scaled by
//! that user's steering coefficient, so the operator is stored as one
//! sparse `MN x n_cols` block per user plus the steering vectors:
//! `y_a = sum_u steer_u[a] H_u x_u`.

use crate::channel::apply::doppler_phase;
use crate::channel::TerminalChannel;
use crate::error::{Error, Result};
use crate::numerology::OtfsNumerology;
use crate::C64;

/// Compressed sparse columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Csc {
    pub rows: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<C64>,
}

impl Csc {
    pub fn cols(&self) -> usize {
        self.col_ptr.len().saturating_sub(1)
    }

    pub fn column(&self, c: usize) -> (&[usize], &[C64]) {
        let r = self.col_ptr[c]..self.col_ptr[c + 1];
        (&self.row_idx[r.clone()], &self.values[r])
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn fro_norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    pub m: usize,
    pub n: usize,
    pub antennas: usize,
    pub users: Vec<usize>,
    pub steering: Vec<Vec<C64>>,
    pub blocks: Vec<Csc>,
    /// DD positions `(l, k)` of the unknowns of each user, in column order.
    pub positions: Vec<(usize, usize)>,
}

impl EffectiveChannel {
    pub fn measurements(&self) -> usize {
        self.antennas * self.m * self.n
    }

    pub fn unknowns_per_user(&self) -> usize {
        self.positions.len()
    }

    pub fn unknowns(&self) -> usize {
        self.users.len() * self.positions.len()
    }

    /// `||H||_F^2` of the full operator.
    pub fn fro_norm_sqr(&self) -> f64 {
        self.blocks
            .iter()
            .zip(&self.steering)
            .map(|(b, s)| b.fro_norm_sqr() * s.iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// Largest number of nonzeros in a steering-free column.
    pub fn max_column_nnz(&self) -> usize {
        self.blocks
            .iter()
            .flat_map(|b| (0..b.cols()).map(move |c| b.col_ptr[c + 1] - b.col_ptr[c]))
            .max()
            .unwrap_or(0)
    }

    /// Column `c` of user slot `u` over all antennas, as `(row, value)` with
    /// row `a * MN + l * N + k`.
    pub fn column(&self, u: usize, c: usize) -> Vec<(usize, C64)> {
        let mn = self.m * self.n;
        let (rows, vals) = self.blocks[u].column(c);
        let mut out = Vec::with_capacity(rows.len() * self.antennas);
        for (a, s) in self.steering[u].iter().enumerate() {
            for (&r, &v) in rows.iter().zip(vals) {
                out.push((a * mn + r, s * v));
            }
        }
        out
    }

    /// `y = H x`; `x` is user-major (`u * n_cols + c`), `y` antenna-major.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mn = self.m * self.n;
        let nc = self.unknowns_per_user();
        let mut y = vec![C64::default(); self.antennas * mn];
        let mut z = vec![C64::default(); mn];
        for (u, blk) in self.blocks.iter().enumerate() {
            z.iter_mut().for_each(|v| *v = C64::default());
            for c in 0..nc {
                let xv = x[u * nc + c];
                if xv == C64::default() {
                    continue;
                }
                let (rows, vals) = blk.column(c);
                for (&r, &v) in rows.iter().zip(vals) {
                    z[r] += v * xv;
                }
            }
            for (a, s) in self.steering[u].iter().enumerate() {
                for (o, v) in y[a * mn..(a + 1) * mn].iter_mut().zip(&z) {
                    *o += s * v;
                }
            }
        }
        y
    }

    /// `x = H^H y`.
    pub fn adjoint(&self, y: &[C64]) -> Vec<C64> {
        let mn = self.m * self.n;
        let nc = self.unknowns_per_user();
        let mut x = vec![C64::default(); self.users.len() * nc];
        let mut w = vec![C64::default(); mn];
        for (u, blk) in self.blocks.iter().enumerate() {
            w.iter_mut().for_each(|v| *v = C64::default());
            for (a, s) in self.steering[u].iter().enumerate() {
                let sc = s.conj();
                for (o, v) in w.iter_mut().zip(&y[a * mn..(a + 1) * mn]) {
                    *o += sc * v;
                }
            }
            for c in 0..nc {
                let (rows, vals) = blk.column(c);
                x[u * nc + c] = rows.iter().zip(vals).map(|(&r, v)| v.conj() * w[r]).sum();
            }
        }
        x
    }
}

/// Steering-free DD response of a unit impulse at `(l, k)`: the `N` time
/// samples it occupies go through every path, the overlap-add folds the
/// spill past the block end onto the block head, and each touched delay row
/// is DFT'd across blocks. Entries below `1e-6` of the column peak are
/// dropped.
fn impulse_column(ch: &TerminalChannel, num: &OtfsNumerology, l: usize, k: usize, buf: &mut Vec<(usize, Vec<C64>)>) -> Vec<(usize, C64)> {
    let (m, n) = (num.m, num.n);
    let fs = num.sample_rate();
    let norm = 1.0 / n as f64;
    buf.clear();
    for p in &ch.paths {
        let q = (l + p.delay) % m;
        let slot = match buf.iter().position(|(r, _)| *r == q) {
            Some(i) => i,
            None => {
                buf.push((q, vec![C64::default(); n]));
                buf.len() - 1
            }
        };
        // block-domain samples r_n[q]
        let samples: Vec<C64> = (0..n)
            .map(|b| {
                let t = num.payload_start(b) + l + p.delay;
                p.gain * doppler_phase(p.doppler, t as f64, fs) * C64::from_polar(1.0, std::f64::consts::TAU * ((b * k) % n) as f64 / n as f64)
            })
            .collect();
        for (kk, out) in buf[slot].1.iter_mut().enumerate() {
            let mut acc = C64::default();
            for (b, s) in samples.iter().enumerate() {
                acc += s * C64::from_polar(1.0, -std::f64::consts::TAU * ((b * kk) % n) as f64 / n as f64);
            }
            *out += acc * norm;
        }
    }
    let peak = buf.iter().flat_map(|(_, v)| v.iter()).map(|v| v.norm()).fold(0.0, f64::max);
    let mut col: Vec<(usize, C64)> = buf
        .iter()
        .flat_map(|(q, v)| v.iter().enumerate().map(move |(kk, &val)| (q * n + kk, val)))
        .filter(|(_, v)| v.norm() >= 1e-6 * peak && peak > 0.0)
        .collect();
    col.sort_by_key(|e| e.0);
    col
}

/// Builds the operator for the given channels; `positions` restricts the
/// unknowns to a subset of DD positions (all `M x N` when `None`).
pub fn build_effective_channel(
    channels: &[TerminalChannel],
    num: &OtfsNumerology,
    positions: Option<&[(usize, usize)]>,
) -> Result<EffectiveChannel> {
    if channels.is_empty() {
        return Err(Error::Consistency("effective channel needs at least one terminal".into()));
    }
    let antennas = channels[0].steering.len();
    if channels.iter().any(|c| c.steering.len() != antennas) {
        return Err(Error::Consistency("terminals disagree on antenna count".into()));
    }
    let spill = num.delay_window().saturating_sub(1);
    for ch in channels {
        if let Some(p) = ch.paths.iter().find(|p| p.delay > spill) {
            return Err(Error::dim(format!("delay <= {spill}"), p.delay));
        }
    }
    let positions: Vec<(usize, usize)> = match positions {
        Some(p) => p.to_vec(),
        None => (0..num.m).flat_map(|l| (0..num.n).map(move |k| (l, k))).collect(),
    };
    let mut buf = Vec::new();
    let blocks = channels
        .iter()
        .map(|ch| {
            let mut csc = Csc {
                rows: num.m * num.n,
                col_ptr: vec![0],
                row_idx: Vec::new(),
                values: Vec::new(),
            };
            for &(l, k) in &positions {
                for (r, v) in impulse_column(ch, num, l, k, &mut buf) {
                    csc.row_idx.push(r);
                    csc.values.push(v);
                }
                csc.col_ptr.push(csc.values.len());
            }
            csc
        })
        .collect();
    Ok(EffectiveChannel {
        m: num.m,
        n: num.n,
        antennas,
        users: channels.iter().map(|c| c.id).collect(),
        steering: channels.iter().map(|c| c.steering.clone()).collect(),
        blocks,
        positions,
    })
}
