//! Delay-Doppler channel impulse responses sampled on a lattice.
//!
//! A lattice with `n_lattice` Doppler bins has bin width
//! `B / (n_lattice (M + M_t))`; Doppler atom `k` evaluated at payload block
//! `n` is `exp(j2pi k n / n_lattice)`, i.e. the phase is referenced to the
//! start of payload block 0. With `n_lattice = 2N` the atoms sit on half
//! bins.

use crate::channel::apply::doppler_phase;
use crate::channel::population::TerminalChannel;
use crate::error::{Error, Result};
use crate::grid::DdGrid;
use crate::linalg::{lstsq_normal, CMat};
use crate::numerology::OtfsNumerology;
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct DdCir {
    /// `rows x n_lattice` coefficients.
    pub coeffs: DdGrid,
    /// Payload blocks the lattice describes.
    pub n_blocks: usize,
}

impl DdCir {
    pub fn zeros(rows: usize, n_lattice: usize, n_blocks: usize) -> Self {
        Self {
            coeffs: DdGrid::zeros(rows, n_lattice),
            n_blocks,
        }
    }

    pub fn rows(&self) -> usize {
        self.coeffs.m()
    }

    pub fn n_lattice(&self) -> usize {
        self.coeffs.n()
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.energy()
    }

    pub fn nonzeros(&self) -> usize {
        self.coeffs.as_slice().iter().filter(|z| z.norm() > 0.0).count()
    }

    /// Delay rows that carry any energy.
    pub fn support(&self) -> Vec<usize> {
        (0..self.rows())
            .filter(|&l| self.coeffs.row(l).iter().any(|z| z.norm() > 0.0))
            .collect()
    }

    /// Channel response of delay row `l` at the payload block instants.
    pub fn time_samples(&self, l: usize) -> Vec<C64> {
        let nl = self.n_lattice();
        (0..self.n_blocks)
            .map(|n| {
                self.coeffs
                    .row(l)
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * C64::from_polar(1.0, std::f64::consts::TAU * ((k * n) % nl) as f64 / nl as f64))
                    .sum()
            })
            .collect()
    }

    /// Builds the complete `N`-bin lattice from block-instant samples
    /// (`samples[l][n]`).
    pub fn from_time_samples(samples: &[Vec<C64>], n_blocks: usize) -> Self {
        let mut cir = Self::zeros(samples.len(), n_blocks, n_blocks);
        for (l, s) in samples.iter().enumerate() {
            for k in 0..n_blocks {
                let c: C64 = s
                    .iter()
                    .enumerate()
                    .map(|(n, v)| {
                        v * C64::from_polar(1.0, -std::f64::consts::TAU * ((k * n) % n_blocks) as f64 / n_blocks as f64)
                    })
                    .sum();
                cir.coeffs.set(l, k, c / n_blocks as f64);
            }
        }
        cir
    }

    /// Maps onto the complete `(rows, N)` evaluation lattice, on which the
    /// lattice norm equals the mean-square time response over the frame.
    pub fn to_evaluation(&self) -> Self {
        if self.n_lattice() == self.n_blocks {
            return self.clone();
        }
        let samples: Vec<Vec<C64>> = (0..self.rows()).map(|l| self.time_samples(l)).collect();
        Self::from_time_samples(&samples, self.n_blocks)
    }
}

/// Samples one terminal's channel (steering excluded) onto the lattice
/// `(rows, n_lattice)`.
///
/// Each path is represented by the `2 * halfwidth + 1` Doppler atoms nearest
/// its Doppler shift, with coefficients least-squares fitted to the path's
/// response at the `N` payload-block instants; this is the sinc-type leakage
/// of a fractional Doppler shift truncated to the leakage window. `None`
/// keeps `N` atoms, which is exact on the `n_lattice = N` lattice.
pub fn dd_cir_on_lattice(
    ch: &TerminalChannel,
    num: &OtfsNumerology,
    rows: usize,
    n_lattice: usize,
    halfwidth: Option<usize>,
) -> Result<DdCir> {
    if n_lattice < num.n {
        return Err(Error::Config(format!("Doppler lattice {n_lattice} coarser than N = {}", num.n)));
    }
    let n_blocks = num.n;
    let fs = num.sample_rate();
    let bin = num.doppler_bin(n_lattice);
    let count = match halfwidth {
        Some(w) => (2 * w + 1).min(n_blocks),
        None => n_blocks,
    };
    let mut cir = DdCir::zeros(rows, n_lattice, n_blocks);
    for p in &ch.paths {
        if p.delay >= rows {
            return Err(Error::dim(format!("delay < {rows}"), p.delay));
        }
        let target: Vec<C64> = (0..n_blocks)
            .map(|n| p.gain * doppler_phase(p.doppler, num.block_time(n), fs))
            .collect();
        let pos = p.doppler / bin;
        let first = (pos - (count as f64 - 1.0) / 2.0).round() as i64;
        let atoms: Vec<i64> = (first..first + count as i64).collect();
        let basis = CMat::from_columns(
            n_blocks,
            &atoms
                .iter()
                .map(|&k| {
                    (0..n_blocks)
                        .map(|n| {
                            let r = (k * n as i64).rem_euclid(n_lattice as i64) as f64 / n_lattice as f64;
                            C64::from_polar(1.0, std::f64::consts::TAU * r)
                        })
                        .collect()
                })
                .collect::<Vec<_>>(),
        );
        let coef = lstsq_normal(&basis, &target, 0.0)
            .map_err(|_| Error::Consistency("singular Doppler atom basis".into()))?;
        for (&k, c) in atoms.iter().zip(coef) {
            let idx = k.rem_euclid(n_lattice as i64) as usize;
            let v = cir.coeffs.get(p.delay, idx) + c;
            cir.coeffs.set(p.delay, idx, v);
        }
    }
    let max = cir.coeffs.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
    for z in cir.coeffs.as_mut_slice() {
        if z.norm() <= 1e-12 * max {
            *z = C64::new(0.0, 0.0);
        }
    }
    Ok(cir)
}

/// Closed-form delay-Doppler output of the cyclic test mode: a payload of
/// `N` contiguous blocks (no training sequences) sent through
/// [`crate::channel::apply_cyclic`] and demodulated. Every path must have an
/// integer delay and an on-grid Doppler `k_p B / (N M)`:
///
/// `Y[q,k] = sum_p g_p exp(j2pi k_p q/(NM)) exp(-j2pi [q<l_p] (k-k_p)/N) X[(q-l_p) mod M, (k-k_p) mod N]`.
pub fn dd_circular_response(x: &DdGrid, ch: &TerminalChannel, fs: f64) -> Result<DdGrid> {
    let (m, n) = x.shape();
    let mut y = DdGrid::zeros(m, n);
    for p in &ch.paths {
        let kf = p.doppler * (n * m) as f64 / fs;
        if (kf - kf.round()).abs() > 1e-9 {
            return Err(Error::Config(format!("Doppler {} Hz is not on the cyclic lattice", p.doppler)));
        }
        let kp = (kf.round() as i64).rem_euclid((n * m) as i64) as usize;
        let lp = p.delay % m;
        let wraps = p.delay / m;
        for q in 0..m {
            let src_l = (q + m - lp) % m;
            let crossed = wraps + usize::from(q < lp);
            let intra = C64::from_polar(1.0, std::f64::consts::TAU * ((kp * q) % (n * m)) as f64 / (n * m) as f64);
            for k in 0..n {
                let src_k = (k + n - kp % n) % n;
                let wrap = C64::from_polar(
                    1.0,
                    -std::f64::consts::TAU * ((crossed * src_k) % n) as f64 / n as f64,
                );
                let v = y.get(q, k) + p.gain * intra * wrap * x.get(src_l, src_k);
                y.set(q, k, v);
            }
        }
    }
    Ok(y)
}
