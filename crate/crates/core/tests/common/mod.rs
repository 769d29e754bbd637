#![allow(dead_code)]

pub mod oracles;

use gfra_core::rng::{stream_rng, Stream};
use std::f64::consts::TAU;

use gfra_core::{DdGrid, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, Stream::Test)
}

pub fn cgauss<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_grid(m: usize, n: usize, seed: u64) -> DdGrid {
    let mut r = rng(seed);
    DdGrid::from_fn(m, n, |_, _| cgauss(&mut r))
}

pub fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

pub fn energy(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Dense `rows x cols` matrix stored row-major.
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl Dense {
    pub fn from_columns(columns: &[Vec<C64>]) -> Self {
        let rows = columns[0].len();
        let cols = columns.len();
        let mut data = vec![C64::new(0.0, 0.0); rows * cols];
        for (c, col) in columns.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                data[r * cols + c] = *v;
            }
        }
        Self { rows, cols, data }
    }

    pub fn mul(&self, x: &[C64]) -> Vec<C64> {
        (0..self.rows)
            .map(|r| self.data[r * self.cols..(r + 1) * self.cols].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn mul_adjoint(&self, y: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.cols];
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[c] += self.data[r * self.cols + c].conj() * y[r];
            }
        }
        out
    }
}

/// Gaussian elimination with partial pivoting, row-major `n x n`.
pub fn dense_solve(mut a: Vec<C64>, mut b: Vec<C64>) -> Vec<C64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm())).unwrap();
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f.norm() == 0.0 {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[r * n + k] -= f * v;
            }
            let bv = b[col];
            b[r] -= f * bv;
        }
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for k in r + 1..n {
            acc -= a[r * n + k] * x[k];
        }
        x[r] = acc / a[r * n + r];
    }
    x
}

/// Modulation matrix evaluated term by term from the ISFFT and per-block
/// IDFT definitions. Column `l*N + k`, row `t*M + i`.
pub fn modulation_matrix(m: usize, n: usize) -> Dense {
    let norm = 1.0 / ((m * m * n) as f64).sqrt();
    let columns: Vec<Vec<C64>> = (0..m * n)
        .map(|col| {
            let (l, k) = (col / n, col % n);
            (0..m * n)
                .map(|row| {
                    let (t, i) = (row / m, row % m);
                    (0..m)
                        .map(|f| {
                            cis(TAU * ((t * k) as f64 / n as f64 - (f * l) as f64 / m as f64))
                                * cis(TAU * (f * i) as f64 / m as f64)
                        })
                        .sum::<C64>()
                        * norm
                })
                .collect()
        })
        .collect();
    Dense::from_columns(&columns)
}

/// Received TS-OTFS frames of `channels` with QPSK payloads drawn from
/// `payload_seed` and noise drawn from `noise_seed`.
pub fn receive_ts_otfs(
    num: &gfra_core::OtfsNumerology,
    ts: &[gfra_core::waveform::TrainingSequence],
    channels: &[gfra_core::channel::TerminalChannel],
    antennas: usize,
    noise_var: f64,
    payload_seed: u64,
    noise_seed: u64,
) -> Vec<Vec<C64>> {
    use gfra_core::channel::{apply_channel, ChannelRealization};
    use gfra_core::waveform::{assemble_frame, Constellation};
    let mut pr = rng(payload_seed);
    let frames: Vec<Vec<C64>> = channels
        .iter()
        .map(|ch| {
            let bits = Constellation::Qpsk.random_bits(num.m * num.n, &mut pr);
            let grid = DdGrid::from_vec(num.m, num.n, Constellation::Qpsk.map_all(&bits)).unwrap();
            assemble_frame(num, &grid, &ts[ch.id]).unwrap().samples
        })
        .collect();
    let realization = ChannelRealization { terminals: channels.to_vec(), noise_var };
    let tx: Vec<(usize, &[C64])> = channels.iter().zip(&frames).map(|(c, f)| (c.id, f.as_slice())).collect();
    if channels.is_empty() {
        return gfra_core::channel::apply::noise_only(antennas, num.frame_len(), noise_var, &mut rng(noise_seed));
    }
    apply_channel(&tx, &realization, antennas, num.sample_rate(), &mut rng(noise_seed)).unwrap()
}
