//! Joint least-squares path-gain fit over the non-ISI windows.

use crate::channel::apply::doppler_phase;
use crate::channel::{PathParams, TerminalChannel};
use crate::error::{Error, Result};
use crate::linalg::cholesky_solve;
use crate::numerology::OtfsNumerology;
use crate::C64;

/// Delay/Doppler hypothesis for one terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct PathHypothesis<'a> {
    pub id: usize,
    pub ts: &'a [C64],
    pub delays: Vec<usize>,
    pub doppler: f64,
    pub steering: &'a [C64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainFit {
    /// One channel per hypothesis, in input order; a terminal whose taps
    /// were all dropped keeps an empty path list.
    pub channels: Vec<TerminalChannel>,
    /// Largest over smallest Cholesky pivot of the final system.
    pub pivot_ratio: f64,
    /// `(terminal id, delay)` of taps removed for rank deficiency.
    pub dropped: Vec<(usize, usize)>,
}

/// Solves for the complex gains of every hypothesized path jointly, with
/// basis `steer_a exp(j2pi nu t / B) ts[t - start_i - d]` over every non-ISI
/// window `i` and antenna `a`. A rank-deficient system drops the offending
/// tap and refits.
pub fn ls_fit_gains(received: &[Vec<C64>], hyps: &[PathHypothesis], num: &OtfsNumerology) -> Result<GainFit> {
    let fs = num.sample_rate();
    let l = num.delay_window();
    let g = num.non_isi_len();
    if g == 0 {
        return Err(Error::Config("non-ISI window empty".into()));
    }
    let antennas = received.len();
    for h in hyps {
        if h.steering.len() != antennas {
            return Err(Error::dim(antennas, h.steering.len()));
        }
        if h.ts.len() != num.m_t {
            return Err(Error::dim(num.m_t, h.ts.len()));
        }
        if let Some(&d) = h.delays.iter().find(|&&d| d >= l) {
            return Err(Error::dim(format!("delay < {l}"), d));
        }
    }
    let times: Vec<(usize, usize)> = (0..=num.n)
        .flat_map(|i| (0..g).map(move |r| (num.ts_start(i), r)))
        .collect();
    // per-terminal phase-rotated TS windows and MRC-combined observations
    let rot: Vec<Vec<C64>> = hyps
        .iter()
        .map(|h| {
            times
                .iter()
                .map(|&(s, r)| doppler_phase(h.doppler, (s + l + r) as f64, fs))
                .collect()
        })
        .collect();
    let mrc: Vec<Vec<C64>> = hyps
        .iter()
        .map(|h| {
            times
                .iter()
                .map(|&(s, r)| {
                    received
                        .iter()
                        .zip(h.steering)
                        .map(|(y, st)| st.conj() * y[s + l + r])
                        .sum()
                })
                .collect()
        })
        .collect();
    let cross: Vec<Vec<C64>> = hyps
        .iter()
        .map(|a| {
            hyps.iter()
                .map(|b| a.steering.iter().zip(b.steering).map(|(x, y)| x.conj() * y).sum())
                .collect()
        })
        .collect();
    let mut taps: Vec<(usize, usize)> = hyps
        .iter()
        .enumerate()
        .flat_map(|(u, h)| h.delays.iter().map(move |&d| (u, d)))
        .collect();
    let basis = |u: usize, d: usize, idx: usize| {
        let (_, r) = times[idx];
        rot[u][idx] * hyps[u].ts[l + r - d]
    };
    let mut dropped = Vec::new();
    loop {
        let n = taps.len();
        if n == 0 {
            break;
        }
        let mut gram = vec![C64::default(); n * n];
        let mut rhs = vec![C64::default(); n];
        for i in 0..n {
            let (u, du) = taps[i];
            for j in i..n {
                let (v, dv) = taps[j];
                let t: C64 = (0..times.len()).map(|x| basis(u, du, x).conj() * basis(v, dv, x)).sum();
                let e = cross[u][v] * t;
                gram[i * n + j] = e;
                gram[j * n + i] = e.conj();
            }
            rhs[i] = (0..times.len()).map(|x| basis(u, du, x).conj() * mrc[u][x]).sum();
        }
        match cholesky_solve(&gram, n, &rhs, 1e-10) {
            Ok(gains) => {
                let mut channels: Vec<TerminalChannel> = hyps
                    .iter()
                    .map(|h| TerminalChannel {
                        id: h.id,
                        paths: Vec::new(),
                        steering: h.steering.to_vec(),
                    })
                    .collect();
                for (&(u, d), gain) in taps.iter().zip(gains) {
                    channels[u].paths.push(PathParams {
                        delay: d,
                        doppler: hyps[u].doppler,
                        gain,
                    });
                }
                let diag: Vec<f64> = (0..n).map(|i| gram[i * n + i].re).collect();
                let pivot_ratio = diag.iter().cloned().fold(0.0, f64::max) / diag.iter().cloned().fold(f64::MAX, f64::min);
                log::debug!("gain fit: {n} taps, diagonal ratio {pivot_ratio:.2e}");
                return Ok(GainFit {
                    channels,
                    pivot_ratio,
                    dropped,
                });
            }
            Err(j) => {
                let (u, d) = taps.remove(j);
                log::debug!("gain fit: dropping collinear tap {d} of terminal {}", hyps[u].id);
                dropped.push((hyps[u].id, d));
            }
        }
    }
    Ok(GainFit {
        channels: hyps
            .iter()
            .map(|h| TerminalChannel {
                id: h.id,
                paths: Vec::new(),
                steering: h.steering.to_vec(),
            })
            .collect(),
        pivot_ratio: 1.0,
        dropped,
    })
}
