//! Super-resolution Doppler estimation over TS snapshots.

use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerSearch {
    /// Snapshot spacing, samples.
    pub spacing: f64,
    pub sample_rate: f64,
    /// Zero-padding factor of the coarse periodogram.
    pub pad_factor: usize,
    /// Lower edge of the reported window; the window is one unambiguous
    /// span `sample_rate / spacing` wide.
    pub window_lo: f64,
    pub newton_steps: usize,
}

impl DopplerSearch {
    pub fn span(&self) -> f64 {
        self.sample_rate / self.spacing
    }

    pub fn wrap(&self, nu: f64) -> f64 {
        self.window_lo + (nu - self.window_lo).rem_euclid(self.span())
    }
}

/// Periodogram `sum_s |sum_i x_s[i] exp(-j2pi nu i spacing / B)|^2` and
/// its first two derivatives in `nu`.
fn periodogram(seqs: &[Vec<C64>], nu: f64, search: &DopplerSearch) -> (f64, f64, f64) {
    let w = std::f64::consts::TAU * search.spacing / search.sample_rate;
    let (mut p, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for s in seqs {
        let (mut x, mut dx, mut ddx) = (C64::default(), C64::default(), C64::default());
        for (i, v) in s.iter().enumerate() {
            let e = v * C64::from_polar(1.0, -w * nu * i as f64);
            let a = C64::new(0.0, -w * i as f64);
            x += e;
            dx += a * e;
            ddx += a * a * e;
        }
        p += x.norm_sqr();
        d1 += 2.0 * (x.conj() * dx).re;
        d2 += 2.0 * (dx.norm_sqr() + (x.conj() * ddx).re);
    }
    (p, d1, d2)
}

/// Single-tone frequency of uniformly spaced snapshot sequences (one per
/// combining branch): zero-padded periodogram peak, three-point quadratic
/// interpolation, then Newton steps on the continuous periodogram.
pub fn estimate_doppler(seqs: &[Vec<C64>], search: &DopplerSearch) -> Result<f64> {
    let n = seqs.first().map_or(0, |s| s.len());
    if n < 2 {
        return Err(Error::Unsupported(format!("Doppler estimation needs >= 2 snapshots, got {n}")));
    }
    let nfft = n * search.pad_factor.max(1);
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let mut spec = vec![0.0; nfft];
    let mut buf = vec![C64::default(); nfft];
    for s in seqs {
        buf.iter_mut().for_each(|v| *v = C64::default());
        buf[..s.len()].copy_from_slice(s);
        fft.process(&mut buf);
        for (p, v) in spec.iter_mut().zip(&buf) {
            *p += v.norm_sqr();
        }
    }
    let (peak, &pmax) = spec
        .iter()
        .enumerate()
        .fold((0, &f64::MIN), |acc, (i, p)| if *p > *acc.1 { (i, p) } else { acc });
    if pmax <= 0.0 {
        return Ok(search.wrap(0.0));
    }
    let bin = search.span() / nfft as f64;
    let left = spec[(peak + nfft - 1) % nfft];
    let right = spec[(peak + 1) % nfft];
    let denom = left - 2.0 * pmax + right;
    let delta = if denom < 0.0 { 0.5 * (left - right) / denom } else { 0.0 };
    let mut nu = (peak as f64 + delta.clamp(-0.5, 0.5)) * bin;
    for _ in 0..search.newton_steps {
        let (_, d1, d2) = periodogram(seqs, nu, search);
        if d2 < 0.0 {
            let step = d1 / d2;
            if step.abs() < bin {
                nu -= step;
            }
        }
    }
    Ok(search.wrap(nu))
}
