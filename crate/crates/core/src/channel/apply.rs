//! Time-domain application of the doubly-selective channel.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::channel::population::{ChannelRealization, TerminalChannel};
use crate::error::{Error, Result};
use crate::C64;

/// `exp(j 2 pi nu t / fs)` with the phase reduced modulo one cycle first.
#[inline]
pub fn doppler_phase(nu: f64, t: f64, fs: f64) -> C64 {
    let cycles = nu * t / fs;
    C64::from_polar(1.0, std::f64::consts::TAU * (cycles - cycles.floor()))
}

/// Per-antenna noise variance for a per-terminal receive SNR with unit
/// channel and signal power.
pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Single-antenna response of one terminal (before steering):
/// `z[t] = sum_p g_p exp(j2pi nu_p t/fs) x[t - d_p]`, truncated to `len`.
pub fn response(tx: &[C64], ch: &TerminalChannel, fs: f64, len: usize) -> Vec<C64> {
    let mut z = vec![C64::new(0.0, 0.0); len];
    for p in &ch.paths {
        for t in p.delay..len.min(tx.len() + p.delay) {
            z[t] += p.gain * doppler_phase(p.doppler, t as f64, fs) * tx[t - p.delay];
        }
    }
    z
}

/// Adds the steered response of one terminal to every antenna of `out`.
pub fn propagate_into(out: &mut [Vec<C64>], tx: &[C64], ch: &TerminalChannel, fs: f64) {
    let len = out.first().map_or(0, |v| v.len());
    let z = response(tx, ch, fs, len);
    for (row, s) in out.iter_mut().zip(&ch.steering) {
        for (o, v) in row.iter_mut().zip(&z) {
            *o += s * v;
        }
    }
}

/// Superimposes the frames of the active terminals through their channels
/// and adds complex white Gaussian noise of variance `realization.noise_var`
/// on each of the `antennas` outputs.
pub fn apply_channel<R: Rng + ?Sized>(
    frames: &[(usize, &[C64])],
    realization: &ChannelRealization,
    antennas: usize,
    fs: f64,
    rng: &mut R,
) -> Result<Vec<Vec<C64>>> {
    let len = frames.first().map_or(0, |f| f.1.len());
    if frames.iter().any(|f| f.1.len() != len) {
        return Err(Error::Consistency("frames differ in length".into()));
    }
    let len = if frames.is_empty() { 0 } else { len };
    let mut out = vec![vec![C64::new(0.0, 0.0); len]; antennas];
    for &(id, frame) in frames {
        let ch = realization
            .terminal(id)
            .ok_or_else(|| Error::Consistency(format!("terminal {id} has a frame but no channel")))?;
        if ch.steering.len() != antennas {
            return Err(Error::dim(antennas, ch.steering.len()));
        }
        propagate_into(&mut out, frame, ch, fs);
    }
    add_noise(&mut out, realization.noise_var, rng);
    Ok(out)
}

/// Same as [`apply_channel`] for a receiver that only knows the frame length
/// (used when no terminal is active).
pub fn noise_only<R: Rng + ?Sized>(antennas: usize, len: usize, noise_var: f64, rng: &mut R) -> Vec<Vec<C64>> {
    let mut out = vec![vec![C64::new(0.0, 0.0); len]; antennas];
    add_noise(&mut out, noise_var, rng);
    out
}

pub fn add_noise<R: Rng + ?Sized>(out: &mut [Vec<C64>], noise_var: f64, rng: &mut R) {
    if noise_var <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0, (noise_var / 2.0).sqrt()).expect("finite variance");
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v += C64::new(normal.sample(rng), normal.sample(rng));
        }
    }
}

/// Cyclic test mode: the channel acts on `tx` with delays taken modulo the
/// signal length, single antenna, no noise.
pub fn apply_cyclic(tx: &[C64], ch: &TerminalChannel, fs: f64) -> Vec<C64> {
    let len = tx.len();
    let mut z = vec![C64::new(0.0, 0.0); len];
    for p in &ch.paths {
        for (t, o) in z.iter_mut().enumerate() {
            *o += p.gain * doppler_phase(p.doppler, t as f64, fs) * tx[(t + len - p.delay % len) % len];
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::population::PathParams;
    use crate::rng::{stream_rng, Stream};

    fn identity(id: usize) -> TerminalChannel {
        TerminalChannel {
            id,
            paths: vec![PathParams {
                delay: 0,
                doppler: 0.0,
                gain: C64::new(1.0, 0.0),
            }],
            steering: vec![C64::new(1.0, 0.0)],
        }
    }

    #[test]
    fn identity_channel_passes_frame_through() {
        let mut rng = stream_rng(1, Stream::Test);
        let x: Vec<C64> = (0..50).map(|i| C64::new(i as f64, -(i as f64))).collect();
        let real = ChannelRealization {
            terminals: vec![identity(4)],
            noise_var: 0.0,
        };
        let out = apply_channel(&[(4, &x)], &real, 1, 1.0, &mut rng).unwrap();
        assert_eq!(out[0], x);
    }

    #[test]
    fn pure_noise_power() {
        let mut rng = stream_rng(2, Stream::Test);
        let out = noise_only(1, 100_000, 0.25, &mut rng);
        let p: f64 = out[0].iter().map(|z| z.norm_sqr()).sum::<f64>() / 1e5;
        assert!((p - 0.25).abs() < 0.05 * 0.25, "{p}");
    }

    #[test]
    fn missing_terminal_is_a_consistency_error() {
        let mut rng = stream_rng(3, Stream::Test);
        let x = vec![C64::new(1.0, 0.0); 4];
        let real = ChannelRealization {
            terminals: vec![identity(0)],
            noise_var: 0.0,
        };
        assert!(apply_channel(&[(1, &x)], &real, 1, 1.0, &mut rng).is_err());
    }

    #[test]
    fn doppler_phase_reduction_matches_direct() {
        let a = doppler_phase(123_456.7, 1000.0, 30.72e6);
        let b = C64::from_polar(1.0, std::f64::consts::TAU * 123_456.7 * 1000.0 / 30.72e6);
        assert!((a - b).norm() < 1e-12);
    }
}
