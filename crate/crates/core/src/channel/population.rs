//! Terminal population, activity pattern and per-trial channel parameters.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::geometry::ConstellationGeometry;
use crate::error::{Error, Result};
use crate::numerology::OtfsNumerology;
use crate::rng::{stream_rng, Stream};
use crate::waveform::TrainingSequence;
use crate::C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub geometry: ConstellationGeometry,
    /// Propagation paths per terminal.
    pub paths: usize,
    /// Power decay of the exponential power-delay profile, dB per tap.
    pub decay_db_per_tap: f64,
    /// Rician factor of path 0, dB.
    pub rician_k_db: f64,
    /// Receive antennas (a perfect square forms a planar array).
    pub antennas: usize,
    /// Half-angle of the service cone seen from the array boresight, rad.
    pub cone_half_angle: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            geometry: ConstellationGeometry::default(),
            paths: 3,
            decay_db_per_tap: 3.0,
            rician_k_db: 10.0,
            antennas: 16,
            cone_half_angle: 60f64.to_radians(),
        }
    }
}

/// One resolvable path. `delay` is the total delay in samples (path delay
/// plus the terminal's residual ToA offset).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    pub delay: usize,
    pub doppler: f64,
    pub gain: C64,
}

/// Parametric channel of one terminal: its paths and array response.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalChannel {
    pub id: usize,
    pub paths: Vec<PathParams>,
    /// Unit-modulus steering coefficient per receive antenna.
    pub steering: Vec<C64>,
}

impl TerminalChannel {
    pub fn energy(&self) -> f64 {
        self.paths.iter().map(|p| p.gain.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerminalProfile {
    pub id: usize,
    pub ts: TrainingSequence,
    pub active: bool,
    /// Path delay taps (before the ToA offset), ascending; path 0 is LoS.
    pub taps: Vec<usize>,
    pub gains: Vec<C64>,
    /// One Doppler value shared by every path, Hz.
    pub doppler: f64,
    pub toa_offset: usize,
    /// (azimuth, off-boresight angle), rad.
    pub aoa: (f64, f64),
    pub steering: Vec<C64>,
}

impl TerminalProfile {
    pub fn channel(&self) -> TerminalChannel {
        TerminalChannel {
            id: self.id,
            paths: self
                .taps
                .iter()
                .zip(&self.gains)
                .map(|(&l, &g)| PathParams {
                    delay: l + self.toa_offset,
                    doppler: self.doppler,
                    gain: g,
                })
                .collect(),
            steering: self.steering.clone(),
        }
    }
}

/// Planar (square `A`) or linear half-wavelength array response.
pub fn steering_vector(antennas: usize, azimuth: f64, theta: f64) -> Vec<C64> {
    let side = (antennas as f64).sqrt().round() as usize;
    let u = theta.sin() * azimuth.cos();
    let v = theta.sin() * azimuth.sin();
    if side * side == antennas {
        (0..antennas)
            .map(|a| {
                let (ix, iy) = ((a % side) as f64, (a / side) as f64);
                C64::from_polar(1.0, std::f64::consts::PI * (ix * u + iy * v))
            })
            .collect()
    } else {
        (0..antennas)
            .map(|a| C64::from_polar(1.0, std::f64::consts::PI * a as f64 * u))
            .collect()
    }
}

/// Expected path powers: Rician split on path 0, exponential decay with
/// excess delay on the rest, normalized to unit total.
pub fn path_powers(taps: &[usize], cfg: &ChannelConfig) -> Vec<f64> {
    if taps.len() == 1 {
        return vec![1.0];
    }
    let k = 10f64.powf(cfg.rician_k_db / 10.0);
    let los = k / (k + 1.0);
    let rel: Vec<f64> = taps[1..]
        .iter()
        .map(|&l| 10f64.powf(-cfg.decay_db_per_tap * (l - taps[0]) as f64 / 10.0))
        .collect();
    let s: f64 = rel.iter().sum();
    std::iter::once(los)
        .chain(rel.iter().map(|r| r / s * (1.0 - los)))
        .collect()
}

/// Draws `k` terminal profiles. Training sequences depend only on
/// `(ts_seed, id)`; geometry and fading depend on `seed`.
pub fn draw_population(
    k: usize,
    num: &OtfsNumerology,
    cfg: &ChannelConfig,
    ts_seed: u64,
    seed: u64,
) -> Vec<TerminalProfile> {
    let mut rng = stream_rng(seed, Stream::Population);
    let p = cfg.paths.clamp(1, num.l_max);
    (0..k)
        .map(|id| {
            let mut taps: Vec<usize> = sample(&mut rng, num.l_max, p).into_vec();
            taps.sort_unstable();
            let powers = path_powers(&taps, cfg);
            let gains = powers
                .iter()
                .enumerate()
                .map(|(i, &pw)| {
                    if i == 0 && p > 1 {
                        C64::from_polar(pw.sqrt(), rng.gen_range(0.0..std::f64::consts::TAU))
                    } else {
                        let z = C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                        z * (pw / 2.0).sqrt()
                    }
                })
                .collect();
            let nu_max = cfg.geometry.nu_max;
            let doppler = if nu_max > 0.0 { rng.gen_range(0.0..=nu_max) } else { 0.0 };
            let toa_offset = rng.gen_range(0..=num.d_max);
            let azimuth = rng.gen_range(0.0..std::f64::consts::TAU);
            // uniform over the spherical cap
            let cos_t = 1.0 - rng.gen::<f64>() * (1.0 - cfg.cone_half_angle.cos());
            let theta = cos_t.acos();
            TerminalProfile {
                id,
                ts: TrainingSequence::generate(ts_seed, id, num.m_t),
                active: false,
                taps,
                gains,
                doppler,
                toa_offset,
                aoa: (azimuth, theta),
                steering: steering_vector(cfg.antennas, azimuth, theta),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityPattern {
    pub k: usize,
    pub active: Vec<usize>,
}

impl ActivityPattern {
    pub fn k_a(&self) -> usize {
        self.active.len()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.active.binary_search(&id).is_ok()
    }
}

/// Uniformly random `k_a`-subset of the population, sorted ascending; also
/// sets the `active` flag of each profile.
pub fn draw_activity(population: &mut [TerminalProfile], k_a: usize, seed: u64) -> Result<ActivityPattern> {
    let k = population.len();
    if k_a > k {
        return Err(Error::Config(format!("K_a = {k_a} exceeds K = {k}")));
    }
    let mut rng = stream_rng(seed, Stream::Activity);
    let mut active = sample(&mut rng, k, k_a).into_vec();
    active.sort_unstable();
    for t in population.iter_mut() {
        t.active = false;
    }
    for &i in &active {
        population[i].active = true;
    }
    Ok(ActivityPattern { k, active })
}

/// Channels of the active terminals for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub terminals: Vec<TerminalChannel>,
    pub noise_var: f64,
}

impl ChannelRealization {
    pub fn from_population(population: &[TerminalProfile], activity: &ActivityPattern, noise_var: f64) -> Self {
        Self {
            terminals: activity.active.iter().map(|&i| population[i].channel()).collect(),
            noise_var,
        }
    }

    pub fn terminal(&self, id: usize) -> Option<&TerminalChannel> {
        self.terminals.iter().find(|t| t.id == id)
    }
}
