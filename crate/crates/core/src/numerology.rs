use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frame numerology shared by transmitter and receiver.
///
/// `l_max` (channel memory, samples) and `d_max` (largest residual ToA
/// offset, samples) fix the delay-uncertainty window of the receiver; the
/// non-ISI window of every training sequence is what remains of `m_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OtfsNumerology {
    /// Delay bins / subcarriers.
    pub m: usize,
    /// Doppler bins / payload blocks per frame.
    pub n: usize,
    /// Subcarrier spacing, Hz.
    pub delta_f: f64,
    /// Training-sequence length, samples.
    pub m_t: usize,
    /// Carrier frequency, Hz.
    pub carrier_freq: f64,
    pub l_max: usize,
    pub d_max: usize,
}

impl OtfsNumerology {
    /// Desk-scale default: (M,N) = (64,8), M_t = 64, 480 kHz spacing.
    pub fn desk() -> Self {
        Self {
            m: 64,
            n: 8,
            delta_f: 480e3,
            m_t: 64,
            carrier_freq: 10e9,
            l_max: 16,
            d_max: 8,
        }
    }

    /// (M,N) = (256,8) with 240 kHz spacing.
    pub fn paper() -> Self {
        Self {
            m: 256,
            n: 8,
            delta_f: 240e3,
            m_t: 64,
            carrier_freq: 10e9,
            l_max: 16,
            d_max: 8,
        }
    }

    /// Checks the structural invariants, including that the snapshot
    /// Doppler estimator's unambiguous span covers `nu_max`.
    pub fn validate(&self, nu_max: f64) -> Result<()> {
        if self.m < 2 {
            return Err(Error::Config(format!("M must be >= 2, got {}", self.m)));
        }
        if self.n < 1 {
            return Err(Error::Config("N must be >= 1".into()));
        }
        if !(self.delta_f > 0.0) || !self.delta_f.is_finite() {
            return Err(Error::Config("delta_f must be positive".into()));
        }
        if self.l_max < 1 {
            return Err(Error::Config("l_max must be >= 1".into()));
        }
        if self.m_t <= self.delay_window() {
            return Err(Error::Config(format!(
                "non-ISI window empty: m_t = {} <= l_max + d_max = {}",
                self.m_t,
                self.delay_window()
            )));
        }
        if nu_max < 0.0 || nu_max > self.doppler_span() {
            return Err(Error::Config(format!(
                "nu_max = {nu_max} Hz outside the unambiguous snapshot span {} Hz",
                self.doppler_span()
            )));
        }
        Ok(())
    }

    /// Sampling rate `B = M * delta_f`.
    pub fn sample_rate(&self) -> f64 {
        self.m as f64 * self.delta_f
    }

    /// Combined delay-uncertainty window `L = l_max + d_max`.
    pub fn delay_window(&self) -> usize {
        self.l_max + self.d_max
    }

    /// Non-ISI rows per training sequence, `G = m_t - l_max - d_max`.
    pub fn non_isi_len(&self) -> usize {
        self.m_t.saturating_sub(self.delay_window())
    }

    /// Distance between consecutive TS (and payload) block starts.
    pub fn block_period(&self) -> usize {
        self.m + self.m_t
    }

    pub fn frame_len(&self) -> usize {
        (self.n + 1) * self.m_t + self.n * self.m
    }

    pub fn ts_start(&self, i: usize) -> usize {
        i * self.block_period()
    }

    pub fn payload_start(&self, n: usize) -> usize {
        self.m_t + n * self.block_period()
    }

    /// Unambiguous Doppler span of the TS-snapshot sequence, `B/(M+M_t)`.
    pub fn doppler_span(&self) -> f64 {
        self.sample_rate() / self.block_period() as f64
    }

    /// Doppler bin width of an `n_lattice`-point Doppler lattice over the
    /// frame, `B / (n_lattice (M+M_t))`.
    pub fn doppler_bin(&self, n_lattice: usize) -> f64 {
        self.sample_rate() / (n_lattice as f64 * self.block_period() as f64)
    }

    /// Reference time (sample index) of payload block `n`, used as the
    /// Doppler-lattice sampling instant.
    pub fn block_time(&self, n: usize) -> f64 {
        self.payload_start(n) as f64
    }
}
