//! Doppler-blind CP-OFDM baseline receiver: SOMP + CG-AD on the pilot
//! symbols under a quasi-static channel model, linear CIR interpolation in
//! time, and a per-subcarrier multi-user LS equalizer.

use crate::channel::DdCir;
use crate::detector::Ridge;
use crate::error::{Error, Result};
use crate::grid::TfGrid;
use crate::linalg::{cholesky_solve, CMat};
use crate::numerology::OtfsNumerology;
use crate::receiver::cgad::{cg_ad, residual_noise_floor, terminal_taps};
use crate::receiver::dictionary::{build_pilot_dictionary, MmvDictionary};
use crate::receiver::somp::somp_recover_steered;
use crate::receiver::{mrc_snapshots, EstimationResult, ReceiverParams, TerminalEstimate};
use crate::rng::Stream;
use crate::waveform::frame::unit_power_gaussian;
use crate::waveform::ofdm::interp_weights_f;
use crate::waveform::{OfdmLayout, OfdmModem};
use crate::C64;

/// Per-terminal CIR taps measured on each pilot symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmCsi {
    pub id: usize,
    pub delays: Vec<usize>,
    /// OFDM symbols the taps are measured on, ascending.
    pub symbols: Vec<usize>,
    /// `taps[i][p]`: tap `delays[i]` on symbol `symbols[p]`.
    pub taps: Vec<Vec<C64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfdmEstimate {
    pub result: EstimationResult,
    pub csi: Vec<OfdmCsi>,
}

pub struct OfdmReceiver<'a> {
    pub num: &'a OtfsNumerology,
    pub modem: &'a OfdmModem,
    pub dict: &'a MmvDictionary,
    pub params: ReceiverParams,
}

/// Full-band unit-power pilot of terminal `id`.
pub fn ofdm_pilot(seed: u64, id: usize, m: usize) -> Vec<C64> {
    unit_power_gaussian(seed, Stream::OfdmPilot, id, m)
}

impl<'a> OfdmReceiver<'a> {
    pub fn dictionary(pilots: &[Vec<C64>], window: usize) -> Result<MmvDictionary> {
        build_pilot_dictionary(pilots, window)
    }

    fn layout(&self) -> &OfdmLayout {
        self.modem.layout()
    }

    pub fn demodulate(&self, received: &[Vec<C64>]) -> Vec<TfGrid> {
        received.iter().map(|r| self.modem.demodulate(r)).collect()
    }

    pub fn estimate(&self, tf: &[TfGrid], steering: &[Vec<C64>]) -> Result<OfdmEstimate> {
        let lay = self.layout();
        let antennas = tf.len();
        let mut cols = Vec::with_capacity(lay.pilot_symbols.len() * antennas);
        for &s in &lay.pilot_symbols {
            for g in tf {
                cols.push(g.symbol(s).to_vec());
            }
        }
        let y = CMat::from_columns(lay.m, &cols);
        let snap = somp_recover_steered(&y, self.dict, &self.params.stop(y.rows, y.cols), steering)?;
        let floor = residual_noise_floor(&snap);
        let active = cg_ad(&snap, self.dict, floor, self.params.tau, Some(steering));
        let centers: Vec<f64> = lay.pilot_symbols.iter().map(|&s| lay.symbol_center(s)).collect();
        let mut csi = Vec::with_capacity(active.len());
        let mut terminals = Vec::with_capacity(active.len());
        for &u in &active {
            let mut taps = terminal_taps(&snap, self.dict, u, floor, self.params.tau, Some(steering));
            if taps.is_empty() {
                taps = snap
                    .support
                    .iter()
                    .enumerate()
                    .filter(|(_, &j)| self.dict.locate(j).0 == u)
                    .map(|(s, &j)| (s, self.dict.locate(j).1))
                    .collect();
            }
            let series: Vec<Vec<C64>> = taps
                .iter()
                .map(|&(s, _)| {
                    let j = snap.support[s];
                    mrc_snapshots(&snap.coeffs[s], &steering[u])
                        .into_iter()
                        .map(|v| v / self.dict.scales[j])
                        .collect()
                })
                .collect();
            let delays: Vec<usize> = taps.iter().map(|t| t.1).collect();
            let mut samples = vec![vec![C64::default(); self.num.n]; self.num.m];
            for (&d, ser) in delays.iter().zip(&series) {
                for (n, out) in samples[d].iter_mut().enumerate() {
                    *out += interpolate(&centers, ser, self.num.block_time(n));
                }
            }
            let cir = DdCir::from_time_samples(&samples, self.num.n);
            terminals.push(TerminalEstimate {
                id: u,
                delays: delays.clone(),
                doppler: None,
                gains: series.iter().map(|s| s.iter().sum::<C64>() / s.len() as f64).collect(),
                channel: None,
                cir,
            });
            csi.push(OfdmCsi {
                id: u,
                delays,
                symbols: lay.pilot_symbols.clone(),
                taps: series,
            });
        }
        Ok(OfdmEstimate {
            result: EstimationResult {
                active,
                terminals,
                noise_floor: floor,
            },
            csi,
        })
    }

    /// Frequency response of one terminal on symbol `s` from the
    /// time-interpolated taps.
    pub fn frequency_response(&self, csi: &OfdmCsi, s: usize) -> Vec<C64> {
        let lay = self.layout();
        let centers: Vec<f64> = csi.symbols.iter().map(|&p| lay.symbol_center(p)).collect();
        let t = lay.symbol_center(s);
        let h: Vec<C64> = csi.taps.iter().map(|ser| interpolate(&centers, ser, t)).collect();
        (0..lay.m)
            .map(|m| {
                csi.delays
                    .iter()
                    .zip(&h)
                    .map(|(&d, v)| v * C64::from_polar(1.0, -std::f64::consts::TAU * ((m * d) % lay.m) as f64 / lay.m as f64))
                    .sum()
            })
            .collect()
    }

    /// Per-subcarrier LS separation of the estimated users on every data
    /// symbol; returns soft symbols per user in `(data symbol, subcarrier)`
    /// order.
    pub fn detect(&self, tf: &[TfGrid], est: &OfdmEstimate, steering: &[Vec<C64>], ridge: Ridge) -> Result<Vec<Vec<C64>>> {
        let lay = self.layout();
        let users = est.csi.len();
        let antennas = tf.len();
        if users > antennas {
            return Err(Error::Identifiability {
                users,
                antennas,
                unknowns_per_user: 1,
                measurements_per_antenna: 1,
            });
        }
        let data = lay.data_symbols();
        let mut out = vec![Vec::with_capacity(data.len() * lay.m); users];
        if users == 0 {
            return Ok(out);
        }
        for &s in &data {
            let resp: Vec<Vec<C64>> = est.csi.iter().map(|c| self.frequency_response(c, s)).collect();
            for m in 0..lay.m {
                // G[a][u] = steer_u[a] H_u[m]
                let g: Vec<Vec<C64>> = (0..antennas)
                    .map(|a| est.csi.iter().enumerate().map(|(u, c)| steering[c.id][a] * resp[u][m]).collect())
                    .collect();
                let mut gram = vec![C64::default(); users * users];
                let mut rhs = vec![C64::default(); users];
                for a in 0..antennas {
                    let y = tf[a].get(s, m);
                    for i in 0..users {
                        rhs[i] += g[a][i].conj() * y;
                        for j in 0..users {
                            gram[i * users + j] += g[a][i].conj() * g[a][j];
                        }
                    }
                }
                let trace: f64 = (0..users).map(|i| gram[i * users + i].re).sum();
                let load = ridge.weight(trace / users as f64) + 1e-300;
                for i in 0..users {
                    gram[i * users + i] += load;
                }
                let x = cholesky_solve(&gram, users, &rhs, 1e-14).unwrap_or_else(|_| vec![C64::default(); users]);
                for (o, v) in out.iter_mut().zip(x) {
                    o.push(v);
                }
            }
        }
        Ok(out)
    }
}

/// Linear interpolation of `values` sampled at `anchors`, held at the ends.
fn interpolate(anchors: &[f64], values: &[C64], t: f64) -> C64 {
    let (i, j, w) = interp_weights_f(anchors, t);
    values[i] * (1.0 - w) + values[j] * w
}
