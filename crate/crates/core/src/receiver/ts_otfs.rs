//! TS-OTFS receiver: non-ISI extraction, SOMP, CG-AD, snapshot Doppler
//! estimation, joint LS gain fit and DD CIR reconstruction.

use crate::channel::dd_cir_on_lattice;
use crate::error::Result;
use crate::numerology::OtfsNumerology;
use crate::receiver::cgad::{cg_ad, residual_noise_floor, strongest_per_delay, terminal_taps};
use crate::receiver::dictionary::MmvDictionary;
use crate::receiver::doppler::{estimate_doppler, DopplerSearch};
use crate::receiver::gains::{ls_fit_gains, PathHypothesis};
use crate::receiver::observation::extract_non_isi;
use crate::receiver::somp::somp_recover_steered;
use crate::receiver::{mrc_snapshots, EstimationResult, ReceiverParams, TerminalEstimate};
use crate::waveform::TrainingSequence;
use crate::C64;

pub struct TsOtfsReceiver<'a> {
    pub num: &'a OtfsNumerology,
    pub dict: &'a MmvDictionary,
    /// Training sequences of all `K` potential terminals, indexed by id.
    pub ts: &'a [TrainingSequence],
    pub params: ReceiverParams,
}

impl TsOtfsReceiver<'_> {
    pub fn doppler_search(&self) -> DopplerSearch {
        let span = self.num.doppler_span();
        DopplerSearch {
            spacing: self.num.block_period() as f64,
            sample_rate: self.num.sample_rate(),
            pad_factor: self.params.pad_factor,
            window_lo: self.params.nu_max / 2.0 - span / 2.0,
            newton_steps: 2,
        }
    }

    /// `steering[k]` is the array response of potential terminal `k`.
    pub fn estimate(&self, received: &[Vec<C64>], steering: &[Vec<C64>]) -> Result<EstimationResult> {
        let num = self.num;
        let obs = extract_non_isi(received, num)?;
        let snap = somp_recover_steered(&obs.y, self.dict, &self.params.stop(obs.y.rows, obs.y.cols), steering)?;
        let floor = residual_noise_floor(&snap);
        let active = cg_ad(&snap, self.dict, floor, self.params.tau, Some(steering));
        let search = self.doppler_search();
        let mut hyps = Vec::with_capacity(active.len());
        for &k in &active {
            let mut taps = terminal_taps(&snap, self.dict, k, floor, self.params.tau, Some(steering));
            if taps.is_empty() {
                taps = snap
                    .support
                    .iter()
                    .enumerate()
                    .filter(|(_, &j)| self.dict.locate(j).0 == k)
                    .map(|(s, &j)| (s, self.dict.locate(j).1))
                    .collect();
                strongest_per_delay(&snap, &mut taps);
            }
            let dominant = taps
                .iter()
                .max_by(|a, b| snap.tap_energy(a.0).partial_cmp(&snap.tap_energy(b.0)).unwrap())
                .map(|t| t.0)
                .expect("active terminal has taps");
            let seq = mrc_snapshots(&snap.coeffs[dominant], &steering[k]);
            let nu = estimate_doppler(&[seq], &search)?;
            hyps.push(PathHypothesis {
                id: k,
                ts: &self.ts[k].samples,
                delays: taps.iter().map(|t| t.1).collect(),
                doppler: nu,
                steering: &steering[k],
            });
        }
        let fit = ls_fit_gains(received, &hyps, num)?;
        let n_lattice = self.params.oversample.max(1) * num.n;
        let mut terminals = Vec::with_capacity(active.len());
        for (h, ch) in hyps.iter().zip(fit.channels) {
            let cir = dd_cir_on_lattice(&ch, num, num.m, n_lattice, Some(1))?;
            terminals.push(TerminalEstimate {
                id: h.id,
                delays: ch.paths.iter().map(|p| p.delay).collect(),
                doppler: Some(h.doppler),
                gains: ch.paths.iter().map(|p| p.gain).collect(),
                channel: Some(ch),
                cir,
            });
        }
        Ok(EstimationResult {
            active,
            terminals,
            noise_floor: floor,
        })
    }
}
