//! DD-pilot baselines: the single-impulse readout and a multi-user
//! embedded-sequence scheme run through the same SOMP + CG-AD machinery.

use std::ops::Range;

use crate::channel::{DdCir, PathParams, TerminalChannel};
use crate::error::{Error, Result};
use crate::grid::DdGrid;
use crate::linalg::CMat;
use crate::numerology::OtfsNumerology;
use crate::receiver::cgad::{cg_ad, residual_noise_floor};
use crate::receiver::dictionary::{build_shift_dictionary, MmvDictionary};
use crate::receiver::somp::{somp_recover_steered, SompStop};
use crate::receiver::{mrc_snapshots, EstimationResult, ReceiverParams, TerminalEstimate};
use crate::rng::Stream;
use crate::waveform::frame::unit_power_gaussian;
use crate::C64;

/// One DD impulse of amplitude `amplitude` at `(row, 0)` with a guard of
/// `L - 1` delay rows on each side across every Doppler column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpulsePilot {
    pub row: usize,
    pub amplitude: f64,
    pub window: usize,
}

impl ImpulsePilot {
    pub fn new(num: &OtfsNumerology, row: usize, amplitude: f64) -> Result<Self> {
        let window = num.delay_window();
        if 2 * window - 1 > num.m || row >= num.m {
            return Err(Error::Config(format!(
                "guard region of {} delay rows does not fit in M = {}",
                2 * window - 1,
                num.m
            )));
        }
        Ok(Self {
            row,
            amplitude,
            window,
        })
    }

    /// Whether `(l, k)` may carry data.
    pub fn is_data(&self, m: usize, l: usize) -> bool {
        // cyclic distance from the guard start
        let start = (self.row + m + 1 - self.window) % m;
        (l + m - start) % m >= 2 * self.window - 1
    }

    pub fn place(&self, grid: &mut DdGrid) {
        grid.set(self.row, 0, C64::new(self.amplitude, 0.0));
    }
}

/// Thresholded readout of the `L x N` window following the pilot in the
/// received DD grid; entries with `|v|^2 <= threshold` (after scaling by the
/// pilot amplitude) are zeroed.
pub fn dd_pilot_baseline_ce(rx: &DdGrid, pilot: &ImpulsePilot, threshold: f64) -> Result<DdCir> {
    let (m, n) = rx.shape();
    if 2 * pilot.window - 1 > m {
        return Err(Error::Config("guard region does not fit".into()));
    }
    let mut cir = DdCir::zeros(m, n, n);
    for d in 0..pilot.window {
        for k in 0..n {
            let v = rx.get((pilot.row + d) % m, k) / pilot.amplitude;
            if v.norm_sqr() > threshold {
                cir.coeffs.set(d, k, v);
            }
        }
    }
    Ok(cir)
}

/// Multi-user layout: each terminal's pilot sequence occupies delay rows
/// `[0, R_p)` of Doppler column 0; rows `[M - L + 1, M)` stay empty so data
/// never wraps onto the pilot rows; data fills rows `[R_p, M - L + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DdPilotLayout {
    pub m: usize,
    pub n: usize,
    pub pilot_rows: usize,
    pub data_rows: Range<usize>,
    pub amplitude: f64,
    pub window: usize,
}

impl DdPilotLayout {
    /// `R_p = G` observation rows; pilot energy makes the frame energy equal
    /// to that of a TS-OTFS frame with unit-power TS and data.
    pub fn new(num: &OtfsNumerology) -> Result<Self> {
        let window = num.delay_window();
        let pilot_rows = num.non_isi_len();
        let data_end = num.m + 1 - window;
        if pilot_rows == 0 || pilot_rows >= data_end {
            return Err(Error::Config(format!(
                "DD pilot region of {pilot_rows} rows plus a {} row guard leaves no data rows in M = {}",
                window - 1,
                num.m
            )));
        }
        let data = (data_end - pilot_rows) * num.n;
        let budget = ((num.n + 1) * num.m_t + num.n * num.m) as f64;
        let amplitude = ((budget - data as f64) / pilot_rows as f64).sqrt();
        Ok(Self {
            m: num.m,
            n: num.n,
            pilot_rows,
            data_rows: pilot_rows..data_end,
            amplitude,
            window,
        })
    }

    pub fn data_positions(&self) -> Vec<(usize, usize)> {
        self.data_rows
            .clone()
            .flat_map(|l| (0..self.n).map(move |k| (l, k)))
            .collect()
    }

    /// Unit-power pilot sequence of terminal `id` (before amplitude).
    pub fn sequence(&self, seed: u64, id: usize) -> Vec<C64> {
        unit_power_gaussian(seed, Stream::DdPilot, id, self.pilot_rows)
    }

    pub fn pilot_grid(&self, seq: &[C64]) -> DdGrid {
        let mut g = DdGrid::zeros(self.m, self.n);
        for (l, &v) in seq.iter().enumerate() {
            g.set(l, 0, v * self.amplitude);
        }
        g
    }

    /// Pilot plus data symbols placed at [`Self::data_positions`].
    pub fn grid(&self, seq: &[C64], data: &[C64]) -> Result<DdGrid> {
        let pos = self.data_positions();
        if data.len() != pos.len() {
            return Err(Error::dim(pos.len(), data.len()));
        }
        let mut g = self.pilot_grid(seq);
        for (&(l, k), &v) in pos.iter().zip(data) {
            g.set(l, k, v);
        }
        Ok(g)
    }
}

pub struct DdPilotReceiver<'a> {
    pub num: &'a OtfsNumerology,
    pub layout: &'a DdPilotLayout,
    pub dict: &'a MmvDictionary,
    pub params: ReceiverParams,
}

impl<'a> DdPilotReceiver<'a> {
    /// Dictionary over all `K` pilot sequences (amplitude included).
    pub fn dictionary(layout: &DdPilotLayout, seqs: &[Vec<C64>]) -> Result<MmvDictionary> {
        let scaled: Vec<Vec<C64>> = seqs
            .iter()
            .map(|s| s.iter().map(|v| v * layout.amplitude).collect())
            .collect();
        build_shift_dictionary(&scaled, layout.pilot_rows, layout.window)
    }

    /// `grids[a]` is the demodulated DD grid at antenna `a`.
    pub fn estimate(&self, grids: &[DdGrid], steering: &[Vec<C64>]) -> Result<EstimationResult> {
        let lay = self.layout;
        let antennas = grids.len();
        let mut cols = Vec::with_capacity(lay.n * antennas);
        for k in 0..lay.n {
            for g in grids {
                cols.push((0..lay.pilot_rows).map(|l| g.get(l, k)).collect());
            }
        }
        let y = CMat::from_columns(lay.pilot_rows, &cols);
        // head rows carry folded-back noise from the overlap-add
        let folded = (lay.window - 1).min(lay.pilot_rows);
        let stop = SompStop {
            max_taps: self.params.max_taps,
            residual_energy: 1.05 * ((lay.pilot_rows + folded) * lay.n * antennas) as f64 * self.params.noise_var,
        };
        let snap = somp_recover_steered(&y, self.dict, &stop, steering)?;
        let floor = residual_noise_floor(&snap);
        let active = cg_ad(&snap, self.dict, floor, self.params.tau, Some(steering));
        let fs = self.num.sample_rate();
        let bin = self.num.doppler_bin(lay.n);
        let span = self.num.doppler_span();
        let lo = self.params.nu_max / 2.0 - span / 2.0;
        let t0 = self.num.block_time(0);
        let mut terminals = Vec::with_capacity(active.len());
        for &u in &active {
            let mut cir = DdCir::zeros(lay.m, lay.n, lay.n);
            let mut paths = Vec::new();
            for (s, &j) in snap.support.iter().enumerate() {
                let (b, d) = self.dict.locate(j);
                if b != u {
                    continue;
                }
                let per_bin = mrc_snapshots(&snap.coeffs[s], &steering[u]);
                for (k, v) in per_bin.iter().enumerate() {
                    if v.norm_sqr() * antennas as f64 <= self.params.tau * floor {
                        continue;
                    }
                    let h = v / self.dict.scales[j];
                    cir.coeffs.set(d, k, cir.coeffs.get(d, k) + h);
                }
            }
            for d in 0..lay.window {
                for k in 0..lay.n {
                    let h = cir.coeffs.get(d, k);
                    if h.norm() == 0.0 {
                        continue;
                    }
                    let nu = lo + (k as f64 * bin - lo).rem_euclid(span);
                    // re-reference the atom phase from block 0 to t = 0
                    let gain = h * crate::channel::doppler_phase(-nu, t0, fs);
                    paths.push(PathParams { delay: d, doppler: nu, gain });
                }
            }
            terminals.push(TerminalEstimate {
                id: u,
                delays: cir.support(),
                doppler: None,
                gains: paths.iter().map(|p| p.gain).collect(),
                channel: Some(TerminalChannel {
                    id: u,
                    paths,
                    steering: steering[u].clone(),
                }),
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
