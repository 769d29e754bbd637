//! One Monte-Carlo trial: a population and activity draw shared by every
//! configured scheme (paired comparison), each scheme with its own frames,
//! noise, receiver and detector.

use std::collections::BTreeMap;

use crate::channel::{
    apply_channel, dd_cir_on_lattice, doppler_phase, draw_activity, draw_population, ChannelRealization, DdCir,
    TerminalChannel,
};
use crate::channel::apply::noise_only;
use crate::detector::{build_effective_channel, compute_ber, demap, ls_detect, DetectionReport, Ridge, SolverConfig};
use crate::error::Result;
use crate::experiment::config::{ExperimentConfig, Scheme};
use crate::experiment::metrics::{compute_aer, compute_nmse};
use crate::grid::{DdGrid, TfGrid};
use crate::numerology::OtfsNumerology;
use crate::quantizer::FrontEnd;
use crate::receiver::dictionary::ramp_hypotheses;
use crate::receiver::ofdm_rx::{ofdm_pilot, OfdmCsi};
use crate::receiver::{
    build_dictionary, demodulate_payload, subtract_known, DdPilotLayout, DdPilotReceiver, EstimationResult,
    MmvDictionary, OfdmEstimate, OfdmReceiver, ReceiverParams, TerminalEstimate, TsOtfsReceiver,
};
use crate::rng::{item_rng, sequence_seed, trial_seed, Stream};
use crate::waveform::{assemble_frame, assemble_zp_frame, OfdmLayout, OfdmModem, OtfsModem, TrainingSequence};
use crate::C64;

struct DdPilotContext {
    layout: DdPilotLayout,
    seqs: Vec<Vec<C64>>,
    dict: MmvDictionary,
}

struct OfdmContext {
    modem: OfdmModem,
    pilots: Vec<Vec<C64>>,
    dict: MmvDictionary,
}

/// Run-wide immutable state: sequences, dictionaries and modems, shared
/// read-only by all trials.
pub struct RunContext {
    pub config: ExperimentConfig,
    pub ts: Vec<TrainingSequence>,
    pub ts_dict: MmvDictionary,
    otfs: OtfsModem,
    dd: Option<DdPilotContext>,
    ofdm: Option<OfdmContext>,
}

impl RunContext {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        let num = &config.num;
        let seq_seed = sequence_seed(config.seed);
        let ts: Vec<TrainingSequence> = (0..config.k).map(|id| TrainingSequence::generate(seq_seed, id, num.m_t)).collect();
        let ramps = ramp_hypotheses(config.channel.geometry.nu_max, config.doppler_hypotheses);
        let ts_dict = build_dictionary(&ts, num, &ramps)?;
        let dd = if config.schemes.contains(&Scheme::OtfsDdPilot) {
            let layout = DdPilotLayout::new(num)?;
            let seqs: Vec<Vec<C64>> = (0..config.k).map(|id| layout.sequence(seq_seed, id)).collect();
            let dict = DdPilotReceiver::dictionary(&layout, &seqs)?;
            Some(DdPilotContext { layout, seqs, dict })
        } else {
            None
        };
        let ofdm = if config.schemes.contains(&Scheme::OfdmBaseline) {
            let layout = OfdmLayout::matched(num)?;
            let pilots: Vec<Vec<C64>> = (0..config.k).map(|id| ofdm_pilot(seq_seed, id, num.m)).collect();
            let dict = OfdmReceiver::dictionary(&pilots, num.delay_window())?;
            Some(OfdmContext {
                modem: OfdmModem::new(layout),
                pilots,
                dict,
            })
        } else {
            None
        };
        Ok(Self {
            config: config.clone(),
            ts,
            ts_dict,
            otfs: OtfsModem::new(num.m, num.n),
            dd,
            ofdm,
        })
    }

    fn ridge(&self, quant_var: f64) -> Ridge {
        match self.config.detector_reg {
            Some(s) => Ridge::Relative(s),
            None => Ridge::Absolute(self.config.noise_var() + quant_var),
        }
    }

    fn params(&self, quant_var: f64) -> ReceiverParams {
        let c = &self.config;
        ReceiverParams {
            tau: c.cgad_tau,
            max_taps: c.somp_max_taps,
            pad_factor: c.doppler_pad_factor,
            noise_var: c.noise_var() + quant_var,
            nu_max: c.channel.geometry.nu_max,
            oversample: c.oversample_doppler,
        }
    }
}

/// Per-scheme metrics of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    pub misses: usize,
    pub false_alarms: usize,
    pub aer: f64,
    /// `None` when no truly active terminal was detected.
    pub nmse: Option<f64>,
    /// `None` when no terminal was active.
    pub ber: Option<f64>,
    pub solver_iterations: usize,
    pub solver_converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub outcomes: Vec<SchemeOutcome>,
}

/// Full state of one trial, for analyses beyond the summary metrics.
#[derive(Debug, Clone)]
pub struct TrialDetail {
    pub record: TrialRecord,
    pub true_active: Vec<usize>,
    pub true_channels: Vec<TerminalChannel>,
    pub estimates: Vec<EstimationResult>,
}

struct Truth<'a> {
    active: &'a [usize],
    realization: &'a ChannelRealization,
    steering: &'a [Vec<C64>],
    cirs: &'a BTreeMap<usize, DdCir>,
    seed: u64,
}

pub fn run_trial(ctx: &RunContext, trial: usize) -> Result<TrialDetail> {
    let cfg = &ctx.config;
    let num = &cfg.num;
    let seed = trial_seed(cfg.seed, trial);
    let mut population = draw_population(cfg.k, num, &cfg.channel, sequence_seed(cfg.seed), seed);
    let activity = draw_activity(&mut population, cfg.k_a, seed)?;
    let realization = ChannelRealization::from_population(&population, &activity, cfg.noise_var());
    let steering: Vec<Vec<C64>> = population.iter().map(|p| p.steering.clone()).collect();
    let mut cirs = BTreeMap::new();
    for ch in &realization.terminals {
        cirs.insert(ch.id, dd_cir_on_lattice(ch, num, num.m, num.n, None)?);
    }
    let truth = Truth {
        active: &activity.active,
        realization: &realization,
        steering: &steering,
        cirs: &cirs,
        seed,
    };
    let mut outcomes = Vec::with_capacity(cfg.schemes.len());
    let mut estimates = Vec::with_capacity(cfg.schemes.len());
    for &scheme in &cfg.schemes {
        let (est, report) = match scheme {
            Scheme::TsOtfs => run_ts_otfs(ctx, &truth)?,
            Scheme::OtfsDdPilot => run_dd_pilot(ctx, &truth)?,
            Scheme::OfdmBaseline => run_ofdm(ctx, &truth)?,
        };
        let (aer, misses, false_alarms) = compute_aer(&activity.active, &est.active, cfg.k);
        let common: Vec<usize> = activity.active.iter().copied().filter(|i| est.active.contains(i)).collect();
        let est_cirs: BTreeMap<usize, DdCir> = est.terminals.iter().map(|t| (t.id, t.cir.to_evaluation())).collect();
        let nmse = compute_nmse(&cirs, &est_cirs, &common)?;
        outcomes.push(SchemeOutcome {
            scheme,
            misses,
            false_alarms,
            aer,
            nmse,
            ber: report.aggregate(),
            solver_iterations: report.solver_iterations,
            solver_converged: report.solver_converged,
        });
        estimates.push(est);
    }
    Ok(TrialDetail {
        record: TrialRecord { trial, seed, outcomes },
        true_active: activity.active.clone(),
        true_channels: realization.terminals.clone(),
        estimates,
    })
}

fn payload_bits(cfg: &ExperimentConfig, seed: u64, scheme: Scheme, id: usize, symbols: usize) -> Vec<u8> {
    let mut rng = item_rng(seed, Stream::Payload, id as u64 * 4 + scheme.index());
    cfg.constellation.random_bits(symbols, &mut rng)
}

/// Superimposes the frames, adds noise and applies the ADC; returns the
/// quantization noise variance alongside.
fn receive(ctx: &RunContext, truth: &Truth, scheme: Scheme, frames: &[(usize, Vec<C64>)], len: usize) -> Result<(Vec<Vec<C64>>, f64)> {
    let cfg = &ctx.config;
    let mut rng = item_rng(truth.seed, Stream::Noise, scheme.index());
    let refs: Vec<(usize, &[C64])> = frames.iter().map(|(i, f)| (*i, f.as_slice())).collect();
    let mut rx = if refs.is_empty() {
        noise_only(cfg.channel.antennas, len, truth.realization.noise_var, &mut rng)
    } else {
        apply_channel(&refs, truth.realization, cfg.channel.antennas, cfg.num.sample_rate(), &mut rng)?
    };
    let q = FrontEnd::from_bits(cfg.adc_bits).apply(&mut rx)?;
    Ok((rx, q))
}

fn genie(truth: &Truth, with_channel: bool) -> EstimationResult {
    EstimationResult {
        active: truth.active.to_vec(),
        terminals: truth
            .realization
            .terminals
            .iter()
            .map(|ch| TerminalEstimate {
                id: ch.id,
                delays: ch.paths.iter().map(|p| p.delay).collect(),
                doppler: ch.paths.first().map(|p| p.doppler),
                gains: ch.paths.iter().map(|p| p.gain).collect(),
                channel: with_channel.then(|| ch.clone()),
                cir: truth.cirs[&ch.id].clone(),
            })
            .collect(),
        noise_floor: truth.realization.noise_var,
    }
}

/// Channels handed to the detector: at most `A`, strongest first, then
/// sorted by id.
fn detection_set(mut channels: Vec<TerminalChannel>, antennas: usize) -> Vec<TerminalChannel> {
    if channels.len() > antennas {
        channels.sort_by(|a, b| b.energy().partial_cmp(&a.energy()).unwrap().then(a.id.cmp(&b.id)));
        channels.truncate(antennas);
        channels.sort_by_key(|c| c.id);
    }
    channels.retain(|c| !c.paths.is_empty());
    channels
}

/// Joint LS over the given DD positions and per-user demapping.
fn detect_dd(
    ctx: &RunContext,
    grids: &[DdGrid],
    channels: &[TerminalChannel],
    positions: Option<&[(usize, usize)]>,
    ridge: Ridge,
) -> Result<(BTreeMap<usize, Vec<u8>>, usize, bool)> {
    let cfg = &ctx.config;
    let mut detected = BTreeMap::new();
    if channels.is_empty() {
        return Ok((detected, 0, true));
    }
    let y: Vec<C64> = grids.iter().flat_map(|g| g.as_slice().iter().copied()).collect();
    let h = build_effective_channel(channels, &cfg.num, positions)?;
    let solver = SolverConfig {
        reg: ridge.for_channel(&h),
        tol: cfg.solver_tol,
        max_iters: cfg.solver_max_iters,
    };
    let out = ls_detect(&y, &h, &solver)?;
    let per = h.unknowns_per_user();
    for (u, ch) in channels.iter().enumerate() {
        detected.insert(ch.id, demap(&out.x[u * per..(u + 1) * per], cfg.constellation));
    }
    Ok((detected, out.iterations, out.converged))
}

fn report(
    truth_bits: &BTreeMap<usize, Vec<u8>>,
    detected: &BTreeMap<usize, Vec<u8>>,
    truth: &Truth,
    est: &EstimationResult,
    iterations: usize,
    converged: bool,
) -> DetectionReport {
    let mut r = compute_ber(truth_bits, detected, truth.active, &est.active);
    r.solver_iterations = iterations;
    r.solver_converged = converged;
    r
}

fn run_ts_otfs(ctx: &RunContext, truth: &Truth) -> Result<(EstimationResult, DetectionReport)> {
    let cfg = &ctx.config;
    let num = &cfg.num;
    let mn = num.m * num.n;
    let mut bits = BTreeMap::new();
    let mut frames = Vec::new();
    for &id in truth.active {
        let b = payload_bits(cfg, truth.seed, Scheme::TsOtfs, id, mn);
        let grid = DdGrid::from_vec(num.m, num.n, cfg.constellation.map_all(&b))?;
        frames.push((id, assemble_frame(num, &grid, &ctx.ts[id])?.samples));
        bits.insert(id, b);
    }
    let (rx, qvar) = receive(ctx, truth, Scheme::TsOtfs, &frames, num.frame_len())?;
    let est = if cfg.genie_csi {
        genie(truth, true)
    } else {
        TsOtfsReceiver {
            num,
            dict: &ctx.ts_dict,
            ts: &ctx.ts,
            params: ctx.params(qvar),
        }
        .estimate(&rx, truth.steering)?
    };
    let channels = detection_set(est.channels(), cfg.channel.antennas);
    let zero = DdGrid::zeros(num.m, num.n);
    let known_frames: Vec<Vec<C64>> = channels
        .iter()
        .map(|c| assemble_frame(num, &zero, &ctx.ts[c.id]).map(|f| f.samples))
        .collect::<Result<_>>()?;
    let known: Vec<(&TerminalChannel, &[C64])> = channels.iter().zip(&known_frames).map(|(c, f)| (c, f.as_slice())).collect();
    let mut residual = rx;
    subtract_known(&mut residual, &known, num.sample_rate());
    let grids = demodulate_payload(&residual, num, &ctx.otfs);
    let (detected, it, conv) = detect_dd(ctx, &grids, &channels, None, ctx.ridge(qvar))?;
    let rep = report(&bits, &detected, truth, &est, it, conv);
    Ok((est, rep))
}

fn run_dd_pilot(ctx: &RunContext, truth: &Truth) -> Result<(EstimationResult, DetectionReport)> {
    let cfg = &ctx.config;
    let num = &cfg.num;
    let dd = ctx.dd.as_ref().expect("DD-pilot context built for configured scheme");
    let positions = dd.layout.data_positions();
    let mut bits = BTreeMap::new();
    let mut frames = Vec::new();
    for &id in truth.active {
        let b = payload_bits(cfg, truth.seed, Scheme::OtfsDdPilot, id, positions.len());
        let grid = dd.layout.grid(&dd.seqs[id], &cfg.constellation.map_all(&b))?;
        frames.push((id, assemble_zp_frame(num, &grid)?.samples));
        bits.insert(id, b);
    }
    let (rx, qvar) = receive(ctx, truth, Scheme::OtfsDdPilot, &frames, num.frame_len())?;
    let est = if cfg.genie_csi {
        genie(truth, true)
    } else {
        let grids = demodulate_payload(&rx, num, &ctx.otfs);
        DdPilotReceiver {
            num,
            layout: &dd.layout,
            dict: &dd.dict,
            params: ctx.params(qvar),
        }
        .estimate(&grids, truth.steering)?
    };
    let channels = detection_set(est.channels(), cfg.channel.antennas);
    let known_frames: Vec<Vec<C64>> = channels
        .iter()
        .map(|c| assemble_zp_frame(num, &dd.layout.pilot_grid(&dd.seqs[c.id])).map(|f| f.samples))
        .collect::<Result<_>>()?;
    let known: Vec<(&TerminalChannel, &[C64])> = channels.iter().zip(&known_frames).map(|(c, f)| (c, f.as_slice())).collect();
    let mut residual = rx;
    subtract_known(&mut residual, &known, num.sample_rate());
    let grids = demodulate_payload(&residual, num, &ctx.otfs);
    let (detected, it, conv) = detect_dd(ctx, &grids, &channels, Some(&positions), ctx.ridge(qvar))?;
    let rep = report(&bits, &detected, truth, &est, it, conv);
    Ok((est, rep))
}

/// True taps on every symbol for the genie OFDM receiver.
fn genie_ofdm_csi(ch: &TerminalChannel, layout: &OfdmLayout, fs: f64) -> OfdmCsi {
    OfdmCsi {
        id: ch.id,
        delays: ch.paths.iter().map(|p| p.delay).collect(),
        symbols: (0..layout.n_sym).collect(),
        taps: ch
            .paths
            .iter()
            .map(|p| {
                (0..layout.n_sym)
                    .map(|s| p.gain * doppler_phase(p.doppler, layout.symbol_center(s), fs))
                    .collect()
            })
            .collect(),
    }
}

fn run_ofdm(ctx: &RunContext, truth: &Truth) -> Result<(EstimationResult, DetectionReport)> {
    let cfg = &ctx.config;
    let num = &cfg.num;
    let of = ctx.ofdm.as_ref().expect("OFDM context built for configured scheme");
    let layout = of.modem.layout().clone();
    let data_syms = layout.data_symbols();
    let mut bits = BTreeMap::new();
    let mut frames = Vec::new();
    for &id in truth.active {
        let b = payload_bits(cfg, truth.seed, Scheme::OfdmBaseline, id, data_syms.len() * layout.m);
        let symbols = cfg.constellation.map_all(&b);
        let mut tf = TfGrid::zeros(layout.n_sym, layout.m);
        for &s in &layout.pilot_symbols {
            tf.symbol_mut(s).copy_from_slice(&of.pilots[id]);
        }
        for (i, &s) in data_syms.iter().enumerate() {
            tf.symbol_mut(s).copy_from_slice(&symbols[i * layout.m..(i + 1) * layout.m]);
        }
        frames.push((id, of.modem.modulate(&tf)?));
        bits.insert(id, b);
    }
    let (rx, qvar) = receive(ctx, truth, Scheme::OfdmBaseline, &frames, layout.frame_len())?;
    let receiver = OfdmReceiver {
        num,
        modem: &of.modem,
        dict: &of.dict,
        params: ctx.params(qvar),
    };
    let tf = receiver.demodulate(&rx);
    let mut est = if cfg.genie_csi {
        let fs = num.sample_rate();
        OfdmEstimate {
            result: genie(truth, false),
            csi: truth.realization.terminals.iter().map(|c| genie_ofdm_csi(c, &layout, fs)).collect(),
        }
    } else {
        receiver.estimate(&tf, truth.steering)?
    };
    if est.csi.len() > cfg.channel.antennas {
        let energy = |c: &OfdmCsi| c.taps.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>();
        est.csi.sort_by(|a, b| energy(b).partial_cmp(&energy(a)).unwrap().then(a.id.cmp(&b.id)));
        est.csi.truncate(cfg.channel.antennas);
        est.csi.sort_by_key(|c| c.id);
    }
    let soft = receiver.detect(&tf, &est, truth.steering, ctx.ridge(qvar))?;
    let detected: BTreeMap<usize, Vec<u8>> = est
        .csi
        .iter()
        .zip(&soft)
        .map(|(c, s)| (c.id, demap(s, cfg.constellation)))
        .collect();
    let rep = report(&bits, &detected, truth, &est.result, 0, true);
    Ok((est.result, rep))
}

/// Numerology accessor used by analyses that rebuild lattices.
pub fn numerology(ctx: &RunContext) -> &OtfsNumerology {
    &ctx.config.num
}
