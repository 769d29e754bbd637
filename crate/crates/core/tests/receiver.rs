mod common;

use std::f64::consts::TAU;

use common::oracles::{exhaustive_support, random_terminal, sequences, window};
use common::{cis, energy, random_grid, receive_ts_otfs, rng};
use gfra_core::channel::population::steering_vector;
use gfra_core::channel::{dd_cir_on_lattice, PathParams, TerminalChannel};
use gfra_core::receiver::dictionary::{auto_ramp_count, ramp_hypotheses};
use gfra_core::receiver::{
    build_dictionary, dd_pilot_baseline_ce, demodulate_payload, estimate_doppler, extract_non_isi, ls_fit_gains,
    somp_recover, DopplerSearch, ImpulsePilot, PathHypothesis, ReceiverParams, SompStop, TsOtfsReceiver,
};
use gfra_core::waveform::{assemble_zp_frame, OtfsModem};
use gfra_core::{DdGrid, OtfsNumerology, C64};
use rand::seq::index::sample;
use rand::Rng;

const NU_MAX: f64 = 178.2e3;

#[test]
fn somp_matches_exhaustive_search_on_small_instances() {
    let num = OtfsNumerology { m_t: 32, l_max: 6, d_max: 2, ..OtfsNumerology::desk() };
    let (k, l) = (6, num.delay_window());
    assert_eq!(num.non_isi_len(), 24);
    for seed in 0..100u64 {
        let ts = sequences(seed, k, &num);
        let mut r = rng(seed);
        let active = sample(&mut r, k, 2).into_vec();
        let channels: Vec<TerminalChannel> = active
            .iter()
            .map(|&id| {
                let mut d = sample(&mut r, l, 2).into_vec();
                d.sort_unstable();
                random_terminal(&mut r, id, &d, 0.0, 2)
            })
            .collect();
        let rx = receive_ts_otfs(&num, &ts, &channels, 2, 0.0, seed, seed);
        let y = extract_non_isi(&rx, &num).unwrap().y;
        let found = exhaustive_support(&ts, &num, &y);
        assert_eq!(found.len(), 1, "seed {seed}: exhaustive search not unique");

        let dict = build_dictionary(&ts, &num, &[]).unwrap();
        let out = somp_recover(&y, &dict, &SompStop { max_taps: 4, residual_energy: 0.0 }).unwrap();
        let mut support = out.support.clone();
        support.sort_unstable();
        assert_eq!(support, found[0], "seed {seed}");
        assert!(out.residual_history.windows(2).all(|w| w[1] < w[0]));
    }
}

#[test]
fn gaussian_dictionary_coherence_bound() {
    let num = OtfsNumerology::desk();
    assert_eq!((num.non_isi_len(), num.delay_window()), (40, 24));
    for seed in 0..10 {
        let ts = sequences(seed, 100, &num);
        let atoms: Vec<Vec<C64>> = ts
            .iter()
            .flat_map(|t| (0..num.delay_window()).map(|d| window(t, &num, d)).collect::<Vec<_>>())
            .map(|a| {
                let s = energy(&a).sqrt();
                a.iter().map(|v| v / s).collect()
            })
            .collect();
        assert_eq!(atoms.len(), 2400);
        let mut worst = 0.0f64;
        for i in 0..atoms.len() {
            for j in i + 1..atoms.len() {
                let c: C64 = atoms[i].iter().zip(&atoms[j]).map(|(a, b)| a.conj() * b).sum();
                worst = worst.max(c.norm());
            }
        }
        assert!(worst < 0.65, "seed {seed}: {worst}");
        let dict = build_dictionary(&ts, &num, &[]).unwrap();
        assert!(dict.coherence() <= worst + 1e-12);
    }
}

#[test]
fn dictionary_structure() {
    let num = OtfsNumerology::desk();
    let ts = sequences(3, 1, &num);
    let dict = build_dictionary(&ts, &num, &[]).unwrap();
    let w0 = window(&ts[0], &num, 0);
    let s = energy(&w0).sqrt();
    assert!(dict.atom(0).iter().zip(&w0).all(|(a, b)| (a - b / s).norm() < 1e-12));
    for d in 1..num.delay_window() {
        let atom = dict.atom(d);
        let prev = dict.atom(d - 1);
        let ratio = dict.scales[d - 1] / dict.scales[d];
        // shifting by one tap moves the window one sample later in the sequence
        for r in 1..num.non_isi_len() {
            assert!((atom[r] - prev[r - 1] * ratio).norm() < 1e-12);
        }
    }
    assert_eq!(auto_ramp_count(&num, NU_MAX, 0.35), ramp_hypotheses(NU_MAX, 5).len());
}

#[test]
fn non_isi_window_ignores_payload() {
    let num = OtfsNumerology::desk();
    let ts = sequences(1, 10, &num);
    for seed in 0..50u64 {
        let mut r = rng(1000 + seed);
        let channels: Vec<TerminalChannel> = sample(&mut r, 10, 3)
            .into_iter()
            .map(|id| {
                let mut d = sample(&mut r, num.delay_window(), 3).into_vec();
                d.sort_unstable();
                let nu = r.gen_range(0.0..NU_MAX);
                random_terminal(&mut r, id, &d, nu, 4)
            })
            .collect();
        let a = extract_non_isi(&receive_ts_otfs(&num, &ts, &channels, 4, 0.03, seed, 77), &num).unwrap();
        let b = extract_non_isi(&receive_ts_otfs(&num, &ts, &channels, 4, 0.03, seed + 5000, 77), &num).unwrap();
        assert!(a.y.col(0).iter().zip(b.y.col(0)).all(|(x, y)| x.re.to_bits() == y.re.to_bits()));
        assert_eq!(a, b, "seed {seed}");
    }
}

#[test]
fn identity_channel_observes_sequence_tail() {
    let num = OtfsNumerology::desk();
    let ts = sequences(2, 1, &num);
    let ch = TerminalChannel {
        id: 0,
        paths: vec![PathParams { delay: 0, doppler: 0.0, gain: C64::new(1.0, 0.0) }],
        steering: vec![C64::new(1.0, 0.0)],
    };
    let obs = extract_non_isi(&receive_ts_otfs(&num, &ts, &[ch], 1, 0.0, 1, 1), &num).unwrap();
    assert_eq!(obs.y.cols, num.n + 1);
    for c in 0..obs.y.cols {
        assert_eq!(obs.y.col(c), &ts[0].samples[num.m_t - num.non_isi_len()..]);
    }
}

fn params(noise_var: f64) -> ReceiverParams {
    ReceiverParams { tau: 3.0, max_taps: 30, pad_factor: 32, noise_var, nu_max: NU_MAX, oversample: 2 }
}

#[test]
fn noiseless_tone_frequency() {
    let num = OtfsNumerology::desk();
    let ts = sequences(1, 1, &num);
    let dict = build_dictionary(&ts, &num, &[]).unwrap();
    let rx = TsOtfsReceiver { num: &num, dict: &dict, ts: &ts, params: params(0.0) };
    let search: DopplerSearch = rx.doppler_search();
    let fs = num.sample_rate();
    for nu in [50e3, 0.0, 1234.5, NU_MAX] {
        let seqs: Vec<Vec<C64>> = (0..2)
            .map(|a| (0..=num.n).map(|i| C64::new(0.3, a as f64) * cis(TAU * nu * num.ts_start(i) as f64 / fs)).collect())
            .collect();
        let est = estimate_doppler(&seqs, &search).unwrap();
        assert!((est - nu).abs() < 1.0, "{nu} -> {est}");
    }
}

#[test]
fn doppler_accuracy_beats_the_lattice() {
    let num = OtfsNumerology::desk();
    let (k, antennas, sigma2) = (20, 4, 10f64.powf(-1.5));
    let ts = sequences(11, k, &num);
    let ramps = ramp_hypotheses(NU_MAX, auto_ramp_count(&num, NU_MAX, 0.35));
    let dict = build_dictionary(&ts, &num, &ramps).unwrap();
    let rx = TsOtfsReceiver { num: &num, dict: &dict, ts: &ts, params: params(sigma2) };
    let mut r = rng(5);
    let (mut se, mut count) = (0.0, 0);
    for trial in 0..500u64 {
        let id = r.gen_range(0..k);
        let mut d = sample(&mut r, num.l_max, 2).into_vec();
        d.sort_unstable();
        let nu = r.gen_range(0.0..NU_MAX);
        let mut ch = random_terminal(&mut r, id, &d, nu, antennas);
        let e = ch.energy();
        ch.paths.iter_mut().for_each(|p| p.gain /= e.sqrt());
        let steering: Vec<Vec<C64>> = (0..k).map(|i| if i == id { ch.steering.clone() } else { vec![C64::new(1.0, 0.0); antennas] }).collect();
        let received = receive_ts_otfs(&num, &ts, &[ch], antennas, sigma2, trial, trial + 9000);
        let est = rx.estimate(&received, &steering).unwrap();
        if let Some(t) = est.terminal(id) {
            se += (t.doppler.unwrap() - nu).powi(2);
            count += 1;
        }
    }
    assert!(count >= 490, "{count}");
    let rmse = (se / count as f64).sqrt();
    assert!(rmse < 0.1 * num.doppler_bin(num.n), "{rmse}");
}

#[test]
fn exact_hypotheses_give_exact_gains() {
    let num = OtfsNumerology::desk();
    let ts = sequences(4, 6, &num);
    for seed in 0..5u64 {
        let mut r = rng(seed);
        let channels: Vec<TerminalChannel> = (0..3)
            .map(|i| {
                let mut d = sample(&mut r, num.delay_window(), 3).into_vec();
                d.sort_unstable();
                let nu = r.gen_range(0.0..NU_MAX);
                random_terminal(&mut r, 2 * i, &d, nu, 4)
            })
            .collect();
        let rx = receive_ts_otfs(&num, &ts, &channels, 4, 0.0, seed, seed);
        let hyps: Vec<PathHypothesis> = channels
            .iter()
            .map(|c| PathHypothesis {
                id: c.id,
                ts: &ts[c.id].samples,
                delays: c.paths.iter().map(|p| p.delay).collect(),
                doppler: c.paths[0].doppler,
                steering: &c.steering,
            })
            .collect();
        let fit = ls_fit_gains(&rx, &hyps, &num).unwrap();
        assert!(fit.dropped.is_empty());
        for (est, truth) in fit.channels.iter().zip(&channels) {
            for (a, b) in est.paths.iter().zip(&truth.paths) {
                assert_eq!(a.delay, b.delay);
                assert!((a.gain - b.gain).norm() < 1e-8);
            }
            let h = dd_cir_on_lattice(truth, &num, num.delay_window(), 2 * num.n, None).unwrap();
            let e = dd_cir_on_lattice(est, &num, num.delay_window(), 2 * num.n, None).unwrap();
            let err: f64 = h.coeffs.as_slice().iter().zip(e.coeffs.as_slice()).map(|(a, b)| (a - b).norm_sqr()).sum();
            assert!(err / h.energy() < 1e-12);
        }
    }
}

#[test]
fn gain_variance_matches_least_squares_formula() {
    let num = OtfsNumerology::desk();
    let ts = sequences(6, 1, &num);
    let sigma2 = 10f64.powf(-1.5);
    let (delay, nu, antennas) = (5, 61.3e3, 2);
    let steer = steering_vector(antennas, 0.3, 0.5);
    let ch = TerminalChannel {
        id: 0,
        paths: vec![PathParams { delay, doppler: nu, gain: C64::new(1.0, 0.0) }],
        steering: steer.clone(),
    };
    let basis_energy = antennas as f64 * (num.n + 1) as f64 * energy(&window(&ts[0], &num, delay));
    let trials = 1000;
    let mut var = 0.0;
    for t in 0..trials {
        let rx = receive_ts_otfs(&num, &ts, &[ch.clone()], antennas, sigma2, t, 50_000 + t);
        let hyp = PathHypothesis { id: 0, ts: &ts[0].samples, delays: vec![delay], doppler: nu, steering: &steer };
        let g = ls_fit_gains(&rx, &[hyp], &num).unwrap().channels[0].paths[0].gain;
        var += (g - C64::new(1.0, 0.0)).norm_sqr();
    }
    let ratio = var / trials as f64 / (sigma2 / basis_energy);
    assert!((0.5..2.0).contains(&ratio), "{ratio}");
}

fn pilot_rx(num: &OtfsNumerology, pilot: &ImpulsePilot, ch: &TerminalChannel, noise_var: f64, seed: u64) -> DdGrid {
    let mut grid = DdGrid::zeros(num.m, num.n);
    pilot.place(&mut grid);
    let frame = assemble_zp_frame(num, &grid).unwrap().samples;
    let realization = gfra_core::channel::ChannelRealization { terminals: vec![ch.clone()], noise_var };
    let rx = gfra_core::channel::apply_channel(&[(ch.id, frame.as_slice())], &realization, 1, num.sample_rate(), &mut rng(seed)).unwrap();
    demodulate_payload(&rx, num, &OtfsModem::new(num.m, num.n)).remove(0)
}

#[test]
fn impulse_pilot_readout() {
    let num = OtfsNumerology::desk();
    let fs = num.sample_rate();
    let (row, amp) = (30, 24.0);
    let pilot = ImpulsePilot::new(&num, row, amp).unwrap();
    let bin = num.doppler_bin(num.n);
    let (d, k0, g) = (7, 3, C64::new(0.4, -0.7));
    let ch = TerminalChannel {
        id: 0,
        paths: vec![PathParams { delay: d, doppler: k0 as f64 * bin, gain: g }],
        steering: vec![C64::new(1.0, 0.0)],
    };
    let cir = dd_pilot_baseline_ce(&pilot_rx(&num, &pilot, &ch, 0.0, 0), &pilot, 1e-20).unwrap();
    let want = g * cis(TAU * k0 as f64 * bin * (num.payload_start(0) + row + d) as f64 / fs);
    assert!((cir.coeffs.get(d, k0) - want).norm() < 1e-10);
    assert_eq!(cir.nonzeros(), 1);
    assert!((cir.energy() - want.norm_sqr()).abs() < 1e-12);

    let none = TerminalChannel { paths: vec![], ..ch.clone() };
    assert_eq!(dd_pilot_baseline_ce(&pilot_rx(&num, &pilot, &none, 0.0, 0), &pilot, 0.0).unwrap().nonzeros(), 0);
}

#[test]
fn fractional_doppler_hurts_the_readout_more_than_the_fit() {
    let num = OtfsNumerology::desk();
    let sigma2 = 10f64.powf(-1.5);
    let (row, amp) = (30, ((num.n + 1) as f64 * num.m_t as f64).sqrt());
    let pilot = ImpulsePilot::new(&num, row, amp).unwrap();
    let nu = 2.5 * num.doppler_bin(num.n);
    let ch = TerminalChannel {
        id: 0,
        paths: vec![
            PathParams { delay: 2, doppler: nu, gain: C64::new(0.9, 0.2) },
            PathParams { delay: 6, doppler: nu, gain: C64::new(-0.1, 0.25) },
        ],
        steering: vec![C64::new(1.0, 0.0)],
    };
    let threshold = 3.0 * sigma2 / (amp * amp);
    let ideal = dd_pilot_baseline_ce(&pilot_rx(&num, &pilot, &ch, 0.0, 1), &pilot, 0.0).unwrap();
    let noisy = dd_pilot_baseline_ce(&pilot_rx(&num, &pilot, &ch, sigma2, 1), &pilot, threshold).unwrap();
    let err: f64 = ideal.coeffs.as_slice().iter().zip(noisy.coeffs.as_slice()).map(|(a, b)| (a - b).norm_sqr()).sum();
    let readout_nmse = err / ideal.energy();

    let ts = sequences(8, 1, &num);
    let rx = receive_ts_otfs(&num, &ts, &[ch.clone()], 1, sigma2, 1, 1);
    let hyp = PathHypothesis { id: 0, ts: &ts[0].samples, delays: vec![2, 6], doppler: nu, steering: &ch.steering };
    let fit = ls_fit_gains(&rx, &[hyp], &num).unwrap();
    let h = dd_cir_on_lattice(&ch, &num, num.delay_window(), num.n, None).unwrap();
    let e = dd_cir_on_lattice(&fit.channels[0], &num, num.delay_window(), num.n, None).unwrap();
    let err: f64 = h.coeffs.as_slice().iter().zip(e.coeffs.as_slice()).map(|(a, b)| (a - b).norm_sqr()).sum();
    let fit_nmse = err / h.energy();
    assert!(readout_nmse > fit_nmse, "{readout_nmse} vs {fit_nmse}");
}

#[test]
fn pure_noise_declares_nobody() {
    let num = OtfsNumerology::desk();
    let (k, antennas, sigma2) = (50, 4, 10f64.powf(-1.5));
    let ts = sequences(12, k, &num);
    let dict = build_dictionary(&ts, &num, &ramp_hypotheses(NU_MAX, 5)).unwrap();
    let rx = TsOtfsReceiver { num: &num, dict: &dict, ts: &ts, params: params(sigma2) };
    let mut r = rng(2);
    let steering: Vec<Vec<C64>> = (0..k).map(|_| steering_vector(antennas, r.gen_range(0.0..TAU), r.gen_range(0.0..1.0))).collect();
    for seed in 0..10u64 {
        let received = receive_ts_otfs(&num, &ts, &[], antennas, sigma2, seed, seed);
        let est = rx.estimate(&received, &steering).unwrap();
        assert!(est.active.is_empty(), "seed {seed}: {:?}", est.active);
    }
}

#[test]
fn random_grid_helper_is_seeded() {
    assert_eq!(random_grid(4, 2, 1), random_grid(4, 2, 1));
}
