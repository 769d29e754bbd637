mod common;

use std::f64::consts::TAU;

use common::oracles::cyclic_oracle;
use common::{cgauss, cis, energy, max_diff, random_grid, rng};
use gfra_core::channel::population::steering_vector;
use gfra_core::channel::{
    apply_channel, apply_cyclic, dd_circular_response, dd_cir_on_lattice, draw_activity, draw_population,
    ChannelConfig, ChannelRealization, PathParams, TerminalChannel,
};
use gfra_core::channel::apply::noise_only;
use gfra_core::detector::build_effective_channel;
use gfra_core::receiver::demodulate_payload;
use gfra_core::waveform::{assemble_zp_frame, OtfsModem};
use gfra_core::{DdGrid, OtfsNumerology, C64};
use proptest::prelude::*;

fn channel(paths: &[(usize, f64, C64)], steering: Vec<C64>) -> TerminalChannel {
    TerminalChannel {
        id: 0,
        paths: paths.iter().map(|&(delay, doppler, gain)| PathParams { delay, doppler, gain }).collect(),
        steering,
    }
}

fn small(m: usize, n: usize) -> OtfsNumerology {
    OtfsNumerology { m, n, m_t: 8, l_max: 2, d_max: 1, ..OtfsNumerology::desk() }
}

#[test]
fn cyclic_chain_matches_dense_oracle() {
    let (m, n) = (16, 4);
    let fs = 16.0 * 480e3;
    let bin = fs / (m * n) as f64;
    let ch = channel(
        &[(0, 3.0 * bin, C64::new(0.7, 0.1)), (3, -2.0 * bin, C64::new(-0.2, 0.4)), (19, 5.0 * bin, C64::new(0.1, -0.3))],
        vec![C64::new(1.0, 0.0)],
    );
    let oracle = cyclic_oracle(m, n, &ch, fs);
    let modem = OtfsModem::new(m, n);
    for seed in 0..4 {
        let x = random_grid(m, n, seed);
        let want = oracle.mul(x.as_slice());
        let chain = modem.demodulate(&apply_cyclic(&modem.modulate(&x).unwrap(), &ch, fs)).unwrap();
        assert!(max_diff(chain.as_slice(), &want) < 1e-8);
        let closed = dd_circular_response(&x, &ch, fs).unwrap();
        assert!(max_diff(closed.as_slice(), &want) < 1e-8);
    }
}

#[test]
fn delay_two_one_bin_is_a_twisted_cyclic_shift() {
    let (m, n) = (16, 4);
    let fs = 16.0 * 480e3;
    let bin = fs / (m * n) as f64;
    let g = C64::new(0.6, -0.8);
    let ch = channel(&[(2, bin, g)], vec![C64::new(1.0, 0.0)]);
    let oracle = cyclic_oracle(m, n, &ch, fs);
    let x = random_grid(m, n, 5);
    let y = DdGrid::from_vec(m, n, oracle.mul(x.as_slice())).unwrap();
    let modem = OtfsModem::new(m, n);
    let chain = modem.demodulate(&apply_cyclic(&modem.modulate(&x).unwrap(), &ch, fs)).unwrap();
    assert!(chain.max_abs_diff(&y) < 1e-8);
    for l in 0..m {
        for k in 0..n {
            let out = y.get((l + 2) % m, (k + 1) % n);
            assert!((out.norm() - x.get(l, k).norm()).abs() < 1e-8);
        }
    }
}

#[test]
fn identity_operator_for_trivial_channel() {
    let num = small(8, 4);
    let ch = channel(&[(0, 0.0, C64::new(1.0, 0.0))], vec![C64::new(1.0, 0.0)]);
    let ec = build_effective_channel(&[ch], &num, None).unwrap();
    let mn = num.m * num.n;
    for j in 0..mn {
        let col = ec.column(0, j);
        assert_eq!(col.len(), 1);
        let (r, v) = col[0];
        let (l, k) = ec.positions[j];
        assert_eq!(r, l * num.n + k);
        assert!((v - C64::new(1.0, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn on_grid_path_moves_the_dominant_entry() {
    let num = small(8, 4);
    let bin = num.doppler_bin(num.n);
    for (l0, k0) in [(1, 1), (2, 3), (0, 2)] {
        let ch = channel(&[(l0, k0 as f64 * bin, C64::new(0.5, 0.5))], vec![C64::new(1.0, 0.0)]);
        let ec = build_effective_channel(&[ch], &num, None).unwrap();
        for (j, &(l, k)) in ec.positions.iter().enumerate() {
            let col = ec.column(0, j);
            let (r, _) = col.iter().copied().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap();
            assert_eq!(r, ((l + l0) % num.m) * num.n + (k + k0) % num.n);
        }
    }
}

#[test]
fn orthogonal_steering_decouples_users() {
    let num = small(8, 4);
    let s0 = vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
    let s1 = vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)];
    let a = channel(&[(1, 3.3e3, C64::new(0.9, 0.1)), (2, 3.3e3, C64::new(0.1, 0.2))], s0);
    let mut b = channel(&[(0, 11.7e3, C64::new(-0.4, 0.8))], s1);
    b.id = 1;
    let ec = build_effective_channel(&[a, b], &num, None).unwrap();
    let nc = ec.unknowns_per_user();
    let mut r = rng(4);
    let mut x = vec![C64::new(0.0, 0.0); 2 * nc];
    for v in &mut x[..nc] {
        *v = cgauss(&mut r);
    }
    let back = ec.adjoint(&ec.apply(&x));
    assert!(back[nc..].iter().all(|v| v.norm() < 1e-10));
}

fn desk_users(seed: u64, antennas: usize, users: usize) -> Vec<TerminalChannel> {
    let num = OtfsNumerology::desk();
    let mut r = rng(seed);
    (0..users)
        .map(|id| {
            use rand::Rng;
            let nu = r.gen_range(0.0..178.2e3);
            let mut d: Vec<usize> = (0..3).map(|_| r.gen_range(0..num.delay_window())).collect();
            d.sort_unstable();
            d.dedup();
            TerminalChannel {
                id,
                paths: d.iter().map(|&delay| PathParams { delay, doppler: nu, gain: cgauss(&mut r) }).collect(),
                steering: steering_vector(antennas, r.gen_range(0.0..TAU), r.gen_range(0.0..1.0)),
            }
        })
        .collect()
}

#[test]
fn operator_reproduces_the_simulated_payload() {
    let num = OtfsNumerology::desk();
    let fs = num.sample_rate();
    let modem = OtfsModem::new(num.m, num.n);
    for seed in 0..3 {
        let users = desk_users(seed, 4, 2);
        let grids: Vec<DdGrid> = (0..2).map(|u| random_grid(num.m, num.n, 100 + seed * 2 + u as u64)).collect();
        let frames: Vec<Vec<C64>> = grids.iter().map(|g| assemble_zp_frame(&num, g).unwrap().samples).collect();
        let realization = ChannelRealization { terminals: users.clone(), noise_var: 0.0 };
        let tx: Vec<(usize, &[C64])> = frames.iter().enumerate().map(|(u, f)| (u, f.as_slice())).collect();
        let rx = apply_channel(&tx, &realization, 4, fs, &mut rng(0)).unwrap();
        let observed: Vec<C64> = demodulate_payload(&rx, &num, &modem).into_iter().flat_map(|g| g.into_vec()).collect();
        let ec = build_effective_channel(&users, &num, None).unwrap();
        let x: Vec<C64> = grids.iter().flat_map(|g| g.as_slice().to_vec()).collect();
        let predicted = ec.apply(&x);
        let scale = energy(&observed).sqrt() / (observed.len() as f64).sqrt();
        assert!(max_diff(&observed, &predicted) < 1e-8 * scale.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn adjoint_is_consistent(seed in any::<u64>()) {
        let num = OtfsNumerology { m: 16, n: 4, m_t: 32, l_max: 8, d_max: 4, ..OtfsNumerology::desk() };
        let mut users = desk_users(seed, 2, 2);
        for u in &mut users {
            u.paths.iter_mut().for_each(|p| p.delay %= num.delay_window());
            u.paths.dedup_by_key(|p| p.delay);
        }
        let ec = build_effective_channel(&users, &num, None).unwrap();
        let mut r = rng(seed ^ 1);
        let x: Vec<C64> = (0..ec.unknowns()).map(|_| cgauss(&mut r)).collect();
        let y: Vec<C64> = (0..ec.measurements()).map(|_| cgauss(&mut r)).collect();
        let lhs: C64 = ec.apply(&x).iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
        let rhs: C64 = x.iter().zip(ec.adjoint(&y)).map(|(a, b)| a.conj() * b).sum();
        prop_assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(1.0));
    }

    #[test]
    fn noiseless_energy_bookkeeping(seed in any::<u64>(), delay in 0usize..24, nu in 0.0f64..178.2e3) {
        let num = OtfsNumerology::desk();
        let a = 4;
        let g = C64::new(0.3, -1.1);
        let grid = random_grid(num.m, num.n, seed);
        let frame = assemble_zp_frame(&num, &grid).unwrap().samples;
        let mut ch = channel(&[(delay, nu, g)], steering_vector(a, 0.4, 0.7));
        ch.id = 3;
        let realization = ChannelRealization { terminals: vec![ch], noise_var: 0.0 };
        let rx = apply_channel(&[(3, frame.as_slice())], &realization, a, num.sample_rate(), &mut rng(0)).unwrap();
        let got: f64 = rx.iter().map(|r| energy(r)).sum();
        let kept = energy(&frame[..frame.len() - delay]);
        let want = a as f64 * g.norm_sqr() * kept;
        prop_assert!((got - want).abs() < 1e-9 * want);
        let lost = a as f64 * g.norm_sqr() * energy(&frame) - got;
        prop_assert!(lost <= a as f64 * g.norm_sqr() * energy(&frame) * num.delay_window() as f64 / frame.len() as f64 + 1e-9);
    }
}

#[test]
fn pure_noise_has_configured_power() {
    let sigma2 = 0.37;
    let rx = noise_only(2, 50_000, sigma2, &mut rng(8));
    let p = rx.iter().map(|r| energy(r)).sum::<f64>() / 1e5;
    assert!((p / sigma2 - 1.0).abs() < 0.05, "{p}");
}

#[test]
fn identity_channel_passes_the_frame() {
    let num = OtfsNumerology::desk();
    let frame = assemble_zp_frame(&num, &random_grid(num.m, num.n, 1)).unwrap().samples;
    let realization = ChannelRealization {
        terminals: vec![channel(&[(0, 0.0, C64::new(1.0, 0.0))], vec![C64::new(1.0, 0.0)])],
        noise_var: 0.0,
    };
    let rx = apply_channel(&[(0, frame.as_slice())], &realization, 1, num.sample_rate(), &mut rng(0)).unwrap();
    assert_eq!(rx[0], frame);
}

#[test]
fn population_and_activity_contracts() {
    let num = OtfsNumerology::desk();
    let cfg = ChannelConfig::default();
    let pop = draw_population(5, &num, &cfg, 1, 2);
    assert_eq!(pop.iter().map(|t| t.id).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
    assert_eq!(pop, draw_population(5, &num, &cfg, 1, 2));
    for t in &pop {
        assert!(t.taps.iter().all(|&l| l < num.l_max));
        assert!(t.toa_offset <= num.d_max);
        assert!((0.0..=cfg.geometry.nu_max).contains(&t.doppler));
        assert!(t.steering.iter().all(|s| (s.norm() - 1.0).abs() < 1e-12));
    }
    let mut still = cfg.clone();
    still.geometry.nu_max = 0.0;
    assert!(draw_population(20, &num, &still, 1, 2).iter().all(|t| t.doppler == 0.0));

    let mut pop = draw_population(100, &num, &cfg, 1, 2);
    assert_eq!(draw_activity(&mut pop, 10, 3).unwrap().k_a(), 10);
    assert_eq!(pop.iter().filter(|t| t.active).count(), 10);
    assert!(draw_activity(&mut pop, 0, 3).unwrap().active.is_empty());
    assert_eq!(draw_activity(&mut pop, 100, 3).unwrap().active, (0..100).collect::<Vec<_>>());
}

/// `(1/N) sum_n exp(j2pi n (nu/bin - k)/N)`: the Doppler-lattice response of
/// a path sampled at the payload-block instants.
fn dirichlet(pos: f64, k: usize, n: usize) -> C64 {
    (0..n).map(|b| cis(TAU * b as f64 * (pos - k as f64) / n as f64)).sum::<C64>() / n as f64
}

#[test]
fn lattice_leakage_follows_dirichlet_kernel() {
    let num = OtfsNumerology::desk();
    let fs = num.sample_rate();
    let bin = num.doppler_bin(num.n);
    let g = C64::new(0.8, 0.6);
    for pos in [2.0, 2.5, 5.25] {
        let nu = pos * bin;
        let ch = channel(&[(4, nu, g)], vec![C64::new(1.0, 0.0)]);
        let cir = dd_cir_on_lattice(&ch, &num, num.delay_window(), num.n, None).unwrap();
        let lead = g * cis(TAU * nu * num.payload_start(0) as f64 / fs);
        for k in 0..num.n {
            let want = lead * dirichlet(pos, k, num.n);
            let got = cir.coeffs.get(4, k);
            assert!((got - want).norm() < 1e-10 || (want.norm() < 1e-12 * 1e3 && got.norm() < 1e-9));
        }
    }
    // on grid: one entry per path
    let ch = channel(&[(1, 2.0 * bin, g), (5, 2.0 * bin, g * 0.3), (9, 2.0 * bin, g * 0.1)], vec![C64::new(1.0, 0.0)]);
    let cir = dd_cir_on_lattice(&ch, &num, num.delay_window(), num.n, None).unwrap();
    assert_eq!(cir.nonzeros(), 3);
    // half a bin off: the two neighbouring bins dominate
    let ch = channel(&[(1, 3.5 * bin, g)], vec![C64::new(1.0, 0.0)]);
    let cir = dd_cir_on_lattice(&ch, &num, num.delay_window(), num.n, None).unwrap();
    let mut mags: Vec<(usize, f64)> = (0..num.n).map(|k| (k, cir.coeffs.get(1, k).norm())).collect();
    mags.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut top = [mags[0].0, mags[1].0];
    top.sort_unstable();
    assert_eq!(top, [3, 4]);
}

#[test]
fn truncated_leakage_is_sparse() {
    let num = OtfsNumerology::desk();
    let users = desk_users(9, 1, 6);
    for w in [1usize, 2] {
        for u in &users {
            let cir = dd_cir_on_lattice(u, &num, num.delay_window(), 2 * num.n, Some(w)).unwrap();
            assert!(cir.nonzeros() <= u.paths.len() * (2 * w + 1));
        }
    }
}
