//! Independent reference computations shared by the integration tests.

use std::f64::consts::TAU;

use gfra_core::channel::population::steering_vector;
use gfra_core::channel::{PathParams, TerminalChannel};
use gfra_core::linalg::CMat;
use gfra_core::waveform::TrainingSequence;
use gfra_core::{OtfsNumerology, C64};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{cgauss, cis, energy, modulation_matrix, rng, Dense};

pub fn sequences(seed: u64, k: usize, num: &OtfsNumerology) -> Vec<TrainingSequence> {
    (0..k).map(|id| TrainingSequence::generate(seed, id, num.m_t)).collect()
}

pub fn random_terminal<R: Rng>(r: &mut R, id: usize, delays: &[usize], doppler: f64, antennas: usize) -> TerminalChannel {
    TerminalChannel {
        id,
        paths: delays.iter().map(|&delay| PathParams { delay, doppler, gain: cgauss(r) }).collect(),
        steering: steering_vector(antennas, r.gen_range(0.0..TAU), r.gen_range(0.0..1.0)),
    }
}

/// Windowed TS shift `ts[L + r - d]`, built from the frame definition.
pub fn window(ts: &TrainingSequence, num: &OtfsNumerology, d: usize) -> Vec<C64> {
    let l = num.delay_window();
    (0..num.non_isi_len()).map(|r| ts.samples[l + r - d]).collect()
}

/// Residual energy of projecting every column of `Y` onto the span of the
/// atoms in `subset`, from the atom Gram matrix `g` and `p = Z Z^H` with
/// `Z = A^H Y`.
pub fn projection_residual(subset: &[usize], g: &[C64], p: &[C64], n: usize, y_energy: f64) -> Option<f64> {
    let k = subset.len();
    let mut l = [[C64::new(0.0, 0.0); 4]; 4];
    for i in 0..k {
        for j in 0..=i {
            let mut s = g[subset[i] * n + subset[j]];
            for t in 0..j {
                s -= l[i][t] * l[j][t].conj();
            }
            if i == j {
                if s.re <= 1e-10 {
                    return None;
                }
                l[i][i] = C64::new(s.re.sqrt(), 0.0);
            } else {
                l[i][j] = s / l[j][j].re;
            }
        }
    }
    // tr(L^{-1} P L^{-H}) = ||L^{-1} P^{1/2}||^2 evaluated as tr(W) with W = L^{-1} P L^{-H}
    let mut a = [[C64::new(0.0, 0.0); 4]; 4];
    for c in 0..k {
        for i in 0..k {
            let mut s = p[subset[i] * n + subset[c]];
            for t in 0..i {
                s -= l[i][t] * a[t][c];
            }
            a[i][c] = s / l[i][i].re;
        }
    }
    let mut trace = 0.0;
    for i in 0..k {
        let mut w = [C64::new(0.0, 0.0); 4];
        for c in 0..k {
            let mut s = a[i][c].conj();
            for t in 0..c {
                s -= l[c][t] * w[t];
            }
            w[c] = s / l[c][c].re;
        }
        trace += w[i].re;
    }
    Some(y_energy - trace)
}

pub fn subsets(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), f);
}

pub fn gaussian(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
}

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (std::f64::consts::TAU).sqrt()
}

/// `(int_a^b p(x) dx, int_a^b x p(x) dx)` by composite Simpson on a
/// truncated range.
pub fn cell_moments(a: f64, b: f64) -> (f64, f64) {
    let (a, b) = (a.max(-12.0), b.min(12.0));
    let steps = 20_000;
    let h = (b - a) / steps as f64;
    let (mut m0, mut m1) = (0.0, 0.0);
    for i in 0..=steps {
        let x = a + i as f64 * h;
        let w = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        m0 += w * pdf(x);
        m1 += w * x * pdf(x);
    }
    (m0 * h / 3.0, m1 * h / 3.0)
}

/// Lloyd-Max fixed point for the standard Gaussian density.
pub fn gaussian_lloyd_max(levels: usize) -> Vec<f64> {
    let mut q: Vec<f64> = (0..levels).map(|i| -2.0 + 4.0 * (i as f64 + 0.5) / levels as f64).collect();
    for _ in 0..300 {
        let t: Vec<f64> = q.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        q = (0..levels)
            .map(|i| {
                let lo = if i == 0 { f64::NEG_INFINITY } else { t[i - 1] };
                let hi = if i == levels - 1 { f64::INFINITY } else { t[i] };
                let (m0, m1) = cell_moments(lo, hi);
                m1 / m0
            })
            .collect();
    }
    q
}

/// Uniform mid-rise quantizer MSE at the best of a fine grid of step sizes.
pub fn uniform_oracle(samples: &[f64], bits: u32) -> f64 {
    let half = (1i64 << bits) / 2;
    (1..=400)
        .map(|i| {
            let step = i as f64 * 0.005;
            samples
                .iter()
                .map(|&x| {
                    let k = ((x / step).floor() as i64).clamp(-half, half - 1);
                    (x - (k as f64 + 0.5) * step).powi(2)
                })
                .sum::<f64>()
                / samples.len() as f64
        })
        .fold(f64::INFINITY, f64::min)
}

/// `F^H H_t F` with the time-domain channel written out as a dense matrix.
pub fn cyclic_oracle(m: usize, n: usize, ch: &TerminalChannel, fs: f64) -> Dense {
    let len = m * n;
    let f = modulation_matrix(m, n);
    let columns: Vec<Vec<C64>> = (0..len)
        .map(|j| {
            let mut e = vec![C64::new(0.0, 0.0); len];
            e[j] = C64::new(1.0, 0.0);
            let s = f.mul(&e);
            let mut r = vec![C64::new(0.0, 0.0); len];
            for p in &ch.paths {
                for t in 0..len {
                    r[t] += p.gain * cis(TAU * p.doppler * t as f64 / fs) * s[(t + len - p.delay % len) % len];
                }
            }
            f.mul_adjoint(&r)
        })
        .collect();
    Dense::from_columns(&columns)
}

/// Every minimal atom subset (up to four atoms) whose span holds all
/// columns of `y`, found by enumerating subsets of the TS dictionary.
pub fn exhaustive_support(ts: &[TrainingSequence], num: &OtfsNumerology, y: &CMat) -> Vec<Vec<usize>> {
    let l = num.delay_window();
    let n_atoms = ts.len() * l;
    let cols: Vec<&[C64]> = (0..y.cols).map(|c| y.col(c)).collect();
    let atoms: Vec<Vec<C64>> = ts.iter().flat_map(|t| (0..l).map(|d| window(t, num, d)).collect::<Vec<_>>()).collect();
    let dot = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };
    let g: Vec<C64> = (0..n_atoms * n_atoms).map(|i| dot(&atoms[i / n_atoms], &atoms[i % n_atoms])).collect();
    let z: Vec<Vec<C64>> = atoms.iter().map(|a| cols.iter().map(|c| dot(a, c)).collect()).collect();
    let p: Vec<C64> = (0..n_atoms * n_atoms)
        .map(|i| z[i / n_atoms].iter().zip(&z[i % n_atoms]).map(|(a, b)| a * b.conj()).sum())
        .collect();
    let y_energy: f64 = cols.iter().map(|c| energy(c)).sum();
    let mut found: Vec<Vec<usize>> = Vec::new();
    for size in 1..=4 {
        subsets(n_atoms, size, &mut |s| {
            if let Some(res) = projection_residual(s, &g, &p, n_atoms, y_energy) {
                if res < 1e-9 * y_energy {
                    found.push(s.to_vec());
                }
            }
        });
        if !found.is_empty() {
            break;
        }
    }
    found
}
