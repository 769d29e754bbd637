//! Lloyd-Max scalar quantizer modelling the satellite's finite-resolution
//! ADC. Real and imaginary parts are quantized separately with one shared
//! codebook trained on the received frame itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizerCodebook {
    pub bits: u32,
    /// Reproduction levels, ascending.
    pub levels: Vec<f64>,
    /// `levels.len() - 1` decision boundaries.
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    /// Mean-square distortion after each iteration.
    pub distortions: Vec<f64>,
    pub iterations: usize,
}

impl TrainingReport {
    pub fn final_distortion(&self) -> f64 {
        *self.distortions.last().unwrap_or(&0.0)
    }
}

impl QuantizerCodebook {
    pub fn from_levels(bits: u32, mut levels: Vec<f64>) -> Self {
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let thresholds = levels.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Self { bits, levels, thresholds }
    }

    /// Nearest level; a value on a boundary goes to the lower level.
    #[inline]
    pub fn quantize_scalar(&self, x: f64) -> f64 {
        let i = self.thresholds.partition_point(|&t| t < x);
        self.levels[i]
    }

    pub fn mse(&self, samples: &[f64]) -> f64 {
        samples.iter().map(|&x| (x - self.quantize_scalar(x)).powi(2)).sum::<f64>() / samples.len().max(1) as f64
    }
}

/// Prefix sums over sorted samples for O(1) cell statistics.
struct Sorted {
    x: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl Sorted {
    fn new(samples: &[f64]) -> Self {
        let mut x = samples.to_vec();
        x.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut s1 = Vec::with_capacity(x.len() + 1);
        let mut s2 = Vec::with_capacity(x.len() + 1);
        let (mut a, mut b) = (0.0, 0.0);
        s1.push(0.0);
        s2.push(0.0);
        for &v in &x {
            a += v;
            b += v * v;
            s1.push(a);
            s2.push(b);
        }
        Self { x, s1, s2 }
    }

    /// Cell boundaries (sample index ranges) induced by `thresholds`.
    fn cells(&self, thresholds: &[f64]) -> Vec<(usize, usize)> {
        let mut edges = vec![0];
        // boundary value belongs to the lower cell
        edges.extend(thresholds.iter().map(|&t| self.x.partition_point(|&v| v <= t)));
        edges.push(self.x.len());
        edges.windows(2).map(|w| (w[0], w[1])).collect()
    }

    fn cell_sse(&self, (a, b): (usize, usize), level: f64) -> f64 {
        let n = (b - a) as f64;
        let s1 = self.s1[b] - self.s1[a];
        let s2 = self.s2[b] - self.s2[a];
        (s2 - 2.0 * level * s1 + n * level * level).max(0.0)
    }

    fn distortion(&self, levels: &[f64], thresholds: &[f64]) -> f64 {
        self.cells(thresholds)
            .into_iter()
            .zip(levels)
            .map(|(c, &l)| self.cell_sse(c, l))
            .sum::<f64>()
            / self.x.len() as f64
    }
}

/// Alternating nearest-neighbour / centroid iterations until the relative
/// distortion change drops below `tol` or `max_iters` is reached. An empty
/// cell is re-seeded inside the cell with the largest distortion.
pub fn train_lloyd_max(
    samples: &[f64],
    bits: u32,
    max_iters: usize,
    tol: f64,
) -> Result<(QuantizerCodebook, TrainingReport)> {
    if bits == 0 || bits > 16 {
        return Err(Error::Training(format!("unsupported bit width {bits}")));
    }
    let n_levels = 1usize << bits;
    let data = Sorted::new(samples);
    let distinct = 1 + data.x.windows(2).filter(|w| w[1] > w[0]).count();
    if samples.is_empty() || distinct < n_levels {
        return Err(Error::Training(format!(
            "{distinct} distinct samples cannot train {n_levels} levels"
        )));
    }
    // equal-count initial cells
    let len = data.x.len();
    let mut levels: Vec<f64> = (0..n_levels)
        .map(|i| {
            let (a, b) = (i * len / n_levels, ((i + 1) * len / n_levels).max(i * len / n_levels + 1));
            (data.s1[b] - data.s1[a]) / (b - a) as f64
        })
        .collect();
    dedup_levels(&mut levels, &data);
    let mut thresholds: Vec<f64> = levels.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let mut distortions = Vec::new();
    let mut prev = data.distortion(&levels, &thresholds);
    let mut iterations = 0;
    for _ in 0..max_iters {
        iterations += 1;
        // centroid condition
        let cells = data.cells(&thresholds);
        let mut next = Vec::with_capacity(n_levels);
        let mut empty = 0;
        for (&(a, b), &l) in cells.iter().zip(&levels) {
            if b > a {
                next.push((data.s1[b] - data.s1[a]) / (b - a) as f64);
            } else {
                empty += 1;
                next.push(l);
            }
        }
        for _ in 0..empty {
            reseed_empty(&mut next, &data);
        }
        next.sort_by(|a, b| a.partial_cmp(b).unwrap());
        levels = next;
        // nearest-neighbour condition
        thresholds = levels.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let d = data.distortion(&levels, &thresholds);
        debug_assert!(d <= prev * (1.0 + 1e-9) + 1e-15, "distortion rose {prev} -> {d}");
        distortions.push(d);
        let converged = prev <= 0.0 || (prev - d).abs() / prev < tol;
        prev = d;
        if converged {
            break;
        }
    }
    Ok((
        QuantizerCodebook {
            bits,
            levels,
            thresholds,
        },
        TrainingReport {
            distortions,
            iterations,
        },
    ))
}

/// Replaces duplicated initial levels by re-seeding.
fn dedup_levels(levels: &mut Vec<f64>, data: &Sorted) {
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = levels.len();
    levels.dedup();
    while levels.len() < n {
        levels.push(f64::NAN);
        reseed_empty(levels, data);
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
}

/// Moves one level that owns no samples (or a NaN placeholder) to the sample
/// with the largest error in the highest-distortion cell. Adding a level
/// never increases nearest-neighbour distortion.
fn reseed_empty(levels: &mut [f64], data: &Sorted) {
    let mut live: Vec<f64> = levels.iter().copied().filter(|v| v.is_finite()).collect();
    live.sort_by(|a, b| a.partial_cmp(b).unwrap());
    live.dedup();
    let th: Vec<f64> = live.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let cells = data.cells(&th);
    // find a level index to replace: first NaN, else a level owning no samples
    let victim = levels.iter().position(|v| !v.is_finite()).or_else(|| {
        let mut seen = std::collections::HashSet::new();
        levels.iter().position(|v| {
            let owned = live
                .iter()
                .position(|l| l == v)
                .map(|i| cells[i].1 > cells[i].0)
                .unwrap_or(false);
            !owned || !seen.insert(v.to_bits())
        })
    });
    let Some(victim) = victim else { return };
    let (worst, _) = cells
        .iter()
        .zip(&live)
        .map(|(&c, &l)| (c, data.cell_sse(c, l)))
        .enumerate()
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .map(|(i, (_, d))| (i, d))
        .unwrap();
    let (a, b) = cells[worst];
    let centre = live[worst];
    let far = data.x[a..b]
        .iter()
        .copied()
        .filter(|&x| !live.contains(&x))
        .max_by(|x, y| (x - centre).abs().partial_cmp(&(y - centre).abs()).unwrap());
    if let Some(x) = far {
        levels[victim] = x;
    } else if let Some(&x) = data.x.iter().find(|x| !live.contains(x)) {
        levels[victim] = x;
    }
}

/// Elementwise complex quantization, real and imaginary parts separately.
pub fn quantize(r: &[C64], cb: &QuantizerCodebook) -> Vec<C64> {
    r.iter()
        .map(|z| C64::new(cb.quantize_scalar(z.re), cb.quantize_scalar(z.im)))
        .collect()
}

/// The infinite-resolution reference front end.
pub fn passthrough(r: &[C64]) -> Vec<C64> {
    r.to_vec()
}

/// ADC model applied to all antenna streams of one received frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrontEnd {
    Ideal,
    LloydMax { bits: u32 },
}

impl FrontEnd {
    /// `adc_bits = 0` selects the ideal ADC.
    pub fn from_bits(bits: u32) -> Self {
        if bits == 0 {
            FrontEnd::Ideal
        } else {
            FrontEnd::LloydMax { bits }
        }
    }

    pub fn bits(&self) -> u32 {
        match self {
            FrontEnd::Ideal => 0,
            FrontEnd::LloydMax { bits } => *bits,
        }
    }

    /// Quantizes in place and returns the per-complex-sample quantization
    /// noise variance (twice the per-component training distortion).
    pub fn apply(&self, received: &mut [Vec<C64>]) -> Result<f64> {
        match *self {
            FrontEnd::Ideal => Ok(0.0),
            FrontEnd::LloydMax { bits } => {
                let comps: Vec<f64> = received.iter().flatten().flat_map(|z| [z.re, z.im]).collect();
                let (cb, report) = train_lloyd_max(&comps, bits, 100, 1e-6)?;
                for row in received.iter_mut() {
                    *row = quantize(row, &cb);
                }
                Ok(2.0 * report.final_distortion())
            }
        }
    }
}

/// MSE of a mid-rise uniform quantizer with step `step` and `2^bits` levels.
pub fn uniform_mid_rise_mse(samples: &[f64], bits: u32, step: f64) -> f64 {
    let half = (1i64 << bits) / 2;
    samples
        .iter()
        .map(|&x| {
            let i = ((x / step).floor() as i64).clamp(-half, half - 1);
            let q = (i as f64 + 0.5) * step;
            (x - q).powi(2)
        })
        .sum::<f64>()
        / samples.len().max(1) as f64
}

/// Uniform-quantizer MSE at the best loading factor, found by a grid search
/// followed by golden-section refinement over the step size.
pub fn best_uniform_mse(samples: &[f64], bits: u32) -> f64 {
    let rms = (samples.iter().map(|x| x * x).sum::<f64>() / samples.len().max(1) as f64).sqrt();
    let levels = (1u64 << bits) as f64;
    let f = |load: f64| uniform_mid_rise_mse(samples, bits, 2.0 * load * rms / levels);
    let grid: Vec<f64> = (1..=120).map(|i| i as f64 * 0.05).collect();
    let (mut best, mut best_l) = (f64::INFINITY, 1.0);
    for &l in &grid {
        let v = f(l);
        if v < best {
            best = v;
            best_l = l;
        }
    }
    let (mut a, mut b) = ((best_l - 0.05).max(1e-3), best_l + 0.05);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..40 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.min(f(0.5 * (a + b)))
}
