//! Simultaneous orthogonal matching pursuit.
//!
//! The correlation matrix `Psi^H R` is updated by rank-one corrections
//! against an incrementally orthonormalized support basis, so each
//! iteration costs `O(KL (G + C))` after the initial `Psi^H Y`.

use crate::error::{Error, Result};
use crate::linalg::{axpy, dotc, norm_sqr, CMat};
use crate::receiver::dictionary::MmvDictionary;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SompStop {
    pub max_taps: usize,
    /// Stop once the residual energy falls to or below this value, or
    /// below `RELATIVE_FLOOR` times the observation energy.
    pub residual_energy: f64,
}

pub const RELATIVE_FLOOR: f64 = 1e-20;

/// Row-sparse recovery result. `coeffs[s]` is the row of the selected atom
/// `support[s]` across all measurement columns, in unit-atom units.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCirSnapshots {
    pub support: Vec<usize>,
    pub coeffs: Vec<Vec<C64>>,
    /// Residual energy before the first and after every iteration.
    pub residual_history: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

impl SparseCirSnapshots {
    pub fn residual_energy(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&0.0)
    }

    /// Mean energy per measurement column of the coefficient row `s`.
    pub fn tap_energy(&self, s: usize) -> f64 {
        norm_sqr(&self.coeffs[s]) / self.cols.max(1) as f64
    }

    /// Dense `KL x C` coefficient matrix (zero outside the support).
    pub fn to_dense(&self, atoms: usize) -> CMat {
        let mut h = CMat::zeros(atoms, self.cols);
        for (&j, row) in self.support.iter().zip(&self.coeffs) {
            for (c, &v) in row.iter().enumerate() {
                h.set(j, c, v);
            }
        }
        h
    }
}

pub fn somp_recover(y: &CMat, dict: &MmvDictionary, stop: &SompStop) -> Result<SparseCirSnapshots> {
    somp_inner(y, dict, stop, None)
}

/// SOMP whose atom selection combines each atom's correlations across
/// antennas with the steering vector of the atom's terminal. Columns of `y`
/// are grouped as `snapshot * A + antenna`; `steering[block]` has length `A`.
pub fn somp_recover_steered(
    y: &CMat,
    dict: &MmvDictionary,
    stop: &SompStop,
    steering: &[Vec<C64>],
) -> Result<SparseCirSnapshots> {
    if steering.len() < dict.blocks {
        return Err(Error::dim(format!("{} steering vectors", dict.blocks), steering.len()));
    }
    if let Some(a) = steering.first().map(|s| s.len()) {
        if a == 0 || y.cols % a != 0 || steering.iter().any(|s| s.len() != a) {
            return Err(Error::dim(format!("columns in groups of {a}"), y.cols));
        }
    }
    somp_inner(y, dict, stop, Some(steering))
}

fn selection_score(corr: &[C64], steer: Option<&[C64]>) -> f64 {
    match steer {
        None => corr.iter().map(|v| v.norm_sqr()).sum(),
        Some(s) => {
            corr.chunks(s.len())
                .map(|ch| ch.iter().zip(s).map(|(v, w)| w.conj() * v).sum::<C64>().norm_sqr())
                .sum::<f64>()
                / s.len() as f64
        }
    }
}

fn somp_inner(y: &CMat, dict: &MmvDictionary, stop: &SompStop, steering: Option<&[Vec<C64>]>) -> Result<SparseCirSnapshots> {
    let g = dict.rows();
    if y.rows != g {
        return Err(Error::dim(format!("{g} observation rows"), y.rows));
    }
    let c = y.cols;
    let n_atoms = dict.len();
    // corr[j * c + col] = <psi_j, r_col>
    let mut corr = vec![C64::default(); n_atoms * c];
    for j in 0..n_atoms {
        let a = dict.atom(j);
        for col in 0..c {
            corr[j * c + col] = dotc(a, y.col(col));
        }
    }
    let mut resid: Vec<Vec<C64>> = (0..c).map(|col| y.col(col).to_vec()).collect();
    let mut energy = y.fro_norm_sqr();
    let mut history = vec![energy];
    let mut excluded = vec![false; n_atoms];
    let mut support = Vec::new();
    let mut q: Vec<Vec<C64>> = Vec::new();
    // r_tri[s][i] = <q_i, psi_{support[s]}> for i <= s
    let mut r_tri: Vec<Vec<C64>> = Vec::new();
    let mut z: Vec<Vec<C64>> = Vec::new();
    let limit = stop.max_taps.min(g);
    let target = stop.residual_energy.max(RELATIVE_FLOOR * energy);
    while support.len() < limit && energy > target {
        let best = (0..n_atoms)
            .filter(|&j| !excluded[j])
            .map(|j| {
                let steer = steering.map(|st| st[dict.locate(j).0].as_slice());
                (j, selection_score(&corr[j * c..(j + 1) * c], steer))
            })
            .fold(None, |acc: Option<(usize, f64)>, (j, s)| match acc {
                Some((_, bs)) if bs >= s => acc,
                _ => Some((j, s)),
            });
        let Some((j, score)) = best else { break };
        excluded[j] = true;
        if score <= 0.0 {
            break;
        }
        let atom = dict.atom(j);
        let mut v = atom.to_vec();
        let mut coef = vec![C64::default(); q.len() + 1];
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let p = dotc(qi, &v);
                coef[i] += p;
                axpy(-p, qi, &mut v);
            }
        }
        let nv = norm_sqr(&v).sqrt();
        if nv < 1e-10 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        coef[q.len()] = C64::new(nv, 0.0);
        let zs: Vec<C64> = resid.iter().map(|r| dotc(&v, r)).collect();
        for (r, &zc) in resid.iter_mut().zip(&zs) {
            axpy(-zc, &v, r);
        }
        for k in 0..n_atoms {
            if excluded[k] {
                continue;
            }
            let w = dotc(dict.atom(k), &v);
            for (cv, &zc) in corr[k * c..(k + 1) * c].iter_mut().zip(&zs) {
                *cv -= w * zc;
            }
        }
        let new_energy: f64 = resid.iter().map(|r| norm_sqr(r)).sum();
        support.push(j);
        q.push(v);
        r_tri.push(coef);
        z.push(zs);
        history.push(new_energy);
        energy = new_energy;
    }
    // back substitution: R X = Z
    let s = support.len();
    let mut coeffs = vec![vec![C64::default(); c]; s];
    for i in (0..s).rev() {
        for col in 0..c {
            let mut acc = z[i][col];
            for k in i + 1..s {
                acc -= r_tri[k][i] * coeffs[k][col];
            }
            coeffs[i][col] = acc / r_tri[i][i];
        }
    }
    Ok(SparseCirSnapshots {
        support,
        coeffs,
        residual_history: history,
        rows: g,
        cols: c,
    })
}
