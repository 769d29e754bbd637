//! Ridge-regularized LS detection by conjugate gradients on the normal
//! equations (CGLS).

use crate::detector::effective::EffectiveChannel;
use crate::error::{Error, Result};
use crate::linalg::norm_sqr;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub reg: f64,
    /// Relative normal-equation residual at which to stop.
    pub tol: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutput {
    /// User-major soft symbols.
    pub x: Vec<C64>,
    pub iterations: usize,
    /// `||H^H (y - Hx) - reg x|| / ||H^H y||` at exit.
    pub rel_residual: f64,
    pub converged: bool,
}

/// `scale * ||H||_F^2 / (users * unknowns per user)`.
pub fn default_reg(h: &EffectiveChannel, scale: f64) -> f64 {
    scale * h.fro_norm_sqr() / h.unknowns().max(1) as f64
}

/// Ridge weight of the LS detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ridge {
    /// Multiple of the mean squared column norm of the channel matrix.
    Relative(f64),
    /// Fixed weight; the noise variance per measurement gives the LMMSE
    /// estimate for unit-power symbols.
    Absolute(f64),
}

impl Ridge {
    pub fn weight(&self, mean_column_energy: f64) -> f64 {
        match *self {
            Ridge::Relative(s) => s * mean_column_energy,
            Ridge::Absolute(w) => w,
        }
    }

    pub fn for_channel(&self, h: &EffectiveChannel) -> f64 {
        self.weight(h.fro_norm_sqr() / h.unknowns().max(1) as f64)
    }
}

/// Solves `min ||y - Hx||^2 + reg ||x||^2`. More users than antennas is an
/// identifiability error; hitting `max_iters` returns the iterate with
/// `converged = false`.
pub fn ls_detect(y: &[C64], h: &EffectiveChannel, cfg: &SolverConfig) -> Result<SolverOutput> {
    if h.users.len() > h.antennas {
        return Err(Error::Identifiability {
            users: h.users.len(),
            antennas: h.antennas,
            unknowns_per_user: h.unknowns_per_user(),
            measurements_per_antenna: h.m * h.n,
        });
    }
    if y.len() != h.measurements() {
        return Err(Error::dim(h.measurements(), y.len()));
    }
    let mut x = vec![C64::default(); h.unknowns()];
    let mut r = y.to_vec();
    let mut s = h.adjoint(&r);
    let gamma0 = norm_sqr(&s);
    if gamma0 == 0.0 {
        return Ok(SolverOutput {
            x,
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
        });
    }
    let mut p = s.clone();
    let mut gamma = gamma0;
    let mut it = 0;
    let mut rel = 1.0;
    while it < cfg.max_iters {
        it += 1;
        let q = h.apply(&p);
        let delta = norm_sqr(&q) + cfg.reg * norm_sqr(&p);
        if delta <= 0.0 {
            break;
        }
        let alpha = gamma / delta;
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += alpha * pi;
        }
        for (ri, qi) in r.iter_mut().zip(&q) {
            *ri -= alpha * qi;
        }
        s = h.adjoint(&r);
        for (si, xi) in s.iter_mut().zip(&x) {
            *si -= cfg.reg * xi;
        }
        let gamma_new = norm_sqr(&s);
        rel = (gamma_new / gamma0).sqrt();
        if rel < cfg.tol {
            return Ok(SolverOutput {
                x,
                iterations: it,
                rel_residual: rel,
                converged: true,
            });
        }
        let beta = gamma_new / gamma;
        for (pi, si) in p.iter_mut().zip(&s) {
            *pi = si + beta * *pi;
        }
        gamma = gamma_new;
    }
    log::debug!("CGLS stopped after {it} iterations at relative residual {rel:.3e}");
    Ok(SolverOutput {
        x,
        iterations: it,
        rel_residual: rel,
        converged: false,
    })
}
