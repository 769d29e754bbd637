//! Delay-Doppler and time-frequency symbol lattices.

use crate::error::{Error, Result};
use crate::C64;

/// `M x N` delay-Doppler lattice; entry `(l, k)` is delay bin `l`, Doppler
/// bin `k`, stored delay-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DdGrid {
    m: usize,
    n: usize,
    data: Vec<C64>,
}

impl DdGrid {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            data: vec![C64::new(0.0, 0.0); m * n],
        }
    }

    pub fn from_vec(m: usize, n: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != m * n {
            return Err(Error::dim(format!("{m}x{n}"), data.len()));
        }
        Ok(Self { m, n, data })
    }

    pub fn from_fn(m: usize, n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(m * n);
        for l in 0..m {
            for k in 0..n {
                data.push(f(l, k));
            }
        }
        Self { m, n, data }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn get(&self, l: usize, k: usize) -> C64 {
        self.data[l * self.n + k]
    }

    pub fn set(&mut self, l: usize, k: usize, v: C64) {
        self.data[l * self.n + k] = v;
    }

    pub fn row(&self, l: usize) -> &[C64] {
        &self.data[l * self.n..(l + 1) * self.n]
    }

    pub fn row_mut(&mut self, l: usize) -> &mut [C64] {
        &mut self.data[l * self.n..(l + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn check_shape(&self, m: usize, n: usize) -> Result<()> {
        if self.m != m || self.n != n {
            return Err(Error::dim(format!("{m}x{n}"), format!("{}x{}", self.m, self.n)));
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &DdGrid) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `N x M` time-frequency grid; entry `(n, m)` is symbol `n`, subcarrier `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct TfGrid {
    n: usize,
    m: usize,
    data: Vec<C64>,
}

impl TfGrid {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            data: vec![C64::new(0.0, 0.0); n * m],
        }
    }

    pub fn from_vec(n: usize, m: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != n * m {
            return Err(Error::dim(format!("{n}x{m}"), data.len()));
        }
        Ok(Self { n, m, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, n: usize, m: usize) -> C64 {
        self.data[n * self.m + m]
    }

    pub fn set(&mut self, n: usize, m: usize, v: C64) {
        self.data[n * self.m + m] = v;
    }

    pub fn symbol(&self, n: usize) -> &[C64] {
        &self.data[n * self.m..(n + 1) * self.m]
    }

    pub fn symbol_mut(&mut self, n: usize) -> &mut [C64] {
        &mut self.data[n * self.m..(n + 1) * self.m]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}
