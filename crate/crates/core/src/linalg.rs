//! Small dense complex linear algebra used by the estimators.

use crate::C64;

/// Column-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows);
            m.col_mut(j).copy_from_slice(c);
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[c * self.rows + r] = v;
    }

    pub fn col(&self, c: usize) -> &[C64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn col_mut(&mut self, c: usize) -> &mut [C64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn fro_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// `sum conj(a_i) b_i`.
#[inline]
pub fn dotc(a: &[C64], b: &[C64]) -> C64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    C64::new(re, im)
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// `y += alpha x`.
#[inline]
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Solves the Hermitian positive-definite system `A x = b` by Cholesky.
/// `a` is `n x n` row-major. Returns `None` if a pivot falls below
/// `rel_pivot_tol` times the largest diagonal entry; the index of the
/// offending pivot is reported through `Err`.
pub fn cholesky_solve(
    a: &[C64],
    n: usize,
    b: &[C64],
    rel_pivot_tol: f64,
) -> std::result::Result<Vec<C64>, usize> {
    let max_diag = (0..n).map(|i| a[i * n + i].re).fold(0.0, f64::max);
    let mut l = vec![C64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > rel_pivot_tol * max_diag) || d <= 0.0 {
            return Err(j);
        }
        let djj = d.sqrt();
        l[j * n + j] = C64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / djj;
        }
    }
    // forward: L z = b
    let mut z = b.to_vec();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s -= l[i * n + k] * z[k];
        }
        z[i] = s / l[i * n + i].re;
    }
    // backward: L^H x = z
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s -= l[k * n + i].conj() * z[k];
        }
        z[i] = s / l[i * n + i].re;
    }
    Ok(z)
}

/// Least squares `min ||B x - y||` via the normal equations with a tiny
/// diagonal load, on the columns of `basis` (column-major `rows x cols`).
pub fn lstsq_normal(basis: &CMat, y: &[C64], load: f64) -> std::result::Result<Vec<C64>, usize> {
    let n = basis.cols;
    let mut gram = vec![C64::new(0.0, 0.0); n * n];
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        for j in i..n {
            let g = dotc(basis.col(i), basis.col(j));
            gram[i * n + j] = g;
            gram[j * n + i] = g.conj();
        }
        rhs[i] = dotc(basis.col(i), y);
    }
    for i in 0..n {
        gram[i * n + i] += load;
    }
    cholesky_solve(&gram, n, &rhs, 1e-10)
}
