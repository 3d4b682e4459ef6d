//! Banded matrices and LU factorization with partial pivoting.

use crate::error::{Result, VortexError};

/// Square band matrix with `kl` sub- and `ku` super-diagonals. Storage keeps
/// `kl` extra super-diagonals for pivoting fill-in.
#[derive(Debug, Clone)]
pub struct Banded {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl Banded {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Banded {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl >= i && j <= i + self.ku + self.kl {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Adds `v` to entry `(i, j)`; panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i},{j}) outside band kl={} ku={}", self.kl, self.ku);
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Solves `A x = rhs`, consuming the matrix.
    pub fn solve(mut self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(VortexError::Domain(format!("singular banded matrix at column {k}")));
            }
            piv[k] = p;
            let jmax = (k + ku + kl).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let a = self.slot(k, j);
                    let b = self.slot(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            for i in k + 1..=last {
                let s = self.slot(i, k);
                let m = self.data[s] / pivot;
                self.data[s] = m;
                if m != 0.0 {
                    for j in k + 1..=jmax {
                        let src = self.data[self.slot(k, j)];
                        let dst = self.slot(i, j);
                        self.data[dst] -= m * src;
                    }
                }
            }
        }
        let mut x = rhs.to_vec();
        for k in 0..n {
            x.swap(k, piv[k]);
            let last = (k + kl).min(n - 1);
            for i in k + 1..=last {
                x[i] -= self.data[self.slot(i, k)] * x[k];
            }
        }
        for k in (0..n).rev() {
            let jmax = (k + ku + kl).min(n - 1);
            let mut acc = x[k];
            for j in k + 1..=jmax {
                acc -= self.data[self.slot(k, j)] * x[j];
            }
            x[k] = acc / self.data[self.slot(k, k)];
        }
        Ok(x)
    }
}
