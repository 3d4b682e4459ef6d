//! Finite-difference stencils on uniform meshes.

/// Weights of the derivative of order `deriv` at offset 0 using the given
/// integer offsets (unit spacing). Solves the small Vandermonde system.
pub fn fd_weights(offsets: &[i64], deriv: usize) -> Vec<f64> {
    let n = offsets.len();
    assert!(deriv < n, "need more points than the derivative order");
    let mut a = vec![vec![0.0; n + 1]; n];
    for (k, row) in a.iter_mut().enumerate() {
        for (j, o) in offsets.iter().enumerate() {
            row[j] = (*o as f64).powi(k as i32);
        }
        row[n] = if k == deriv {
            (1..=deriv).map(|v| v as f64).product()
        } else {
            0.0
        };
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for r in col + 1..n {
            let m = a[r][col] / a[col][col];
            if m != 0.0 {
                for c in col..=n {
                    a[r][c] -= m * a[col][c];
                }
            }
        }
    }
    let mut w = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = a[r][n];
        for c in r + 1..n {
            acc -= a[r][c] * w[c];
        }
        w[r] = acc / a[r][r];
    }
    w
}

/// A stencil anchored at node `i`: node indices `start..start+weights.len()`.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub start: usize,
    pub weights: Vec<f64>,
}

impl Stencil {
    /// Second-order stencil for `d/dx^deriv` at node `i` of a mesh with
    /// `n_nodes` nodes and step `h`. Centered where the centered stencil fits,
    /// otherwise the `deriv + 2` nodes nearest the boundary.
    pub fn second_order(i: usize, n_nodes: usize, deriv: usize, h: f64) -> Stencil {
        let half = match deriv {
            1 | 2 => 1,
            3 | 4 => 2,
            _ => panic!("derivative order {deriv} not supported"),
        };
        let (start, len) = if i >= half && i + half < n_nodes {
            (i - half, 2 * half + 1)
        } else {
            let len = deriv + 2;
            assert!(len <= n_nodes, "mesh too coarse for a one-sided stencil");
            if i < half {
                (0, len)
            } else {
                (n_nodes - len, len)
            }
        };
        let offsets: Vec<i64> = (start..start + len).map(|j| j as i64 - i as i64).collect();
        let scale = h.powi(deriv as i32);
        let weights = fd_weights(&offsets, deriv).into_iter().map(|w| w / scale).collect();
        Stencil { start, weights }
    }

    pub fn apply(&self, values: &[f64]) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * values[self.start + k])
            .sum()
    }
}

/// Derivative stacks `[v, v', v'', v''', v'''']` at every node.
pub fn derivative_stacks(values: &[f64], h: f64) -> Vec<[f64; 5]> {
    let n = values.len();
    let stencils: Vec<Vec<Stencil>> = (1..=4)
        .map(|d| (0..n).map(|i| Stencil::second_order(i, n, d, h)).collect())
        .collect();
    (0..n)
        .map(|i| {
            let mut s = [values[i], 0.0, 0.0, 0.0, 0.0];
            for d in 1..=4 {
                s[d] = stencils[d - 1][i].apply(values);
            }
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_weights() {
        let w = fd_weights(&[-1, 0, 1], 1);
        assert!((w[0] + 0.5).abs() < 1e-14 && w[1].abs() < 1e-14 && (w[2] - 0.5).abs() < 1e-14);
        let w = fd_weights(&[-2, -1, 0, 1, 2], 4);
        for (a, b) in w.iter().zip([1.0, -4.0, 6.0, -4.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let w = fd_weights(&[0, 1, 2], 1);
        for (a, b) in w.iter().zip([-1.5, 2.0, -0.5]) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn boundary_stencils_are_one_sided() {
        let s = Stencil::second_order(1, 100, 3, 0.1);
        assert_eq!(s.start, 0);
        assert_eq!(s.weights.len(), 5);
        let s = Stencil::second_order(98, 100, 3, 0.1);
        assert_eq!(s.start, 95);
        let s = Stencil::second_order(0, 100, 4, 0.1);
        assert_eq!((s.start, s.weights.len()), (0, 6));
    }

    #[test]
    fn stacks_converge_at_second_order() {
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let v: Vec<f64> = (0..=n).map(|i| (1.3 * i as f64 * h).sin()).collect();
            let st = derivative_stacks(&v, h);
            let mut e: f64 = 0.0;
            for (i, s) in st.iter().enumerate() {
                let x = i as f64 * h;
                e = e.max((s[3] + 1.3f64.powi(3) * (1.3 * x).cos()).abs());
            }
            e
        };
        let ratio = err(100) / err(200);
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }
}
