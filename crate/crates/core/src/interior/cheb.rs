//! Chebyshev-Lobatto points, differentiation matrices and barycentric interpolation.

use std::f64::consts::PI;

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl RMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn matmul(&self, other: &RMat) -> RMat {
        let mut out = RMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> RMat {
        RMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// x_i = cos(i pi / N), i = 0..=N, computed symmetrically.
pub fn lobatto_points(n: usize) -> Vec<f64> {
    let nf = n as f64;
    (0..=n).map(|i| (PI * (nf - 2.0 * i as f64) / (2.0 * nf)).sin()).collect()
}

/// Differentiation matrix on the Lobatto points, with trigonometric node
/// differences and the negative-sum diagonal.
pub fn diff_matrix(n: usize) -> RMat {
    let mut d = RMat::zeros(n + 1, n + 1);
    let nf = n as f64;
    let c = |i: usize| if i == 0 || i == n { 2.0 } else { 1.0 };
    for i in 0..=n {
        let mut diag = 0.0;
        for j in 0..=n {
            if i == j {
                continue;
            }
            let dx = 2.0 * (PI * (i + j) as f64 / (2.0 * nf)).sin() * (PI * (j as f64 - i as f64) / (2.0 * nf)).sin();
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            let v = c(i) / c(j) * sign / dx;
            d.set(i, j, v);
            diag -= v;
        }
        d.set(i, i, diag);
    }
    d
}

/// Barycentric weights of the Lobatto points.
pub fn lobatto_weights(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            if i == 0 || i == n {
                0.5 * s
            } else {
                s
            }
        })
        .collect()
}

/// Barycentric interpolation weights for evaluating at `t`: returns
/// coefficients c_i with p(t) = sum c_i f_i.
pub fn barycentric_row(nodes: &[f64], weights: &[f64], t: f64) -> Vec<f64> {
    if let Some(i) = nodes.iter().position(|&x| (x - t).abs() < 1e-15) {
        let mut row = vec![0.0; nodes.len()];
        row[i] = 1.0;
        return row;
    }
    let terms: Vec<f64> = nodes.iter().zip(weights).map(|(x, w)| w / (t - x)).collect();
    let s: f64 = terms.iter().sum();
    terms.into_iter().map(|v| v / s).collect()
}
