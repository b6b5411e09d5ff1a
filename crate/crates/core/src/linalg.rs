//! Dense row-major matrices and the handful of products the GCN needs.
//!
//! Loops are written so the innermost dimension is contiguous in both
//! operands; reduction order is fixed, so results are bit-reproducible.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// `out = a · b + bias` where `b` is `a.cols × out.cols` row-major and
/// `bias` (if given) is added to every row.
pub fn matmul_bias(a: &Matrix, b: &[f64], bias: Option<&[f64]>, out: &mut Matrix) {
    let (n, m, p) = (a.rows, a.cols, out.cols);
    debug_assert_eq!(b.len(), m * p);
    debug_assert_eq!(out.rows, n);
    let blocks = m / 4;
    for i in 0..n {
        let dst = &mut out.data[i * p..(i + 1) * p];
        match bias {
            Some(bias) => dst.copy_from_slice(bias),
            None => dst.fill(0.0),
        }
        let src = &a.data[i * m..(i + 1) * m];
        // Four rows of `b` per pass keep `dst` traffic low.
        for blk in 0..blocks {
            let k = blk * 4;
            let x = &src[k..k + 4];
            if x.iter().all(|&v| v == 0.0) {
                continue;
            }
            let rows = &b[k * p..(k + 4) * p];
            let (b0, rest) = rows.split_at(p);
            let (b1, rest) = rest.split_at(p);
            let (b2, b3) = rest.split_at(p);
            let (x0, x1, x2, x3) = (x[0], x[1], x[2], x[3]);
            for ((((d, &w0), &w1), &w2), &w3) in dst.iter_mut().zip(b0).zip(b1).zip(b2).zip(b3) {
                *d += x0 * w0 + x1 * w1 + x2 * w2 + x3 * w3;
            }
        }
        for k in blocks * 4..m {
            let x = src[k];
            if x == 0.0 {
                continue;
            }
            let brow = &b[k * p..(k + 1) * p];
            for (d, &w) in dst.iter_mut().zip(brow) {
                *d += x * w;
            }
        }
    }
}

/// `out += aᵀ · g` with `a: n×m`, `g: n×p`, `out: m×p` (flat row-major).
pub fn add_transpose_product(a: &Matrix, g: &Matrix, out: &mut [f64]) {
    let (n, m, p) = (a.rows, a.cols, g.cols);
    debug_assert_eq!(g.rows, n);
    debug_assert_eq!(out.len(), m * p);
    let active: Vec<usize> = (0..n)
        .filter(|&i| g.row(i).iter().any(|&v| v != 0.0))
        .collect();
    let mut quads = active.chunks_exact(4);
    for q in &mut quads {
        let (a0, a1, a2, a3) = (a.row(q[0]), a.row(q[1]), a.row(q[2]), a.row(q[3]));
        let (g0, g1, g2, g3) = (g.row(q[0]), g.row(q[1]), g.row(q[2]), g.row(q[3]));
        for k in 0..m {
            let (x0, x1, x2, x3) = (a0[k], a1[k], a2[k], a3[k]);
            let dst = &mut out[k * p..(k + 1) * p];
            for ((((d, &v0), &v1), &v2), &v3) in dst.iter_mut().zip(g0).zip(g1).zip(g2).zip(g3) {
                *d += x0 * v0 + x1 * v1 + x2 * v2 + x3 * v3;
            }
        }
    }
    for &i in quads.remainder() {
        let grow = g.row(i);
        for (k, &x) in a.row(i).iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let dst = &mut out[k * p..(k + 1) * p];
            for (d, &v) in dst.iter_mut().zip(grow) {
                *d += x * v;
            }
        }
    }
}

/// `out = g · bᵀ` with `g: n×p`, `b: m×p` flat, `out: n×m`.
pub fn matmul_transpose_right(g: &Matrix, b: &[f64], out: &mut Matrix) {
    let (n, p, m) = (g.rows, g.cols, out.cols);
    debug_assert_eq!(b.len(), m * p);
    for i in 0..n {
        let grow = g.row(i);
        let dst = out.row_mut(i);
        if grow.iter().all(|&v| v == 0.0) {
            dst.fill(0.0);
            continue;
        }
        for (k, d) in dst.iter_mut().enumerate() {
            *d = dot(grow, &b[k * p..(k + 1) * p]);
        }
    }
}

pub fn column_sums(a: &Matrix, out: &mut [f64]) {
    debug_assert_eq!(out.len(), a.cols);
    for i in 0..a.rows {
        for (d, &v) in out.iter_mut().zip(a.row(i)) {
            *d += v;
        }
    }
}

/// Dot product with four interleaved partial sums.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn products_match_hand_values() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![0.0, -1.0]]);
        let b = [1.0, 0.0, 1.0, 2.0, 1.0, 0.0]; // 2x3
        let mut out = Matrix::zeros(3, 3);
        matmul_bias(&a, &b, Some(&[0.5, 0.0, 0.0]), &mut out);
        assert_eq!(out.row(0), &[5.5, 2.0, 1.0]);
        assert_eq!(out.row(2), &[-1.5, -1.0, 0.0]);

        let g = Matrix::from_rows(&[vec![1.0], vec![1.0], vec![2.0]]);
        let mut acc = vec![0.0; 2];
        add_transpose_product(&a, &g, &mut acc);
        assert_eq!(acc, vec![4.0, 4.0]);

        let mut t = Matrix::zeros(3, 2);
        matmul_transpose_right(&a, &[1.0, 1.0, 0.0, 2.0], &mut t);
        assert_eq!(t.row(1), &[7.0, 8.0]);
    }
}
