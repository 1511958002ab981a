//! Dense Gaussian elimination over a prime field.

use rand::Rng;

use super::field::Field;

/// Row-major dense matrix.
#[derive(Clone, Debug)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = v;
    }
}

/// Reduced row echelon form in place; returns the pivot column of each
/// pivot row.
pub fn rref<F: Field>(f: F, m: &mut DenseMatrix) -> Vec<usize> {
    let (rows, cols) = (m.rows, m.cols);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| m.at(i, c) != 0) else {
            continue;
        };
        if p != r {
            for k in 0..cols {
                m.data.swap(p * cols + k, r * cols + k);
            }
        }
        let inv = f.inv(m.at(r, c));
        for k in c..cols {
            let v = f.mul(m.at(r, k), inv);
            m.set(r, k, v);
        }
        let (head, tail) = m.data.split_at_mut(r * cols);
        let (pivot_row, rest) = tail.split_at_mut(cols);
        let eliminate = |row: &mut [u64]| {
            let factor = row[c];
            if factor != 0 {
                for k in c..cols {
                    row[k] = f.sub(row[k], f.mul(factor, pivot_row[k]));
                }
            }
        };
        head.chunks_mut(cols).for_each(eliminate);
        rest.chunks_mut(cols).for_each(eliminate);
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Rank of a dense matrix (consumed).
pub fn rank<F: Field>(f: F, mut m: DenseMatrix) -> usize {
    // row echelon form without back elimination
    let (rows, cols) = (m.rows, m.cols);
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| m.at(i, c) != 0) else {
            continue;
        };
        if p != r {
            for k in 0..cols {
                m.data.swap(p * cols + k, r * cols + k);
            }
        }
        let inv = f.inv(m.at(r, c));
        let (top, bottom) = m.data.split_at_mut((r + 1) * cols);
        let pivot_row = &top[r * cols..];
        for row in bottom.chunks_mut(cols) {
            let factor = f.mul(row[c], inv);
            if factor != 0 {
                for k in c..cols {
                    row[k] = f.sub(row[k], f.mul(factor, pivot_row[k]));
                }
            }
        }
        r += 1;
    }
    r
}

/// Uniformly random vector `x` with `m x = 0`, and the rank of `m`.
pub fn random_kernel_vector<F: Field, R: Rng + ?Sized>(
    f: F,
    mut m: DenseMatrix,
    rng: &mut R,
) -> (Vec<u64>, usize) {
    let pivots = rref(f, &mut m);
    let mut is_pivot = vec![false; m.cols];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    let mut x = vec![0u64; m.cols];
    for c in 0..m.cols {
        if !is_pivot[c] {
            x[c] = f.random(rng);
        }
    }
    for (i, &c) in pivots.iter().enumerate() {
        let mut s = 0u64;
        for k in 0..m.cols {
            if !is_pivot[k] {
                s = f.add(s, f.mul(m.at(i, k), x[k]));
            }
        }
        x[c] = f.neg(s);
    }
    (x, pivots.len())
}
