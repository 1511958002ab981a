//! Black-box rank and kernel sampling (Wiedemann's method).
//!
//! For a sparse `A` with `R` rows and random nonzero diagonals `D1`, `D2`,
//! the symmetric `B = D1 A D2 A^T D1` has, with high probability, the rank
//! of `A` and a minimal polynomial of the form `x^e g(x)` with `e <= 1`.
//! The minimal polynomial is recovered from `u^T B^i v` by Berlekamp-Massey.
//! Ranks found this way never exceed the true rank.

use rand::Rng;

use super::field::Field;
use crate::error::{Error, Result};

/// Sparse matrix stored both by columns and by rows.
#[derive(Clone, Debug)]
pub struct Csc {
    pub rows: usize,
    pub cols: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<u32>,
    pub vals: Vec<u64>,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    row_vals: Vec<u64>,
}

impl Csc {
    pub fn from_columns(rows: usize, columns: &[Vec<(u32, u64)>]) -> Self {
        let mut col_ptr = Vec::with_capacity(columns.len() + 1);
        let nnz = columns.iter().map(Vec::len).sum();
        let mut row_idx = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        let mut row_ptr = vec![0usize; rows + 1];
        col_ptr.push(0);
        for col in columns {
            for &(r, v) in col {
                row_idx.push(r);
                vals.push(v);
                row_ptr[r as usize + 1] += 1;
            }
            col_ptr.push(row_idx.len());
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut fill = row_ptr.clone();
        let mut col_idx = vec![0u32; nnz];
        let mut row_vals = vec![0u64; nnz];
        for (c, col) in columns.iter().enumerate() {
            for &(r, v) in col {
                let k = &mut fill[r as usize];
                col_idx[*k] = c as u32;
                row_vals[*k] = v;
                *k += 1;
            }
        }
        Self {
            rows,
            cols: columns.len(),
            col_ptr,
            row_idx,
            vals,
            row_ptr,
            col_idx,
            row_vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `y = A x`.
    pub fn apply<F: Field>(&self, f: F, x: &[u64], y: &mut [u64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            *yr = f.gather_dot(&self.row_vals[span.clone()], &self.col_idx[span], x);
        }
    }

    /// `x = A^T y`.
    pub fn apply_transpose<F: Field>(&self, f: F, y: &[u64], x: &mut [u64]) {
        for (c, xc) in x.iter_mut().enumerate() {
            let span = self.col_ptr[c]..self.col_ptr[c + 1];
            *xc = f.gather_dot(&self.vals[span.clone()], &self.row_idx[span], y);
        }
    }
}

/// Incremental Berlekamp-Massey: connection polynomial
/// `1 + c_1 x + ... + c_L x^L` of the sequence fed so far.
struct BerlekampMassey<F: Field> {
    f: F,
    seq: Vec<u64>,
    conn: Vec<u64>,
    prev: Vec<u64>,
    len: usize,
    shift: usize,
    prev_disc: u64,
}

impl<F: Field> BerlekampMassey<F> {
    fn new(f: F) -> Self {
        Self {
            f,
            seq: Vec::new(),
            conn: vec![1],
            prev: vec![1],
            len: 0,
            shift: 1,
            prev_disc: 1,
        }
    }

    /// Feeds one term; returns whether the discrepancy was zero.
    fn push(&mut self, s: u64) -> bool {
        let f = self.f;
        self.seq.push(s);
        let n = self.seq.len() - 1;
        let mut disc = s;
        for i in 1..=self.len.min(self.conn.len() - 1) {
            disc = f.add(disc, f.mul(self.conn[i], self.seq[n - i]));
        }
        if disc == 0 {
            self.shift += 1;
            return true;
        }
        let coef = f.mul(disc, f.inv(self.prev_disc));
        let old = self.conn.clone();
        if self.conn.len() < self.prev.len() + self.shift {
            self.conn.resize(self.prev.len() + self.shift, 0);
        }
        for (i, &p) in self.prev.iter().enumerate() {
            let k = i + self.shift;
            self.conn[k] = f.sub(self.conn[k], f.mul(coef, p));
        }
        if 2 * self.len <= n {
            self.len = n + 1 - self.len;
            self.prev = old;
            self.prev_disc = disc;
            self.shift = 1;
        } else {
            self.shift += 1;
        }
        false
    }

    /// `c_0..c_L` (with `c_0 = 1`).
    fn connection(&self) -> Vec<u64> {
        let mut c = self.conn.clone();
        c.resize(self.len + 1, 0);
        c
    }
}

/// Connection polynomial of a full sequence.
pub fn berlekamp_massey<F: Field>(f: F, seq: &[u64]) -> Vec<u64> {
    let mut bm = BerlekampMassey::new(f);
    for &s in seq {
        bm.push(s);
    }
    bm.connection()
}

/// Symmetric preconditioned operator on the row side (`B = D1 A D2 A^T D1`)
/// or the column side (`B = D2 A^T D1 A D2`).
pub struct Preconditioned<'a, F: Field> {
    f: F,
    a: &'a Csc,
    d1: Vec<u64>,
    d2: Vec<u64>,
    row_side: bool,
    tmp_rows: Vec<u64>,
    tmp_cols: Vec<u64>,
}

impl<'a, F: Field> Preconditioned<'a, F> {
    pub fn new<R: Rng + ?Sized>(f: F, a: &'a Csc, row_side: bool, rng: &mut R) -> Self {
        Self {
            f,
            a,
            d1: (0..a.rows).map(|_| f.random_nonzero(rng)).collect(),
            d2: (0..a.cols).map(|_| f.random_nonzero(rng)).collect(),
            row_side,
            tmp_rows: vec![0; a.rows],
            tmp_cols: vec![0; a.cols],
        }
    }

    pub fn dim(&self) -> usize {
        if self.row_side {
            self.a.rows
        } else {
            self.a.cols
        }
    }

    pub fn apply(&mut self, x: &[u64], y: &mut [u64]) {
        let f = self.f;
        if self.row_side {
            for (t, (&xi, &di)) in self.tmp_rows.iter_mut().zip(x.iter().zip(&self.d1)) {
                *t = f.mul(xi, di);
            }
            self.a
                .apply_transpose(f, &self.tmp_rows, &mut self.tmp_cols);
            for (t, &di) in self.tmp_cols.iter_mut().zip(&self.d2) {
                *t = f.mul(*t, di);
            }
            self.a.apply(f, &self.tmp_cols, y);
            for (yi, &di) in y.iter_mut().zip(&self.d1) {
                *yi = f.mul(*yi, di);
            }
        } else {
            for (t, (&xi, &di)) in self.tmp_cols.iter_mut().zip(x.iter().zip(&self.d2)) {
                *t = f.mul(xi, di);
            }
            self.a.apply(f, &self.tmp_cols, &mut self.tmp_rows);
            for (t, &di) in self.tmp_rows.iter_mut().zip(&self.d1) {
                *t = f.mul(*t, di);
            }
            self.a.apply_transpose(f, &self.tmp_rows, y);
            for (yi, &di) in y.iter_mut().zip(&self.d2) {
                *yi = f.mul(*yi, di);
            }
        }
    }
}

/// Consecutive zero discrepancies after which the sequence is taken as
/// generated.
const EARLY_STOP: usize = 24;

/// Minimal polynomial `x^L + m_1 x^(L-1) + ... + m_L` of the operator,
/// returned as `[1, m_1, ..., m_L]`.
pub fn minimal_polynomial<F: Field, R: Rng + ?Sized>(
    op: &mut Preconditioned<'_, F>,
    rng: &mut R,
) -> Vec<u64> {
    let f = op.f;
    let n = op.dim();
    let u: Vec<u64> = (0..n).map(|_| f.random(rng)).collect();
    let mut v: Vec<u64> = (0..n).map(|_| f.random(rng)).collect();
    let mut next = vec![0u64; n];
    let mut bm = BerlekampMassey::new(f);
    let mut zero_run = 0;
    for i in 0..2 * n + EARLY_STOP {
        let s = f.dot(u.iter().copied().zip(v.iter().copied()));
        if bm.push(s) {
            zero_run += 1;
        } else {
            zero_run = 0;
        }
        if zero_run >= EARLY_STOP && i + 1 >= 2 * bm.len + EARLY_STOP {
            break;
        }
        op.apply(&v, &mut next);
        std::mem::swap(&mut v, &mut next);
    }
    // the connection polynomial reversed is the minimal polynomial
    bm.connection()
}

/// Rank of `a` from the minimal polynomial of the smaller preconditioned side.
pub fn rank<F: Field, R: Rng + ?Sized>(f: F, a: &Csc, rng: &mut R) -> usize {
    if a.rows == 0 || a.cols == 0 || a.nnz() == 0 {
        return 0;
    }
    let mut op = Preconditioned::new(f, a, a.rows <= a.cols, rng);
    let poly = minimal_polynomial(&mut op, rng);
    let degree = poly.len() - 1;
    if *poly.last().unwrap() == 0 {
        degree - 1
    } else {
        degree
    }
}

/// Random vectors `z` with `A^T z = 0`, plus the rank of `a`.
///
/// Each vector is `D1 g(B) v` for a fresh random `v`, where `x g(x)` is the
/// minimal polynomial of the row-side operator; every vector is verified.
pub fn left_kernel_samples<F: Field, R: Rng + ?Sized>(
    f: F,
    a: &Csc,
    count: usize,
    rng: &mut R,
) -> Result<(Vec<Vec<u64>>, usize)> {
    if a.nnz() == 0 {
        let zs = (0..count)
            .map(|_| (0..a.rows).map(|_| f.random(rng)).collect())
            .collect();
        return Ok((zs, 0));
    }
    for _attempt in 0..4 {
        let mut op = Preconditioned::new(f, a, true, rng);
        let poly = minimal_polynomial(&mut op, rng);
        let degree = poly.len() - 1;
        if *poly.last().unwrap() != 0 {
            // nonsingular: trivial left kernel
            return Ok((vec![vec![0; a.rows]; count], degree));
        }
        let rank = degree - 1;
        let n = a.rows;
        let mut samples = Vec::with_capacity(count);
        let mut w = vec![0u64; n];
        let mut bw = vec![0u64; n];
        let mut check = vec![0u64; a.cols];
        let mut ok = true;
        for _ in 0..count {
            let v: Vec<u64> = (0..n).map(|_| f.random(rng)).collect();
            // Horner on g(x) = x^(L-1) + m_1 x^(L-2) + ... + m_(L-1)
            w.copy_from_slice(&v);
            for &m in &poly[1..degree] {
                op.apply(&w, &mut bw);
                for ((wi, &bi), &vi) in w.iter_mut().zip(&bw).zip(&v) {
                    *wi = f.add(bi, f.mul(m, vi));
                }
            }
            let z: Vec<u64> = w.iter().zip(&op.d1).map(|(&x, &d)| f.mul(x, d)).collect();
            a.apply_transpose(f, &z, &mut check);
            if check.iter().any(|&x| x != 0) || z.iter().all(|&x| x == 0) {
                ok = false;
                break;
            }
            samples.push(z);
        }
        if ok {
            return Ok((samples, rank));
        }
    }
    Err(Error::Numerics(
        "black-box kernel sampling failed repeatedly".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense::{self, DenseMatrix};
    use crate::linalg::field::Mersenne61;
    use crate::rng::stream_rng;

    #[test]
    fn bm_fibonacci() {
        let f = Mersenne61;
        let mut fib = vec![1u64, 1];
        for i in 2..20 {
            fib.push(fib[i - 1] + fib[i - 2]);
        }
        // s_i - s_{i-1} - s_{i-2} = 0
        assert_eq!(berlekamp_massey(f, &fib), vec![1, f.neg(1), f.neg(1)]);
        assert_eq!(berlekamp_massey(f, &[0, 0, 0]), vec![1]);
    }

    fn random_sparse(rows: usize, cols: usize, per_col: usize, seed: u64) -> Csc {
        let f = Mersenne61;
        let mut rng = stream_rng(seed, 0);
        let columns: Vec<Vec<(u32, u64)>> = (0..cols)
            .map(|_| {
                let mut rs: Vec<u32> = (0..per_col)
                    .map(|_| rng.random_range(0..rows as u32))
                    .collect();
                rs.sort_unstable();
                rs.dedup();
                rs.into_iter()
                    .map(|r| (r, f.random_nonzero(&mut rng)))
                    .collect()
            })
            .collect();
        Csc::from_columns(rows, &columns)
    }

    fn dense_of(a: &Csc) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(a.rows, a.cols);
        for c in 0..a.cols {
            for k in a.col_ptr[c]..a.col_ptr[c + 1] {
                m.set(a.row_idx[k] as usize, c, a.vals[k]);
            }
        }
        m
    }

    #[test]
    fn rank_matches_dense() {
        let f = Mersenne61;
        for (seed, (r, c, k)) in [(60, 80, 2), (80, 60, 3), (100, 100, 2), (50, 120, 1)]
            .into_iter()
            .enumerate()
        {
            let a = random_sparse(r, c, k, seed as u64);
            let expect = dense::rank(f, dense_of(&a));
            let mut rng = stream_rng(seed as u64, 1);
            assert_eq!(rank(f, &a, &mut rng), expect, "case {seed}");
            let (zs, rk) = left_kernel_samples(f, &a, 2, &mut rng).unwrap();
            assert_eq!(rk, expect);
            assert_eq!(zs.len(), 2);
        }
    }
}
