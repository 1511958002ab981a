//! Structured sparse elimination by column operations over a prime field.
//!
//! A pivot `(r, c)` clears row `r` from every other column by subtracting a
//! multiple of column `c`, then drops row `r` and column `c`. Rows are taken
//! in order of increasing weight and the pivot column is the lightest one in
//! the row (Markowitz). A row of weight one is an elementary collapse; weight
//! two merges two columns. Elimination stops when the cheapest available
//! pivot gets too expensive, leaving a Schur complement for dense or
//! black-box methods.

use super::field::Field;

pub type Column = Vec<(u32, u64)>;

/// When to hand the remainder to another method.
#[derive(Clone, Copy, Debug)]
pub struct EliminationLimits {
    /// Largest Markowitz cost `(row weight - 1)(column weight - 1)` accepted.
    pub max_cost: u64,
    /// Stop once the active nonzeros exceed this.
    pub max_nnz: usize,
    /// Keep pivot columns for back substitution and membership tests.
    pub keep_pivots: bool,
}

impl EliminationLimits {
    pub fn complete(keep_pivots: bool) -> Self {
        Self {
            max_cost: u64::MAX,
            max_nnz: usize::MAX,
            keep_pivots,
        }
    }
}

/// A pivot row, its column and the column contents at pivot time.
#[derive(Clone, Debug)]
pub struct Pivot {
    pub row: u32,
    pub col: u32,
    pub column: Column,
}

/// Outcome of a (possibly partial) elimination.
#[derive(Clone, Debug)]
pub struct Elimination {
    pub rows: usize,
    pub pivot_count: usize,
    /// Present when `keep_pivots` was requested; in pivot order.
    pub pivots: Vec<Pivot>,
    /// Rows untouched by every remaining column.
    pub free_rows: Vec<u32>,
    /// Rows still active with at least one remaining nonzero.
    pub remaining_rows: Vec<u32>,
    /// Nonzero remaining columns (original column index, entries).
    pub remaining_cols: Vec<(u32, Column)>,
}

impl Elimination {
    pub fn remaining_nnz(&self) -> usize {
        self.remaining_cols.iter().map(|(_, c)| c.len()).sum()
    }

    pub fn is_complete(&self) -> bool {
        self.remaining_cols.is_empty()
    }
}

const MAX_BUCKET: usize = 1024;

struct State<'a, F: Field> {
    field: F,
    cols: &'a mut [Column],
    col_active: Vec<bool>,
    row_active: Vec<bool>,
    row_weight: Vec<u32>,
    row_cols: Vec<Vec<u32>>,
    buckets: Vec<Vec<u32>>,
    min_bucket: usize,
    col_buckets: Vec<Vec<u32>>,
    min_col_bucket: usize,
    nnz: usize,
    scratch: Column,
}

impl<F: Field> State<'_, F> {
    #[inline]
    fn rebucket(&mut self, row: u32) {
        let w = (self.row_weight[row as usize] as usize).min(MAX_BUCKET);
        self.buckets[w].push(row);
        if w < self.min_bucket {
            self.min_bucket = w;
        }
    }

    #[inline]
    fn rebucket_col(&mut self, col: u32) {
        let w = self.cols[col as usize].len().min(MAX_BUCKET);
        self.col_buckets[w].push(col);
        if w < self.min_col_bucket {
            self.min_col_bucket = w;
        }
    }

    /// Next active nonempty column of minimal weight, without removing it.
    fn lightest_col(&mut self) -> Option<(u32, usize)> {
        while self.min_col_bucket <= MAX_BUCKET {
            let b = self.min_col_bucket;
            while let Some(&col) = self.col_buckets[b].last() {
                let w = self.cols[col as usize].len().min(MAX_BUCKET);
                if self.col_active[col as usize] && w == b && w > 0 {
                    return Some((col, b));
                }
                self.col_buckets[b].pop();
            }
            self.min_col_bucket += 1;
        }
        None
    }

    /// Next active row of minimal weight, without removing it.
    fn lightest_row(&mut self) -> Option<(u32, usize)> {
        while self.min_bucket <= MAX_BUCKET {
            let b = self.min_bucket;
            while let Some(&row) = self.buckets[b].last() {
                let w = (self.row_weight[row as usize] as usize).min(MAX_BUCKET);
                if self.row_active[row as usize] && w == b {
                    return Some((row, b));
                }
                self.buckets[b].pop();
            }
            self.min_bucket += 1;
        }
        None
    }

    /// Active columns meeting `row`, with duplicates and stale entries removed.
    fn clean_row(&mut self, row: u32) -> Vec<u32> {
        let mut list = std::mem::take(&mut self.row_cols[row as usize]);
        list.sort_unstable();
        list.dedup();
        list.retain(|&c| {
            self.col_active[c as usize]
                && self.cols[c as usize]
                    .binary_search_by_key(&row, |e| e.0)
                    .is_ok()
        });
        list
    }

    /// `target -= factor * pivot`, maintaining row weights and lists.
    fn axpy(&mut self, target: u32, factor: u64, pivot: &Column) {
        let f = self.field;
        let mut out = std::mem::take(&mut self.scratch);
        out.clear();
        let old = std::mem::take(&mut self.cols[target as usize]);
        out.reserve(old.len() + pivot.len());
        let (mut i, mut j) = (0, 0);
        while i < old.len() || j < pivot.len() {
            let take_old = j == pivot.len() || (i < old.len() && old[i].0 < pivot[j].0);
            let take_piv = i == old.len() || (j < pivot.len() && pivot[j].0 < old[i].0);
            if take_old {
                out.push(old[i]);
                i += 1;
            } else if take_piv {
                let (r, v) = pivot[j];
                out.push((r, f.neg(f.mul(factor, v))));
                self.row_weight[r as usize] += 1;
                self.row_cols[r as usize].push(target);
                self.nnz += 1;
                self.rebucket(r);
                j += 1;
            } else {
                let (r, a) = old[i];
                let v = f.sub(a, f.mul(factor, pivot[j].1));
                if v == 0 {
                    self.row_weight[r as usize] -= 1;
                    self.nnz -= 1;
                    self.rebucket(r);
                } else {
                    out.push((r, v));
                }
                i += 1;
                j += 1;
            }
        }
        self.scratch = old;
        self.cols[target as usize] = out;
        self.rebucket_col(target);
    }
}

/// Eliminates `cols` (each sorted by row, no zeros) over `field`.
pub fn eliminate<F: Field>(
    field: F,
    rows: usize,
    cols: &mut [Column],
    limits: EliminationLimits,
) -> Elimination {
    let mut row_weight = vec![0u32; rows];
    let mut row_cols: Vec<Vec<u32>> = vec![Vec::new(); rows];
    let mut nnz = 0;
    for (c, col) in cols.iter().enumerate() {
        for &(r, _) in col {
            row_weight[r as usize] += 1;
            row_cols[r as usize].push(c as u32);
        }
        nnz += col.len();
    }
    let mut st = State {
        field,
        col_active: cols.iter().map(|c| !c.is_empty()).collect(),
        cols,
        row_active: vec![true; rows],
        row_weight,
        row_cols,
        buckets: vec![Vec::new(); MAX_BUCKET + 1],
        min_bucket: 0,
        col_buckets: vec![Vec::new(); MAX_BUCKET + 1],
        min_col_bucket: 0,
        nnz,
        scratch: Vec::new(),
    };
    for r in (0..rows as u32).rev() {
        st.rebucket(r);
    }
    st.min_bucket = 0;
    for c in (0..st.cols.len() as u32).rev() {
        st.rebucket_col(c);
    }
    st.min_col_bucket = 0;

    let mut pivots = Vec::new();
    let mut pivot_count = 0usize;
    let mut free_rows = Vec::new();
    while let Some((row, w)) = st.lightest_row() {
        if w == 0 {
            st.buckets[0].pop();
            st.row_active[row as usize] = false;
            free_rows.push(row);
            continue;
        }
        let list = st.clean_row(row);
        debug_assert_eq!(list.len(), st.row_weight[row as usize] as usize);
        let &row_best = list
            .iter()
            .min_by_key(|&&c| (st.cols[c as usize].len(), c))
            .expect("positive weight");
        let row_cost = (st.row_weight[row as usize] as u64 - 1)
            * (st.cols[row_best as usize].len() as u64 - 1);
        st.row_cols[row as usize] = list;
        // a light column may offer a cheaper pivot than the lightest row
        let mut choice = (row_cost, row, row_best);
        if row_cost > 0 {
            if let Some((col, _)) = st.lightest_col() {
                let cw = st.cols[col as usize].len();
                let &(r, _) = st.cols[col as usize]
                    .iter()
                    .min_by_key(|&&(r, _)| (st.row_weight[r as usize], r))
                    .expect("nonempty column");
                let cost = (st.row_weight[r as usize] as u64 - 1) * (cw as u64 - 1);
                if cost < row_cost {
                    choice = (cost, r, col);
                }
            }
        }
        let (cost, row, pc) = choice;
        if cost > limits.max_cost || st.nnz > limits.max_nnz {
            break;
        }
        let list = st.clean_row(row);
        let pivot_col = std::mem::take(&mut st.cols[pc as usize]);
        st.col_active[pc as usize] = false;
        let a = pivot_col
            .binary_search_by_key(&row, |e| e.0)
            .map(|k| pivot_col[k].1)
            .expect("pivot entry present");
        let inv = field.inv(a);
        for &c in &list {
            if c == pc {
                continue;
            }
            let k = st.cols[c as usize]
                .binary_search_by_key(&row, |e| e.0)
                .expect("row meets column");
            let factor = field.mul(st.cols[c as usize][k].1, inv);
            st.axpy(c, factor, &pivot_col);
        }
        for &(r, _) in &pivot_col {
            st.row_weight[r as usize] -= 1;
            if r != row {
                st.rebucket(r);
            }
        }
        st.nnz -= pivot_col.len();
        st.row_active[row as usize] = false;
        pivot_count += 1;
        if limits.keep_pivots {
            pivots.push(Pivot {
                row,
                col: pc,
                column: pivot_col,
            });
        }
    }

    let mut remaining_rows = Vec::new();
    for r in 0..rows as u32 {
        if st.row_active[r as usize] {
            if st.row_weight[r as usize] == 0 {
                free_rows.push(r);
            } else {
                remaining_rows.push(r);
            }
        }
    }
    let mut remaining_cols = Vec::new();
    for c in 0..st.cols.len() {
        if st.col_active[c] && !st.cols[c].is_empty() {
            remaining_cols.push((c as u32, std::mem::take(&mut st.cols[c])));
        }
    }
    Elimination {
        rows,
        pivot_count,
        pivots,
        free_rows,
        remaining_rows,
        remaining_cols,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::field::{GenericPrime, Mersenne61};

    fn to_cols<F: Field>(f: F, dense: &[Vec<i64>]) -> Vec<Column> {
        let rows = dense.len();
        let cols = dense[0].len();
        (0..cols)
            .map(|c| {
                (0..rows)
                    .filter(|&r| dense[r][c] != 0)
                    .map(|r| (r as u32, f.from_i64(dense[r][c])))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn complete_elimination_ranks() {
        let f = Mersenne61;
        let m = vec![
            vec![1, 1, 0, 0],
            vec![-1, 0, 1, 0],
            vec![0, -1, -1, 0],
            vec![0, 0, 0, 0],
        ];
        let mut cols = to_cols(f, &m);
        let e = eliminate(f, 4, &mut cols, EliminationLimits::complete(true));
        assert_eq!(e.pivot_count, 2);
        assert!(e.is_complete());
        assert_eq!(e.free_rows.len(), 2);
    }

    #[test]
    fn small_prime_sees_extra_dependency() {
        let m = vec![vec![1, 1], vec![1, 4]];
        let mut cols = to_cols(GenericPrime::new(3).unwrap(), &m);
        let e = eliminate(
            GenericPrime::new(3).unwrap(),
            2,
            &mut cols,
            EliminationLimits::complete(false),
        );
        assert_eq!(e.pivot_count, 1);
        let mut cols = to_cols(Mersenne61, &m);
        let e = eliminate(Mersenne61, 2, &mut cols, EliminationLimits::complete(false));
        assert_eq!(e.pivot_count, 2);
    }

    #[test]
    fn partial_elimination_leaves_schur_block() {
        // a dense 3x3 block cannot be entered at cost zero
        let m = vec![vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 10]];
        let mut cols = to_cols(Mersenne61, &m);
        let limits = EliminationLimits {
            max_cost: 0,
            max_nnz: usize::MAX,
            keep_pivots: true,
        };
        let e = eliminate(Mersenne61, 3, &mut cols, limits);
        assert_eq!(e.pivot_count, 0);
        assert_eq!(e.remaining_rows.len(), 3);
        assert_eq!(e.remaining_nnz(), 9);
    }
}
