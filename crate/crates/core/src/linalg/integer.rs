//! Fraction-free elimination over the integers.
//!
//! Column operations `target <- a * target - b * pivot` keep every entry
//! integral; each updated column is divided by the gcd of its entries. Runs
//! in checked `i64` and restarts in `BigInt` on overflow.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Integer arithmetic that may report overflow.
pub trait IntScalar: Clone + Debug + PartialEq + Send + Sync {
    fn from_i8(x: i8) -> Self;
    fn is_zero(&self) -> bool;
    /// `a * x - b * y`.
    fn mul_sub(a: &Self, x: &Self, b: &Self, y: &Self) -> Option<Self>;
    fn gcd(&self, other: &Self) -> Self;
    fn div_exact(&self, g: &Self) -> Self;
    fn is_unit(&self) -> bool;
}

impl IntScalar for i64 {
    fn from_i8(x: i8) -> Self {
        x as i64
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn mul_sub(a: &Self, x: &Self, b: &Self, y: &Self) -> Option<Self> {
        a.checked_mul(*x)?.checked_sub(b.checked_mul(*y)?)
    }
    fn gcd(&self, other: &Self) -> Self {
        Integer::gcd(self, other)
    }
    fn div_exact(&self, g: &Self) -> Self {
        self / g
    }
    fn is_unit(&self) -> bool {
        self.abs() == 1
    }
}

impl IntScalar for BigInt {
    fn from_i8(x: i8) -> Self {
        BigInt::from(x)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn mul_sub(a: &Self, x: &Self, b: &Self, y: &Self) -> Option<Self> {
        Some(a * x - b * y)
    }
    fn gcd(&self, other: &Self) -> Self {
        Integer::gcd(self, other)
    }
    fn div_exact(&self, g: &Self) -> Self {
        self / g
    }
    fn is_unit(&self) -> bool {
        self.abs().is_one()
    }
}

pub type IntColumn<T> = Vec<(u32, T)>;

/// Pivot row and column with the column contents at pivot time.
#[derive(Clone, Debug)]
pub struct IntPivot<T> {
    pub row: u32,
    pub col: u32,
    pub column: IntColumn<T>,
}

/// A complete elimination: the rank and the pivots in order.
#[derive(Clone, Debug)]
pub struct IntElimination<T> {
    pub rows: usize,
    pub pivots: Vec<IntPivot<T>>,
    pivot_of_row: Vec<u32>,
}

const NO_PIVOT: u32 = u32::MAX;

/// `target <- a * target - b * pivot`, divided by its content.
fn combine<T: IntScalar>(
    target: &[(u32, T)],
    a: &T,
    pivot: &[(u32, T)],
    b: &T,
) -> Option<IntColumn<T>> {
    let zero = T::from_i8(0);
    let mut out = Vec::with_capacity(target.len() + pivot.len());
    let (mut i, mut j) = (0, 0);
    while i < target.len() || j < pivot.len() {
        let ti = target.get(i).map(|e| e.0).unwrap_or(u32::MAX);
        let pj = pivot.get(j).map(|e| e.0).unwrap_or(u32::MAX);
        let (row, v) = if ti < pj {
            i += 1;
            (ti, T::mul_sub(a, &target[i - 1].1, b, &zero)?)
        } else if pj < ti {
            j += 1;
            (pj, T::mul_sub(a, &zero, b, &pivot[j - 1].1)?)
        } else {
            i += 1;
            j += 1;
            (ti, T::mul_sub(a, &target[i - 1].1, b, &pivot[j - 1].1)?)
        };
        if !v.is_zero() {
            out.push((row, v));
        }
    }
    make_primitive(&mut out);
    Some(out)
}

fn make_primitive<T: IntScalar>(col: &mut [(u32, T)]) {
    let Some(first) = col.first() else { return };
    let mut g = first.1.clone();
    for (_, v) in col.iter().skip(1) {
        if g.is_unit() {
            return;
        }
        g = g.gcd(v);
    }
    if !g.is_unit() && !g.is_zero() {
        for (_, v) in col.iter_mut() {
            *v = v.div_exact(&g);
        }
    }
}

/// Eliminates to completion; `None` on overflow.
pub fn eliminate<T: IntScalar>(
    rows: usize,
    mut cols: Vec<IntColumn<T>>,
) -> Option<IntElimination<T>> {
    let mut row_weight = vec![0u32; rows];
    let mut row_cols: Vec<Vec<u32>> = vec![Vec::new(); rows];
    for (c, col) in cols.iter().enumerate() {
        for &(r, _) in col {
            row_weight[r as usize] += 1;
            row_cols[r as usize].push(c as u32);
        }
    }
    let mut row_active = vec![true; rows];
    let mut col_active: Vec<bool> = cols.iter().map(|c| !c.is_empty()).collect();
    let mut pivots = Vec::new();
    let mut pivot_of_row = vec![NO_PIVOT; rows];
    loop {
        let Some(row) = (0..rows)
            .filter(|&r| row_active[r] && row_weight[r] > 0)
            .min_by_key(|&r| (row_weight[r], r))
        else {
            break;
        };
        let mut list = std::mem::take(&mut row_cols[row]);
        list.sort_unstable();
        list.dedup();
        list.retain(|&c| {
            col_active[c as usize]
                && cols[c as usize]
                    .binary_search_by_key(&(row as u32), |e| e.0)
                    .is_ok()
        });
        let value_at = |col: &IntColumn<T>| {
            let k = col
                .binary_search_by_key(&(row as u32), |e| e.0)
                .expect("row meets column");
            col[k].1.clone()
        };
        let &pc = list
            .iter()
            .min_by_key(|&&c| {
                let col = &cols[c as usize];
                (col.len(), !value_at(col).is_unit(), c)
            })
            .expect("positive weight");
        let pivot_col = std::mem::take(&mut cols[pc as usize]);
        col_active[pc as usize] = false;
        let a = value_at(&pivot_col);
        for &c in &list {
            if c == pc {
                continue;
            }
            let target = std::mem::take(&mut cols[c as usize]);
            let b = value_at(&target);
            let updated = combine(&target, &a, &pivot_col, &b)?;
            // adjust weights by the change in support
            for &(r, _) in &target {
                row_weight[r as usize] -= 1;
            }
            for &(r, _) in &updated {
                row_weight[r as usize] += 1;
                row_cols[r as usize].push(c);
            }
            cols[c as usize] = updated;
        }
        for &(r, _) in &pivot_col {
            row_weight[r as usize] -= 1;
        }
        row_active[row] = false;
        pivot_of_row[row] = pivots.len() as u32;
        pivots.push(IntPivot {
            row: row as u32,
            col: pc,
            column: pivot_col,
        });
    }
    Some(IntElimination {
        rows,
        pivots,
        pivot_of_row,
    })
}

impl<T: IntScalar> IntElimination<T> {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Whether `v` lies in the rational column span; `None` on overflow.
    pub fn spans(&self, v: &[(u32, T)]) -> Option<bool> {
        let mut vec: BTreeMap<u32, T> = v
            .iter()
            .filter(|e| !e.1.is_zero())
            .map(|(r, x)| (*r, x.clone()))
            .collect();
        let mut heap: BinaryHeap<Reverse<u32>> = vec
            .keys()
            .map(|&r| self.pivot_of_row[r as usize])
            .filter(|&p| p != NO_PIVOT)
            .map(Reverse)
            .collect();
        while let Some(Reverse(p)) = heap.pop() {
            let pivot = &self.pivots[p as usize];
            let Some(b) = vec.get(&pivot.row).cloned() else {
                continue;
            };
            let a = pivot
                .column
                .iter()
                .find(|e| e.0 == pivot.row)
                .map(|e| e.1.clone())
                .expect("pivot entry");
            let current: Vec<(u32, T)> = vec.into_iter().collect();
            let updated = combine(&current, &a, &pivot.column, &b)?;
            for &(r, _) in &updated {
                let q = self.pivot_of_row[r as usize];
                if q != NO_PIVOT && q > p {
                    heap.push(Reverse(q));
                }
            }
            vec = updated.into_iter().collect();
        }
        Some(vec.is_empty())
    }
}

/// Rank over the rationals of a signed incidence matrix given by columns.
pub fn rational_rank(rows: usize, cols: &[Vec<(u32, i8)>]) -> usize {
    rational_elimination(rows, cols).rank()
}

/// Complete elimination, in `i64` when possible.
pub enum RationalElimination {
    Small(IntElimination<i64>),
    Big(IntElimination<BigInt>),
}

impl RationalElimination {
    pub fn rank(&self) -> usize {
        match self {
            Self::Small(e) => e.rank(),
            Self::Big(e) => e.rank(),
        }
    }

    pub fn spans(&self, v: &[(u32, i8)]) -> bool {
        match self {
            Self::Small(e) => {
                let w: Vec<(u32, i64)> = v.iter().map(|&(r, s)| (r, s as i64)).collect();
                match e.spans(&w) {
                    Some(b) => b,
                    None => {
                        let big = convert(&e.pivots);
                        let w: Vec<(u32, BigInt)> =
                            v.iter().map(|&(r, s)| (r, BigInt::from(s))).collect();
                        IntElimination {
                            rows: e.rows,
                            pivots: big,
                            pivot_of_row: e.pivot_of_row.clone(),
                        }
                        .spans(&w)
                        .expect("bigint never overflows")
                    }
                }
            }
            Self::Big(e) => {
                let w: Vec<(u32, BigInt)> = v.iter().map(|&(r, s)| (r, BigInt::from(s))).collect();
                e.spans(&w).expect("bigint never overflows")
            }
        }
    }
}

fn convert(pivots: &[IntPivot<i64>]) -> Vec<IntPivot<BigInt>> {
    pivots
        .iter()
        .map(|p| IntPivot {
            row: p.row,
            col: p.col,
            column: p
                .column
                .iter()
                .map(|&(r, v)| (r, BigInt::from(v)))
                .collect(),
        })
        .collect()
}

pub fn rational_elimination(rows: usize, cols: &[Vec<(u32, i8)>]) -> RationalElimination {
    let small: Vec<IntColumn<i64>> = cols
        .iter()
        .map(|c| {
            let mut c: Vec<(u32, i64)> = c.iter().map(|&(r, s)| (r, s as i64)).collect();
            c.sort_unstable_by_key(|e| e.0);
            c
        })
        .collect();
    if let Some(e) = eliminate(rows, small) {
        return RationalElimination::Small(e);
    }
    let big: Vec<IntColumn<BigInt>> = cols
        .iter()
        .map(|c| {
            let mut c: Vec<(u32, BigInt)> = c.iter().map(|&(r, s)| (r, BigInt::from(s))).collect();
            c.sort_unstable_by_key(|e| e.0);
            c
        })
        .collect();
    RationalElimination::Big(eliminate(rows, big).expect("bigint never overflows"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols_of(dense: &[Vec<i8>]) -> Vec<Vec<(u32, i8)>> {
        (0..dense[0].len())
            .map(|c| {
                (0..dense.len())
                    .filter(|&r| dense[r][c] != 0)
                    .map(|r| (r as u32, dense[r][c]))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn detects_torsion_free_rank() {
        // columns (1,1,0), (1,-1,0): rank 2 over Q but 1 over F_2
        let m = vec![vec![1, 1], vec![1, -1], vec![0, 0]];
        let e = rational_elimination(3, &cols_of(&m));
        assert_eq!(e.rank(), 2);
        assert!(e.spans(&[(0, 1)]));
        assert!(!e.spans(&[(2, 1)]));
        assert!(e.spans(&[]));
    }

    #[test]
    fn overflow_falls_back() {
        // repeated doubling forces large intermediate values in i64
        let a: Vec<(u32, i64)> = vec![(0, i64::MAX / 2), (1, 3)];
        assert!(combine(&a, &3, &a, &1).is_none());
        let b: Vec<(u32, BigInt)> = a.iter().map(|&(r, v)| (r, BigInt::from(v))).collect();
        assert!(combine(&b, &BigInt::from(3), &b, &BigInt::from(1)).is_some());
    }

    #[test]
    fn content_is_removed() {
        let mut c: Vec<(u32, i64)> = vec![(0, 4), (3, -6)];
        make_primitive(&mut c);
        assert_eq!(c, vec![(0, 2), (3, -3)]);
    }
}
