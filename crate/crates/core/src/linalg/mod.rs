//! Exact linear algebra over prime fields.

pub mod dense;
pub mod field;
pub mod integer;
pub mod sparse;
pub mod wiedemann;

use crate::boundary::SparseBoundary;
use field::Field;
use sparse::Column;

/// Columns of a boundary matrix over `f`, each sorted by row.
pub fn field_columns<F: Field>(f: F, m: &SparseBoundary) -> Vec<Column> {
    (0..m.cols())
        .map(|j| {
            let mut col: Column = m
                .column(j)
                .iter()
                .map(|e| (e.row, f.sign(e.sign)))
                .collect();
            col.sort_unstable_by_key(|e| e.0);
            col
        })
        .collect()
}
