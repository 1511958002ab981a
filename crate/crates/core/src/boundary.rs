//! Signed boundary matrices of the top dimension.

use serde::{Deserialize, Serialize};

use crate::combinatorics::FaceId;
use crate::complex::Complex;
use crate::error::{Error, Result};

/// One nonzero of a boundary matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub row: u32,
    pub col: u32,
    pub sign: i8,
}

/// Column-major signed incidence matrix: rows are ridges, columns d-faces.
///
/// Column `j` holds exactly `d+1` entries, ordered by the dropped vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseBoundary {
    rows: usize,
    cols: usize,
    d: usize,
    row_faces: Option<Vec<FaceId>>,
    entries: Vec<Entry>,
}

impl SparseBoundary {
    /// Assembles from raw parts; every column must hold `d+1` entries.
    pub fn from_entries(rows: usize, cols: usize, d: usize, entries: Vec<Entry>) -> Result<Self> {
        if entries.len() != cols * (d + 1) {
            return Err(Error::Config(format!(
                "{} entries for {cols} columns of dimension {d}",
                entries.len()
            )));
        }
        for (k, e) in entries.iter().enumerate() {
            if e.col as usize != k / (d + 1) || e.row as usize >= rows || e.sign.abs() != 1 {
                return Err(Error::Config(format!("bad entry {e:?} at position {k}")));
            }
        }
        Ok(Self {
            rows,
            cols,
            d,
            row_faces: None,
            entries,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Entries of column `j`.
    #[inline]
    pub fn column(&self, j: usize) -> &[Entry] {
        &self.entries[j * (self.d + 1)..(j + 1) * (self.d + 1)]
    }

    /// Ridge ranks labelling the rows when a retained subset was used.
    pub fn row_faces(&self) -> Option<&[FaceId]> {
        self.row_faces.as_deref()
    }

    /// Dense copy as signed integers, row-major; for small matrices.
    pub fn to_dense(&self) -> Vec<Vec<i64>> {
        let mut m = vec![vec![0i64; self.cols]; self.rows];
        for e in &self.entries {
            m[e.row as usize][e.col as usize] = e.sign as i64;
        }
        m
    }
}

/// Boundary matrix with one row per ridge rank `0..C(n,d)`.
pub fn boundary_matrix(y: &Complex) -> SparseBoundary {
    let d = y.dim();
    let table = y.binomials();
    let mut verts = vec![0u32; d + 1];
    let mut ranks = vec![0u64; d + 1];
    let mut entries = Vec::with_capacity(y.f_d() * (d + 1));
    for (j, f) in y.faces().iter().enumerate() {
        table.unrank_into(f.0, &mut verts);
        table.facet_ranks_into(&verts, &mut ranks);
        for (i, &r) in ranks.iter().enumerate() {
            entries.push(Entry {
                row: r as u32,
                col: j as u32,
                sign: if i % 2 == 0 { 1 } else { -1 },
            });
        }
    }
    SparseBoundary {
        rows: table.count(d) as usize,
        cols: y.f_d(),
        d,
        row_faces: None,
        entries,
    }
}

/// Boundary matrix restricted to the given ridges (sorted ranks).
///
/// Every ridge of every d-face of `y` must be among `retained`.
pub fn boundary_matrix_on(y: &Complex, retained: &[FaceId]) -> Result<SparseBoundary> {
    if retained.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "retained ridges must be sorted and distinct".into(),
        ));
    }
    let full = boundary_matrix(y);
    let mut entries = full.entries;
    for e in entries.iter_mut() {
        let pos = retained
            .binary_search(&FaceId(e.row as u64))
            .map_err(|_| Error::Config(format!("ridge {} is not retained", e.row)))?;
        e.row = pos as u32;
    }
    Ok(SparseBoundary {
        rows: retained.len(),
        cols: full.cols,
        d: full.d,
        row_faces: Some(retained.to_vec()),
        entries,
    })
}

/// Matrix of the boundary map from d-faces to ridges for the full simplex
/// skeleton one dimension down: rows are (d-2)-faces, columns all ridges.
pub fn ridge_boundary_matrix(n: u32, d: usize) -> Result<SparseBoundary> {
    if d < 2 {
        return Err(Error::Config("ridge boundary needs d >= 2".into()));
    }
    let skeleton = Complex::full(n, d - 1)?;
    Ok(boundary_matrix(&skeleton))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_face_column() {
        let y = Complex::from_vertex_lists(3, 2, &[[0, 1, 2]]).unwrap();
        let m = boundary_matrix(&y);
        assert_eq!((m.rows(), m.cols()), (3, 1));
        // rows: {1,2} = 2, {0,2} = 1, {0,1} = 0
        assert_eq!(m.to_dense(), vec![vec![1], vec![-1], vec![1]]);
    }

    #[test]
    fn column_sign_pattern() {
        let y = Complex::full(7, 3).unwrap();
        let m = boundary_matrix(&y);
        assert_eq!(m.entries().len(), 4 * y.f_d());
        for j in 0..m.cols() {
            let signs: Vec<i8> = m.column(j).iter().map(|e| e.sign).collect();
            assert_eq!(signs, vec![1, -1, 1, -1]);
            let mut rows: Vec<u32> = m.column(j).iter().map(|e| e.row).collect();
            rows.dedup();
            assert_eq!(rows.len(), 4);
        }
    }

    #[test]
    fn boundary_composition_vanishes() {
        for n in 4..=7 {
            let y = Complex::full(n, 2).unwrap();
            let d2 = boundary_matrix(&y).to_dense();
            let d1 = ridge_boundary_matrix(n, 2).unwrap().to_dense();
            for row in &d1 {
                for j in 0..d2[0].len() {
                    let s: i64 = (0..d2.len()).map(|k| row[k] * d2[k][j]).sum();
                    assert_eq!(s, 0);
                }
            }
        }
    }

    #[test]
    fn restricted_rows() {
        let y = Complex::from_vertex_lists(5, 2, &[[0, 1, 2]]).unwrap();
        let keep = [FaceId(0), FaceId(1), FaceId(2)];
        let m = boundary_matrix_on(&y, &keep).unwrap();
        assert_eq!(m.rows(), 3);
        assert!(boundary_matrix_on(&y, &keep[..2]).is_err());
    }
}
