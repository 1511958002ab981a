//! Top-dimensional Betti numbers, the R-shadow and regime classification.
//!
//! Ranks over a prime field run a cost-capped sparse elimination and finish
//! the Schur block densely or with the black-box method. Rational ranks are
//! exact (fraction-free) for small cores; larger ones take the larger of the
//! ranks modulo two 61- and 64-bit primes, which can only undercount.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::SparseBoundary;
use crate::collapse::{collapse_to_core, simplex_boundaries};
use crate::combinatorics::FaceId;
use crate::complex::Complex;
use crate::error::Result;
use crate::linalg::dense::{self, DenseMatrix};
use crate::linalg::field::{Field, GenericPrime, Goldilocks, Mersenne61, GOLDILOCKS, MERSENNE61};
use crate::linalg::integer::{rational_elimination, RationalElimination};
use crate::linalg::sparse::{eliminate, Column, Elimination, EliminationLimits};
use crate::linalg::wiedemann::{self, Csc};
use crate::rng::substream;

/// Coefficient field for ranks and homology.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldChoice {
    Rational,
    Prime(u64),
}

impl Default for FieldChoice {
    fn default() -> Self {
        FieldChoice::Prime(MERSENNE61)
    }
}

impl FieldChoice {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FieldChoice::Rational => Ok(()),
            FieldChoice::Prime(q) if q == MERSENNE61 || q == GOLDILOCKS => Ok(()),
            FieldChoice::Prime(q) => GenericPrime::new(q).map(|_| ()),
        }
    }
}

/// How a rank was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankMethod {
    /// Fraction-free elimination over the integers.
    Exact,
    /// Maximum over two large primes; a lower bound, exact with high
    /// probability.
    MultiModular,
    PrimeField,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankResult {
    pub rank: usize,
    /// `cols - rank`, the Betti number of the complex.
    pub kernel_dim: usize,
    /// `rows - rank`, the dimension of the left kernel.
    pub cokernel_dim: usize,
    pub method: RankMethod,
}

/// Largest number of columns eliminated exactly over the integers.
pub const EXACT_COLUMN_LIMIT: usize = 3000;
/// Markowitz cost at which sparse elimination hands over the Schur block.
const SCHUR_COST: u64 = 256;
/// Largest Schur block (entries) finished by dense elimination.
const DENSE_ENTRIES: usize = 4_000_000;
/// Below this modulus the black-box method is unreliable; eliminate fully.
const SMALL_PRIME: u64 = 1 << 20;

/// Signed columns with rows renumbered to the touched rows.
struct Compressed {
    rows: usize,
    cols: Vec<Vec<(u32, i8)>>,
}

fn compress(m: &SparseBoundary) -> Compressed {
    let mut map = vec![u32::MAX; m.rows()];
    let mut used = 0u32;
    let cols = (0..m.cols())
        .map(|j| {
            let mut col: Vec<(u32, i8)> = m
                .column(j)
                .iter()
                .map(|e| {
                    let slot = &mut map[e.row as usize];
                    if *slot == u32::MAX {
                        *slot = used;
                        used += 1;
                    }
                    (*slot, e.sign)
                })
                .collect();
            col.sort_unstable_by_key(|e| e.0);
            col
        })
        .collect();
    Compressed {
        rows: used as usize,
        cols,
    }
}

fn signed_columns(y: &Complex) -> Vec<Vec<(u32, i8)>> {
    let d = y.dim();
    let table = y.binomials();
    let mut verts = vec![0u32; d + 1];
    let mut ranks = vec![0u64; d + 1];
    y.faces()
        .iter()
        .map(|f| {
            table.unrank_into(f.0, &mut verts);
            table.facet_ranks_into(&verts, &mut ranks);
            let mut col: Vec<(u32, i8)> = ranks
                .iter()
                .enumerate()
                .map(|(i, &r)| (r as u32, if i % 2 == 0 { 1 } else { -1 }))
                .collect();
            col.sort_unstable_by_key(|e| e.0);
            col
        })
        .collect()
}

fn to_field<F: Field>(f: F, cols: &[Vec<(u32, i8)>]) -> Vec<Column> {
    cols.iter()
        .map(|c| c.iter().map(|&(r, s)| (r, f.sign(s))).collect())
        .collect()
}

fn limits_for<F: Field>(f: F, keep_pivots: bool) -> EliminationLimits {
    if f.modulus() < SMALL_PRIME {
        EliminationLimits::complete(keep_pivots)
    } else {
        EliminationLimits {
            max_cost: SCHUR_COST,
            max_nnz: usize::MAX,
            keep_pivots,
        }
    }
}

/// Schur block with rows renumbered to `0..remaining_rows.len()`.
fn schur_columns(e: &Elimination) -> Vec<Column> {
    let mut map = vec![u32::MAX; e.rows];
    for (i, &r) in e.remaining_rows.iter().enumerate() {
        map[r as usize] = i as u32;
    }
    e.remaining_cols
        .iter()
        .map(|(_, c)| c.iter().map(|&(r, v)| (map[r as usize], v)).collect())
        .collect()
}

fn dense_of(rows: usize, cols: &[Column], transpose: bool) -> DenseMatrix {
    let mut m = if transpose {
        DenseMatrix::zeros(cols.len(), rows)
    } else {
        DenseMatrix::zeros(rows, cols.len())
    };
    for (c, col) in cols.iter().enumerate() {
        for &(r, v) in col {
            if transpose {
                m.set(c, r as usize, v);
            } else {
                m.set(r as usize, c, v);
            }
        }
    }
    m
}

fn rank_mod<F: Field, R: Rng>(f: F, rows: usize, cols: &[Vec<(u32, i8)>], rng: &mut R) -> usize {
    let mut columns = to_field(f, cols);
    let e = eliminate(f, rows, &mut columns, limits_for(f, false));
    if e.is_complete() {
        return e.pivot_count;
    }
    let schur = schur_columns(&e);
    let r = e.remaining_rows.len();
    let schur_rank = if r * schur.len() <= DENSE_ENTRIES {
        dense::rank(f, dense_of(r, &schur, r > schur.len()))
    } else {
        wiedemann::rank(f, &Csc::from_columns(r, &schur), rng)
    };
    e.pivot_count + schur_rank
}

/// `count` random vectors `z` over all `rows` with `z^T A = 0`.
fn left_kernel_mod<F: Field, R: Rng>(
    f: F,
    rows: usize,
    cols: &[Vec<(u32, i8)>],
    count: usize,
    rng: &mut R,
) -> Result<Vec<Vec<u64>>> {
    let mut columns = to_field(f, cols);
    let e = eliminate(f, rows, &mut columns, limits_for(f, true));
    let r = e.remaining_rows.len();
    let schur_samples: Vec<Vec<u64>> = if e.is_complete() {
        vec![Vec::new(); count]
    } else {
        let schur = schur_columns(&e);
        if r * schur.len() <= DENSE_ENTRIES {
            (0..count)
                .map(|_| dense::random_kernel_vector(f, dense_of(r, &schur, true), rng).0)
                .collect()
        } else {
            wiedemann::left_kernel_samples(f, &Csc::from_columns(r, &schur), count, rng)?.0
        }
    };
    let mut out = Vec::with_capacity(count);
    for sample in schur_samples {
        let mut z: Vec<u64> = (0..rows).map(|_| f.random(rng)).collect();
        for (i, &row) in e.remaining_rows.iter().enumerate() {
            z[row as usize] = sample[i];
        }
        for p in e.pivots.iter().rev() {
            let mut a = 0;
            let mut s = 0;
            for &(row, v) in &p.column {
                if row == p.row {
                    a = v;
                } else {
                    s = f.add(s, f.mul(z[row as usize], v));
                }
            }
            z[p.row as usize] = f.neg(f.mul(s, f.inv(a)));
        }
        out.push(z);
    }
    Ok(out)
}

fn prime_rank(q: u64, rows: usize, cols: &[Vec<(u32, i8)>], seed: u64) -> Result<usize> {
    let mut rng = substream(seed, &[q]);
    Ok(match q {
        MERSENNE61 => rank_mod(Mersenne61, rows, cols, &mut rng),
        GOLDILOCKS => rank_mod(Goldilocks, rows, cols, &mut rng),
        _ => rank_mod(GenericPrime::new(q)?, rows, cols, &mut rng),
    })
}

fn prime_left_kernel(
    q: u64,
    rows: usize,
    cols: &[Vec<(u32, i8)>],
    count: usize,
    seed: u64,
) -> Result<(u64, Vec<Vec<u64>>)> {
    let mut rng = substream(seed, &[q]);
    let zs = match q {
        MERSENNE61 => left_kernel_mod(Mersenne61, rows, cols, count, &mut rng)?,
        GOLDILOCKS => left_kernel_mod(Goldilocks, rows, cols, count, &mut rng)?,
        _ => left_kernel_mod(GenericPrime::new(q)?, rows, cols, count, &mut rng)?,
    };
    Ok((q, zs))
}

fn seed_of(rows: usize, cols: &[Vec<(u32, i8)>]) -> u64 {
    crate::rng::derive_stream(&[rows as u64, cols.len() as u64])
}

fn rank_columns(
    rows: usize,
    cols: &[Vec<(u32, i8)>],
    field: FieldChoice,
) -> Result<(usize, RankMethod)> {
    field.validate()?;
    let seed = seed_of(rows, cols);
    match field {
        FieldChoice::Prime(q) => Ok((prime_rank(q, rows, cols, seed)?, RankMethod::PrimeField)),
        FieldChoice::Rational if cols.len() <= EXACT_COLUMN_LIMIT => {
            Ok((rational_elimination(rows, cols).rank(), RankMethod::Exact))
        }
        FieldChoice::Rational => {
            let a = prime_rank(MERSENNE61, rows, cols, seed)?;
            let b = prime_rank(GOLDILOCKS, rows, cols, seed)?;
            Ok((a.max(b), RankMethod::MultiModular))
        }
    }
}

/// Rank of a boundary matrix with kernel and cokernel dimensions.
pub fn rank_boundary(m: &SparseBoundary, field: FieldChoice) -> Result<RankResult> {
    let c = compress(m);
    let (rank, method) = rank_columns(c.rows, &c.cols, field)?;
    Ok(RankResult {
        rank,
        kernel_dim: m.cols() - rank,
        cokernel_dim: m.rows() - rank,
        method,
    })
}

/// Rank of the top boundary map of `y`, rows being every ridge.
pub fn rank_of_complex(y: &Complex, field: FieldChoice) -> Result<RankResult> {
    let cols = signed_columns(y);
    let ridges = y.f_dminus1() as usize;
    let mut touched: Vec<u32> = cols.iter().flatten().map(|e| e.0).collect();
    touched.sort_unstable();
    touched.dedup();
    let compact: Vec<Vec<(u32, i8)>> = cols
        .iter()
        .map(|c| {
            c.iter()
                .map(|&(r, s)| (touched.binary_search(&r).expect("touched") as u32, s))
                .collect()
        })
        .collect();
    let (rank, method) = rank_columns(touched.len(), &compact, field)?;
    Ok(RankResult {
        rank,
        kernel_dim: y.f_d() - rank,
        cokernel_dim: ridges - rank,
        method,
    })
}

/// `f_d - rank` of the full boundary map.
pub fn betti_d(y: &Complex, field: FieldChoice) -> Result<usize> {
    Ok(rank_of_complex(y, field)?.kernel_dim)
}

/// The Betti number computed on the core.
pub fn betti_via_core(y: &Complex, field: FieldChoice) -> Result<usize> {
    field.validate()?;
    let core = collapse_to_core(y).core;
    if core.f_d() == 0 {
        return Ok(0);
    }
    betti_d(&core, field)
}

/// Membership oracle for the column space of a boundary matrix.
enum SpanTest {
    Exact(RationalElimination),
    /// Random left-kernel vectors per modulus.
    Kernels(Vec<(u64, Vec<Vec<u64>>)>),
}

/// Independent left-kernel samples drawn per modulus.
const KERNEL_SAMPLES: usize = 2;

impl SpanTest {
    fn spans(&self, col: &[(u32, i8)]) -> bool {
        match self {
            SpanTest::Exact(e) => e.spans(col),
            SpanTest::Kernels(ks) => ks.iter().all(|(q, zs)| {
                zs.iter().all(|z| {
                    let mut s: u128 = 0;
                    let q = *q as u128;
                    for &(r, sign) in col {
                        let v = z[r as usize] as u128;
                        s += if sign > 0 { v } else { q - v };
                    }
                    s % q == 0
                })
            }),
        }
    }
}

/// d-faces outside `y` whose boundary already lies in the column space of
/// the boundary map of `y`.
pub fn r_shadow(y: &Complex, field: FieldChoice) -> Result<Vec<FaceId>> {
    field.validate()?;
    if y.f_d() == 0 {
        return Ok(Vec::new());
    }
    let rows = y.f_dminus1() as usize;
    let cols = signed_columns(y);
    let seed = seed_of(rows, &cols);
    let test = match field {
        FieldChoice::Rational if cols.len() <= EXACT_COLUMN_LIMIT => {
            SpanTest::Exact(rational_elimination(rows, &cols))
        }
        FieldChoice::Rational => SpanTest::Kernels(vec![
            prime_left_kernel(MERSENNE61, rows, &cols, KERNEL_SAMPLES, seed)?,
            prime_left_kernel(GOLDILOCKS, rows, &cols, KERNEL_SAMPLES, seed)?,
        ]),
        FieldChoice::Prime(q) => SpanTest::Kernels(vec![prime_left_kernel(
            q,
            rows,
            &cols,
            KERNEL_SAMPLES,
            seed,
        )?]),
    };
    let mut touched = vec![false; rows];
    for &(r, _) in cols.iter().flatten() {
        touched[r as usize] = true;
    }

    let d = y.dim();
    let table = y.binomials();
    let total = y.d_face_count();
    const CHUNK: u64 = 1 << 14;
    let chunks = total.div_ceil(CHUNK);
    let found: Vec<Vec<FaceId>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut verts = vec![0u32; d + 1];
            let mut ranks = vec![0u64; d + 1];
            let mut col = Vec::with_capacity(d + 1);
            let mut out = Vec::new();
            for rank in k * CHUNK..((k + 1) * CHUNK).min(total) {
                if y.contains(FaceId(rank)) {
                    continue;
                }
                table.unrank_into(rank, &mut verts);
                table.facet_ranks_into(&verts, &mut ranks);
                // a ridge outside every column is never spanned
                if ranks.iter().any(|&r| !touched[r as usize]) {
                    continue;
                }
                col.clear();
                col.extend(
                    ranks
                        .iter()
                        .enumerate()
                        .map(|(i, &r)| (r as u32, if i % 2 == 0 { 1i8 } else { -1 })),
                );
                col.sort_unstable_by_key(|e| e.0);
                if test.spans(&col) {
                    out.push(FaceId(rank));
                }
            }
            out
        })
        .collect();
    Ok(found.into_iter().flatten().collect())
}

/// Coarse homological type of a complex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// The core is empty or a gravel.
    CollapsibleOrGravel,
    /// The top cycles are spanned by the boundaries of (d+1)-simplices in
    /// the complex, which need not be vertex-disjoint from the rest.
    AcyclicExceptGravel,
    Cyclic,
}

/// Regime of `y` over the default field.
pub fn classify_regime(y: &Complex) -> Result<Regime> {
    classify_regime_with(y, FieldChoice::default())
}

pub fn classify_regime_with(y: &Complex, field: FieldChoice) -> Result<Regime> {
    let core = collapse_to_core(y);
    if core.is_gravel {
        return Ok(Regime::CollapsibleOrGravel);
    }
    let gravel = simplex_boundaries(&core.core).len();
    let betti = betti_d(&core.core, field)?;
    Ok(if betti == gravel {
        Regime::AcyclicExceptGravel
    } else {
        Regime::Cyclic
    })
}
