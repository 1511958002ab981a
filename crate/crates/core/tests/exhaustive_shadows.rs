//! Every 2-complex on at most six vertices: the fast C-shadow against full
//! core recomputation, and the exact R-shadow against a brute-force rank
//! oracle and the C-shadow.

use rayon::prelude::*;

use randcomplex::boundary::boundary_matrix;
use randcomplex::collapse::{c_shadow_with, ShadowMode};
use randcomplex::combinatorics::FaceId;
use randcomplex::complex::Complex;
use randcomplex::homology::{r_shadow, FieldChoice};

fn complex_from_mask(n: u32, mask: u64) -> Complex {
    let total = randcomplex::combinatorics::binomial(n as u64, 3).unwrap();
    let faces = (0..total)
        .filter(|r| mask >> r & 1 == 1)
        .map(FaceId)
        .collect();
    Complex::new(n, 2, faces).unwrap()
}

/// Rank over Q by Bareiss elimination on a dense copy.
fn bareiss_rank(mut m: Vec<Vec<i128>>) -> usize {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut rank = 0;
    let mut prev = 1i128;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| m[r][c] != 0) else {
            continue;
        };
        m.swap(rank, p);
        for r in rank + 1..rows {
            for k in c + 1..cols {
                m[r][k] = (m[rank][c] * m[r][k] - m[r][c] * m[rank][k]) / prev;
            }
            m[r][c] = 0;
        }
        prev = m[rank][c];
        rank += 1;
    }
    rank
}

fn rank_oracle(y: &Complex) -> usize {
    let dense = boundary_matrix(y).to_dense();
    bareiss_rank(
        dense
            .into_iter()
            .map(|row| row.into_iter().map(i128::from).collect())
            .collect(),
    )
}

fn r_shadow_oracle(y: &Complex) -> Vec<FaceId> {
    let base = rank_oracle(y);
    (0..y.d_face_count())
        .map(FaceId)
        .filter(|&f| !y.contains(f) && rank_oracle(&y.with_face(f).unwrap()) == base)
        .collect()
}

fn masks(n: u32) -> std::ops::Range<u64> {
    0..1u64 << randcomplex::combinatorics::binomial(n as u64, 3).unwrap()
}

#[test]
fn fast_c_shadow_matches_oracle_for_all_small_complexes() {
    for n in 3..=6u32 {
        let bad: Vec<u64> = masks(n)
            .into_par_iter()
            .filter(|&mask| {
                let y = complex_from_mask(n, mask);
                c_shadow_with(&y, ShadowMode::Fast) != c_shadow_with(&y, ShadowMode::Oracle)
            })
            .collect();
        assert!(
            bad.is_empty(),
            "n = {n}: {} mismatches, first mask {:#x}",
            bad.len(),
            bad[0]
        );
    }
}

#[test]
fn exact_r_shadow_is_brute_force_and_inside_c_shadow() {
    for n in 3..=6u32 {
        let bad: Vec<(u64, &str)> = masks(n)
            .into_par_iter()
            .filter_map(|mask| {
                let y = complex_from_mask(n, mask);
                let real = r_shadow(&y, FieldChoice::Rational).unwrap();
                if n <= 5 && real != r_shadow_oracle(&y) {
                    return Some((mask, "oracle"));
                }
                let collapse = c_shadow_with(&y, ShadowMode::Fast);
                if real.iter().any(|f| collapse.binary_search(f).is_err()) {
                    return Some((mask, "containment"));
                }
                None
            })
            .collect();
        assert!(
            bad.is_empty(),
            "n = {n}: {} failures, first {:?}",
            bad.len(),
            bad[0]
        );
    }
}

#[test]
fn r_shadow_oracle_sample_at_six_vertices() {
    // The brute-force rank oracle is slow on all 2^20 complexes; check a
    // spread of masks instead.
    let total = masks(6).end;
    let bad: Vec<u64> = (0..4096u64)
        .into_par_iter()
        .map(|i| i.wrapping_mul(0x9E37_79B9_7F4A_7C15) % total)
        .filter(|&mask| {
            let y = complex_from_mask(6, mask);
            r_shadow(&y, FieldChoice::Rational).unwrap() != r_shadow_oracle(&y)
        })
        .collect();
    assert!(
        bad.is_empty(),
        "{} mismatches, first mask {:#x}",
        bad.len(),
        bad[0]
    );
}
