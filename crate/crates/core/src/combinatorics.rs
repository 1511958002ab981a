//! Colexicographic ranking of k-subsets (the combinatorial number system).
//!
//! A k-subset `v_0 < v_1 < ... < v_{k-1}` of `{0, ..., n-1}` has rank
//! `sum_i C(v_i, i+1)`. Ranks are dense in `0..C(n,k)`, and the rank of a
//! subset does not depend on `n`, so faces keep their identity when the vertex
//! set grows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Colex rank of a face among all subsets of the same size.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct FaceId(pub u64);

impl FaceId {
    #[inline]
    pub fn rank(self) -> u64 {
        self.0
    }
}

impl std::fmt::Display for FaceId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Exact `C(n, k)`, or `None` on 64-bit overflow.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

pub(crate) fn checked_binomial(n: u64, k: u64) -> Result<u64> {
    binomial(n, k).ok_or(Error::Overflow { n, k })
}

/// Table of `C(m, j)` for `m <= n` and `j <= kmax`, used on hot paths.
#[derive(Clone, Debug)]
pub struct Binomials {
    n: u32,
    kmax: usize,
    table: Vec<u64>,
}

impl Binomials {
    pub fn new(n: u32, kmax: usize) -> Result<Self> {
        let width = n as usize + 1;
        let mut table = vec![0u64; (kmax + 1) * width];
        for m in 0..width {
            table[m] = 1;
        }
        for j in 1..=kmax {
            for m in 1..width {
                let v = table[(j - 1) * width + m - 1]
                    .checked_add(table[j * width + m - 1])
                    .ok_or(Error::Overflow {
                        n: m as u64,
                        k: j as u64,
                    })?;
                table[j * width + m] = v;
            }
        }
        Ok(Self { n, kmax, table })
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn kmax(&self) -> usize {
        self.kmax
    }

    /// `C(m, j)`; `m <= n`, `j <= kmax`.
    #[inline]
    pub fn get(&self, m: u32, j: usize) -> u64 {
        self.table[j * (self.n as usize + 1) + m as usize]
    }

    /// Number of k-subsets of the full vertex set.
    #[inline]
    pub fn count(&self, k: usize) -> u64 {
        self.get(self.n, k)
    }

    /// Rank of a strictly increasing vertex list; no validation.
    #[inline]
    pub fn rank_unchecked(&self, vertices: &[u32]) -> u64 {
        vertices
            .iter()
            .enumerate()
            .map(|(i, &v)| self.get(v, i + 1))
            .sum()
    }

    /// Writes the `out.len()`-subset with the given rank into `out`.
    #[inline]
    pub fn unrank_into(&self, mut rank: u64, out: &mut [u32]) {
        let mut hi = self.n;
        for i in (1..=out.len()).rev() {
            // largest v in [i-1, hi) with C(v, i) <= rank
            let (mut lo, mut up) = (i as u32 - 1, hi);
            while up - lo > 1 {
                let mid = lo + (up - lo) / 2;
                if self.get(mid, i) <= rank {
                    lo = mid;
                } else {
                    up = mid;
                }
            }
            out[i - 1] = lo;
            rank -= self.get(lo, i);
            hi = lo;
        }
    }

    /// Ranks of the facets of `sigma`, facet `i` dropping vertex `i`.
    #[inline]
    pub fn facet_ranks_into(&self, sigma: &[u32], out: &mut [u64]) {
        let k = sigma.len();
        // prefix[i] = sum_{j<i} C(v_j, j+1); suffix terms shift down by one.
        let mut suffix_shifted: u64 = sigma
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, &v)| self.get(v, j))
            .sum();
        let mut prefix = 0u64;
        for i in 0..k {
            out[i] = prefix + suffix_shifted;
            if i + 1 < k {
                suffix_shifted -= self.get(sigma[i + 1], i + 1);
                prefix += self.get(sigma[i], i + 1);
            }
        }
    }
}

fn validate(vertices: &[u32], n: u32) -> Result<()> {
    let bad = |reason| {
        Err(Error::MalformedFace {
            vertices: vertices.to_vec(),
            n,
            reason,
        })
    };
    if vertices.is_empty() {
        return bad("empty vertex list");
    }
    if vertices.windows(2).any(|w| w[0] >= w[1]) {
        return bad("vertices must be strictly increasing");
    }
    if *vertices.last().unwrap() >= n {
        return bad("vertex out of range");
    }
    Ok(())
}

/// Colex rank of a strictly increasing vertex list drawn from `{0, ..., n-1}`.
pub fn face_rank(vertices: &[u32], n: u32) -> Result<FaceId> {
    validate(vertices, n)?;
    let mut rank = 0u64;
    for (i, &v) in vertices.iter().enumerate() {
        rank = rank
            .checked_add(checked_binomial(v as u64, i as u64 + 1)?)
            .ok_or(Error::Overflow {
                n: n as u64,
                k: vertices.len() as u64,
            })?;
    }
    Ok(FaceId(rank))
}

/// Inverse of [`face_rank`] for `k`-subsets of `{0, ..., n-1}`.
pub fn face_unrank(id: FaceId, n: u32, k: usize) -> Result<Vec<u32>> {
    let count = checked_binomial(n as u64, k as u64)?;
    if k == 0 || id.0 >= count {
        return Err(Error::RankOutOfRange {
            rank: id.0,
            n,
            k,
            count,
        });
    }
    let mut out = vec![0u32; k];
    let mut rank = id.0;
    let mut hi = n as u64;
    for i in (1..=k).rev() {
        let (mut lo, mut up) = (i as u64 - 1, hi);
        while up - lo > 1 {
            let mid = lo + (up - lo) / 2;
            if checked_binomial(mid, i as u64)? <= rank {
                lo = mid;
            } else {
                up = mid;
            }
        }
        out[i - 1] = lo as u32;
        rank -= checked_binomial(lo, i as u64)?;
        hi = lo;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// All k-subsets of 0..n listed in colex order by brute force.
    fn colex_enumeration(n: u32, k: usize) -> Vec<Vec<u32>> {
        let mut all: Vec<Vec<u32>> = (0u64..(1u64 << n))
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| (0..n).filter(|&v| m >> v & 1 == 1).collect())
            .collect();
        // colex: compare from the largest element down
        all.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
        all
    }

    #[test]
    fn rank_examples() {
        assert_eq!(face_rank(&[0, 1], 5).unwrap(), FaceId(0));
        assert_eq!(face_rank(&[3, 4], 5).unwrap(), FaceId(9));
        assert_eq!(face_rank(&[1, 2, 4], 6).unwrap(), FaceId(6));
        assert_eq!(face_unrank(FaceId(0), 5, 2).unwrap(), vec![0, 1]);
        assert_eq!(face_unrank(FaceId(9), 5, 2).unwrap(), vec![3, 4]);
        assert_eq!(face_unrank(FaceId(6), 6, 3).unwrap(), vec![1, 2, 4]);
    }

    #[test]
    fn ranks_match_enumeration_index() {
        for n in 1..=8u32 {
            for k in 1..=n as usize {
                for (idx, s) in colex_enumeration(n, k).iter().enumerate() {
                    assert_eq!(face_rank(s, n).unwrap().0, idx as u64);
                    assert_eq!(&face_unrank(FaceId(idx as u64), n, k).unwrap(), s);
                }
            }
        }
        // [1,2,4] sits at index 6 among 3-subsets of 0..6
        assert_eq!(colex_enumeration(6, 3)[6], vec![1, 2, 4]);
    }

    #[test]
    fn malformed_and_out_of_range() {
        assert!(matches!(
            face_rank(&[2, 1], 5),
            Err(Error::MalformedFace { .. })
        ));
        assert!(face_rank(&[1, 1], 5).is_err());
        assert!(face_rank(&[1, 5], 5).is_err());
        assert!(face_rank(&[], 5).is_err());
        assert!(matches!(
            face_unrank(FaceId(10), 5, 2),
            Err(Error::RankOutOfRange { .. })
        ));
    }

    #[test]
    fn table_agrees_with_checked_binomial() {
        let b = Binomials::new(60, 4).unwrap();
        for m in 0..=60u32 {
            for j in 0..=4 {
                assert_eq!(b.get(m, j), binomial(m as u64, j as u64).unwrap());
            }
        }
        assert_eq!(binomial(2000, 3), Some(1_331_334_000));
        assert_eq!(binomial(1000, 500), None);
    }

    #[test]
    fn facet_ranks_match_direct_ranking() {
        let b = Binomials::new(30, 5).unwrap();
        let sigma = [2u32, 7, 11, 19, 28];
        let mut out = [0u64; 5];
        b.facet_ranks_into(&sigma, &mut out);
        for i in 0..5 {
            let mut facet = sigma.to_vec();
            facet.remove(i);
            assert_eq!(out[i], face_rank(&facet, 30).unwrap().0);
        }
    }

    proptest! {
        #[test]
        fn round_trip(n in 2u32..300, k in 1usize..5, seed in any::<u64>()) {
            prop_assume!(k as u32 <= n);
            let count = binomial(n as u64, k as u64).unwrap();
            let r = seed % count;
            let v = face_unrank(FaceId(r), n, k).unwrap();
            prop_assert!(v.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(face_rank(&v, n).unwrap().0, r);
            let table = Binomials::new(n, k).unwrap();
            let mut fast = vec![0u32; k];
            table.unrank_into(r, &mut fast);
            prop_assert_eq!(&fast, &v);
            prop_assert_eq!(table.rank_unchecked(&v), r);
        }
    }
}
