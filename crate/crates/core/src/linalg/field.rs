//! Prime fields with elements stored as canonical `u64` residues.

use rand::Rng;

use crate::error::{Error, Result};

/// Arithmetic in `Z/p` for a prime `p < 2^64`.
pub trait Field: Copy + Send + Sync + std::fmt::Debug + 'static {
    fn modulus(&self) -> u64;
    fn mul(&self, a: u64, b: u64) -> u64;

    #[inline]
    fn add(&self, a: u64, b: u64) -> u64 {
        let p = self.modulus();
        let (s, carry) = a.overflowing_add(b);
        if carry || s >= p {
            s.wrapping_sub(p)
        } else {
            s
        }
    }

    #[inline]
    fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a.wrapping_sub(b).wrapping_add(self.modulus())
        }
    }

    #[inline]
    fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.modulus() - a
        }
    }

    fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse of a nonzero element.
    fn inv(&self, a: u64) -> u64 {
        debug_assert!(a != 0);
        self.pow(a, self.modulus() - 2)
    }

    #[inline]
    fn from_i64(&self, x: i64) -> u64 {
        let p = self.modulus();
        if x >= 0 {
            (x as u64) % p
        } else {
            self.neg(x.unsigned_abs() % p)
        }
    }

    /// `+1` or `-1`.
    #[inline]
    fn sign(&self, s: i8) -> u64 {
        if s > 0 {
            1
        } else {
            self.modulus() - 1
        }
    }

    /// `sum a_i b_i`.
    #[inline]
    fn dot<I: Iterator<Item = (u64, u64)>>(&self, terms: I) -> u64 {
        terms.fold(0, |acc, (a, b)| self.add(acc, self.mul(a, b)))
    }

    /// `sum vals_i x[idx_i]`.
    #[inline]
    fn gather_dot(&self, vals: &[u64], idx: &[u32], x: &[u64]) -> u64 {
        self.dot(vals.iter().zip(idx).map(|(&v, &i)| (v, x[i as usize])))
    }

    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.random_range(0..self.modulus())
    }

    fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.random_range(1..self.modulus())
    }
}

/// `2^61 - 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Mersenne61;

pub const MERSENNE61: u64 = (1 << 61) - 1;

impl Field for Mersenne61 {
    #[inline]
    fn modulus(&self) -> u64 {
        MERSENNE61
    }

    #[inline]
    fn mul(&self, a: u64, b: u64) -> u64 {
        let z = a as u128 * b as u128;
        let lo = (z as u64) & MERSENNE61;
        let hi = (z >> 61) as u64;
        let s = lo + hi;
        if s >= MERSENNE61 {
            s - MERSENNE61
        } else {
            s
        }
    }

    #[inline]
    fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= MERSENNE61 {
            s - MERSENNE61
        } else {
            s
        }
    }

    #[inline]
    fn dot<I: Iterator<Item = (u64, u64)>>(&self, terms: I) -> u64 {
        // products are below 2^122, so 32 of them fit in a u128
        let mut acc = 0u128;
        let mut pending = 0u32;
        for (a, b) in terms {
            acc += a as u128 * b as u128;
            pending += 1;
            if pending == 32 {
                acc = reduce_m61(acc) as u128;
                pending = 0;
            }
        }
        reduce_m61(acc)
    }

    #[inline]
    fn gather_dot(&self, vals: &[u64], idx: &[u32], x: &[u64]) -> u64 {
        let mut total = 0u64;
        for (vc, ic) in vals.chunks(32).zip(idx.chunks(32)) {
            let mut acc = 0u128;
            for (&v, &i) in vc.iter().zip(ic) {
                acc += v as u128 * x[i as usize] as u128;
            }
            total = self.add(total, reduce_m61(acc));
        }
        total
    }
}

#[inline]
fn reduce_m61(x: u128) -> u64 {
    let m = MERSENNE61 as u128;
    let s = ((x & m) + ((x >> 61) & m) + (x >> 122)) as u64;
    let s = (s & MERSENNE61) + (s >> 61);
    if s >= MERSENNE61 {
        s - MERSENNE61
    } else {
        s
    }
}

/// `2^64 - 2^32 + 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Goldilocks;

pub const GOLDILOCKS: u64 = 0xFFFF_FFFF_0000_0001;

impl Field for Goldilocks {
    #[inline]
    fn modulus(&self) -> u64 {
        GOLDILOCKS
    }

    #[inline]
    fn mul(&self, a: u64, b: u64) -> u64 {
        reduce_goldilocks(a as u128 * b as u128)
    }

    #[inline]
    fn gather_dot(&self, vals: &[u64], idx: &[u32], x: &[u64]) -> u64 {
        let mut acc = 0u128;
        let mut carries = 0u64;
        for (&v, &i) in vals.iter().zip(idx) {
            let (s, over) = acc.overflowing_add(v as u128 * x[i as usize] as u128);
            acc = s;
            carries += over as u64;
        }
        // 2^128 = (2^32 - 1)^2 modulo p
        let wrap = self.mul(carries % GOLDILOCKS, GOLDILOCKS_2_128);
        self.add(reduce_goldilocks(acc), wrap)
    }
}

const GOLDILOCKS_2_128: u64 = 0xFFFF_FFFE_0000_0001;

#[inline]
fn reduce_goldilocks(z: u128) -> u64 {
    let lo = z as u64;
    let hi = (z >> 64) as u64;
    let hi_hi = hi >> 32;
    let hi_lo = hi & 0xFFFF_FFFF;
    // 2^64 = 2^32 - 1 and 2^96 = -1 modulo p
    let (mut t, borrow) = lo.overflowing_sub(hi_hi);
    if borrow {
        t = t.wrapping_sub(0xFFFF_FFFF);
    }
    let (mut r, carry) = t.overflowing_add(hi_lo * 0xFFFF_FFFF);
    if carry || r >= GOLDILOCKS {
        r = r.wrapping_sub(GOLDILOCKS);
    }
    r
}

/// Any prime modulus below `2^63`, multiplying through `u128` division.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenericPrime {
    p: u64,
}

impl GenericPrime {
    pub fn new(p: u64) -> Result<Self> {
        if !is_prime(p) || p >= 1 << 63 {
            return Err(Error::NotPrime(p));
        }
        Ok(Self { p })
    }
}

impl Field for GenericPrime {
    #[inline]
    fn modulus(&self) -> u64 {
        self.p
    }

    #[inline]
    fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n % b == 0 {
            return n == b;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn primality() {
        assert!(is_prime(MERSENNE61));
        assert!(is_prime(GOLDILOCKS));
        assert!(is_prime(2_147_483_647));
        assert!(!is_prime(2_147_483_649));
        assert!(!is_prime(1));
        assert!(is_prime(2));
        // strong pseudoprime to several small bases
        assert!(!is_prime(3_215_031_751));
        assert!(GenericPrime::new(15).is_err());
    }

    #[test]
    fn inverses() {
        let f = Mersenne61;
        for a in [1u64, 2, 3, 12345, MERSENNE61 - 1] {
            assert_eq!(f.mul(a, f.inv(a)), 1);
        }
        let g = Goldilocks;
        for a in [1u64, 2, 0xFFFF_FFFF, GOLDILOCKS - 1] {
            assert_eq!(g.mul(a, g.inv(a)), 1);
        }
    }

    proptest! {
        #[test]
        fn fast_reductions_match_u128(a in any::<u64>(), b in any::<u64>()) {
            let (a1, b1) = (a % MERSENNE61, b % MERSENNE61);
            prop_assert_eq!(Mersenne61.mul(a1, b1), mul_mod(a1, b1, MERSENNE61));
            prop_assert_eq!(Mersenne61.add(a1, b1), ((a1 as u128 + b1 as u128) % MERSENNE61 as u128) as u64);
            let (a2, b2) = (a % GOLDILOCKS, b % GOLDILOCKS);
            prop_assert_eq!(Goldilocks.mul(a2, b2), mul_mod(a2, b2, GOLDILOCKS));
            prop_assert_eq!(Goldilocks.add(a2, b2), ((a2 as u128 + b2 as u128) % GOLDILOCKS as u128) as u64);
            prop_assert_eq!(Goldilocks.sub(a2, b2), ((a2 as u128 + GOLDILOCKS as u128 - b2 as u128) % GOLDILOCKS as u128) as u64);
        }

        #[test]
        fn lazy_dot_matches_plain(xs in proptest::collection::vec((any::<u64>(), any::<u64>()), 0..200)) {
            let terms: Vec<(u64, u64)> = xs.iter().map(|&(a, b)| (a % MERSENNE61, b % MERSENNE61)).collect();
            let plain = terms.iter().fold(0, |acc, &(a, b)| Mersenne61.add(acc, Mersenne61.mul(a, b)));
            prop_assert_eq!(Mersenne61.dot(terms.iter().copied()), plain);
            let g: Vec<(u64, u64)> = xs.iter().map(|&(a, b)| (a % GOLDILOCKS, b % GOLDILOCKS)).collect();
            let plain = g.iter().fold(0, |acc, &(a, b)| Goldilocks.add(acc, Goldilocks.mul(a, b)));
            let vals: Vec<u64> = g.iter().map(|e| e.0).collect();
            let x: Vec<u64> = g.iter().map(|e| e.1).collect();
            let idx: Vec<u32> = (0..g.len() as u32).collect();
            prop_assert_eq!(Goldilocks.gather_dot(&vals, &idx, &x), plain);
        }
    }
}
