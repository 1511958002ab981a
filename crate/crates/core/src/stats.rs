//! Summary statistics and goodness-of-fit tests.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Sample mean and standard error of a sequence of observations.
#[derive(Clone, Copy, Debug, Default)]
pub struct MeanAccumulator {
    count: u64,
    sum: KahanSum,
    sum_sq: KahanSum,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        self.sum.value() / self.count as f64
    }

    /// Unbiased sample standard deviation (0 for a single observation).
    pub fn std_dev(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let m = self.mean();
        ((self.sum_sq.value() - n * m * m) / (n - 1.0))
            .max(0.0)
            .sqrt()
    }

    pub fn std_err(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        self.std_dev() / (self.count as f64).sqrt()
    }
}

impl FromIterator<f64> for MeanAccumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::default();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

/// Outcome of a chi-square test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquareTest {
    pub fn rejects_at(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(statistic: f64, dof: usize) -> Result<f64> {
    let dist =
        ChiSquared::new(dof as f64).map_err(|e| Error::Numerics(format!("chi-square: {e}")))?;
    Ok(1.0 - dist.cdf(statistic))
}

/// Poisson probabilities `P(X = j)` for `j < len`.
pub fn poisson_pmf(lambda: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut p = (-lambda).exp();
    for j in 0..len {
        out.push(p);
        p *= lambda / (j + 1) as f64;
    }
    out
}

/// Chi-square test of a histogram (`counts[j]` = #observations equal to j)
/// against Poisson(`lambda`).
///
/// Bins are merged from the right until every expected count is at least 5;
/// the last bin collects the whole upper tail.
pub fn poisson_goodness_of_fit(counts: &[u64], lambda: f64) -> Result<ChiSquareTest> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Config("empty histogram".into()));
    }
    let total = total as f64;
    let mut len = counts.len().max(1);
    let pmf = poisson_pmf(lambda, len + 200);
    while len < pmf.len() && pmf[len] * total >= 5.0 {
        len += 1;
    }
    // bins j = 0..len-1 with the last one absorbing the tail
    let mut expected: Vec<f64> = pmf[..len].iter().map(|p| p * total).collect();
    let head: f64 = pmf[..len - 1].iter().sum();
    expected[len - 1] = (1.0 - head).max(0.0) * total;
    let mut observed: Vec<f64> = (0..len)
        .map(|j| counts.get(j).copied().unwrap_or(0) as f64)
        .collect();
    observed[len - 1] = counts.iter().skip(len - 1).sum::<u64>() as f64;

    let (mut obs, mut exp) = (Vec::new(), Vec::new());
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for j in 0..len {
        o_acc += observed[j];
        e_acc += expected[j];
        if e_acc >= 5.0 {
            obs.push(o_acc);
            exp.push(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match exp.last_mut() {
            Some(last) => {
                *last += e_acc;
                *obs.last_mut().unwrap() += o_acc;
            }
            None => {
                obs.push(o_acc);
                exp.push(e_acc);
            }
        }
    }
    if exp.len() < 2 {
        return Err(Error::Config(
            "too few observations for a chi-square test".into(),
        ));
    }
    let statistic: f64 = obs
        .iter()
        .zip(&exp)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = exp.len() - 1;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof)?,
    })
}

/// Chi-square homogeneity test between two histograms over the same bins.
pub fn two_sample_chi_square(a: &[u64], b: &[u64]) -> Result<ChiSquareTest> {
    if a.len() != b.len() {
        return Err(Error::Config("histograms differ in length".into()));
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let mut statistic = 0.0;
    let mut bins = 0;
    for (&x, &y) in a.iter().zip(b) {
        let pooled = (x + y) as f64;
        if pooled == 0.0 {
            continue;
        }
        let ea = pooled * na / (na + nb);
        let eb = pooled * nb / (na + nb);
        statistic += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
        bins += 1;
    }
    if bins < 2 {
        return Err(Error::Config("need at least two occupied bins".into()));
    }
    let dof = bins - 1;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof)?,
    })
}

/// Poisson variate; sequential-search inversion for `lambda <= 30`.
pub fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u32 {
    if lambda <= 0.0 {
        return 0;
    }
    if lambda > 30.0 {
        let dist = Poisson::new(lambda).expect("positive finite rate");
        return dist.sample(rng) as u32;
    }
    let u: f64 = rng.random();
    let mut k = 0u32;
    let mut p = (-lambda).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= lambda / k as f64;
        cdf += p;
        if p < 1e-300 && k as f64 > lambda {
            break;
        }
    }
    k
}
