//! Random complexes: the binomial model, uniform m-face model and the
//! one-face-at-a-time evolution order.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::combinatorics::{checked_binomial, FaceId};
use crate::complex::Complex;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Binomial,
    UniformM,
    Evolution,
}

/// Face probability given directly or as `c` with `p = c/n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    P(f64),
    C(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub n: u32,
    pub d: usize,
    pub density: Density,
    pub seed: u64,
    pub model: Model,
}

impl SampleConfig {
    pub fn binomial_c(n: u32, d: usize, c: f64, seed: u64) -> Self {
        Self {
            n,
            d,
            density: Density::C(c),
            seed,
            model: Model::Binomial,
        }
    }

    pub fn with_model(mut self, model: Model) -> Self {
        self.model = model;
        self
    }

    /// Face probability.
    pub fn p(&self) -> f64 {
        match self.density {
            Density::P(p) => p,
            Density::C(c) => c / self.n as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if self.n as usize <= self.d + 1 {
            return Err(Error::Config(format!(
                "need n > d + 1, got n = {}, d = {}",
                self.n, self.d
            )));
        }
        if let Density::C(c) = self.density {
            if !(c >= 0.0) {
                return Err(Error::Config(format!("c = {c} must be nonnegative")));
            }
        }
        let p = self.p();
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("p = {p} outside [0, 1]")));
        }
        checked_binomial(self.n as u64, self.d as u64 + 1)?;
        Ok(())
    }

    fn face_total(&self) -> u64 {
        checked_binomial(self.n as u64, self.d as u64 + 1).expect("validated")
    }

    fn rng(&self) -> ChaCha8Rng {
        stream_rng(self.seed, 0)
    }
}

/// Each d-face independently with probability `p`.
///
/// Runs in time proportional to the output by skipping geometric gaps in
/// rank order.
pub fn sample_binomial(cfg: &SampleConfig) -> Result<Complex> {
    cfg.validate()?;
    let total = cfg.face_total();
    let p = cfg.p();
    let faces = if p == 0.0 {
        Vec::new()
    } else if p == 1.0 {
        (0..total).map(FaceId).collect()
    } else {
        let gap = Geometric::new(p).map_err(|e| Error::Config(e.to_string()))?;
        let mut rng = cfg.rng();
        let mut faces = Vec::with_capacity((p * total as f64 * 1.1) as usize + 16);
        let mut pos = gap.sample(&mut rng);
        while pos < total {
            faces.push(FaceId(pos));
            pos = pos.saturating_add(1).saturating_add(gap.sample(&mut rng));
        }
        faces
    };
    Ok(Complex::from_sorted_unchecked(cfg.n, cfg.d, faces))
}

/// Lazily generated uniform permutation of all d-face ranks.
///
/// A sparse Fisher-Yates shuffle: only displaced positions are stored.
#[derive(Clone, Debug)]
pub struct EvolutionStream {
    total: u64,
    pos: u64,
    displaced: HashMap<u64, u64>,
    rng: ChaCha8Rng,
}

impl Iterator for EvolutionStream {
    type Item = FaceId;

    fn next(&mut self) -> Option<FaceId> {
        if self.pos == self.total {
            return None;
        }
        let j = self.rng.random_range(self.pos..self.total);
        let at = |m: &HashMap<u64, u64>, k: u64| m.get(&k).copied().unwrap_or(k);
        let chosen = at(&self.displaced, j);
        let here = at(&self.displaced, self.pos);
        self.displaced.remove(&self.pos);
        if j != self.pos {
            self.displaced.insert(j, here);
        }
        self.pos += 1;
        Some(FaceId(chosen))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.pos) as usize;
        (left, Some(left))
    }
}

/// Uniformly random order of all `C(n, d+1)` d-faces.
pub fn evolution_stream(cfg: &SampleConfig) -> Result<EvolutionStream> {
    cfg.validate()?;
    Ok(EvolutionStream {
        total: cfg.face_total(),
        pos: 0,
        displaced: HashMap::new(),
        rng: cfg.rng(),
    })
}

/// Exactly `m` distinct d-faces, uniformly; the first `m` faces of the
/// evolution stream with the same seed.
pub fn sample_uniform_m(cfg: &SampleConfig, m: u64) -> Result<Complex> {
    cfg.validate()?;
    let total = cfg.face_total();
    if m > total {
        return Err(Error::Config(format!(
            "m = {m} exceeds C(n, d+1) = {total}"
        )));
    }
    let faces: Vec<FaceId> = evolution_stream(cfg)?.take(m as usize).collect();
    Complex::new(cfg.n, cfg.d, faces)
}

/// Dispatches on `cfg.model`; `m` is required for the fixed-size models.
pub fn sample(cfg: &SampleConfig, m: Option<u64>) -> Result<Complex> {
    match cfg.model {
        Model::Binomial => sample_binomial(cfg),
        Model::UniformM | Model::Evolution => {
            let m = m.ok_or_else(|| Error::Config("model needs a face count m".into()))?;
            sample_uniform_m(cfg, m)
        }
    }
}
