//! d-complexes with a complete (d-1)-skeleton, stored as sorted d-face ranks.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::combinatorics::{checked_binomial, face_rank, face_unrank, Binomials, FaceId};
use crate::error::{Error, Result};

/// A d-complex on `n` vertices containing every face of dimension below `d`.
///
/// Only the d-faces are stored; `faces` is sorted and duplicate free.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawComplex")]
pub struct Complex {
    n: u32,
    d: usize,
    faces: Vec<FaceId>,
}

#[derive(Deserialize)]
struct RawComplex {
    n: u32,
    d: usize,
    faces: Vec<FaceId>,
}

impl TryFrom<RawComplex> for Complex {
    type Error = Error;
    fn try_from(raw: RawComplex) -> Result<Self> {
        Complex::new(raw.n, raw.d, raw.faces)
    }
}

impl Complex {
    /// Builds a complex from d-face ranks; ranks are sorted and deduplicated.
    pub fn new(n: u32, d: usize, mut faces: Vec<FaceId>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if (n as usize) < d + 1 {
            return Err(Error::Config(format!(
                "n = {n} vertices cannot carry a {d}-face"
            )));
        }
        let count = checked_binomial(n as u64, d as u64 + 1)?;
        faces.sort_unstable();
        faces.dedup();
        if let Some(&last) = faces.last() {
            if last.0 >= count {
                return Err(Error::RankOutOfRange {
                    rank: last.0,
                    n,
                    k: d + 1,
                    count,
                });
            }
        }
        Ok(Self { n, d, faces })
    }

    pub(crate) fn from_sorted_unchecked(n: u32, d: usize, faces: Vec<FaceId>) -> Self {
        debug_assert!(faces.windows(2).all(|w| w[0] < w[1]));
        Self { n, d, faces }
    }

    pub fn empty(n: u32, d: usize) -> Result<Self> {
        Self::new(n, d, Vec::new())
    }

    /// Every (d+1)-subset of the vertex set.
    pub fn full(n: u32, d: usize) -> Result<Self> {
        let count = checked_binomial(n as u64, d as u64 + 1)?;
        Self::new(n, d, (0..count).map(FaceId).collect())
    }

    /// Builds a complex from explicit vertex lists (each strictly increasing).
    pub fn from_vertex_lists<V: AsRef<[u32]>>(n: u32, d: usize, lists: &[V]) -> Result<Self> {
        let mut faces = Vec::with_capacity(lists.len());
        for list in lists {
            let list = list.as_ref();
            if list.len() != d + 1 {
                return Err(Error::MalformedFace {
                    vertices: list.to_vec(),
                    n,
                    reason: "wrong number of vertices for a d-face",
                });
            }
            faces.push(face_rank(list, n)?);
        }
        Self::new(n, d, faces)
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn faces(&self) -> &[FaceId] {
        &self.faces
    }

    /// Number of d-faces.
    #[inline]
    pub fn f_d(&self) -> usize {
        self.faces.len()
    }

    /// Number of (d-1)-faces, all present by construction.
    pub fn f_dminus1(&self) -> u64 {
        checked_binomial(self.n as u64, self.d as u64).expect("validated at construction")
    }

    /// Number of possible d-faces, `C(n, d+1)`.
    pub fn d_face_count(&self) -> u64 {
        checked_binomial(self.n as u64, self.d as u64 + 1).expect("validated at construction")
    }

    pub fn contains(&self, face: FaceId) -> bool {
        self.faces.binary_search(&face).is_ok()
    }

    /// Binomial table covering ranks of faces up to dimension d.
    pub fn binomials(&self) -> Binomials {
        Binomials::new(self.n, self.d + 1).expect("validated at construction")
    }

    /// The complex with one more d-face (unchanged if already present).
    pub fn with_face(&self, face: FaceId) -> Result<Self> {
        let mut faces = self.faces.clone();
        if let Err(pos) = faces.binary_search(&face) {
            faces.insert(pos, face);
        }
        Self::new(self.n, self.d, faces)
    }

    /// Subcomplex keeping the d-faces for which `keep` is true.
    pub fn filter(&self, mut keep: impl FnMut(FaceId) -> bool) -> Self {
        Self::from_sorted_unchecked(
            self.n,
            self.d,
            self.faces.iter().copied().filter(|&f| keep(f)).collect(),
        )
    }

    /// Vertex lists of the d-faces in rank order.
    pub fn vertex_lists(&self) -> Vec<Vec<u32>> {
        let table = self.binomials();
        self.faces
            .iter()
            .map(|f| {
                let mut v = vec![0u32; self.d + 1];
                table.unrank_into(f.0, &mut v);
                v
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Plain text: a header line `n d`, then one d-face per line as vertices.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.n, self.d)?;
        for v in self.vertex_lists() {
            let line: Vec<String> = v.iter().map(u32::to_string).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .map(|l| l.map_err(Error::from))
            .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header line".into()))??;
        let head = parse_numbers(&header)?;
        if head.len() != 2 {
            return Err(Error::Parse(format!("bad header {header:?}")));
        }
        let (n, d) = (head[0], head[1] as usize);
        let mut lists = Vec::new();
        for line in lines {
            lists.push(parse_numbers(&line?)?);
        }
        Self::from_vertex_lists(n, d, &lists)
    }
}

fn parse_numbers(line: &str) -> Result<Vec<u32>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<u32>()
                .map_err(|e| Error::Parse(format!("{t:?}: {e}")))
        })
        .collect()
}

/// The `d+1` codimension-one faces of `sigma` with orientation signs.
///
/// Entry `i` drops vertex `i` and carries sign `(-1)^i`.
pub fn boundary_faces(sigma: &[u32]) -> Result<Vec<(Vec<u32>, i8)>> {
    if sigma.len() < 2 || sigma.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::MalformedFace {
            vertices: sigma.to_vec(),
            n: sigma.last().map_or(0, |&v| v + 1),
            reason: "need at least two strictly increasing vertices",
        });
    }
    Ok((0..sigma.len())
        .map(|i| {
            let mut face = sigma.to_vec();
            face.remove(i);
            (face, if i % 2 == 0 { 1 } else { -1 })
        })
        .collect())
}

/// Vertex list of a d-face rank.
pub fn unrank_face(face: FaceId, n: u32, d: usize) -> Result<Vec<u32>> {
    face_unrank(face, n, d + 1)
}
