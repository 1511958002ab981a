//! Bipartite incidence between (d-1)-faces ("ridges") and d-faces, and the
//! phase-by-phase collapse process that mutates it.

use crate::combinatorics::{Binomials, FaceId};
use crate::complex::Complex;

/// Which free ridge claims a d-face when several are free at once.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TieBreak {
    #[default]
    SmallestFirst,
    LargestFirst,
}

/// Sentinel death phase for d-faces still present.
pub const NEVER: u32 = u32::MAX;

/// Ridge degrees, containment lists and collapse bookkeeping for one complex.
///
/// Ridges are addressed by their colex rank in `0..C(n,d)`; d-faces by their
/// position in the sorted face list of the input complex.
#[derive(Clone, Debug)]
pub struct IncidenceIndex {
    n: u32,
    d: usize,
    faces: Vec<FaceId>,
    facets: Vec<u64>,
    offsets: Vec<u32>,
    cofaces: Vec<u32>,
    degree: Vec<u32>,
    death: Vec<u32>,
    alive_count: usize,
    candidates: Vec<u64>,
    roots: Vec<u64>,
    tie_break: TieBreak,
    collapsed: Vec<(FaceId, FaceId)>,
    phases: usize,
}

/// Builds the incidence index of `y`.
pub fn build_incidence(y: &Complex) -> IncidenceIndex {
    IncidenceIndex::new(y)
}

impl IncidenceIndex {
    pub fn new(y: &Complex) -> Self {
        let d = y.dim();
        let n = y.n();
        let table: Binomials = y.binomials();
        let ridges = table.count(d) as usize;
        let faces = y.faces().to_vec();

        let mut facets = vec![0u64; faces.len() * (d + 1)];
        let mut verts = vec![0u32; d + 1];
        for (i, f) in faces.iter().enumerate() {
            table.unrank_into(f.0, &mut verts);
            table.facet_ranks_into(&verts, &mut facets[i * (d + 1)..(i + 1) * (d + 1)]);
        }

        let mut degree = vec![0u32; ridges];
        for &r in &facets {
            degree[r as usize] += 1;
        }
        let mut offsets = vec![0u32; ridges + 1];
        for r in 0..ridges {
            offsets[r + 1] = offsets[r] + degree[r];
        }
        let mut fill = offsets[..ridges].to_vec();
        let mut cofaces = vec![0u32; facets.len()];
        for (pos, &r) in facets.iter().enumerate() {
            let slot = &mut fill[r as usize];
            cofaces[*slot as usize] = (pos / (d + 1)) as u32;
            *slot += 1;
        }

        let candidates = (0..ridges as u64)
            .filter(|&r| degree[r as usize] == 1)
            .collect();
        let count = faces.len();
        Self {
            n,
            d,
            faces,
            facets,
            offsets,
            cofaces,
            degree,
            death: vec![NEVER; count],
            alive_count: count,
            candidates,
            roots: Vec::new(),
            tie_break: TieBreak::default(),
            collapsed: Vec::new(),
            phases: 0,
        }
    }

    /// Forbids the given ridges from ever being collapsed.
    pub fn set_roots(&mut self, roots: &[u64]) {
        self.roots = roots.to_vec();
        self.roots.sort_unstable();
        self.roots.dedup();
        self.candidates = (0..self.degree.len() as u64)
            .filter(|&r| self.degree[r as usize] == 1)
            .collect();
    }

    pub fn set_tie_break(&mut self, tie_break: TieBreak) {
        self.tie_break = tie_break;
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of d-faces in the input complex (alive or not).
    #[inline]
    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Number of ridges, `C(n,d)`.
    #[inline]
    pub fn ridge_count(&self) -> usize {
        self.degree.len()
    }

    #[inline]
    pub fn face(&self, i: u32) -> FaceId {
        self.faces[i as usize]
    }

    /// Ridge ranks of face `i`; entry `j` drops vertex `j`.
    #[inline]
    pub fn facets_of(&self, i: u32) -> &[u64] {
        let k = self.d + 1;
        &self.facets[i as usize * k..(i as usize + 1) * k]
    }

    /// Every input d-face containing the ridge, alive or not.
    #[inline]
    pub fn cofaces(&self, ridge: u64) -> &[u32] {
        let r = ridge as usize;
        &self.cofaces[self.offsets[r] as usize..self.offsets[r + 1] as usize]
    }

    pub fn alive_cofaces(&self, ridge: u64) -> impl Iterator<Item = u32> + '_ {
        self.cofaces(ridge)
            .iter()
            .copied()
            .filter(|&i| self.is_alive(i))
    }

    /// Current degree of the ridge.
    #[inline]
    pub fn degree(&self, ridge: u64) -> u32 {
        self.degree[ridge as usize]
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degree
    }

    #[inline]
    pub fn is_alive(&self, i: u32) -> bool {
        self.death[i as usize] == NEVER
    }

    /// Phase (1-based) in which face `i` was collapsed, or [`NEVER`].
    #[inline]
    pub fn death_phase(&self, i: u32) -> u32 {
        self.death[i as usize]
    }

    pub fn alive_count(&self) -> usize {
        self.alive_count
    }

    /// Phases that removed at least one d-face.
    pub fn phases_used(&self) -> usize {
        self.phases
    }

    pub fn collapsed_pairs(&self) -> &[(FaceId, FaceId)] {
        &self.collapsed
    }

    fn is_root(&self, ridge: u64) -> bool {
        !self.roots.is_empty() && self.roots.binary_search(&ridge).is_ok()
    }

    /// Ridges that are free right now (degree one, not a root).
    pub fn free_ridges(&self) -> Vec<u64> {
        (0..self.degree.len() as u64)
            .filter(|&r| self.degree[r as usize] == 1 && !self.is_root(r))
            .collect()
    }

    /// One collapse phase: every ridge free at phase start collapses with its
    /// d-face unless another free ridge already took that face.
    ///
    /// Returns the number of d-faces removed.
    pub fn collapse_phase(&mut self) -> usize {
        let mut free = std::mem::take(&mut self.candidates);
        free.retain(|&r| self.degree[r as usize] == 1 && !self.is_root(r));
        free.sort_unstable();
        free.dedup();
        if self.tie_break == TieBreak::LargestFirst {
            free.reverse();
        }
        let phase = self.phases as u32 + 1;
        let mut removed = 0;
        for &tau in &free {
            if self.degree[tau as usize] != 1 {
                continue;
            }
            let sigma = self
                .alive_cofaces(tau)
                .next()
                .expect("degree one implies an alive coface");
            self.death[sigma as usize] = phase;
            self.alive_count -= 1;
            removed += 1;
            self.collapsed
                .push((FaceId(tau), self.faces[sigma as usize]));
            let k = self.d + 1;
            for j in 0..k {
                let rho = self.facets[sigma as usize * k + j];
                let deg = &mut self.degree[rho as usize];
                *deg -= 1;
                if *deg == 1 {
                    self.candidates.push(rho);
                }
            }
        }
        if removed > 0 {
            self.phases += 1;
        }
        removed
    }

    /// Runs up to `k` phases (stopping early at a fixed point); returns the
    /// number of phases that removed something.
    pub fn collapse_phases(&mut self, k: usize) -> usize {
        let mut used = 0;
        for _ in 0..k {
            if self.collapse_phase() == 0 {
                break;
            }
            used += 1;
        }
        used
    }

    /// Collapses to the fixed point; returns the number of productive phases.
    pub fn collapse_all(&mut self) -> usize {
        self.collapse_phases(usize::MAX)
    }

    /// The current complex (alive d-faces).
    pub fn current(&self) -> Complex {
        Complex::from_sorted_unchecked(
            self.n,
            self.d,
            (0..self.faces.len() as u32)
                .filter(|&i| self.is_alive(i))
                .map(|i| self.faces[i as usize])
                .collect(),
        )
    }

    /// Ridges of positive degree (those kept when exposed ridges are removed).
    pub fn retained_ridges(&self) -> Vec<u64> {
        (0..self.degree.len() as u64)
            .filter(|&r| self.degree[r as usize] > 0)
            .collect()
    }

    /// `(f_{d-1}, f_d)` after removing exposed ridges.
    pub fn strip_exposed(&self) -> (u64, usize) {
        let ridges = self.degree.iter().filter(|&&g| g > 0).count() as u64;
        (ridges, self.alive_count)
    }
}
