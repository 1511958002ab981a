//! Cores, rooted collapse, gravel detection and the C-shadow.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::{Binomials, FaceId};
use crate::complex::Complex;
use crate::incidence::{IncidenceIndex, TieBreak};

/// Outcome of collapsing a complex to its core.
#[derive(Clone, Debug, Serialize)]
pub struct CoreResult {
    pub core: Complex,
    /// Ridges of positive degree in the core.
    pub core_dminus1_count: u64,
    pub phases_used: usize,
    pub collapsed_pairs: Vec<(FaceId, FaceId)>,
    pub is_collapsible: bool,
    pub is_gravel: bool,
    /// Vertex sets of the gravel components when `is_gravel` holds.
    pub gravel_components: Vec<Vec<u32>>,
}

impl CoreResult {
    pub fn f_d(&self) -> usize {
        self.core.f_d()
    }
}

/// Collapses to the fixed point and strips exposed ridges.
pub fn collapse_to_core(y: &Complex) -> CoreResult {
    collapse_to_core_with(y, TieBreak::SmallestFirst)
}

pub fn collapse_to_core_with(y: &Complex, tie_break: TieBreak) -> CoreResult {
    let mut idx = IncidenceIndex::new(y);
    idx.set_tie_break(tie_break);
    idx.collapse_all();
    core_result(&idx)
}

/// Packages a collapsed index as a [`CoreResult`].
pub fn core_result(idx: &IncidenceIndex) -> CoreResult {
    let core = idx.current();
    let (ridges, _) = idx.strip_exposed();
    let (is_gravel, gravel_components) = is_gravel(&core);
    CoreResult {
        is_collapsible: core.f_d() == 0,
        core,
        core_dminus1_count: ridges,
        phases_used: idx.phases_used(),
        collapsed_pairs: idx.collapsed_pairs().to_vec(),
        is_gravel,
        gravel_components,
    }
}

/// The complex after at most `k` collapse phases.
pub fn collapse_phases(y: &Complex, k: usize) -> Complex {
    let mut idx = IncidenceIndex::new(y);
    idx.collapse_phases(k);
    idx.current()
}

/// `(f_{d-1}, f_d)` of the complex after `k` phases with exposed ridges removed.
pub fn strip_exposed(y: &Complex, k: usize) -> (u64, usize) {
    let mut idx = IncidenceIndex::new(y);
    idx.collapse_phases(k);
    idx.strip_exposed()
}

/// Degree of `root` after `k` phases (or at the fixed point for `None`) of
/// the collapse that never uses `root` as a free face.
pub fn rooted_collapse(y: &Complex, root: FaceId, k: Option<usize>) -> u32 {
    let mut idx = IncidenceIndex::new(y);
    idx.set_roots(&[root.0]);
    match k {
        Some(k) => idx.collapse_phases(k),
        None => idx.collapse_all(),
    };
    idx.degree(root.0)
}

/// Answers many rooted-collapse queries on one complex.
///
/// Uses the unrooted death phase of every d-face: a face alive after `j`
/// unrooted phases is alive after `j` rooted phases, so only faces that the
/// unrooted process removed need the rooted recursion.
pub struct RootedCollapse {
    idx: IncidenceIndex,
}

impl RootedCollapse {
    pub fn new(y: &Complex) -> Self {
        let mut idx = IncidenceIndex::new(y);
        idx.collapse_all();
        Self { idx }
    }

    /// Degree of `root` after `k` rooted phases.
    pub fn degree(&self, root: FaceId, k: usize) -> u32 {
        let mut query = Query {
            idx: &self.idx,
            root: root.0,
            memo: HashMap::new(),
        };
        let k = k.min(u32::MAX as usize - 1) as u32;
        self.idx
            .cofaces(root.0)
            .iter()
            .filter(|&&s| query.alive(s, k))
            .count() as u32
    }
}

struct Query<'a> {
    idx: &'a IncidenceIndex,
    root: u64,
    memo: HashMap<(u32, u32), bool>,
}

impl Query<'_> {
    /// Whether face `s` survives `j` rooted phases.
    fn alive(&mut self, s: u32, j: u32) -> bool {
        if j == 0 || self.idx.death_phase(s) > j {
            return true;
        }
        if let Some(&v) = self.memo.get(&(s, j)) {
            return v;
        }
        let mut v = self.alive(s, j - 1);
        if v {
            for &rho in self.idx.facets_of(s) {
                if rho != self.root && self.degree_is_one(rho, j - 1) {
                    v = false;
                    break;
                }
            }
        }
        self.memo.insert((s, j), v);
        v
    }

    /// Whether `rho` has degree exactly one after `j` rooted phases.
    fn degree_is_one(&mut self, rho: u64, j: u32) -> bool {
        let cofaces = self.idx.cofaces(rho);
        let sure = cofaces
            .iter()
            .filter(|&&s| self.idx.death_phase(s) > j)
            .count();
        if sure >= 2 {
            return false;
        }
        let mut count = sure;
        for &s in cofaces {
            if self.idx.death_phase(s) > j {
                continue;
            }
            if self.alive(s, j) {
                count += 1;
                if count >= 2 {
                    return false;
                }
            }
        }
        count == 1
    }
}

/// Whether the complex is a vertex-disjoint union of boundaries of
/// (d+1)-simplices; also returns the vertex set of each component.
pub fn is_gravel(y: &Complex) -> (bool, Vec<Vec<u32>>) {
    let d = y.dim();
    let parts = vertex_components(y);
    if parts
        .iter()
        .all(|(v, faces)| is_simplex_boundary(d, v, *faces))
    {
        (true, parts.into_iter().map(|(v, _)| v).collect())
    } else {
        (false, Vec::new())
    }
}

/// Vertex sets of all boundaries of (d+1)-simplices contained in `y`,
/// whether or not they touch the rest of the complex. Sorted.
pub fn simplex_boundaries(y: &Complex) -> Vec<Vec<u32>> {
    let d = y.dim();
    let idx = IncidenceIndex::new(y);
    let table = y.binomials();
    let mut verts = vec![0u32; d + 1];
    let mut other = vec![0u32; d + 1];
    let mut simplex = vec![0u32; d + 2];
    let mut face = vec![0u32; d + 1];
    let mut found = Vec::new();
    // each simplex is found from the face missing its smallest vertex w,
    // paired with the faces through the ridge that face shares with w
    for i in 0..idx.face_count() as u32 {
        table.unrank_into(idx.face(i).0, &mut verts);
        let ridge = idx.facets_of(i)[0];
        for &j in idx.cofaces(ridge) {
            table.unrank_into(idx.face(j).0, &mut other);
            let w = other[0];
            if w >= verts[0] {
                continue;
            }
            simplex[0] = w;
            simplex[1..].copy_from_slice(&verts);
            let complete = (2..d + 2).all(|skip| {
                let mut k = 0;
                for (pos, &v) in simplex.iter().enumerate() {
                    if pos != skip {
                        face[k] = v;
                        k += 1;
                    }
                }
                y.contains(FaceId(table.rank_unchecked(&face)))
            });
            if complete {
                found.push(simplex.clone());
            }
        }
    }
    found.sort_unstable();
    found
}

// d+2 distinct d-faces on d+2 vertices are all of them
fn is_simplex_boundary(d: usize, vertices: &[u32], faces: usize) -> bool {
    vertices.len() == d + 2 && faces == d + 2
}

/// Components of the vertex-sharing relation on d-faces: vertex sets
/// (sorted) with their face counts, in order of smallest vertex.
fn vertex_components(y: &Complex) -> Vec<(Vec<u32>, usize)> {
    let d = y.dim();
    if y.f_d() == 0 {
        return Vec::new();
    }
    let table = y.binomials();
    let n = y.n() as usize;
    let mut parent: Vec<u32> = (0..n as u32).collect();
    fn find(parent: &mut [u32], mut v: u32) -> u32 {
        while parent[v as usize] != v {
            let up = parent[parent[v as usize] as usize];
            parent[v as usize] = up;
            v = up;
        }
        v
    }
    let mut verts = vec![0u32; d + 1];
    let mut touched = vec![false; n];
    for f in y.faces() {
        table.unrank_into(f.0, &mut verts);
        let a = find(&mut parent, verts[0]);
        touched[verts[0] as usize] = true;
        for &v in &verts[1..] {
            touched[v as usize] = true;
            let b = find(&mut parent, v);
            if a != b {
                parent[b as usize] = a;
            }
        }
    }
    let mut faces_per_root: HashMap<u32, usize> = HashMap::new();
    for f in y.faces() {
        table.unrank_into(f.0, &mut verts);
        *faces_per_root
            .entry(find(&mut parent, verts[0]))
            .or_default() += 1;
    }
    let mut groups: HashMap<u32, Vec<u32>> = HashMap::new();
    for v in 0..n as u32 {
        if touched[v as usize] {
            let r = find(&mut parent, v);
            groups.entry(r).or_default().push(v);
        }
    }
    let mut parts: Vec<(Vec<u32>, usize)> = groups
        .into_iter()
        .map(|(root, vertices)| (vertices, faces_per_root[&root]))
        .collect();
    parts.sort();
    parts
}

/// How the C-shadow is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ShadowMode {
    /// Local peeling around each candidate, reusing one core computation.
    #[default]
    Fast,
    /// Full core recomputation of `Y + sigma` for every candidate.
    Oracle,
}

/// d-faces outside `y` whose addition enlarges the core.
pub fn c_shadow(y: &Complex) -> Vec<FaceId> {
    c_shadow_with(y, ShadowMode::Fast)
}

pub fn c_shadow_with(y: &Complex, mode: ShadowMode) -> Vec<FaceId> {
    match mode {
        ShadowMode::Fast => ShadowPeeler::new(y).shadow(),
        ShadowMode::Oracle => {
            let core = collapse_to_core(y).core;
            candidates(y)
                .filter(|&s| {
                    let bigger = y.with_face(s).expect("valid rank");
                    collapse_to_core(&bigger).core != core
                })
                .collect()
        }
    }
}

fn candidates(y: &Complex) -> impl Iterator<Item = FaceId> + '_ {
    let total = y.d_face_count();
    let faces = y.faces();
    let mut next = 0usize;
    (0..total).map(FaceId).filter(move |f| {
        while next < faces.len() && faces[next] < *f {
            next += 1;
        }
        !(next < faces.len() && faces[next] == *f)
    })
}

/// Fast C-shadow membership: a candidate enlarges the core exactly when it
/// survives the collapse of `Y + sigma`. Core faces never collapse, so only
/// the non-core faces reachable through ridges outside the core can matter.
pub struct ShadowPeeler {
    d: usize,
    table: Binomials,
    idx: IncidenceIndex,
    core_degree: Vec<u32>,
    total: u64,
    faces: Vec<FaceId>,
    /// Cluster of each unanchored ridge: non-core faces joined through
    /// unanchored ridges. Clusters only meet along anchored ridges, so they
    /// peel independently.
    cluster: Vec<u32>,
    /// Whether an unanchored ridge keeps a coface when it alone is rooted.
    held_alone: Vec<bool>,
}

struct PeelScratch {
    face_mark: Vec<u32>,
    ridge_mark: Vec<u32>,
    ridge_count: Vec<u32>,
    region: Vec<u32>,
    stack: Vec<u64>,
    queue: Vec<u64>,
    stamp: u32,
}

impl ShadowPeeler {
    pub fn new(y: &Complex) -> Self {
        let mut idx = IncidenceIndex::new(y);
        idx.collapse_all();
        let core_degree = idx.degrees().to_vec();
        let ridges = idx.ridge_count();
        let mut peeler = Self {
            d: y.dim(),
            table: y.binomials(),
            core_degree,
            total: y.d_face_count(),
            faces: y.faces().to_vec(),
            idx,
            cluster: vec![u32::MAX; ridges],
            held_alone: vec![false; ridges],
        };
        peeler.label_clusters();
        let held: Vec<bool> = (0..ridges as u64)
            .into_par_iter()
            .map_init(
                || peeler.scratch(),
                |sc, rho| {
                    !peeler.anchored(rho)
                        && !peeler.idx.cofaces(rho).is_empty()
                        && peeler.survives(&[rho], sc)
                },
            )
            .collect();
        peeler.held_alone = held;
        peeler
    }

    fn label_clusters(&mut self) {
        let mut next = 0u32;
        let mut stack = Vec::new();
        for start in 0..self.idx.ridge_count() as u64 {
            if self.anchored(start)
                || self.cluster[start as usize] != u32::MAX
                || self.idx.cofaces(start).is_empty()
            {
                continue;
            }
            self.cluster[start as usize] = next;
            stack.push(start);
            while let Some(rho) = stack.pop() {
                for &s in self.idx.cofaces(rho) {
                    for &r in self.idx.facets_of(s) {
                        if !self.anchored(r) && self.cluster[r as usize] == u32::MAX {
                            self.cluster[r as usize] = next;
                            stack.push(r);
                        }
                    }
                }
            }
            next += 1;
        }
    }

    /// Decides most candidates from per-ridge data; `None` when two facets
    /// share a cluster and one of them is not held alone.
    fn quick_verdict(&self, facets: &[u64]) -> Option<bool> {
        let mut all_held = true;
        for (i, &rho) in facets.iter().enumerate() {
            if self.anchored(rho) {
                continue;
            }
            if self.idx.cofaces(rho).is_empty() {
                return Some(false);
            }
            if self.held_alone[rho as usize] {
                continue;
            }
            all_held = false;
            let k = self.cluster[rho as usize];
            let shared = facets
                .iter()
                .enumerate()
                .any(|(j, &r)| j != i && !self.anchored(r) && self.cluster[r as usize] == k);
            if !shared {
                return Some(false);
            }
        }
        if all_held {
            Some(true)
        } else {
            None
        }
    }

    fn scratch(&self) -> PeelScratch {
        PeelScratch {
            face_mark: vec![0; self.idx.face_count()],
            ridge_mark: vec![0; self.idx.ridge_count()],
            ridge_count: vec![0; self.idx.ridge_count()],
            region: Vec::new(),
            stack: Vec::new(),
            queue: Vec::new(),
            stamp: 0,
        }
    }

    /// Whether the ridge is contained in a core face.
    #[inline]
    fn anchored(&self, rho: u64) -> bool {
        self.core_degree[rho as usize] > 0
    }

    /// Whether adding the candidate with the given vertex list enlarges the core.
    fn survives(&self, facets: &[u64], sc: &mut PeelScratch) -> bool {
        // a free ridge outside the core kills the candidate at once
        let mut all_anchored = true;
        for &rho in facets {
            if !self.anchored(rho) {
                all_anchored = false;
                if self.idx.cofaces(rho).is_empty() {
                    return false;
                }
            }
        }
        if all_anchored {
            return true;
        }

        sc.stamp = sc.stamp.wrapping_add(1);
        if sc.stamp == 0 {
            sc.face_mark.fill(0);
            sc.ridge_mark.fill(0);
            sc.stamp = 1;
        }
        let stamp = sc.stamp;
        sc.region.clear();
        sc.stack.clear();
        sc.queue.clear();
        for &rho in facets {
            if !self.anchored(rho) && sc.ridge_mark[rho as usize] != stamp {
                sc.ridge_mark[rho as usize] = stamp;
                sc.ridge_count[rho as usize] = 1;
                sc.stack.push(rho);
            }
        }
        // Gather the faces whose collapse can depend on the candidate: the
        // cofaces of its facets, then anything sharing an unanchored ridge
        // with a gathered face and dying in a later phase. Every other
        // non-core face still collapses in its original order.
        while let Some(rho) = sc.stack.pop() {
            for &s in self.idx.cofaces(rho) {
                if sc.face_mark[s as usize] != stamp {
                    sc.face_mark[s as usize] = stamp;
                    sc.region.push(s);
                    sc.queue.push(s as u64);
                }
            }
        }
        while let Some(s) = sc.queue.pop() {
            let s = s as u32;
            let phase = self.idx.death_phase(s);
            for &r in self.idx.facets_of(s) {
                if self.anchored(r) {
                    continue;
                }
                if sc.ridge_mark[r as usize] != stamp {
                    sc.ridge_mark[r as usize] = stamp;
                    sc.ridge_count[r as usize] = 0;
                }
                for &t in self.idx.cofaces(r) {
                    if sc.face_mark[t as usize] != stamp && self.idx.death_phase(t) > phase {
                        sc.face_mark[t as usize] = stamp;
                        sc.region.push(t);
                        sc.queue.push(t as u64);
                    }
                }
            }
        }
        for &s in &sc.region {
            for &r in self.idx.facets_of(s) {
                if !self.anchored(r) {
                    sc.ridge_count[r as usize] += 1;
                }
            }
        }
        // peel; a region face is alive while its mark equals the stamp
        sc.queue.clear();
        for &rho in facets {
            if !self.anchored(rho) && sc.ridge_count[rho as usize] == 1 {
                return false;
            }
        }
        for &s in &sc.region {
            for &r in self.idx.facets_of(s) {
                if !self.anchored(r) && sc.ridge_count[r as usize] == 1 {
                    sc.queue.push(r);
                }
            }
        }
        let mut candidate_alive = true;
        while let Some(rho) = sc.queue.pop() {
            if sc.ridge_count[rho as usize] != 1 {
                continue;
            }
            // the unique live face on rho: the candidate or a region face
            let owner = self
                .idx
                .cofaces(rho)
                .iter()
                .copied()
                .find(|&s| sc.face_mark[s as usize] == stamp);
            let dying: &[u64] = match owner {
                Some(s) => {
                    sc.face_mark[s as usize] = 0;
                    self.idx.facets_of(s)
                }
                None => {
                    candidate_alive = false;
                    break;
                }
            };
            for &r in dying {
                if !self.anchored(r) {
                    sc.ridge_count[r as usize] -= 1;
                    if sc.ridge_count[r as usize] == 1 {
                        sc.queue.push(r);
                    }
                }
            }
        }
        candidate_alive
    }

    /// Whether adding the (absent) face enlarges the core.
    pub fn enlarges_core(&self, face: FaceId) -> bool {
        let mut sc = self.scratch();
        let mut verts = vec![0u32; self.d + 1];
        let mut facets = vec![0u64; self.d + 1];
        self.table.unrank_into(face.0, &mut verts);
        self.table.facet_ranks_into(&verts, &mut facets);
        self.survives(&facets, &mut sc)
    }

    /// All absent faces whose addition enlarges the core, in rank order.
    pub fn shadow(&self) -> Vec<FaceId> {
        const CHUNK: u64 = 1 << 16;
        let chunks = self.total.div_ceil(CHUNK);
        let parts: Vec<Vec<FaceId>> = (0..chunks)
            .into_par_iter()
            .map_init(
                || self.scratch(),
                |sc, chunk| {
                    let lo = chunk * CHUNK;
                    let hi = (lo + CHUNK).min(self.total);
                    let mut verts = vec![0u32; self.d + 1];
                    let mut facets = vec![0u64; self.d + 1];
                    let mut next = self.faces.partition_point(|f| f.0 < lo);
                    let mut out = Vec::new();
                    for r in lo..hi {
                        if next < self.faces.len() && self.faces[next].0 == r {
                            next += 1;
                            continue;
                        }
                        self.table.unrank_into(r, &mut verts);
                        self.table.facet_ranks_into(&verts, &mut facets);
                        let keep = match self.quick_verdict(&facets) {
                            Some(v) => v,
                            None => self.survives(&facets, sc),
                        };
                        if keep {
                            out.push(FaceId(r));
                        }
                    }
                    out
                },
            )
            .collect();
        parts.concat()
    }

    /// Size of the C-shadow.
    pub fn shadow_size(&self) -> usize {
        self.shadow().len()
    }
}

/// Phase in which each face dies in the unrooted collapse (`u32::MAX` for
/// core faces), in face order.
pub fn death_phases(y: &Complex) -> Vec<u32> {
    let mut idx = IncidenceIndex::new(y);
    idx.collapse_all();
    (0..idx.face_count() as u32)
        .map(|i| idx.death_phase(i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::face_rank;

    fn tetra(base: u32) -> Vec<[u32; 3]> {
        let v = [base, base + 1, base + 2, base + 3];
        vec![
            [v[0], v[1], v[2]],
            [v[0], v[1], v[3]],
            [v[0], v[2], v[3]],
            [v[1], v[2], v[3]],
        ]
    }

    #[test]
    fn gravel_fixtures() {
        let e = Complex::empty(5, 2).unwrap();
        assert_eq!(is_gravel(&e), (true, vec![]));
        let mut faces = tetra(0);
        faces.extend(tetra(4));
        let y = Complex::from_vertex_lists(8, 2, &faces).unwrap();
        let (g, comps) = is_gravel(&y);
        assert!(g);
        assert_eq!(comps, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);
        let y = Complex::from_vertex_lists(8, 2, &tetra(0)[..3]).unwrap();
        assert!(!is_gravel(&y).0);
    }

    #[test]
    fn simplex_boundaries_touching_the_rest() {
        // two tetrahedron boundaries sharing vertex 3
        let mut faces = tetra(0);
        faces.extend(tetra(3));
        let y = Complex::from_vertex_lists(7, 2, &faces).unwrap();
        assert!(!is_gravel(&y).0);
        assert_eq!(
            simplex_boundaries(&y),
            vec![vec![0, 1, 2, 3], vec![3, 4, 5, 6]]
        );
        let full = Complex::full(6, 2).unwrap();
        let mut brute: Vec<Vec<u32>> = (0..15u64)
            .map(|r| crate::combinatorics::face_unrank(FaceId(r), 6, 4).unwrap())
            .collect();
        brute.sort();
        assert_eq!(simplex_boundaries(&full), brute);
        assert!(simplex_boundaries(&Complex::full(6, 3).unwrap()).len() == 6);
    }

    #[test]
    fn core_of_gravel_is_itself() {
        let y = Complex::from_vertex_lists(6, 2, &tetra(1)).unwrap();
        let r = collapse_to_core(&y);
        assert_eq!(r.core, y);
        assert!(r.is_gravel && !r.is_collapsible);
        assert_eq!(r.core_dminus1_count, 6);
        assert_eq!(r.phases_used, 0);
    }

    #[test]
    fn phases_fixtures() {
        let y = Complex::from_vertex_lists(5, 2, &[[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 4]])
            .unwrap();
        assert_eq!(collapse_phases(&y, 0), y);
        assert_eq!(collapse_phases(&y, 1).f_d(), 1);
        assert_eq!(collapse_phases(&y, 50).f_d(), 0);
        assert_eq!(strip_exposed(&y, 50), (0, 0));
        let r = collapse_to_core(&y);
        assert!(r.is_collapsible && r.is_gravel);
        assert_eq!(r.phases_used, 2);
        assert_eq!(r.collapsed_pairs.len(), 4);
    }

    #[test]
    fn rooted_fixtures() {
        let y = Complex::from_vertex_lists(3, 2, &[[0, 1, 2]]).unwrap();
        let tau = face_rank(&[0, 1], 3).unwrap();
        assert_eq!(rooted_collapse(&y, tau, Some(1)), 0);
        assert_eq!(rooted_collapse(&y, tau, Some(0)), 1);
        let t = Complex::from_vertex_lists(4, 2, &tetra(0)).unwrap();
        for r in 0..6 {
            assert_eq!(rooted_collapse(&t, FaceId(r), None), 2);
            assert_eq!(RootedCollapse::new(&t).degree(FaceId(r), 5), 2);
        }
    }

    #[test]
    fn rooted_keeps_a_face_alive() {
        // rooting the end of a strip changes which faces die when
        let y = Complex::from_vertex_lists(5, 2, &[[0, 1, 2], [1, 2, 3], [2, 3, 4]]).unwrap();
        let tau = face_rank(&[0, 1], 5).unwrap();
        let fast = RootedCollapse::new(&y);
        for k in 0..5 {
            assert_eq!(fast.degree(tau, k), rooted_collapse(&y, tau, Some(k)));
        }
    }

    #[test]
    fn shadow_fixtures() {
        // boundary of a tetrahedron minus {1,2,3}
        let y = Complex::from_vertex_lists(4, 2, &tetra(0)[..3]).unwrap();
        let missing = face_rank(&[1, 2, 3], 4).unwrap();
        assert_eq!(c_shadow(&y), vec![missing]);
        assert_eq!(c_shadow_with(&y, ShadowMode::Oracle), vec![missing]);
        let e = Complex::empty(4, 2).unwrap();
        assert!(c_shadow(&e).is_empty());
    }
}
