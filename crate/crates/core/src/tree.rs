//! The Poisson d-tree: every ridge spawns Poisson(c) child d-faces and every
//! d-face contributes d new child ridges.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::stats::{sample_poisson, MeanAccumulator};

#[derive(Clone, Copy, Debug)]
struct RidgeNode {
    depth: u32,
    first_cell: u32,
    cell_count: u32,
}

/// A Poisson d-tree truncated at a given ridge depth.
///
/// Ridges at depth `< depth` have their children sampled; ridges at depth
/// `depth` are truncated leaves whose offspring is unknown. Cells are stored
/// with their `d` child ridges contiguous.
#[derive(Clone, Debug)]
pub struct RootedTree {
    d: usize,
    depth: usize,
    ridges: Vec<RidgeNode>,
    /// First child ridge of each cell.
    cells: Vec<u32>,
}

/// Leaf value used at truncated ridges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Zero,
    #[default]
    One,
}

impl RootedTree {
    /// Samples a tree with its own generator.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, c: f64, d: usize, depth: usize) -> Self {
        let mut tree = Self {
            d,
            depth,
            ridges: vec![RidgeNode {
                depth: 0,
                first_cell: 0,
                cell_count: 0,
            }],
            cells: Vec::new(),
        };
        // breadth-first so that siblings are contiguous
        let mut next = 0usize;
        while next < tree.ridges.len() {
            let node = tree.ridges[next];
            if (node.depth as usize) < depth {
                let m = sample_poisson(rng, c);
                let first = tree.cells.len() as u32;
                for _ in 0..m {
                    let first_ridge = tree.ridges.len() as u32;
                    tree.cells.push(first_ridge);
                    for _ in 0..d {
                        tree.ridges.push(RidgeNode {
                            depth: node.depth + 1,
                            first_cell: 0,
                            cell_count: 0,
                        });
                    }
                }
                tree.ridges[next].first_cell = first;
                tree.ridges[next].cell_count = m;
            }
            next += 1;
        }
        tree
    }

    /// Builds a tree from explicit child counts listed in breadth-first ridge
    /// order (one count per non-truncated ridge).
    pub fn from_child_counts(d: usize, depth: usize, counts: &[u32]) -> Result<Self> {
        let mut it = counts.iter().copied();
        let mut tree = Self {
            d,
            depth,
            ridges: vec![RidgeNode {
                depth: 0,
                first_cell: 0,
                cell_count: 0,
            }],
            cells: Vec::new(),
        };
        let mut next = 0usize;
        while next < tree.ridges.len() {
            let node = tree.ridges[next];
            if (node.depth as usize) < depth {
                let m = it
                    .next()
                    .ok_or_else(|| Error::Config("too few child counts".into()))?;
                let first = tree.cells.len() as u32;
                for _ in 0..m {
                    tree.cells.push(tree.ridges.len() as u32);
                    for _ in 0..d {
                        tree.ridges.push(RidgeNode {
                            depth: node.depth + 1,
                            first_cell: 0,
                            cell_count: 0,
                        });
                    }
                }
                tree.ridges[next].first_cell = first;
                tree.ridges[next].cell_count = m;
            }
            next += 1;
        }
        if it.next().is_some() {
            return Err(Error::Config("too many child counts".into()));
        }
        Ok(tree)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn ridge_count(&self) -> usize {
        self.ridges.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Number of d-faces containing the root.
    pub fn root_children(&self) -> u32 {
        self.ridges[0].cell_count
    }

    fn is_truncated(&self, ridge: u32) -> bool {
        self.ridges[ridge as usize].depth as usize >= self.depth
    }

    fn child_cells(&self, ridge: u32) -> std::ops::Range<u32> {
        let node = self.ridges[ridge as usize];
        node.first_cell..node.first_cell + node.cell_count
    }

    fn cell_ridges(&self, cell: u32) -> std::ops::Range<u32> {
        let first = self.cells[cell as usize];
        first..first + self.d as u32
    }

    /// The tree cut at a smaller depth.
    pub fn pruned(&self, depth: usize) -> Self {
        let mut counts = Vec::new();
        for (i, node) in self.ridges.iter().enumerate() {
            if (node.depth as usize) < depth.min(self.depth) {
                counts.push(self.ridges[i].cell_count);
            }
        }
        Self::from_child_counts(self.d, depth.min(self.depth), &counts)
            .expect("counts come from a consistent tree")
    }

    /// Phase in which each cell dies in the root-forbidden collapse.
    ///
    /// A cell dies one phase after one of its child ridges loses all its
    /// children; truncated ridges are treated as never free.
    fn cell_death_phases(&self) -> Vec<u32> {
        let mut death = vec![u32::MAX; self.cells.len()];
        // children have larger indices than parents
        for cell in (0..self.cells.len() as u32).rev() {
            let mut best = u32::MAX;
            for ridge in self.cell_ridges(cell) {
                if self.is_truncated(ridge) {
                    continue;
                }
                let freed = self
                    .child_cells(ridge)
                    .map(|ch| death[ch as usize])
                    .max()
                    .unwrap_or(0);
                best = best.min(freed.saturating_add(1));
            }
            death[cell as usize] = best;
        }
        death
    }
}

/// A tree sampled from the `(seed, 0)` stream.
pub fn sample_tree(c: f64, d: usize, depth: usize, seed: u64) -> Result<RootedTree> {
    if !(c > 0.0) {
        return Err(Error::Config(format!("c = {c} must be positive")));
    }
    if d == 0 {
        return Err(Error::Config("dimension must be at least 1".into()));
    }
    Ok(RootedTree::sample(&mut substream(seed, &[0]), c, d, depth))
}

/// Root degree after `k` phases of collapse that never frees the root.
///
/// Exact when `k < depth`; at `k == depth` the truncated ridges count as
/// never free.
pub fn rooted_collapse_tree(tree: &RootedTree, k: usize) -> Result<u32> {
    if k > tree.depth {
        return Err(Error::Truncation {
            k,
            depth: tree.depth,
        });
    }
    let death = tree.cell_death_phases();
    Ok(tree
        .child_cells(0)
        .filter(|&cell| death[cell as usize] as usize > k)
        .count() as u32)
}

/// Root degree after `k` rooted phases on a fresh tree, sampling only the
/// parts of the tree the answer depends on.
pub fn sample_delta_k<R: Rng + ?Sized>(rng: &mut R, c: f64, d: usize, k: usize) -> u32 {
    let m = sample_poisson(rng, c);
    (0..m).filter(|_| !cell_dies_by(rng, c, d, k)).count() as u32
}

/// Whether a fresh cell is collapsed within `phases` phases.
fn cell_dies_by<R: Rng + ?Sized>(rng: &mut R, c: f64, d: usize, phases: usize) -> bool {
    if phases == 0 {
        return false;
    }
    (0..d).any(|_| children_all_die_by(rng, c, d, phases - 1))
}

/// Whether every child cell of a fresh ridge dies within `phases` phases.
fn children_all_die_by<R: Rng + ?Sized>(rng: &mut R, c: f64, d: usize, phases: usize) -> bool {
    let m = sample_poisson(rng, c);
    (0..m).all(|_| cell_dies_by(rng, c, d, phases))
}

/// `trials` independent draws of the root degree after `k` phases.
pub fn delta_k_samples(c: f64, d: usize, k: usize, trials: usize, seed: u64) -> Vec<u32> {
    (0..trials as u64)
        .into_par_iter()
        .map(|i| sample_delta_k(&mut substream(seed, &[1, i]), c, d, k))
        .collect()
}

/// Fraction of trials in which the root is bare after `k` phases.
pub fn collapse_probability_empirical(
    c: f64,
    d: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let zeros = delta_k_samples(c, d, k, trials, seed)
        .into_iter()
        .filter(|&x| x == 0)
        .count();
    Ok(zeros as f64 / trials as f64)
}

impl Boundary {
    fn value(self) -> f64 {
        match self {
            Boundary::Zero => 0.0,
            Boundary::One => 1.0,
        }
    }
}

/// The spectral atom recursion evaluated bottom-up.
///
/// A ridge with a child cell whose child ridges all have value 0 gets 0;
/// otherwise `1 / (1 + sum_j 1 / sum_r x_{j,r})`. Childless ridges get 1 and
/// truncated ridges get the boundary constant.
pub fn x_tree(tree: &RootedTree, boundary: Boundary) -> f64 {
    let mut x = vec![0f64; tree.ridges.len()];
    for ridge in (0..tree.ridges.len() as u32).rev() {
        x[ridge as usize] = if tree.is_truncated(ridge) {
            boundary.value()
        } else {
            let mut acc = 0.0;
            let mut zero = false;
            for cell in tree.child_cells(ridge) {
                let s: f64 = tree.cell_ridges(cell).map(|r| x[r as usize]).sum();
                if s == 0.0 {
                    zero = true;
                    break;
                }
                acc += 1.0 / s;
            }
            if zero {
                0.0
            } else {
                1.0 / (1.0 + acc)
            }
        };
    }
    x[0]
}

/// The resolvent recursion `h = 1 / (1 + sum_j 1/(i s + sum_r h_{j,r}))`.
pub fn h_recursion(tree: &RootedTree, s: f64, boundary: Complex64) -> Result<Complex64> {
    if s == 0.0 {
        return Err(Error::SingularParameter);
    }
    let is = Complex64::new(0.0, s);
    let one = Complex64::new(1.0, 0.0);
    let mut h = vec![Complex64::new(0.0, 0.0); tree.ridges.len()];
    for ridge in (0..tree.ridges.len() as u32).rev() {
        h[ridge as usize] = if tree.is_truncated(ridge) {
            boundary
        } else {
            let mut acc = Complex64::new(0.0, 0.0);
            for cell in tree.child_cells(ridge) {
                let sum: Complex64 = tree.cell_ridges(cell).map(|r| h[r as usize]).sum();
                acc += one / (is + sum);
            }
            one / (one + acc)
        };
    }
    Ok(h[0])
}

/// Population estimate of the law of the spectral atom on the infinite tree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PopulationEstimate {
    pub mean_x: f64,
    pub mean_x_stderr: f64,
    pub p_positive: f64,
    pub p_positive_stderr: f64,
}

/// Iterates the distributional recursion on a pool of samples.
///
/// The pool starts at all zeros, so the positive fraction follows
/// `t_0, t_1, ...` upward to the smallest fixed point. Each generation
/// builds a new pool from reads of the previous one.
pub fn population_dynamics_x(
    c: f64,
    d: usize,
    pool_size: usize,
    iterations: usize,
    seed: u64,
) -> Result<PopulationEstimate> {
    if pool_size == 0 || d == 0 {
        return Err(Error::Config("pool size and d must be positive".into()));
    }
    let mut pool = vec![0f64; pool_size];
    for generation in 0..iterations as u64 {
        const CHUNK: usize = 1024;
        let prev = &pool;
        let next: Vec<f64> = (0..pool_size.div_ceil(CHUNK))
            .into_par_iter()
            .flat_map_iter(|chunk| {
                let mut rng = substream(seed, &[2, generation, chunk as u64]);
                let len = CHUNK.min(pool_size - chunk * CHUNK);
                (0..len)
                    .map(|_| {
                        let m = sample_poisson(&mut rng, c);
                        let mut acc = 0.0;
                        for _ in 0..m {
                            let s: f64 = (0..d).map(|_| prev[rng.random_range(0..pool_size)]).sum();
                            if s == 0.0 {
                                return 0.0;
                            }
                            acc += 1.0 / s;
                        }
                        1.0 / (1.0 + acc)
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        pool = next;
    }
    let xs: MeanAccumulator = pool.iter().copied().collect();
    let pos: MeanAccumulator = pool.iter().map(|&x| (x > 0.0) as u8 as f64).collect();
    Ok(PopulationEstimate {
        mean_x: xs.mean(),
        mean_x_stderr: xs.std_err(),
        p_positive: pos.mean(),
        p_positive_stderr: pos.std_err(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::stats::two_sample_chi_square;

    #[test]
    fn depth_zero_is_the_root() {
        let t = sample_tree(3.0, 2, 0, 1).unwrap();
        assert_eq!((t.ridge_count(), t.cell_count()), (1, 0));
        assert!(matches!(
            rooted_collapse_tree(&t, 1),
            Err(Error::Truncation { k: 1, depth: 0 })
        ));
    }

    #[test]
    fn tiny_c_gives_bare_roots() {
        let bare = (0..1000)
            .filter(|&s| sample_tree(1e-6, 2, 3, s).unwrap().root_children() == 0)
            .count();
        assert!(bare >= 998);
    }

    #[test]
    fn root_children_mean() {
        let acc: MeanAccumulator = (0..100_000u64)
            .into_par_iter()
            .map(|s| sample_tree(3.0, 2, 1, s).unwrap().root_children() as f64)
            .collect::<Vec<_>>()
            .into_iter()
            .collect();
        assert!((acc.mean() - 3.0).abs() < 0.03, "{}", acc.mean());
    }

    #[test]
    fn delta_fixtures() {
        let bare = RootedTree::from_child_counts(2, 2, &[0]).unwrap();
        for k in 0..=2 {
            assert_eq!(rooted_collapse_tree(&bare, k).unwrap(), 0);
        }
        let t = sample_tree(3.0, 2, 1, 5).unwrap();
        assert_eq!(rooted_collapse_tree(&t, 0).unwrap(), t.root_children());
        // one cell whose two child ridges are childless: it dies in phase 1
        let t = RootedTree::from_child_counts(2, 2, &[1, 0, 0]).unwrap();
        assert_eq!(rooted_collapse_tree(&t, 0).unwrap(), 1);
        assert_eq!(rooted_collapse_tree(&t, 1).unwrap(), 0);
        // both child ridges of the root cell carry one cell over bare ridges:
        // those die in phase 1 and the root cell in phase 2
        let t = RootedTree::from_child_counts(2, 3, &[1, 1, 1, 0, 0, 0, 0]).unwrap();
        assert_eq!(rooted_collapse_tree(&t, 1).unwrap(), 1);
        assert_eq!(rooted_collapse_tree(&t, 2).unwrap(), 0);
    }

    #[test]
    fn locality_under_pruning() {
        for s in 0..200 {
            let t = sample_tree(2.5, 2, 7, s).unwrap();
            for k in 0..6 {
                let full = rooted_collapse_tree(&t, k).unwrap();
                assert_eq!(rooted_collapse_tree(&t.pruned(k + 1), k).unwrap(), full);
            }
        }
    }

    #[test]
    fn lazy_sampler_matches_explicit_tree() {
        let (c, d, k) = (3.0, 2, 3);
        let trials = 20_000u64;
        let mut a = vec![0u64; 40];
        let mut b = vec![0u64; 40];
        for i in 0..trials {
            let t = RootedTree::sample(&mut stream_rng(9, i), c, d, k + 1);
            a[rooted_collapse_tree(&t, k).unwrap() as usize] += 1;
            b[sample_delta_k(&mut stream_rng(10, i), c, d, k) as usize] += 1;
        }
        let test = two_sample_chi_square(&a, &b).unwrap();
        assert!(test.p_value > 0.001, "{test:?}");
    }

    #[test]
    fn collapse_probability_at_k0() {
        let p = collapse_probability_empirical(2.0, 2, 0, 40_000, 3).unwrap();
        let e = (-2.0f64).exp();
        let sd = (e * (1.0 - e) / 40_000.0).sqrt();
        assert!((p - e).abs() < 3.0 * sd);
    }

    #[test]
    fn x_fixtures() {
        let bare = RootedTree::from_child_counts(2, 1, &[0]).unwrap();
        assert_eq!(x_tree(&bare, Boundary::One), 1.0);
        assert_eq!(x_tree(&bare, Boundary::Zero), 1.0);
        let one = RootedTree::from_child_counts(3, 1, &[1]).unwrap();
        assert!((x_tree(&one, Boundary::One) - 0.75).abs() < 1e-15);
        assert_eq!(x_tree(&one, Boundary::Zero), 0.0);
    }

    #[test]
    fn boundary_brackets() {
        for s in 0..300 {
            let t = sample_tree(3.0, 2, 5, s).unwrap();
            let lo = x_tree(&t, Boundary::Zero);
            let hi = x_tree(&t, Boundary::One);
            assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
            assert!(lo <= hi + 1e-15);
        }
    }

    #[test]
    fn resolvent_fixtures() {
        let one = Complex64::new(1.0, 0.0);
        let bare = RootedTree::from_child_counts(2, 1, &[0]).unwrap();
        assert_eq!(h_recursion(&bare, 0.5, one).unwrap(), one);
        assert!(matches!(
            h_recursion(&bare, 0.0, one),
            Err(Error::SingularParameter)
        ));
        let single = RootedTree::from_child_counts(2, 1, &[1]).unwrap();
        for &s in &[1.0, 0.1, 1e-6] {
            let h = h_recursion(&single, s, one).unwrap();
            let expect = one / (one + one / (Complex64::new(2.0, s)));
            assert!((h - expect).norm() < 1e-14);
        }
        let h = h_recursion(&single, 1e-9, one).unwrap();
        assert!((h.re - 2.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn resolvent_approaches_atom() {
        let mut checked = 0;
        for seed in 0..200 {
            let t = sample_tree(2.0, 2, 4, seed).unwrap();
            let x = x_tree(&t, Boundary::One);
            let one = Complex64::new(1.0, 0.0);
            let errs: Vec<f64> = [1e-1, 1e-2, 1e-3]
                .iter()
                .map(|&s| (h_recursion(&t, s, one).unwrap() - x).norm())
                .collect();
            for &s in &[1e-1, 1e-2, 1e-3] {
                assert!(h_recursion(&t, s, one).unwrap().norm() <= 1.0 + 1e-12);
            }
            if errs[0] > 1e-9 {
                assert!(
                    errs[0] > errs[1] && errs[1] > errs[2],
                    "seed {seed}: {errs:?}"
                );
                checked += 1;
            }
        }
        assert!(checked > 20);
    }

    #[test]
    fn population_small_c() {
        let est = population_dynamics_x(1e-4, 2, 2000, 20, 1).unwrap();
        assert!(est.mean_x > 0.999 && est.p_positive > 0.999);
    }
}
