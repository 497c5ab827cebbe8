//! Bichromatic cycle flaws and cycle counting.

use std::cmp::Ordering;
use std::collections::HashSet;

use super::coloring::{ColorIndex, EdgeColoring};
use super::graph::SimpleGraph;
use crate::error::{Error, Result};

/// A cycle of edges. `cycle` is the traversal order, rotated to start at the
/// smallest edge id and oriented towards its smaller neighbour.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CycleFlaw {
    cycle: Vec<usize>,
    sorted: Vec<usize>,
}

impl CycleFlaw {
    /// `edges` in cyclic traversal order, length at least 3.
    pub fn from_cycle(edges: &[usize]) -> Self {
        let n = edges.len();
        debug_assert!(n >= 3);
        let start = (0..n).min_by_key(|&i| edges[i]).expect("non-empty cycle");
        let next = edges[(start + 1) % n];
        let prev = edges[(start + n - 1) % n];
        let cycle: Vec<usize> = if next < prev {
            (0..n).map(|k| edges[(start + k) % n]).collect()
        } else {
            (0..n).map(|k| edges[(start + n - k) % n]).collect()
        };
        let mut sorted = cycle.clone();
        sorted.sort_unstable();
        Self { cycle, sorted }
    }

    pub fn len(&self) -> usize {
        self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycle.is_empty()
    }

    pub fn edges(&self) -> &[usize] {
        &self.cycle
    }

    pub fn sorted_edges(&self) -> &[usize] {
        &self.sorted
    }

    pub fn contains(&self, e: usize) -> bool {
        self.sorted.binary_search(&e).is_ok()
    }

    pub fn meets(&self, other: &CycleFlaw) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.sorted.len() && j < other.sorted.len() {
            match self.sorted[i].cmp(&other.sorted[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => return true,
            }
        }
        false
    }

    /// The flaw order: shorter cycles, then lexicographically smaller sorted
    /// edge lists, are greater.
    pub fn pi_cmp(&self, other: &CycleFlaw) -> Ordering {
        (other.len(), &other.sorted).cmp(&(self.len(), &self.sorted))
    }

    /// Positions of `e₁, e₂` in `cycle`: the lexicographically least pair of
    /// cyclically consecutive edges, `e₁ < e₂`.
    fn designated_positions(&self) -> (usize, usize) {
        let n = self.cycle.len();
        (0..n)
            .map(|i| {
                let j = (i + 1) % n;
                if self.cycle[i] < self.cycle[j] {
                    (i, j)
                } else {
                    (j, i)
                }
            })
            .min_by_key(|&(i, j)| (self.cycle[i], self.cycle[j]))
            .expect("non-empty cycle")
    }

    /// `(e₁, e₂)`.
    pub fn designated(&self) -> (usize, usize) {
        let (i, j) = self.designated_positions();
        (self.cycle[i], self.cycle[j])
    }

    /// Edges recolored by the action, in order: start next to `e₂` and go
    /// around away from `e₁`.
    pub fn recolor_order(&self) -> Vec<usize> {
        let n = self.cycle.len();
        let (i, j) = self.designated_positions();
        let forward = (i + 1) % n == j;
        (1..n - 1)
            .map(|k| {
                let pos = if forward { (j + k) % n } else { (j + n - k) % n };
                self.cycle[pos]
            })
            .collect()
    }

    /// Text descriptor such as `cyc-0-3-5-9-11-12`.
    pub fn descriptor(&self) -> String {
        let mut s = String::from("cyc");
        for e in &self.sorted {
            s.push('-');
            s.push_str(&e.to_string());
        }
        s
    }
}

/// Follows the two-colored path leaving `e`'s second endpoint along the
/// color `b`, alternating with `e`'s color; returns the cycle if it closes.
fn trace_cycle(g: &SimpleGraph, idx: &ColorIndex, coloring: &EdgeColoring, e: usize, b: u32) -> Option<Vec<usize>> {
    let a = coloring.color(e)?;
    let (u, v) = g.edge(e);
    let mut path = vec![e];
    let mut cur = v;
    let mut want = b;
    loop {
        let f = idx.edge_at(cur, want)?;
        if f == e || path.len() > g.num_edges() {
            return None;
        }
        path.push(f);
        cur = g.other(f, cur);
        if cur == u {
            return Some(path);
        }
        want = if want == a { b } else { a };
    }
}

/// Bichromatic cycles of length at least 6, greatest first. With `restrict`,
/// only cycles meeting one of those edges are returned.
pub fn find_bichromatic_cycles(g: &SimpleGraph, coloring: &EdgeColoring, restrict: Option<&[usize]>) -> Vec<CycleFlaw> {
    let idx = ColorIndex::build(g, coloring);
    find_with_index(g, &idx, coloring, restrict)
}

pub(crate) fn find_with_index(
    g: &SimpleGraph,
    idx: &ColorIndex,
    coloring: &EdgeColoring,
    restrict: Option<&[usize]>,
) -> Vec<CycleFlaw> {
    let mut found: HashSet<CycleFlaw> = HashSet::new();
    let starts: Vec<usize> = match restrict {
        Some(edges) => edges.to_vec(),
        None => (0..g.num_edges()).collect(),
    };
    for e in starts {
        let Some(a) = coloring.color(e) else { continue };
        let (u, v) = g.edge(e);
        for &(_, f) in g.incident(v) {
            let Some(b) = coloring.color(f) else { continue };
            if b == a || idx.edge_at(u, b).is_none() {
                continue;
            }
            let Some(path) = trace_cycle(g, idx, coloring, e, b) else { continue };
            // in a full scan each cycle is reported from its smallest edge
            if restrict.is_none() && path.iter().any(|&x| x < e) {
                continue;
            }
            if path.len() >= 6 {
                found.insert(CycleFlaw::from_cycle(&path));
            }
        }
    }
    let mut out: Vec<CycleFlaw> = found.into_iter().collect();
    out.sort_by(|x, y| y.pi_cmp(x));
    out
}

/// Number of cycles of length `k` through edge `e`, by exhaustive path
/// search. Fails once more than `budget` search nodes are expanded.
pub fn count_cycles_through_edge(g: &SimpleGraph, e: usize, k: usize, budget: u64) -> Result<u64> {
    if k < 3 {
        return Err(Error::PreconditionFailed(format!("cycle length {k} below 3")));
    }
    let (u, v) = g.edge(e);
    let mut on_path = vec![false; g.num_vertices()];
    on_path[v] = true;
    let mut work = 0u64;
    let mut count = 0u64;
    // simple paths from v to u with k-1 edges that avoid e
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        g: &SimpleGraph,
        at: usize,
        target: usize,
        left: usize,
        on_path: &mut [bool],
        work: &mut u64,
        budget: u64,
        count: &mut u64,
    ) -> Result<()> {
        *work += 1;
        if *work > budget {
            return Err(Error::BudgetOverflow { limit: budget });
        }
        for &(w, _) in g.incident(at) {
            if left == 1 {
                if w == target {
                    *count += 1;
                }
                continue;
            }
            if w == target || on_path[w] {
                continue;
            }
            on_path[w] = true;
            dfs(g, w, target, left - 1, on_path, work, budget, count)?;
            on_path[w] = false;
        }
        Ok(())
    }
    dfs(g, v, u, k - 1, &mut on_path, &mut work, budget, &mut count)?;
    // the only length-1 path from v to u is e itself, excluded by k ≥ 3
    Ok(count)
}

/// `2(4dΔ)^{(k−2)/2}`.
pub fn kral_bound(d: usize, delta: usize, k: usize) -> f64 {
    2.0 * (4.0 * d as f64 * delta as f64).powf((k as f64 - 2.0) / 2.0)
}
