//! Simple undirected graphs, edge-list input, and degeneracy peeling.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// A simple graph. Edges are stored as `(u, v)` with `u < v`, sorted, and
/// identified by their position in that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    /// `(neighbour, edge id)` pairs per vertex.
    adj: Vec<Vec<(usize, usize)>>,
}

impl SimpleGraph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut norm: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidInstance(format!("edge {a}-{b} leaves 0..{n}")));
            }
            if a == b {
                return Err(Error::InvalidInstance(format!("loop at {a}")));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        if let Some(w) = norm.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidInstance(format!(
                "repeated edge {}-{}",
                w[0].0, w[0].1
            )));
        }
        let mut adj = vec![Vec::new(); n];
        for (e, &(u, v)) in norm.iter().enumerate() {
            adj[u].push((v, e));
            adj[v].push((u, e));
        }
        Ok(Self { n, edges: norm, adj })
    }

    /// Parses `u v` lines; `#` starts a comment. Vertices are 1-based unless
    /// some line mentions vertex 0.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut raw = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let toks: Vec<&str> = content.split_whitespace().collect();
            let parse = |t: &str| {
                t.parse::<usize>().map_err(|_| Error::Parse {
                    line: k + 1,
                    message: format!("bad vertex {t}"),
                })
            };
            if toks.len() != 2 {
                return Err(Error::Parse {
                    line: k + 1,
                    message: "expected `u v`".into(),
                });
            }
            raw.push((parse(toks[0])?, parse(toks[1])?));
        }
        let zero_based = raw.iter().any(|&(a, b)| a == 0 || b == 0);
        let shift = usize::from(!zero_based);
        let edges: Vec<(usize, usize)> = raw.iter().map(|&(a, b)| (a - shift, b - shift)).collect();
        let n = edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
        Self::new(n, &edges)
    }

    /// 0-based `u v` lines.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn incident(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        let (x, y) = if self.adj[a].len() <= self.adj[b].len() { (a, b) } else { (b, a) };
        self.adj[x].iter().find(|&&(w, _)| w == y).map(|&(_, e)| e)
    }

    /// The endpoint of `e` other than `v`.
    pub fn other(&self, e: usize, v: usize) -> usize {
        let (a, b) = self.edges[e];
        if a == v {
            b
        } else {
            a
        }
    }

    /// Edges sharing an endpoint.
    pub fn adjacent_edges(&self, e: usize, f: usize) -> bool {
        let (a, b) = self.edges[e];
        let (c, d) = self.edges[f];
        e != f && (a == c || a == d || b == c || b == d)
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Result of peeling: `d`, the removal order, and an orientation with every
/// out-degree at most `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Degeneracy {
    pub d: usize,
    pub order: Vec<usize>,
    /// Out-neighbours of each vertex.
    pub out: Vec<Vec<usize>>,
}

/// Repeatedly removes a vertex of minimum current degree and orients its
/// remaining edges away from it.
pub fn degeneracy_orient(g: &SimpleGraph) -> Degeneracy {
    let n = g.num_vertices();
    let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (deg[v], v)).collect();
    let mut removed = vec![false; n];
    let mut out = vec![Vec::new(); n];
    let mut order = Vec::with_capacity(n);
    let mut d = 0;
    while let Some((k, v)) = queue.pop_first() {
        d = d.max(k);
        removed[v] = true;
        order.push(v);
        for &(w, _) in g.incident(v) {
            if !removed[w] {
                out[v].push(w);
                queue.remove(&(deg[w], w));
                deg[w] -= 1;
                queue.insert((deg[w], w));
            }
        }
    }
    Degeneracy { d, order, out }
}

/// Random graph built by adding vertices one at a time, each joined to up to
/// `d` earlier vertices whose degree is still below `max_degree`. Reversing
/// the insertion order peels it, so its degeneracy is at most `d`.
pub fn random_degenerate<R: Rng + ?Sized>(n: usize, d: usize, max_degree: usize, rng: &mut R) -> SimpleGraph {
    let mut degree = vec![0usize; n];
    let mut edges = Vec::new();
    for v in 1..n {
        let mut candidates: Vec<usize> = (0..v).filter(|&u| degree[u] < max_degree).collect();
        candidates.shuffle(rng);
        let k = rng.gen_range(1..=d).min(candidates.len()).min(max_degree);
        for &u in candidates.iter().take(k) {
            edges.push((u, v));
            degree[u] += 1;
            degree[v] += 1;
        }
    }
    SimpleGraph::new(n, &edges).expect("generated edges are simple")
}
