//! Edge colorings, 4-available colors, and the validators.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::graph::SimpleGraph;

pub type Color = u32;

const NONE: u32 = u32::MAX;

/// A partial edge coloring indexed by edge id. Colors are `0..palette`; the
/// χ-greatest color is the largest.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgeColoring {
    colors: Vec<Option<Color>>,
    palette: u32,
}

impl EdgeColoring {
    pub fn uncolored(edges: usize, palette: u32) -> Self {
        Self {
            colors: vec![None; edges],
            palette,
        }
    }

    pub fn from_colors(colors: Vec<Option<Color>>, palette: u32) -> Self {
        debug_assert!(colors.iter().flatten().all(|&c| c < palette));
        Self { colors, palette }
    }

    pub fn color(&self, e: usize) -> Option<Color> {
        self.colors[e]
    }

    pub fn set(&mut self, e: usize, c: Option<Color>) {
        debug_assert!(c.is_none_or(|c| c < self.palette));
        self.colors[e] = c;
    }

    pub fn colors(&self) -> &[Option<Color>] {
        &self.colors
    }

    pub fn palette(&self) -> u32 {
        self.palette
    }

    pub fn is_complete(&self) -> bool {
        self.colors.iter().all(Option::is_some)
    }

    /// Number of distinct colors used.
    pub fn colors_used(&self) -> usize {
        let mut seen = vec![false; self.palette as usize];
        for c in self.colors.iter().flatten() {
            seen[*c as usize] = true;
        }
        seen.into_iter().filter(|&s| s).count()
    }

    /// `u v color` lines, 0-based vertices, `-` for an uncolored edge.
    pub fn to_text(&self, g: &SimpleGraph) -> String {
        let mut out = String::new();
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            match self.colors[e] {
                Some(c) => {
                    let _ = writeln!(out, "{u} {v} {c}");
                }
                None => {
                    let _ = writeln!(out, "{u} {v} -");
                }
            }
        }
        out
    }
}

/// Per-vertex `color -> edge` table for a proper coloring.
#[derive(Debug, Clone)]
pub struct ColorIndex {
    palette: usize,
    at: Vec<u32>,
}

impl ColorIndex {
    pub fn build(g: &SimpleGraph, coloring: &EdgeColoring) -> Self {
        let palette = coloring.palette() as usize;
        let mut idx = Self {
            palette,
            at: vec![NONE; g.num_vertices() * palette],
        };
        for (e, c) in coloring.colors().iter().enumerate() {
            if let Some(c) = *c {
                idx.insert(g, e, c);
            }
        }
        idx
    }

    pub fn edge_at(&self, v: usize, c: Color) -> Option<usize> {
        let e = self.at[v * self.palette + c as usize];
        (e != NONE).then_some(e as usize)
    }

    pub fn insert(&mut self, g: &SimpleGraph, e: usize, c: Color) {
        let (u, v) = g.edge(e);
        self.at[u * self.palette + c as usize] = e as u32;
        self.at[v * self.palette + c as usize] = e as u32;
    }

    pub fn remove(&mut self, g: &SimpleGraph, e: usize, c: Color) {
        let (u, v) = g.edge(e);
        for w in [u, v] {
            let slot = &mut self.at[w * self.palette + c as usize];
            if *slot == e as u32 {
                *slot = NONE;
            }
        }
    }
}

/// `Q = ⌈16√(dΔ)⌉`, computed in integers.
pub fn q_for(d: usize, delta: usize) -> u32 {
    let target = 256 * (d as u64) * (delta as u64);
    let mut q = (target as f64).sqrt() as u64;
    while q * q < target {
        q += 1;
    }
    while q > 0 && (q - 1) * (q - 1) >= target {
        q -= 1;
    }
    q as u32
}

/// `|P| = 2(Δ−1) + Q`.
pub fn palette_size(delta: usize, q: u32) -> u32 {
    2 * delta.saturating_sub(1) as u32 + q
}

/// The 4-available colors of `e` together with the number forbidden.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Availability {
    /// Ascending.
    pub available: Vec<Color>,
    pub forbidden: usize,
}

/// Colors of `e` forbidden by properness at either endpoint or by closing a
/// bichromatic 4-cycle `u v x y`. The current color of `e`, if any, is
/// ignored.
pub fn four_available_with(g: &SimpleGraph, idx: &ColorIndex, coloring: &EdgeColoring, e: usize) -> Availability {
    let palette = coloring.palette() as usize;
    let (u, v) = g.edge(e);
    let mut forbidden = vec![false; palette];
    for &(_, f) in g.incident(u).iter().chain(g.incident(v)) {
        if f != e {
            if let Some(c) = coloring.color(f) {
                forbidden[c as usize] = true;
            }
        }
    }
    for &(y, f) in g.incident(u) {
        if f == e {
            continue;
        }
        let Some(b) = coloring.color(f) else { continue };
        let Some(g2) = idx.edge_at(v, b) else { continue };
        if g2 == e {
            continue;
        }
        let x = g.other(g2, v);
        if x == y {
            continue;
        }
        if let Some(h) = g.edge_between(x, y) {
            if let Some(c) = coloring.color(h) {
                forbidden[c as usize] = true;
            }
        }
    }
    let available: Vec<Color> = (0..palette as u32).filter(|&c| !forbidden[c as usize]).collect();
    Availability {
        forbidden: palette - available.len(),
        available,
    }
}

pub fn four_available(g: &SimpleGraph, coloring: &EdgeColoring, e: usize) -> Vec<Color> {
    let idx = ColorIndex::build(g, coloring);
    four_available_with(g, &idx, coloring, e).available
}

/// Colors edges in id order, each with its largest 4-available color. Panics
/// if some edge has none, which cannot happen when `palette > 2(Δ−1)`.
pub fn greedy_initial(g: &SimpleGraph, palette: u32) -> EdgeColoring {
    greedy_initial_audited(g, palette).0
}

/// [`greedy_initial`] plus the largest forbidden count and the smallest
/// available count met along the way.
pub fn greedy_initial_audited(g: &SimpleGraph, palette: u32) -> (EdgeColoring, usize, usize) {
    let mut coloring = EdgeColoring::uncolored(g.num_edges(), palette);
    let mut idx = ColorIndex::build(g, &coloring);
    let mut max_forbidden = 0;
    let mut min_available = usize::MAX;
    for e in 0..g.num_edges() {
        let avail = four_available_with(g, &idx, &coloring, e);
        max_forbidden = max_forbidden.max(avail.forbidden);
        min_available = min_available.min(avail.available.len());
        let c = *avail
            .available
            .last()
            .expect("palette exceeds the forbidden-color bound");
        coloring.set(e, Some(c));
        idx.insert(g, e, c);
    }
    (coloring, max_forbidden, min_available)
}

/// No two colored edges at a vertex share a color.
pub fn is_proper(g: &SimpleGraph, coloring: &EdgeColoring) -> bool {
    (0..g.num_vertices()).all(|v| {
        let mut seen = std::collections::HashSet::new();
        g.incident(v)
            .iter()
            .filter_map(|&(_, e)| coloring.color(e))
            .all(|c| seen.insert(c))
    })
}

/// Brute force over all 4-cycles `u v x y`.
pub fn has_bichromatic_four_cycle(g: &SimpleGraph, coloring: &EdgeColoring) -> bool {
    for u in 0..g.num_vertices() {
        for &(v, e1) in g.incident(u) {
            for &(y, e4) in g.incident(u) {
                if y == v {
                    continue;
                }
                for &(x, e2) in g.incident(v) {
                    if x == u || x == y {
                        continue;
                    }
                    let Some(e3) = g.edge_between(x, y) else { continue };
                    let c = [e1, e2, e3, e4].map(|e| coloring.color(e));
                    if c.iter().all(Option::is_some) && c[0] == c[2] && c[1] == c[3] {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Proper with no bichromatic 4-cycle.
pub fn in_omega(g: &SimpleGraph, coloring: &EdgeColoring) -> bool {
    is_proper(g, coloring) && !has_bichromatic_four_cycle(g, coloring)
}

/// Every two-colored subgraph is a forest, checked by union-find per color
/// pair. Uncolored edges are ignored.
pub fn is_acyclic(g: &SimpleGraph, coloring: &EdgeColoring) -> bool {
    let mut by_color: HashMap<Color, Vec<usize>> = HashMap::new();
    for (e, c) in coloring.colors().iter().enumerate() {
        if let Some(c) = c {
            by_color.entry(*c).or_default().push(e);
        }
    }
    let mut classes: Vec<&Vec<usize>> = by_color.values().collect();
    classes.sort();
    let mut parent: Vec<usize> = (0..g.num_vertices()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..classes.len() {
        for j in i + 1..classes.len() {
            let mut touched = Vec::new();
            let mut cyclic = false;
            for &e in classes[i].iter().chain(classes[j]) {
                let (u, v) = g.edge(e);
                touched.push(u);
                touched.push(v);
                let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
                if ru == rv {
                    cyclic = true;
                    break;
                }
                parent[ru] = rv;
            }
            for w in touched {
                parent[w] = w;
            }
            if cyclic {
                return false;
            }
        }
    }
    true
}

/// Complete, proper and acyclic.
pub fn is_acyclic_edge_coloring(g: &SimpleGraph, coloring: &EdgeColoring) -> bool {
    coloring.is_complete() && is_proper(g, coloring) && is_acyclic(g, coloring)
}
