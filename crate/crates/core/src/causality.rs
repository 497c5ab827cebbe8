//! Causality digraphs on flaw indices, the undirected dependency graph they
//! induce, and enumeration of independent subsets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instance::{ExplicitInstance, Instance};
use crate::walks::Supergraph;

/// How an arc came to be in a causality digraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ArcProvenance {
    /// Found by scanning the action digraph.
    Witnessed,
    /// Supplied by the caller or certified by an application.
    Declared,
}

impl ArcProvenance {
    fn as_str(self) -> &'static str {
        match self {
            ArcProvenance::Witnessed => "witnessed",
            ArcProvenance::Declared => "declared",
        }
    }
}

/// A digraph on flaw indices `0..m`; `Γ(i)` is the out-neighbourhood of `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalityGraph {
    out: Vec<BTreeMap<usize, ArcProvenance>>,
}

impl CausalityGraph {
    pub fn new(flaws: usize) -> Self {
        Self {
            out: vec![BTreeMap::new(); flaws],
        }
    }

    pub fn num_flaws(&self) -> usize {
        self.out.len()
    }

    /// Adds `i → j`. A witnessed arc is never downgraded to declared.
    pub fn add_arc(&mut self, i: usize, j: usize, provenance: ArcProvenance) {
        let slot = self.out[i].entry(j).or_insert(provenance);
        *slot = (*slot).min(provenance);
    }

    pub fn has_arc(&self, i: usize, j: usize) -> bool {
        self.out[i].contains_key(&j)
    }

    pub fn provenance(&self, i: usize, j: usize) -> Option<ArcProvenance> {
        self.out[i].get(&j).copied()
    }

    /// `Γ(i)`, ascending.
    pub fn neighborhood(&self, i: usize) -> Vec<usize> {
        self.out[i].keys().copied().collect()
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, ArcProvenance)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(i, m)| m.iter().map(move |(&j, &p)| (i, j, p)))
    }

    pub fn num_arcs(&self) -> usize {
        self.out.iter().map(BTreeMap::len).sum()
    }

    /// True iff every arc of `other` is an arc of `self`.
    pub fn contains_graph(&self, other: &CausalityGraph) -> bool {
        other.num_flaws() <= self.num_flaws() && other.arcs().all(|(i, j, _)| self.has_arc(i, j))
    }

    /// Arcs of `other` missing from `self`.
    pub fn missing_arcs(&self, other: &CausalityGraph) -> Vec<(usize, usize)> {
        other
            .arcs()
            .filter(|&(i, j, _)| i >= self.num_flaws() || !self.has_arc(i, j))
            .map(|(i, j, _)| (i, j))
            .collect()
    }

    /// Union with another digraph on the same flaws.
    pub fn union(&self, other: &CausalityGraph) -> CausalityGraph {
        let mut g = self.clone();
        for (i, j, p) in other.arcs() {
            g.add_arc(i, j, p);
        }
        g
    }

    /// Checks a supplied supergraph against the exact causality digraph of an
    /// explicit instance and returns it with scanned arcs marked witnessed.
    pub fn certify_supergraph(&self, inst: &ExplicitInstance) -> Result<CausalityGraph> {
        let exact = build_causality(inst);
        let missing = self.missing_arcs(&exact);
        if !missing.is_empty() {
            let shown: Vec<String> = missing
                .iter()
                .map(|&(i, j)| format!("{}->{}", inst.flaw_name(i), inst.flaw_name(j)))
                .collect();
            return Err(Error::PreconditionFailed(format!(
                "supergraph misses causality arcs {}",
                shown.join(", ")
            )));
        }
        Ok(self.union(&exact))
    }

    pub fn dependency_graph(&self) -> DependencyGraph {
        dependency_graph(self)
    }

    /// One arc per line: `from to provenance`.
    pub fn to_edge_list(&self, names: &[String]) -> String {
        let mut out = String::new();
        for (i, j, p) in self.arcs() {
            let _ = writeln!(out, "{} {} {}", names[i], names[j], p.as_str());
        }
        out
    }

    /// Parses `from to [provenance]` lines; arcs default to declared.
    pub fn parse_edge_list(text: &str, names: &[String]) -> Result<CausalityGraph> {
        let mut g = CausalityGraph::new(names.len());
        let lookup = |line: usize, tok: &str| {
            names.iter().position(|n| n == tok).ok_or_else(|| Error::Parse {
                line,
                message: format!("unknown flaw {tok}"),
            })
        };
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let toks: Vec<&str> = content.split_whitespace().collect();
            let prov = match toks.get(2).copied() {
                None | Some("declared") => ArcProvenance::Declared,
                Some("witnessed") => ArcProvenance::Witnessed,
                Some(other) => {
                    return Err(Error::Parse {
                        line,
                        message: format!("unknown provenance {other}"),
                    })
                }
            };
            if toks.len() < 2 || toks.len() > 3 {
                return Err(Error::Parse {
                    line,
                    message: "expected: from to [provenance]".into(),
                });
            }
            g.add_arc(lookup(line, toks[0])?, lookup(line, toks[1])?, prov);
        }
        Ok(g)
    }
}

/// Exact potential causality digraph by scanning every labelled arc:
/// `i → j` iff some arc `σ →_i τ` has `τ ∈ f_j` and (`i = j` or `σ ∉ f_j`).
pub fn build_causality(inst: &ExplicitInstance) -> CausalityGraph {
    let mut g = CausalityGraph::new(inst.num_flaws());
    for (i, s, t, _) in inst.arcs() {
        for &j in inst.present(t) {
            if i == j || !inst.contains(j, s) {
                g.add_arc(i, j, ArcProvenance::Witnessed);
            }
        }
    }
    g
}

/// Undirected graph on flaw indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    adj: Vec<BTreeSet<usize>>,
}

impl DependencyGraph {
    pub fn new(flaws: usize) -> Self {
        Self {
            adj: vec![BTreeSet::new(); flaws],
        }
    }

    pub fn num_flaws(&self) -> usize {
        self.adj.len()
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a != b {
            self.adj[a].insert(b);
            self.adj[b].insert(a);
        }
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    pub fn neighbors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[a].iter().copied()
    }

    /// Edges `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(a, ns)| ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect()
    }

    pub fn is_independent(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(k, &a)| {
            set[k + 1..].iter().all(|&b| a != b && !self.adjacent(a, b))
        })
    }

    pub fn to_edge_list(&self, names: &[String]) -> String {
        let mut out = String::new();
        for (a, b) in self.edges() {
            let _ = writeln!(out, "{} {}", names[a], names[b]);
        }
        out
    }
}

/// `G(R)`: `{f, g}` is an edge iff both `f → g` and `g → f` are in `R`.
pub fn dependency_graph(r: &CausalityGraph) -> DependencyGraph {
    let mut g = DependencyGraph::new(r.num_flaws());
    for (i, j, _) in r.arcs() {
        if i < j && r.has_arc(j, i) {
            g.add_edge(i, j);
        }
    }
    g
}

/// Lazily yields every independent subset of `set` in `graph`, including the
/// empty set, each exactly once. Elements keep the order they have in `set`.
pub fn independent_subsets<'g>(set: &[usize], graph: &'g DependencyGraph) -> IndependentSubsets<'g> {
    let mut ground: Vec<usize> = Vec::with_capacity(set.len());
    for &f in set {
        if !ground.contains(&f) {
            ground.push(f);
        }
    }
    IndependentSubsets {
        ground,
        graph,
        stack: vec![(Vec::new(), 0)],
    }
}

pub struct IndependentSubsets<'g> {
    ground: Vec<usize>,
    graph: &'g DependencyGraph,
    stack: Vec<(Vec<usize>, usize)>,
}

impl Iterator for IndependentSubsets<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let (chosen, from) = self.stack.pop()?;
        for k in (from..self.ground.len()).rev() {
            let candidate = self.ground[k];
            if chosen.iter().all(|&c| !self.graph.adjacent(c, candidate)) {
                let mut extended = chosen.clone();
                extended.push(candidate);
                self.stack.push((extended, k + 1));
            }
        }
        Some(chosen)
    }
}

impl Supergraph<ExplicitInstance> for CausalityGraph {
    fn present_neighbors(&self, inst: &ExplicitInstance, state: &usize, flaw: &usize) -> Vec<usize> {
        inst.present_flaws(state)
            .into_iter()
            .filter(|g| self.has_arc(*flaw, *g))
            .collect()
    }
}
