//! Witness forests: the break forest of a Permutation Walk trajectory and
//! the recursive forest of a Recursive Walk trajectory, and reconstruction
//! of the witness sequence from either.

use std::fmt::Write as _;

use crate::causality::{dependency_graph, CausalityGraph};
use crate::error::{Error, Result};
use crate::instance::FlawOrder;
use crate::walks::trace::TraceLog;
use crate::walks::WalkKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForestFlavor {
    Break,
    Recursive,
}

/// A rooted forest with flaw labels. Children are kept in insertion order,
/// but the forest is unordered: equality of forests should go through
/// [`WitnessForest::canonical`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessForest {
    flavor: ForestFlavor,
    labels: Vec<usize>,
    children: Vec<Vec<usize>>,
    roots: Vec<usize>,
}

impl WitnessForest {
    pub fn new(flavor: ForestFlavor) -> Self {
        Self {
            flavor,
            labels: Vec::new(),
            children: Vec::new(),
            roots: Vec::new(),
        }
    }

    pub fn flavor(&self) -> ForestFlavor {
        self.flavor
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn add_root(&mut self, label: usize) -> usize {
        self.labels.push(label);
        self.children.push(Vec::new());
        self.roots.push(self.labels.len() - 1);
        self.labels.len() - 1
    }

    pub fn add_child(&mut self, parent: usize, label: usize) -> usize {
        self.labels.push(label);
        self.children.push(Vec::new());
        let v = self.labels.len() - 1;
        self.children[parent].push(v);
        v
    }

    pub fn label(&self, v: usize) -> usize {
        self.labels[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn root_labels(&self) -> Vec<usize> {
        self.roots.iter().map(|&r| self.labels[r]).collect()
    }

    pub fn child_labels(&self, v: usize) -> Vec<usize> {
        self.children[v].iter().map(|&c| self.labels[c]).collect()
    }

    /// Same shape with every label mapped.
    pub fn map_labels(&self, mut f: impl FnMut(usize) -> usize) -> Self {
        let mut out = self.clone();
        for l in out.labels.iter_mut() {
            *l = f(*l);
        }
        out
    }

    /// Root labels are distinct, and so are the labels of each sibling set.
    pub fn check_distinct(&self) -> Result<()> {
        let distinct = |vs: &[usize]| {
            let mut ls: Vec<usize> = vs.iter().map(|&v| self.labels[v]).collect();
            ls.sort_unstable();
            ls.windows(2).all(|w| w[0] != w[1])
        };
        if !distinct(&self.roots) {
            return Err(Error::IllFormedForest("root labels repeat".into()));
        }
        for (v, cs) in self.children.iter().enumerate() {
            if !distinct(cs) {
                return Err(Error::IllFormedForest(format!(
                    "children of a vertex labelled {} repeat a label",
                    self.labels[v]
                )));
            }
        }
        Ok(())
    }

    fn sorted(&self, vs: &[usize], order: &FlawOrder) -> Vec<usize> {
        let mut v = vs.to_vec();
        v.sort_by_key(|&x| order.rank(self.labels[x]));
        v
    }

    /// Single-line encoding with trees and children sorted greatest first:
    /// `0(1,2(3)) 4`, or `-` for the empty forest.
    pub fn canonical(&self, order: &FlawOrder) -> String {
        fn node(f: &WitnessForest, v: usize, order: &FlawOrder, out: &mut String) {
            let _ = write!(out, "{}", f.labels[v]);
            let cs = f.sorted(&f.children[v], order);
            if !cs.is_empty() {
                out.push('(');
                for (k, &c) in cs.iter().enumerate() {
                    if k > 0 {
                        out.push(',');
                    }
                    node(f, c, order, out);
                }
                out.push(')');
            }
        }
        if self.roots.is_empty() {
            return "-".into();
        }
        let mut out = String::new();
        for (k, &r) in self.sorted(&self.roots, order).iter().enumerate() {
            if k > 0 {
                out.push(' ');
            }
            node(self, r, order, &mut out);
        }
        out
    }

    /// One vertex per line, indented two spaces per level.
    pub fn indented(&self, order: &FlawOrder, name: impl Fn(usize) -> String) -> String {
        let mut out = String::new();
        let mut stack: Vec<(usize, usize)> = self
            .sorted(&self.roots, order)
            .into_iter()
            .rev()
            .map(|r| (r, 0))
            .collect();
        while let Some((v, depth)) = stack.pop() {
            let _ = writeln!(out, "{}{}", "  ".repeat(depth), name(self.labels[v]));
            for c in self.sorted(&self.children[v], order).into_iter().rev() {
                stack.push((c, depth + 1));
            }
        }
        out
    }
}

fn wrong_kind(expected: WalkKind, found: WalkKind) -> Error {
    Error::WrongWalkKind {
        expected: expected.as_str(),
        found: found.as_str(),
    }
}

/// `B_0*, …, B_{t−1}*` of a Permutation Walk log, each greatest first.
///
/// `B_0 = U(σ_1)` and `B_i = U(σ_{i+1}) \ (U(σ_i) \ {w_i})`. A flaw of `B_i`
/// is dropped when, scanning steps `i+1..=t`, it disappears before it is
/// addressed, or is never addressed and never disappears.
pub fn break_sequence(log: &TraceLog) -> Result<Vec<Vec<usize>>> {
    if log.kind != WalkKind::Permutation {
        return Err(wrong_kind(WalkKind::Permutation, log.kind));
    }
    let u = log.present_sets();
    let w = log.witness();
    let t = w.len();
    let mut out = Vec::with_capacity(t);
    for i in 0..t {
        let b: Vec<usize> = if i == 0 {
            u[0].to_vec()
        } else {
            u[i].iter()
                .copied()
                .filter(|f| *f == w[i - 1] || !u[i - 1].contains(f))
                .collect()
        };
        // u[j] is U(σ_{j+1}); w[j-1] is w_j
        let mut kept: Vec<usize> = b
            .into_iter()
            .filter(|&f| {
                for j in i + 1..=t {
                    if w[j - 1] == f {
                        return true;
                    }
                    if !u[j].contains(&f) {
                        return false;
                    }
                }
                false
            })
            .collect();
        log.order().sort(&mut kept);
        out.push(kept);
    }
    Ok(out)
}

/// Lays down `B_0*` as roots, then for `i ≥ 1` gives the greatest-labelled
/// frontier vertex the children `B_i*`.
pub fn break_forest(sequence: &[Vec<usize>], order: &FlawOrder) -> Result<WitnessForest> {
    let mut forest = WitnessForest::new(ForestFlavor::Break);
    let Some((first, rest)) = sequence.split_first() else {
        return Ok(forest);
    };
    let mut frontier: Vec<usize> = first.iter().map(|&l| forest.add_root(l)).collect();
    for (i, b) in rest.iter().enumerate() {
        let pos = greatest_in(&forest, &frontier, order).ok_or_else(|| {
            Error::IllFormedForest(format!("no frontier vertex to expand at step {}", i + 1))
        })?;
        let v = frontier.swap_remove(pos);
        for &l in b {
            frontier.push(forest.add_child(v, l));
        }
    }
    Ok(forest)
}

fn greatest_in(forest: &WitnessForest, frontier: &[usize], order: &FlawOrder) -> Option<usize> {
    (0..frontier.len()).min_by_key(|&k| order.rank(forest.label(frontier[k])))
}

/// One root per top-level invocation and one child per nested invocation.
pub fn recursive_forest(log: &TraceLog) -> Result<WitnessForest> {
    if log.kind != WalkKind::Recursive {
        return Err(wrong_kind(WalkKind::Recursive, log.kind));
    }
    let mut forest = WitnessForest::new(ForestFlavor::Recursive);
    for (i, s) in log.steps.iter().enumerate() {
        match s.parent {
            None => forest.add_root(s.flaw),
            Some(p) if p < i => forest.add_child(p, s.flaw),
            Some(p) => {
                return Err(Error::IllFormedForest(format!(
                    "step {} names a later parent {}",
                    i + 1,
                    p + 1
                )))
            }
        };
    }
    Ok(forest)
}

/// The witness sequence encoded by a forest.
pub fn reconstruct_witness(forest: &WitnessForest, order: &FlawOrder) -> Result<Vec<usize>> {
    forest.check_distinct()?;
    let mut out = Vec::with_capacity(forest.len());
    match forest.flavor() {
        ForestFlavor::Break => {
            let mut frontier: Vec<usize> = forest.roots().to_vec();
            while let Some(pos) = greatest_in(forest, &frontier, order) {
                let v = frontier.swap_remove(pos);
                let label = forest.label(v);
                if frontier.iter().any(|&u| forest.label(u) == label) {
                    return Err(Error::IllFormedForest(format!(
                        "frontier holds label {label} twice"
                    )));
                }
                out.push(label);
                frontier.extend_from_slice(forest.children(v));
            }
        }
        ForestFlavor::Recursive => {
            let mut stack: Vec<usize> = forest.sorted(forest.roots(), order);
            stack.reverse();
            while let Some(v) = stack.pop() {
                out.push(forest.label(v));
                let mut cs = forest.sorted(forest.children(v), order);
                cs.reverse();
                stack.extend(cs);
            }
        }
    }
    Ok(out)
}

/// Recursive flavor: the root labels form an independent subset of `span`
/// and each vertex's child labels an independent subset of `Γ_R(label)`,
/// independence taken in `G(R)`.
pub fn check_recursive_structure(forest: &WitnessForest, span: &[usize], r: &CausalityGraph) -> Result<()> {
    forest.check_distinct()?;
    let g = dependency_graph(r);
    let roots = forest.root_labels();
    if !roots.iter().all(|l| span.contains(l)) || !g.is_independent(&roots) {
        return Err(Error::IllFormedForest(format!(
            "roots {roots:?} are not an independent subset of the span"
        )));
    }
    for v in 0..forest.len() {
        let cs = forest.child_labels(v);
        let label = forest.label(v);
        if !cs.iter().all(|&c| r.has_arc(label, c)) || !g.is_independent(&cs) {
            return Err(Error::IllFormedForest(format!(
                "children {cs:?} of {label} are not an independent subset of its neighbourhood"
            )));
        }
    }
    Ok(())
}

/// Break flavor: roots within `span`, children within `Γ_R(label)`.
pub fn check_break_structure(forest: &WitnessForest, span: &[usize], r: &CausalityGraph) -> Result<()> {
    forest.check_distinct()?;
    if !forest.root_labels().iter().all(|l| span.contains(l)) {
        return Err(Error::IllFormedForest("a root lies outside the span".into()));
    }
    for v in 0..forest.len() {
        let label = forest.label(v);
        if !forest.child_labels(v).iter().all(|&c| r.has_arc(label, c)) {
            return Err(Error::IllFormedForest(format!(
                "a child of {label} lies outside its neighbourhood"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::walks::{permutation_walk, Recording, WalkConfig};

    #[test]
    fn toy_b_break_sequence() {
        let toy = corpus::toy_b();
        let cfg = WalkConfig::new(1, 100).recording(Recording::Full);
        let log = TraceLog::from_trajectory(&toy, &permutation_walk(&toy, &cfg)).unwrap();
        let seq = break_sequence(&log).unwrap();
        assert_eq!(seq, vec![vec![0, 1], vec![]]);
        let forest = break_forest(&seq, &log.order()).unwrap();
        assert_eq!(forest.canonical(&log.order()), "0 1");
        assert_eq!(reconstruct_witness(&forest, &log.order()).unwrap(), vec![0, 1]);
    }

    #[test]
    fn break_forest_examples() {
        let order = FlawOrder::identity(2);
        let f = break_forest(&[vec![0], vec![1], vec![]], &order).unwrap();
        assert_eq!(f.canonical(&order), "0(1)");
        assert_eq!(reconstruct_witness(&f, &order).unwrap(), vec![0, 1]);
        assert!(break_forest(&[vec![], vec![1]], &order).is_err());
    }

    #[test]
    fn collateral_fix_is_dropped() {
        // f1 at 0 moves to 2, which also fixes f2; f2 is never addressed
        let mut b = crate::instance::ExplicitBuilder::new("collateral", 3);
        let f1 = b.flaw("f1", &[0]);
        b.flaw("f2", &[0]);
        b.arc(f1, 0, 2, 1.0);
        b.arc(1, 0, 1, 1.0);
        b.point_theta(0);
        let inst = b.build().unwrap();
        let cfg = WalkConfig::new(0, 10).recording(Recording::Full);
        let log = TraceLog::from_trajectory(&inst, &permutation_walk(&inst, &cfg)).unwrap();
        assert_eq!(break_sequence(&log).unwrap(), vec![vec![0]]);
    }

    #[test]
    fn recursive_examples() {
        let order = FlawOrder::identity(3);
        let mut f = WitnessForest::new(ForestFlavor::Recursive);
        let r = f.add_root(0);
        f.add_child(r, 1);
        assert_eq!(reconstruct_witness(&f, &order).unwrap(), vec![0, 1]);

        let mut g = WitnessForest::new(ForestFlavor::Recursive);
        let r = g.add_root(2);
        g.add_child(r, 1);
        g.add_child(r, 0);
        g.add_root(1);
        assert_eq!(g.canonical(&order), "1 2(0,1)");
        assert_eq!(reconstruct_witness(&g, &order).unwrap(), vec![1, 2, 0, 1]);
        assert_eq!(g.indented(&order, |l| format!("f{l}")), "f1\nf2\n  f0\n  f1\n");
    }

    #[test]
    fn wrong_walk_kind_is_rejected() {
        let toy = corpus::toy_b();
        let cfg = WalkConfig::new(1, 100).recording(Recording::Full);
        let log = TraceLog::from_trajectory(&toy, &permutation_walk(&toy, &cfg)).unwrap();
        assert!(matches!(recursive_forest(&log), Err(Error::WrongWalkKind { .. })));
    }

    #[test]
    fn repeated_siblings_are_ill_formed() {
        let mut f = WitnessForest::new(ForestFlavor::Recursive);
        f.add_root(0);
        f.add_root(0);
        assert!(reconstruct_witness(&f, &FlawOrder::identity(1)).is_err());
    }
}
