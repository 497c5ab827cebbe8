//! Convergence conditions: the per-flaw quantities ζ, the horizon `T₀`, the
//! step bound, the static local lemma check, and the branching process used
//! to weigh witness forests.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use rand::Rng;

use crate::causality::{build_causality, independent_subsets, DependencyGraph};
use crate::charges::{ChargeMode, ChargeTable};
use crate::error::{Error, Result};
use crate::forests::{ForestFlavor, WitnessForest};
use crate::instance::{ExplicitInstance, TOLERANCE};
use crate::walks::WalkKind;

/// Positive weights ψ, one per flaw.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiAssignment {
    values: Vec<f64>,
}

impl PsiAssignment {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::PreconditionFailed(format!(
                "psi must be positive and finite, got {bad}"
            )));
        }
        Ok(Self { values })
    }

    pub fn constant(flaws: usize, psi: f64) -> Result<Self> {
        Self::new(vec![psi; flaws])
    }

    pub fn get(&self, flaw: usize) -> f64 {
        self.values[flaw]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Q(S) = ∏_{g∈S} ψ_g`, with `Q(∅) = 1`.
    pub fn weight(&self, set: &[usize]) -> f64 {
        set.iter().map(|&g| self.values[g]).product()
    }

    /// `x_i = ψ_i / (1 + ψ_i)`.
    pub fn inclusion_probability(&self, flaw: usize) -> f64 {
        let p = self.values[flaw];
        p / (1.0 + p)
    }
}

/// `ζ_i = (γ_i/ψ_i) ∏_{j∈Γ(i)} (1 + ψ_j)`.
pub fn zeta_simple(gamma: f64, psi: &PsiAssignment, flaw: usize, neighborhood: &[usize]) -> f64 {
    gamma / psi.get(flaw) * neighborhood.iter().map(|&j| 1.0 + psi.get(j)).product::<f64>()
}

/// `ζ_i = (γ_i/ψ_i) Σ_{S∈Ind(Γ_R(i))} ∏_{j∈S} ψ_j`.
pub fn zeta_cluster(
    gamma: f64,
    psi: &PsiAssignment,
    flaw: usize,
    neighborhood: &[usize],
    graph: &DependencyGraph,
) -> f64 {
    let sum: f64 = independent_subsets(neighborhood, graph)
        .map(|s| psi.weight(&s))
        .sum();
    gamma / psi.get(flaw) * sum
}

/// A family of flaw sets: the root family or a list family of the
/// branching process.
#[derive(Debug, Clone, PartialEq)]
pub enum SetFamily {
    /// `2^S`.
    AllSubsets(Vec<usize>),
    /// `Ind(S)` in the given graph.
    Independent(Vec<usize>, DependencyGraph),
    /// A caller-supplied list of sets.
    Explicit(Vec<Vec<usize>>),
}

impl SetFamily {
    /// Flaws that may appear in some member.
    pub fn ground(&self) -> Vec<usize> {
        match self {
            SetFamily::AllSubsets(s) | SetFamily::Independent(s, _) => {
                let mut v = s.clone();
                v.sort_unstable();
                v.dedup();
                v
            }
            SetFamily::Explicit(sets) => {
                let mut v: Vec<usize> = sets.iter().flatten().copied().collect();
                v.sort_unstable();
                v.dedup();
                v
            }
        }
    }

    pub fn contains(&self, set: &[usize]) -> bool {
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        let distinct = sorted.windows(2).all(|w| w[0] != w[1]);
        match self {
            SetFamily::AllSubsets(s) => distinct && sorted.iter().all(|f| s.contains(f)),
            SetFamily::Independent(s, g) => {
                distinct && sorted.iter().all(|f| s.contains(f)) && g.is_independent(&sorted)
            }
            SetFamily::Explicit(sets) => sets.iter().any(|m| {
                let mut m = m.clone();
                m.sort_unstable();
                m == sorted
            }),
        }
    }

    /// Every member, each once.
    pub fn members(&self) -> Vec<Vec<usize>> {
        match self {
            SetFamily::AllSubsets(_) => {
                let ground = self.ground();
                (0u64..1 << ground.len())
                    .map(|mask| {
                        ground
                            .iter()
                            .enumerate()
                            .filter(|(k, _)| (mask >> k) & 1 == 1)
                            .map(|(_, &f)| f)
                            .collect()
                    })
                    .collect()
            }
            SetFamily::Independent(_, g) => independent_subsets(&self.ground(), g).collect(),
            SetFamily::Explicit(sets) => sets.clone(),
        }
    }

    /// `Σ_{S ∈ family} Q(S)`; the closed form `∏(1+ψ)` for all subsets.
    pub fn weight_sum(&self, psi: &PsiAssignment) -> f64 {
        match self {
            SetFamily::AllSubsets(_) => self.ground().iter().map(|&f| 1.0 + psi.get(f)).product(),
            SetFamily::Independent(_, g) => independent_subsets(&self.ground(), g)
                .map(|s| psi.weight(&s))
                .sum(),
            SetFamily::Explicit(sets) => sets.iter().map(|s| psi.weight(s)).sum(),
        }
    }
}

/// `T₀ = log₂ ξ + log₂ Σ_{S∈roots} Q(S)`, where `ξ = max θ/μ`.
pub fn horizon_t0(xi: Option<f64>, psi: &PsiAssignment, roots: &SetFamily) -> Result<f64> {
    let xi = xi.ok_or_else(|| {
        Error::PreconditionFailed("max theta/mu cannot be bounded without a declared bound".into())
    })?;
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(Error::PreconditionFailed(format!("invalid ratio bound {xi}")));
    }
    Ok((xi.ln() + roots.weight_sum(psi).ln()) / std::f64::consts::LN_2)
}

/// `⌈(T₀ + s)/δ⌉`.
pub fn step_bound(t0: f64, delta: f64, s: f64) -> Result<u64> {
    if !(delta > 0.0) {
        return Err(Error::NonPositiveDelta(delta));
    }
    let bound = ((t0 + s) / delta).ceil();
    Ok(bound.max(0.0) as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionVariant {
    /// Subsets of `Γ(i)`.
    Simple,
    /// Independent subsets of `Γ_R(i)`.
    Cluster,
    /// Caller-supplied list families.
    General,
}

impl ConditionVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            ConditionVariant::Simple => "simple",
            ConditionVariant::Cluster => "cluster",
            ConditionVariant::General => "general",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlawCondition {
    pub name: String,
    pub gamma: f64,
    pub psi: f64,
    pub zeta: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub variant: ConditionVariant,
    pub flaws: Vec<FlawCondition>,
    /// `1 − max ζ`.
    pub delta: f64,
    pub t0: Option<f64>,
    pub pass: bool,
}

/// `ζ ≤ 1 − TOLERANCE`.
pub fn zeta_passes(zeta: f64) -> bool {
    zeta <= 1.0 - TOLERANCE
}

impl ConditionReport {
    pub fn new(
        variant: ConditionVariant,
        names: Vec<String>,
        gamma: Vec<f64>,
        psi: Vec<f64>,
        zeta: Vec<f64>,
        t0: Option<f64>,
    ) -> Result<Self> {
        let m = names.len();
        if gamma.len() != m || psi.len() != m || zeta.len() != m {
            return Err(Error::PreconditionFailed(
                "condition report columns differ in length".into(),
            ));
        }
        let flaws: Vec<FlawCondition> = (0..m)
            .map(|i| FlawCondition {
                name: names[i].clone(),
                gamma: gamma[i],
                psi: psi[i],
                zeta: zeta[i],
                pass: zeta_passes(zeta[i]),
            })
            .collect();
        let max = flaws.iter().map(|f| f.zeta).fold(0.0, f64::max);
        Ok(Self {
            variant,
            pass: flaws.iter().all(|f| f.pass),
            delta: 1.0 - max,
            flaws,
            t0,
        })
    }

    pub fn max_zeta(&self) -> f64 {
        self.flaws.iter().map(|f| f.zeta).fold(0.0, f64::max)
    }

    pub fn step_bound(&self, s: f64) -> Result<u64> {
        if !self.pass {
            return Err(Error::NonPositiveDelta(self.delta.min(0.0)));
        }
        let t0 = self.t0.ok_or_else(|| Error::PreconditionFailed("T0 unavailable".into()))?;
        step_bound(t0, self.delta, s)
    }

    pub fn to_table(&self) -> String {
        let width = self.flaws.iter().map(|f| f.name.len()).max().unwrap_or(4).max(4);
        let mut out = format!("condition: {}\n", self.variant.as_str());
        let _ = writeln!(
            out,
            "{:<width$}  {:>12}  {:>12}  {:>12}  verdict",
            "flaw", "gamma", "psi", "zeta"
        );
        for f in &self.flaws {
            let _ = writeln!(
                out,
                "{:<width$}  {:>12.6e}  {:>12.6e}  {:>12.6e}  {}",
                f.name,
                f.gamma,
                f.psi,
                f.zeta,
                if f.pass { "PASS" } else { "FAIL" }
            );
        }
        let _ = writeln!(out, "delta = {}", self.delta);
        if let Some(t0) = self.t0 {
            let _ = writeln!(out, "T0 = {t0}");
        }
        let _ = writeln!(out, "verdict = {}", if self.pass { "PASS" } else { "FAIL" });
        out
    }

    /// One `key=value` line per flaw.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for f in &self.flaws {
            let _ = writeln!(
                out,
                "flaw={} gamma={:e} zeta={:e} verdict={}",
                f.name,
                f.gamma,
                f.zeta,
                if f.pass { "PASS" } else { "FAIL" }
            );
        }
        out
    }
}

/// Condition report for an explicit instance under the walk `kind`:
/// charges from `mode` (the best justified mode when `None`), `Γ` from the
/// exact causality graph, and `T₀` over `𝒮(θ)`.
pub fn explicit_condition(
    inst: &ExplicitInstance,
    kind: WalkKind,
    psi: &PsiAssignment,
    mode: Option<ChargeMode>,
) -> Result<ConditionReport> {
    let m = inst.num_flaws();
    if psi.len() != m {
        return Err(Error::PreconditionFailed(format!(
            "{} psi values for {m} flaws",
            psi.len()
        )));
    }
    let table = ChargeTable::compute(inst);
    let gamma = table.charges(mode.unwrap_or_else(|| table.best_mode()))?;
    let causality = build_causality(inst);
    let span = inst.span_set();
    let (variant, zetas, roots) = match kind {
        WalkKind::Permutation => (
            ConditionVariant::Simple,
            (0..m)
                .map(|i| zeta_simple(gamma[i], psi, i, &causality.neighborhood(i)))
                .collect(),
            SetFamily::AllSubsets(span),
        ),
        WalkKind::Recursive => {
            let dep = causality.dependency_graph();
            let zetas = (0..m)
                .map(|i| zeta_cluster(gamma[i], psi, i, &causality.neighborhood(i), &dep))
                .collect();
            (ConditionVariant::Cluster, zetas, SetFamily::Independent(span, dep))
        }
    };
    let t0 = horizon_t0(Some(inst.xi()), psi, &roots)?;
    ConditionReport::new(
        variant,
        inst.flaw_names().to_vec(),
        gamma,
        psi.values().to_vec(),
        zetas,
        Some(t0),
    )
}

/// Static local lemma check for one event.
#[derive(Debug, Clone, PartialEq)]
pub struct LllEvent {
    pub lhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LllReport {
    pub events: Vec<LllEvent>,
    pub pass: bool,
    /// `∏ 1/(1+ψ_i)`, reported when every event passes.
    pub lower_bound: Option<f64>,
}

/// `(μ(A_i)/ψ_i) Σ_{S ⊆ {i}∪D(i)} ∏_{j∈S} ψ_j ≤ 1` for every event.
pub fn check_general_lll(probs: &[f64], deps: &[Vec<usize>], psi: &PsiAssignment) -> LllReport {
    let events: Vec<LllEvent> = probs
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut set = deps[i].clone();
            set.push(i);
            set.sort_unstable();
            set.dedup();
            let lhs = p / psi.get(i) * set.iter().map(|&j| 1.0 + psi.get(j)).product::<f64>();
            LllEvent {
                lhs,
                pass: lhs <= 1.0 + TOLERANCE,
            }
        })
        .collect();
    let pass = events.iter().all(|e| e.pass);
    let lower_bound = pass.then(|| (0..probs.len()).map(|i| 1.0 / (1.0 + psi.get(i))).product());
    LllReport {
        events,
        pass,
        lower_bound,
    }
}

/// Best constant ψ on a logarithmic grid over `[1e-4, 1e4]`, minimizing the
/// objective (typically the largest ζ).
pub fn grid_constant_psi(mut objective: impl FnMut(f64) -> f64) -> f64 {
    let mut best = (f64::INFINITY, 1.0);
    for k in -400..=400 {
        let x = 10f64.powf(k as f64 / 100.0);
        let v = objective(x);
        if v < best.0 {
            best = (v, x);
        }
    }
    best.1
}

/// Probability that the branching process emits exactly `forest`:
/// `(Σ_{roots} Q)^{-1} ∏_v ψ_v / Σ_{List(v)} Q`.
pub fn forest_probability(
    forest: &WitnessForest,
    psi: &PsiAssignment,
    roots: &SetFamily,
    lists: &[SetFamily],
) -> Result<f64> {
    forest.check_distinct()?;
    let root_labels: Vec<usize> = forest.roots().iter().map(|&r| forest.label(r)).collect();
    if !roots.contains(&root_labels) {
        return Err(Error::IllFormedForest(format!(
            "root labels {root_labels:?} are not in the root family"
        )));
    }
    let mut p = 1.0 / roots.weight_sum(psi);
    for v in 0..forest.len() {
        let label = forest.label(v);
        let list = lists.get(label).ok_or_else(|| {
            Error::IllFormedForest(format!("no list family for label {label}"))
        })?;
        let children: Vec<usize> = forest.children(v).iter().map(|&c| forest.label(c)).collect();
        if !list.contains(&children) {
            return Err(Error::IllFormedForest(format!(
                "children {children:?} of a vertex labelled {label} are not in its list family"
            )));
        }
        p *= psi.get(label) / list.weight_sum(psi);
    }
    Ok(p)
}

/// The rejection-sampling branching process: every flaw of a family's ground
/// set is included independently with probability `ψ/(1+ψ)` and the draw is
/// repeated until it lands in the family.
#[derive(Debug, Clone)]
pub struct BranchingProcess {
    psi: PsiAssignment,
    roots: SetFamily,
    lists: Vec<SetFamily>,
}

impl BranchingProcess {
    pub fn new(psi: PsiAssignment, roots: SetFamily, lists: Vec<SetFamily>) -> Result<Self> {
        if lists.len() != psi.len() {
            return Err(Error::PreconditionFailed(
                "one list family per flaw is required".into(),
            ));
        }
        Ok(Self { psi, roots, lists })
    }

    fn draw<R: Rng + ?Sized>(&self, family: &SetFamily, rng: &mut R) -> Vec<usize> {
        let ground = family.ground();
        loop {
            let s: Vec<usize> = ground
                .iter()
                .copied()
                .filter(|&g| rng.gen::<f64>() < self.psi.inclusion_probability(g))
                .collect();
            if family.contains(&s) {
                return s;
            }
        }
    }

    /// Samples one forest; `None` if it would exceed `max_vertices`.
    pub fn sample<R: Rng + ?Sized>(&self, max_vertices: usize, rng: &mut R) -> Option<WitnessForest> {
        let mut forest = WitnessForest::new(ForestFlavor::Recursive);
        let mut queue = VecDeque::new();
        for label in self.draw(&self.roots, rng) {
            if forest.len() == max_vertices {
                return None;
            }
            queue.push_back(forest.add_root(label));
        }
        while let Some(v) = queue.pop_front() {
            for label in self.draw(&self.lists[forest.label(v)], rng) {
                if forest.len() == max_vertices {
                    return None;
                }
                queue.push_back(forest.add_child(v, label));
            }
        }
        Some(forest)
    }

    /// Every complete forest with at most `max_vertices` vertices.
    pub fn enumerate(&self, max_vertices: usize) -> Vec<WitnessForest> {
        enumerate_forests(&self.roots, &self.lists, max_vertices)
    }

    pub fn probability(&self, forest: &WitnessForest) -> Result<f64> {
        forest_probability(forest, &self.psi, &self.roots, &self.lists)
    }
}

/// Every forest whose root set lies in `roots`, whose children sets lie in
/// the list families, and which has at most `max_vertices` vertices.
pub fn enumerate_forests(roots: &SetFamily, lists: &[SetFamily], max_vertices: usize) -> Vec<WitnessForest> {
    let list_members: Vec<Vec<Vec<usize>>> = lists.iter().map(SetFamily::members).collect();
    let mut done = Vec::new();
    // partial forests with a queue of unexpanded vertices
    let mut stack: Vec<(WitnessForest, VecDeque<usize>)> = Vec::new();
    for set in roots.members() {
        if set.len() > max_vertices {
            continue;
        }
        let mut f = WitnessForest::new(ForestFlavor::Recursive);
        let queue = set.iter().map(|&l| f.add_root(l)).collect();
        stack.push((f, queue));
    }
    while let Some((forest, mut queue)) = stack.pop() {
        let Some(v) = queue.pop_front() else {
            done.push(forest);
            continue;
        };
        for set in &list_members[forest.label(v)] {
            if forest.len() + set.len() > max_vertices {
                continue;
            }
            let mut f = forest.clone();
            let mut q = queue.clone();
            for &l in set {
                q.push_back(f.add_child(v, l));
            }
            stack.push((f, q));
        }
    }
    done
}

/// Both sides of the charge bound for forests of exactly `t` vertices:
/// `Σ_φ ∏_v γ_v ≤ (max ζ)^t Σ_{roots} Q`, where `ζ_i = (γ_i/ψ_i) Σ_{List(i)} Q`.
pub fn forest_charge_bound(
    roots: &SetFamily,
    lists: &[SetFamily],
    gamma: &[f64],
    psi: &PsiAssignment,
    t: usize,
) -> (f64, f64) {
    let forests = enumerate_forests(roots, lists, t);
    let lhs: f64 = forests
        .iter()
        .filter(|f| f.len() == t)
        .map(|f| (0..f.len()).map(|v| gamma[f.label(v)]).product::<f64>())
        .sum();
    let zeta_max = (0..gamma.len())
        .map(|i| gamma[i] / psi.get(i) * lists[i].weight_sum(psi))
        .fold(0.0, f64::max);
    (lhs, zeta_max.powi(t as i32) * roots.weight_sum(psi))
}

/// Empirical forest frequencies, keyed by canonical encoding.
pub fn sample_frequencies<R: Rng + ?Sized>(
    process: &BranchingProcess,
    samples: usize,
    max_vertices: usize,
    rng: &mut R,
) -> (BTreeMap<String, usize>, usize) {
    let order = crate::instance::FlawOrder::identity(process.psi.len());
    let mut counts = BTreeMap::new();
    let mut truncated = 0;
    for _ in 0..samples {
        match process.sample(max_vertices, rng) {
            Some(f) => *counts.entry(f.canonical(&order)).or_insert(0) += 1,
            None => truncated += 1,
        }
    }
    (counts, truncated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causality::DependencyGraph;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn psi(v: &[f64]) -> PsiAssignment {
        PsiAssignment::new(v.to_vec()).unwrap()
    }

    #[test]
    fn zeta_simple_examples() {
        assert_eq!(zeta_simple(0.125, &psi(&[1.0; 3]), 0, &[1, 2]), 0.5);
        assert_eq!(zeta_simple(1.0, &psi(&[2.0]), 0, &[]), 0.5);
        assert_eq!(zeta_simple(0.125, &psi(&[0.5; 3]), 0, &[1, 2]), 9.0 / 16.0);
    }

    #[test]
    fn zeta_cluster_examples() {
        let mut g = DependencyGraph::new(3);
        g.add_edge(1, 2);
        assert_eq!(zeta_cluster(0.25, &psi(&[1.0; 3]), 0, &[1, 2], &g), 0.75);
        let empty = DependencyGraph::new(3);
        let p = psi(&[0.3, 0.7, 1.1]);
        let a = zeta_cluster(0.2, &p, 0, &[1, 2], &empty);
        let b = zeta_simple(0.2, &p, 0, &[1, 2]);
        assert!((a - b).abs() <= 1e-15);
    }

    #[test]
    fn horizon_examples() {
        let p = psi(&[1.0, 1.0]);
        let all = SetFamily::AllSubsets(vec![]);
        assert_eq!(horizon_t0(Some(1.0), &p, &all).unwrap(), 0.0);
        let t = horizon_t0(Some(16.0), &p, &all).unwrap();
        assert!((t - 4.0).abs() < 1e-12);
        let ind = SetFamily::Independent(vec![0, 1], DependencyGraph::new(2));
        assert!((horizon_t0(Some(1.0), &p, &ind).unwrap() - 2.0).abs() < 1e-12);
        assert!(horizon_t0(None, &p, &ind).is_err());
    }

    #[test]
    fn step_bound_examples() {
        assert_eq!(step_bound(10.0, 1.0, 6.0).unwrap(), 16);
        assert!(matches!(step_bound(10.0, 0.0, 6.0), Err(Error::NonPositiveDelta(_))));
        assert_eq!(step_bound(4.0, 1.0 / 3.0, 3.0).unwrap(), 21);
    }

    #[test]
    fn general_lll_examples() {
        let r = check_general_lll(&[0.25], &[vec![]], &psi(&[1.0]));
        assert_eq!(r.events[0].lhs, 0.5);
        assert_eq!(r.lower_bound, Some(0.5));

        let r = check_general_lll(&[0.5, 0.5], &[vec![1], vec![0]], &psi(&[1.0, 1.0]));
        assert_eq!(r.events[0].lhs, 2.0);
        assert!(!r.pass);
        assert_eq!(r.lower_bound, None);
    }

    #[test]
    fn explicit_toy_conditions() {
        let a = explicit_condition(&crate::corpus::toy_a(), WalkKind::Permutation, &psi(&[3.0, 3.0]), None).unwrap();
        assert!(a.flaws.iter().all(|f| (f.zeta - 2.0 / 3.0).abs() < 1e-12));
        assert!((a.t0.unwrap() - 4.0).abs() < 1e-12);
        let b = explicit_condition(&crate::corpus::toy_b(), WalkKind::Recursive, &psi(&[2.0, 2.0]), None).unwrap();
        assert!(b.flaws.iter().all(|f| (f.zeta - 0.5).abs() < 1e-12));
        assert!(b.pass);
    }

    #[test]
    fn report_verdicts() {
        let r = ConditionReport::new(
            ConditionVariant::Simple,
            vec!["a".into(), "b".into()],
            vec![0.5, 0.5],
            vec![1.0, 1.0],
            vec![0.5, 1.0],
            Some(1.0),
        )
        .unwrap();
        assert!(!r.pass);
        assert!(r.step_bound(3.0).is_err());
        assert!(r.to_records().contains("flaw=b gamma=5e-1 zeta=1e0 verdict=FAIL"));
    }

    #[test]
    fn single_root_forest_probability() {
        let p = psi(&[1.0]);
        let roots = SetFamily::Explicit(vec![vec![], vec![0]]);
        let lists = vec![SetFamily::Explicit(vec![vec![]])];
        let mut f = WitnessForest::new(ForestFlavor::Recursive);
        f.add_root(0);
        assert_eq!(forest_probability(&f, &p, &roots, &lists).unwrap(), 0.5);
        let empty = WitnessForest::new(ForestFlavor::Recursive);
        assert_eq!(forest_probability(&empty, &p, &roots, &lists).unwrap(), 0.5);

        let mut bad = WitnessForest::new(ForestFlavor::Recursive);
        let r = bad.add_root(0);
        bad.add_child(r, 0);
        assert!(forest_probability(&bad, &p, &roots, &lists).is_err());
    }

    #[test]
    fn single_root_simulation() {
        let process = BranchingProcess::new(
            psi(&[1.0]),
            SetFamily::Explicit(vec![vec![], vec![0]]),
            vec![SetFamily::Explicit(vec![vec![]])],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (counts, truncated) = sample_frequencies(&process, 100_000, 10, &mut rng);
        assert_eq!(truncated, 0);
        let n = 100_000.0;
        let hit = *counts.values().max().unwrap() as f64;
        assert!((hit / n - 0.5).abs() <= 4.0 * (0.25 / n).sqrt());
    }

    #[test]
    fn small_forests_have_mass_at_most_one() {
        let p = psi(&[0.6, 1.3]);
        let roots = SetFamily::AllSubsets(vec![0, 1]);
        let lists = vec![
            SetFamily::AllSubsets(vec![0, 1]),
            SetFamily::AllSubsets(vec![1]),
        ];
        let forests = enumerate_forests(&roots, &lists, 2);
        let total: f64 = forests
            .iter()
            .map(|f| forest_probability(f, &p, &roots, &lists).unwrap())
            .sum();
        assert!(total <= 1.0 + 1e-12 && total > 0.0);
    }

    #[test]
    fn charge_bound_chain_holds() {
        let p = psi(&[0.5, 0.5, 0.5]);
        let mut g = DependencyGraph::new(3);
        g.add_edge(0, 1);
        g.add_edge(1, 2);
        let roots = SetFamily::Independent(vec![0, 1, 2], g.clone());
        let lists: Vec<SetFamily> = (0..3)
            .map(|_| SetFamily::Independent(vec![0, 1, 2], g.clone()))
            .collect();
        for t in 1..=4 {
            let (lhs, rhs) = forest_charge_bound(&roots, &lists, &[0.1, 0.2, 0.1], &p, t);
            assert!(lhs <= rhs * (1.0 + 1e-12), "t={t}: {lhs} > {rhs}");
        }
    }

    proptest! {
        #[test]
        fn subset_sum_closed_form(ps in prop::collection::vec(0.01f64..5.0, 1..=12)) {
            let p = PsiAssignment::new(ps.clone()).unwrap();
            let ground: Vec<usize> = (0..ps.len()).collect();
            let fam = SetFamily::AllSubsets(ground);
            let brute: f64 = fam.members().iter().map(|s| p.weight(s)).sum();
            let closed = fam.weight_sum(&p);
            prop_assert!((brute - closed).abs() <= 1e-12 * closed);
        }

        #[test]
        fn cluster_at_most_simple(
            ps in prop::collection::vec(0.01f64..5.0, 2..=10),
            edges in prop::collection::vec((0usize..10, 0usize..10), 0..30),
            gamma in 0.0f64..1.0,
        ) {
            let m = ps.len();
            let p = PsiAssignment::new(ps).unwrap();
            let mut g = DependencyGraph::new(m);
            for (a, b) in edges {
                g.add_edge(a % m, b % m);
            }
            let neigh: Vec<usize> = (1..m).collect();
            let c = zeta_cluster(gamma, &p, 0, &neigh, &g);
            let s = zeta_simple(gamma, &p, 0, &neigh);
            prop_assert!(c <= s * (1.0 + 1e-12));
        }

        #[test]
        fn zeta_monotonicity(
            ps in prop::collection::vec(0.01f64..5.0, 2..=6),
            gamma in 0.01f64..1.0,
            bump in 0.01f64..1.0,
        ) {
            let p = PsiAssignment::new(ps.clone()).unwrap();
            let neigh: Vec<usize> = (1..ps.len()).collect();
            let base = zeta_simple(gamma, &p, 0, &neigh);
            prop_assert!(zeta_simple(gamma + bump, &p, 0, &neigh) > base);
            let mut up = ps.clone();
            up[1] += bump;
            prop_assert!(zeta_simple(gamma, &PsiAssignment::new(up).unwrap(), 0, &neigh) > base);
            let mut own = ps;
            own[0] += bump;
            prop_assert!(zeta_simple(gamma, &PsiAssignment::new(own).unwrap(), 0, &neigh) < base);
        }
    }
}
