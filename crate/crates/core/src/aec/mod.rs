//! Acyclic edge coloring of `d`-degenerate graphs.
//!
//! States are proper edge colorings with no bichromatic 4-cycle over the
//! palette `2(Δ−1) + Q`, `Q = ⌈16√(dΔ)⌉`. The flaws are the bichromatic
//! cycles, which are never materialized: they are found by following
//! two-colored paths. Addressing a cycle keeps two designated adjacent edges
//! and recolors the rest, one at a time, with uniformly random 4-available
//! colors.
//!
//! The state space excludes *bichromatic* 4-cycles; a "monochromatic"
//! 4-cycle cannot occur in a proper coloring, so that reading is taken to be
//! a slip.

pub mod analysis;
pub mod coloring;
pub mod cycles;
pub mod graph;

use std::cmp::Ordering;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use rand::Rng;

use crate::instance::Instance;
use crate::walks::{permutation_walk, recursive_walk, Outcome, Supergraph, WalkConfig, WalkKind};

pub use analysis::{aec_condition_check, aec_t0, closed_form_ln_psi, AecConditionReport, LengthBound};
pub use coloring::{
    four_available, four_available_with, greedy_initial, greedy_initial_audited, in_omega, is_acyclic, is_acyclic_edge_coloring, is_proper,
    palette_size, q_for, Availability, Color, ColorIndex, EdgeColoring,
};
pub use cycles::{count_cycles_through_edge, find_bichromatic_cycles, kral_bound, CycleFlaw};
pub use graph::{degeneracy_orient, random_degenerate, Degeneracy, SimpleGraph};

/// Result of one action.
#[derive(Debug, Clone)]
pub struct Recoloring {
    pub coloring: EdgeColoring,
    /// Smallest number of 4-available colors met along the way.
    pub min_available: usize,
    /// Largest number of 4-forbidden colors met along the way.
    pub max_forbidden: usize,
}

/// Uncolors `C` except `e₁, e₂` and recolors it edge by edge, starting next
/// to `e₂`, with uniform 4-available colors.
pub fn recolor_cycle<R: Rng + ?Sized>(g: &SimpleGraph, coloring: &EdgeColoring, c: &CycleFlaw, rng: &mut R) -> Recoloring {
    let mut tau = coloring.clone();
    let mut idx = ColorIndex::build(g, coloring);
    let order = c.recolor_order();
    for &e in &order {
        if let Some(old) = tau.color(e) {
            idx.remove(g, e, old);
        }
        tau.set(e, None);
    }
    let mut min_available = usize::MAX;
    let mut max_forbidden = 0;
    for &e in &order {
        let avail = four_available_with(g, &idx, &tau, e);
        min_available = min_available.min(avail.available.len());
        max_forbidden = max_forbidden.max(avail.forbidden);
        let color = avail.available[rng.gen_range(0..avail.available.len())];
        tau.set(e, Some(color));
        idx.insert(g, e, color);
    }
    Recoloring {
        coloring: tau,
        min_available,
        max_forbidden,
    }
}

/// The only state from which addressing `c` can produce `tau`: extend the
/// colors of `e₁, e₂` alternately around `c`.
pub fn reconstruct_predecessor(tau: &EdgeColoring, c: &CycleFlaw) -> Option<EdgeColoring> {
    let (e1, e2) = c.designated();
    let (a, b) = (tau.color(e1)?, tau.color(e2)?);
    let edges = c.edges();
    let n = edges.len();
    let p1 = edges.iter().position(|&e| e == e1)?;
    let mut sigma = tau.clone();
    for k in 0..n {
        let e = edges[(p1 + k) % n];
        sigma.set(e, Some(if k % 2 == 0 { a } else { b }));
    }
    // e₂ sits at offset 1 or n−1 from e₁, both odd for an even cycle
    (sigma.color(e2) == Some(b)).then_some(sigma)
}

/// Online assertion counters, shared by all steps of an instance.
#[derive(Debug, Default)]
pub struct AecAudit {
    queries: AtomicU64,
    forbidden_violations: AtomicU64,
    availability_violations: AtomicU64,
    max_forbidden: AtomicU64,
    predecessor_checks: AtomicU64,
    predecessor_failures: AtomicU64,
    omega_checks: AtomicU64,
    omega_failures: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AuditSnapshot {
    /// Colorings audited: the greedy pass (one per edge) and every
    /// recoloring step.
    pub queries: u64,
    /// Passes that met more than `2(Δ−1)` forbidden colors.
    pub forbidden_violations: u64,
    /// Passes that met fewer than `Q` available colors.
    pub availability_violations: u64,
    pub max_forbidden: u64,
    pub predecessor_checks: u64,
    pub predecessor_failures: u64,
    pub omega_checks: u64,
    pub omega_failures: u64,
}

impl AuditSnapshot {
    pub fn violations(&self) -> u64 {
        self.forbidden_violations + self.availability_violations + self.predecessor_failures + self.omega_failures
    }
}

impl AecAudit {
    fn bump(counter: &AtomicU64, hit: bool) {
        if hit {
            counter.fetch_add(1, AtomicOrdering::Relaxed);
        }
    }

    pub fn snapshot(&self) -> AuditSnapshot {
        let get = |c: &AtomicU64| c.load(AtomicOrdering::Relaxed);
        AuditSnapshot {
            queries: get(&self.queries),
            forbidden_violations: get(&self.forbidden_violations),
            availability_violations: get(&self.availability_violations),
            max_forbidden: get(&self.max_forbidden),
            predecessor_checks: get(&self.predecessor_checks),
            predecessor_failures: get(&self.predecessor_failures),
            omega_checks: get(&self.omega_checks),
            omega_failures: get(&self.omega_failures),
        }
    }
}

/// The coloring problem as an [`Instance`]. The initial distribution puts
/// all its mass on the greedy coloring.
#[derive(Debug)]
pub struct AecInstance {
    graph: SimpleGraph,
    d: usize,
    delta: usize,
    q: u32,
    palette: u32,
    initial: EdgeColoring,
    strict: bool,
    audit: AecAudit,
}

impl AecInstance {
    /// Uses `Q = ⌈16√(dΔ)⌉`.
    pub fn new(graph: SimpleGraph) -> Self {
        let d = degeneracy_orient(&graph).d;
        let q = q_for(d, graph.max_degree());
        Self::with_q(graph, q)
    }

    /// Any `Q ≥ 1`; the theory needs the default.
    pub fn with_q(graph: SimpleGraph, q: u32) -> Self {
        let d = degeneracy_orient(&graph).d;
        let delta = graph.max_degree();
        let palette = palette_size(delta, q.max(1));
        let (initial, max_forbidden, min_available) = greedy_initial_audited(&graph, palette);
        let audit = AecAudit::default();
        let edges = graph.num_edges() as u64;
        audit.queries.store(edges, AtomicOrdering::Relaxed);
        audit.max_forbidden.store(max_forbidden as u64, AtomicOrdering::Relaxed);
        let limit = 2 * delta.saturating_sub(1);
        if edges > 0 {
            AecAudit::bump(&audit.forbidden_violations, max_forbidden > limit);
            AecAudit::bump(&audit.availability_violations, min_available < q.max(1) as usize);
        }
        Self {
            graph,
            d,
            delta,
            q: q.max(1),
            palette,
            initial,
            strict: false,
            audit,
        }
    }

    /// Starts from `coloring` instead of the greedy one.
    pub fn with_initial(mut self, coloring: EdgeColoring) -> Self {
        assert_eq!(coloring.palette(), self.palette, "palette mismatch");
        self.initial = coloring;
        self
    }

    /// Checks membership in the state space after every step.
    pub fn strict(mut self, on: bool) -> Self {
        self.strict = on;
        self
    }

    pub fn graph(&self) -> &SimpleGraph {
        &self.graph
    }

    pub fn degeneracy(&self) -> usize {
        self.d
    }

    pub fn max_degree(&self) -> usize {
        self.delta
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn palette(&self) -> u32 {
        self.palette
    }

    pub fn initial(&self) -> &EdgeColoring {
        &self.initial
    }

    pub fn audit(&self) -> AuditSnapshot {
        self.audit.snapshot()
    }
}

impl Instance for AecInstance {
    type State = EdgeColoring;
    type Flaw = CycleFlaw;

    fn present_flaws(&self, state: &EdgeColoring) -> Vec<CycleFlaw> {
        find_bichromatic_cycles(&self.graph, state, None)
    }

    fn priority(&self, a: &CycleFlaw, b: &CycleFlaw) -> Ordering {
        a.pi_cmp(b)
    }

    fn address<R: Rng + ?Sized>(&self, flaw: &CycleFlaw, state: &EdgeColoring, rng: &mut R) -> EdgeColoring {
        let r = recolor_cycle(&self.graph, state, flaw, rng);
        let a = &self.audit;
        a.queries.fetch_add(1, AtomicOrdering::Relaxed);
        AecAudit::bump(&a.forbidden_violations, r.max_forbidden > 2 * self.delta.saturating_sub(1));
        AecAudit::bump(&a.availability_violations, r.min_available < self.q as usize);
        a.max_forbidden.fetch_max(r.max_forbidden as u64, AtomicOrdering::Relaxed);
        a.predecessor_checks.fetch_add(1, AtomicOrdering::Relaxed);
        AecAudit::bump(
            &a.predecessor_failures,
            reconstruct_predecessor(&r.coloring, flaw).as_ref() != Some(state),
        );
        if self.strict {
            a.omega_checks.fetch_add(1, AtomicOrdering::Relaxed);
            AecAudit::bump(&a.omega_failures, !in_omega(&self.graph, &r.coloring));
        }
        r.coloring
    }

    fn sample_initial<R: Rng + ?Sized>(&self, _rng: &mut R) -> EdgeColoring {
        self.initial.clone()
    }

    fn span(&self) -> crate::Result<Vec<CycleFlaw>> {
        Ok(self.present_flaws(&self.initial))
    }

    fn describe_flaw(&self, flaw: &CycleFlaw) -> String {
        flaw.descriptor()
    }

    fn digest(&self, state: &EdgeColoring) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for c in state.colors() {
            let x = c.map_or(u64::from(u32::MAX), u64::from);
            for byte in x.to_le_bytes().iter().take(4) {
                h ^= u64::from(*byte);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

/// Cycles sharing an edge.
#[derive(Debug, Clone, Copy, Default)]
pub struct EdgeIntersection;

impl Supergraph<AecInstance> for EdgeIntersection {
    fn present_neighbors(&self, inst: &AecInstance, state: &EdgeColoring, flaw: &CycleFlaw) -> Vec<CycleFlaw> {
        find_bichromatic_cycles(&inst.graph, state, Some(flaw.edges()))
    }
}

#[derive(Debug, Clone)]
pub struct AecOptions {
    pub seed: u64,
    pub max_steps: u64,
    pub walk: WalkKind,
    /// Overrides `Q`.
    pub q: Option<u32>,
    pub strict: bool,
    pub check_returns: bool,
}

impl AecOptions {
    pub fn new(seed: u64, max_steps: u64) -> Self {
        Self {
            seed,
            max_steps,
            walk: WalkKind::Recursive,
            q: None,
            strict: false,
            check_returns: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AecSolution {
    pub coloring: EdgeColoring,
    pub outcome: Outcome,
    pub steps: u64,
    pub d: usize,
    pub delta: usize,
    pub q: u32,
    pub palette: u32,
    /// Proper and acyclic according to the validators.
    pub valid: bool,
    pub audit: AuditSnapshot,
    pub return_checks: u64,
    pub return_violations: u64,
}

pub fn aec_solve(graph: &SimpleGraph, seed: u64, max_steps: u64) -> AecSolution {
    aec_solve_with(graph, &AecOptions::new(seed, max_steps))
}

pub fn aec_solve_with(graph: &SimpleGraph, options: &AecOptions) -> AecSolution {
    let inst = match options.q {
        Some(q) => AecInstance::with_q(graph.clone(), q),
        None => AecInstance::new(graph.clone()),
    }
    .strict(options.strict);
    run_instance(&inst, options)
}

/// Runs the walk on a prepared instance and validates the final coloring.
pub fn run_instance(inst: &AecInstance, options: &AecOptions) -> AecSolution {
    let config = WalkConfig::new(options.seed, options.max_steps).check_returns(options.check_returns);
    let traj = match options.walk {
        WalkKind::Recursive => recursive_walk(inst, &EdgeIntersection, &config),
        WalkKind::Permutation => permutation_walk(inst, &config),
    };
    let valid = is_acyclic_edge_coloring(&inst.graph, &traj.final_state);
    AecSolution {
        coloring: traj.final_state,
        outcome: traj.outcome,
        steps: traj.steps_taken,
        d: inst.d,
        delta: inst.delta,
        q: inst.q,
        palette: inst.palette,
        valid,
        audit: inst.audit(),
        return_checks: traj.return_checks,
        return_violations: traj.return_violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hexagon() -> (SimpleGraph, EdgeColoring) {
        let edges: Vec<_> = (0..6).map(|i| (i, (i + 1) % 6)).collect();
        let g = SimpleGraph::new(6, &edges).unwrap();
        let palette = palette_size(2, q_for(2, 2));
        let mut c = EdgeColoring::uncolored(6, palette);
        let (mut v, mut prev) = (0, usize::MAX);
        for k in 0..6 {
            let &(w, e) = g.incident(v).iter().find(|&&(_, e)| e != prev).unwrap();
            c.set(e, Some((k % 2) as u32));
            prev = e;
            v = w;
        }
        (g, c)
    }

    #[test]
    fn recoloring_keeps_designated_edges() {
        let (g, c) = hexagon();
        let flaw = find_bichromatic_cycles(&g, &c, None).remove(0);
        let (e1, e2) = flaw.designated();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let r = recolor_cycle(&g, &c, &flaw, &mut rng);
            let changed = (0..6).filter(|&e| r.coloring.color(e) != c.color(e) || r.coloring.color(e).is_none());
            assert!(changed.clone().all(|e| e != e1 && e != e2));
            assert_eq!(r.coloring.color(e1), c.color(e1));
            assert_eq!(r.coloring.color(e2), c.color(e2));
            assert!(r.coloring.is_complete());
            assert!(in_omega(&g, &r.coloring));
            assert!(r.min_available >= q_for(2, 2) as usize);
            assert_eq!(reconstruct_predecessor(&r.coloring, &flaw), Some(c.clone()));
        }
    }

    #[test]
    fn walk_repairs_an_alternating_hexagon() {
        let (g, c) = hexagon();
        let inst = AecInstance::new(g.clone()).with_initial(c).strict(true);
        for seed in 0..20 {
            let mut opts = AecOptions::new(seed, 1_000);
            opts.check_returns = true;
            let sol = run_instance(&inst, &opts);
            assert_eq!(sol.outcome, Outcome::Sink);
            assert!(sol.valid);
            assert!(sol.steps >= 1);
            assert_eq!(sol.return_violations, 0);
        }
        assert_eq!(inst.audit().violations(), 0);
        assert!(inst.audit().omega_checks > 0);
    }

    #[test]
    fn trees_need_no_steps() {
        let g = SimpleGraph::new(6, &[(0, 1), (0, 2), (1, 3), (1, 4), (2, 5)]).unwrap();
        let sol = aec_solve(&g, 1, 100);
        assert_eq!(sol.steps, 0);
        assert!(sol.valid);
        assert_eq!(sol.d, 1);
    }

    #[test]
    fn solves_random_degenerate_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for seed in 0..10 {
            let g = random_degenerate(60, 4, 12, &mut rng);
            let sol = aec_solve(&g, seed, 10_000);
            assert_eq!(sol.outcome, Outcome::Sink);
            assert!(sol.valid);
            assert_eq!(sol.audit.violations(), 0);
        }
    }

    #[test]
    fn small_palettes_force_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut total = 0;
        for seed in 0..20 {
            let g = random_degenerate(40, 3, 6, &mut rng);
            let mut opts = AecOptions::new(seed, 50_000);
            opts.q = Some(3);
            opts.strict = true;
            let sol = aec_solve_with(&g, &opts);
            total += sol.steps;
            assert_eq!(sol.audit.omega_failures, 0);
            assert_eq!(sol.audit.predecessor_failures, 0);
            assert_eq!(sol.audit.forbidden_violations, 0);
            if sol.outcome == Outcome::Sink {
                assert!(sol.valid);
            }
        }
        assert!(total > 0);
    }
}
