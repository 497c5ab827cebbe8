//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flawwalk::aec::{self, AecOptions, SimpleGraph};
use flawwalk::causality::{build_causality, DependencyGraph};
use flawwalk::charges::{check_atomic_harmonic, check_regeneration, is_atomic, ChargeMode, ChargeTable};
use flawwalk::conditions::{
    explicit_condition, sample_frequencies, zeta_simple, BranchingProcess, PsiAssignment, SetFamily,
};
use flawwalk::corpus;
use flawwalk::forests::{break_forest, break_sequence, reconstruct_witness, recursive_forest};
use flawwalk::oracle::{verify_lemma1, verify_tightness, visit_trajectories, Engine, EnumerationOptions};
use flawwalk::sat::{sat_condition, CnfInstance, MtInstance, PsiChoice, SharedVariables};
use flawwalk::walks::trace::TraceLog;
use flawwalk::walks::{
    permutation_walk, recursive_walk, FlawChoice, Outcome, PermutationChoice, Recording, RecursiveChoice, Step,
    Trajectory, WalkConfig, WalkKind,
};
use flawwalk::{ExplicitInstance, Instance};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

// 1 ---------------------------------------------------------------------

/// `max_τ Σ_{σ→τ} μ(σ) ρ(σ,τ) / μ(τ)`, straight from the arc list.
fn general_charge(inst: &ExplicitInstance, flaw: usize) -> f64 {
    let mut into: HashMap<usize, f64> = HashMap::new();
    for &s in inst.members(flaw) {
        for &(t, p) in inst.actions(flaw, s) {
            *into.entry(t).or_insert(0.0) += inst.mu(s) * p / inst.mu(t);
        }
    }
    into.values().copied().fold(0.0, f64::max)
}

fn criterion_1() -> Verdict {
    let a = corpus::toy_a();
    let ta = ChargeTable::compute(&a);
    let mut ok = true;
    let mut worst_dev: f64 = 0.0;
    for f in 0..a.num_flaws() {
        let mu_f: f64 = a.members(f).iter().map(|&s| a.mu(s)).sum();
        let regen = ta.charge(f, ChargeMode::Regenerative).unwrap_or(f64::NAN);
        let dev = check_regeneration(&a, f).max_deviation;
        worst_dev = worst_dev.max(dev);
        ok &= (mu_f - 0.5).abs() <= 1e-12 && (regen - 0.5).abs() <= 1e-9 && dev <= 1e-9;
        ok &= (general_charge(&a, f) - 0.5).abs() <= 1e-9;
    }
    let b = corpus::toy_b();
    let tb = ChargeTable::compute(&b);
    let cb = build_causality(&b);
    let psi = PsiAssignment::constant(b.num_flaws(), 2.0).unwrap();
    for f in 0..b.num_flaws() {
        let gamma = tb.charge(f, tb.best_mode()).unwrap_or(f64::NAN);
        let n = cb.neighborhood(f);
        ok &= (gamma - 1.0).abs() <= 1e-9 && (general_charge(&b, f) - 1.0).abs() <= 1e-9;
        ok &= n.is_empty();
        ok &= (zeta_simple(gamma, &psi, f, &n) - 0.5).abs() <= 1e-12;
    }
    verdict(
        ok,
        format!("toy-a gamma=1/2 regeneration_deviation={worst_dev:e}; toy-b gamma=1 Gamma=empty zeta=1/2"),
    )
}

// 2 ---------------------------------------------------------------------

fn atomic_regenerative(inst: &ExplicitInstance) -> bool {
    is_atomic(inst) && (0..inst.num_flaws()).all(|f| check_regeneration(inst, f).pass)
}

fn criterion_2() -> Verdict {
    let insts = corpus::all();
    let mut lemma_checks = 0;
    let mut lemma_violations = 0;
    let mut tight_checks = 0;
    let mut tight_violations = 0;
    for inst in &insts {
        let table = ChargeTable::compute(inst);
        let charges = table.charges(table.best_mode()).expect("best mode is justified");
        let r = build_causality(inst);
        let tight = atomic_regenerative(inst);
        for t in 1..=6 {
            for engine in [Engine::Permutation, Engine::Recursive(&r)] {
                let l = verify_lemma1(inst, engine, t, &charges).expect("enumeration fits");
                lemma_checks += l.sequences;
                lemma_violations += l.violations;
                if tight {
                    let k = verify_tightness(inst, engine, t).expect("enumeration fits");
                    tight_checks += k.sequences;
                    tight_violations += usize::from(!k.pass) + k.violations;
                }
            }
        }
    }
    verdict(
        lemma_violations == 0 && tight_violations == 0 && insts.len() >= 5,
        format!(
            "{} instances, t<=6, both engines: charge bound {lemma_checks} sequences {lemma_violations} violations; two-sided bound {tight_checks} sequences {tight_violations} violations",
            insts.len()
        ),
    )
}

// 3 ---------------------------------------------------------------------

/// Ten 3-clauses on 20 variables arranged in a ring, consecutive clauses
/// sharing one variable.
fn ring_cnf(rng: &mut ChaCha8Rng) -> CnfInstance {
    let clauses = (0..10)
        .map(|i| {
            [2 * i + 1, 2 * i + 2, (2 * i + 2) % 20 + 1]
                .iter()
                .map(|&v| if rng.gen::<bool>() { v } else { -v })
                .collect()
        })
        .collect();
    CnfInstance::new(20, clauses).expect("valid ring")
}

const RUNS: u64 = 10_000;

/// Fraction of runs needing more than the bound, for `s = 3..=7`.
fn tail_check(label: &str, bounds: &[(u32, u64)], mut steps: impl FnMut(u64, u64) -> u64) -> (bool, String) {
    let cap = bounds.iter().map(|b| b.1).max().unwrap() + 1;
    let taken: Vec<u64> = (0..RUNS).map(|seed| steps(seed, cap)).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for &(s, bound) in bounds {
        let over = taken.iter().filter(|&&n| n > bound).count() as f64 / RUNS as f64;
        let p = 2f64.powi(-(s as i32));
        let limit = p + 4.0 * (p / RUNS as f64).sqrt();
        ok &= over <= limit;
        parts.push(format!("s={s} bound={bound} frac={over} limit={limit:.5}"));
    }
    (ok, format!("{label}: {}", parts.join(", ")))
}

fn criterion_3() -> Verdict {
    let mut ok = true;
    let mut details = Vec::new();

    let toy = corpus::toy_a();
    let psi = PsiAssignment::constant(2, 3.0).unwrap();
    let report = explicit_condition(&toy, WalkKind::Permutation, &psi, None).expect("condition");
    ok &= report.pass;
    let bounds: Vec<(u32, u64)> = (3..=7).map(|s| (s, report.step_bound(s as f64).unwrap())).collect();
    let (pass, d) = tail_check("toy-a", &bounds, |seed, cap| {
        permutation_walk(&toy, &WalkConfig::new(seed, cap)).steps_taken
    });
    ok &= pass;
    details.push(format!("{d} (delta={:.4} T0={:.4})", report.delta, report.t0.unwrap()));

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mt = MtInstance::new(ring_cnf(&mut rng));
    for kind in [WalkKind::Permutation, WalkKind::Recursive] {
        let report = sat_condition(&mt, kind, &PsiChoice::Constant(0.5)).expect("condition");
        ok &= report.pass;
        let bounds: Vec<(u32, u64)> = (3..=7).map(|s| (s, report.step_bound(s as f64).unwrap())).collect();
        let (pass, d) = tail_check(&format!("ring-20 {}", kind.as_str()), &bounds, |seed, cap| {
            let cfg = WalkConfig::new(seed, cap);
            match kind {
                WalkKind::Permutation => permutation_walk(&mt, &cfg).steps_taken,
                WalkKind::Recursive => recursive_walk(&mt, &SharedVariables, &cfg).steps_taken,
            }
        });
        ok &= pass;
        details.push(format!("{d} (delta={:.4} T0={:.4})", report.delta, report.t0.unwrap()));
    }
    verdict(ok, details.join("; "))
}

// 4 and 7 ---------------------------------------------------------------

/// Proper, complete, and no two-colored cycle, by depth-first search over
/// each two-colored subgraph.
fn independent_acyclic(g: &SimpleGraph, coloring: &aec::EdgeColoring) -> bool {
    let colors: Vec<u32> = match coloring.colors().iter().copied().collect::<Option<Vec<_>>>() {
        Some(c) => c,
        None => return false,
    };
    let n = g.num_vertices();
    let mut at: Vec<BTreeMap<u32, usize>> = vec![BTreeMap::new(); n];
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        for w in [u, v] {
            if at[w].insert(colors[e], e).is_some() {
                return false;
            }
        }
    }
    let mut used: Vec<u32> = colors.clone();
    used.sort_unstable();
    used.dedup();
    for (i, &a) in used.iter().enumerate() {
        for &b in &used[i + 1..] {
            let mut seen = vec![false; n];
            for start in 0..n {
                if seen[start] {
                    continue;
                }
                // (vertex, edge used to enter it)
                let mut stack = vec![(start, usize::MAX)];
                seen[start] = true;
                while let Some((v, via)) = stack.pop() {
                    for c in [a, b] {
                        let Some(&e) = at[v].get(&c) else { continue };
                        if e == via {
                            continue;
                        }
                        let w = g.other(e, v);
                        if seen[w] {
                            return false;
                        }
                        seen[w] = true;
                        stack.push((w, e));
                    }
                }
            }
        }
    }
    true
}

struct AecRuns {
    graphs: usize,
    invalid: usize,
    palette_over: usize,
    budget: usize,
    steps: u64,
    audit: aec::AuditSnapshot,
    return_checks: u64,
    return_violations: u64,
}

fn add_audit(total: &mut aec::AuditSnapshot, a: &aec::AuditSnapshot) {
    total.queries += a.queries;
    total.forbidden_violations += a.forbidden_violations;
    total.availability_violations += a.availability_violations;
    total.max_forbidden = total.max_forbidden.max(a.max_forbidden);
    total.predecessor_checks += a.predecessor_checks;
    total.predecessor_failures += a.predecessor_failures;
    total.omega_checks += a.omega_checks;
    total.omega_failures += a.omega_failures;
}

fn aec_runs() -> AecRuns {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut runs = AecRuns {
        graphs: 0,
        invalid: 0,
        palette_over: 0,
        budget: 0,
        steps: 0,
        audit: aec::AuditSnapshot::default(),
        return_checks: 0,
        return_violations: 0,
    };
    for i in 0..120u64 {
        let n = rng.gen_range(10..=200);
        let d = rng.gen_range(1..=5);
        let cap = rng.gen_range(d + 1..=24);
        let g = aec::random_degenerate(n, d, cap, &mut rng);
        let mut opts = AecOptions::new(i, 1_000_000);
        opts.strict = true;
        opts.check_returns = true;
        let sol = aec::aec_solve_with(&g, &opts);
        assert!(sol.d <= 5 && sol.delta <= 24);
        runs.graphs += 1;
        runs.steps += sol.steps;
        if sol.outcome != Outcome::Sink {
            runs.budget += 1;
        }
        if !independent_acyclic(&g, &sol.coloring) {
            runs.invalid += 1;
        }
        let (d, delta) = (sol.d as f64, sol.delta as f64);
        let allowed = ((2.0 + 16.0 * (d / delta).sqrt()) * delta).ceil() as u32;
        if sol.palette > allowed || sol.coloring.colors_used() > sol.palette as usize {
            runs.palette_over += 1;
        }
        add_audit(&mut runs.audit, &sol.audit);
        runs.return_checks += sol.return_checks;
        runs.return_violations += sol.return_violations;
    }
    runs
}

fn criterion_4(runs: &AecRuns) -> Verdict {
    verdict(
        runs.graphs >= 100 && runs.invalid == 0 && runs.palette_over == 0 && runs.budget == 0,
        format!(
            "{} graphs (d<=5, Delta<=24, n<=200): {} invalid, {} over palette, {} out of budget, {} walk steps",
            runs.graphs, runs.invalid, runs.palette_over, runs.budget, runs.steps
        ),
    )
}

/// Extra runs with a deliberately small `Q` so that the walk takes steps and
/// the step-level assertions are exercised.
fn forced_audit() -> (aec::AuditSnapshot, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let mut total = aec::AuditSnapshot::default();
    let mut steps = 0;
    for i in 0..40u64 {
        let g = aec::random_degenerate(rng.gen_range(20..=80), 3, 8, &mut rng);
        let mut opts = AecOptions::new(i, 20_000);
        opts.q = Some(3);
        opts.strict = true;
        let sol = aec::aec_solve_with(&g, &opts);
        steps += sol.steps;
        add_audit(&mut total, &sol.audit);
    }
    (total, steps)
}

fn criterion_7(runs: &AecRuns) -> Verdict {
    let (forced, forced_steps) = forced_audit();
    let a = &runs.audit;
    verdict(
        a.violations() == 0 && runs.return_violations == 0 && forced.violations() == 0,
        format!(
            "criterion-4 runs: {} colorings audited (max forbidden {}), {} predecessor checks, {} state checks, {} return checks, {} violations; small-palette runs: {} steps, {} predecessor checks, {} violations",
            a.queries,
            a.max_forbidden,
            a.predecessor_checks,
            a.omega_checks,
            runs.return_checks,
            a.violations() + runs.return_violations,
            forced_steps,
            forced.predecessor_checks,
            forced.violations()
        ),
    )
}

// 5 ---------------------------------------------------------------------

fn criterion_5() -> Verdict {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut min_delta: f64 = 1.0;
    // dΔ a perfect square, so 16√(dΔ) is an integer
    for (d, delta) in [(1usize, 16usize), (1, 4), (2, 8), (3, 12), (1, 1), (4, 16)] {
        let q = aec::q_for(d, delta);
        let root = ((d * delta) as f64).sqrt() as u32;
        ok &= q == 16 * root;
        let psi = aec::closed_form_ln_psi(d, delta);
        let r = match aec::aec_condition_check(d, delta, q, &psi, 80) {
            Ok(r) => r,
            Err(_) => return verdict(false, format!("d={d} Delta={delta}: evaluation failed")),
        };
        for b in &r.bounds {
            let closed = 2f64.powf(-1.5 * b.k as f64 + 5.0);
            worst = worst.max(((b.zeta - closed) / closed).abs());
        }
        ok &= r.pass;
        min_delta = min_delta.min(r.delta_lower());
    }
    // δ inherits the bound's pinned relative error
    ok &= worst <= 1e-12 && min_delta >= 15.0 / 16.0 - 1e-12;
    verdict(ok, format!("max relative error {worst:e}, delta >= {min_delta}"))
}

// 6 ---------------------------------------------------------------------

fn random_connected(rng: &mut ChaCha8Rng) -> SimpleGraph {
    loop {
        let n = rng.gen_range(3..=8);
        let p: f64 = rng.gen_range(0.2..0.9);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen::<f64>() < p {
                    edges.push((a, b));
                }
            }
        }
        let g = SimpleGraph::new(n, &edges).unwrap();
        if g.is_connected() {
            return g;
        }
    }
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut checks = 0u64;
    let mut violations = 0u64;
    let graphs = 600;
    for _ in 0..graphs {
        let g = random_connected(&mut rng);
        let d = aec::degeneracy_orient(&g).d;
        let delta = g.max_degree();
        for e in 0..g.num_edges() {
            for k in 3..=8 {
                let count = aec::count_cycles_through_edge(&g, e, k, 10_000_000).expect("small graph");
                checks += 1;
                if count as f64 > aec::kral_bound(d, delta, k) {
                    violations += 1;
                }
            }
        }
    }
    verdict(
        violations == 0,
        format!("{graphs} connected graphs, {checks} (edge, k) pairs, {violations} violations"),
    )
}

// 8 ---------------------------------------------------------------------

/// The trajectory behind an enumerated leaf, with parents for the
/// recursive walk recomputed by replaying the choice over the states.
fn leaf_trajectory<C: FlawChoice<ExplicitInstance>>(
    inst: &ExplicitInstance,
    kind: WalkKind,
    mut choice: C,
    states: &[usize],
) -> Trajectory<usize, usize> {
    let mut steps = Vec::new();
    for i in 1..states.len() {
        let c = choice.next(inst, &states[i - 1]).expect("a flaw was addressed");
        steps.push(Step {
            flaw: c.flaw,
            parent: c.parent,
            state: Some(states[i]),
            present: Some(inst.present_flaws(&states[i])),
        });
    }
    Trajectory {
        kind,
        seed: 0,
        initial: states[0],
        initial_present: Some(inst.present_flaws(&states[0])),
        steps,
        final_state: *states.last().unwrap(),
        outcome: Outcome::BudgetExhausted,
        steps_taken: (states.len() - 1) as u64,
        return_checks: 0,
        return_violations: 0,
    }
}

fn forest_of(log: &TraceLog) -> Option<(String, Vec<usize>)> {
    let order = log.order();
    let forest = match log.kind {
        WalkKind::Permutation => break_forest(&break_sequence(log).ok()?, &order).ok()?,
        WalkKind::Recursive => recursive_forest(log).ok()?,
    };
    let back = reconstruct_witness(&forest, &order).ok()?;
    Some((forest.canonical(&order), back))
}

/// Witness ids mapped back to instance flaws.
fn global_witness(inst: &ExplicitInstance, log: &TraceLog, w: &[usize]) -> Vec<usize> {
    w.iter().map(|&f| inst.flaw_index(&log.flaws[f]).unwrap()).collect()
}

fn criterion_8() -> Verdict {
    let inst = corpus::toy_a();
    let r = build_causality(&inst);
    let mut round_trips = 0;
    let mut failures = 0;
    for kind in [WalkKind::Permutation, WalkKind::Recursive] {
        for seed in 0..1000 {
            let cfg = WalkConfig::new(seed, 40).recording(Recording::Full);
            let traj = match kind {
                WalkKind::Permutation => permutation_walk(&inst, &cfg),
                WalkKind::Recursive => recursive_walk(&inst, &r, &cfg),
            };
            let log = TraceLog::from_trajectory(&inst, &traj).unwrap();
            let parsed = TraceLog::parse(&log.to_text()).ok();
            round_trips += 1;
            match forest_of(&log) {
                Some((_, back))
                    if parsed.as_ref() == Some(&log) && global_witness(&inst, &log, &back) == traj.witness() => {}
                _ => failures += 1,
            }
        }
    }
    // injectivity: canonical forest -> witness, per length and engine
    let mut sequences = 0;
    let mut collisions = 0;
    for t in 1..=5 {
        for engine in [Engine::Permutation, Engine::Recursive(&r)] {
            let mut seen: HashMap<String, Vec<usize>> = HashMap::new();
            visit_trajectories(&inst, engine, t, EnumerationOptions::default(), |leaf| {
                let traj = match engine {
                    Engine::Permutation => leaf_trajectory(&inst, WalkKind::Permutation, PermutationChoice, leaf.states),
                    Engine::Recursive(g) => {
                        leaf_trajectory(&inst, WalkKind::Recursive, RecursiveChoice::new(g, false), leaf.states)
                    }
                };
                assert_eq!(traj.witness(), leaf.witness);
                let log = TraceLog::from_trajectory(&inst, &traj).unwrap();
                let Some((key, _)) = forest_of(&log) else {
                    collisions += 1;
                    return;
                };
                // canonical forms use log ids; key them by instance names
                let key = format!("{key}|{}", log.flaws.join(" "));
                match seen.get(&key) {
                    Some(w) if w.as_slice() != leaf.witness => collisions += 1,
                    Some(_) => {}
                    None => {
                        sequences += 1;
                        seen.insert(key, leaf.witness.to_vec());
                    }
                }
            })
            .unwrap();
        }
    }
    verdict(
        failures == 0 && collisions == 0,
        format!(
            "{round_trips} recorded trajectories, {failures} round-trip failures; {sequences} distinct forests for lengths 1..=5, {collisions} collisions"
        ),
    )
}

// 9 ---------------------------------------------------------------------

fn criterion_9() -> Verdict {
    let mut checked = 0;
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for inst in corpus::all().iter().filter(|i| atomic_regenerative(i)) {
        checked += 1;
        match check_atomic_harmonic(inst) {
            Ok(rep) => ok &= rep.pass,
            Err(_) => ok = false,
        }
        for f in 0..inst.num_flaws() {
            let mu_f: f64 = inst.members(f).iter().map(|&s| inst.mu(s)).sum();
            for &s in inst.members(f) {
                let acts = inst.actions(f, s);
                let mass: f64 = acts.iter().map(|&(t, _)| inst.mu(t)).sum();
                // declared ρ against μ(τ)/μ(A(f,σ))
                for &(t, p) in acts {
                    worst = worst.max((p - inst.mu(t) / mass).abs());
                }
                // Σ_{τ∈A(f,σ)} μ(τ) = μ(σ)/μ(f)
                worst = worst.max((mass - inst.mu(s) / mu_f).abs());
            }
        }
    }
    ok &= worst <= 1e-9 && checked > 0;
    verdict(ok, format!("{checked} atomic regenerative instances, max deviation {worst:e}"))
}

// 10 --------------------------------------------------------------------

fn criterion_10() -> Verdict {
    let psi = PsiAssignment::new(vec![0.4, 0.7, 0.3]).unwrap();
    let mut g = DependencyGraph::new(3);
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    let roots = SetFamily::Independent(vec![0, 1, 2], g.clone());
    let lists = vec![
        SetFamily::Independent(vec![0, 1], g.clone()),
        SetFamily::Independent(vec![0, 1, 2], g.clone()),
        SetFamily::Independent(vec![1, 2], g.clone()),
    ];
    let process = BranchingProcess::new(psi, roots, lists).unwrap();
    let samples = 100_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (counts, truncated) = sample_frequencies(&process, samples, 60, &mut rng);
    let order = flawwalk::FlawOrder::identity(3);
    let mut compared = 0;
    let mut outside = 0;
    let mut mass = 0.0;
    for f in process.enumerate(4) {
        let p = process.probability(&f).unwrap();
        mass += p;
        let freq = counts.get(&f.canonical(&order)).copied().unwrap_or(0) as f64 / samples as f64;
        let sd = (p * (1.0 - p) / samples as f64).sqrt();
        compared += 1;
        if (freq - p).abs() > 4.0 * sd {
            outside += 1;
        }
    }
    verdict(
        outside == 0 && mass <= 1.0 + 1e-12,
        format!(
            "{samples} samples ({truncated} truncated), {compared} forests with <=4 vertices compared, {outside} outside 4 sd, enumerated mass {mass:.6}"
        ),
    )
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = f();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {n:>2}: {} ({secs:.2}s) {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        if !v.pass {
            failed += 1;
        }
    };
    report(1, &mut criterion_1);
    report(2, &mut criterion_2);
    report(3, &mut criterion_3);
    let mut runs = None;
    report(4, &mut || {
        let r = aec_runs();
        let v = criterion_4(&r);
        runs = Some(r);
        v
    });
    report(5, &mut criterion_5);
    report(6, &mut criterion_6);
    let runs = runs.expect("criterion 4 ran");
    report(7, &mut || criterion_7(&runs));
    report(8, &mut criterion_8);
    report(9, &mut criterion_9);
    report(10, &mut criterion_10);
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
