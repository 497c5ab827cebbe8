use std::fs;
use std::path::Path;
use std::time::Instant;

use flawwalk::aec::analysis::{aec_condition_check, aec_t0, closed_form_ln_psi};
use flawwalk::aec::graph::SimpleGraph;
use flawwalk::aec::{run_instance, AecInstance, AecOptions, AecSolution};
use flawwalk::causality::{build_causality, CausalityGraph};
use flawwalk::charges::{is_atomic, ChargeMode, ChargeTable};
use flawwalk::conditions::{explicit_condition, grid_constant_psi, step_bound, ConditionReport, PsiAssignment};
use flawwalk::forests::{
    break_forest, break_sequence, check_break_structure, check_recursive_structure, reconstruct_witness,
    recursive_forest, WitnessForest,
};
use flawwalk::format::parse_instance;
use flawwalk::oracle::{verify_lemma1, verify_tightness, Engine};
use flawwalk::sat::{parse_dimacs, format_solution, sat_condition, solve_sat as run_sat, MtInstance, PsiChoice};
use flawwalk::walks::trace::TraceLog;
use flawwalk::walks::{self, Outcome, Recording, WalkConfig, WalkKind};
use flawwalk::{Error, ExplicitInstance, Instance};
use rayon::prelude::*;

use crate::record::{verdict, Record};
use crate::{CheckArgs, ChargesArgs, ForestArgs, GraphsArgs, OracleArgs, RunArgs, SolveAecArgs, SolveSatArgs, WalkArgs};

pub type CmdResult = Result<i32, String>;

pub const EXIT_FAIL: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn err(e: Error) -> String {
    e.to_string()
}

fn ext(path: &Path) -> &str {
    path.extension().and_then(|s| s.to_str()).unwrap_or("")
}

fn load_explicit(path: &Path) -> Result<ExplicitInstance, String> {
    parse_instance(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_graph(path: &Path) -> Result<SimpleGraph, String> {
    SimpleGraph::parse_edge_list(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_cnf(path: &Path) -> Result<flawwalk::sat::CnfInstance, String> {
    parse_dimacs(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

/// Seeds of all runs, in order. An absent seed is drawn and reported.
fn seeds(run: &RunArgs) -> Result<Vec<u64>, String> {
    if run.runs == 0 {
        return Err("--runs must be at least 1".into());
    }
    if run.trace.is_some() && run.runs > 1 {
        return Err("--trace needs a single run".into());
    }
    let first = run.seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed={s}");
        s
    });
    Ok((0..run.runs).map(|i| first.wrapping_add(i)).collect())
}

/// Runs `f` once per seed on `jobs` threads and returns results in seed order.
fn parallel<T: Send>(jobs: usize, seeds: &[u64], f: impl Fn(u64) -> T + Sync) -> Result<Vec<T>, String> {
    if jobs <= 1 || seeds.len() == 1 {
        return Ok(seeds.iter().map(|&s| f(s)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| e.to_string())?;
    Ok(pool.install(|| seeds.par_iter().map(|&s| f(s)).collect()))
}

fn exit_for(outcomes: impl IntoIterator<Item = Outcome>) -> i32 {
    if outcomes.into_iter().any(|o| o == Outcome::BudgetExhausted) {
        EXIT_BUDGET
    } else {
        0
    }
}

fn parse_psi_choice(text: &str) -> Result<PsiChoice, String> {
    if text == "grid" {
        return Ok(PsiChoice::Grid);
    }
    text.parse::<f64>()
        .map(PsiChoice::Constant)
        .map_err(|_| format!("--psi: expected a number or `grid`, got {text}"))
}

fn walk_label(kind: WalkKind) -> &'static str {
    kind.as_str()
}

pub fn solve_sat(a: &SolveSatArgs) -> CmdResult {
    let cnf = load_cnf(&a.input)?;
    let kind: WalkKind = a.run.walk.into();
    let psi = parse_psi_choice(&a.psi)?;
    if a.run.trace.is_some() {
        return Err("solve-sat does not write traces; use `walk` on an explicit instance".into());
    }
    let seeds = seeds(&a.run)?;
    let condition = sat_condition(&MtInstance::new(cnf.clone()), kind, &psi).map_err(err)?;
    // the condition is evaluated once above; the walks only need a cheap psi
    let reports = parallel(a.run.jobs, &seeds, |seed| {
        let start = Instant::now();
        let r = run_sat(&cnf, kind, &PsiChoice::Constant(1.0), seed, a.run.max_steps);
        (seed, r, start.elapsed().as_millis())
    })?;
    let mut outcomes = Vec::new();
    for (i, (seed, r, ms)) in reports.into_iter().enumerate() {
        let r = r.map_err(err)?;
        let mut rec = Record::new("solve-sat");
        rec.push("instance", a.input.display())
            .push("walk", walk_label(kind))
            .push("seed", seed)
            .push("vars", cnf.num_vars())
            .push("clauses", cnf.num_clauses())
            .push("steps", r.steps)
            .push("outcome", r.outcome.as_str())
            .push("condition", verdict(condition.pass))
            .push("delta", condition.delta)
            .push("t0", condition.t0.map_or("-".to_string(), |t| t.to_string()))
            .push("wall_ms", ms);
        println!("{rec}");
        if i == 0 {
            if let (Some(path), Some(x)) = (&a.output, &r.assignment) {
                write(path, &format_solution(x))?;
            }
        }
        outcomes.push(r.outcome);
    }
    Ok(exit_for(outcomes))
}

fn aec_record(input: &Path, kind: WalkKind, seed: u64, s: &AecSolution, ms: u128) -> Record {
    let mut rec = Record::new("solve-aec");
    rec.push("instance", input.display())
        .push("walk", walk_label(kind))
        .push("seed", seed)
        .push("d", s.d)
        .push("Delta", s.delta)
        .push("Q", s.q)
        .push("palette", s.palette)
        .push("colors_used", s.coloring.colors_used())
        .push("steps", s.steps)
        .push("outcome", s.outcome.as_str())
        .push("valid", s.valid)
        .push("audit_violations", s.audit.violations())
        .push("wall_ms", ms);
    rec
}

pub fn solve_aec(a: &SolveAecArgs) -> CmdResult {
    let graph = load_graph(&a.input)?;
    let kind: WalkKind = a.run.walk.into();
    let seeds = seeds(&a.run)?;
    if a.q == Some(0) {
        return Err("--q must be positive".into());
    }
    let results = parallel(a.run.jobs, &seeds, |seed| {
        let start = Instant::now();
        let mut opts = AecOptions::new(seed, a.run.max_steps);
        opts.walk = kind;
        opts.q = a.q;
        opts.strict = a.strict;
        let build = || {
            match a.q {
                Some(q) => AecInstance::with_q(graph.clone(), q),
                None => AecInstance::new(graph.clone()),
            }
            .strict(a.strict)
        };
        let inst = build();
        let trace = match &a.run.trace {
            Some(_) => {
                // a separate instance keeps the audit counts of the reported run
                let inst = build();
                let config = WalkConfig::new(seed, a.run.max_steps).recording(Recording::Full);
                let traj = match kind {
                    WalkKind::Recursive => {
                        walks::recursive_walk(&inst, &flawwalk::aec::EdgeIntersection, &config)
                    }
                    WalkKind::Permutation => walks::permutation_walk(&inst, &config),
                };
                Some(TraceLog::from_trajectory(&inst, &traj).map(|l| l.to_text()))
            }
            None => None,
        };
        let sol = run_instance(&inst, &opts);
        (seed, sol, trace, start.elapsed().as_millis())
    })?;
    let mut status = 0;
    for (i, (seed, sol, trace, ms)) in results.into_iter().enumerate() {
        println!("{}", aec_record(&a.input, kind, seed, &sol, ms));
        if i == 0 {
            if let Some(path) = &a.output {
                write(path, &sol.coloring.to_text(&graph))?;
            }
            if let (Some(path), Some(t)) = (&a.run.trace, trace) {
                write(path, &t.map_err(err)?)?;
            }
        }
        if sol.outcome == Outcome::BudgetExhausted {
            status = status.max(EXIT_BUDGET);
        } else if !sol.valid || sol.audit.violations() > 0 {
            status = status.max(EXIT_FAIL);
        }
    }
    Ok(status)
}

/// `--psi` for explicit instances: a constant, one value per flaw, or the
/// best constant on a grid when absent.
fn explicit_psi(
    inst: &ExplicitInstance,
    kind: WalkKind,
    text: Option<&str>,
    mode: Option<ChargeMode>,
) -> Result<PsiAssignment, String> {
    let m = inst.num_flaws();
    match text {
        None | Some("grid") => {
            let best = grid_constant_psi(|x| {
                PsiAssignment::constant(m, x)
                    .and_then(|p| explicit_condition(inst, kind, &p, mode))
                    .map_or(f64::INFINITY, |r| r.max_zeta())
            });
            PsiAssignment::constant(m, best).map_err(err)
        }
        Some(t) => {
            let values = t
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| format!("--psi: not a number: {v}")))
                .collect::<Result<Vec<_>, _>>()?;
            if values.len() == 1 {
                PsiAssignment::constant(m, values[0]).map_err(err)
            } else {
                PsiAssignment::new(values).map_err(err)
            }
        }
    }
}

fn condition_output(rec: &mut Record, report: &ConditionReport, s: f64) {
    print!("{}", report.to_table());
    rec.push("variant", report.variant.as_str())
        .push("delta", report.delta)
        .push("t0", report.t0.map_or("-".to_string(), |t| t.to_string()));
    match report.step_bound(s) {
        Ok(b) => rec.push("step_bound", b),
        Err(_) => rec.push("step_bound", "-"),
    };
    rec.push("verdict", verdict(report.pass));
}

pub fn check(a: &CheckArgs) -> CmdResult {
    let kind: WalkKind = a.walk.into();
    let mode = a.mode.map(ChargeMode::from);
    let mut rec = Record::new("check");
    rec.push("instance", a.instance.display()).push("walk", walk_label(kind));
    let pass = match ext(&a.instance) {
        "cnf" => {
            if mode.is_some() {
                return Err("--mode applies to explicit instances only".into());
            }
            let cnf = load_cnf(&a.instance)?;
            let psi = parse_psi_choice(a.psi.as_deref().unwrap_or("grid"))?;
            let report = sat_condition(&MtInstance::new(cnf), kind, &psi).map_err(err)?;
            condition_output(&mut rec, &report, a.s);
            report.pass
        }
        "edges" => {
            if a.psi.is_some() || mode.is_some() {
                return Err("--psi and --mode do not apply to graphs".into());
            }
            let inst = AecInstance::new(load_graph(&a.instance)?);
            let (d, delta) = (inst.degeneracy(), inst.max_degree());
            if d == 0 {
                // no edges, hence no flaws
                rec.push("d", 0).push("verdict", "PASS");
                println!("{rec}");
                return Ok(0);
            }
            let ln_psi = closed_form_ln_psi(d, delta);
            let report = aec_condition_check(d, delta, inst.q(), &ln_psi, a.k_max).map_err(err)?;
            print!("{}", report.to_text());
            let span = inst.span().map_err(err)?;
            let (t0, exact) = aec_t0(inst.graph().num_edges(), inst.palette(), &span, &ln_psi);
            rec.push("d", d)
                .push("Delta", delta)
                .push("Q", inst.q())
                .push("palette", inst.palette())
                .push("max_zeta", report.max_zeta)
                .push("delta", report.delta_lower())
                .push("t0", if exact { t0.to_string() } else { "-".into() });
            if report.pass && exact {
                match step_bound(t0, report.delta_lower(), a.s) {
                    Ok(b) => rec.push("step_bound", b),
                    Err(_) => rec.push("step_bound", "-"),
                };
            }
            rec.push("verdict", verdict(report.pass));
            report.pass
        }
        "inst" => {
            let inst = load_explicit(&a.instance)?;
            let psi = explicit_psi(&inst, kind, a.psi.as_deref(), mode)?;
            let report = explicit_condition(&inst, kind, &psi, mode).map_err(err)?;
            condition_output(&mut rec, &report, a.s);
            report.pass
        }
        other => return Err(format!("unknown instance type `.{other}`; expected .inst, .cnf or .edges")),
    };
    println!("{rec}");
    Ok(if pass { 0 } else { EXIT_FAIL })
}

pub fn oracle(a: &OracleArgs) -> CmdResult {
    let inst = load_explicit(&a.instance)?;
    let table = ChargeTable::compute(&inst);
    let mode = a.mode.map_or_else(|| table.best_mode(), ChargeMode::from);
    let charges = table.charges(mode).map_err(err)?;
    let causality = build_causality(&inst);
    let kinds: Vec<WalkKind> = match a.walk {
        Some(w) => vec![w.into()],
        None => vec![WalkKind::Permutation, WalkKind::Recursive],
    };
    let tight = is_atomic(&inst) && table.regenerative_justified().is_ok();
    let mut pass = true;
    for kind in kinds {
        let engine = match kind {
            WalkKind::Permutation => Engine::Permutation,
            WalkKind::Recursive => Engine::Recursive(&causality),
        };
        let l1 = verify_lemma1(&inst, engine, a.t, &charges).map_err(err)?;
        let mut rec = Record::new("oracle");
        rec.push("instance", inst.name())
            .push("walk", walk_label(kind))
            .push("check", "charge-bound")
            .push("mode", mode.as_str())
            .push("t", a.t)
            .push("xi", l1.xi)
            .push("sequences", l1.sequences)
            .push("max_ratio", l1.max_ratio)
            .push("violations", l1.violations)
            .push("verdict", verdict(l1.pass));
        println!("{rec}");
        pass &= l1.pass;
        if tight {
            let tr = verify_tightness(&inst, engine, a.t).map_err(err)?;
            let mut rec = Record::new("oracle");
            rec.push("instance", inst.name())
                .push("walk", walk_label(kind))
                .push("check", "tightness")
                .push("t", a.t)
                .push("beta", tr.beta)
                .push("sequences", tr.sequences)
                .push("min_ratio", tr.min_ratio)
                .push("max_ratio", tr.max_ratio)
                .push("identity_deviation", format!("{:e}", tr.identity_deviation))
                .push("violations", tr.violations + tr.lower_witness_violations)
                .push("verdict", verdict(tr.pass));
            println!("{rec}");
            pass &= tr.pass;
        }
    }
    Ok(if pass { 0 } else { EXIT_FAIL })
}

/// Maps log-local flaw ids to instance flaw ids through their names.
fn instance_ids(log: &TraceLog, inst: &ExplicitInstance) -> Result<Vec<usize>, String> {
    log.flaws
        .iter()
        .map(|name| {
            inst.flaw_index(name)
                .ok_or_else(|| format!("flaw `{name}` of the trace is not in {}", inst.name()))
        })
        .collect()
}

pub fn forest(a: &ForestArgs) -> CmdResult {
    let log = TraceLog::parse(&read(&a.trace)?).map_err(|e| format!("{}: {e}", a.trace.display()))?;
    let order = log.order();
    let forest: WitnessForest = match log.kind {
        WalkKind::Permutation => break_forest(&break_sequence(&log).map_err(err)?, &order),
        WalkKind::Recursive => recursive_forest(&log),
    }
    .map_err(err)?;
    print!("{}", forest.indented(&order, |l| log.flaws[l].clone()));
    let witness = log.witness();
    let round_trip = reconstruct_witness(&forest, &order).map_err(err)? == witness;
    let mut rec = Record::new("forest");
    rec.push("trace", a.trace.display())
        .push("walk", walk_label(log.kind))
        .push("steps", witness.len())
        .push("vertices", forest.len())
        .push("canonical", forest.canonical(&order).replace(' ', ","))
        .push("round_trip", verdict(round_trip));
    let mut pass = round_trip;
    if let Some(path) = &a.instance {
        let inst = load_explicit(path)?;
        let ids = instance_ids(&log, &inst)?;
        let mapped = forest.map_labels(|l| ids[l]);
        let causality = build_causality(&inst);
        let span = inst.span_set();
        let structure = match log.kind {
            WalkKind::Permutation => check_break_structure(&mapped, &span, &causality),
            WalkKind::Recursive => check_recursive_structure(&mapped, &span, &causality),
        };
        if let Err(e) = &structure {
            eprintln!("structure: {e}");
        }
        rec.push("structure", verdict(structure.is_ok()));
        pass &= structure.is_ok();
    }
    println!("{rec}");
    Ok(if pass { 0 } else { EXIT_FAIL })
}

pub fn charges(a: &ChargesArgs) -> CmdResult {
    let inst = load_explicit(&a.instance)?;
    let table = ChargeTable::compute(&inst);
    let mode = a.mode.map_or_else(|| table.best_mode(), ChargeMode::from);
    if mode == ChargeMode::Regenerative {
        table.regenerative_justified().map_err(err)?;
    }
    print!("{}", table.to_report(&inst, mode));
    Ok(0)
}

pub fn walk(a: &WalkArgs) -> CmdResult {
    let inst = load_explicit(&a.instance)?;
    let kind: WalkKind = a.run.walk.into();
    let seeds = seeds(&a.run)?;
    let causality = build_causality(&inst);
    let recording = if a.run.trace.is_some() { Recording::Full } else { Recording::None };
    let results = parallel(a.run.jobs, &seeds, |seed| {
        let start = Instant::now();
        let config = WalkConfig::new(seed, a.run.max_steps).recording(recording);
        let traj = match kind {
            WalkKind::Permutation => walks::permutation_walk(&inst, &config),
            WalkKind::Recursive => walks::recursive_walk(&inst, &causality, &config),
        };
        (traj, start.elapsed().as_millis())
    })?;
    let mut outcomes = Vec::new();
    for (traj, ms) in &results {
        let mut rec = Record::new("walk");
        rec.push("instance", inst.name())
            .push("walk", walk_label(kind))
            .push("seed", traj.seed)
            .push("steps", traj.steps_taken)
            .push("outcome", traj.outcome.as_str())
            .push("final", inst.state_label(traj.final_state))
            .push("wall_ms", ms);
        println!("{rec}");
        outcomes.push(traj.outcome);
    }
    if let Some(path) = &a.run.trace {
        let log = TraceLog::from_trajectory(&inst, &results[0].0).map_err(err)?;
        write(path, &log.to_text())?;
    }
    Ok(exit_for(outcomes))
}

pub fn graphs(a: &GraphsArgs) -> CmdResult {
    let inst = load_explicit(&a.instance)?;
    let names = inst.flaw_names();
    let exact = build_causality(&inst);
    println!("# causality");
    print!("{}", exact.to_edge_list(names));
    let r = match &a.supergraph {
        Some(path) => {
            let g = CausalityGraph::parse_edge_list(&read(path)?, names)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            match g.certify_supergraph(&inst) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("flawwalk: {e}");
                    return Ok(EXIT_FAIL);
                }
            }
        }
        None => exact.clone(),
    };
    println!("# supergraph");
    print!("{}", r.to_edge_list(names));
    println!("# dependency");
    print!("{}", r.dependency_graph().to_edge_list(names));
    let mut rec = Record::new("graphs");
    rec.push("instance", inst.name())
        .push("flaws", inst.num_flaws())
        .push("causality_arcs", exact.num_arcs())
        .push("supergraph_arcs", r.num_arcs())
        .push("verdict", "PASS");
    println!("{rec}");
    Ok(0)
}
