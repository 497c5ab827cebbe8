//! CNF formulas in the variable setting: one flaw per clause (the assignments
//! violating it), uniform measure over assignments, and Moser–Tardos
//! resampling of the clause's variables.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rand::Rng;

use crate::causality::{ArcProvenance, CausalityGraph};
use crate::conditions::{self, ConditionReport, PsiAssignment, SetFamily};
use crate::error::{Error, Result};
use crate::instance::{ExplicitBuilder, ExplicitInstance, FlawOrder, Instance};
use crate::walks::{self, Outcome, Recording, Supergraph, WalkConfig, WalkKind};

/// Largest variable count accepted by [`mt_explicit`].
pub const EXPLICIT_MAX_VARS: usize = 12;

/// A CNF formula over variables `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfInstance {
    n: usize,
    clauses: Vec<Vec<i32>>,
    /// 0-based variables of each clause, ascending.
    vbl: Vec<Vec<usize>>,
    tautology: Vec<bool>,
}

impl CnfInstance {
    /// Builds a formula; repeated literals are merged, clause order is kept.
    pub fn new(n: usize, clauses: Vec<Vec<i32>>) -> Result<Self> {
        let mut norm = Vec::with_capacity(clauses.len());
        let mut vbl = Vec::with_capacity(clauses.len());
        let mut tautology = Vec::with_capacity(clauses.len());
        for (k, clause) in clauses.into_iter().enumerate() {
            if clause.is_empty() {
                return Err(Error::InvalidInstance(format!("clause {} is empty", k + 1)));
            }
            let mut lits: Vec<i32> = Vec::with_capacity(clause.len());
            for lit in clause {
                let v = lit.unsigned_abs() as usize;
                if lit == 0 || v > n {
                    return Err(Error::InvalidInstance(format!(
                        "clause {} has literal {lit} outside 1..={n}",
                        k + 1
                    )));
                }
                if !lits.contains(&lit) {
                    lits.push(lit);
                }
            }
            let mut vars: Vec<usize> = lits.iter().map(|l| l.unsigned_abs() as usize - 1).collect();
            vars.sort_unstable();
            vars.dedup();
            tautology.push(vars.len() < lits.len());
            vbl.push(vars);
            norm.push(lits);
        }
        Ok(Self {
            n,
            clauses: norm,
            vbl,
            tautology,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clause(&self, c: usize) -> &[i32] {
        &self.clauses[c]
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    /// `vbl(c)` as 0-based variable indices, ascending.
    pub fn vbl(&self, c: usize) -> &[usize] {
        &self.vbl[c]
    }

    /// True if the clause contains a literal and its negation.
    pub fn is_tautology(&self, c: usize) -> bool {
        self.tautology[c]
    }

    /// `assignment[v]` is the value of variable `v + 1`.
    pub fn violates(&self, c: usize, assignment: &[bool]) -> bool {
        self.clauses[c]
            .iter()
            .all(|&lit| assignment[lit.unsigned_abs() as usize - 1] != (lit > 0))
    }

    pub fn violated(&self, assignment: &[bool]) -> Vec<usize> {
        (0..self.clauses.len())
            .filter(|&c| self.violates(c, assignment))
            .collect()
    }

    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        assignment.len() == self.n && (0..self.clauses.len()).all(|c| !self.violates(c, assignment))
    }

    /// `μ(f_c) = 2^{-|vbl(c)|}`, zero for tautologies.
    pub fn clause_measure(&self, c: usize) -> f64 {
        if self.tautology[c] {
            0.0
        } else {
            (-(self.vbl[c].len() as f64)).exp2()
        }
    }

    /// Clauses sharing a variable with `c`, `c` included, ascending.
    pub fn shared_variable_neighbors(&self, c: usize) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.clauses.len())
            .filter(|&d| self.vbl[d].iter().any(|v| self.vbl[c].binary_search(v).is_ok()))
            .collect();
        out.dedup();
        out
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.n, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                let _ = write!(out, "{l} ");
            }
            out.push_str("0\n");
        }
        out
    }
}

/// Parses DIMACS CNF. Clauses may span lines; `c` lines are comments and a
/// trailing `%` line (as in SATLIB files) ends the input.
pub fn parse_dimacs(text: &str) -> Result<CnfInstance> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<i32>> = Vec::new();
    let mut current: Vec<i32> = Vec::new();
    let mut last_line = 0;
    let err = |line: usize, message: String| Error::Parse { line, message };
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('c') {
            continue;
        }
        if content.starts_with('%') {
            break;
        }
        if content.starts_with('p') {
            if header.is_some() {
                return Err(err(line, "duplicate header".into()));
            }
            let toks: Vec<&str> = content.split_whitespace().collect();
            if toks.len() != 4 || toks[0] != "p" || toks[1] != "cnf" {
                return Err(err(line, "expected header `p cnf <vars> <clauses>`".into()));
            }
            let n = toks[2]
                .parse()
                .map_err(|_| err(line, format!("bad variable count {}", toks[2])))?;
            let m = toks[3]
                .parse()
                .map_err(|_| err(line, format!("bad clause count {}", toks[3])))?;
            header = Some((n, m));
            continue;
        }
        let (n, _) = header.ok_or_else(|| err(line, "clause before header".into()))?;
        for tok in content.split_whitespace() {
            let lit: i32 = tok
                .parse()
                .map_err(|_| err(line, format!("bad literal {tok}")))?;
            if lit == 0 {
                if current.is_empty() {
                    return Err(err(line, "empty clause".into()));
                }
                clauses.push(std::mem::take(&mut current));
            } else {
                if lit.unsigned_abs() as usize > n {
                    return Err(err(line, format!("literal {lit} exceeds {n} variables")));
                }
                current.push(lit);
            }
        }
        last_line = line;
    }
    let (n, m) = header.ok_or_else(|| err(0, "missing header".into()))?;
    if !current.is_empty() {
        clauses.push(current);
    }
    if clauses.len() != m {
        return Err(err(
            last_line,
            format!("header declares {m} clauses, found {}", clauses.len()),
        ));
    }
    CnfInstance::new(n, clauses)
}

/// Explicit Moser–Tardos instance on `{0,1}^n`. State `s` assigns variable
/// `j + 1` the bit `(s >> j) & 1`; labels list `x1 … xn` left to right.
pub fn mt_explicit(cnf: &CnfInstance) -> Result<ExplicitInstance> {
    let n = cnf.num_vars();
    if n > EXPLICIT_MAX_VARS {
        return Err(Error::TooLarge(format!(
            "{n} variables exceed the explicit limit of {EXPLICIT_MAX_VARS}"
        )));
    }
    let states = 1usize << n;
    let bits = |s: usize| -> Vec<bool> { (0..n).map(|j| (s >> j) & 1 == 1).collect() };
    let mut b = ExplicitBuilder::new("mt", states);
    b.labels(
        (0..states)
            .map(|s| {
                if n == 0 {
                    "-".to_string()
                } else {
                    bits(s).iter().map(|&x| if x { '1' } else { '0' }).collect()
                }
            })
            .collect(),
    );
    for c in 0..cnf.num_clauses() {
        let members: Vec<usize> = (0..states).filter(|&s| cnf.violates(c, &bits(s))).collect();
        let f = b.flaw(format!("c{}", c + 1), &members);
        let vars = cnf.vbl(c);
        let mask: usize = vars.iter().map(|&v| 1usize << v).sum();
        let k = vars.len();
        let p = 1.0 / (1usize << k) as f64;
        for &s in &members {
            for pattern in 0..(1usize << k) {
                let mut t = s & !mask;
                for (i, &v) in vars.iter().enumerate() {
                    if (pattern >> i) & 1 == 1 {
                        t |= 1 << v;
                    }
                }
                b.arc(f, s, t, p);
            }
        }
    }
    b.uniform_mu();
    b.build()
}

/// Implicit Moser–Tardos instance: states are assignments, flaws are clause
/// indices ordered by a [`FlawOrder`] (file order by default).
#[derive(Debug, Clone)]
pub struct MtInstance {
    cnf: CnfInstance,
    order: FlawOrder,
    /// Clauses mentioning each variable.
    occurrences: Vec<Vec<usize>>,
}

impl MtInstance {
    pub fn new(cnf: CnfInstance) -> Self {
        let order = FlawOrder::identity(cnf.num_clauses());
        Self::with_order(cnf, order)
    }

    pub fn with_order(cnf: CnfInstance, order: FlawOrder) -> Self {
        let mut occurrences = vec![Vec::new(); cnf.num_vars()];
        for c in 0..cnf.num_clauses() {
            for &v in cnf.vbl(c) {
                occurrences[v].push(c);
            }
        }
        Self {
            cnf,
            order,
            occurrences,
        }
    }

    pub fn cnf(&self) -> &CnfInstance {
        &self.cnf
    }

    pub fn order(&self) -> &FlawOrder {
        &self.order
    }

    /// `Γ(c)`: clauses sharing a variable with `c`, including `c`.
    pub fn neighborhood(&self, c: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.cnf.vbl(c)
            .iter()
            .flat_map(|&v| self.occurrences[v].iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// The declared causality digraph: `c → d` iff they share a variable.
    pub fn causality(&self) -> CausalityGraph {
        let mut g = CausalityGraph::new(self.cnf.num_clauses());
        for c in 0..self.cnf.num_clauses() {
            for d in self.neighborhood(c) {
                g.add_arc(c, d, ArcProvenance::Declared);
            }
        }
        g
    }

    pub fn charges(&self) -> Vec<f64> {
        (0..self.cnf.num_clauses())
            .map(|c| self.cnf.clause_measure(c))
            .collect()
    }
}

impl Instance for MtInstance {
    type State = Vec<bool>;
    type Flaw = usize;

    fn present_flaws(&self, state: &Vec<bool>) -> Vec<usize> {
        let mut v = self.cnf.violated(state);
        self.order.sort(&mut v);
        v
    }

    fn priority(&self, a: &usize, b: &usize) -> Ordering {
        self.order.cmp(*a, *b)
    }

    fn address<R: Rng + ?Sized>(&self, flaw: &usize, state: &Vec<bool>, rng: &mut R) -> Vec<bool> {
        let mut next = state.clone();
        for &v in self.cnf.vbl(*flaw) {
            next[v] = rng.gen();
        }
        next
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<bool> {
        (0..self.cnf.num_vars()).map(|_| rng.gen()).collect()
    }

    /// Every violable clause can be present initially under the uniform
    /// start.
    fn span(&self) -> Result<Vec<usize>> {
        let mut v: Vec<usize> = (0..self.cnf.num_clauses())
            .filter(|&c| !self.cnf.is_tautology(c))
            .collect();
        self.order.sort(&mut v);
        Ok(v)
    }

    fn describe_flaw(&self, flaw: &usize) -> String {
        format!("c{}", flaw + 1)
    }

    fn digest(&self, state: &Vec<bool>) -> u64 {
        // FNV-1a over the bits: stable across platforms and releases
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &b in state {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        h
    }
}

/// Restricts the recursive walk's guard to violated clauses sharing a
/// variable with the addressed clause.
#[derive(Debug, Clone, Copy, Default)]
pub struct SharedVariables;

impl Supergraph<MtInstance> for SharedVariables {
    fn present_neighbors(&self, inst: &MtInstance, state: &Vec<bool>, flaw: &usize) -> Vec<usize> {
        let mut v: Vec<usize> = inst
            .neighborhood(*flaw)
            .into_iter()
            .filter(|&d| inst.cnf.violates(d, state))
            .collect();
        inst.order.sort(&mut v);
        v
    }
}

/// How ψ is chosen for the condition report.
#[derive(Debug, Clone, PartialEq)]
pub enum PsiChoice {
    Constant(f64),
    /// The best constant ψ on a log grid for the evaluated condition.
    Grid,
}

#[derive(Debug, Clone)]
pub struct SatReport {
    pub assignment: Option<Vec<bool>>,
    pub steps: u64,
    pub outcome: Outcome,
    pub condition: ConditionReport,
}

/// Span size above which `T₀` under the cluster condition falls back to the
/// all-subsets sum, an upper bound on the independent-set sum.
const IND_SPAN_LIMIT: usize = 24;

/// Condition report for the MT instance: charges `2^{-|c|}`, `Γ(c)` = shared
/// variables, `θ = μ` so `ξ = 1`.
pub fn sat_condition(mt: &MtInstance, kind: WalkKind, psi: &PsiChoice) -> Result<ConditionReport> {
    let m = mt.cnf.num_clauses();
    let gamma = mt.charges();
    let neigh: Vec<Vec<usize>> = (0..m).map(|c| mt.neighborhood(c)).collect();
    let names: Vec<String> = (0..m).map(|c| mt.describe_flaw(&c)).collect();
    let graph = mt.causality().dependency_graph();
    let evaluate = |psi: &PsiAssignment, with_t0: bool| -> Result<ConditionReport> {
        let span = mt.span()?;
        match kind {
            WalkKind::Permutation => {
                let zetas = (0..m)
                    .map(|c| conditions::zeta_simple(gamma[c], psi, c, &neigh[c]))
                    .collect();
                let roots = SetFamily::AllSubsets(span);
                ConditionReport::new(
                    conditions::ConditionVariant::Simple,
                    names.clone(),
                    gamma.clone(),
                    psi.values().to_vec(),
                    zetas,
                    with_t0.then(|| conditions::horizon_t0(Some(1.0), psi, &roots)).transpose()?,
                )
            }
            WalkKind::Recursive => {
                let zetas = (0..m)
                    .map(|c| conditions::zeta_cluster(gamma[c], psi, c, &neigh[c], &graph))
                    .collect();
                let roots = if span.len() <= IND_SPAN_LIMIT {
                    SetFamily::Independent(span, graph.clone())
                } else {
                    SetFamily::AllSubsets(span)
                };
                ConditionReport::new(
                    conditions::ConditionVariant::Cluster,
                    names.clone(),
                    gamma.clone(),
                    psi.values().to_vec(),
                    zetas,
                    with_t0.then(|| conditions::horizon_t0(Some(1.0), psi, &roots)).transpose()?,
                )
            }
        }
    };
    match psi {
        PsiChoice::Constant(x) => evaluate(&PsiAssignment::constant(m, *x)?, true),
        PsiChoice::Grid => {
            let best = conditions::grid_constant_psi(|x| {
                PsiAssignment::constant(m, x)
                    .and_then(|p| evaluate(&p, false))
                    .map_or(f64::INFINITY, |r| r.max_zeta())
            });
            evaluate(&PsiAssignment::constant(m, best)?, true)
        }
    }
}

/// Runs Moser–Tardos with the chosen engine. The assignment, when returned,
/// has been checked against every clause.
pub fn solve_sat(
    cnf: &CnfInstance,
    kind: WalkKind,
    psi: &PsiChoice,
    seed: u64,
    max_steps: u64,
) -> Result<SatReport> {
    let mt = MtInstance::new(cnf.clone());
    let condition = sat_condition(&mt, kind, psi)?;
    let config = WalkConfig {
        max_steps,
        seed,
        recording: Recording::None,
        check_returns: false,
    };
    let traj = match kind {
        WalkKind::Permutation => walks::permutation_walk(&mt, &config),
        WalkKind::Recursive => walks::recursive_walk(&mt, &SharedVariables, &config),
    };
    let assignment = match traj.outcome {
        Outcome::Sink => {
            if !cnf.satisfied_by(&traj.final_state) {
                return Err(Error::PreconditionFailed(
                    "walk stopped at an assignment that violates a clause".into(),
                ));
            }
            Some(traj.final_state)
        }
        Outcome::BudgetExhausted => None,
    };
    Ok(SatReport {
        assignment,
        steps: traj.steps_taken,
        outcome: traj.outcome,
        condition,
    })
}

/// `v`-line solution text: `v 1 -2 3 0`.
pub fn format_solution(assignment: &[bool]) -> String {
    let mut out = String::from("v");
    for (j, &b) in assignment.iter().enumerate() {
        let lit = (j + 1) as i64;
        let _ = write!(out, " {}", if b { lit } else { -lit });
    }
    out.push_str(" 0\n");
    out
}

/// Random formula with `m` clauses of `k` distinct variables each.
pub fn random_k_cnf<R: Rng + ?Sized>(n: usize, m: usize, k: usize, rng: &mut R) -> CnfInstance {
    assert!(k <= n && k > 0);
    let clauses = (0..m)
        .map(|_| {
            let vars = rand::seq::index::sample(rng, n, k);
            vars.iter()
                .map(|v| {
                    let lit = v as i32 + 1;
                    if rng.gen() {
                        lit
                    } else {
                        -lit
                    }
                })
                .collect()
        })
        .collect();
    CnfInstance::new(n, clauses).expect("generated clauses are valid")
}
