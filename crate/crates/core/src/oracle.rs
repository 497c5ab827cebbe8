//! Exact verification on explicit instances: expands the walk's probability
//! tree to depth `t`, sums the probability of every witness sequence, and
//! checks the charge bound and its two-sided tight form against it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::causality::CausalityGraph;
use crate::charges::{check_regeneration, is_atomic};
use crate::error::{Error, Result};
use crate::instance::{ExplicitInstance, TOLERANCE};
use crate::walks::{FlawChoice, PermutationChoice, RecursiveChoice};

/// Default cap on expanded leaves.
pub const LEAF_LIMIT: u64 = 10_000_000;

/// Which flaw-choice mechanism drives the enumeration.
#[derive(Debug, Clone, Copy)]
pub enum Engine<'a> {
    Permutation,
    Recursive(&'a CausalityGraph),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationOptions {
    pub leaf_limit: u64,
    /// Skip branches whose probability falls below this; `None` is exact.
    pub prune_below: Option<f64>,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self {
            leaf_limit: LEAF_LIMIT,
            prune_below: None,
        }
    }
}

/// A completed length-`t` trajectory, as seen by a visitor.
pub struct Leaf<'a> {
    pub witness: &'a [usize],
    /// `σ_1, …, σ_{t+1}`.
    pub states: &'a [usize],
    pub probability: f64,
}

struct Walker<'a, V> {
    inst: &'a ExplicitInstance,
    t: usize,
    options: EnumerationOptions,
    leaves: u64,
    ended_early: f64,
    pruned: f64,
    witness: Vec<usize>,
    states: Vec<usize>,
    visit: V,
}

impl<V: FnMut(&Leaf<'_>)> Walker<'_, V> {
    fn expand<C: FlawChoice<ExplicitInstance>>(&mut self, mut choice: C, prob: f64) -> Result<()> {
        if let Some(floor) = self.options.prune_below {
            if prob < floor {
                self.pruned += prob;
                return Ok(());
            }
        }
        let state = *self.states.last().expect("at least the initial state");
        if self.witness.len() == self.t {
            self.leaves += 1;
            if self.leaves > self.options.leaf_limit {
                return Err(Error::BudgetOverflow {
                    limit: self.options.leaf_limit,
                });
            }
            (self.visit)(&Leaf {
                witness: &self.witness,
                states: &self.states,
                probability: prob,
            });
            return Ok(());
        }
        let Some(c) = choice.next(self.inst, &state) else {
            self.ended_early += prob;
            return Ok(());
        };
        self.witness.push(c.flaw);
        for &(to, p) in self.inst.actions(c.flaw, state) {
            self.states.push(to);
            self.expand(choice.clone(), prob * p)?;
            self.states.pop();
        }
        self.witness.pop();
        Ok(())
    }
}

/// Mass accounting of an enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Totals {
    pub leaves: u64,
    /// Probability that the walk stops before step `t`.
    pub ended_early: f64,
    pub pruned: f64,
}

/// Visits every `t`-step trajectory with positive probability.
pub fn visit_trajectories(
    inst: &ExplicitInstance,
    engine: Engine<'_>,
    t: usize,
    options: EnumerationOptions,
    visit: impl FnMut(&Leaf<'_>),
) -> Result<Totals> {
    let mut w = Walker {
        inst,
        t,
        options,
        leaves: 0,
        ended_early: 0.0,
        pruned: 0.0,
        witness: Vec::with_capacity(t),
        states: Vec::with_capacity(t + 1),
        visit,
    };
    for s in 0..inst.num_states() {
        let p = inst.theta(s);
        if p <= 0.0 {
            continue;
        }
        w.states.push(s);
        match engine {
            Engine::Permutation => w.expand(PermutationChoice, p)?,
            Engine::Recursive(r) => w.expand(RecursiveChoice::new(r, false), p)?,
        }
        w.states.pop();
    }
    Ok(Totals {
        leaves: w.leaves,
        ended_early: w.ended_early,
        pruned: w.pruned,
    })
}

/// Exact law of the first `t` addressed flaws.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessDistribution {
    pub t: usize,
    pub masses: BTreeMap<Vec<usize>, f64>,
    pub totals: Totals,
}

impl WitnessDistribution {
    pub fn probability(&self, witness: &[usize]) -> f64 {
        self.masses.get(witness).copied().unwrap_or(0.0)
    }

    /// Mass of all sequences plus the early-stopping mass.
    pub fn total_mass(&self) -> f64 {
        self.masses.values().sum::<f64>() + self.totals.ended_early + self.totals.pruned
    }
}

pub fn enumerate_witnesses(inst: &ExplicitInstance, engine: Engine<'_>, t: usize) -> Result<WitnessDistribution> {
    enumerate_witnesses_with(inst, engine, t, EnumerationOptions::default())
}

pub fn enumerate_witnesses_with(
    inst: &ExplicitInstance,
    engine: Engine<'_>,
    t: usize,
    options: EnumerationOptions,
) -> Result<WitnessDistribution> {
    let mut masses: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let totals = visit_trajectories(inst, engine, t, options, |leaf| {
        *masses.entry(leaf.witness.to_vec()).or_insert(0.0) += leaf.probability;
    })?;
    Ok(WitnessDistribution { t, masses, totals })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Report {
    pub t: usize,
    pub xi: f64,
    pub sequences: usize,
    /// Largest `Pr[W] / (ξ ∏ γ)`.
    pub max_ratio: f64,
    pub worst: Option<Vec<usize>>,
    pub violations: usize,
    pub pass: bool,
}

/// Checks `Pr[W_t = W] ≤ ξ ∏ γ_{w_i}` for every witness sequence.
pub fn verify_lemma1(inst: &ExplicitInstance, engine: Engine<'_>, t: usize, charges: &[f64]) -> Result<Lemma1Report> {
    if charges.len() != inst.num_flaws() {
        return Err(Error::PreconditionFailed("one charge per flaw is required".into()));
    }
    let dist = enumerate_witnesses(inst, engine, t)?;
    let xi = inst.xi();
    let mut report = Lemma1Report {
        t,
        xi,
        sequences: dist.masses.len(),
        max_ratio: 0.0,
        worst: None,
        violations: 0,
        pass: true,
    };
    for (w, &p) in &dist.masses {
        let bound = xi * w.iter().map(|&f| charges[f]).product::<f64>();
        let ratio = p / bound;
        if p > bound * (1.0 + TOLERANCE) {
            report.violations += 1;
        }
        if ratio > report.max_ratio {
            report.max_ratio = ratio;
            report.worst = Some(w.clone());
        }
    }
    report.pass = report.violations == 0;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TightnessReport {
    pub t: usize,
    pub beta: f64,
    pub sequences: usize,
    /// Range of `Pr[W] / ∏ μ(w_i)` over realizable sequences.
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub violations: usize,
    /// Largest relative deviation of a trajectory's probability from
    /// `(θ(σ_1)/μ(σ_1)) μ(σ_{t+1}) ∏ μ(w_i)`.
    pub identity_deviation: f64,
    /// Sequences whose most likely trajectory falls below
    /// `(θ(σ_1)/μ(σ_1)) μ(σ_{t+1}) ∏ μ(w_i)`.
    pub lower_witness_violations: usize,
    pub pass: bool,
}

/// Two-sided check `β ≤ Pr[W_t = W] / ∏ μ(w_i) ≤ 1/β` with `β = min μ`, on
/// atomic instances that regenerate μ at every flaw.
pub fn verify_tightness(inst: &ExplicitInstance, engine: Engine<'_>, t: usize) -> Result<TightnessReport> {
    if !is_atomic(inst) {
        return Err(Error::PreconditionFailed("action digraph is not atomic".into()));
    }
    if let Some(f) = (0..inst.num_flaws()).find(|&f| !check_regeneration(inst, f).pass) {
        return Err(Error::PreconditionFailed(format!(
            "flaw {} does not regenerate mu",
            inst.flaw_name(f)
        )));
    }
    let beta = inst.mu_vec().iter().copied().fold(f64::INFINITY, f64::min);
    let mut masses: BTreeMap<Vec<usize>, (f64, f64, f64)> = BTreeMap::new();
    let mut identity_dev: f64 = 0.0;
    visit_trajectories(inst, engine, t, EnumerationOptions::default(), |leaf| {
        let first = leaf.states[0];
        let last = *leaf.states.last().expect("non-empty");
        let measure: f64 = leaf.witness.iter().map(|&f| inst.flaw_measure(f)).product();
        let predicted = inst.theta(first) / inst.mu(first) * inst.mu(last) * measure;
        identity_dev = identity_dev.max((leaf.probability - predicted).abs() / predicted);
        let e = masses.entry(leaf.witness.to_vec()).or_insert((0.0, 0.0, 0.0));
        e.0 += leaf.probability;
        if leaf.probability > e.1 {
            e.1 = leaf.probability;
            e.2 = predicted;
        }
    })?;
    let mut report = TightnessReport {
        t,
        beta,
        sequences: masses.len(),
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
        violations: 0,
        identity_deviation: identity_dev,
        lower_witness_violations: 0,
        pass: true,
    };
    for (w, &(p, best, predicted)) in &masses {
        let measure: f64 = w.iter().map(|&f| inst.flaw_measure(f)).product();
        let ratio = p / measure;
        report.min_ratio = report.min_ratio.min(ratio);
        report.max_ratio = report.max_ratio.max(ratio);
        if ratio < beta * (1.0 - TOLERANCE) || ratio > (1.0 + TOLERANCE) / beta {
            report.violations += 1;
        }
        if best < predicted * (1.0 - TOLERANCE) {
            report.lower_witness_violations += 1;
        }
    }
    if masses.is_empty() {
        report.min_ratio = 0.0;
    }
    report.pass =
        report.violations == 0 && report.lower_witness_violations == 0 && identity_dev <= TOLERANCE;
    Ok(report)
}

impl Lemma1Report {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "check=charge-bound t={} xi={} sequences={} max_ratio={} violations={} verdict={}",
            self.t,
            self.xi,
            self.sequences,
            self.max_ratio,
            self.violations,
            if self.pass { "PASS" } else { "FAIL" }
        );
        out
    }
}

impl TightnessReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "check=tightness t={} beta={} sequences={} min_ratio={} max_ratio={} identity_deviation={:e} violations={} verdict={}",
            self.t,
            self.beta,
            self.sequences,
            self.min_ratio,
            self.max_ratio,
            self.identity_deviation,
            self.violations + self.lower_witness_violations,
            if self.pass { "PASS" } else { "FAIL" }
        );
        out
    }
}
