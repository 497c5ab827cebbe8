//! The two walk engines. The Permutation Walk always addresses the greatest
//! present flaw. The Recursive Walk, after addressing `f`, keeps addressing
//! the greatest present flaw of `Γ_R(f)` (recursively) before returning.

pub mod trace;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{ExplicitInstance, Instance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WalkKind {
    Permutation,
    Recursive,
}

impl WalkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WalkKind::Permutation => "permutation",
            WalkKind::Recursive => "recursive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "permutation" => Some(WalkKind::Permutation),
            "recursive" => Some(WalkKind::Recursive),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recording {
    /// Step count and final state only.
    None,
    /// Addressed flaws and parent invocations.
    Witness,
    /// Additionally every state and its present flaws.
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkConfig {
    /// Maximum number of flaw addressings.
    pub max_steps: u64,
    pub seed: u64,
    pub recording: Recording,
    /// Check at every return of the Recursive Walk that the flaws present
    /// are a subset of those present at the call, minus the addressed flaw.
    pub check_returns: bool,
}

impl WalkConfig {
    pub fn new(seed: u64, max_steps: u64) -> Self {
        Self {
            max_steps,
            seed,
            recording: Recording::None,
            check_returns: false,
        }
    }

    pub fn recording(mut self, recording: Recording) -> Self {
        self.recording = recording;
        self
    }

    pub fn check_returns(mut self, on: bool) -> Self {
        self.check_returns = on;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Sink,
    BudgetExhausted,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Sink => "sink",
            Outcome::BudgetExhausted => "budget",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step<S, F> {
    pub flaw: F,
    /// Index (into the step list) of the invocation that spawned this one.
    pub parent: Option<usize>,
    /// State after the step, at full recording.
    pub state: Option<S>,
    /// Flaws present after the step, greatest first, at full recording.
    pub present: Option<Vec<F>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory<S, F> {
    pub kind: WalkKind,
    pub seed: u64,
    pub initial: S,
    pub initial_present: Option<Vec<F>>,
    pub steps: Vec<Step<S, F>>,
    pub final_state: S,
    pub outcome: Outcome,
    pub steps_taken: u64,
    /// Returns checked and returns violating the subset property.
    pub return_checks: u64,
    pub return_violations: u64,
}

impl<S: Clone, F: Clone> Trajectory<S, F> {
    pub fn witness(&self) -> Vec<F> {
        self.steps.iter().map(|s| s.flaw.clone()).collect()
    }

    /// `σ_1, …, σ_{t+1}` at full recording.
    pub fn states(&self) -> Option<Vec<S>> {
        let mut out = vec![self.initial.clone()];
        for s in &self.steps {
            out.push(s.state.clone()?);
        }
        Some(out)
    }
}

/// The flaw chosen next and the invocation that spawns it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Choice<F> {
    pub flaw: F,
    pub parent: Option<usize>,
}

/// A flaw-choice mechanism. `next` is asked at every state; returning a
/// choice commits the caller to addressing it as the next step.
pub trait FlawChoice<I: Instance>: Clone {
    fn next(&mut self, inst: &I, state: &I::State) -> Option<Choice<I::Flaw>>;

    /// `(checked, violated)` return counts so far.
    fn return_audit(&self) -> (u64, u64) {
        (0, 0)
    }
}

/// Present flaws of `Γ_R(flaw)` in a state, greatest first. Implementations
/// must include every present flaw that `flaw` can cause.
pub trait Supergraph<I: Instance> {
    fn present_neighbors(&self, inst: &I, state: &I::State, flaw: &I::Flaw) -> Vec<I::Flaw>;
}

/// Every present flaw is a neighbour: disables the recursion filter, under
/// which the Recursive Walk reduces to the Permutation Walk.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unfiltered;

impl<I: Instance> Supergraph<I> for Unfiltered {
    fn present_neighbors(&self, inst: &I, state: &I::State, _flaw: &I::Flaw) -> Vec<I::Flaw> {
        inst.present_flaws(state)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PermutationChoice;

impl<I: Instance> FlawChoice<I> for PermutationChoice {
    fn next(&mut self, inst: &I, state: &I::State) -> Option<Choice<I::Flaw>> {
        inst.present_flaws(state).into_iter().next().map(|flaw| Choice { flaw, parent: None })
    }
}

#[derive(Debug, Clone)]
struct Frame<F> {
    flaw: F,
    step: usize,
    /// `U(σ)` at the call, kept when returns are checked.
    before: Option<Vec<F>>,
}

/// The Recursive Walk's call stack, run iteratively.
#[derive(Debug)]
pub struct RecursiveChoice<'g, I: Instance, G> {
    graph: &'g G,
    stack: Vec<Frame<I::Flaw>>,
    steps: usize,
    check: bool,
    checked: u64,
    violated: u64,
}

impl<I: Instance, G> Clone for RecursiveChoice<'_, I, G> {
    fn clone(&self) -> Self {
        Self {
            graph: self.graph,
            stack: self.stack.clone(),
            steps: self.steps,
            check: self.check,
            checked: self.checked,
            violated: self.violated,
        }
    }
}

impl<'g, I: Instance, G: Supergraph<I>> RecursiveChoice<'g, I, G> {
    pub fn new(graph: &'g G, check_returns: bool) -> Self {
        Self {
            graph,
            stack: Vec::new(),
            steps: 0,
            check: check_returns,
            checked: 0,
            violated: 0,
        }
    }

    fn push(&mut self, inst: &I, state: &I::State, flaw: I::Flaw, parent: Option<usize>, present: Option<Vec<I::Flaw>>) -> Choice<I::Flaw> {
        let before = if self.check {
            Some(present.unwrap_or_else(|| inst.present_flaws(state)))
        } else {
            None
        };
        self.stack.push(Frame {
            flaw: flaw.clone(),
            step: self.steps,
            before,
        });
        self.steps += 1;
        Choice { flaw, parent }
    }
}

impl<I: Instance, G: Supergraph<I>> FlawChoice<I> for RecursiveChoice<'_, I, G> {
    fn next(&mut self, inst: &I, state: &I::State) -> Option<Choice<I::Flaw>> {
        loop {
            let Some(top) = self.stack.last() else {
                let present = inst.present_flaws(state);
                let flaw = present.first()?.clone();
                return Some(self.push(inst, state, flaw, None, Some(present)));
            };
            let guard = self.graph.present_neighbors(inst, state, &top.flaw);
            if let Some(flaw) = guard.into_iter().next() {
                let parent = Some(top.step);
                return Some(self.push(inst, state, flaw, parent, None));
            }
            let frame = self.stack.pop().expect("stack is non-empty");
            if let Some(before) = frame.before {
                // the guard already excludes Γ_R(f); what remains is
                // U(τ) ⊆ U(σ) \ {f}
                self.checked += 1;
                let now = inst.present_flaws(state);
                if now.iter().any(|g| *g == frame.flaw || !before.contains(g)) {
                    self.violated += 1;
                }
            }
        }
    }

    fn return_audit(&self) -> (u64, u64) {
        (self.checked, self.violated)
    }
}

/// Runs a walk driven by any flaw-choice mechanism.
pub fn run_walk<I: Instance, C: FlawChoice<I>>(
    inst: &I,
    mut choice: C,
    kind: WalkKind,
    config: &WalkConfig,
) -> Trajectory<I::State, I::Flaw> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let initial = inst.sample_initial(&mut rng);
    let full = config.recording == Recording::Full;
    let initial_present = full.then(|| inst.present_flaws(&initial));
    let mut state = initial.clone();
    let mut steps = Vec::new();
    let mut taken = 0u64;
    let outcome = loop {
        let Some(c) = choice.next(inst, &state) else {
            break Outcome::Sink;
        };
        if taken >= config.max_steps {
            break Outcome::BudgetExhausted;
        }
        state = inst.address(&c.flaw, &state, &mut rng);
        taken += 1;
        match config.recording {
            Recording::None => {}
            Recording::Witness => steps.push(Step {
                flaw: c.flaw,
                parent: c.parent,
                state: None,
                present: None,
            }),
            Recording::Full => steps.push(Step {
                flaw: c.flaw,
                parent: c.parent,
                present: Some(inst.present_flaws(&state)),
                state: Some(state.clone()),
            }),
        }
    };
    let (return_checks, return_violations) = choice.return_audit();
    Trajectory {
        kind,
        seed: config.seed,
        initial,
        initial_present,
        steps,
        final_state: state,
        outcome,
        steps_taken: taken,
        return_checks,
        return_violations,
    }
}

pub fn permutation_walk<I: Instance>(inst: &I, config: &WalkConfig) -> Trajectory<I::State, I::Flaw> {
    run_walk(inst, PermutationChoice, WalkKind::Permutation, config)
}

pub fn recursive_walk<I: Instance, G: Supergraph<I>>(
    inst: &I,
    graph: &G,
    config: &WalkConfig,
) -> Trajectory<I::State, I::Flaw> {
    run_walk(
        inst,
        RecursiveChoice::new(graph, config.check_returns),
        WalkKind::Recursive,
        config,
    )
}

/// Replays a fully recorded trajectory on an explicit instance: every step's
/// flaw is present at its source, its target is an action, and for the
/// Permutation Walk the flaw is the greatest present one.
pub fn replay_check(inst: &ExplicitInstance, traj: &Trajectory<usize, usize>) -> Result<()> {
    let states = traj
        .states()
        .ok_or_else(|| Error::PreconditionFailed("trajectory was not fully recorded".into()))?;
    for (i, step) in traj.steps.iter().enumerate() {
        let (from, to) = (states[i], states[i + 1]);
        let bad = |what: &str| {
            Err(Error::PreconditionFailed(format!(
                "step {}: {what} ({} at {})",
                i + 1,
                inst.flaw_name(step.flaw),
                inst.state_label(from)
            )))
        };
        if !inst.contains(step.flaw, from) {
            return bad("flaw absent from its source state");
        }
        if inst.rho(step.flaw, from, to) <= 0.0 {
            return bad("target is not an action");
        }
        if traj.kind == WalkKind::Permutation && inst.present(from).first() != Some(&step.flaw) {
            return bad("flaw is not the greatest present flaw");
        }
        if step.present.as_deref() != Some(inst.present(to)) {
            return bad("recorded present flaws disagree with the target state");
        }
    }
    if traj.outcome == Outcome::Sink && !inst.present(traj.final_state).is_empty() {
        return Err(Error::PreconditionFailed("sink outcome at a flawed state".into()));
    }
    Ok(())
}
