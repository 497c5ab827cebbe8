//! The flaws/actions instance contract.
//!
//! A walk only needs to know which flaws are present in a state, how flaws
//! are ranked, and how to take a random action that addresses a flaw. That is
//! the [`Instance`] trait. Exhaustive analysis (charges, causality, oracles)
//! additionally needs the whole state space and every action distribution,
//! which [`ExplicitInstance`] provides.

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeSet;
use std::fmt::Debug;
use std::hash::{Hash, Hasher};

use rand::Rng;

use crate::error::{Error, Result};

/// Absolute tolerance used by every stochasticity and equality check.
pub const TOLERANCE: f64 = 1e-9;

/// A focused local search problem as seen by the walk engines.
pub trait Instance {
    type State: Clone + Eq + Hash + Debug;
    type Flaw: Clone + Eq + Hash + Debug;

    /// Flaws present in `state`, greatest (first to be addressed) first.
    fn present_flaws(&self, state: &Self::State) -> Vec<Self::Flaw>;

    /// The flaw order: `Greater` means `a` is addressed before `b`.
    fn priority(&self, a: &Self::Flaw, b: &Self::Flaw) -> Ordering;

    /// Samples a state from `A(flaw, state)` according to the transition
    /// distribution. `flaw` must be present in `state`.
    fn address<R: Rng + ?Sized>(&self, flaw: &Self::Flaw, state: &Self::State, rng: &mut R)
        -> Self::State;

    /// Draws the starting state from the initial distribution.
    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    /// Set of flaws that may be present in an initial state.
    fn span(&self) -> Result<Vec<Self::Flaw>> {
        Err(Error::SpanUnavailable)
    }

    /// Human readable, stable descriptor used in trajectory logs.
    fn describe_flaw(&self, flaw: &Self::Flaw) -> String {
        format!("{flaw:?}")
    }

    /// Stable digest of a state for logs.
    fn digest(&self, state: &Self::State) -> u64 {
        let mut h = DefaultHasher::new();
        state.hash(&mut h);
        h.finish()
    }

    /// The greatest element of `flaws` under the flaw order.
    fn greatest(&self, flaws: &[Self::Flaw]) -> Option<Self::Flaw> {
        flaws
            .iter()
            .max_by(|a, b| self.priority(a, b))
            .cloned()
    }
}

/// Inverse-CDF sampling over `weights` taken in order. `weights` must sum to
/// one (within tolerance); the last index absorbs rounding.
pub fn sample_discrete<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    debug_assert!(!weights.is_empty());
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return k;
        }
    }
    weights.len() - 1
}

/// A total order on dense flaw indices. Rank 0 is the greatest flaw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlawOrder {
    rank: Vec<usize>,
}

impl FlawOrder {
    /// `f_0 ≻ f_1 ≻ … ≻ f_{m-1}`.
    pub fn identity(m: usize) -> Self {
        Self {
            rank: (0..m).collect(),
        }
    }

    /// Builds the order from a list of flaws, greatest first.
    pub fn from_sequence(greatest_first: &[usize]) -> Result<Self> {
        let m = greatest_first.len();
        let mut rank = vec![usize::MAX; m];
        for (r, &f) in greatest_first.iter().enumerate() {
            if f >= m || rank[f] != usize::MAX {
                return Err(Error::InvalidInstance(format!(
                    "flaw order is not a permutation of 0..{m}"
                )));
            }
            rank[f] = r;
        }
        Ok(Self { rank })
    }

    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }

    pub fn rank(&self, flaw: usize) -> usize {
        self.rank[flaw]
    }

    /// `Greater` iff `a` precedes `b`.
    pub fn cmp(&self, a: usize, b: usize) -> Ordering {
        self.rank[b].cmp(&self.rank[a])
    }

    pub fn greatest(&self, flaws: impl IntoIterator<Item = usize>) -> Option<usize> {
        flaws.into_iter().min_by_key(|&f| self.rank[f])
    }

    /// Sorts greatest first.
    pub fn sort(&self, flaws: &mut [usize]) {
        flaws.sort_by_key(|&f| self.rank[f]);
    }

    /// Flaws listed greatest first.
    pub fn sequence(&self) -> Vec<usize> {
        let mut seq: Vec<usize> = (0..self.rank.len()).collect();
        self.sort(&mut seq);
        seq
    }
}

/// A finite instance with an enumerable state space: the input of every
/// exhaustive analysis in this crate.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitInstance {
    name: String,
    labels: Vec<String>,
    flaw_names: Vec<String>,
    /// Member states of each flaw, ascending.
    members: Vec<Vec<usize>>,
    /// `actions[flaw][state]`, empty when the flaw is absent from the state.
    actions: Vec<Vec<Vec<(usize, f64)>>>,
    mu: Vec<f64>,
    theta: Vec<f64>,
    order: FlawOrder,
    /// Present flaws of every state, greatest first.
    present: Vec<Vec<usize>>,
}

/// Incremental constructor for [`ExplicitInstance`].
#[derive(Debug, Clone)]
pub struct ExplicitBuilder {
    name: String,
    n: usize,
    labels: Option<Vec<String>>,
    flaw_names: Vec<String>,
    members: Vec<Vec<usize>>,
    arcs: Vec<(usize, usize, usize, f64)>,
    mu: Option<Vec<f64>>,
    theta: Option<Vec<f64>>,
    order: Option<Vec<usize>>,
}

impl ExplicitBuilder {
    pub fn new(name: impl Into<String>, states: usize) -> Self {
        Self {
            name: name.into(),
            n: states,
            labels: None,
            flaw_names: Vec::new(),
            members: Vec::new(),
            arcs: Vec::new(),
            mu: None,
            theta: None,
            order: None,
        }
    }

    pub fn labels(&mut self, labels: Vec<String>) -> &mut Self {
        self.labels = Some(labels);
        self
    }

    pub fn mu(&mut self, mu: Vec<f64>) -> &mut Self {
        self.mu = Some(mu);
        self
    }

    pub fn uniform_mu(&mut self) -> &mut Self {
        self.mu = Some(vec![1.0 / self.n as f64; self.n]);
        self
    }

    pub fn theta(&mut self, theta: Vec<f64>) -> &mut Self {
        self.theta = Some(theta);
        self
    }

    pub fn point_theta(&mut self, state: usize) -> &mut Self {
        let mut theta = vec![0.0; self.n];
        if state < self.n {
            theta[state] = 1.0;
        }
        self.theta = Some(theta);
        self
    }

    /// Adds a flaw and returns its index.
    pub fn flaw(&mut self, name: impl Into<String>, members: &[usize]) -> usize {
        self.flaw_names.push(name.into());
        self.members.push(members.to_vec());
        self.flaw_names.len() - 1
    }

    pub fn arc(&mut self, flaw: usize, from: usize, to: usize, p: f64) -> &mut Self {
        self.arcs.push((flaw, from, to, p));
        self
    }

    /// Flaw order, greatest first.
    pub fn order(&mut self, greatest_first: Vec<usize>) -> &mut Self {
        self.order = Some(greatest_first);
        self
    }

    pub fn build(&self) -> Result<ExplicitInstance> {
        let n = self.n;
        let m = self.flaw_names.len();
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if n == 0 {
            return bad("state space is empty".into());
        }
        let labels = match &self.labels {
            Some(l) if l.len() != n => return bad(format!("{} labels for {n} states", l.len())),
            Some(l) => l.clone(),
            None => (0..n).map(|s| s.to_string()).collect(),
        };
        for name in labels.iter().chain(self.flaw_names.iter()) {
            if name.is_empty() || name.chars().any(|c| c.is_whitespace() || c == ',') {
                return bad(format!("name {name:?} is empty or contains whitespace or a comma"));
            }
        }
        for names in [&labels, &self.flaw_names] {
            let mut seen = BTreeSet::new();
            if let Some(dup) = names.iter().find(|n| !seen.insert(*n)) {
                return bad(format!("duplicate name {dup}"));
            }
        }
        let mu = match &self.mu {
            Some(mu) => mu.clone(),
            None => vec![1.0 / n as f64; n],
        };
        let theta = match &self.theta {
            Some(t) => t.clone(),
            None => mu.clone(),
        };
        if mu.len() != n || theta.len() != n {
            return bad("measure and initial distribution must cover every state".into());
        }
        if let Some(s) = mu.iter().position(|&x| !(x > 0.0) || !x.is_finite()) {
            return bad(format!("mu({}) must be strictly positive", labels[s]));
        }
        if theta.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return bad("theta must be non-negative".into());
        }
        for (what, v) in [("mu", &mu), ("theta", &theta)] {
            let total: f64 = v.iter().sum();
            if (total - 1.0).abs() > TOLERANCE {
                return bad(format!("{what} sums to {total}, not 1"));
            }
        }

        let mut members = self.members.clone();
        let mut member_mask = vec![vec![false; n]; m];
        for (f, ms) in members.iter_mut().enumerate() {
            ms.sort_unstable();
            ms.dedup();
            for &s in ms.iter() {
                if s >= n {
                    return bad(format!("flaw {} lists unknown state {s}", self.flaw_names[f]));
                }
                member_mask[f][s] = true;
            }
        }

        let mut actions = vec![vec![Vec::new(); n]; m];
        for &(f, from, to, p) in &self.arcs {
            if f >= m || from >= n || to >= n {
                return bad(format!("arc ({f}, {from}, {to}) references unknown flaw or state"));
            }
            if !member_mask[f][from] {
                return bad(format!(
                    "arc from {} labelled {} leaves a state outside the flaw",
                    labels[from], self.flaw_names[f]
                ));
            }
            if !(p > 0.0) || p > 1.0 + TOLERANCE {
                return bad(format!("arc probability {p} outside (0, 1]"));
            }
            if actions[f][from].iter().any(|&(t, _)| t == to) {
                return bad(format!(
                    "duplicate action {} for flaw {} at {}",
                    labels[to], self.flaw_names[f], labels[from]
                ));
            }
            actions[f][from].push((to, p));
        }
        for f in 0..m {
            for &s in &members[f] {
                let acts = &actions[f][s];
                if acts.is_empty() {
                    return bad(format!(
                        "A({}, {}) is empty",
                        self.flaw_names[f], labels[s]
                    ));
                }
                if acts.len() == 1 && acts[0].0 == s {
                    return bad(format!(
                        "A({}, {}) is the singleton of the state itself",
                        self.flaw_names[f], labels[s]
                    ));
                }
                let total: f64 = acts.iter().map(|a| a.1).sum();
                if (total - 1.0).abs() > TOLERANCE {
                    return bad(format!(
                        "rho({}, {}) sums to {total}",
                        self.flaw_names[f], labels[s]
                    ));
                }
            }
        }

        let order = match &self.order {
            Some(seq) => FlawOrder::from_sequence(seq)?,
            None => FlawOrder::identity(m),
        };
        if order.len() != m {
            return bad("flaw order does not cover every flaw".into());
        }
        let mut present = vec![Vec::new(); n];
        for (f, ms) in members.iter().enumerate() {
            for &s in ms {
                present[s].push(f);
            }
        }
        for p in present.iter_mut() {
            order.sort(p);
        }

        Ok(ExplicitInstance {
            name: self.name.clone(),
            labels,
            flaw_names: self.flaw_names.clone(),
            members,
            actions,
            mu,
            theta,
            order,
            present,
        })
    }
}

impl ExplicitInstance {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_states(&self) -> usize {
        self.labels.len()
    }

    pub fn num_flaws(&self) -> usize {
        self.flaw_names.len()
    }

    pub fn state_label(&self, s: usize) -> &str {
        &self.labels[s]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn flaw_name(&self, f: usize) -> &str {
        &self.flaw_names[f]
    }

    pub fn flaw_names(&self) -> &[String] {
        &self.flaw_names
    }

    pub fn flaw_index(&self, name: &str) -> Option<usize> {
        self.flaw_names.iter().position(|n| n == name)
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// States in the flaw, ascending.
    pub fn members(&self, flaw: usize) -> &[usize] {
        &self.members[flaw]
    }

    pub fn contains(&self, flaw: usize, state: usize) -> bool {
        self.members[flaw].binary_search(&state).is_ok()
    }

    /// `A(flaw, state)` with transition probabilities, in declaration order.
    pub fn actions(&self, flaw: usize, state: usize) -> &[(usize, f64)] {
        &self.actions[flaw][state]
    }

    pub fn rho(&self, flaw: usize, from: usize, to: usize) -> f64 {
        self.actions[flaw][from]
            .iter()
            .find(|a| a.0 == to)
            .map_or(0.0, |a| a.1)
    }

    pub fn mu(&self, state: usize) -> f64 {
        self.mu[state]
    }

    pub fn mu_vec(&self) -> &[f64] {
        &self.mu
    }

    pub fn theta(&self, state: usize) -> f64 {
        self.theta[state]
    }

    pub fn theta_vec(&self) -> &[f64] {
        &self.theta
    }

    /// `μ(f)` = total measure of the flaw's states.
    pub fn flaw_measure(&self, flaw: usize) -> f64 {
        self.members[flaw].iter().map(|&s| self.mu[s]).sum()
    }

    pub fn order(&self) -> &FlawOrder {
        &self.order
    }

    /// `U(σ)`, greatest first.
    pub fn present(&self, state: usize) -> &[usize] {
        &self.present[state]
    }

    /// Every labelled arc `(flaw, from, to, p)` in a fixed order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        self.actions.iter().enumerate().flat_map(|(f, per_state)| {
            per_state.iter().enumerate().flat_map(move |(s, acts)| {
                acts.iter().map(move |&(t, p)| (f, s, t, p))
            })
        })
    }

    /// `ξ = max_σ θ(σ)/μ(σ)`.
    pub fn xi(&self) -> f64 {
        self.theta
            .iter()
            .zip(&self.mu)
            .map(|(t, m)| t / m)
            .fold(0.0, f64::max)
    }

    pub fn theta_equals_mu(&self) -> bool {
        self.theta
            .iter()
            .zip(&self.mu)
            .all(|(t, m)| (t - m).abs() <= TOLERANCE)
    }

    pub fn mu_is_uniform(&self) -> bool {
        let u = 1.0 / self.num_states() as f64;
        self.mu.iter().all(|m| (m - u).abs() <= TOLERANCE)
    }

    /// `𝒮(θ)`: flaws present in some state of positive initial probability,
    /// greatest first.
    pub fn span_set(&self) -> Vec<usize> {
        let mut set = BTreeSet::new();
        for (s, &t) in self.theta.iter().enumerate() {
            if t > 0.0 {
                set.extend(self.present[s].iter().copied());
            }
        }
        let mut v: Vec<usize> = set.into_iter().collect();
        self.order.sort(&mut v);
        v
    }

    /// Same instance with the transition distribution at `(flaw, state)`
    /// replaced; `probs` follows the order of [`Self::actions`].
    pub fn with_distribution(&self, flaw: usize, state: usize, probs: &[f64]) -> Result<Self> {
        let acts = &self.actions[flaw][state];
        if acts.len() != probs.len() {
            return Err(Error::InvalidInstance(
                "replacement distribution has the wrong length".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TOLERANCE || probs.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::InvalidInstance(
                "replacement distribution must be positive and sum to 1".into(),
            ));
        }
        let mut out = self.clone();
        for (a, &p) in out.actions[flaw][state].iter_mut().zip(probs) {
            a.1 = p;
        }
        Ok(out)
    }

    /// Same instance with a different flaw order (greatest first).
    pub fn with_order(&self, greatest_first: &[usize]) -> Result<Self> {
        let order = FlawOrder::from_sequence(greatest_first)?;
        if order.len() != self.num_flaws() {
            return Err(Error::InvalidInstance("flaw order has the wrong length".into()));
        }
        let mut out = self.clone();
        for p in out.present.iter_mut() {
            order.sort(p);
        }
        out.order = order;
        Ok(out)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Same instance with a different initial distribution.
    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        let mut b = self.to_builder();
        b.theta(theta);
        b.build()
    }

    pub fn to_builder(&self) -> ExplicitBuilder {
        let mut b = ExplicitBuilder::new(self.name.clone(), self.num_states());
        b.labels(self.labels.clone())
            .mu(self.mu.clone())
            .theta(self.theta.clone())
            .order(self.order.sequence());
        for (f, name) in self.flaw_names.iter().enumerate() {
            b.flaw(name.clone(), &self.members[f]);
        }
        for (f, s, t, p) in self.arcs() {
            b.arc(f, s, t, p);
        }
        b
    }
}

impl Instance for ExplicitInstance {
    type State = usize;
    type Flaw = usize;

    fn present_flaws(&self, state: &usize) -> Vec<usize> {
        self.present[*state].clone()
    }

    fn priority(&self, a: &usize, b: &usize) -> Ordering {
        self.order.cmp(*a, *b)
    }

    fn address<R: Rng + ?Sized>(&self, flaw: &usize, state: &usize, rng: &mut R) -> usize {
        let acts = &self.actions[*flaw][*state];
        assert!(
            !acts.is_empty(),
            "flaw {} is not present in state {}",
            self.flaw_names[*flaw],
            self.labels[*state]
        );
        let weights: Vec<f64> = acts.iter().map(|a| a.1).collect();
        acts[sample_discrete(&weights, rng)].0
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_discrete(&self.theta, rng)
    }

    fn span(&self) -> Result<Vec<usize>> {
        Ok(self.span_set())
    }

    fn describe_flaw(&self, flaw: &usize) -> String {
        self.flaw_names[*flaw].clone()
    }

    fn digest(&self, state: &usize) -> u64 {
        *state as u64
    }
}
