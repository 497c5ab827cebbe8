//! Per-flaw charges and the checks that justify them: measure regeneration,
//! atomicity and harmonic transition probabilities.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instance::{ExplicitInstance, TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChargeMode {
    /// `γ_i = μ(f_i)`.
    Regenerative,
    /// `γ_i = b_i · max_σ λ_i^σ`.
    General,
    /// `φ_i = max b_i^τ / a_i^σ`, uniform μ only.
    UniformImproved,
}

impl ChargeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ChargeMode::Regenerative => "regenerative",
            ChargeMode::General => "general",
            ChargeMode::UniformImproved => "uniform-improved",
        }
    }
}

/// `λ_i^σ = max_{τ∈A(i,σ)} ρ_i(σ,τ) μ(σ)/μ(τ)`.
pub fn lambda(inst: &ExplicitInstance, flaw: usize, state: usize) -> f64 {
    inst.actions(flaw, state)
        .iter()
        .map(|&(t, p)| p * inst.mu(state) / inst.mu(t))
        .fold(0.0, f64::max)
}

/// Outcome of the regeneration check for one flaw.
#[derive(Debug, Clone, PartialEq)]
pub struct RegenerationCheck {
    pub pass: bool,
    pub max_deviation: f64,
    /// State attaining the largest deviation.
    pub worst_state: Option<usize>,
}

/// Evaluates `(1/μ(f)) Σ_{σ∈f} μ(σ) ρ(σ,τ)` against `μ(τ)` at every τ.
/// A flaw with no states is never addressed and passes vacuously.
pub fn check_regeneration(inst: &ExplicitInstance, flaw: usize) -> RegenerationCheck {
    let mf = inst.flaw_measure(flaw);
    if inst.members(flaw).is_empty() {
        return RegenerationCheck {
            pass: true,
            max_deviation: 0.0,
            worst_state: None,
        };
    }
    let mut inflow = vec![0.0; inst.num_states()];
    for &s in inst.members(flaw) {
        for &(t, p) in inst.actions(flaw, s) {
            inflow[t] += inst.mu(s) * p;
        }
    }
    let mut worst = (0.0, None);
    for (t, flow) in inflow.iter().enumerate() {
        let dev = (flow / mf - inst.mu(t)).abs();
        if dev > worst.0 {
            worst = (dev, Some(t));
        }
    }
    RegenerationCheck {
        pass: worst.0 <= TOLERANCE,
        max_deviation: worst.0,
        worst_state: worst.1,
    }
}

/// `ρ(σ,τ) = μ(τ) / Σ_{σ'∈A(i,σ)} μ(σ')`, in action order.
pub fn harmonic_rho(inst: &ExplicitInstance, flaw: usize, state: usize) -> Vec<(usize, f64)> {
    let acts = inst.actions(flaw, state);
    let total: f64 = acts.iter().map(|&(t, _)| inst.mu(t)).sum();
    acts.iter().map(|&(t, _)| (t, inst.mu(t) / total)).collect()
}

/// In-degree table `b_i^τ` over reachable τ.
pub fn in_degrees(inst: &ExplicitInstance, flaw: usize) -> BTreeMap<usize, usize> {
    let mut b = BTreeMap::new();
    for &s in inst.members(flaw) {
        for &(t, _) in inst.actions(flaw, s) {
            *b.entry(t).or_insert(0) += 1;
        }
    }
    b
}

/// Every state has at most one incoming arc per flaw.
pub fn is_atomic(inst: &ExplicitInstance) -> bool {
    (0..inst.num_flaws()).all(|f| in_degrees(inst, f).values().all(|&b| b <= 1))
}

/// The in-degree-weighted rule `ρ(σ,τ) = (b^τ Σ_{σ'∈A(i,σ)} 1/b^{σ'})^{-1}`.
pub fn indegree_weighted_rho(inst: &ExplicitInstance, flaw: usize, state: usize) -> Vec<(usize, f64)> {
    let b = in_degrees(inst, flaw);
    let acts = inst.actions(flaw, state);
    let h: f64 = acts.iter().map(|(t, _)| 1.0 / b[t] as f64).sum();
    acts.iter().map(|&(t, _)| (t, 1.0 / (b[&t] as f64 * h))).collect()
}

/// The instance with every transition distribution replaced by the
/// in-degree-weighted rule.
pub fn with_indegree_weighted_rho(inst: &ExplicitInstance) -> Result<ExplicitInstance> {
    let mut out = inst.clone();
    for f in 0..inst.num_flaws() {
        for &s in inst.members(f) {
            let probs: Vec<f64> = indegree_weighted_rho(inst, f, s).iter().map(|a| a.1).collect();
            out = out.with_distribution(f, s, &probs)?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlawCharges {
    pub b_tau: BTreeMap<usize, usize>,
    pub b: usize,
    pub a_sigma: BTreeMap<usize, usize>,
    pub a: usize,
    pub lambda: BTreeMap<usize, f64>,
    pub mu_f: f64,
    pub general: f64,
    pub phi: Option<f64>,
    pub regeneration: RegenerationCheck,
}

/// Charges of every flaw of an explicit instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeTable {
    pub flaws: Vec<FlawCharges>,
    pub atomic: bool,
    pub regenerative: bool,
    pub theta_is_mu: bool,
    pub mu_uniform: bool,
}

impl ChargeTable {
    pub fn compute(inst: &ExplicitInstance) -> Self {
        let mu_uniform = inst.mu_is_uniform();
        let flaws: Vec<FlawCharges> = (0..inst.num_flaws())
            .map(|f| {
                let b_tau = in_degrees(inst, f);
                let a_sigma: BTreeMap<usize, usize> = inst
                    .members(f)
                    .iter()
                    .map(|&s| (s, inst.actions(f, s).len()))
                    .collect();
                let lam: BTreeMap<usize, f64> = inst
                    .members(f)
                    .iter()
                    .map(|&s| (s, lambda(inst, f, s)))
                    .collect();
                let b = b_tau.values().copied().max().unwrap_or(1);
                let a = a_sigma.values().copied().min().unwrap_or(1);
                let max_lambda = lam.values().copied().fold(0.0, f64::max);
                let phi = mu_uniform.then(|| {
                    inst.members(f)
                        .iter()
                        .flat_map(|&s| {
                            inst.actions(f, s)
                                .iter()
                                .map(|(t, _)| b_tau[t] as f64 / a_sigma[&s] as f64)
                                .collect::<Vec<_>>()
                        })
                        .fold(0.0, f64::max)
                });
                FlawCharges {
                    b,
                    a,
                    general: b as f64 * max_lambda,
                    mu_f: inst.flaw_measure(f),
                    phi,
                    regeneration: check_regeneration(inst, f),
                    b_tau,
                    a_sigma,
                    lambda: lam,
                }
            })
            .collect();
        Self {
            atomic: flaws.iter().all(|f| f.b <= 1),
            regenerative: flaws.iter().all(|f| f.regeneration.pass),
            theta_is_mu: inst.theta_equals_mu(),
            mu_uniform,
            flaws,
        }
    }

    /// Whether `γ = μ(f)` is justified: regeneration everywhere, and either
    /// the walk starts from μ or the action digraph is atomic.
    pub fn regenerative_justified(&self) -> Result<()> {
        if !self.regenerative {
            return Err(Error::ModeUnjustified(
                "regeneration fails at some flaw".into(),
            ));
        }
        if !(self.theta_is_mu || self.atomic) {
            return Err(Error::ModeUnjustified(
                "initial distribution differs from mu and the action digraph is not atomic".into(),
            ));
        }
        Ok(())
    }

    pub fn charge(&self, flaw: usize, mode: ChargeMode) -> Result<f64> {
        let f = &self.flaws[flaw];
        match mode {
            ChargeMode::Regenerative => {
                self.regenerative_justified()?;
                Ok(f.mu_f)
            }
            ChargeMode::General => Ok(f.general),
            ChargeMode::UniformImproved => f.phi.ok_or(Error::NotUniform),
        }
    }

    pub fn charges(&self, mode: ChargeMode) -> Result<Vec<f64>> {
        (0..self.flaws.len()).map(|f| self.charge(f, mode)).collect()
    }

    /// The smallest justified charges: regenerative when justified, else
    /// general.
    pub fn best_mode(&self) -> ChargeMode {
        if self.regenerative_justified().is_ok() {
            ChargeMode::Regenerative
        } else {
            ChargeMode::General
        }
    }

    /// Tabular report: flaw, b, a, μ(f), general γ, φ, and the charge under
    /// `mode`.
    pub fn to_report(&self, inst: &ExplicitInstance, mode: ChargeMode) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:>4} {:>4} {:>12} {:>12} {:>12} {:>12}  mode",
            "flaw", "b", "a", "mu_f", "general", "phi", "gamma"
        );
        for (i, f) in self.flaws.iter().enumerate() {
            let phi = f.phi.map_or("-".to_string(), |p| format!("{p:.6e}"));
            let gamma = self
                .charge(i, mode)
                .map_or("unjustified".to_string(), |g| format!("{g:.6e}"));
            let _ = writeln!(
                out,
                "{:<10} {:>4} {:>4} {:>12.6e} {:>12.6e} {:>12} {:>12}  {}",
                inst.flaw_name(i),
                f.b,
                f.a,
                f.mu_f,
                f.general,
                phi,
                gamma,
                mode.as_str()
            );
        }
        let _ = writeln!(
            out,
            "atomic={} regenerative={} theta_is_mu={} mu_uniform={}",
            self.atomic, self.regenerative, self.theta_is_mu, self.mu_uniform
        );
        out
    }
}

pub fn charge(inst: &ExplicitInstance, table: &ChargeTable, flaw: usize, mode: ChargeMode) -> Result<f64> {
    debug_assert_eq!(table.flaws.len(), inst.num_flaws());
    table.charge(flaw, mode)
}

pub fn uniform_charge(inst: &ExplicitInstance, table: &ChargeTable, flaw: usize) -> Result<f64> {
    if !inst.mu_is_uniform() {
        return Err(Error::NotUniform);
    }
    table.charge(flaw, ChargeMode::UniformImproved)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomicHarmonicReport {
    /// Largest `|ρ − harmonic ρ|` over all arcs.
    pub rho_deviation: f64,
    /// Largest `|Σ_{τ∈A(i,σ)} μ(τ) − μ(σ)/μ(f_i)|`.
    pub mass_deviation: f64,
    pub pass: bool,
}

/// On an atomic, regenerating instance, checks that ρ is harmonic and that
/// `Σ_{τ∈A(i,σ)} μ(τ) = μ(σ)/μ(f_i)` for every flaw and member state.
pub fn check_atomic_harmonic(inst: &ExplicitInstance) -> Result<AtomicHarmonicReport> {
    if !is_atomic(inst) {
        return Err(Error::PreconditionFailed("action digraph is not atomic".into()));
    }
    for f in 0..inst.num_flaws() {
        let r = check_regeneration(inst, f);
        if !r.pass {
            return Err(Error::PreconditionFailed(format!(
                "flaw {} does not regenerate mu (deviation {})",
                inst.flaw_name(f),
                r.max_deviation
            )));
        }
    }
    let mut rho_dev: f64 = 0.0;
    let mut mass_dev: f64 = 0.0;
    for f in 0..inst.num_flaws() {
        let mf = inst.flaw_measure(f);
        for &s in inst.members(f) {
            for (&(_, p), (_, h)) in inst.actions(f, s).iter().zip(harmonic_rho(inst, f, s)) {
                rho_dev = rho_dev.max((p - h).abs());
            }
            let mass: f64 = inst.actions(f, s).iter().map(|&(t, _)| inst.mu(t)).sum();
            mass_dev = mass_dev.max((mass - inst.mu(s) / mf).abs());
        }
    }
    Ok(AtomicHarmonicReport {
        rho_deviation: rho_dev,
        mass_deviation: mass_dev,
        pass: rho_dev <= TOLERANCE && mass_dev <= TOLERANCE,
    })
}
