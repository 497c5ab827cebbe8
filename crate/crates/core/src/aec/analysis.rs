//! The cluster condition for cycle flaws, evaluated with the cycle-count
//! bound `g(k) ≤ 2(4dΔ)^{(k−2)/2}`.
//!
//! For a cycle of length `k` the bound on `ζ` is
//!
//! ```text
//! (1 / (ψ(k) Q^{k−2})) · (1 + Σ_{j≥3} g(2j) ψ(2j))^k
//! ```
//!
//! Everything is evaluated in log space; `ψ` is passed as `ln ψ`.

use std::fmt::Write as _;

use crate::causality::{independent_subsets, DependencyGraph};
use crate::error::{Error, Result};
use crate::instance::TOLERANCE;

use super::cycles::CycleFlaw;

const MAX_TERMS: usize = 1_000_000;
/// Larger spans fall back to `∏(1 + ψ)` in the horizon.
pub const IND_SPAN_LIMIT: usize = 20;

/// `ln ψ(k)` for `ψ(k) = (8dΔ)^{−(k−2)/2}`.
pub fn closed_form_ln_psi(d: usize, delta: usize) -> impl Fn(usize) -> f64 {
    let base = (8.0 * d as f64 * delta as f64).ln();
    move |k| -((k as f64 - 2.0) / 2.0) * base
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthBound {
    pub k: usize,
    pub zeta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AecConditionReport {
    pub d: usize,
    pub delta: usize,
    pub q: u32,
    /// `Σ_{j≥3} g(2j) ψ(2j)`.
    pub inner_sum: f64,
    /// Even lengths `6..=k_max`.
    pub bounds: Vec<LengthBound>,
    /// Ratio of the last two bounds; at most one when the tail decreases.
    pub tail_ratio: f64,
    pub max_zeta: f64,
    pub pass: bool,
}

impl AecConditionReport {
    /// `1 − max ζ`.
    pub fn delta_lower(&self) -> f64 {
        1.0 - self.max_zeta
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "d={} Delta={} Q={} inner_sum={:e} tail_ratio={:e}",
            self.d, self.delta, self.q, self.inner_sum, self.tail_ratio
        );
        for b in &self.bounds {
            let _ = writeln!(out, "k={} zeta={:e}", b.k, b.zeta);
        }
        let _ = writeln!(
            out,
            "max_zeta={:e} delta={:e} verdict={}",
            self.max_zeta,
            self.delta_lower(),
            if self.pass { "PASS" } else { "FAIL" }
        );
        out
    }
}

/// Evaluates the per-length bounds for even `k` in `6..=k_max`. Passes when
/// every bound is below one and the bounds are non-increasing at `k_max`.
pub fn aec_condition_check(
    d: usize,
    delta: usize,
    q: u32,
    ln_psi: &dyn Fn(usize) -> f64,
    k_max: usize,
) -> Result<AecConditionReport> {
    if d == 0 || delta == 0 || q == 0 {
        return Err(Error::PreconditionFailed("d, Delta and Q must be positive".into()));
    }
    if k_max < 8 {
        return Err(Error::PreconditionFailed(format!("k_max = {k_max} below 8")));
    }
    let ln_growth = (4.0 * d as f64 * delta as f64).ln();
    let ln_term = |j: usize| std::f64::consts::LN_2 + (j as f64 - 1.0) * ln_growth + ln_psi(2 * j);
    let mut sum = 0.0;
    let mut prev = f64::NEG_INFINITY;
    let mut converged = false;
    for j in 3..MAX_TERMS {
        let lt = ln_term(j);
        if lt.is_nan() || lt == f64::INFINITY {
            return Err(Error::DivergentSeries(format!("term {j} is not finite")));
        }
        let term = lt.exp();
        sum += term;
        if !sum.is_finite() {
            return Err(Error::DivergentSeries(format!("partial sum overflows at term {j}")));
        }
        if j > 3 && lt < prev && term <= sum * 1e-18 {
            converged = true;
            break;
        }
        prev = lt;
    }
    if !converged {
        return Err(Error::DivergentSeries(format!(
            "no convergence within {MAX_TERMS} terms"
        )));
    }
    let ln_q = f64::from(q).ln();
    let ln_outer = sum.ln_1p();
    let bounds: Vec<LengthBound> = (6..=k_max)
        .step_by(2)
        .map(|k| LengthBound {
            k,
            zeta: (-ln_psi(k) - (k as f64 - 2.0) * ln_q + k as f64 * ln_outer).exp(),
        })
        .collect();
    let n = bounds.len();
    let tail_ratio = bounds[n - 1].zeta / bounds[n - 2].zeta;
    let max_zeta = bounds.iter().map(|b| b.zeta).fold(0.0, f64::max);
    let pass = max_zeta <= 1.0 - TOLERANCE && tail_ratio <= 1.0;
    Ok(AecConditionReport {
        d,
        delta,
        q,
        inner_sum: sum,
        bounds,
        tail_ratio,
        max_zeta,
        pass,
    })
}

/// `T₀ = log₂ ξ + log₂ Σ_{S ∈ Ind(span)} ∏ψ` with `log₂ ξ ≤ |E| log₂ |P|`
/// (the initial state carries all the mass and the state space has at most
/// `|P|^{|E|}` members). Returns the bound and whether the independent sets
/// were enumerated rather than bounded by `∏(1 + ψ)`.
pub fn aec_t0(edges: usize, palette: u32, span: &[CycleFlaw], ln_psi: &dyn Fn(usize) -> f64) -> (f64, bool) {
    let log2_xi = edges as f64 * f64::from(palette).log2();
    let psi: Vec<f64> = span.iter().map(|c| ln_psi(c.len()).exp()).collect();
    if span.len() > IND_SPAN_LIMIT {
        let ln: f64 = psi.iter().map(|p| p.ln_1p()).sum();
        return (log2_xi + ln / std::f64::consts::LN_2, false);
    }
    let mut dep = DependencyGraph::new(span.len());
    for a in 0..span.len() {
        for b in a + 1..span.len() {
            if span[a].meets(&span[b]) {
                dep.add_edge(a, b);
            }
        }
    }
    let ids: Vec<usize> = (0..span.len()).collect();
    let total: f64 = independent_subsets(&ids, &dep)
        .map(|s| s.iter().map(|&i| psi[i]).product::<f64>())
        .sum();
    (log2_xi + total.log2(), true)
}
