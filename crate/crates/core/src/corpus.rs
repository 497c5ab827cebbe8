//! Small explicit instances used by the oracle checks, the tests and the
//! shipped `data/corpus` files.
//!
//! Two-bit instances label states `b1b2`, so `"01"` has bit 1 clear and bit 2
//! set; flaw `f1` is "bit 1 is zero" and `f2` is "bit 2 is zero".

use crate::instance::{ExplicitBuilder, ExplicitInstance};
use crate::sat::{mt_explicit, CnfInstance};

const TWO_BITS: [&str; 4] = ["00", "01", "10", "11"];

fn two_bit_builder(name: &str) -> (ExplicitBuilder, usize, usize) {
    let mut b = ExplicitBuilder::new(name, 4);
    b.labels(TWO_BITS.iter().map(|s| s.to_string()).collect());
    let f1 = b.flaw("f1", &[0, 1]);
    let f2 = b.flaw("f2", &[0, 2]);
    (b, f1, f2)
}

/// Each flaw resamples its own bit uniformly; μ = θ = uniform.
pub fn toy_a() -> ExplicitInstance {
    let (mut b, f1, f2) = two_bit_builder("toy-a");
    for s in [0usize, 1] {
        b.arc(f1, s, s, 0.5).arc(f1, s, s | 2, 0.5);
    }
    for s in [0usize, 2] {
        b.arc(f2, s, s, 0.5).arc(f2, s, s | 1, 0.5);
    }
    b.uniform_mu();
    b.build().expect("toy-a is valid")
}

/// Each flaw deterministically sets its bit to one; μ uniform, θ a point
/// mass on `00`.
pub fn toy_b() -> ExplicitInstance {
    let (mut b, f1, f2) = two_bit_builder("toy-b");
    b.arc(f1, 0, 2, 1.0).arc(f1, 1, 3, 1.0);
    b.arc(f2, 0, 1, 1.0).arc(f2, 2, 3, 1.0);
    b.uniform_mu().point_theta(0);
    b.build().expect("toy-b is valid")
}

/// Two-bit flaws as in [`toy_a`], but every flaw is addressed by drawing a
/// fresh state from μ (uniform) over the whole space.
pub fn full_resample() -> ExplicitInstance {
    let (mut b, f1, f2) = two_bit_builder("full-resample");
    for (f, ms) in [(f1, [0usize, 1]), (f2, [0, 2])] {
        for s in ms {
            for t in 0..4 {
                b.arc(f, s, t, 0.25);
            }
        }
    }
    b.uniform_mu();
    b.build().expect("full-resample is valid")
}

/// Two independent bits with `Pr[bit = 1] = 0.7`; each flaw resamples its bit
/// from that marginal and the walk starts at `00`.
pub fn biased_pair() -> ExplicitInstance {
    let (mut b, f1, f2) = two_bit_builder("biased-pair");
    let p = [0.3, 0.7];
    let mu: Vec<f64> = (0..4).map(|s| p[(s >> 1) & 1] * p[s & 1]).collect();
    for s in [0usize, 1] {
        b.arc(f1, s, s, p[0]).arc(f1, s, s | 2, p[1]);
    }
    for s in [0usize, 2] {
        b.arc(f2, s, s, p[0]).arc(f2, s, s | 1, p[1]);
    }
    b.mu(mu).point_theta(0);
    b.build().expect("biased-pair is valid")
}

/// Six states, one flaw `f = {0, 1, 5}` with `A(f,0) = {2,3}`,
/// `A(f,1) = {3,2}`, `A(f,5) = {4}`: in-degrees 2 meet out-degree 2 while the
/// out-degree-1 state leads to an in-degree-1 state.
pub fn six_state_gadget() -> ExplicitInstance {
    let mut b = ExplicitBuilder::new("six-state-gadget", 6);
    let f = b.flaw("f", &[0, 1, 5]);
    b.arc(f, 0, 2, 0.5).arc(f, 0, 3, 0.5);
    b.arc(f, 1, 3, 0.5).arc(f, 1, 2, 0.5);
    b.arc(f, 5, 4, 1.0);
    b.uniform_mu();
    b.build().expect("gadget is valid")
}

/// Moser–Tardos on `(x1) ∧ (x2)`.
pub fn mt_unit_pair() -> ExplicitInstance {
    let cnf = CnfInstance::new(2, vec![vec![1], vec![2]]).expect("valid cnf");
    renamed(mt_explicit(&cnf).expect("small cnf"), "mt-unit-pair")
}

/// Moser–Tardos on `(x1 ∨ x2) ∧ (¬x1 ∨ x2)`.
pub fn mt_two_clauses() -> ExplicitInstance {
    let cnf = CnfInstance::new(2, vec![vec![1, 2], vec![-1, 2]]).expect("valid cnf");
    renamed(mt_explicit(&cnf).expect("small cnf"), "mt-two-clauses")
}

/// Moser–Tardos on `(x1 ∨ x2 ∨ x3) ∧ (¬x1 ∨ x2) ∧ (¬x2 ∨ ¬x3)`.
pub fn mt_three_vars() -> ExplicitInstance {
    let cnf =
        CnfInstance::new(3, vec![vec![1, 2, 3], vec![-1, 2], vec![-2, -3]]).expect("valid cnf");
    renamed(mt_explicit(&cnf).expect("small cnf"), "mt-three-vars")
}

fn renamed(inst: ExplicitInstance, name: &str) -> ExplicitInstance {
    inst.with_name(name)
}

/// Every shipped corpus instance.
pub fn all() -> Vec<ExplicitInstance> {
    vec![
        toy_a(),
        toy_b(),
        full_resample(),
        biased_pair(),
        six_state_gadget(),
        mt_unit_pair(),
        mt_two_clauses(),
        mt_three_vars(),
    ]
}
